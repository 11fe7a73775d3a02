//! Independent check of the Keldysh cycle counts: a fixed-step RK4 return map
//! built from the two branch fields, switching at the sign of x2.

use hiddenosc::describing::{hb_vs_simulation, HbVerdict};
use hiddenosc::dynamics::IntegratorConfig;
use hiddenosc::models::{build_keldysh, KeldyshParams};
use hiddenosc::oscillation::{
    classify_cycle, find_cycles, Classification, CycleSearch, OmegaLimitOptions, PoincareSection, Stability,
};

const H: f64 = 1e-3;

fn branch(p: &KeldyshParams, sign: f64, x: [f64; 2]) -> [f64; 2] {
    let s = x[1] / p.inertia;
    [s, -p.stiffness * x[0] - p.mu * s - sign * (p.friction + p.damper * s * s)]
}

fn rk4(p: &KeldyshParams, sign: f64, x: [f64; 2], h: f64) -> [f64; 2] {
    let add = |a: [f64; 2], b: [f64; 2], c: f64| [a[0] + c * b[0], a[1] + c * b[1]];
    let k1 = branch(p, sign, x);
    let k2 = branch(p, sign, add(x, k1, h / 2.0));
    let k3 = branch(p, sign, add(x, k2, h / 2.0));
    let k4 = branch(p, sign, add(x, k3, h));
    [
        x[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        x[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Integrate one branch until coordinate `c` changes sign (from positive
/// `c_sign * x[c]`), bisecting the last step. `None` if `x2` reaches zero
/// first while `guard` is set.
fn until_zero(p: &KeldyshParams, sign: f64, mut x: [f64; 2], c: usize, c_sign: f64, guard: bool) -> Option<[f64; 2]> {
    for _ in 0..200_000 {
        let y = rk4(p, sign, x, H);
        if guard && y[1] <= 0.0 {
            return None;
        }
        if c_sign * y[c] <= 0.0 {
            let (mut lo, mut hi) = (0.0, H);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if c_sign * rk4(p, sign, x, mid)[c] > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Some(rk4(p, sign, x, hi));
        }
        x = y;
    }
    panic!("no crossing within the step budget");
}

/// `ρ_return - ρ` from `(0, ρ)`; `-ρ` when the orbit sticks on the segment.
fn oracle_g(p: &KeldyshParams, rho: f64) -> f64 {
    let half = p.friction / p.stiffness;
    let a = until_zero(p, 1.0, [0.0, rho], 1, 1.0, false).unwrap();
    if a[0].abs() <= half {
        return -rho;
    }
    let b = until_zero(p, -1.0, [a[0], -1e-300], 1, -1.0, false).unwrap();
    if b[0].abs() <= half {
        return -rho;
    }
    // back on x2 > 0, left of the section: run to x1 = 0; stopping at x2 = 0
    // on the way means sticking
    match until_zero(p, 1.0, [b[0], 1e-300], 0, -1.0, true) {
        Some(r) => r[1] - rho,
        None => -rho,
    }
}

fn oracle_roots(p: &KeldyshParams, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let rhos: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let gs: Vec<f64> = rhos.iter().map(|&r| oracle_g(p, r)).collect();
    let mut roots = Vec::new();
    for i in 1..n {
        let (ga, gb) = (gs[i - 1], gs[i]);
        if ga * gb < 0.0 {
            let (mut a, mut b) = (rhos[i - 1], rhos[i]);
            let (mut fa, mut fb) = (ga, gb);
            for _ in 0..40 {
                let m = 0.5 * (a + b);
                let fm = oracle_g(p, m);
                if fm.signum() == fa.signum() {
                    (a, fa) = (m, fm);
                } else {
                    (b, fb) = (m, fm);
                }
            }
            // a capture next to a return is a basin edge, not a fixed point
            if fa.abs().max(fb.abs()) < 1e-6 {
                roots.push(0.5 * (a + b));
            }
        }
    }
    roots
}

fn library_radii(p: &KeldyshParams, search: &CycleSearch) -> Vec<(f64, Stability)> {
    let m = build_keldysh(p).unwrap();
    find_cycles(&m.system, &PoincareSection::keldysh(), &m.stationary, search, &IntegratorConfig::default())
        .unwrap()
        .iter()
        .map(|c| (c.radius, c.stability))
        .collect()
}

fn assert_match(p: &KeldyshParams, oracle: &[f64], lib: &[(f64, Stability)]) {
    assert_eq!(oracle.len(), lib.len(), "oracle {oracle:?} vs library {lib:?} at {p:?}");
    for (o, (l, _)) in oracle.iter().zip(lib) {
        assert!((o - l).abs() < 1e-5 * (1.0 + o), "oracle {o} vs library {l}");
    }
}

#[test]
fn two_cycle_regime_matches_oracle() {
    let p = KeldyshParams::unit(0.2, -1.2987);
    let oracle = oracle_roots(&p, 0.01, 3.0, 120);
    let lib = library_radii(&p, &CycleSearch::default());
    assert_match(&p, &oracle, &lib);
    assert_eq!(lib[0].1, Stability::Unstable);
    assert_eq!(lib[1].1, Stability::Stable);
}

#[test]
fn cycles_persist_just_below_the_harmonic_balance_threshold() {
    let p = KeldyshParams::unit(0.2, -0.937);
    let oracle = oracle_roots(&p, 0.01, 3.0, 120);
    assert_eq!(oracle.len(), 2, "{oracle:?}");
    // between the two cycles the orbit grows
    let mid = 0.5 * (oracle[0] + oracle[1]);
    assert!(oracle_g(&p, mid) > 0.0);
    assert!(oracle_g(&p, 0.5 * oracle[0]) < 0.0);
    assert!(oracle_g(&p, 2.0 * oracle[1]) < 0.0);
    assert_match(&p, &oracle, &library_radii(&p, &CycleSearch::default()));
}

#[test]
fn cycles_vanish_before_the_harmonic_balance_threshold() {
    let p = KeldyshParams::unit(0.2, -0.930);
    assert!(oracle_roots(&p, 0.01, 3.0, 120).is_empty());
    assert!(library_radii(&p, &CycleSearch::default()).is_empty());
}

#[test]
fn strong_negative_damping_leaves_one_self_excited_cycle() {
    let p = KeldyshParams::unit(0.2, -3.0);
    let search = CycleSearch {
        rho_max: 6.0,
        ..CycleSearch::default()
    };
    let oracle = oracle_roots(&p, 0.01, 6.0, 200);
    assert_match(&p, &oracle, &library_radii(&p, &search));
    assert_eq!(oracle.len(), 1);
    let cmp = hb_vs_simulation(&p, &PoincareSection::keldysh(), &search, &IntegratorConfig::default()).unwrap();
    assert_eq!(cmp.prediction.cycle_count, 2);
    assert_eq!(cmp.verdict, HbVerdict::HbFalsePositive);
    let m = build_keldysh(&p).unwrap();
    let c = classify_cycle(&m.system, &cmp.cycles, 0, &m.stationary, 1e-3, 16, &IntegratorConfig::default(), &OmegaLimitOptions::default()).unwrap();
    assert_eq!(c.classification, Classification::SelfExcited);
}

#[test]
fn high_friction_has_no_cycles_despite_the_balance_prediction() {
    let p = KeldyshParams::unit(3.0, -2.095 * 3f64.sqrt());
    let search = CycleSearch {
        rho_max: 20.0,
        ..CycleSearch::default()
    };
    assert!(oracle_roots(&p, 0.05, 20.0, 200).is_empty());
    let cmp = hb_vs_simulation(&p, &PoincareSection::keldysh(), &search, &IntegratorConfig::default()).unwrap();
    assert_eq!(cmp.simulated_count, 0);
    assert_eq!(cmp.prediction.cycle_count, 2);
    assert_eq!(cmp.verdict, HbVerdict::HbFalsePositive);
}
