//! Worked examples across the modules, end to end.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hiddenosc::describing::{hb_predict, hb_vs_simulation, HbVerdict};
use hiddenosc::dynamics::{integrate, ConvergenceCriterion, IntegratorConfig, SmoothField, TerminalStatus, PiecewiseSmoothSystem};
use hiddenosc::io::PhasePortrait;
use hiddenosc::models::{
    build_bk_example, build_keldysh, build_pll, lurie_from_parts, KeldyshParams, LurieSystem, Nonlinearity, PllParams,
    StationarySet,
};
use hiddenosc::oscillation::{
    find_cycles, first_return, omega_limit, return_map, CycleSearch, OmegaLimitKind, OmegaLimitOptions, PoincareSection,
    ReturnOutcome,
};
use hiddenosc::sweep::{sweep_keldysh, SweepAxis, SweepOptions, SweepParam};
use hiddenosc::verify::{
    check_barbashin_krasovsky, check_gelig_leonov, check_leonov_cylindrical, simulate_starts, start_grid, Certificate,
    CertificateForm, ConditionStatus, ProbeConfig, TheoremVariant,
};
use hiddenosc::Error;

fn two_cycles() -> KeldyshParams {
    KeldyshParams::unit(0.2, -1.2987)
}

#[test]
fn outer_trajectory_winds_onto_the_stable_cycle() {
    let p = two_cycles();
    let m = build_keldysh(&p).unwrap();
    let cfg = IntegratorConfig::default();
    let cycles = find_cycles(&m.system, &PoincareSection::keldysh(), &m.stationary, &CycleSearch::default(), &cfg).unwrap();
    let tr = integrate(&m.system, &[0.0, 2.0], &cfg, Some(&ConvergenceCriterion::new(&m.stationary))).unwrap();
    assert_eq!(tr.status, TerminalStatus::HorizonReached);
    let v = omega_limit(&tr, &m.stationary, &cycles, &[], &OmegaLimitOptions::default());
    assert_eq!(v.kind, OmegaLimitKind::Cycle(1), "{v:?}");
}

#[test]
fn equilibria_give_constant_trajectories() {
    let m = build_bk_example();
    let tr = integrate(&m.system, &[0.0, 0.0], &IntegratorConfig::default().with_horizon(5.0), None).unwrap();
    assert!(tr.events.is_empty());
    assert!(tr.samples.iter().all(|s| s.x == vec![0.0, 0.0]));

    let m = build_keldysh(&two_cycles()).unwrap();
    let tr = integrate(&m.system, &[0.1, 0.0], &IntegratorConfig::default().with_horizon(5.0), None).unwrap();
    for s in &tr.samples {
        assert!((s.x[0] - 0.1).abs() < 1e-12 && s.x[1].abs() < 1e-12, "{s:?}");
    }
}

/// Fine fixed-step RK4 on the branch selected by the sign of x2, stopping
/// when x2 returns to zero inside the segment.
fn stick_point_oracle(p: &KeldyshParams, mut x: [f64; 2]) -> [f64; 2] {
    let f = |x: [f64; 2], sign: f64| {
        let s = x[1] / p.inertia;
        [s, -p.stiffness * x[0] - p.mu * s - sign * (p.friction + p.damper * s * s)]
    };
    let h = 1e-5;
    // on the axis outside the segment both branches push x2 the same way
    let mut sign = -(p.stiffness * x[0]).signum();
    loop {
        let k1 = f(x, sign);
        let k2 = f([x[0] + h / 2.0 * k1[0], x[1] + h / 2.0 * k1[1]], sign);
        let k3 = f([x[0] + h / 2.0 * k2[0], x[1] + h / 2.0 * k2[1]], sign);
        let k4 = f([x[0] + h * k3[0], x[1] + h * k3[1]], sign);
        let y = [
            x[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            x[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        if y[1] * sign < 0.0 {
            // crossed x2 = 0; interpolate the crossing
            let w = x[1] / (x[1] - y[1]);
            let c = [x[0] + w * (y[0] - x[0]), 0.0];
            if (p.stiffness * c[0]).abs() <= p.friction {
                return c;
            }
            sign = -sign;
            x = c;
            continue;
        }
        x = y;
    }
}

#[test]
fn start_just_outside_the_segment_sticks_on_it() {
    let p = two_cycles();
    let m = build_keldysh(&p).unwrap();
    let x0 = [p.friction / p.stiffness + 0.01, 0.0];
    let tr = integrate(&m.system, &x0, &IntegratorConfig::default(), Some(&ConvergenceCriterion::new(&m.stationary))).unwrap();
    assert_eq!(tr.status, TerminalStatus::Converged);
    let end = &tr.last().x;
    assert!(m.stationary.distance(end, &[]) < 1e-6);
    let oracle = stick_point_oracle(&p, x0);
    assert!((end[0] - oracle[0]).abs() < 1e-4, "{end:?} vs {oracle:?}");
}

#[test]
fn lurie_keldysh_matches_the_direct_constructor() {
    let p = two_cycles();
    let direct = build_keldysh(&p).unwrap();
    let lurie = lurie_from_parts(&p.lurie()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let x: [f64; 2] = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        if x[1].abs() < 1e-9 {
            continue;
        }
        let (a, b) = (direct.system.eval(&x), lurie.eval(&x));
        for i in 0..2 {
            assert!((a[i] - b[i]).abs() < 1e-12, "{x:?}: {a:?} vs {b:?}");
        }
    }
}

#[test]
fn hurwitz_linear_lurie_converges() {
    let sys = LurieSystem {
        p: vec![vec![-0.5, 1.0], vec![-1.0, -0.5]],
        q: vec![1.0, 0.0],
        r: vec![0.0, 1.0],
        phi: Nonlinearity::zero(),
    };
    let system = lurie_from_parts(&sys).unwrap();
    let set = StationarySet::point(vec![0.0, 0.0]);
    let tr = integrate(&system, &[2.0, -1.0], &IntegratorConfig::default(), Some(&ConvergenceCriterion::new(&set))).unwrap();
    assert_eq!(tr.status, TerminalStatus::Converged);
}

#[test]
fn stationary_distances() {
    let m = build_keldysh(&two_cycles()).unwrap();
    assert!((m.stationary.distance(&[0.5, 0.0], &[]) - 0.3).abs() < 1e-15);
    assert_eq!(m.stationary.distance(&[0.1, 0.0], &[]), 0.0);
    let p = PllParams::default();
    let pll = build_pll(&p).unwrap();
    let d = pll.stationary.distance(&[p.z_eq(), 10.0 * std::f64::consts::PI], pll.system.periodic_coordinates());
    assert!(d < 1e-12, "{d}");
}

#[test]
fn bk_radial_witness_lies_along_the_x1_axis() {
    let m = build_bk_example();
    let probe = ProbeConfig {
        rays: vec![vec![1.0, 0.0]],
        ..ProbeConfig::default()
    };
    let r = check_barbashin_krasovsky(&m.system, m.certificate.as_ref().unwrap(), &probe).unwrap();
    assert_eq!(r.status("i"), Some(ConditionStatus::Passed));
    assert_eq!(r.status("ii"), Some(ConditionStatus::Passed));
    let iii = r.condition("iii").unwrap();
    assert_eq!(iii.status, ConditionStatus::Violated);
    let w = &iii.witnesses[0];
    assert!(w.state[1] == 0.0 && w.state[0] > 1.0);
    assert!(w.value < 1.0);
}

#[test]
fn pll_defaults_pass_and_zero_certificate_fails() {
    let p = PllParams::default();
    let m = build_pll(&p).unwrap();
    let z = p.z_eq();
    let cfg = IntegratorConfig::default();
    let starts: Vec<Vec<f64>> = start_grid(&[z - 2.0, -3.0], &[z + 2.0, 3.0], 5)
        .into_iter()
        .take(20)
        .collect();
    let trs = simulate_starts(&m.system, &m.stationary, &starts, &cfg).unwrap();
    let probe = ProbeConfig::default().with_box(vec![z - 2.0, -std::f64::consts::PI], vec![z + 2.0, std::f64::consts::PI]);
    let r = check_leonov_cylindrical(&m.system, m.certificate.as_ref().unwrap(), &m.stationary, &trs, &probe).unwrap();
    assert!(r.all_passed(), "{r:?}");
    // V itself is bounded along σ; the σ² assist is what grows
    let cert = m.certificate.as_ref().unwrap();
    assert!(cert.value(&[z, 1e3]) <= 2.0 / (p.tau1 * p.k_vco) + 1e-12);
    assert_eq!(r.status("iv"), Some(ConditionStatus::Passed));

    let zero = Certificate::new(2, |_| 0.0, |_, g| g.fill(0.0), CertificateForm::General, TheoremVariant::LeonovCylindrical);
    let r = check_leonov_cylindrical(&m.system, &zero, &m.stationary, &trs, &probe).unwrap();
    assert_eq!(r.status("iii"), Some(ConditionStatus::Violated));
}

#[test]
fn keldysh_certificate_inside_and_outside_the_bound() {
    let p = KeldyshParams::unit(1.0, -0.5);
    let m = build_keldysh(&p).unwrap();
    let cfg = IntegratorConfig::default();
    let trs = simulate_starts(&m.system, &m.stationary, &start_grid(&[-2.0, -2.0], &[2.0, 2.0], 20), &cfg).unwrap();
    let probe = ProbeConfig::default();
    let r = check_gelig_leonov(&m.system, m.certificate.as_ref().unwrap(), &m.stationary, &trs, &probe).unwrap();
    assert!(r.all_passed(), "{r:?}");

    let p = two_cycles();
    let m = build_keldysh(&p).unwrap();
    let tr = integrate(&m.system, &[0.0, 0.5], &cfg, None).unwrap();
    let r = check_gelig_leonov(&m.system, m.certificate.as_ref().unwrap(), &m.stationary, &[tr], &probe).unwrap();
    assert_eq!(r.status("i"), Some(ConditionStatus::Violated));
}

#[test]
fn return_map_behaviour() {
    let p = two_cycles();
    let m = build_keldysh(&p).unwrap();
    let cfg = IntegratorConfig::default();
    let section = PoincareSection::keldysh();
    let cycles = find_cycles(&m.system, &section, &m.stationary, &CycleSearch::default(), &cfg).unwrap();
    let outer = &cycles[1];
    let (back, _) = return_map(&m.system, &section, &outer.anchor, &cfg).unwrap();
    assert!((section.radius(&back) - outer.radius).abs() < 1e-6);
    let between = 0.5 * (cycles[0].radius + cycles[1].radius);
    let (next, _) = return_map(&m.system, &section, &section.point_at(between), &cfg).unwrap();
    assert!(section.radius(&next) > between);

    // overdamped PLL: a node, so starts near it never come back
    let pll = PllParams {
        tau2: 3.0,
        ..PllParams::default()
    };
    let model = build_pll(&pll).unwrap();
    let s = PoincareSection {
        anchor: vec![pll.z_eq(), 0.0],
        normal: vec![0.0, 1.0],
        tangent: vec![1.0, 0.0],
        direction: 1.0,
    };
    let x0 = s.point_at(-0.01);
    match first_return(&model.system, &s, &x0, &cfg, Some(&ConvergenceCriterion::new(&model.stationary))).unwrap() {
        ReturnOutcome::Captured { .. } => {}
        other => panic!("{other:?}"),
    }
    assert!(matches!(return_map(&model.system, &s, &x0, &cfg), Err(Error::NoReturn(_))));
}

#[test]
fn positive_damping_has_no_cycles() {
    let m = build_keldysh(&KeldyshParams::unit(0.2, 0.5)).unwrap();
    let cycles = find_cycles(&m.system, &PoincareSection::keldysh(), &m.stationary, &CycleSearch::default(), &IntegratorConfig::default()).unwrap();
    assert!(cycles.is_empty());
}

#[test]
fn outer_trajectory_reaches_the_segment_once_the_cycles_are_gone() {
    let p = KeldyshParams::unit(0.2, -0.930);
    let m = build_keldysh(&p).unwrap();
    let cfg = IntegratorConfig::default().with_horizon(2000.0);
    let tr = integrate(&m.system, &[0.0, 1.5], &cfg, Some(&ConvergenceCriterion::new(&m.stationary))).unwrap();
    let v = omega_limit(&tr, &m.stationary, &[], &[], &OmegaLimitOptions::default());
    assert_eq!(v.kind, OmegaLimitKind::Stationary, "{v:?}");
}

#[test]
fn outer_trajectory_just_above_cycle_birth_keeps_oscillating() {
    // cycles still exist at μ = -0.937; see keldysh_oracle.rs
    let p = KeldyshParams::unit(0.2, -0.937);
    let m = build_keldysh(&p).unwrap();
    let cfg = IntegratorConfig::default().with_horizon(400.0);
    let cycles = find_cycles(&m.system, &PoincareSection::keldysh(), &m.stationary, &CycleSearch::default(), &cfg).unwrap();
    let tr = integrate(&m.system, &[0.0, 1.5], &cfg, Some(&ConvergenceCriterion::new(&m.stationary))).unwrap();
    let v = omega_limit(&tr, &m.stationary, &cycles, &[], &OmegaLimitOptions::default());
    assert_eq!(v.kind, OmegaLimitKind::Cycle(1), "{v:?}");
}

#[test]
fn balance_agrees_in_the_two_cycle_regime() {
    let cmp = hb_vs_simulation(&two_cycles(), &PoincareSection::keldysh(), &CycleSearch::default(), &IntegratorConfig::default()).unwrap();
    assert_eq!(cmp.verdict, HbVerdict::Agree);
    assert_eq!(cmp.simulated_count, 2);
    // single-harmonic amplitudes are close to the simulated ones for the outer cycle
    assert!((cmp.amplitude_ratios[1] - 1.0).abs() < 0.05, "{:?}", cmp.amplitude_ratios);
}

#[test]
fn mu_sweep_locates_the_birth_between_grid_points() {
    let base = KeldyshParams::unit(0.2, 0.0);
    let axes = [SweepAxis {
        param: SweepParam::Mu,
        min: -1.5,
        max: 0.0,
        points: 31,
    }];
    let opts = SweepOptions {
        classify: false,
        ..SweepOptions::default()
    };
    let r = sweep_keldysh(&base, &axes, &opts, &IntegratorConfig::default()).unwrap();
    assert_eq!(r.points.len(), 31);
    assert_eq!(r.points[0].params.mu, -1.5);
    assert_eq!(r.points[30].params.mu, 0.0);
    assert_eq!(r.boundaries.len(), 1, "{:?}", r.boundaries);
    let b = &r.boundaries[0];
    assert_eq!((b.from_count, b.to_count), (2, 0));
    assert!((b.from_value + 0.95).abs() < 1e-12 && (b.to_value + 0.90).abs() < 1e-12);
    // the observed boundary is below the certified bound −2√0.2
    assert!(b.to_value < r.points[30].params.mu && b.to_value < -2.0 * 0.2f64.sqrt());
    assert!(r.points.iter().all(|p| p.verdict.is_some() || p.error.is_some()));
}

#[test]
fn two_dimensional_sweep_boundary_is_monotone_in_friction() {
    let base = KeldyshParams::unit(0.2, 0.0);
    let axes = [
        SweepAxis {
            param: SweepParam::Friction,
            min: 0.1,
            max: 0.5,
            points: 5,
        },
        SweepAxis {
            param: SweepParam::Mu,
            min: -2.0,
            max: 0.0,
            points: 5,
        },
    ];
    let opts = SweepOptions {
        classify: false,
        ..SweepOptions::default()
    };
    let r = sweep_keldysh(&base, &axes, &opts, &IntegratorConfig::default()).unwrap();
    assert_eq!(r.points.len(), 25);
    // largest μ with oscillations, per friction row
    let births: Vec<f64> = (0..5)
        .map(|i| {
            r.points[i * 5..(i + 1) * 5]
                .iter()
                .filter(|p| p.cycle_count.unwrap() > 0)
                .map(|p| p.params.mu)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    for w in births.windows(2) {
        assert!(w[1] <= w[0], "{births:?}");
    }
    assert!(births[0] > births[4], "{births:?}");
}

#[test]
fn portraits_of_both_regimes() {
    let p = two_cycles();
    let m = build_keldysh(&p).unwrap();
    let cfg = IntegratorConfig::default().with_horizon(60.0);
    let mut left = PhasePortrait::new("left", "x1", "x2");
    for x0 in [[0.0, 0.5], [0.0, 2.0]] {
        let tr = integrate(&m.system, &x0, &cfg, None).unwrap();
        left.add_trajectory(&tr.states().map(<[f64]>::to_vec).collect::<Vec<_>>(), None).unwrap();
    }
    for c in find_cycles(&m.system, &PoincareSection::keldysh(), &m.stationary, &CycleSearch::default(), &cfg).unwrap() {
        left.add_cycle(&c.orbit, None).unwrap();
    }
    let (a, b) = m.stationary.segments[0].clone();
    left.segments.push(([a[0], a[1]], [b[0], b[1]]));
    assert_eq!((left.trajectories.len(), left.cycles.len(), left.segments.len()), (2, 2, 1));
    assert!(left.render().contains("<polyline"));

    let q = KeldyshParams::unit(0.2, -0.937);
    let mut right = PhasePortrait::new("right", "x1", "x2");
    let hb = hb_predict(&q).unwrap();
    for (a, b) in hb.ellipses(&q) {
        // J = k = 1: circles of radius J·B
        assert!((a - b).abs() < 1e-15);
        right.add_predicted_ellipse(a, b);
    }
    assert_eq!(right.cycles.iter().filter(|c| c.dashed).count(), 2);
    assert!(right.render().contains("stroke-dasharray"));
}

#[test]
fn barbashin_krasovsky_needs_a_smooth_system() {
    let sys = PiecewiseSmoothSystem::smooth(SmoothField::new(2, |x, o| {
        o[0] = -x[0];
        o[1] = -x[1];
    }));
    let m = build_keldysh(&two_cycles()).unwrap();
    let err = check_barbashin_krasovsky(&m.system, m.certificate.as_ref().unwrap(), &ProbeConfig::default()).unwrap_err();
    assert!(matches!(err, Error::InvalidParameter { .. }));
    assert!(sys.surface().is_none());
}
