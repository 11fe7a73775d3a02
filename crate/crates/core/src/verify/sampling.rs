use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    out
}

/// `n` Halton points in the box, randomly shifted (Cranley–Patterson) with a
/// fixed seed.
pub fn halton_box(lo: &[f64], hi: &[f64], n: usize, seed: u64) -> Vec<Vec<f64>> {
    let dim = lo.len();
    assert!(dim <= PRIMES.len(), "halton sampling supports up to {} dimensions", PRIMES.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    (0..n)
        .map(|i| {
            (0..dim)
                .map(|c| {
                    let u = (radical_inverse(i as u64 + 1, PRIMES[c]) + shift[c]).fract();
                    lo[c] + u * (hi[c] - lo[c])
                })
                .collect()
        })
        .collect()
}

/// Unit ray directions: equally spaced angles in 2D (starting at `(1, 0)`),
/// seeded Gaussian directions otherwise.
pub fn default_rays(dim: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    if dim == 1 {
        return vec![vec![1.0], vec![-1.0]];
    }
    if dim == 2 {
        return (0..n)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / n as f64;
                vec![a.cos(), a.sin()]
            })
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / nv).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_points_stay_in_box_and_are_deterministic() {
        let a = halton_box(&[-1.0, 0.0], &[1.0, 3.0], 200, 7);
        let b = halton_box(&[-1.0, 0.0], &[1.0, 3.0], 200, 7);
        assert_eq!(a, b);
        assert!(a.iter().all(|p| (-1.0..=1.0).contains(&p[0]) && (0.0..=3.0).contains(&p[1])));
    }

    #[test]
    fn rays_are_unit() {
        for d in [2, 3, 5] {
            for r in default_rays(d, 16, 1) {
                let n: f64 = r.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((n - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(default_rays(2, 64, 0)[0], vec![1.0, 0.0]);
    }
}
