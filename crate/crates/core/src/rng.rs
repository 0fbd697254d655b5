//! Counter-based seeding for the simulations.
//!
//! Every replication draws from its own ChaCha8 stream keyed by
//! [`split`]`(master_seed, rep)`, so a replication's sample does not depend on
//! which worker runs it or in what order. Variates come from `rand_distr`
//! (ziggurat normals, Marsaglia–Tsang gammas).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `index` under `master_seed`.
pub fn split(master_seed: u64, index: u64) -> u64 {
    let keyed = mix64(master_seed ^ GOLDEN_GAMMA);
    mix64(keyed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// The generator of one replication.
pub fn replication_rng(rep_seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(rep_seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Gamma, StandardNormal};

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn split_is_stable_and_distinct() {
        assert_eq!(split(42, 7), split(42, 7));
        assert_ne!(split(42, 7), split(42, 8));
        assert_ne!(split(42, 7), split(43, 7));
    }

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<u64> = (0..5)
            .map({
                let mut r = replication_rng(9);
                move |_| r.random()
            })
            .collect();
        let b: Vec<u64> = (0..5)
            .map({
                let mut r = replication_rng(9);
                move |_| r.random()
            })
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn normal_moments() {
        let mut rng = replication_rng(1);
        let xs: Vec<f64> = (0..200_000).map(|_| rng.sample(StandardNormal)).collect();
        let (m, v) = moments(&xs);
        assert!(m.abs() < 0.01);
        assert!((v - 1.0).abs() < 0.015);
        let kurt = xs.iter().map(|x| x.powi(4)).sum::<f64>() / xs.len() as f64;
        assert!((kurt - 3.0).abs() < 0.06);
    }

    #[test]
    fn gamma_four_half_moments() {
        let mut rng = replication_rng(2);
        let g = Gamma::new(4.0, 0.5).unwrap();
        let xs: Vec<f64> = (0..100_000).map(|_| rng.sample(g)).collect();
        let (m, v) = moments(&xs);
        assert!((m - 2.0).abs() < 0.02, "{m}");
        assert!((v - 1.0).abs() < 0.03, "{v}");
    }
}
