//! Invariants checked over random inputs.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use cyclic_urn::spectral::{limit_covariance, SpectralBasis};
use cyclic_urn::stats::{covariance_verdict, normality_verdict, EnsembleSummary};
use cyclic_urn::urn::{shift_initial_type, simulate, UrnConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval(m in 2usize..16, w in prop::collection::vec(-50.0f64..50.0, 16)) {
        let b = SpectralBasis::new(m).unwrap();
        let w = &w[..m];
        let lhs: f64 = w.iter().map(|x| x * x).sum();
        let rhs: f64 = (0..m).map(|k| b.project(k, w).norm_sqr()).sum::<f64>() / m as f64;
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.max(1.0));
    }

    #[test]
    fn conjugation_symmetry(m in 2usize..16, w in prop::collection::vec(-50.0f64..50.0, 16)) {
        let b = SpectralBasis::new(m).unwrap();
        let w = &w[..m];
        for k in 1..m {
            let d = b.project(m - k, w) - b.project(k, w).conj();
            prop_assert!(d.norm() < 1e-9);
        }
    }

    #[test]
    fn reassembly(m in 2usize..16, w in prop::collection::vec(-50.0f64..50.0, 16)) {
        let b = SpectralBasis::new(m).unwrap();
        let w = &w[..m];
        let coeffs: Vec<Complex64> = (0..m).map(|k| b.project(k, w)).collect();
        for (x, y) in b.reassemble(&coeffs).iter().zip(w) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn conservation(m in 2usize..10, steps in 0u64..300, seed in any::<u64>(), j in 0usize..10) {
        let b = SpectralBasis::new(m).unwrap();
        let cfg = UrnConfig::new(m, steps, seed)
            .with_initial_type(j % m)
            .with_checkpoints(vec![0, steps / 2, steps].into_iter().collect::<std::collections::BTreeSet<_>>().into_iter().collect());
        let t = simulate(&cfg, &b).unwrap();
        for s in &t.snapshots {
            prop_assert_eq!(s.composition.counts.iter().sum::<u64>(), s.time + 1);
            prop_assert!((s.projections[0] - Complex64::new((s.time + 1) as f64, 0.0)).norm() < 1e-9);
            let w: Vec<f64> = s.composition.counts.iter().map(|&c| c as f64).collect();
            for k in 0..m {
                prop_assert!((s.projections[k] - b.project(k, &w)).norm() < 1e-6 * (s.time + 1) as f64);
            }
        }
    }

    #[test]
    fn shift_rotates_counts(m in 2usize..10, steps in 1u64..200, seed in any::<u64>(), j in 0usize..10) {
        let b = SpectralBasis::new(m).unwrap();
        let j = j % m;
        let t = simulate(&UrnConfig::new(m, steps, seed).with_checkpoints(vec![steps]), &b).unwrap();
        let s = shift_initial_type(&t, j, &b).unwrap();
        let a = &t.final_state.counts;
        let r = &s.final_state.counts;
        for i in 0..m {
            prop_assert_eq!(r[(i + j) % m], a[i]);
        }
        let snap = s.snapshots.last().unwrap();
        let w: Vec<f64> = r.iter().map(|&c| c as f64).collect();
        for k in 0..m {
            prop_assert!((snap.projections[k] - b.project(k, &w)).norm() < 1e-6 * steps as f64);
        }
    }
}

/// Gaussian samples with covariance `target`.
fn gaussian_samples(target: &DMatrix<f64>, reps: usize, seed: u64) -> Vec<Vec<f64>> {
    let l = target.clone().cholesky().expect("positive definite").l();
    let d = target.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..reps)
        .map(|_| {
            let z = nalgebra::DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
            (&l * z).iter().copied().collect()
        })
        .collect()
}

/// Fraction of seeds on which exact Gaussians of the target covariance pass
/// the covariance and normality verdicts.
fn pass_rate(m: usize) -> (usize, usize) {
    let b = SpectralBasis::new(m).unwrap();
    let target = limit_covariance(&b);
    let zero = DMatrix::zeros(target.nrows(), target.ncols());
    let mut cov_pass = 0;
    let mut norm_pass = 0;
    for seed in 0..100u64 {
        let s = gaussian_samples(&target, 2000, seed);
        let summary = EnsembleSummary::from_samples(&s, m, 0, seed).unwrap();
        cov_pass += covariance_verdict(&summary, &target, &zero).unwrap().pass as usize;
        norm_pass += normality_verdict(&summary).unwrap().pass as usize;
    }
    (cov_pass, norm_pass)
}

#[test]
fn verdicts_are_calibrated_on_true_gaussians() {
    for m in [2, 3] {
        let (c, n) = pass_rate(m);
        eprintln!("m = {m}: covariance {c}/100, normality {n}/100");
        assert!(c >= 95, "m = {m}: covariance verdict passed {c}/100");
        assert!(n >= 95, "m = {m}: normality verdict passed {n}/100");
    }
}
