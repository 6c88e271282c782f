use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cmem::operators::{conditional_pmf_vec, nu, operator_pgf, sample_operator};
use cmem::{InnovationSpec, OperatorSpec};

fn ops() -> [OperatorSpec; 4] {
    [
        OperatorSpec::CompoundingPoisson,
        OperatorSpec::CompoundingNb,
        OperatorSpec::BinomialMult,
        OperatorSpec::zip(2.5).unwrap(),
    ]
}

fn moments(pmf: &[f64]) -> (f64, f64, f64) {
    let total: f64 = pmf.iter().sum();
    let m: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
    let v: f64 = pmf.iter().enumerate().map(|(k, p)| (k as f64 - m).powi(2) * p).sum();
    (total, m, v)
}

proptest! {
    #[test]
    fn pmf_mean_and_variance_are_linear_in_eps(alpha in 0.02f64..4.0, eps in 0u64..25, which in 0usize..4) {
        let op = ops()[which];
        let (total, m, v) = moments(&conditional_pmf_vec(&op, alpha, eps).unwrap());
        prop_assert!((total - 1.0).abs() < 1e-10);
        prop_assert!((m - alpha * eps as f64).abs() < 1e-9);
        prop_assert!((v - nu(&op, alpha).unwrap() * eps as f64).abs() < 1e-9);
    }

    #[test]
    fn pgf_is_one_at_one_and_increasing(alpha in 0.05f64..3.0, which in 0usize..4, u in 0.0f64..0.99) {
        let op = ops()[which];
        let innov = InnovationSpec::PoissonUnit;
        prop_assert!((operator_pgf(&op, alpha, &innov, 1.0).unwrap() - 1.0).abs() < 1e-12);
        let a = operator_pgf(&op, alpha, &innov, u).unwrap();
        let b = operator_pgf(&op, alpha, &innov, u + 0.01).unwrap();
        prop_assert!(a <= b + 1e-15);
    }

    #[test]
    fn display_round_trips(kappa in 1.001f64..10.0, which in 0usize..3) {
        let op = if which == 0 { OperatorSpec::zip(kappa).unwrap() } else { ops()[which] };
        let back: OperatorSpec = op.to_string().parse().unwrap();
        prop_assert_eq!(back, op);
    }
}

#[test]
fn sampled_moments_match_theory() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 200_000;
    for op in ops() {
        let (alpha, eps) = (1.7, 6u64);
        let draws: Vec<f64> = (0..n).map(|_| sample_operator(&op, alpha, eps, &mut rng).unwrap() as f64).collect();
        let m = draws.iter().sum::<f64>() / n as f64;
        let v = draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        let (tm, tv) = (alpha * eps as f64, nu(&op, alpha).unwrap() * eps as f64);
        let se_m = (tv / n as f64).sqrt();
        assert!((m - tm).abs() < 5.0 * se_m + 1e-12, "{op}: mean {m} vs {tm}");
        assert!((v - tv).abs() < 0.03 * tv.max(0.1), "{op}: variance {v} vs {tv}");
    }
}

#[test]
fn sampled_frequencies_match_pmf() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 100_000;
    for op in ops() {
        let pmf = conditional_pmf_vec(&op, 0.8, 4).unwrap();
        let mut counts = vec![0usize; pmf.len() + 50];
        for _ in 0..n {
            counts[sample_operator(&op, 0.8, 4, &mut rng).unwrap() as usize] += 1;
        }
        for (k, p) in pmf.iter().enumerate().filter(|(_, p)| **p > 0.01) {
            let f = counts[k] as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((f - p).abs() < 5.0 * se, "{op} k={k}: {f} vs {p}");
        }
    }
}

#[test]
fn thickening_with_zero_innovation_is_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for op in ops() {
        for alpha in [0.3, 1.0, 2.7] {
            assert_eq!(sample_operator(&op, alpha, 0, &mut rng).unwrap(), 0);
            assert_eq!(conditional_pmf_vec(&op, alpha, 0).unwrap()[0], 1.0);
        }
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for op in ops() {
        assert!(nu(&op, -0.1).is_err());
        assert!(sample_operator(&op, f64::NAN, 3, &mut rng).is_err());
    }
    assert!(OperatorSpec::zip(0.5).is_err());
    assert!("foo".parse::<OperatorSpec>().is_err());
}
