use proptest::prelude::*;

use cmem::model::{
    check_first_order_stationarity, conditional_mean_path, moment_estimate_11, moment_summary, rho_11, simulate,
    unconditional_mean, MomentStatus,
};
use cmem::operators::three_point_from_sigma2;
use cmem::rng::seeded;
use cmem::series::{mean, sample_acf, sample_variance};
use cmem::{InnovationSpec, MeanSpec, ModelSpec, OperatorSpec};

fn poi(a0: f64, a1: f64, b1: f64) -> ModelSpec {
    ModelSpec::new(MeanSpec::linear(a0, vec![a1], vec![b1]), OperatorSpec::CompoundingPoisson, InnovationSpec::PoissonUnit)
        .unwrap()
}

proptest! {
    #[test]
    fn solver_matches_closed_form_acf(a1 in 0.05f64..0.6, b1 in 0.0f64..0.5) {
        prop_assume!((a1 + b1).powi(2) + a1 * a1 < 0.95);
        let ms = moment_summary(&poi(1.5, a1, b1), 6).unwrap();
        for k in 1..=6 {
            prop_assert!((ms.lower.rho[k - 1] - rho_11(a1, b1, k)).abs() < 1e-10);
        }
    }

    #[test]
    fn mean_path_matches_psi_weights(a0 in 0.1f64..5.0, a1 in 0.0f64..0.5, b1 in 0.0f64..0.45,
                                     xs in prop::collection::vec(0u64..40, 1..30), m0 in 0.5f64..10.0, x0 in 0.0f64..10.0) {
        let spec = MeanSpec::linear(a0, vec![a1], vec![b1]);
        let path = conditional_mean_path(&spec, &xs, &[m0], &[x0]).unwrap();
        for t in 0..xs.len() {
            // M_t = a0 Σ b^j + a1 Σ b^j X_{t-1-j} + b^t (a1 x0 + b1 m0) expressed through M_0.
            let mut oracle = b1.powi(t as i32) * (a0 + a1 * x0 + b1 * m0);
            for j in 0..t {
                oracle += b1.powi(j as i32) * (a0 + a1 * xs[t - 1 - j] as f64);
            }
            prop_assert!((path[t] - oracle).abs() < 1e-9 * oracle.max(1.0));
        }
    }
}

#[test]
fn nonstationary_models_are_rejected() {
    assert!(!check_first_order_stationarity(&MeanSpec::linear(1.0, vec![0.6], vec![0.4])));
    assert!(unconditional_mean(&MeanSpec::linear(1.0, vec![0.7], vec![0.5])).is_err());
    assert!(ModelSpec::new(
        MeanSpec::linear(1.0, vec![0.7], vec![0.5]),
        OperatorSpec::CompoundingPoisson,
        InnovationSpec::PoissonUnit
    )
    .and_then(|m| moment_summary(&m, 2))
    .is_err());
}

#[test]
fn simulated_moments_match_theory() {
    for (model, label) in [
        (poi(2.8, 0.4, 0.2), "poi"),
        (
            ModelSpec::new(
                MeanSpec::linear(2.8, vec![0.4], vec![0.2]),
                OperatorSpec::CompoundingNb,
                three_point_from_sigma2(0.4).unwrap(),
            )
            .unwrap(),
            "nb",
        ),
    ] {
        let ms = moment_summary(&model, 3).unwrap();
        let (x, m) = simulate(&model, 400_000, 500, &mut seeded(21)).unwrap();
        let xs = x.to_f64();
        let checks: [(&str, f64, f64); 5] = [
            ("mean", batch_z(&xs, mean, ms.mu), ms.mu),
            ("var X", batch_z(&xs, sample_variance, ms.var_x().0), ms.var_x().0),
            ("var M", batch_z(&m, sample_variance, ms.var_m().0), ms.var_m().0),
            ("rho(1)", batch_z(&xs, |c| sample_acf(c, 1)[0], ms.lower.rho[0]), ms.lower.rho[0]),
            ("rho(2)", batch_z(&xs, |c| sample_acf(c, 2)[1], ms.lower.rho[1]), ms.lower.rho[1]),
        ];
        for (name, z, target) in checks {
            assert!(z.abs() < 4.0, "{label} {name}: {z:.2} batch SEs from {target}");
        }
    }
}

/// Distance of the full-sample statistic from `target` in batch-means standard errors.
fn batch_z(xs: &[f64], stat: impl Fn(&[f64]) -> f64, target: f64) -> f64 {
    let batches: Vec<f64> = xs.chunks(xs.len() / 40).map(&stat).collect();
    let se = (sample_variance(&batches) / batches.len() as f64).sqrt();
    (stat(xs) - target) / se
}

#[test]
fn binomial_moments_form_an_interval() {
    let model = ModelSpec::new(
        MeanSpec::linear(2.8, vec![0.4], vec![0.2]),
        OperatorSpec::BinomialMult,
        three_point_from_sigma2(0.4).unwrap(),
    )
    .unwrap();
    let ms = moment_summary(&model, 2).unwrap();
    let (lo, hi) = ms.var_x();
    assert!(lo < hi);
    let (x, _) = simulate(&model, 400_000, 500, &mut seeded(22)).unwrap();
    let v = sample_variance(&x.to_f64());
    assert!(v > 0.97 * lo && v < 1.03 * hi, "{v} outside [{lo}, {hi}]");
}

#[test]
fn moment_estimate_is_consistent() {
    let (x, _) = simulate(&poi(2.8, 0.4, 0.2), 1_000_000, 500, &mut seeded(23)).unwrap();
    let est = moment_estimate_11(&x).unwrap();
    assert_eq!(est.status, MomentStatus::Exact);
    let p = &est.mean.params;
    assert!((p.a[0] - 0.4).abs() < 0.02, "a1 {}", p.a[0]);
    assert!((p.b[0] - 0.2).abs() < 0.02, "b1 {}", p.b[0]);
    assert!((p.a0 / (1.0 - p.persistence()) - 7.0).abs() < 0.05);
}

#[test]
fn moment_estimate_falls_back_on_white_noise() {
    let model = ModelSpec::new(MeanSpec::linear(5.0, vec![], vec![]), OperatorSpec::CompoundingPoisson, InnovationSpec::PoissonUnit)
        .unwrap();
    let (x, _) = simulate(&model, 2000, 0, &mut seeded(24)).unwrap();
    let est = moment_estimate_11(&x).unwrap();
    assert!(est.mean.params.persistence() < 1.0);
    assert!(est.mean.params.a0 > 0.0);
}

#[test]
fn simulation_is_reproducible() {
    let a = simulate(&poi(1.0, 0.3, 0.3), 100, 10, &mut seeded(5)).unwrap();
    let b = simulate(&poi(1.0, 0.3, 0.3), 100, 10, &mut seeded(5)).unwrap();
    assert_eq!(a, b);
}
