use cmem::diagnostics::{
    diagnose, diagnose_fit, holdout_evaluate, mar, model_vs_sample_report, nb_suitability_screen, pearson_residuals,
    predicted_scaled_variance, Interval,
};
use cmem::estimation::{fit, EstimatorKind, FitOptions};
use cmem::model::{conditional_mean_path, moment_summary, simulate};
use cmem::operators::three_point_from_sigma2;
use cmem::rng::{seeded, stream};
use cmem::series::{mean, sample_variance};
use cmem::{CountSeries, InnovationSpec, MeanSpec, ModelSpec, OperatorSpec};

fn dgp(op: OperatorSpec, sigma2: f64) -> ModelSpec {
    let innov = if sigma2 == 1.0 { InnovationSpec::PoissonUnit } else { three_point_from_sigma2(sigma2).unwrap() };
    ModelSpec::new(MeanSpec::linear(2.8, vec![0.4], vec![0.2]), op, innov).unwrap()
}

#[test]
fn true_means_give_unit_mspr_and_msr() {
    for (op, s2) in [
        (OperatorSpec::CompoundingPoisson, 1.0),
        (OperatorSpec::CompoundingNb, 0.4),
        (OperatorSpec::BinomialMult, 0.4),
    ] {
        let model = dgp(op, s2);
        let (x, m) = simulate(&model, 100_000, 500, &mut seeded(41)).unwrap();
        let d = diagnose(&x, &m, &op, s2, None).unwrap();
        assert!((d.msr - 1.0).abs() < 0.01, "{op}: MSR {}", d.msr);
        if op != OperatorSpec::BinomialMult {
            assert!((d.mspr - 1.0).abs() < 0.03, "{op}: MSPR {}", d.mspr);
        }
    }
}

#[test]
fn vsr_matches_prediction() {
    for op in [OperatorSpec::CompoundingPoisson, OperatorSpec::CompoundingNb] {
        let model = dgp(op, 0.4);
        let pred = predicted_scaled_variance(&op, 0.4, &moment_summary(&model, 1).unwrap()).unwrap();
        let Interval::Point(p) = pred else { panic!("expected a point") };
        let (x, m) = simulate(&model, 200_000, 500, &mut seeded(42)).unwrap();
        let s: Vec<f64> = x.to_f64().iter().zip(&m).map(|(x, m)| x / m).collect();
        let v = sample_variance(&s);
        assert!((v - p).abs() < 0.05 * p, "{op}: VSR {v} vs {p}");
    }

    let op = OperatorSpec::BinomialMult;
    let model = dgp(op, 0.4);
    let (lo, hi) = predicted_scaled_variance(&op, 0.4, &moment_summary(&model, 1).unwrap()).unwrap().bounds();
    let (x, m) = simulate(&model, 200_000, 500, &mut seeded(43)).unwrap();
    let s: Vec<f64> = x.to_f64().iter().zip(&m).map(|(x, m)| x / m).collect();
    let batches: Vec<f64> = s.chunks(5000).map(sample_variance).collect();
    let se = (sample_variance(&batches) / batches.len() as f64).sqrt();
    let v = sample_variance(&s);
    assert!(v > lo - 3.0 * se && v < hi + 3.0 * se, "Bin VSR {v} outside [{lo}, {hi}] ± 3·{se}");
}

#[test]
fn nb_screen_accepts_nb_data() {
    let (x, _) = simulate(&dgp(OperatorSpec::CompoundingNb, 0.4), 100_000, 500, &mut seeded(44)).unwrap();
    let (vsr, ok) = nb_suitability_screen(&x).unwrap();
    assert!(ok, "VSR {vsr}");
}

#[test]
fn residual_acf_is_white_for_a_correct_fit() {
    let (x, _) = simulate(&dgp(OperatorSpec::CompoundingPoisson, 1.0), 5000, 500, &mut seeded(45)).unwrap();
    let f = fit(EstimatorKind::Pq, &x, 1, 1, &OperatorSpec::CompoundingPoisson, &FitOptions::default()).unwrap();
    let d = diagnose_fit(&x, &f).unwrap();
    assert_eq!(d.residual_acf.len(), 10);
    let band = 3.0 / (x.len() as f64).sqrt();
    assert!(d.residual_acf.iter().all(|r| r.abs() < band), "{:?}", d.residual_acf);
    assert!(d.predicted_vsr.is_some());
}

#[test]
fn misspecified_operator_inflates_mspr() {
    let (mut corr, mut misp) = (0.0, 0.0);
    for r in 0..50 {
        let (x, _) = simulate(&dgp(OperatorSpec::BinomialMult, 0.4), 1000, 500, &mut stream(46, 0, 1000, r)).unwrap();
        for (op, acc) in [(OperatorSpec::BinomialMult, &mut corr), (OperatorSpec::CompoundingPoisson, &mut misp)] {
            let f = fit(EstimatorKind::Pq, &x, 1, 1, &op, &FitOptions::default()).unwrap();
            *acc += diagnose(&x, &f.fitted_means, &op, f.sigma2_hat, None).unwrap().mspr;
        }
    }
    assert!(misp > corr, "{misp} vs {corr}");
}

#[test]
fn pearson_rejects_bad_means() {
    let x = CountSeries::new(vec![1, 2, 3]);
    let err = pearson_residuals(&x, &[1.0, 0.0, 2.0], &OperatorSpec::CompoundingPoisson, 1.0).unwrap_err();
    assert!(err.to_string().contains('1'));
    assert!(pearson_residuals(&x, &[1.0, 2.0], &OperatorSpec::CompoundingPoisson, 1.0).is_err());
}

#[test]
fn holdout_continues_the_filter() {
    let (x, _) = simulate(&dgp(OperatorSpec::CompoundingPoisson, 1.0), 1100, 500, &mut seeded(47)).unwrap();
    let (train, hold) = x.split_tail(100);
    let f = fit(EstimatorKind::Pq, &train, 1, 1, &OperatorSpec::CompoundingPoisson, &FitOptions::default()).unwrap();
    let h = holdout_evaluate(&f, &hold, &OperatorSpec::CompoundingPoisson).unwrap();
    assert_eq!(h.n, 100);
    // Filtering the whole series from the training start gives the same holdout means.
    let lvl = train.mean();
    let direct = conditional_mean_path(&f.mean_spec(), x.values(), &[lvl], &[lvl]).unwrap();
    assert_eq!(&direct[..1000], &f.fitted_means[..]);
    let oracle = mar(&hold, &direct[1000..]).unwrap();
    assert!((h.mar - oracle).abs() < 1e-12, "{} vs {oracle}", h.mar);
    assert!(holdout_evaluate(&f, &CountSeries::new(vec![]), &OperatorSpec::CompoundingPoisson).is_err());
}

#[test]
fn moment_report_compares_sample_and_model() {
    let model = dgp(OperatorSpec::CompoundingPoisson, 1.0);
    let (x, _) = simulate(&model, 50_000, 500, &mut seeded(48)).unwrap();
    let rep = model_vs_sample_report(&x, &model, 3).unwrap();
    assert_eq!(rep.sample.rho.len(), 3);
    assert!((rep.sample.mean - mean(&x.to_f64())).abs() < 1e-12);
    assert!((rep.model.mean - 7.0).abs() < 1e-9);
}
