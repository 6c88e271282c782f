use proptest::prelude::*;

use cmem::estimation::{fit, EstimatorKind, FitOptions};
use cmem::model::simulate;
use cmem::operators::three_point_from_sigma2;
use cmem::rng::stream;
use cmem::simstudy::{run_sim_study, trimmed_stats, Dgp, FitSpec, SimStudyConfig};
use cmem::{InnovationSpec, MeanSpec, ModelSpec, OperatorSpec};

fn poi_dgp() -> Dgp {
    Dgp {
        label: "poi".into(),
        model: ModelSpec::new(MeanSpec::linear(2.8, vec![0.4], vec![0.2]), OperatorSpec::CompoundingPoisson, InnovationSpec::PoissonUnit)
            .unwrap(),
    }
}

fn config(fits: Vec<FitSpec>, sizes: Vec<usize>, reps: usize) -> SimStudyConfig {
    let mut cfg = SimStudyConfig::new(vec![poi_dgp()], fits, sizes, 77);
    cfg.replications = reps;
    cfg
}

proptest! {
    #[test]
    fn trimming_stays_within_range(values in prop::collection::vec(-100.0f64..100.0, 3..300), trim in 0.0f64..0.05) {
        if let Ok((m, sd)) = trimmed_stats(&values, trim) {
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(m >= lo - 1e-9 && m <= hi + 1e-9);
            prop_assert!(sd >= 0.0);
        }
    }
}

#[test]
fn trimming_drops_one_value_per_tail_at_n_1000() {
    let mut v: Vec<f64> = (0..998).map(|i| (i % 7) as f64).collect();
    v.push(1e6);
    v.push(-1e6);
    let (m, _) = trimmed_stats(&v, 0.001).unwrap();
    let plain = v[..998].iter().sum::<f64>() / 998.0;
    assert!((m - plain).abs() < 1e-12);
    assert!(trimmed_stats(&[1.0, 2.0], 0.0).is_err());
}

#[test]
fn studies_are_deterministic() {
    let fits = vec![FitSpec::new(EstimatorKind::Pq, OperatorSpec::CompoundingPoisson), FitSpec::new(EstimatorKind::W2, OperatorSpec::CompoundingPoisson)];
    let a = run_sim_study(&config(fits.clone(), vec![300], 20)).unwrap();
    let b = run_sim_study(&config(fits, vec![300], 20)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.params_csv(), b.params_csv());
}

#[test]
fn single_replication_reproduces_the_fit() {
    let spec = FitSpec::new(EstimatorKind::Eq, OperatorSpec::CompoundingPoisson);
    let mut cfg = config(vec![spec], vec![400], 1);
    cfg.trim_fraction = 0.0;
    let table = run_sim_study(&cfg).unwrap();
    let x = simulate(&poi_dgp().model, 400, cfg.burn_in, &mut stream(77, 0, 400, 0)).unwrap().0;
    let f = fit(EstimatorKind::Eq, &x, 1, 1, &OperatorSpec::CompoundingPoisson, &FitOptions::default()).unwrap();
    let label = spec.label();
    let a1 = table.param("poi", 400, &label, "a1").unwrap();
    assert_eq!(a1.mean, f.theta_hat.a[0]);
    assert_eq!(a1.ase_mean, f.ase[1]);
    assert_eq!(a1.count, 1);
    let s2 = table.param("poi", 400, &label, "sigma2").unwrap();
    assert_eq!(s2.mean, f.sigma2_hat);
}

#[test]
fn poisson_and_binomial_fits_share_theta() {
    let fits = vec![
        FitSpec::new(EstimatorKind::Pq, OperatorSpec::CompoundingPoisson),
        FitSpec::new(EstimatorKind::Pq, OperatorSpec::BinomialMult),
    ];
    let table = run_sim_study(&config(fits, vec![300], 10)).unwrap();
    for p in ["a0", "a1", "b1"] {
        let a = table.param("poi", 300, "PQ/poi", p).unwrap();
        let b = table.param("poi", 300, "PQ/bin", p).unwrap();
        assert_eq!(a.mean, b.mean, "{p}");
        assert_eq!(a.sse, b.sse, "{p}");
    }
}

#[test]
fn sse_shrinks_with_n() {
    let fits = vec![FitSpec::new(EstimatorKind::Pq, OperatorSpec::CompoundingPoisson)];
    let table = run_sim_study(&config(fits, vec![300, 1200], 100)).unwrap();
    for p in ["a1", "b1", "sigma2"] {
        let small = table.param("poi", 300, "PQ/poi", p).unwrap().sse;
        let large = table.param("poi", 1200, "PQ/poi", p).unwrap().sse;
        assert!(large < small, "{p}: {large} !< {small}");
    }
}

#[test]
fn failures_are_counted() {
    let bad = Dgp {
        label: "zip".into(),
        model: ModelSpec::new(
            MeanSpec::linear(2.8, vec![0.4], vec![0.2]),
            OperatorSpec::CompoundingPoisson,
            three_point_from_sigma2(0.4).unwrap(),
        )
        .unwrap(),
    };
    let mut cfg = SimStudyConfig::new(
        vec![bad],
        vec![FitSpec::new(EstimatorKind::Pq, OperatorSpec::zip(2.0).unwrap())],
        vec![200],
        3,
    );
    cfg.replications = 5;
    let table = run_sim_study(&cfg).unwrap();
    let cell = &table.fits[0];
    assert_eq!(cell.failures, 5);
    assert!(cell.flagged);
    assert!(cell.first_error.is_some());
}

#[test]
fn invalid_configs_are_rejected() {
    let fits = vec![FitSpec::new(EstimatorKind::Pq, OperatorSpec::CompoundingPoisson)];
    let mut cfg = config(fits.clone(), vec![300], 0);
    assert!(run_sim_study(&cfg).is_err());
    cfg.replications = 2;
    cfg.trim_fraction = 0.2;
    assert!(run_sim_study(&cfg).is_err());
}
