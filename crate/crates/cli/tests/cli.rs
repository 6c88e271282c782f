use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn cmem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmem")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn simulate_to(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let path = dir.join("x.csv");
    let out = cmem(&["simulate", "--n", &n.to_string(), "--seed", &seed.to_string(), "-o", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn simulate_round_trips_through_the_reader() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let out = cmem(&["simulate", "--n", "500", "--seed", "9", "--latent", "-o", path.to_str().unwrap()]);
    assert!(out.status.success());
    let read = cmem::io::read_count_series(&path).unwrap();
    let model = cmem::ModelSpec::new(
        cmem::MeanSpec::linear(2.8, vec![0.4], vec![0.2]),
        cmem::OperatorSpec::CompoundingPoisson,
        cmem::InnovationSpec::PoissonUnit,
    )
    .unwrap();
    let (direct, _) = cmem::model::simulate(&model, 500, 500, &mut cmem::rng::seeded(9)).unwrap();
    assert_eq!(read, direct);

    let side: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.csv.json")).unwrap()).unwrap();
    assert_eq!(side["config"]["seed"], 9);
    assert_eq!(side["config"]["n"], 500);
}

#[test]
fn fit_recovers_parameters_at_large_n() {
    let dir = tempfile::tempdir().unwrap();
    let path = simulate_to(dir.path(), 100_000, 4);
    let out = cmem(&["fit", "-i", path.to_str().unwrap(), "--method", "pq", "--operator", "poi", "--order", "1,1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&out);
    let est = doc["fit"]["estimates"].as_array().unwrap();
    for (e, truth) in est.iter().zip([2.8, 0.4, 0.2]) {
        let v = e["value"].as_f64().unwrap();
        let tol = if e["name"] == "a0" { 0.2 } else { 0.02 };
        assert!((v - truth).abs() < tol, "{}: {v}", e["name"]);
    }
    assert!((doc["fit"]["sigma2"]["value"].as_f64().unwrap() - 1.0).abs() < 0.05);
    assert_eq!(doc["config"]["estimation"]["method"]["kind"], "pq");
    assert_eq!(doc["config"]["estimation"]["options"]["optim"]["max_iter"], 10000);
    assert!(doc["diagnostics"]["mspr"].as_f64().unwrap() > 0.9);
}

#[test]
fn fit_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let path = simulate_to(dir.path(), 800, 5);
    let a = cmem(&["fit", "-i", path.to_str().unwrap(), "--method", "2w", "--operator", "bin"]);
    let b = cmem(&["fit", "-i", path.to_str().unwrap(), "--method", "2w", "--operator", "bin"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn diagnose_and_forecast_eval_write_documents() {
    let dir = tempfile::tempdir().unwrap();
    let path = simulate_to(dir.path(), 1000, 6);
    let out = cmem(&["diagnose", "-i", path.to_str().unwrap(), "--method", "eq"]);
    assert!(out.status.success());
    let doc = json(&out);
    assert_eq!(doc["report"]["pearson"].as_array().unwrap().len(), 1000);
    assert_eq!(doc["report"]["residual_acf"].as_array().unwrap().len(), 10);

    let report = dir.path().join("f.json");
    let out = cmem(&["forecast-eval", "-i", path.to_str().unwrap(), "--holdout", "100", "-o", report.to_str().unwrap()]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["holdout"]["n"], 100);
    assert_eq!(doc["in_sample"]["n"], 900);
    assert_eq!(doc["config"]["holdout"], 100);
}

#[test]
fn config_file_sets_estimation() {
    let dir = tempfile::tempdir().unwrap();
    let path = simulate_to(dir.path(), 1000, 7);
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[estimation]\nmethod = \"nq\"\nnq_r = 3.0\noperator = \"nb\"\n").unwrap();
    let out = cmem(&["fit", "-i", path.to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let doc = json(&out);
    assert_eq!(doc["config"]["estimation"]["method"]["r"], 3.0);
    assert_eq!(doc["fit"]["operator"], "nb");

    let out = cmem(&["fit", "-i", path.to_str().unwrap(), "--config", cfg.to_str().unwrap(), "--method", "pq"]);
    assert_eq!(json(&out)["fit"]["method"], "PQ");
}

#[test]
fn simstudy_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("study.csv");
    let out = cmem(&[
        "simstudy",
        "--config",
        config_path("desk_scale_poi.toml").to_str().unwrap(),
        "--replications",
        "4",
        "--n",
        "300",
        "-o",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4 * 4);
    let side: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("study.csv.json")).unwrap()).unwrap();
    assert_eq!(side["config"]["simstudy"]["replications"], 4);
    assert_eq!(side["config"]["simstudy"]["seed"], 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("PQ/poi"));
}

#[test]
fn bundled_configs_parse() {
    for name in ["desk_scale_poi.toml", "misspec_bin.toml"] {
        let out = cmem(&["simstudy", "--config", config_path(name).to_str().unwrap(), "--replications", "1", "--n", "200"]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn errors_are_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "1\n-2\n").unwrap();
    let out = cmem(&["fit", "-i", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let rec: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(rec["error"]["kind"], "parse");
    assert_eq!(rec["error"]["line"], 2);

    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[model]\nbogus = 1\n").unwrap();
    let out = cmem(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let nonstat = dir.path().join("n.toml");
    std::fs::write(&nonstat, "[model]\na0 = 1.0\na = [0.7]\nb = [0.5]\n").unwrap();
    assert_eq!(cmem(&["simulate", "--config", nonstat.to_str().unwrap()]).status.code(), Some(2));

    assert_eq!(cmem(&["fit", "-i", "/nonexistent/file.csv"]).status.code(), Some(2));
    assert_eq!(cmem(&["fit"]).status.code(), Some(2));
}
