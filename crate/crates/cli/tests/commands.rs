use std::fs;
use std::path::Path;

use evcast_core::ingest::{parse_transactions, ColumnMap};

fn run(args: &[&str]) -> i32 {
    let mut full = vec!["evcast"];
    full.extend_from_slice(args);
    evcast_cli::main_with_args(full)
}

fn p(dir: &Path, rel: &str) -> String {
    dir.join(rel).to_string_lossy().into_owned()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(dir.join(evcast_cli::MANIFEST)).unwrap()).unwrap()
}

/// synth -> ingest -> cluster -> series on a short horizon.
fn prepare(dir: &Path, days: &str) {
    assert_eq!(run(&["synth", "--seed", "5", "--days", days, "--owners", "12,12,6", "--out", &p(dir, "synth")]), 0);
    assert_eq!(run(&["ingest", "--input", &p(dir, "synth/transactions.csv"), "--out", &p(dir, "ingest")]), 0);
    let clean = p(dir, "ingest/transactions_clean.csv");
    assert_eq!(run(&["cluster", "--seed", "5", "--k", "3", "--input", &clean, "--out", &p(dir, "cluster")]), 0);
    let model = p(dir, "cluster/clusters.json");
    assert_eq!(run(&["series", "--input", &clean, "--clusters", &model, "--out", &p(dir, "series")]), 0);
}

#[test]
fn synth_ingest_roundtrip_has_no_rejects() {
    let t = tempfile::tempdir().unwrap();
    assert_eq!(run(&["synth", "--seed", "1", "--days", "60", "--out", &p(t.path(), "s")]), 0);
    assert_eq!(run(&["ingest", "--input", &p(t.path(), "s/transactions.csv"), "--out", &p(t.path(), "i")]), 0);
    assert_eq!(fs::read(t.path().join("i/rejects.jsonl")).unwrap(), b"");
    let raw = fs::read(t.path().join("s/transactions.csv")).unwrap();
    let (txns, rejects) = parse_transactions(raw.as_slice(), &ColumnMap::default()).unwrap();
    assert!(rejects.is_empty() && !txns.is_empty());
    let m = manifest(&t.path().join("i"));
    assert_eq!(m["command"], "ingest");
    assert_eq!(m["inputs"][0]["bytes"], raw.len() as u64);
    assert_eq!(m["outputs"][0], "transactions_clean.csv");
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn same_seed_same_bytes_other_seed_differs() {
    let t = tempfile::tempdir().unwrap();
    for (dir, seed) in [("a", "4"), ("b", "4"), ("c", "5")] {
        assert_eq!(run(&["synth", "--seed", seed, "--days", "40", "--out", &p(t.path(), dir)]), 0);
    }
    let read = |d: &str| fs::read(t.path().join(d).join("transactions.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}

#[test]
fn exit_codes() {
    let t = tempfile::tempdir().unwrap();
    let out = p(t.path(), "o");
    // Stochastic command without a seed.
    assert_eq!(run(&["synth", "--out", &out]), 1);
    assert_eq!(run(&["evaluate", "--series", &out, "--out", &out]), 1);
    // Unknown subcommand and unknown option values.
    assert_eq!(run(&["frobnicate"]), 1);
    assert_eq!(run(&["impact", "--provider", "oracle", "--out", &out]), 1);
    assert_eq!(run(&["--help"]), 0);
    // Missing and malformed inputs are data errors.
    assert_eq!(run(&["ingest", "--input", &p(t.path(), "nope.csv"), "--out", &out]), 2);
    fs::write(t.path().join("bad.csv"), "a,b\n1,2\n").unwrap();
    assert_eq!(run(&["ingest", "--input", &p(t.path(), "bad.csv"), "--out", &out]), 2);
    assert_eq!(run(&["cluster", "--seed", "1", "--input", &p(t.path(), "bad.csv"), "--out", &out]), 2);
    // Invalid synth parameters are usage errors.
    assert_eq!(run(&["synth", "--seed", "1", "--owners", "1,2", "--out", &out]), 1);
    assert!(!t.path().join("o").join(evcast_cli::MANIFEST).exists());
}

#[test]
fn impact_default_sweep() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("imp");
    assert_eq!(run(&["impact", "--out", &out.to_string_lossy()]), 0);
    let csv = fs::read_to_string(out.join("impact.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 801);
    let header: Vec<&str> = lines[0].split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let row = lines
        .iter()
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|r| r[0] == "f2" && r[2] == "1" && r[3] == "user_control" && r[4] == "0")
        .unwrap();
    let agg: f64 = row[col("agg_load_kva")].parse().unwrap();
    let ev: f64 = row[col("ev_load_kva")].parse().unwrap();
    assert!((agg - 201.6).abs() < 1e-9 && (ev - 105.6).abs() < 1e-9);
    let mc = fs::read_to_string(out.join("min_control.csv")).unwrap();
    assert!(mc.lines().any(|l| l == "f2,Winter,1,0.8"));
    for f in ["plot_load_consumption_control.csv", "plot_load_user_control.csv", "plot_duration.csv"] {
        assert!(fs::read_to_string(out.join(f)).unwrap().lines().count() > 1, "{f}");
    }
    assert_eq!(manifest(&out)["seed"], serde_json::Value::Null);
}

#[test]
fn config_file_drives_commands() {
    let t = tempfile::tempdir().unwrap();
    fs::write(
        t.path().join("run.toml"),
        "seed = 12\nout = \"cfg_out\"\n\n[synth]\nhorizon_days = 30\nowners_final = [3, 3, 2]\n\n[impact.grid]\npenetrations = [0.5, 1.0]\nlevels = [0.0, 0.8]\n",
    )
    .unwrap();
    let cfg = p(t.path(), "run.toml");
    assert_eq!(run(&["--config", &cfg, "synth"]), 0);
    let m = manifest(&t.path().join("cfg_out"));
    assert_eq!(m["seed"], 12);
    assert_eq!(m["settings"]["horizon_days"], 30);
    assert_eq!(run(&["--config", &cfg, "impact", "--out", &p(t.path(), "imp")]), 0);
    let rows = fs::read_to_string(t.path().join("imp/impact.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 4 * 4 * 2 * 2 * 2);
    fs::write(t.path().join("bad.toml"), "sede = 1\n").unwrap();
    assert_eq!(run(&["--config", &p(t.path(), "bad.toml"), "impact"]), 1);
}

#[test]
fn forecast_then_impact_from_forecasts() {
    let t = tempfile::tempdir().unwrap();
    prepare(t.path(), "150");
    // The scenario starts after the last observed day of every cluster.
    fs::write(t.path().join("scen.csv"), "date,owners\n2017-07-01,12\n2017-07-02,12\n2017-07-03,13\n").unwrap();
    let args = |out: &str| {
        vec![
            "forecast".to_string(),
            "--seed".into(),
            "5".into(),
            "--series".into(),
            p(t.path(), "series"),
            "--scenario".into(),
            p(t.path(), "scen.csv"),
            "--family".into(),
            "regression".into(),
            "--out".into(),
            p(t.path(), out),
        ]
    };
    let code = |a: Vec<String>| run(&a.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(code(args("fc")), 0);
    let fc = fs::read_to_string(t.path().join("fc/forecast.csv")).unwrap();
    assert_eq!(fc.lines().count(), 1 + 3 * 3);
    assert!(fc.starts_with("cluster,date,owners,users,consumed\n"));
    assert_eq!(
        run(&["impact", "--provider", "forecast", "--forecast", &p(t.path(), "fc/forecast.csv"), "--out", &p(t.path(), "imp")]),
        0
    );
    assert_eq!(fs::read_to_string(t.path().join("imp/impact.csv")).unwrap().lines().count(), 801);

    fs::write(t.path().join("scen.csv"), "day,owners\n2017-07-01,12\n").unwrap();
    assert_eq!(code(args("fc2")), 2);
    // A scenario overlapping the training span is rejected.
    fs::write(t.path().join("scen.csv"), "date,owners\n2017-03-01,12\n").unwrap();
    assert_eq!(code(args("fc3")), 2);
}

#[test]
fn evaluate_regression_matrix_is_finite() {
    let t = tempfile::tempdir().unwrap();
    prepare(t.path(), "120");
    let out = p(t.path(), "ev");
    let series = p(t.path(), "series");
    assert_eq!(
        run(&["evaluate", "--seed", "2", "--series", &series, "--families", "regression,reg_arima", "--out", &out]),
        0
    );
    let m = fs::read_to_string(t.path().join("ev/mape_matrix.csv")).unwrap();
    let lines: Vec<&str> = m.lines().collect();
    assert_eq!(lines[0], "cluster,feature_set,regression,reg_arima");
    assert_eq!(lines.len(), 1 + 3 * 4);
    for l in &lines[1..] {
        for v in l.split(',').skip(2) {
            assert!(v.parse::<f64>().unwrap().is_finite());
        }
    }
    assert_eq!(run(&["evaluate", "--seed", "2", "--series", &series, "--families", "arima", "--out", &out]), 1);
}

#[test]
fn example_config_parses() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/example.toml");
    let cfg = evcast_cli::load_config(Some(&path)).unwrap();
    assert_eq!(cfg.seed, Some(42));
    assert_eq!(cfg.synth.owners_final, vec![144, 156, 60]);
    assert_eq!(cfg.impact.network.feeders.len(), 4);
    assert!(cfg.cluster.input.unwrap().is_absolute() == path.is_absolute());
}
