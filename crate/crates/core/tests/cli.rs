use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn bdris(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bdris")).args(args).output().expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn check_arch_exit_codes() {
    let ok = bdris(&["check-arch", "--arch", "stem", "--q", "3", "--n-ris", "6", "--l", "2"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json_stdout(&ok)["holds"], true);

    let fails = bdris(&["check-arch", "--arch", "band", "--q", "1", "--n-ris", "6", "--l", "2"]);
    assert_eq!(fails.status.code(), Some(1));
    assert_eq!(json_stdout(&fails)["verdict"], "not_satisfied");

    assert_eq!(bdris(&["check-arch", "--arch", "hexagon", "--n-ris", "6"]).status.code(), Some(2));
    assert_eq!(bdris(&["check-arch", "--arch", "band", "--q", "9", "--n-ris", "6"]).status.code(), Some(2));
    assert_eq!(bdris(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(bdris(&["verify", "--suite", "nonsense"]).status.code(), Some(2));
}

#[test]
fn verify_ranks_reports_predicted_rank() {
    let out = bdris(&["verify", "--suite", "ranks", "--sizes", "6", "--kappa", "4", "--trials", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let example = &json_stdout(&out)["details"][0]["example"];
    assert_eq!(
        (example["rank_a"].as_u64(), example["rank_ab"].as_u64(), example["predicted"].as_u64()),
        (Some(18), Some(18), Some(18))
    );
}

#[test]
fn verify_tree_census() {
    let out = bdris(&["verify", "--suite", "tree-census", "--sizes", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let row = &json_stdout(&out)["details"][0];
    assert_eq!(row["trees"], 125);
    assert_eq!(row["mismatches"], 0);
}

#[test]
fn reconstruct_identity_and_negative_control() {
    let out = bdris(&[
        "reconstruct",
        "--arch",
        "band",
        "--q",
        "3",
        "--n-ris",
        "8",
        "--n-tx",
        "4",
        "--users",
        "1,1",
        "--identity",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = json_stdout(&out);
    assert_eq!(report["residual"], 0.0);
    assert!(report["b_hat"].as_array().unwrap().iter().flat_map(|r| r.as_array().unwrap()).all(|v| v == 0.0));

    let band = bdris(&[
        "reconstruct",
        "--arch",
        "band",
        "--q",
        "3",
        "--n-ris",
        "8",
        "--n-tx",
        "4",
        "--users",
        "1,1",
        "--seed",
        "3",
    ]);
    assert_eq!(band.status.code(), Some(0));
    assert!(json_stdout(&band)["roundtrip_error"].as_f64().unwrap() <= 1e-8);

    let single =
        bdris(&["reconstruct", "--arch", "single", "--n-ris", "8", "--n-tx", "4", "--users", "1,1", "--seed", "3"]);
    assert_eq!(single.status.code(), Some(1));
    assert_eq!(json_stdout(&single)["status"], "inconsistent");
}

#[test]
fn sweep_is_deterministic_and_complexity_grows_with_q() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("experiment.json");
    fs::write(
        &config,
        r#"{
            "scenario": {"dims": {"n_tx": 2, "n_ris": 8, "users": [1, 1]}},
            "architectures": [{"kind": "band", "q": 1}, {"kind": "stem", "q": 1}],
            "objective": "sum_channel_gain",
            "sweep": {"axis": "q", "values": [0, 1, 3, 5]},
            "trials": 2,
            "optimizer": {"restarts": 1, "max_iters": 40}
        }"#,
    )
    .unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status =
            bdris(&["sweep", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "9"]);
        assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
        fs::read_to_string(out).unwrap()
    };
    let first = run("a.csv");
    assert_eq!(first, run("b.csv"));

    let mut reader = csv::Reader::from_reader(first.as_bytes());
    let headers = reader.headers().unwrap().clone();
    assert_eq!(headers.get(0), Some("schema_version"));
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 8);
    for kind in ["band", "stem"] {
        let counts: Vec<usize> = rows
            .iter()
            .filter(|r| r[col("architecture")].starts_with(kind))
            .map(|r| r[col("complexity_count")].parse().unwrap())
            .collect();
        assert_eq!(counts.len(), 4);
        assert!(counts.windows(2).all(|w| w[0] < w[1]), "{kind}: {counts:?}");
    }
    assert!(rows
        .iter()
        .all(|r| &r[col("schema_version")] == "1" && r[col("std_value")].parse::<f64>().unwrap() >= 0.0));
}

#[test]
fn sweep_without_output_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("experiment.json");
    fs::write(&config, r#"{"architectures": [{"kind": "single"}], "objective": "sum_channel_gain"}"#).unwrap();
    assert_eq!(bdris(&["sweep", "--config", config.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn complexity_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested/complexity.json");
    let res =
        bdris(&["complexity", "--arch", "band", "--q", "optimal", "--n-ris", "16", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));
    let written: Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(written, json_stdout(&res));
    // Default scenario: N_T = 4 and four single-antenna users, so L = 4.
    assert_eq!(written["complexity_count"], 4 * (32 - 8 + 1));
}

#[test]
fn optimize_writes_monotone_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let res = bdris(&[
        "optimize",
        "--arch",
        "tridiagonal",
        "--n-ris",
        "6",
        "--n-tx",
        "2",
        "--users",
        "1,1",
        "--objective",
        "sum_rate",
        "--restarts",
        "2",
        "--max-iters",
        "30",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let values: Vec<f64> = fs::read_to_string(trace)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(!values.is_empty());
    assert!(values.windows(2).all(|w| w[1] >= w[0]));
}
