use std::process::{Command, Output};

use nakamoto_bounds::cli::output::OutputRecord;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nakamoto-bounds"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn records(out: &Output) -> Vec<OutputRecord> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).expect("valid record"))
        .collect()
}

fn result_f64(r: &OutputRecord, key: &str) -> f64 {
    r.results[key]
        .as_f64()
        .unwrap_or_else(|| panic!("{key} missing"))
}

#[test]
fn bound_headline_rounds_to_published_percentages() {
    let out = run(&[
        "bound",
        "--lambda",
        "0.0016667",
        "--rho",
        "0.9",
        "--delta",
        "10",
        "--k",
        "6",
    ]);
    assert!(out.status.success());
    let r = &records(&out)[0];
    assert_eq!(r.schema_version, "1");
    assert_eq!(
        format!("{:.2}", 100.0 * result_f64(r, "thm2_lower")),
        "0.11"
    );
    assert_eq!(
        format!("{:.2}", 100.0 * result_f64(r, "thm2_upper")),
        "0.35"
    );
}

#[test]
fn record_round_trips_inputs() {
    let out = run(&[
        "bound", "--lambda", "0.1", "--rho", "0.8", "--delta", "0.3", "--k", "7",
    ]);
    let r = &records(&out)[0];
    assert_eq!(r.command, "bound");
    assert_eq!(r.inputs.lambda, 0.1);
    assert_eq!(r.inputs.rho, 0.8);
    assert_eq!(r.inputs.delta, 0.3);
    assert_eq!(r.inputs.k, Some(7));
    let again = run(&[
        "bound",
        "--lambda",
        &r.inputs.lambda.to_string(),
        "--rho",
        &r.inputs.rho.to_string(),
        "--delta",
        &r.inputs.delta.to_string(),
        "--k",
        "7",
    ]);
    assert_eq!(again.stdout, out.stdout);
}

#[test]
fn csv_matches_json_digits() {
    let base = [
        "sweep", "--preset", "ethereum", "--rho", "0.8", "--k-min", "1", "--k-max", "12",
    ];
    let json = run(&base);
    let mut csv_args = base.to_vec();
    csv_args.extend(["--format", "csv"]);
    let csv_out = run(&csv_args);
    assert!(json.status.success() && csv_out.status.success());
    let recs = records(&json);
    let text = String::from_utf8(csv_out.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(
        &header[..5],
        &["k", "thm1_lower", "thm2_lower", "thm2_upper", "thm1_upper"]
    );
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), recs.len());
    for (row, rec) in rows.iter().zip(&recs) {
        for (col, cell) in header.iter().zip(row) {
            let v = &rec.results[*col];
            if v.is_f64() {
                assert_eq!(cell.parse::<f64>().unwrap(), v.as_f64().unwrap(), "{col}");
                assert_eq!(cell.split('e').next().unwrap().replace('.', "").len(), 17);
            } else {
                assert_eq!(cell, &v.to_string());
            }
        }
    }
}

#[test]
fn presets_expand_to_network_parameters() {
    let btc = records(&run(&[
        "bound", "--preset", "bitcoin", "--rho", "0.9", "--k", "3",
    ]));
    assert_eq!(
        (btc[0].inputs.lambda, btc[0].inputs.delta),
        (1.0 / 600.0, 10.0)
    );
    let eth = records(&run(&[
        "bound", "--preset", "ethereum", "--rho", "0.9", "--k", "3",
    ]));
    assert_eq!(
        (eth[0].inputs.lambda, eth[0].inputs.delta),
        (1.0 / 13.0, 2.0)
    );
    let explicit = run(&[
        "bound",
        "--block-interval",
        "600",
        "--rho",
        "0.9",
        "--delta",
        "10",
        "--k",
        "3",
    ]);
    assert_eq!(records(&explicit)[0].results, btc[0].results);
}

#[test]
fn fault_tolerance_violation_exits_2() {
    let out = run(&[
        "bound", "--lambda", "1", "--rho", "0.4", "--delta", "0", "--k", "3",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("p = 0.4 ≤ 1/2"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn invalid_inputs_exit_2() {
    for args in [
        vec![
            "sweep", "--lambda", "1", "--rho", "0.9", "--delta", "0", "--k-min", "5", "--k-max",
            "2",
        ],
        vec![
            "bound", "--lambda", "1", "--rho", "0.9", "--delta", "0", "--k", "0",
        ],
        vec!["bound", "--rho", "0.9", "--k", "2"],
        vec![
            "bound",
            "--lambda",
            "1",
            "--block-interval",
            "1",
            "--rho",
            "0.9",
            "--delta",
            "0",
            "--k",
            "2",
        ],
        vec![
            "bound", "--lambda", "-1", "--rho", "0.9", "--delta", "0", "--k", "2",
        ],
        vec![
            "simulate", "--lambda", "1", "--rho", "0.9", "--delta", "0", "--k", "2", "--trials",
            "0",
        ],
    ] {
        assert_eq!(run(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn perfect_honesty_gives_zero_lower_bounds() {
    let out = run(&[
        "bound", "--lambda", "1", "--rho", "1", "--delta", "0", "--k", "5",
    ]);
    assert!(out.status.success());
    let r = &records(&out)[0];
    assert_eq!(result_f64(r, "thm1_lower"), 0.0);
    assert_eq!(result_f64(r, "thm2_lower"), 0.0);
    assert!(r.results["thm1_upper"].is_null());
    assert!(r.warnings.iter().any(|w| w.contains("undefined")));
}

#[test]
fn raw_bound_above_one_is_flagged() {
    let r = &records(&run(&[
        "bound", "--preset", "bitcoin", "--rho", "0.9", "--k", "1",
    ]))[0];
    assert!(result_f64(r, "thm1_upper") > 1.0);
    assert_eq!(result_f64(r, "thm1_upper_clamped"), 1.0);
    assert!(r.warnings.iter().any(|w| w.contains("exceeds 1")));
}

#[test]
fn single_row_sweep() {
    let out = run(&[
        "sweep", "--preset", "bitcoin", "--rho", "0.75", "--k-min", "9", "--k-max", "9",
    ]);
    let recs = records(&out);
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].results["k"], 9);
}

#[test]
fn depth_examples() {
    let risk = records(&run(&[
        "bound", "--preset", "bitcoin", "--rho", "0.9", "--k", "6",
    ]))[0]
        .results["thm2_upper"]
        .as_f64()
        .unwrap();
    let r = &records(&run(&[
        "depth",
        "--preset",
        "bitcoin",
        "--rho",
        "0.75",
        "--target",
        &risk.to_string(),
        "--bound",
        "thm2u",
    ]))[0];
    let k = r.results["k"].as_u64().unwrap();
    assert!((19..=23).contains(&k), "k = {k}");

    let r = &records(&run(&[
        "depth", "--preset", "bitcoin", "--rho", "0.9", "--target", "0.999",
    ]))[0];
    assert_eq!(r.results["k"], 1);

    let r = &records(&run(&[
        "depth", "--preset", "bitcoin", "--rho", "0.9", "--target", "2e-6", "--bound", "thm2u",
    ]))[0];
    let k = r.results["k"].as_u64().unwrap();
    assert!((13..=15).contains(&k), "k = {k}");
}

#[test]
fn unreachable_depth_exits_3() {
    let out = run(&[
        "depth", "--preset", "bitcoin", "--rho", "0.6", "--target", "1e-200", "--k-max", "30",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(records(&out)[0].results["status"], "not_reachable");
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("params.toml");
    std::fs::write(&path, "preset = \"bitcoin\"\nrho = 0.75\nk = 6\n").unwrap();
    let p = path.to_str().unwrap();
    let from_file = records(&run(&["bound", "--config", p]));
    let direct = records(&run(&[
        "bound", "--preset", "bitcoin", "--rho", "0.75", "--k", "6",
    ]));
    assert_eq!(from_file[0].results, direct[0].results);
    let overridden = records(&run(&["bound", "--config", p, "--rho", "0.9"]));
    assert_eq!(overridden[0].inputs.rho, 0.9);

    std::fs::write(&path, "rhoo = 0.75\n").unwrap();
    assert_eq!(run(&["bound", "--config", p]).status.code(), Some(2));
}

#[test]
fn simulate_is_byte_identical_across_runs_and_threads() {
    let base = [
        "simulate", "--preset", "bitcoin", "--rho", "0.8", "--k", "4", "--trials", "30000",
        "--seed", "11",
    ];
    let a = run(&base);
    let mut b_args = base.to_vec();
    b_args.extend(["--threads", "3"]);
    let b = run(&b_args);
    let c = run(&base);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn full_simulation_without_adversary_never_succeeds() {
    let out = run(&[
        "simulate", "--mode", "full", "--lambda", "1", "--rho", "1", "--delta", "0", "--k", "2",
        "--trials", "500",
    ]);
    assert!(out.status.success());
    assert_eq!(records(&out)[0].results["successes"], 0);
}

#[test]
fn table_format_uses_six_significant_digits() {
    let out = run(&[
        "bound", "--preset", "bitcoin", "--rho", "0.9", "--k", "6", "--format", "table",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("thm2_upper          3.52563e-3"), "{text}");
}
