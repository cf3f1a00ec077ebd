use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tourneylab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tourneylab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ratings() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/example_ratings.csv")
        .display()
        .to_string()
}

#[test]
fn simulate_writes_one_row_per_metric() {
    let o = tourneylab(&[
        "simulate", "--format", "swiss", "--rounds", "5", "--reps", "2000", "--seed", "42",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "format,param,counted_matches,metric,mean,stderr");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("swiss,5,80,inversions,"));
    assert!(lines[4].starts_with("swiss,5,80,avg_rank_top_8,"));
}

#[test]
fn usage_errors_exit_with_one() {
    for args in [
        &["simulate", "--format", "ko", "--rounds", "5"][..],
        &["simulate", "--format", "ko", "--frobnicate"],
        &["simulate", "--format", "swiss"],
        &["simulate", "--format", "ko", "--model", "skill:-1"],
        &["sweep"],
    ] {
        let o = tourneylab(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(tourneylab(&["--help"]).status.code(), Some(0));
}

#[test]
fn unreadable_model_files_are_runtime_errors() {
    let o = tourneylab(&[
        "simulate",
        "--format",
        "ko",
        "--model",
        "elo:/no/such/file.csv",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/no/such/file.csv"));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let o = tourneylab(&[
        "simulate",
        "--format",
        "ko",
        "--reps",
        "10",
        "--out",
        "/no/such/dir/out.csv",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_metric_list_gives_a_header_only_csv() {
    let o = tourneylab(&[
        "simulate",
        "--format",
        "ko",
        "--reps",
        "100",
        "--metrics",
        "none",
    ]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "format,param,counted_matches,metric,mean,stderr\n"
    );
}

#[test]
fn histogram_file_reconstructs_the_distribution() {
    let dir = tempfile::tempdir().unwrap();
    let hist = dir.path().join("hist.csv");
    let o = tourneylab(&[
        "simulate",
        "--format",
        "ko",
        "--reps",
        "5000",
        "--metrics",
        "inversions",
        "--hist-out",
        hist.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let mut rdr = csv::Reader::from_path(&hist).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["metric", "value", "count"]);
    let (mut total, mut weighted) = (0u64, 0.0);
    for rec in rdr.records() {
        let rec = rec.unwrap();
        assert_eq!(&rec[0], "inversions");
        let (v, c): (f64, u64) = (rec[1].parse().unwrap(), rec[2].parse().unwrap());
        total += c;
        weighted += v * c as f64;
    }
    assert_eq!(total, 5000);
    let mean: f64 = stdout(&o)
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(4)
        .unwrap()
        .parse()
        .unwrap();
    assert!((weighted / 5000.0 - mean).abs() < 1e-9);
}

#[test]
fn json_carries_config_results_and_histograms_losslessly() {
    let base = [
        "simulate",
        "--format",
        "dp",
        "--reps",
        "3000",
        "--seed",
        "9",
        "--log-base",
        "2",
    ];
    let json = tourneylab(&[&base[..], &["--out-format", "json"]].concat());
    let csv = tourneylab(&base);
    assert!(json.status.success() && csv.status.success());
    let doc: Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(doc["config"]["log_base"], "2");
    assert_eq!(doc["config"]["players"], 32);
    assert_eq!(doc["histograms"].as_array().unwrap().len(), 4);
    let metrics = doc["results"][0]["metrics"].as_array().unwrap();
    for (line, m) in stdout(&csv).lines().skip(1).zip(metrics) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[3], m["metric"].as_str().unwrap());
        assert_eq!(
            fields[4].parse::<f64>().unwrap().to_bits(),
            m["mean"].as_f64().unwrap().to_bits()
        );
        assert_eq!(
            fields[5].parse::<f64>().unwrap().to_bits(),
            m["stderr"].as_f64().unwrap().to_bits()
        );
    }
    let again: Value = serde_json::from_str(&serde_json::to_string(&doc).unwrap()).unwrap();
    assert_eq!(again, doc);
}

#[test]
fn swiss_round_range_sweeps_ten_rows() {
    let o = tourneylab(&[
        "sweep",
        "--format",
        "swiss",
        "--rounds",
        "5..14",
        "--model",
        "skill:1",
        "--reps",
        "50",
        "--metrics",
        "inversions",
    ]);
    assert!(o.status.success());
    let counts: Vec<String> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().to_string())
        .collect();
    assert_eq!(
        counts,
        (5..=14).map(|r| (16 * r).to_string()).collect::<Vec<_>>()
    );
}

#[test]
fn compare_estimates_the_dominance_probability() {
    let o = tourneylab(&[
        "compare",
        "--format",
        "swiss",
        "--rounds",
        "5",
        "--versus",
        "ko",
        "--model",
        "skill:5",
        "--reps",
        "20000",
        "--out-format",
        "json",
    ]);
    assert!(o.status.success());
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    let p = doc["results"]["p_strictly_less"].as_f64().unwrap();
    assert!((p - 0.9044).abs() < 0.03, "{p}");
    assert_eq!(doc["config"]["versus"], "ko");
}

#[test]
fn elo_and_matrix_models_load_from_files() {
    let elo = format!("elo:{}", ratings());
    let o = tourneylab(&[
        "simulate", "--format", "ko", "--model", &elo, "--reps", "500",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = tourneylab(&[
        "simulate",
        "--format",
        "ko",
        "--model",
        &elo,
        "--players",
        "16",
    ]);
    assert_eq!(o.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    std::fs::write(
        &path,
        "0.5,0.6,0.7,0.8\n0.4,0.5,0.6,0.7\n0.3,0.4,0.5,0.6\n0.2,0.3,0.4,0.5\n",
    )
    .unwrap();
    let model = format!("matrix:{}", path.display());
    let o = tourneylab(&[
        "simulate", "--format", "rr", "--model", &model, "--reps", "500", "--topk", "1,2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("rr,,6,inversions,"));

    std::fs::write(&path, "0.5,0.9\n0.9,0.5\n").unwrap();
    let o = tourneylab(&["simulate", "--format", "rr", "--model", &model]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_exit_code_tracks_failures() {
    let ok = tourneylab(&["verify", "--reps", "20000"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(stdout(&ok).lines().skip(1).all(|l| l.ends_with(",true")));
    // A zero-width band cannot hold Monte Carlo noise.
    let strict = tourneylab(&["verify", "--reps", "2000", "--sigmas", "0"]);
    assert_eq!(strict.status.code(), Some(3));
}
