use std::fs;
use std::path::{Path, PathBuf};

use mggp::cli::main_with_args;
use mggp::dataio::TABLE1_CSV;
use tempfile::TempDir;

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn mggp(args: &[&str]) -> Run {
    let mut all = vec!["mggp"];
    all.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = main_with_args(all, &mut out, &mut err);
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn workspace() -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("table1.csv");
    fs::write(&data, TABLE1_CSV).unwrap();
    (dir, data)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const IDENTITY_MODEL: &str = "format-version 1
variables x1,x2,x3,x4,x5,x6
gene (((x1 + x2) + (x3 + x4)) + (x5 + x6))
weights 0 1
train_rmse 0
";

#[test]
fn missing_data_file_is_a_data_error_with_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (model, log) = (dir.path().join("m.txt"), dir.path().join("log.csv"));
    let r = mggp(&["train", "--data", p(&dir.path().join("absent.csv")), "--model", p(&model), "--log", p(&log)]);
    assert_eq!(r.code, 3, "{}", r.err);
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn missing_predictor_column_is_named() {
    let (dir, _) = workspace();
    let data = dir.path().join("short.csv");
    let text: String = TABLE1_CSV
        .lines()
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            format!("{}\n", [&cells[..7], &cells[8..]].concat().join(","))
        })
        .collect();
    assert!(!text.contains("x6"));
    fs::write(&data, text).unwrap();
    fs::write(dir.path().join("m.txt"), IDENTITY_MODEL).unwrap();
    let r = mggp(&[
        "rate",
        "--model",
        p(&dir.path().join("m.txt")),
        "--data",
        p(&data),
        "--out",
        p(&dir.path().join("r.csv")),
    ]);
    assert_eq!(r.code, 3);
    assert!(r.err.contains("x6"), "{}", r.err);
}

#[test]
fn identity_model_rates_table() {
    let (dir, data) = workspace();
    let model = dir.path().join("m.txt");
    fs::write(&model, IDENTITY_MODEL).unwrap();
    let report = dir.path().join("r.csv");
    let r = mggp(&["rate", "--model", p(&model), "--data", p(&data), "--out", p(&report)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("failure_rate_percent=64.2857"), "{}", r.out);
    let csv = fs::read_to_string(&report).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 15);

    let r = mggp(&["rate", "--model", p(&model), "--data", p(&data), "--out", p(&report), "--threshold", "0"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("failure_rate_percent=0.0000"), "{}", r.out);
}

#[test]
fn predict_writes_one_value_per_row() {
    let (dir, data) = workspace();
    let model = dir.path().join("m.txt");
    fs::write(&model, IDENTITY_MODEL).unwrap();
    let out = dir.path().join("pred.csv");
    let r = mggp(&["predict", "--model", p(&model), "--data", p(&data), "--out", p(&out)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("rows=14"));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.lines().nth(1).unwrap().ends_with("23"), "{text}");
}

#[test]
fn training_twice_gives_identical_files() {
    let (dir, data) = workspace();
    let mut files = Vec::new();
    for run in 0..2 {
        let model = dir.path().join(format!("m{run}.txt"));
        let log = dir.path().join(format!("log{run}.csv"));
        let r = mggp(&[
            "train",
            "--data",
            p(&data),
            "--model",
            p(&model),
            "--log",
            p(&log),
            "--seed",
            "3",
            "--max-generations",
            "15",
        ]);
        assert_eq!(r.code, 0, "{}", r.err);
        assert!(r.out.starts_with("seed=3\n"));
        let pareto = dir.path().join(format!("log{run}_pareto.csv"));
        files.push([fs::read(&model).unwrap(), fs::read(&log).unwrap(), fs::read(&pareto).unwrap()]);
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn trained_model_round_trips_through_predict() {
    let (dir, data) = workspace();
    let (model, log) = (dir.path().join("m.txt"), dir.path().join("log.csv"));
    let r = mggp(&["train", "--data", p(&data), "--model", p(&model), "--log", p(&log), "--seed", "1"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("TARGET_REACHED"), "{}", r.out);
    let log_text = fs::read_to_string(&log).unwrap();
    assert!(log_text.contains("\ngeneration,best_fitness,mean_fitness,best_complexity\n"));
    let rate = dir.path().join("r.csv");
    let r = mggp(&["rate", "--model", p(&model), "--data", p(&data), "--out", p(&rate)]);
    assert!(r.out.contains("failure_rate_percent=64.2857"), "{}", r.out);
}

#[test]
fn config_file_and_flag_precedence() {
    let (dir, data) = workspace();
    let config = dir.path().join("run.cfg");
    fs::write(&config, "seed = 11\nmax_generations = 3\n").unwrap();
    let out = dir.path().join("front.csv");
    let r = mggp(&["pareto", "--data", p(&data), "--config", p(&config), "--seed", "12", "--out", p(&out)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.starts_with("seed=12\n"), "{}", r.out);
    assert!(out.exists());
}

#[test]
fn bad_config_is_a_config_error() {
    let (dir, data) = workspace();
    let config = dir.path().join("bad.cfg");
    fs::write(&config, "p_mutation = 0.9\n").unwrap();
    let r = mggp(&[
        "train",
        "--data",
        p(&data),
        "--config",
        p(&config),
        "--model",
        p(&dir.path().join("m.txt")),
        "--log",
        p(&dir.path().join("l.csv")),
    ]);
    assert_eq!(r.code, 4, "{}", r.err);
    assert!(!dir.path().join("m.txt").exists());

    let r = mggp(&["train", "--data", p(&data), "--population-size", "0", "--model", "m", "--log", "l"]);
    assert_eq!(r.code, 4);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let r = mggp(&["train", "--frobnicate"]);
    assert_eq!(r.code, 2);
    assert!(!r.err.is_empty());
    assert_eq!(mggp(&[]).code, 2);
}

#[test]
fn unreadable_model_is_a_data_error() {
    let (dir, data) = workspace();
    let model = dir.path().join("m.txt");
    fs::write(&model, IDENTITY_MODEL.replace("format-version 1", "format-version 2")).unwrap();
    let r = mggp(&["predict", "--model", p(&model), "--data", p(&data), "--out", p(&dir.path().join("o.csv"))]);
    assert_eq!(r.code, 3);
    assert!(r.err.contains("version"), "{}", r.err);
}
