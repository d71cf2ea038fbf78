//! End-to-end tests driving the compiled `sebbs` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sebbs::model::ClipSebbs;
use sebbs::{dataio, Sebb};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sebbs"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Synthesizes a small corpus under `dir` and returns the path triple
/// (scores dir, ground truth, durations).
fn make_corpus(dir: &Path, clips: usize, classes: &str, seed: u64) -> (PathBuf, PathBuf, PathBuf) {
    let root = dir.join("corpus");
    run_ok(&[
        "synth",
        "--output-dir",
        root.to_str().unwrap(),
        "--clips",
        &clips.to_string(),
        "--classes",
        classes,
        "--seed",
        &seed.to_string(),
    ]);
    (
        root.join("scores"),
        root.join("ground_truth.tsv"),
        root.join("durations.tsv"),
    )
}

#[test]
fn synth_then_convert_yields_sebb_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let (scores, gt, durations) = make_corpus(tmp.path(), 8, "a,b", 3);
    let params = tmp.path().join("params.json");
    run_ok(&[
        "tune",
        "--scores",
        scores.to_str().unwrap(),
        "--gt",
        gt.to_str().unwrap(),
        "--durations",
        durations.to_str().unwrap(),
        "--method",
        "csebb",
        "--metric",
        "psds1",
        "--taus",
        "0.32",
        "--gammas-rel",
        "2",
        "--output",
        params.to_str().unwrap(),
    ]);
    let output = tmp.path().join("csebbs.tsv");
    run_ok(&[
        "convert",
        "--scores",
        scores.to_str().unwrap(),
        "--params",
        params.to_str().unwrap(),
        "--method",
        "csebb",
        "--output",
        output.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&output).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# format: v1"));
    assert_eq!(
        lines.next(),
        Some("filename\tonset\toffset\tevent_label\tconfidence")
    );
    assert!(lines.count() >= 8, "expected at least one SEBB per clip");
    let sebbs = dataio::read_sebbs(&output).unwrap();
    assert_eq!(sebbs.len(), 8);
}

#[test]
fn missing_params_file_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let (scores, _, _) = make_corpus(tmp.path(), 3, "a", 0);
    let out = run(&[
        "convert",
        "--scores",
        scores.to_str().unwrap(),
        "--params",
        tmp.path().join("absent.json").to_str().unwrap(),
        "--method",
        "csebb",
        "--output",
        tmp.path().join("out.tsv").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_of(&out).contains("params file not found"));
}

#[test]
fn empty_scores_directory_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let params = tmp.path().join("params.json");
    fs::write(&params, "{\"schema_version\":1,\"classes\":{}}").unwrap();
    let out = run(&[
        "convert",
        "--scores",
        empty.to_str().unwrap(),
        "--params",
        params.to_str().unwrap(),
        "--method",
        "csebb",
        "--output",
        tmp.path().join("out.tsv").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr_of(&out).contains("no score files found"));
}

#[test]
fn more_folds_than_clips_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let (scores, gt, durations) = make_corpus(tmp.path(), 4, "a", 1);
    let out = run(&[
        "cv",
        "--scores",
        scores.to_str().unwrap(),
        "--gt",
        gt.to_str().unwrap(),
        "--durations",
        durations.to_str().unwrap(),
        "--method",
        "legacy",
        "--metric",
        "cbf1",
        "--folds",
        "9",
        "--output",
        tmp.path().join("cv.json").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_of(&out).contains("folds"));
}

#[test]
fn cross_validation_reports_are_reproducible_across_runs_and_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let (scores, gt, durations) = make_corpus(tmp.path(), 9, "a,b", 5);
    let mut reports = Vec::new();
    for (name, threads) in [("one.json", "1"), ("many.json", "4")] {
        let path = tmp.path().join(name);
        run_ok(&[
            "cv",
            "--threads",
            threads,
            "--scores",
            scores.to_str().unwrap(),
            "--gt",
            gt.to_str().unwrap(),
            "--durations",
            durations.to_str().unwrap(),
            "--method",
            "csebb",
            "--metric",
            "collar_f1",
            "--folds",
            "3",
            "--seed",
            "11",
            "--taus",
            "0.32,0.48",
            "--gammas-abs",
            "0.2",
            "--output",
            path.to_str().unwrap(),
        ]);
        reports.push(fs::read(&path).unwrap());
    }
    assert!(!reports[0].is_empty());
    assert_eq!(
        reports[0], reports[1],
        "thread count or rerun changed the cv report"
    );
}

#[test]
fn tuned_parameters_never_lose_to_a_fixed_grid_point() {
    // Single class: psds1 equals the class ROC area that tuning
    // maximizes, and the tuned grid also contains the fixed point, so
    // the tuned score is a maximum over a superset.
    let tmp = tempfile::tempdir().unwrap();
    let (scores, gt, durations) = make_corpus(tmp.path(), 10, "a", 9);
    let fixed = tmp.path().join("fixed.json");
    fs::write(
        &fixed,
        concat!(
            "{\"schema_version\":1,\"classes\":{\"a\":",
            "{\"tau\":0.48,\"gamma\":{\"value\":0.2,\"mode\":\"absolute\"}}}}"
        ),
    )
    .unwrap();
    let tuned = tmp.path().join("tuned.json");
    run_ok(&[
        "tune",
        "--scores",
        scores.to_str().unwrap(),
        "--gt",
        gt.to_str().unwrap(),
        "--durations",
        durations.to_str().unwrap(),
        "--method",
        "csebb",
        "--metric",
        "psds1",
        "--output",
        tuned.to_str().unwrap(),
    ]);
    let mut values = Vec::new();
    for (params, out_dir) in [(&fixed, "eval_fixed"), (&tuned, "eval_tuned")] {
        let dir = tmp.path().join(out_dir);
        run_ok(&[
            "eval",
            "--scores",
            scores.to_str().unwrap(),
            "--method",
            "csebb",
            "--params",
            params.to_str().unwrap(),
            "--gt",
            gt.to_str().unwrap(),
            "--durations",
            durations.to_str().unwrap(),
            "--metric",
            "psds1",
            "--output-dir",
            dir.to_str().unwrap(),
        ]);
        let report: serde_json::Value =
            serde_json::from_slice(&fs::read(dir.join("report.json")).unwrap()).unwrap();
        values.push(report["value"].as_f64().unwrap());
    }
    assert!(
        values[1] >= values[0],
        "tuned {} < fixed {}",
        values[1],
        values[0]
    );
}

#[test]
fn perfect_predictions_score_one_and_empty_predictions_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, gt_path, durations) = make_corpus(tmp.path(), 6, "a,b", 2);

    // Ground truth doubles as a final-event file for collar F1.
    let dir = tmp.path().join("eval_perfect_f1");
    run_ok(&[
        "eval",
        "--events",
        gt_path.to_str().unwrap(),
        "--gt",
        gt_path.to_str().unwrap(),
        "--durations",
        durations.to_str().unwrap(),
        "--metric",
        "cbf1",
        "--output-dir",
        dir.to_str().unwrap(),
    ]);
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["value"].as_f64().unwrap(), 1.0);
    assert_eq!(report["micro_f1"].as_f64().unwrap(), 1.0);

    // The same intervals with full confidence are a perfect SEBB set.
    let (gt, _) = dataio::read_ground_truth(&gt_path, &durations).unwrap();
    let mut perfect = ClipSebbs::new();
    for (clip, truth) in &gt.clips {
        let boxes = truth
            .events
            .iter()
            .map(|e| Sebb::new(&e.class_label, e.onset, e.offset, 1.0).unwrap())
            .collect();
        perfect.insert(clip.clone(), boxes);
    }
    let sebbs_path = tmp.path().join("perfect.tsv");
    dataio::write_sebbs(&perfect, &sebbs_path).unwrap();
    let dir = tmp.path().join("eval_perfect_psds");
    run_ok(&[
        "eval",
        "--sebbs",
        sebbs_path.to_str().unwrap(),
        "--gt",
        gt_path.to_str().unwrap(),
        "--durations",
        durations.to_str().unwrap(),
        "--metric",
        "psds1",
        "--output-dir",
        dir.to_str().unwrap(),
    ]);
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["value"].as_f64().unwrap(), 1.0);

    let empty_path = tmp.path().join("empty.tsv");
    dataio::write_sebbs(&ClipSebbs::new(), &empty_path).unwrap();
    let dir = tmp.path().join("eval_empty");
    run_ok(&[
        "eval",
        "--sebbs",
        empty_path.to_str().unwrap(),
        "--gt",
        gt_path.to_str().unwrap(),
        "--durations",
        durations.to_str().unwrap(),
        "--metric",
        "psds1",
        "--output-dir",
        dir.to_str().unwrap(),
    ]);
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["value"].as_f64().unwrap(), 0.0);
}

#[test]
fn eval_outputs_are_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let (scores, gt, durations) = make_corpus(tmp.path(), 6, "a,b", 4);
    let params = tmp.path().join("params.json");
    fs::write(
        &params,
        concat!(
            "{\"schema_version\":1,\"classes\":{",
            "\"a\":{\"tau\":0.48,\"gamma\":{\"value\":2.0,\"mode\":\"relative\"}},",
            "\"b\":{\"tau\":0.48,\"gamma\":{\"value\":2.0,\"mode\":\"relative\"}}}}"
        ),
    )
    .unwrap();
    let mut snapshots = Vec::new();
    for name in ["first", "second"] {
        let dir = tmp.path().join(name);
        run_ok(&[
            "eval",
            "--scores",
            scores.to_str().unwrap(),
            "--method",
            "csebb",
            "--params",
            params.to_str().unwrap(),
            "--gt",
            gt.to_str().unwrap(),
            "--durations",
            durations.to_str().unwrap(),
            "--metric",
            "nopsds1",
            "--output-dir",
            dir.to_str().unwrap(),
        ]);
        let mut snapshot = Vec::new();
        for file in [
            "report.json",
            "operating_points.tsv",
            "psd_roc.tsv",
            "mu_curve.tsv",
        ] {
            snapshot.push(fs::read(dir.join(file)).unwrap());
        }
        snapshots.push(snapshot);
    }
    assert_eq!(snapshots[0], snapshots[1]);
}
