//! Golden-file checks: the fixture files under `tests/fixtures/` document
//! the on-disk formats byte-exactly. Reading them yields pinned values,
//! and writing those values back reproduces the fixture bytes, so any
//! format drift fails here before it breaks interoperability.

use std::fs;
use std::path::{Path, PathBuf};

use sebbs::dataio;
use sebbs::model::{ClassParams, Gamma};
use sebbs::ClipSebbs;
use tempfile::TempDir;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn assert_same_bytes(produced: &Path, golden: &Path) {
    let got = fs::read(produced).unwrap();
    let want = fs::read(golden).unwrap();
    assert_eq!(
        got,
        want,
        "'{}' differs from golden '{}'",
        produced.display(),
        golden.display()
    );
}

#[test]
fn score_fixtures_round_trip_byte_identically() {
    let tracks = dataio::read_scores(fixtures().join("scores")).unwrap();
    assert_eq!(tracks.len(), 2);

    let a = &tracks["clip_a"];
    assert_eq!(a.class_labels, vec!["dog".to_string(), "rain".to_string()]);
    assert_eq!(a.boundaries, vec![0.0, 0.5, 1.0, 1.5]);
    assert_eq!(a.scores[1], vec![0.3, 0.8]);
    let b = &tracks["clip_b"];
    assert_eq!(b.boundaries, vec![0.0, 0.5, 1.0]);
    assert_eq!(b.scores[1], vec![0.95, 1.0]);

    let tmp = TempDir::new().unwrap();
    dataio::write_scores(&tracks, tmp.path()).unwrap();
    for clip in ["clip_a", "clip_b"] {
        assert_same_bytes(
            &tmp.path().join(format!("{clip}.tsv")),
            &fixtures().join(format!("scores/{clip}.tsv")),
        );
    }
}

#[test]
fn ground_truth_fixtures_round_trip_byte_identically() {
    let (gt, warnings) = dataio::read_ground_truth(
        fixtures().join("ground_truth.tsv"),
        fixtures().join("durations.tsv"),
    )
    .unwrap();
    assert_eq!(warnings, dataio::GtWarnings::default());
    assert_eq!(gt.clips.len(), 2);
    assert_eq!(gt.clips["clip_a"].duration, 1.5);
    assert_eq!(gt.clips["clip_a"].events.len(), 2);
    let rain = &gt.clips["clip_a"].events[0];
    assert_eq!(
        (rain.class_label.as_str(), rain.onset, rain.offset),
        ("rain", 0.4, 1.1)
    );
    assert_eq!(gt.n_events("dog"), 2);

    let tmp = TempDir::new().unwrap();
    let gt_path = tmp.path().join("ground_truth.tsv");
    let durations_path = tmp.path().join("durations.tsv");
    dataio::write_ground_truth(&gt, &gt_path, &durations_path).unwrap();
    assert_same_bytes(&gt_path, &fixtures().join("ground_truth.tsv"));
    assert_same_bytes(&durations_path, &fixtures().join("durations.tsv"));
}

#[test]
fn sebb_fixtures_round_trip_byte_identically() {
    let sebbs = dataio::read_sebbs(fixtures().join("sebbs.tsv")).unwrap();
    assert_eq!(sebbs.len(), 2);
    let first = &sebbs["clip_a"][0];
    assert_eq!(first.class_label, "rain");
    assert_eq!((first.onset, first.offset, first.confidence), (0.4, 1.05, 0.85));
    assert_eq!(sebbs["clip_b"][0].confidence, 0.975);

    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("sebbs.tsv");
    dataio::write_sebbs(&sebbs, &path).unwrap();
    assert_same_bytes(&path, &fixtures().join("sebbs.tsv"));
}

#[test]
fn event_fixtures_round_trip_byte_identically() {
    let events = dataio::read_events(fixtures().join("events.tsv")).unwrap();
    assert_eq!(events["clip_a"].len(), 2);
    assert_eq!(events["clip_b"][0].class_label, "dog");

    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("events.tsv");
    dataio::write_events(&events, &path).unwrap();
    assert_same_bytes(&path, &fixtures().join("events.tsv"));
}

#[test]
fn params_fixture_round_trips_byte_identically() {
    let params = dataio::read_params(fixtures().join("params.json")).unwrap();
    assert_eq!(
        params.get("dog"),
        Some(&ClassParams {
            medfilt_len: Some(0.4),
            lambda_nopsds: Some(0.25),
            lambda_f: Some(0.5),
            ..ClassParams::default()
        })
    );
    assert_eq!(
        params.get("rain"),
        Some(&ClassParams {
            tau: Some(0.48),
            gamma: Some(Gamma::relative(2.0)),
            lambda_nopsds: Some(0.1),
            lambda_f: Some(0.35),
            ..ClassParams::default()
        })
    );

    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("params.json");
    dataio::write_params(&params, &path).unwrap();
    assert_same_bytes(&path, &fixtures().join("params.json"));
}

#[test]
fn detections_against_fixture_truth_evaluate_cleanly() {
    // the fixture SEBBs were built to pair off against the fixture truth:
    // every detection passes both tolerance criteria at threshold 0
    let sebbs: ClipSebbs = dataio::read_sebbs(fixtures().join("sebbs.tsv")).unwrap();
    let (gt, _) = dataio::read_ground_truth(
        fixtures().join("ground_truth.tsv"),
        fixtures().join("durations.tsv"),
    )
    .unwrap();
    let cfg = sebbs::EvalConfig::default();
    let input = sebbs::metrics::DetectionInput::Sebbs(&sebbs);
    let points = sebbs::metrics::operating_points(&input, &gt, &cfg, &[0.0]).unwrap();
    for (class, rates) in &points[0].classes {
        assert_eq!(rates.counts.fp, 0, "class {class}");
        assert_eq!(rates.counts.tp, rates.counts.n_gt, "class {class}");
    }
}
