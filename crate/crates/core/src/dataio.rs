//! On-disk formats: per-clip frame-score TSVs, ground-truth and duration
//! TSVs, SEBB and event TSVs, hyperparameter JSON, and plot-ready ROC
//! exports.
//!
//! All tabular files are TSV with a header row, "." decimal, UTF-8 and LF
//! line ends. Floats are written with 6 fixed decimals, so a read of a
//! written file reproduces the written values exactly and a second write
//! is byte-identical. Writers prepend a `# format: v1` comment; readers
//! skip any `#` comment lines.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::metrics::{OperatingPoint, PsdCurve};
use crate::model::{
    ClipEvents, ClipSebbs, ClipTracks, EvalConfig, Event, GroundTruth, HyperParams, ScoreTrack,
    Sebb,
};
use crate::Result;

/// Comment line identifying the file format generation.
pub const FORMAT_LINE: &str = "# format: v1";

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

fn parse_f64(path: &Path, line: usize, field: &str, what: &str) -> Result<f64> {
    field.trim().parse().map_err(|_| Error::Parse {
        path: path_str(path),
        line,
        msg: format!("malformed number in {what}: '{field}'"),
    })
}

fn tsv_reader(path: &Path) -> Result<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path_str(path), io),
        other => Error::Parse {
            path: path_str(path),
            line,
            msg: format!("{other:?}"),
        },
    }
}

fn record_line(record: &csv::StringRecord) -> usize {
    record.position().map_or(0, |p| p.line() as usize)
}

fn expect_fields(path: &Path, record: &csv::StringRecord, n: usize) -> Result<()> {
    if record.len() == n {
        Ok(())
    } else {
        Err(Error::Parse {
            path: path_str(path),
            line: record_line(record),
            msg: format!("expected {n} fields, found {}", record.len()),
        })
    }
}

/// A TSV writer that has already emitted the format comment.
fn tsv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::io(path_str(path), e))?;
    let mut buf = BufWriter::new(file);
    writeln!(buf, "{FORMAT_LINE}").map_err(|e| Error::io(path_str(path), e))?;
    Ok(csv::WriterBuilder::new().delimiter(b'\t').from_writer(buf))
}

fn finish_tsv(path: &Path, w: csv::Writer<BufWriter<File>>) -> Result<()> {
    let mut buf = w
        .into_inner()
        .map_err(|e| Error::io(path_str(path), std::io::Error::other(e.to_string())))?;
    buf.flush().map_err(|e| Error::io(path_str(path), e))
}

/// Reads a directory of per-clip score files. Every `.tsv` file becomes
/// one track, keyed by the filename stem; all files must agree on the
/// class columns, and each file's rows must chain seamlessly.
pub fn read_scores(dir: impl AsRef<Path>) -> Result<ClipTracks> {
    let dir = dir.as_ref();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(path_str(dir), e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "tsv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Data(format!(
            "no score files found in '{}'",
            dir.display()
        )));
    }

    let mut tracks = ClipTracks::new();
    let mut first: Option<(PathBuf, Vec<String>)> = None;
    for path in files {
        let clip_id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let track = read_score_file(&path, &clip_id)?;
        match &first {
            None => first = Some((path.clone(), track.class_labels.clone())),
            Some((first_path, labels)) => {
                if labels != &track.class_labels {
                    return Err(Error::Data(format!(
                        "score files disagree on class columns: '{}' vs '{}'",
                        first_path.display(),
                        path.display()
                    )));
                }
            }
        }
        tracks.insert(clip_id, track);
    }
    Ok(tracks)
}

fn read_score_file(path: &Path, clip_id: &str) -> Result<ScoreTrack> {
    let mut reader = tsv_reader(path)?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.len() < 3 || &headers[0] != "onset" || &headers[1] != "offset" {
        return Err(Error::Parse {
            path: path_str(path),
            line: 1,
            msg: "expected header 'onset', 'offset' and at least one class column".into(),
        });
    }
    let classes: Vec<String> = headers.iter().skip(2).map(str::to_string).collect();

    let mut boundaries: Vec<f64> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        expect_fields(path, &record, 2 + classes.len())?;
        let line = record_line(&record);
        let onset = parse_f64(path, line, &record[0], "column 'onset'")?;
        let offset = parse_f64(path, line, &record[1], "column 'offset'")?;
        match boundaries.last() {
            None => boundaries.push(onset),
            Some(&prev) if prev == onset => {}
            Some(&prev) => {
                return Err(Error::Parse {
                    path: path_str(path),
                    line,
                    msg: format!("non-contiguous frames: previous offset {prev}, onset {onset}"),
                })
            }
        }
        boundaries.push(offset);
        let mut row = Vec::with_capacity(classes.len());
        for (i, class) in classes.iter().enumerate() {
            row.push(parse_f64(path, line, &record[2 + i], &format!("column '{class}'"))?);
        }
        rows.push(row);
    }
    ScoreTrack::new(clip_id, classes, boundaries, rows)
}

/// Writes one `.tsv` score file per clip into `dir` (created on demand).
pub fn write_scores(tracks: &ClipTracks, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(path_str(dir), e))?;
    for (clip_id, track) in tracks {
        let path = dir.join(format!("{clip_id}.tsv"));
        let mut w = tsv_writer(&path)?;
        let mut header = vec!["onset".to_string(), "offset".to_string()];
        header.extend(track.class_labels.iter().cloned());
        w.write_record(&header).map_err(|e| csv_error(&path, e))?;
        for (n, row) in track.scores.iter().enumerate() {
            let mut fields = vec![fmt6(track.boundaries[n]), fmt6(track.boundaries[n + 1])];
            fields.extend(row.iter().map(|&v| fmt6(v)));
            w.write_record(&fields).map_err(|e| csv_error(&path, e))?;
        }
        finish_tsv(&path, w)?;
    }
    Ok(())
}

/// Counted repairs applied while reading ground truth.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GtWarnings {
    /// Events whose extent was cut back to `[0, duration]`.
    pub clipped: usize,
    /// Events dropped because nothing remained after clipping.
    pub dropped: usize,
}

/// Reads reference events plus the separate clip-duration table. Events
/// are clipped to `[0, duration]`; the only other accepted repair is
/// dropping events that vanish entirely, and both repairs are counted.
/// Clips listed in the duration table without any events are kept as
/// negative clips.
pub fn read_ground_truth(
    gt_path: impl AsRef<Path>,
    durations_path: impl AsRef<Path>,
) -> Result<(GroundTruth, GtWarnings)> {
    let durations_path = durations_path.as_ref();
    let mut durations: BTreeMap<String, f64> = BTreeMap::new();
    let mut reader = tsv_reader(durations_path)?;
    let headers = reader.headers().map_err(|e| csv_error(durations_path, e))?;
    if headers.len() != 2 || &headers[0] != "filename" || &headers[1] != "duration" {
        return Err(Error::Parse {
            path: path_str(durations_path),
            line: 1,
            msg: "expected header 'filename', 'duration'".into(),
        });
    }
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(durations_path, e))?;
        expect_fields(durations_path, &record, 2)?;
        let line = record_line(&record);
        let clip_id = record[0].to_string();
        let duration = parse_f64(durations_path, line, &record[1], "column 'duration'")?;
        if durations.insert(clip_id.clone(), duration).is_some() {
            return Err(Error::Parse {
                path: path_str(durations_path),
                line,
                msg: format!("duplicate duration entry for clip '{clip_id}'"),
            });
        }
    }

    let gt_path = gt_path.as_ref();
    let mut events: BTreeMap<String, Vec<Event>> = BTreeMap::new();
    let mut warnings = GtWarnings::default();
    let mut reader = tsv_reader(gt_path)?;
    let headers = reader.headers().map_err(|e| csv_error(gt_path, e))?;
    if headers.len() != 4
        || &headers[0] != "filename"
        || &headers[1] != "onset"
        || &headers[2] != "offset"
        || &headers[3] != "event_label"
    {
        return Err(Error::Parse {
            path: path_str(gt_path),
            line: 1,
            msg: "expected header 'filename', 'onset', 'offset', 'event_label'".into(),
        });
    }
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(gt_path, e))?;
        expect_fields(gt_path, &record, 4)?;
        let line = record_line(&record);
        let clip_id = record[0].to_string();
        let onset = parse_f64(gt_path, line, &record[1], "column 'onset'")?;
        let offset = parse_f64(gt_path, line, &record[2], "column 'offset'")?;
        let class = record[3].to_string();
        if !(offset > onset) {
            return Err(Error::Parse {
                path: path_str(gt_path),
                line,
                msg: format!("event offset {offset} not after onset {onset}"),
            });
        }
        let Some(&duration) = durations.get(&clip_id) else {
            return Err(Error::Parse {
                path: path_str(gt_path),
                line,
                msg: format!("clip '{clip_id}' has no duration entry"),
            });
        };
        let (clipped_on, clipped_off) = (onset.max(0.0), offset.min(duration));
        if clipped_on != onset || clipped_off != offset {
            warnings.clipped += 1;
        }
        if !(clipped_off > clipped_on) {
            warnings.dropped += 1;
            continue;
        }
        events
            .entry(clip_id)
            .or_default()
            .push(Event::new(class, clipped_on, clipped_off)?);
    }

    let mut gt = GroundTruth::new();
    for (clip_id, duration) in &durations {
        let clip_events = events.remove(clip_id).unwrap_or_default();
        gt.insert_clip(clip_id.clone(), *duration, clip_events)?;
    }
    Ok((gt, warnings))
}

/// Writes reference events and the clip-duration table, the inverse of
/// [`read_ground_truth`]. Events are sorted like [`write_events`] output.
pub fn write_ground_truth(
    gt: &GroundTruth,
    gt_path: impl AsRef<Path>,
    durations_path: impl AsRef<Path>,
) -> Result<()> {
    let durations_path = durations_path.as_ref();
    let mut w = tsv_writer(durations_path)?;
    w.write_record(["filename", "duration"])
        .map_err(|e| csv_error(durations_path, e))?;
    for (clip_id, clip) in &gt.clips {
        w.write_record([clip_id.as_str(), &fmt6(clip.duration)])
            .map_err(|e| csv_error(durations_path, e))?;
    }
    finish_tsv(durations_path, w)?;

    let events: ClipEvents = gt
        .clips
        .iter()
        .map(|(clip_id, clip)| (clip_id.clone(), clip.events.clone()))
        .collect();
    let gt_path = gt_path.as_ref();
    let mut w = tsv_writer(gt_path)?;
    w.write_record(["filename", "onset", "offset", "event_label"])
        .map_err(|e| csv_error(gt_path, e))?;
    for (clip_id, clip_events) in &events {
        let mut sorted: Vec<&Event> = clip_events.iter().collect();
        sorted.sort_by(|a, b| {
            a.onset
                .total_cmp(&b.onset)
                .then_with(|| a.class_label.cmp(&b.class_label))
                .then_with(|| a.offset.total_cmp(&b.offset))
        });
        for e in sorted {
            w.write_record([
                clip_id.as_str(),
                &fmt6(e.onset),
                &fmt6(e.offset),
                &e.class_label,
            ])
            .map_err(|err| csv_error(gt_path, err))?;
        }
    }
    finish_tsv(gt_path, w)
}

/// Writes SEBBs as a single TSV, rows sorted by
/// (filename, onset, event_label, offset, confidence).
pub fn write_sebbs(sebbs: &ClipSebbs, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = tsv_writer(path)?;
    w.write_record(["filename", "onset", "offset", "event_label", "confidence"])
        .map_err(|e| csv_error(path, e))?;
    for (clip_id, clip_sebbs) in sebbs {
        let mut sorted: Vec<&Sebb> = clip_sebbs.iter().collect();
        sorted.sort_by(|a, b| {
            a.onset
                .total_cmp(&b.onset)
                .then_with(|| a.class_label.cmp(&b.class_label))
                .then_with(|| a.offset.total_cmp(&b.offset))
                .then_with(|| a.confidence.total_cmp(&b.confidence))
        });
        for s in sorted {
            w.write_record([
                clip_id.as_str(),
                &fmt6(s.onset),
                &fmt6(s.offset),
                &s.class_label,
                &fmt6(s.confidence),
            ])
            .map_err(|e| csv_error(path, e))?;
        }
    }
    finish_tsv(path, w)
}

pub fn read_sebbs(path: impl AsRef<Path>) -> Result<ClipSebbs> {
    let path = path.as_ref();
    let mut reader = tsv_reader(path)?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?;
    if headers.len() != 5 || &headers[0] != "filename" {
        return Err(Error::Parse {
            path: path_str(path),
            line: 1,
            msg: "expected header 'filename', 'onset', 'offset', 'event_label', 'confidence'"
                .into(),
        });
    }
    let mut out = ClipSebbs::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        expect_fields(path, &record, 5)?;
        let line = record_line(&record);
        let onset = parse_f64(path, line, &record[1], "column 'onset'")?;
        let offset = parse_f64(path, line, &record[2], "column 'offset'")?;
        let confidence = parse_f64(path, line, &record[4], "column 'confidence'")?;
        let sebb = Sebb::new(&record[3], onset, offset, confidence).map_err(|e| Error::Parse {
            path: path_str(path),
            line,
            msg: e.to_string(),
        })?;
        out.entry(record[0].to_string()).or_default().push(sebb);
    }
    Ok(out)
}

/// Writes final events as a single TSV, rows sorted by
/// (filename, onset, event_label, offset).
pub fn write_events(events: &ClipEvents, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = tsv_writer(path)?;
    w.write_record(["filename", "onset", "offset", "event_label"])
        .map_err(|e| csv_error(path, e))?;
    for (clip_id, clip_events) in events {
        let mut sorted: Vec<&Event> = clip_events.iter().collect();
        sorted.sort_by(|a, b| {
            a.onset
                .total_cmp(&b.onset)
                .then_with(|| a.class_label.cmp(&b.class_label))
                .then_with(|| a.offset.total_cmp(&b.offset))
        });
        for e in sorted {
            w.write_record([
                clip_id.as_str(),
                &fmt6(e.onset),
                &fmt6(e.offset),
                &e.class_label,
            ])
            .map_err(|err| csv_error(path, err))?;
        }
    }
    finish_tsv(path, w)
}

pub fn read_events(path: impl AsRef<Path>) -> Result<ClipEvents> {
    let path = path.as_ref();
    let mut reader = tsv_reader(path)?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?;
    if headers.len() != 4 || &headers[0] != "filename" {
        return Err(Error::Parse {
            path: path_str(path),
            line: 1,
            msg: "expected header 'filename', 'onset', 'offset', 'event_label'".into(),
        });
    }
    let mut out = ClipEvents::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        expect_fields(path, &record, 4)?;
        let line = record_line(&record);
        let onset = parse_f64(path, line, &record[1], "column 'onset'")?;
        let offset = parse_f64(path, line, &record[2], "column 'offset'")?;
        let event = Event::new(&record[3], onset, offset).map_err(|e| Error::Parse {
            path: path_str(path),
            line,
            msg: e.to_string(),
        })?;
        out.entry(record[0].to_string()).or_default().push(event);
    }
    Ok(out)
}

const PARAMS_SCHEMA_VERSION: u32 = 1;

fn default_schema_version() -> u32 {
    PARAMS_SCHEMA_VERSION
}

#[derive(Serialize, Deserialize)]
struct ParamsFile {
    #[serde(default = "default_schema_version")]
    schema_version: u32,
    #[serde(flatten)]
    params: HyperParams,
}

/// Writes hyperparameters as versioned, pretty-printed JSON.
pub fn write_params(params: &HyperParams, path: impl AsRef<Path>) -> Result<()> {
    write_json(
        &ParamsFile {
            schema_version: PARAMS_SCHEMA_VERSION,
            params: params.clone(),
        },
        path,
    )
}

pub fn read_params(path: impl AsRef<Path>) -> Result<HyperParams> {
    let file: ParamsFile = read_json(&path)?;
    if file.schema_version != PARAMS_SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "'{}': unsupported schema_version {} (this build reads version {})",
            path.as_ref().display(),
            file.schema_version,
            PARAMS_SCHEMA_VERSION
        )));
    }
    file.params.validate()?;
    Ok(file.params)
}

/// Pretty-prints any serializable value as JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path_str(path), e))?;
    let mut buf = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut buf, value).map_err(|e| Error::Parse {
        path: path_str(path),
        line: e.line(),
        msg: e.to_string(),
    })?;
    buf.write_all(b"\n")
        .and_then(|()| buf.flush())
        .map_err(|e| Error::io(path_str(path), e))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path_str(path), e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
        path: path_str(path),
        line: e.line(),
        msg: e.to_string(),
    })
}

/// Writes per-class rates of every operating point:
/// columns threshold, class, efpr, etpr.
pub fn write_operating_points(points: &[OperatingPoint], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = tsv_writer(path)?;
    w.write_record(["threshold", "class", "efpr", "etpr"])
        .map_err(|e| csv_error(path, e))?;
    for point in points {
        for (class, rates) in &point.classes {
            w.write_record([
                &fmt6(point.threshold),
                class.as_str(),
                &fmt6(rates.efpr),
                &fmt6(rates.etpr),
            ])
            .map_err(|e| csv_error(path, e))?;
        }
    }
    finish_tsv(path, w)
}

/// Writes the per-class PSD-ROC staircases: columns class, efpr, etpr.
/// The combined curve goes through [`write_mu_curve`].
pub fn write_psd_roc(curve: &PsdCurve, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = tsv_writer(path)?;
    w.write_record(["class", "efpr", "etpr"])
        .map_err(|e| csv_error(path, e))?;
    for class in &curve.classes {
        for &(efpr, etpr) in &class.steps {
            w.write_record([class.class_label.as_str(), &fmt6(efpr), &fmt6(etpr)])
                .map_err(|e| csv_error(path, e))?;
        }
    }
    finish_tsv(path, w)
}

/// Writes the combined staircase mu(e): columns e, mu.
pub fn write_mu_curve(curve: &PsdCurve, cfg: &EvalConfig, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = tsv_writer(path)?;
    w.write_record(["e", "mu"]).map_err(|e| csv_error(path, e))?;
    for (e, mu) in curve.mu_steps(cfg) {
        w.write_record([&fmt6(e), &fmt6(mu)])
            .map_err(|err| csv_error(path, err))?;
    }
    finish_tsv(path, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ClassParams;
    use tempfile::TempDir;

    fn write_file(dir: &Path, name: &str, content: &str) -> PathBuf {
        let path = dir.join(name);
        let mut f = File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn score_directory_round_trips_exactly() {
        let tmp = TempDir::new().unwrap();
        let track = ScoreTrack::new(
            "clip_a",
            vec!["dog".into(), "rain".into()],
            vec![0.0, 0.5, 1.0, 1.5],
            vec![vec![0.1, 0.9], vec![0.2, 0.8], vec![0.1 + 0.2, 0.25]],
        )
        .unwrap();
        let mut tracks = ClipTracks::new();
        tracks.insert("clip_a".into(), track);
        let dir = tmp.path().join("scores");
        write_scores(&tracks, &dir).unwrap();

        let read = read_scores(&dir).unwrap();
        assert_eq!(read.len(), 1);
        let t = &read["clip_a"];
        assert_eq!(t.class_labels, vec!["dog".to_string(), "rain".to_string()]);
        assert_eq!(t.boundaries, vec![0.0, 0.5, 1.0, 1.5]);
        // 0.1 + 0.2 prints as 0.300000 and reads back as exactly 0.3
        assert_eq!(t.scores[2][0], 0.3);

        // a second write of what was read is byte-identical
        let first = fs::read(dir.join("clip_a.tsv")).unwrap();
        let dir2 = tmp.path().join("scores2");
        write_scores(&read, &dir2).unwrap();
        assert_eq!(first, fs::read(dir2.join("clip_a.tsv")).unwrap());
    }

    #[test]
    fn non_chaining_rows_are_rejected() {
        let tmp = TempDir::new().unwrap();
        write_file(
            tmp.path(),
            "c.tsv",
            "onset\toffset\ta\n0.0\t1.0\t0.2\n1.5\t2.0\t0.8\n",
        );
        let err = read_scores(tmp.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("non-contiguous frames"), "{msg}");
        assert!(msg.contains("c.tsv:3"), "{msg}");
    }

    #[test]
    fn malformed_numbers_name_file_and_line() {
        let tmp = TempDir::new().unwrap();
        write_file(tmp.path(), "c.tsv", "onset\toffset\ta\n0.0\tx\t0.2\n");
        let msg = read_scores(tmp.path()).unwrap_err().to_string();
        assert!(msg.contains("malformed number"), "{msg}");
        assert!(msg.contains(":2"), "{msg}");
    }

    #[test]
    fn empty_directory_is_a_data_error() {
        let tmp = TempDir::new().unwrap();
        let err = read_scores(tmp.path()).unwrap_err();
        assert!(err.to_string().contains("no score files found"));
        assert!(!err.is_config());
    }

    #[test]
    fn disagreeing_class_columns_are_rejected() {
        let tmp = TempDir::new().unwrap();
        write_file(tmp.path(), "a.tsv", "onset\toffset\tdog\n0.0\t1.0\t0.2\n");
        write_file(tmp.path(), "b.tsv", "onset\toffset\tcat\n0.0\t1.0\t0.2\n");
        let msg = read_scores(tmp.path()).unwrap_err().to_string();
        assert!(msg.contains("disagree on class columns"), "{msg}");
    }

    #[test]
    fn comment_lines_are_tolerated_everywhere() {
        let tmp = TempDir::new().unwrap();
        write_file(
            tmp.path(),
            "c.tsv",
            "# format: v1\n# extra note\nonset\toffset\ta\n0.0\t1.0\t0.2\n# mid comment\n1.0\t2.0\t0.8\n",
        );
        let tracks = read_scores(tmp.path()).unwrap();
        assert_eq!(tracks["c"].n_frames(), 2);
    }

    #[test]
    fn ground_truth_clips_and_drops_with_counts() {
        let tmp = TempDir::new().unwrap();
        let durations = write_file(
            tmp.path(),
            "durations.tsv",
            "filename\tduration\nclip_a\t10.0\nclip_b\t5.0\n",
        );
        let gt_file = write_file(
            tmp.path(),
            "gt.tsv",
            "filename\tonset\toffset\tevent_label\n\
             clip_a\t-1.0\t2.0\tdog\n\
             clip_a\t9.0\t12.0\tdog\n\
             clip_a\t11.0\t12.0\tcat\n",
        );
        let (gt, warnings) = read_ground_truth(&gt_file, &durations).unwrap();
        // (-1,2) clipped to (0,2); (9,12) clipped to (9,10); (11,12) gone
        assert_eq!(warnings, GtWarnings { clipped: 3, dropped: 1 });
        let events = &gt.clips["clip_a"].events;
        assert_eq!(events.len(), 2);
        assert_eq!((events[0].onset, events[0].offset), (0.0, 2.0));
        assert_eq!((events[1].onset, events[1].offset), (9.0, 10.0));
        // clip_b has no events but still counts as annotated audio
        assert!(gt.clips["clip_b"].events.is_empty());
        assert_eq!(gt.total_duration_hours(), 15.0 / 3600.0);
    }

    #[test]
    fn ground_truth_write_read_is_identity() {
        let tmp = TempDir::new().unwrap();
        let mut gt = GroundTruth::new();
        gt.insert_clip(
            "clip_a",
            10.0,
            vec![
                Event::new("rain", 3.0, 4.25).unwrap(),
                Event::new("dog", 0.5, 1.2).unwrap(),
            ],
        )
        .unwrap();
        gt.insert_clip("clip_b", 5.0, vec![]).unwrap();
        let gt_path = tmp.path().join("gt.tsv");
        let durations_path = tmp.path().join("durations.tsv");
        write_ground_truth(&gt, &gt_path, &durations_path).unwrap();
        let (read, warnings) = read_ground_truth(&gt_path, &durations_path).unwrap();
        assert_eq!(warnings, GtWarnings::default());
        // events come back sorted by onset
        assert_eq!(read.clips["clip_a"].events[0].class_label, "dog");
        assert_eq!(read.clips["clip_a"].events[1].class_label, "rain");
        assert_eq!(read.clips["clip_b"], gt.clips["clip_b"]);
        assert_eq!(read.total_duration_hours(), gt.total_duration_hours());
    }

    #[test]
    fn inverted_events_name_the_line() {
        let tmp = TempDir::new().unwrap();
        let durations = write_file(tmp.path(), "d.tsv", "filename\tduration\nclip\t10.0\n");
        let gt_file = write_file(
            tmp.path(),
            "gt.tsv",
            "filename\tonset\toffset\tevent_label\nclip\t3.0\t3.0\tdog\n",
        );
        let msg = read_ground_truth(&gt_file, &durations).unwrap_err().to_string();
        assert!(msg.contains("gt.tsv:2"), "{msg}");
        assert!(msg.contains("not after onset"), "{msg}");
    }

    #[test]
    fn events_without_duration_entry_are_rejected() {
        let tmp = TempDir::new().unwrap();
        let durations = write_file(tmp.path(), "d.tsv", "filename\tduration\nclip\t10.0\n");
        let gt_file = write_file(
            tmp.path(),
            "gt.tsv",
            "filename\tonset\toffset\tevent_label\nother\t1.0\t2.0\tdog\n",
        );
        let msg = read_ground_truth(&gt_file, &durations).unwrap_err().to_string();
        assert!(msg.contains("no duration entry"), "{msg}");
    }

    #[test]
    fn duplicate_durations_are_rejected() {
        let tmp = TempDir::new().unwrap();
        let durations = write_file(
            tmp.path(),
            "d.tsv",
            "filename\tduration\nclip\t10.0\nclip\t9.0\n",
        );
        let gt_file = write_file(tmp.path(), "gt.tsv", "filename\tonset\toffset\tevent_label\n");
        let msg = read_ground_truth(&gt_file, &durations).unwrap_err().to_string();
        assert!(msg.contains("duplicate duration entry"), "{msg}");
    }

    #[test]
    fn sebbs_round_trip_sorted_and_grouped() {
        let tmp = TempDir::new().unwrap();
        let mut sebbs = ClipSebbs::new();
        sebbs.insert(
            "z_clip".into(),
            vec![Sebb::new("dog", 1.0, 2.0, 0.5).unwrap()],
        );
        sebbs.insert(
            "a_clip".into(),
            vec![
                Sebb::new("rain", 3.0, 4.0, 0.25).unwrap(),
                Sebb::new("dog", 0.5, 1.5, 0.75).unwrap(),
                Sebb::new("dog", 0.5, 1.0, 0.9).unwrap(),
            ],
        );
        let path = tmp.path().join("sebbs.tsv");
        write_sebbs(&sebbs, &path).unwrap();

        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# format: v1");
        assert_eq!(lines[1], "filename\tonset\toffset\tevent_label\tconfidence");
        assert_eq!(lines[2], "a_clip\t0.500000\t1.000000\tdog\t0.900000");
        assert_eq!(lines[3], "a_clip\t0.500000\t1.500000\tdog\t0.750000");
        assert_eq!(lines[4], "a_clip\t3.000000\t4.000000\train\t0.250000");
        assert_eq!(lines[5], "z_clip\t1.000000\t2.000000\tdog\t0.500000");

        let read = read_sebbs(&path).unwrap();
        assert_eq!(read["z_clip"], sebbs["z_clip"]);
        assert_eq!(read["a_clip"].len(), 3);
        // second write is byte-identical
        let path2 = tmp.path().join("sebbs2.tsv");
        write_sebbs(&read, &path2).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn empty_sebb_file_round_trips() {
        let tmp = TempDir::new().unwrap();
        let path = tmp.path().join("empty.tsv");
        write_sebbs(&ClipSebbs::new(), &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "# format: v1\nfilename\tonset\toffset\tevent_label\tconfidence\n");
        assert!(read_sebbs(&path).unwrap().is_empty());
    }

    #[test]
    fn events_round_trip() {
        let tmp = TempDir::new().unwrap();
        let mut events = ClipEvents::new();
        events.insert(
            "clip".into(),
            vec![
                Event::new("dog", 2.0, 3.0).unwrap(),
                Event::new("cat", 0.5, 1.0).unwrap(),
            ],
        );
        let path = tmp.path().join("events.tsv");
        write_events(&events, &path).unwrap();
        let read = read_events(&path).unwrap();
        // reading sorts by onset within the clip
        assert_eq!(read["clip"][0], Event::new("cat", 0.5, 1.0).unwrap());
        assert_eq!(read["clip"][1], Event::new("dog", 2.0, 3.0).unwrap());
    }

    #[test]
    fn params_json_round_trips_with_version() {
        let tmp = TempDir::new().unwrap();
        let mut params = HyperParams::new();
        params.classes.insert(
            "dog".into(),
            ClassParams {
                medfilt_len: Some(0.4),
                lambda_nopsds: Some(0.25),
                lambda_f: Some(0.5),
                ..ClassParams::default()
            },
        );
        let path = tmp.path().join("params.json");
        write_params(&params, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"schema_version\": 1"), "{text}");
        let read = read_params(&path).unwrap();
        assert_eq!(read, params);
    }

    #[test]
    fn unsupported_params_version_is_a_config_error() {
        let tmp = TempDir::new().unwrap();
        let path = write_file(
            tmp.path(),
            "params.json",
            "{\"schema_version\": 2, \"classes\": {}}",
        );
        let err = read_params(&path).unwrap_err();
        assert!(err.is_config());
        assert!(err.to_string().contains("schema_version 2"));
    }

    #[test]
    fn params_without_version_default_to_current() {
        let tmp = TempDir::new().unwrap();
        let path = write_file(tmp.path(), "params.json", "{\"classes\": {}}");
        assert_eq!(read_params(&path).unwrap(), HyperParams::new());
    }
}
