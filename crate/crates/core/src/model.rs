//! Shared data model: score tracks, events, SEBBs, ground truth,
//! evaluation constants and per-class hyperparameters.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Detected events per clip, keyed by clip id.
pub type ClipEvents = BTreeMap<String, Vec<Event>>;
/// SEBB lists per clip, keyed by clip id.
pub type ClipSebbs = BTreeMap<String, Vec<Sebb>>;
/// Score tracks per clip, keyed by clip id.
pub type ClipTracks = BTreeMap<String, ScoreTrack>;

/// Frame-level classifier scores for one clip.
///
/// `boundaries` holds the N+1 frame edges in seconds; `scores[n][c]` is the
/// posterior of class `c` over `[boundaries[n], boundaries[n+1])`. Frames
/// chain without holes by construction; widths need not be uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTrack {
    pub clip_id: String,
    pub class_labels: Vec<String>,
    pub boundaries: Vec<f64>,
    pub scores: Vec<Vec<f64>>,
}

impl ScoreTrack {
    /// Builds a track, checking every structural invariant. All violations
    /// are reported together rather than one at a time.
    pub fn new(
        clip_id: impl Into<String>,
        class_labels: Vec<String>,
        boundaries: Vec<f64>,
        scores: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let clip_id = clip_id.into();
        let mut violations = Vec::new();

        if class_labels.is_empty() {
            violations.push("no class labels".to_string());
        }
        for (i, a) in class_labels.iter().enumerate() {
            if class_labels[..i].contains(a) {
                violations.push(format!("duplicate class label '{a}'"));
            }
        }
        if boundaries.len() < 2 {
            violations.push(format!(
                "need at least 2 frame boundaries, got {}",
                boundaries.len()
            ));
        }
        if let Some(&first) = boundaries.first() {
            if !(first >= 0.0) {
                violations.push(format!("first boundary {first} is negative or NaN"));
            }
        }
        for w in boundaries.windows(2) {
            if !(w[1] > w[0]) {
                violations.push(format!(
                    "boundaries not strictly increasing at {} -> {}",
                    w[0], w[1]
                ));
            }
        }
        if boundaries.len() >= 2 && scores.len() != boundaries.len() - 1 {
            violations.push(format!(
                "{} score rows for {} frames",
                scores.len(),
                boundaries.len() - 1
            ));
        }
        for (n, row) in scores.iter().enumerate() {
            if row.len() != class_labels.len() {
                violations.push(format!(
                    "row {n} has {} values for {} classes",
                    row.len(),
                    class_labels.len()
                ));
            }
            for (c, &s) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&s) {
                    violations.push(format!("score [{n}][{c}] = {s} outside [0, 1]"));
                }
            }
        }

        if violations.is_empty() {
            Ok(ScoreTrack {
                clip_id,
                class_labels,
                boundaries,
                scores,
            })
        } else {
            Err(Error::InvalidTrack {
                clip_id,
                violations,
            })
        }
    }

    pub fn n_frames(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn n_classes(&self) -> usize {
        self.class_labels.len()
    }

    pub fn class_index(&self, class: &str) -> Option<usize> {
        self.class_labels.iter().position(|l| l == class)
    }

    pub(crate) fn require_class(&self, class: &str) -> Result<usize> {
        self.class_index(class).ok_or_else(|| Error::UnknownClass {
            class: class.to_string(),
            clip_id: self.clip_id.clone(),
        })
    }

    /// Clip extent covered by the frames.
    pub fn duration(&self) -> f64 {
        self.boundaries[self.boundaries.len() - 1] - self.boundaries[0]
    }

    /// One score column as a contiguous vector.
    pub fn class_column(&self, class_idx: usize) -> Vec<f64> {
        self.scores.iter().map(|row| row[class_idx]).collect()
    }

    /// Median of the frame widths. Used to translate filter lengths in
    /// seconds into window sizes in frames.
    pub fn median_frame_width(&self) -> f64 {
        let mut widths: Vec<f64> = self.boundaries.windows(2).map(|w| w[1] - w[0]).collect();
        widths.sort_by(f64::total_cmp);
        let n = widths.len();
        if n % 2 == 1 {
            widths[n / 2]
        } else {
            0.5 * (widths[n / 2 - 1] + widths[n / 2])
        }
    }
}

/// A detected or annotated event: half-open extent `[onset, offset)` of one
/// class. `onset < offset` always holds for instances built by this crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub class_label: String,
    pub onset: f64,
    pub offset: f64,
}

impl Event {
    pub fn new(class_label: impl Into<String>, onset: f64, offset: f64) -> Result<Self> {
        if !(onset < offset) || !onset.is_finite() || !offset.is_finite() {
            return Err(Error::Config(format!(
                "event must satisfy onset < offset, got [{onset}, {offset})"
            )));
        }
        Ok(Event {
            class_label: class_label.into(),
            onset,
            offset,
        })
    }

    pub fn length(&self) -> f64 {
        self.offset - self.onset
    }

    /// Length of the overlap with another interval (same-clip semantics;
    /// intervals are half-open, so touching events do not overlap).
    pub fn intersection(&self, onset: f64, offset: f64) -> f64 {
        (self.offset.min(offset) - self.onset.max(onset)).max(0.0)
    }
}

/// A sound event bounding box: an event plus a confidence in `[0, 1]`.
/// The extent is fixed at construction; selecting boxes by confidence is
/// what turns a SEBB list into a detection list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sebb {
    pub class_label: String,
    pub onset: f64,
    pub offset: f64,
    pub confidence: f64,
}

impl Sebb {
    pub fn new(
        class_label: impl Into<String>,
        onset: f64,
        offset: f64,
        confidence: f64,
    ) -> Result<Self> {
        if !(onset < offset) || !onset.is_finite() || !offset.is_finite() {
            return Err(Error::Config(format!(
                "SEBB must satisfy onset < offset, got [{onset}, {offset})"
            )));
        }
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::Config(format!(
                "SEBB confidence {confidence} outside [0, 1]"
            )));
        }
        Ok(Sebb {
            class_label: class_label.into(),
            onset,
            offset,
            confidence,
        })
    }

    pub fn length(&self) -> f64 {
        self.offset - self.onset
    }

    pub fn to_event(&self) -> Event {
        Event {
            class_label: self.class_label.clone(),
            onset: self.onset,
            offset: self.offset,
        }
    }
}

/// Annotated events and duration of one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipTruth {
    pub duration: f64,
    pub events: Vec<Event>,
}

/// Reference annotations for a corpus, keyed by clip id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub clips: BTreeMap<String, ClipTruth>,
}

impl GroundTruth {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a clip. Events must lie inside `[0, duration]`.
    pub fn insert_clip(
        &mut self,
        clip_id: impl Into<String>,
        duration: f64,
        events: Vec<Event>,
    ) -> Result<()> {
        let clip_id = clip_id.into();
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::Data(format!(
                "clip '{clip_id}': duration {duration} must be positive"
            )));
        }
        for e in &events {
            if e.onset < 0.0 || e.offset > duration {
                return Err(Error::Data(format!(
                    "clip '{clip_id}': event [{}, {}) outside [0, {duration}]",
                    e.onset, e.offset
                )));
            }
        }
        self.clips.insert(clip_id, ClipTruth { duration, events });
        Ok(())
    }

    /// Total annotated audio in hours; the denominator of eFPR.
    pub fn total_duration_hours(&self) -> f64 {
        self.clips.values().map(|c| c.duration).sum::<f64>() / 3600.0
    }

    /// Number of reference events of one class over the whole corpus.
    pub fn n_events(&self, class: &str) -> usize {
        self.clips
            .values()
            .flat_map(|c| &c.events)
            .filter(|e| e.class_label == class)
            .count()
    }

    /// Sorted union of class labels over all annotations.
    pub fn class_labels(&self) -> Vec<String> {
        let mut set: Vec<String> = Vec::new();
        for e in self.clips.values().flat_map(|c| &c.events) {
            if !set.contains(&e.class_label) {
                set.push(e.class_label.clone());
            }
        }
        set.sort();
        set
    }

    /// Restriction to a subset of clips (used by fold evaluation).
    pub fn subset(&self, clip_ids: &[String]) -> GroundTruth {
        let clips = clip_ids
            .iter()
            .filter_map(|id| self.clips.get(id).map(|c| (id.clone(), c.clone())))
            .collect();
        GroundTruth { clips }
    }
}

/// Which standard deviation enters the across-class penalty of PSDS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdMode {
    /// Divide by the number of classes (the default).
    Population,
    /// Divide by classes minus one.
    Sample,
}

/// Constants of the evaluation protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Detection tolerance: required fraction of a detection covered by
    /// same-class reference events.
    pub rho_dtc: f64,
    /// Ground-truth tolerance: required fraction of a reference event
    /// covered by accepted detections.
    pub rho_gtc: f64,
    /// Weight of the across-class standard deviation penalty.
    pub alpha_st: f64,
    /// Upper integration limit of the PSD-ROC in FP per hour.
    pub e_max: f64,
    /// Allowed onset deviation in seconds for collar-based matching.
    pub onset_collar: f64,
    /// Minimum allowed offset deviation in seconds.
    pub offset_collar_floor: f64,
    /// Offset deviation as a fraction of the reference event length.
    pub offset_collar_frac: f64,
    pub std_mode: StdMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            rho_dtc: 0.7,
            rho_gtc: 0.7,
            alpha_st: 1.0,
            e_max: 100.0,
            onset_collar: 0.2,
            offset_collar_floor: 0.2,
            offset_collar_frac: 0.2,
            std_mode: StdMode::Population,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        for (name, v) in [("rho_dtc", self.rho_dtc), ("rho_gtc", self.rho_gtc)] {
            if !(0.0 < v && v <= 1.0) {
                bad.push(format!("{name} = {v} outside (0, 1]"));
            }
        }
        if !(self.e_max > 0.0) {
            bad.push(format!("e_max = {} must be positive", self.e_max));
        }
        if !(self.alpha_st >= 0.0) {
            bad.push(format!("alpha_st = {} must be >= 0", self.alpha_st));
        }
        for (name, v) in [
            ("onset_collar", self.onset_collar),
            ("offset_collar_floor", self.offset_collar_floor),
            ("offset_collar_frac", self.offset_collar_frac),
        ] {
            if !(v >= 0.0) {
                bad.push(format!("{name} = {v} must be >= 0"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }

    /// Offset collar for a reference event of the given length.
    pub fn offset_collar(&self, gt_length: f64) -> f64 {
        self.offset_collar_floor
            .max(self.offset_collar_frac * gt_length)
    }
}

/// Gap-merge criterion mode for change-point SEBBs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaMode {
    /// Merge when neighbour maxima exceed the gap minimum by less than gamma.
    Absolute,
    /// Merge when neighbour maxima stay below gamma times the gap minimum.
    Relative,
}

/// Gap-merge threshold with its interpretation mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gamma {
    pub value: f64,
    pub mode: GammaMode,
}

impl Gamma {
    pub fn absolute(value: f64) -> Self {
        Gamma {
            value,
            mode: GammaMode::Absolute,
        }
    }

    pub fn relative(value: f64) -> Self {
        Gamma {
            value,
            mode: GammaMode::Relative,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            GammaMode::Absolute if self.value > 0.0 => Ok(()),
            GammaMode::Relative if self.value > 1.0 => Ok(()),
            GammaMode::Absolute => Err(Error::Config(format!(
                "absolute gamma {} must be > 0",
                self.value
            ))),
            GammaMode::Relative => Err(Error::Config(format!(
                "relative gamma {} must be > 1",
                self.value
            ))),
        }
    }
}

/// Tuned values for one class. Fields are optional because each
/// conversion method and metric uses its own subset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    /// Median filter length in seconds (0 disables filtering).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub medfilt_len: Option<f64>,
    /// Frame threshold fixing tSEBB extents.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_ext: Option<f64>,
    /// Change-detection filter length in seconds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// Gap-merge threshold.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Gamma>,
    /// Confidence threshold splitting tSEBBs from cSEBB fill-ins.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_hyb: Option<f64>,
    /// Lower decision-threshold bound for the non-optimistic PSD-ROC.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_nopsds: Option<f64>,
    /// Decision threshold tuned for collar-based F1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_f: Option<f64>,
}

/// Per-class hyperparameters, keyed by class label.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub classes: BTreeMap<String, ClassParams>,
}

impl HyperParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, class: &str) -> Option<&ClassParams> {
        self.classes.get(class)
    }

    pub(crate) fn require(&self, class: &str, param: &str) -> Result<f64> {
        let p = self
            .classes
            .get(class)
            .ok_or_else(|| Error::MissingParam {
                class: class.to_string(),
                param: param.to_string(),
            })?;
        let v = match param {
            "medfilt_len" => p.medfilt_len,
            "lambda_ext" => p.lambda_ext,
            "tau" => p.tau,
            "lambda_hyb" => p.lambda_hyb,
            "lambda_nopsds" => p.lambda_nopsds,
            "lambda_f" => p.lambda_f,
            other => panic!("unknown parameter name '{other}'"),
        };
        v.ok_or_else(|| Error::MissingParam {
            class: class.to_string(),
            param: param.to_string(),
        })
    }

    pub(crate) fn require_gamma(&self, class: &str) -> Result<Gamma> {
        self.classes
            .get(class)
            .and_then(|p| p.gamma)
            .ok_or_else(|| Error::MissingParam {
                class: class.to_string(),
                param: "gamma".to_string(),
            })
    }

    /// Domain checks over every present value.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        for (class, p) in &self.classes {
            if let Some(v) = p.medfilt_len {
                if !(v >= 0.0) {
                    bad.push(format!("{class}: medfilt_len {v} must be >= 0"));
                }
            }
            if let Some(v) = p.tau {
                if !(v > 0.0) {
                    bad.push(format!("{class}: tau {v} must be > 0"));
                }
            }
            if let Some(g) = p.gamma {
                if let Err(e) = g.validate() {
                    bad.push(format!("{class}: {e}"));
                }
            }
            for (name, v) in [
                ("lambda_ext", p.lambda_ext),
                ("lambda_hyb", p.lambda_hyb),
                ("lambda_nopsds", p.lambda_nopsds),
                ("lambda_f", p.lambda_f),
            ] {
                if let Some(v) = v {
                    if !(0.0..=1.0).contains(&v) {
                        bad.push(format!("{class}: {name} {v} outside [0, 1]"));
                    }
                }
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }
}
