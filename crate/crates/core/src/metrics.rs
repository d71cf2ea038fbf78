//! Intersection-based counting, PSD-ROC curves, PSDS/noPSDS, collar F1.
//!
//! Detections are judged by two intersection criteria: a detection whose
//! total overlap with same-class ground truth falls below `rho_dtc` times
//! its own length is a false positive; a ground-truth event covered by
//! passing detections for at least `rho_gtc` of its length is a true
//! positive. Sweeping a threshold over SEBB confidences or frame scores
//! yields operating points, from which the PSD-ROC is built either as the
//! per-class best-case envelope (PSDS) or as the raw, possibly
//! non-monotonic staircase (noPSDS). Collar-based F1 matches detections to
//! ground truth one-to-one within onset/offset tolerances.

use std::collections::{BTreeMap, BTreeSet};

use crate::curve::{self, StepCurve};
use crate::error::Error;
use crate::exec;
use crate::model::{
    ClipEvents, ClipSebbs, ClipTracks, EvalConfig, GroundTruth, HyperParams, ScoreTrack, Sebb,
    StdMode,
};
use crate::Result;

/// Event counts of one class at one operating point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassCounts {
    pub class_label: String,
    pub tp: usize,
    pub fp: usize,
    pub n_gt: usize,
}

impl ClassCounts {
    pub fn fn_count(&self) -> usize {
        self.n_gt - self.tp
    }
}

/// Counts plus effective rates of one class at one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassRates {
    pub counts: ClassCounts,
    /// tp / n_gt; defined as 1.0 when the class has no ground truth.
    pub etpr: f64,
    /// False positives per hour of total ground-truth audio.
    pub efpr: f64,
}

/// All per-class counts and rates at one decision threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub classes: BTreeMap<String, ClassRates>,
}

/// One class's staircase `e -> r_c(e)`: value 0 before the first
/// breakpoint, then each `(e_i, r_i)` holds from `e_i` to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassRoc {
    pub class_label: String,
    pub steps: Vec<(f64, f64)>,
}

impl ClassRoc {
    pub fn value_at(&self, e: f64) -> f64 {
        let i = self.steps.partition_point(|&(b, _)| b <= e);
        if i == 0 {
            0.0
        } else {
            self.steps[i - 1].1
        }
    }

    /// Area under this class's staircase up to `e_max`, divided by `e_max`.
    pub fn normalized_area(&self, e_max: f64) -> f64 {
        staircase_area(&self.steps, e_max) / e_max
    }
}

/// Per-class PSD-ROC staircases on `[0, e_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdCurve {
    pub e_max: f64,
    pub classes: Vec<ClassRoc>,
}

impl PsdCurve {
    /// The combined curve mu(e) = mean_c r_c(e) − alpha_st·std_c(r_c(e)),
    /// as a staircase over the union of all class breakpoints. Values may
    /// be negative; [`psds`] clips them at zero when integrating.
    pub fn mu_steps(&self, cfg: &EvalConfig) -> Vec<(f64, f64)> {
        let mut bps: Vec<f64> = vec![0.0];
        for c in &self.classes {
            bps.extend(c.steps.iter().map(|&(b, _)| b).filter(|&b| b < self.e_max));
        }
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        bps.iter()
            .map(|&e| {
                let values: Vec<f64> = self.classes.iter().map(|c| c.value_at(e)).collect();
                (e, combine(&values, cfg.alpha_st, cfg.std_mode))
            })
            .collect()
    }
}

fn combine(values: &[f64], alpha_st: f64, mode: StdMode) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let std = match mode {
        StdMode::Population => (ss / n).sqrt(),
        // undefined for a single class; treated as no spread
        StdMode::Sample if values.len() < 2 => 0.0,
        StdMode::Sample => (ss / (n - 1.0)).sqrt(),
    };
    mean - alpha_st * std
}

/// Exact integral of a staircase over `[0, e_max]` (0 before the first
/// breakpoint, last value extended to `e_max`).
pub(crate) fn staircase_area(steps: &[(f64, f64)], e_max: f64) -> f64 {
    let mut area = 0.0;
    for (i, &(a, v)) in steps.iter().enumerate() {
        if a >= e_max {
            break;
        }
        let b = steps.get(i + 1).map_or(e_max, |&(nb, _)| nb.min(e_max));
        area += v * (b - a);
    }
    area
}

/// Detections to sweep: fixed SEBB lists selected by confidence, or raw
/// score tracks thresholded at the frame level.
#[derive(Debug, Clone, Copy)]
pub enum DetectionInput<'a> {
    Sebbs(&'a ClipSebbs),
    Tracks(&'a ClipTracks),
}

impl DetectionInput<'_> {
    fn clip_ids(&self) -> Vec<&String> {
        match self {
            DetectionInput::Sebbs(m) => m.keys().collect(),
            DetectionInput::Tracks(m) => m.keys().collect(),
        }
    }
}

fn check_clips_known(input: &DetectionInput, gt: &GroundTruth) -> Result<()> {
    for id in input.clip_ids() {
        if !gt.clips.contains_key(id) {
            return Err(Error::UnknownClip {
                clip_id: id.clone(),
            });
        }
    }
    Ok(())
}

fn gt_extents(gt: &GroundTruth, clip_id: &str, class: &str) -> Vec<(f64, f64)> {
    gt.clips[clip_id]
        .events
        .iter()
        .filter(|e| e.class_label == class)
        .map(|e| (e.onset, e.offset))
        .collect()
}

fn sebbs_by_class(sebbs: &[Sebb]) -> BTreeMap<&str, Vec<(f64, f64, f64)>> {
    let mut by_class: BTreeMap<&str, Vec<(f64, f64, f64)>> = BTreeMap::new();
    for s in sebbs {
        by_class
            .entry(s.class_label.as_str())
            .or_default()
            .push((s.onset, s.offset, s.confidence));
    }
    by_class
}

/// Builds one summed step curve per class, parallel over clips.
fn class_curves<FS, FL>(
    input: &DetectionInput,
    gt: &GroundTruth,
    sebb_curve: FS,
    legacy_curve: FL,
) -> Result<BTreeMap<String, StepCurve>>
where
    FS: Fn(&[(f64, f64, f64)], &[(f64, f64)]) -> StepCurve + Sync + Send,
    FL: Fn(&[f64], &[f64], &[(f64, f64)]) -> StepCurve + Sync + Send,
{
    check_clips_known(input, gt)?;
    let per_clip: Vec<Vec<(String, StepCurve)>> = match input {
        DetectionInput::Sebbs(clips) => {
            let entries: Vec<(&String, &Vec<Sebb>)> = clips.iter().collect();
            exec::map(&entries, |(clip_id, sebbs)| {
                sebbs_by_class(sebbs)
                    .into_iter()
                    .map(|(class, boxes)| {
                        let gts = gt_extents(gt, clip_id, class);
                        (class.to_string(), sebb_curve(&boxes, &gts))
                    })
                    .collect()
            })
        }
        DetectionInput::Tracks(clips) => {
            let entries: Vec<(&String, &ScoreTrack)> = clips.iter().collect();
            exec::map(&entries, |(clip_id, track)| {
                track
                    .class_labels
                    .iter()
                    .enumerate()
                    .map(|(ci, label)| {
                        let column = track.class_column(ci);
                        let gts = gt_extents(gt, clip_id, label);
                        (label.clone(), legacy_curve(&column, &track.boundaries, &gts))
                    })
                    .collect()
            })
        }
    };
    let mut grouped: BTreeMap<String, Vec<StepCurve>> = BTreeMap::new();
    for clip_curves in per_clip {
        for (class, curve) in clip_curves {
            grouped.entry(class).or_default().push(curve);
        }
    }
    Ok(grouped
        .into_iter()
        .map(|(class, curves)| (class, StepCurve::sum(&curves)))
        .collect())
}

pub(crate) fn intersection_class_curves(
    input: &DetectionInput,
    gt: &GroundTruth,
    cfg: &EvalConfig,
) -> Result<BTreeMap<String, StepCurve>> {
    class_curves(
        input,
        gt,
        |boxes, gts| curve::sebb_clip_curve(boxes, gts, cfg.rho_dtc, cfg.rho_gtc),
        |scores, boundaries, gts| {
            curve::legacy_clip_curve(scores, boundaries, gts, cfg.rho_dtc, cfg.rho_gtc)
        },
    )
}

/// Evaluated class set: every class with ground truth or detections.
fn eval_classes(curves: &BTreeMap<String, StepCurve>, gt: &GroundTruth) -> BTreeSet<String> {
    let mut classes: BTreeSet<String> = gt.class_labels().into_iter().collect();
    classes.extend(curves.keys().cloned());
    classes
}

/// Intersection-criterion counts of one class for a fixed detection set.
///
/// Per detection: total intersection with all same-class ground-truth
/// events in its clip at least `rho_dtc` times the detection length, else
/// it is a false positive. Per ground-truth event: covered by the union of
/// passing detections for at least `rho_gtc` of its length, else a false
/// negative. Both comparisons are inclusive.
pub fn intersection_counts(
    detections: &ClipEvents,
    gt: &GroundTruth,
    class: &str,
    rho_dtc: f64,
    rho_gtc: f64,
) -> Result<ClassCounts> {
    for id in detections.keys() {
        if !gt.clips.contains_key(id) {
            return Err(Error::UnknownClip { clip_id: id.clone() });
        }
    }
    let mut tp = 0;
    let mut fp = 0;
    for (clip_id, events) in detections {
        let dets: Vec<(f64, f64)> = events
            .iter()
            .filter(|e| e.class_label == class)
            .map(|e| (e.onset, e.offset))
            .collect();
        let gts = gt_extents(gt, clip_id, class);
        let (t, f) = curve::count_intersection(&dets, &gts, rho_dtc, rho_gtc);
        tp += t;
        fp += f;
    }
    // clips without detections contribute false negatives via n_gt
    Ok(ClassCounts {
        class_label: class.to_string(),
        tp: tp as usize,
        fp: fp as usize,
        n_gt: gt.n_events(class),
    })
}

/// tp / n_gt; 1.0 for a class without ground truth.
pub(crate) fn etpr_value(tp: usize, n_gt: usize) -> f64 {
    if n_gt == 0 {
        1.0
    } else {
        tp as f64 / n_gt as f64
    }
}

/// False positives per hour of ground-truth audio.
pub(crate) fn efpr_value(fp: usize, hours: f64) -> f64 {
    if hours > 0.0 {
        fp as f64 / hours
    } else if fp > 0 {
        f64::INFINITY
    } else {
        0.0
    }
}

fn rates(counts: ClassCounts, hours: f64) -> ClassRates {
    let etpr = etpr_value(counts.tp, counts.n_gt);
    let efpr = efpr_value(counts.fp, hours);
    ClassRates { counts, etpr, efpr }
}

/// One operating point per threshold, every class evaluated at each.
///
/// SEBB inputs are selected by strict confidence comparison, track inputs
/// by strict frame thresholding followed by run merging; both reproduce
/// exactly what direct selection plus [`intersection_counts`] yields.
pub fn operating_points(
    input: &DetectionInput,
    gt: &GroundTruth,
    cfg: &EvalConfig,
    thresholds: &[f64],
) -> Result<Vec<OperatingPoint>> {
    if thresholds.is_empty() {
        return Err(Error::Config("operating_points: empty threshold list".into()));
    }
    cfg.validate()?;
    let curves = intersection_class_curves(input, gt, cfg)?;
    let classes = eval_classes(&curves, gt);
    let hours = gt.total_duration_hours();
    Ok(thresholds
        .iter()
        .map(|&threshold| {
            let per_class = classes
                .iter()
                .map(|class| {
                    let (tp, fp) = curves.get(class).map_or((0, 0), |c| c.counts(threshold));
                    let counts = ClassCounts {
                        class_label: class.clone(),
                        tp: tp as usize,
                        fp: fp as usize,
                        n_gt: gt.n_events(class),
                    };
                    (class.clone(), rates(counts, hours))
                })
                .collect();
            OperatingPoint {
                threshold,
                classes: per_class,
            }
        })
        .collect())
}

/// Best-case envelope steps from `(efpr, etpr)` points: the running
/// maximum of etpr over all points at or below each efpr.
pub(crate) fn envelope_steps(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut steps: Vec<(f64, f64)> = Vec::new();
    for (e, r) in pts {
        match steps.last() {
            Some(&(_, best)) if r <= best => {}
            Some(&(le, _)) if le == e => {
                steps.last_mut().unwrap().1 = r;
            }
            _ => steps.push((e, r)),
        }
    }
    steps
}

/// Raw staircase steps from `(threshold, efpr, etpr)` points: points below
/// `lambda` are dropped, the rest sorted by efpr with ties keeping the
/// lowest-threshold point, values taken as given (may decrease).
pub(crate) fn raw_steps(points: &[(f64, f64, f64)], lambda: f64) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64, f64)> = points
        .iter()
        .filter(|p| p.0 >= lambda)
        .copied()
        .collect();
    pts.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    let mut steps: Vec<(f64, f64)> = Vec::new();
    for (_, e, r) in pts {
        if steps.last().is_none_or(|&(le, _)| le != e) {
            steps.push((e, r));
        }
    }
    steps
}

fn point_classes(points: &[OperatingPoint]) -> Vec<String> {
    let mut classes = BTreeSet::new();
    for p in points {
        classes.extend(p.classes.keys().cloned());
    }
    classes.into_iter().collect()
}

/// Best-case PSD-ROC: per class, r_c(e) = max etpr over points with
/// efpr <= e. Non-decreasing by construction.
pub fn psd_roc_envelope(points: &[OperatingPoint], e_max: f64) -> PsdCurve {
    let classes = point_classes(points)
        .into_iter()
        .map(|class| {
            let pts: Vec<(f64, f64)> = points
                .iter()
                .filter_map(|p| p.classes.get(&class))
                .map(|r| (r.efpr, r.etpr))
                .collect();
            ClassRoc {
                class_label: class,
                steps: envelope_steps(&pts),
            }
        })
        .collect();
    PsdCurve { e_max, classes }
}

/// Raw PSD-ROC without best-case selection: per class, points at
/// thresholds below that class's `lambda_nopsds` are discarded and the
/// rest form a right-continuous staircase that may be non-monotonic.
pub fn psd_roc_raw(
    points: &[OperatingPoint],
    params: &HyperParams,
    e_max: f64,
) -> Result<PsdCurve> {
    let classes = point_classes(points)
        .into_iter()
        .map(|class| {
            let lambda = params.require(&class, "lambda_nopsds")?;
            let pts: Vec<(f64, f64, f64)> = points
                .iter()
                .filter_map(|p| p.classes.get(&class).map(|r| (p.threshold, r.efpr, r.etpr)))
                .collect();
            Ok(ClassRoc {
                class_label: class,
                steps: raw_steps(&pts, lambda),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PsdCurve { e_max, classes })
}

/// Normalized area under the combined curve: the exact staircase integral
/// of max(0, mu(e)) over [0, e_max], divided by e_max.
pub fn psds(curve: &PsdCurve, cfg: &EvalConfig) -> f64 {
    if curve.classes.is_empty() {
        return 0.0;
    }
    let clipped: Vec<(f64, f64)> = curve
        .mu_steps(cfg)
        .into_iter()
        .map(|(e, mu)| (e, mu.max(0.0)))
        .collect();
    staircase_area(&clipped, curve.e_max) / curve.e_max
}

/// Collar counts of one class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassF1 {
    pub class_label: String,
    pub tp: usize,
    pub fp: usize,
    pub fn_count: usize,
}

impl ClassF1 {
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_count;
        if denom == 0 {
            0.0
        } else {
            2.0 * self.tp as f64 / denom as f64
        }
    }
}

/// Per-class collar counts with macro and micro aggregates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct F1Report {
    /// Sorted by class label; covers every class with ground truth or
    /// detections.
    pub classes: Vec<ClassF1>,
}

impl F1Report {
    pub fn class(&self, label: &str) -> Option<&ClassF1> {
        self.classes.iter().find(|c| c.class_label == label)
    }

    /// Unweighted mean of per-class F1 (the headline number).
    pub fn macro_f1(&self) -> f64 {
        if self.classes.is_empty() {
            return 0.0;
        }
        self.classes.iter().map(ClassF1::f1).sum::<f64>() / self.classes.len() as f64
    }

    /// F1 of the pooled counts.
    pub fn micro_f1(&self) -> f64 {
        let pooled = ClassF1 {
            class_label: String::new(),
            tp: self.classes.iter().map(|c| c.tp).sum(),
            fp: self.classes.iter().map(|c| c.fp).sum(),
            fn_count: self.classes.iter().map(|c| c.fn_count).sum(),
        };
        pooled.f1()
    }
}

/// Collar-based F1 over already-thresholded events.
///
/// A detection matches a ground-truth event of the same class and clip
/// when its onset deviates by at most `onset_collar` and its offset by at
/// most `max(offset_collar_floor, offset_collar_frac * gt_length)`.
/// Matching is one-to-one: ground-truth events in ascending onset order
/// each take the unmatched detection with the earliest onset that fits.
pub fn collar_f1(detections: &ClipEvents, gt: &GroundTruth, cfg: &EvalConfig) -> Result<F1Report> {
    cfg.validate()?;
    for id in detections.keys() {
        if !gt.clips.contains_key(id) {
            return Err(Error::UnknownClip { clip_id: id.clone() });
        }
    }
    let entries: Vec<(&String, &Vec<crate::model::Event>)> = detections.iter().collect();
    let per_clip: Vec<Vec<(String, i64, usize)>> = exec::map(&entries, |(clip_id, events)| {
        let mut by_class: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
        for e in *events {
            by_class
                .entry(e.class_label.as_str())
                .or_default()
                .push((e.onset, e.offset));
        }
        by_class
            .into_iter()
            .map(|(class, dets)| {
                let gts = gt_extents(gt, clip_id, class);
                let tp = curve::count_collar(&dets, &gts, cfg);
                (class.to_string(), tp, dets.len())
            })
            .collect()
    });
    let mut tallies: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for clip_counts in per_clip {
        for (class, tp, n_det) in clip_counts {
            let t = tallies.entry(class).or_default();
            t.0 += tp as usize;
            t.1 += n_det;
        }
    }
    let mut classes: BTreeSet<String> = gt.class_labels().into_iter().collect();
    classes.extend(tallies.keys().cloned());
    let classes = classes
        .into_iter()
        .map(|class| {
            let (tp, n_det) = tallies.get(&class).copied().unwrap_or((0, 0));
            ClassF1 {
                fp: n_det - tp,
                fn_count: gt.n_events(&class) - tp,
                tp,
                class_label: class,
            }
        })
        .collect();
    Ok(F1Report { classes })
}
