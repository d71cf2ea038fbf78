//! Exact threshold sweeps as step functions.
//!
//! Detection counts only change at finitely many threshold values: SEBB
//! confidences for event-level selection, distinct frame scores for
//! frame-level thresholding. Each clip/class pair reduces to a
//! [`StepCurve`] holding the counts for every segment of thresholds, and
//! class-level curves are sums of clip curves. Sampling a curve at any
//! threshold then reproduces what direct selection and counting would
//! yield, at a fraction of the cost.

use crate::model::EvalConfig;

/// Piecewise-constant counts as a function of the decision threshold.
///
/// `values` is sorted ascending. Entry `i` holds the counts obtained with
/// the selection `{x >= values[i]}`, which is what any threshold in
/// `[values[i-1], values[i])` selects under the strict `x > lambda` rule.
/// Thresholds at or above the last value select nothing.
#[derive(Debug, Clone, Default)]
pub(crate) struct StepCurve {
    pub values: Vec<f64>,
    pub tp: Vec<i64>,
    /// Second counter: false positives for intersection counting, the
    /// number of selected detections for collar counting.
    pub aux: Vec<i64>,
}

impl StepCurve {
    /// Counts for the selection `{x > lambda}`.
    pub fn counts(&self, lambda: f64) -> (i64, i64) {
        let i = self.values.partition_point(|&v| v <= lambda);
        if i == self.values.len() {
            (0, 0)
        } else {
            (self.tp[i], self.aux[i])
        }
    }

    fn from_entries(entries: Vec<(f64, i64, i64)>) -> Self {
        let mut curve = StepCurve::default();
        for (v, tp, aux) in entries {
            curve.values.push(v);
            curve.tp.push(tp);
            curve.aux.push(aux);
        }
        debug_assert!(curve.values.windows(2).all(|w| w[0] < w[1]));
        curve
    }

    /// Sums step curves into one. The result's values are the union of the
    /// inputs' values; counts add segment-wise.
    pub fn sum(curves: &[StepCurve]) -> StepCurve {
        // per-curve jumps at each value: counts just below minus counts at
        let mut jumps: Vec<(f64, i64, i64)> = Vec::new();
        for c in curves {
            for i in 0..c.values.len() {
                let (ntp, naux) = if i + 1 < c.values.len() {
                    (c.tp[i + 1], c.aux[i + 1])
                } else {
                    (0, 0)
                };
                jumps.push((c.values[i], c.tp[i] - ntp, c.aux[i] - naux));
            }
        }
        jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
        // coalesce equal values, then suffix-sum so each entry holds the
        // totals for selections at that value
        let mut entries: Vec<(f64, i64, i64)> = Vec::new();
        for (v, dtp, daux) in jumps {
            match entries.last_mut() {
                Some(last) if last.0 == v => {
                    last.1 += dtp;
                    last.2 += daux;
                }
                _ => entries.push((v, dtp, daux)),
            }
        }
        let mut tp_acc = 0;
        let mut aux_acc = 0;
        for e in entries.iter_mut().rev() {
            tp_acc += e.1;
            aux_acc += e.2;
            e.1 = tp_acc;
            e.2 = aux_acc;
        }
        StepCurve::from_entries(entries)
    }
}

/// Length of `[onset, offset)` overlapped by `[a, b)`.
fn overlap(onset: f64, offset: f64, a: f64, b: f64) -> f64 {
    (offset.min(b) - onset.max(a)).max(0.0)
}

/// Intersection-criterion counts for fixed detections: which detections
/// pass the detection tolerance, and which references are sufficiently
/// covered by the passing ones.
pub(crate) fn count_intersection(
    dets: &[(f64, f64)],
    gts: &[(f64, f64)],
    rho_dtc: f64,
    rho_gtc: f64,
) -> (i64, i64) {
    let mut fp = 0;
    let mut passing: Vec<(f64, f64)> = Vec::new();
    for &(on, off) in dets {
        let inter: f64 = gts.iter().map(|&(a, b)| overlap(on, off, a, b)).sum();
        if inter >= rho_dtc * (off - on) {
            passing.push((on, off));
        } else {
            fp += 1;
        }
    }
    passing.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut tp = 0;
    for &(a, b) in gts {
        let mut covered = 0.0;
        let mut reach = a;
        for &(on, off) in &passing {
            let lo = on.max(reach).max(a);
            let hi = off.min(b);
            if hi > lo {
                covered += hi - lo;
                reach = hi;
            }
        }
        if covered >= rho_gtc * (b - a) {
            tp += 1;
        }
    }
    (tp, fp)
}

/// Step curve of intersection-criterion counts for one clip/class of
/// SEBBs. Whether a box passes the detection tolerance is independent of
/// the threshold; each reference event becomes true-positive once the
/// passing boxes selected above the threshold cover it, which pins a
/// critical confidence per reference.
pub(crate) fn sebb_clip_curve(
    boxes: &[(f64, f64, f64)], // (onset, offset, confidence)
    gts: &[(f64, f64)],
    rho_dtc: f64,
    rho_gtc: f64,
) -> StepCurve {
    let mut fail_confs: Vec<f64> = Vec::new();
    let mut passing: Vec<(f64, f64, f64)> = Vec::new();
    for &(on, off, conf) in boxes {
        let inter: f64 = gts.iter().map(|&(a, b)| overlap(on, off, a, b)).sum();
        if inter >= rho_dtc * (off - on) {
            passing.push((on, off, conf));
        } else {
            fail_confs.push(conf);
        }
    }

    // critical confidence per reference: coverage accumulates as the
    // threshold drops below each passing box in confidence order
    let mut crits: Vec<f64> = Vec::new();
    for &(a, b) in gts {
        let mut over: Vec<(f64, f64, f64)> = passing
            .iter()
            .filter(|&&(on, off, _)| overlap(on, off, a, b) > 0.0)
            .map(|&(on, off, conf)| (on.max(a), off.min(b), conf))
            .collect();
        over.sort_by(|x, y| y.2.total_cmp(&x.2));
        let target = rho_gtc * (b - a);
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (on, off, conf) in over {
            merged.push((on, off));
            merged.sort_by(|x, y| x.0.total_cmp(&y.0));
            let mut covered = 0.0;
            let mut reach = f64::NEG_INFINITY;
            for &(x, y) in &merged {
                let lo = x.max(reach);
                if y > lo {
                    covered += y - lo;
                    reach = y;
                }
            }
            if covered >= target {
                crits.push(conf);
                break;
            }
        }
    }

    fail_confs.sort_by(f64::total_cmp);
    crits.sort_by(f64::total_cmp);
    let mut values: Vec<f64> = fail_confs.iter().chain(&crits).copied().collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let entries = values
        .iter()
        .map(|&v| {
            let tp = (crits.len() - crits.partition_point(|&c| c < v)) as i64;
            let fp = (fail_confs.len() - fail_confs.partition_point(|&c| c < v)) as i64;
            (v, tp, fp)
        })
        .collect();
    StepCurve::from_entries(entries)
}

/// Maximal runs of `scores >= v` as extents in seconds.
fn runs_at_least(scores: &[f64], boundaries: &[f64], v: f64) -> Vec<(f64, f64)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &s) in scores.iter().enumerate() {
        if s >= v {
            start.get_or_insert(i);
        } else if let Some(a) = start.take() {
            runs.push((boundaries[a], boundaries[i]));
        }
    }
    if let Some(a) = start {
        runs.push((boundaries[a], boundaries[scores.len()]));
    }
    runs
}

/// Step curve of intersection-criterion counts for one clip/class under
/// frame-level thresholding. Counts change only at distinct frame scores.
pub(crate) fn legacy_clip_curve(
    scores: &[f64],
    boundaries: &[f64],
    gts: &[(f64, f64)],
    rho_dtc: f64,
    rho_gtc: f64,
) -> StepCurve {
    let mut values: Vec<f64> = scores.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let entries = values
        .iter()
        .map(|&v| {
            let dets = runs_at_least(scores, boundaries, v);
            let (tp, fp) = count_intersection(&dets, gts, rho_dtc, rho_gtc);
            (v, tp, fp)
        })
        .collect();
    StepCurve::from_entries(entries)
}

/// Greedy one-to-one collar matching: references in onset order each take
/// the unmatched detection with the earliest onset that fits both collars.
pub(crate) fn count_collar(dets: &[(f64, f64)], gts: &[(f64, f64)], cfg: &EvalConfig) -> i64 {
    let mut dets: Vec<(f64, f64)> = dets.to_vec();
    dets.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    let mut gts: Vec<(f64, f64)> = gts.to_vec();
    gts.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    let mut used = vec![false; dets.len()];
    let mut tp = 0;
    for &(ga, gb) in &gts {
        let off_collar = cfg.offset_collar(gb - ga);
        for (i, &(da, db)) in dets.iter().enumerate() {
            if !used[i] && (da - ga).abs() <= cfg.onset_collar && (db - gb).abs() <= off_collar {
                used[i] = true;
                tp += 1;
                break;
            }
        }
    }
    tp
}

/// Step curve of collar counts (`tp`, selected detections) for one
/// clip/class of SEBBs.
pub(crate) fn collar_sebb_clip_curve(
    boxes: &[(f64, f64, f64)],
    gts: &[(f64, f64)],
    cfg: &EvalConfig,
) -> StepCurve {
    let mut values: Vec<f64> = boxes.iter().map(|b| b.2).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let entries = values
        .iter()
        .map(|&v| {
            let dets: Vec<(f64, f64)> = boxes
                .iter()
                .filter(|b| b.2 >= v)
                .map(|b| (b.0, b.1))
                .collect();
            let tp = count_collar(&dets, gts, cfg);
            (v, tp, dets.len() as i64)
        })
        .collect();
    StepCurve::from_entries(entries)
}

/// Step curve of collar counts for one clip/class under frame-level
/// thresholding.
pub(crate) fn collar_legacy_clip_curve(
    scores: &[f64],
    boundaries: &[f64],
    gts: &[(f64, f64)],
    cfg: &EvalConfig,
) -> StepCurve {
    let mut values: Vec<f64> = scores.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let entries = values
        .iter()
        .map(|&v| {
            let dets = runs_at_least(scores, boundaries, v);
            let tp = count_collar(&dets, gts, cfg);
            (v, tp, dets.len() as i64)
        })
        .collect();
    StepCurve::from_entries(entries)
}
