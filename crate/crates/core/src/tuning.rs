//! Hyperparameter search: candidate decision thresholds, per-class grid
//! search, and the seeded k-fold cross-validation harness.
//!
//! Search is class-wise: each class picks its own grid point by a
//! class-level objective (ROC area for the PSDS-type metrics, best
//! achievable F1 for the collar metric), so the across-class penalty of
//! the final score never couples the searches. Ties keep the first grid
//! point in enumeration order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curve::{self, StepCurve};
use crate::error::Error;
use crate::exec;
use crate::metrics::{self, DetectionInput};
use crate::model::{
    ClassParams, ClipEvents, ClipSebbs, ClipTracks, EvalConfig, Gamma, GroundTruth, HyperParams,
    ScoreTrack, Sebb,
};
use crate::postproc;
use crate::Result;

/// How frame scores are turned into detections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Raw frame scores, thresholded at evaluation time.
    Legacy,
    /// Median-filtered frame scores, thresholded at evaluation time.
    Medfilt,
    Tsebb,
    Csebb,
    Hsebb,
}

impl Method {
    /// Whether conversion yields SEBB lists (as opposed to score tracks).
    pub fn produces_sebbs(&self) -> bool {
        matches!(self, Method::Tsebb | Method::Csebb | Method::Hsebb)
    }

    pub const ALL: [Method; 5] = [
        Method::Legacy,
        Method::Medfilt,
        Method::Tsebb,
        Method::Csebb,
        Method::Hsebb,
    ];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Legacy => "legacy",
            Method::Medfilt => "medfilt",
            Method::Tsebb => "tsebb",
            Method::Csebb => "csebb",
            Method::Hsebb => "hsebb",
        };
        f.write_str(s)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s {
            "legacy" => Ok(Method::Legacy),
            "medfilt" => Ok(Method::Medfilt),
            "tsebb" => Ok(Method::Tsebb),
            "csebb" => Ok(Method::Csebb),
            "hsebb" => Ok(Method::Hsebb),
            other => Err(Error::Config(format!(
                "unknown method '{other}' (expected legacy, medfilt, tsebb, csebb or hsebb)"
            ))),
        }
    }
}

/// Objective a hyperparameter set is tuned for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Psds1,
    #[serde(rename = "nopsds1")]
    NoPsds1,
    CollarF1,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Metric::Psds1 => "psds1",
            Metric::NoPsds1 => "nopsds1",
            Metric::CollarF1 => "collar_f1",
        };
        f.write_str(s)
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Metric> {
        match s {
            "psds1" => Ok(Metric::Psds1),
            "nopsds1" => Ok(Metric::NoPsds1),
            "collar_f1" => Ok(Metric::CollarF1),
            other => Err(Error::Config(format!(
                "unknown metric '{other}' (expected psds1, nopsds1 or collar_f1)"
            ))),
        }
    }
}

/// Search space of the per-class grid search. Every list must be
/// non-empty; each method reads only the lists it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Median filter lengths in seconds; 0 disables filtering.
    pub medfilt_lengths: Vec<f64>,
    /// Frame thresholds fixing tSEBB extents.
    pub ext_lambdas: Vec<f64>,
    /// Change-detection filter lengths in seconds.
    pub taus: Vec<f64>,
    /// Gap-merge thresholds, absolute or relative.
    pub gammas: Vec<Gamma>,
    pub metric: Metric,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            medfilt_lengths: (0..=10).map(|i| i as f64 / 5.0).collect(),
            ext_lambdas: (1..=9).map(|i| i as f64 / 10.0).collect(),
            taus: vec![0.32, 0.48, 0.64],
            gammas: vec![
                Gamma::absolute(0.15),
                Gamma::absolute(0.2),
                Gamma::absolute(0.3),
                Gamma::relative(1.5),
                Gamma::relative(2.0),
                Gamma::relative(3.0),
            ],
            metric: Metric::Psds1,
        }
    }
}

impl Grid {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.medfilt_lengths.is_empty()
            || self.ext_lambdas.is_empty()
            || self.taus.is_empty()
            || self.gammas.is_empty()
        {
            bad.push("all grid lists must be non-empty".to_string());
        }
        for &v in &self.medfilt_lengths {
            if !(v >= 0.0) || !v.is_finite() {
                bad.push(format!("medfilt length {v} must be finite and >= 0"));
            }
        }
        for &v in &self.ext_lambdas {
            if !(0.0..=1.0).contains(&v) {
                bad.push(format!("extent threshold {v} outside [0, 1]"));
            }
        }
        for &v in &self.taus {
            if !(v > 0.0) || !v.is_finite() {
                bad.push(format!("tau {v} must be finite and > 0"));
            }
        }
        for g in &self.gammas {
            if let Err(e) = g.validate() {
                bad.push(e.to_string());
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }
}

/// Every decision threshold worth sweeping for one class: the distinct
/// confidence values, the midpoints between consecutive distinct values,
/// and the sentinels 0 and 1, sorted descending. Sweeping these visits
/// every achievable detection set exactly once under strict selection.
pub fn candidate_thresholds(confidences: &[f64]) -> Vec<f64> {
    let mut vals: Vec<f64> = confidences.iter().copied().filter(|v| v.is_finite()).collect();
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    let mut out = vec![0.0, 1.0];
    out.extend(&vals);
    out.extend(vals.windows(2).map(|w| (w[0] + w[1]) / 2.0));
    out.sort_by(|a, b| b.total_cmp(a));
    out.dedup();
    out
}

/// The smallest threshold whose true-positive count reaches the maximum
/// over all given `(threshold, tp)` points; None for an empty input.
pub fn tune_nopsds_threshold(points: &[(f64, i64)]) -> Option<f64> {
    let max_tp = points.iter().map(|&(_, tp)| tp).max()?;
    points
        .iter()
        .filter(|&&(_, tp)| tp == max_tp)
        .map(|&(t, _)| t)
        .min_by(f64::total_cmp)
}

/// Deterministic partition of clips into k folds: clip ids are sorted,
/// shuffled by a seeded generator, and dealt round-robin, so fold sizes
/// differ by at most one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub k: usize,
    pub seed: u64,
    assignment: BTreeMap<String, usize>,
}

impl FoldSplit {
    pub fn new(clip_ids: &[String], k: usize, seed: u64) -> Result<FoldSplit> {
        if k < 2 {
            return Err(Error::Config(format!("need at least 2 folds, got {k}")));
        }
        let mut ids: Vec<String> = clip_ids.to_vec();
        ids.sort();
        ids.dedup();
        if ids.len() < k {
            return Err(Error::Config(format!(
                "{} clips cannot fill {k} folds",
                ids.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ids.shuffle(&mut rng);
        let assignment = ids
            .into_iter()
            .enumerate()
            .map(|(i, id)| (id, i % k))
            .collect();
        Ok(FoldSplit { k, seed, assignment })
    }

    pub fn fold_of(&self, clip_id: &str) -> Option<usize> {
        self.assignment.get(clip_id).copied()
    }

    /// Clips of one fold, sorted by id.
    pub fn fold_clips(&self, fold: usize) -> Vec<String> {
        self.assignment
            .iter()
            .filter(|&(_, &f)| f == fold)
            .map(|(id, _)| id.clone())
            .collect()
    }

    /// Clips of every other fold, sorted by id.
    pub fn other_clips(&self, fold: usize) -> Vec<String> {
        self.assignment
            .iter()
            .filter(|&(_, &f)| f != fold)
            .map(|(id, _)| id.clone())
            .collect()
    }

    pub fn assignment(&self) -> &BTreeMap<String, usize> {
        &self.assignment
    }
}

/// One class's score column of one clip, with that class's reference
/// extents.
struct ClipColumn<'a> {
    scores: Vec<f64>,
    boundaries: &'a [f64],
    median_width: f64,
    gts: Vec<(f64, f64)>,
}

/// Columns for one class across all clips whose track carries it, in clip
/// id order. Reference events of clips without the class still count via
/// `GroundTruth::n_events`; they can never be detected.
fn class_columns<'a>(tracks: &'a ClipTracks, gt: &GroundTruth, class: &str) -> Vec<ClipColumn<'a>> {
    tracks
        .iter()
        .filter_map(|(clip_id, track)| {
            let ci = track.class_index(class)?;
            let gts = gt
                .clips
                .get(clip_id)
                .map(|c| {
                    c.events
                        .iter()
                        .filter(|e| e.class_label == class)
                        .map(|e| (e.onset, e.offset))
                        .collect()
                })
                .unwrap_or_default();
            Some(ClipColumn {
                scores: track.class_column(ci),
                boundaries: &track.boundaries,
                median_width: track.median_frame_width(),
                gts,
            })
        })
        .collect()
}

/// Detections of one clip at one grid point: either SEBB triples
/// `(onset, offset, confidence)` or a thresholdable score column.
enum Dets {
    Boxes(Vec<(f64, f64, f64)>),
    Frames(Vec<f64>),
}

fn all_confidences(dets: &[Dets]) -> Vec<f64> {
    let mut out = Vec::new();
    for d in dets {
        match d {
            Dets::Boxes(b) => out.extend(b.iter().map(|x| x.2)),
            Dets::Frames(y) => out.extend(y.iter().copied()),
        }
    }
    out
}

fn intersection_sum(dets: &[Dets], cols: &[ClipColumn], cfg: &EvalConfig) -> StepCurve {
    let pairs: Vec<(&Dets, &ClipColumn)> = dets.iter().zip(cols).collect();
    let curves = exec::map(&pairs, |(d, c)| match d {
        Dets::Boxes(b) => curve::sebb_clip_curve(b, &c.gts, cfg.rho_dtc, cfg.rho_gtc),
        Dets::Frames(y) => {
            curve::legacy_clip_curve(y, c.boundaries, &c.gts, cfg.rho_dtc, cfg.rho_gtc)
        }
    });
    StepCurve::sum(&curves)
}

fn collar_sum(dets: &[Dets], cols: &[ClipColumn], cfg: &EvalConfig) -> StepCurve {
    let pairs: Vec<(&Dets, &ClipColumn)> = dets.iter().zip(cols).collect();
    let curves = exec::map(&pairs, |(d, c)| match d {
        Dets::Boxes(b) => curve::collar_sebb_clip_curve(b, &c.gts, cfg),
        Dets::Frames(y) => curve::collar_legacy_clip_curve(y, c.boundaries, &c.gts, cfg),
    });
    StepCurve::sum(&curves)
}

fn nopsds_from_curve(sum: &StepCurve, candidates: &[f64]) -> f64 {
    let points: Vec<(f64, i64)> = candidates.iter().map(|&t| (t, sum.counts(t).0)).collect();
    tune_nopsds_threshold(&points).unwrap_or(0.0)
}

/// Exact comparison of two F1 fractions `a_num/a_den` vs `b_num/b_den`
/// with the empty fraction 0/0 reading as zero.
fn frac_cmp(a_num: i64, a_den: i64, b_num: i64, b_den: i64) -> std::cmp::Ordering {
    let (an, ad) = if a_den == 0 { (0, 1) } else { (a_num, a_den) };
    let (bn, bd) = if b_den == 0 { (0, 1) } else { (b_num, b_den) };
    (an as i128 * bd as i128).cmp(&(bn as i128 * ad as i128))
}

/// Best achievable class F1 over the candidate thresholds, with the
/// smallest threshold attaining it. The comparison is exact over the
/// integer counts, so ties are not at the mercy of rounding.
fn best_f1(sum: &StepCurve, candidates: &[f64], n_gt: usize) -> (f64, f64) {
    let mut best: Option<(i64, i64, f64)> = None; // (2tp, 2tp+fp+fn, threshold)
    for &t in candidates {
        let (tp, selected) = sum.counts(t);
        let fp = selected - tp;
        let fn_count = n_gt as i64 - tp;
        let (num, den) = (2 * tp, 2 * tp + fp + fn_count);
        // replace on ties as well: candidates come sorted descending, so
        // the last tie is the smallest threshold attaining the maximum
        let better = best
            .map_or(true, |(bn, bd, _)| frac_cmp(num, den, bn, bd).is_ge());
        if better {
            best = Some((num, den, t));
        }
    }
    let (num, den, lambda) = best.expect("candidate list always has sentinels");
    let f1 = if den == 0 { 0.0 } else { num as f64 / den as f64 };
    (lambda, f1)
}

/// Outcome of evaluating one grid point for one class.
struct PointEval {
    objective: f64,
    lambda_nopsds: Option<f64>,
    lambda_f: Option<f64>,
}

fn eval_point(
    dets: &[Dets],
    cols: &[ClipColumn],
    n_gt: usize,
    hours: f64,
    metric: Metric,
    cfg: &EvalConfig,
) -> PointEval {
    let candidates = candidate_thresholds(&all_confidences(dets));
    match metric {
        Metric::Psds1 => {
            let sum = intersection_sum(dets, cols, cfg);
            let pts: Vec<(f64, f64)> = candidates
                .iter()
                .map(|&t| {
                    let (tp, fp) = sum.counts(t);
                    (
                        metrics::efpr_value(fp as usize, hours),
                        metrics::etpr_value(tp as usize, n_gt),
                    )
                })
                .collect();
            let steps = metrics::envelope_steps(&pts);
            PointEval {
                objective: metrics::staircase_area(&steps, cfg.e_max),
                lambda_nopsds: None,
                lambda_f: None,
            }
        }
        Metric::NoPsds1 => {
            let sum = intersection_sum(dets, cols, cfg);
            let lambda = nopsds_from_curve(&sum, &candidates);
            let pts: Vec<(f64, f64, f64)> = candidates
                .iter()
                .map(|&t| {
                    let (tp, fp) = sum.counts(t);
                    (
                        t,
                        metrics::efpr_value(fp as usize, hours),
                        metrics::etpr_value(tp as usize, n_gt),
                    )
                })
                .collect();
            let steps = metrics::raw_steps(&pts, lambda);
            PointEval {
                objective: metrics::staircase_area(&steps, cfg.e_max),
                lambda_nopsds: Some(lambda),
                lambda_f: None,
            }
        }
        Metric::CollarF1 => {
            let sum = collar_sum(dets, cols, cfg);
            let (lambda, f1) = best_f1(&sum, &candidates, n_gt);
            PointEval {
                objective: f1,
                lambda_nopsds: None,
                lambda_f: Some(lambda),
            }
        }
    }
}

/// Decision thresholds for a winning grid point: whichever of
/// `lambda_nopsds` / `lambda_f` the search itself did not fix is fitted on
/// the same validation data.
fn fit_lambdas(
    dets: &[Dets],
    cols: &[ClipColumn],
    n_gt: usize,
    cfg: &EvalConfig,
    eval: &PointEval,
) -> (f64, f64) {
    let candidates = candidate_thresholds(&all_confidences(dets));
    let lambda_nopsds = eval
        .lambda_nopsds
        .unwrap_or_else(|| nopsds_from_curve(&intersection_sum(dets, cols, cfg), &candidates));
    let lambda_f = eval
        .lambda_f
        .unwrap_or_else(|| best_f1(&collar_sum(dets, cols, cfg), &candidates, n_gt).0);
    (lambda_nopsds, lambda_f)
}

/// Detections of every clip at one grid point. `point` must carry the
/// fields the method consumes.
fn dets_for_point(cols: &[ClipColumn], method: Method, point: &ClassParams) -> Result<Vec<Dets>> {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| Error::Config(format!("grid point lacks {name}")))
    };
    match method {
        Method::Legacy => Ok(cols
            .iter()
            .map(|c| Dets::Frames(c.scores.clone()))
            .collect()),
        Method::Medfilt => {
            let len = need(point.medfilt_len, "medfilt_len")?;
            Ok(exec::map(cols, |c| {
                let k = postproc::window_frames(len, c.median_width);
                Dets::Frames(postproc::median_filter_column(&c.scores, k))
            }))
        }
        Method::Tsebb => {
            let len = need(point.medfilt_len, "medfilt_len")?;
            let lambda_ext = need(point.lambda_ext, "lambda_ext")?;
            Ok(exec::map(cols, |c| {
                let k = postproc::window_frames(len, c.median_width);
                let filtered = postproc::median_filter_column(&c.scores, k);
                Dets::Boxes(postproc::tsebb_boxes(&filtered, c.boundaries, lambda_ext))
            }))
        }
        Method::Csebb => {
            let tau = need(point.tau, "tau")?;
            let gamma = point
                .gamma
                .ok_or_else(|| Error::Config("grid point lacks gamma".into()))?;
            exec::map(cols, |c| {
                postproc::csebb_boxes(&c.scores, c.boundaries, tau, gamma).map(Dets::Boxes)
            })
            .into_iter()
            .collect()
        }
        Method::Hsebb => {
            let len = need(point.medfilt_len, "medfilt_len")?;
            let lambda_ext = need(point.lambda_ext, "lambda_ext")?;
            let tau = need(point.tau, "tau")?;
            let gamma = point
                .gamma
                .ok_or_else(|| Error::Config("grid point lacks gamma".into()))?;
            let lambda_hyb = need(point.lambda_hyb, "lambda_hyb")?;
            exec::map(cols, |c| {
                let k = postproc::window_frames(len, c.median_width);
                let filtered = postproc::median_filter_column(&c.scores, k);
                let tboxes = postproc::tsebb_boxes(&filtered, c.boundaries, lambda_ext);
                let cboxes = postproc::csebb_boxes(&c.scores, c.boundaries, tau, gamma)?;
                Ok(Dets::Boxes(postproc::hsebb_boxes(
                    &tboxes, &cboxes, lambda_hyb,
                )))
            })
            .into_iter()
            .collect()
        }
    }
}

struct BestPoint {
    objective: f64,
    params: ClassParams,
    dets: Vec<Dets>,
    eval: PointEval,
}

/// Grid search for one class of one non-hybrid method.
fn search_class(
    cols: &[ClipColumn],
    n_gt: usize,
    hours: f64,
    grid: &Grid,
    method: Method,
    cfg: &EvalConfig,
) -> Result<ClassParams> {
    let mut best: Option<BestPoint> = None;
    let consider = |best: &mut Option<BestPoint>, params: ClassParams, dets: Vec<Dets>| {
        let eval = eval_point(&dets, cols, n_gt, hours, grid.metric, cfg);
        if best.as_ref().is_none_or(|b| eval.objective > b.objective) {
            *best = Some(BestPoint {
                objective: eval.objective,
                params,
                dets,
                eval,
            });
        }
    };

    match method {
        Method::Legacy => {
            let dets = dets_for_point(cols, method, &ClassParams::default())?;
            consider(&mut best, ClassParams::default(), dets);
        }
        Method::Medfilt => {
            for &len in &grid.medfilt_lengths {
                let params = ClassParams {
                    medfilt_len: Some(len),
                    ..ClassParams::default()
                };
                let dets = dets_for_point(cols, method, &params)?;
                consider(&mut best, params, dets);
            }
        }
        Method::Tsebb => {
            // the filtered columns are shared across the extent thresholds
            for &len in &grid.medfilt_lengths {
                let filtered: Vec<Vec<f64>> = exec::map(cols, |c| {
                    let k = postproc::window_frames(len, c.median_width);
                    postproc::median_filter_column(&c.scores, k)
                });
                for &lambda_ext in &grid.ext_lambdas {
                    let dets: Vec<Dets> = filtered
                        .iter()
                        .zip(cols)
                        .map(|(f, c)| {
                            Dets::Boxes(postproc::tsebb_boxes(f, c.boundaries, lambda_ext))
                        })
                        .collect();
                    let params = ClassParams {
                        medfilt_len: Some(len),
                        lambda_ext: Some(lambda_ext),
                        ..ClassParams::default()
                    };
                    consider(&mut best, params, dets);
                }
            }
        }
        Method::Csebb => {
            for &tau in &grid.taus {
                for &gamma in &grid.gammas {
                    let params = ClassParams {
                        tau: Some(tau),
                        gamma: Some(gamma),
                        ..ClassParams::default()
                    };
                    let dets = dets_for_point(cols, method, &params)?;
                    consider(&mut best, params, dets);
                }
            }
        }
        Method::Hsebb => unreachable!("the hybrid method composes two searches"),
    }

    let b = best.expect("validated grid is non-empty");
    let (lambda_nopsds, lambda_f) = fit_lambdas(&b.dets, cols, n_gt, cfg, &b.eval);
    Ok(ClassParams {
        lambda_nopsds: Some(lambda_nopsds),
        lambda_f: Some(lambda_f),
        ..b.params
    })
}

fn track_classes(tracks: &ClipTracks) -> Vec<String> {
    let mut classes = BTreeSet::new();
    for track in tracks.values() {
        classes.extend(track.class_labels.iter().cloned());
    }
    classes.into_iter().collect()
}

fn search_standard(
    tracks: &ClipTracks,
    gt: &GroundTruth,
    grid: &Grid,
    method: Method,
    cfg: &EvalConfig,
) -> Result<HyperParams> {
    let hours = gt.total_duration_hours();
    let mut out = HyperParams::new();
    for class in track_classes(tracks) {
        let cols = class_columns(tracks, gt, &class);
        let n_gt = gt.n_events(&class);
        let params = search_class(&cols, n_gt, hours, grid, method, cfg)?;
        out.classes.insert(class, params);
    }
    Ok(out)
}

/// The hybrid search adopts the stand-alone tSEBB and cSEBB winners per
/// class and sweeps only the hybrid threshold, largest candidate first.
fn hsebb_search(
    tracks: &ClipTracks,
    gt: &GroundTruth,
    grid: &Grid,
    cfg: &EvalConfig,
) -> Result<HyperParams> {
    let t_params = search_standard(tracks, gt, grid, Method::Tsebb, cfg)?;
    let c_params = search_standard(tracks, gt, grid, Method::Csebb, cfg)?;
    let hours = gt.total_duration_hours();
    let mut out = HyperParams::new();
    for class in track_classes(tracks) {
        let cols = class_columns(tracks, gt, &class);
        let n_gt = gt.n_events(&class);
        let tp = &t_params.classes[&class];
        let cp = &c_params.classes[&class];
        let (len, lambda_ext) = (tp.medfilt_len.unwrap(), tp.lambda_ext.unwrap());
        let (tau, gamma) = (cp.tau.unwrap(), cp.gamma.unwrap());

        let tboxes: Vec<Vec<(f64, f64, f64)>> = exec::map(&cols, |c| {
            let k = postproc::window_frames(len, c.median_width);
            let filtered = postproc::median_filter_column(&c.scores, k);
            postproc::tsebb_boxes(&filtered, c.boundaries, lambda_ext)
        });
        let cboxes: Vec<Vec<(f64, f64, f64)>> =
            exec::map(&cols, |c| postproc::csebb_boxes(&c.scores, c.boundaries, tau, gamma))
                .into_iter()
                .collect::<Result<_>>()?;

        let tconfs: Vec<f64> = tboxes.iter().flatten().map(|b| b.2).collect();
        let mut best: Option<BestPoint> = None;
        for &lambda_hyb in &candidate_thresholds(&tconfs) {
            let dets: Vec<Dets> = tboxes
                .iter()
                .zip(&cboxes)
                .map(|(t, c)| Dets::Boxes(postproc::hsebb_boxes(t, c, lambda_hyb)))
                .collect();
            let eval = eval_point(&dets, &cols, n_gt, hours, grid.metric, cfg);
            if best.as_ref().is_none_or(|b| eval.objective > b.objective) {
                let params = ClassParams {
                    medfilt_len: Some(len),
                    lambda_ext: Some(lambda_ext),
                    tau: Some(tau),
                    gamma: Some(gamma),
                    lambda_hyb: Some(lambda_hyb),
                    ..ClassParams::default()
                };
                best = Some(BestPoint {
                    objective: eval.objective,
                    params,
                    dets,
                    eval,
                });
            }
        }
        let b = best.expect("candidate list always has sentinels");
        let (lambda_nopsds, lambda_f) = fit_lambdas(&b.dets, &cols, n_gt, cfg, &b.eval);
        out.classes.insert(
            class,
            ClassParams {
                lambda_nopsds: Some(lambda_nopsds),
                lambda_f: Some(lambda_f),
                ..b.params
            },
        );
    }
    Ok(out)
}

/// Per-class exhaustive search over the grid points of `method`,
/// maximizing `grid.metric` on the given validation clips. The returned
/// parameters always include fitted `lambda_nopsds` and `lambda_f`.
pub fn grid_search(
    tracks: &ClipTracks,
    gt: &GroundTruth,
    grid: &Grid,
    method: Method,
    cfg: &EvalConfig,
) -> Result<HyperParams> {
    cfg.validate()?;
    grid.validate()?;
    if tracks.is_empty() {
        return Err(Error::Data("grid search without validation clips".into()));
    }
    for clip_id in tracks.keys() {
        if !gt.clips.contains_key(clip_id) {
            return Err(Error::UnknownClip {
                clip_id: clip_id.clone(),
            });
        }
    }
    let ids: Vec<String> = tracks.keys().cloned().collect();
    let gt_v = gt.subset(&ids);
    match method {
        Method::Hsebb => hsebb_search(tracks, &gt_v, grid, cfg),
        _ => search_standard(tracks, &gt_v, grid, method, cfg),
    }
}

/// Converted detections of a whole corpus: SEBB lists for the SEBB
/// methods, (possibly filtered) score tracks for the frame-level methods.
#[derive(Debug, Clone, PartialEq)]
pub enum CorpusDetections {
    Sebbs(ClipSebbs),
    Tracks(ClipTracks),
}

impl CorpusDetections {
    pub fn as_input(&self) -> DetectionInput<'_> {
        match self {
            CorpusDetections::Sebbs(m) => DetectionInput::Sebbs(m),
            CorpusDetections::Tracks(m) => DetectionInput::Tracks(m),
        }
    }
}

fn filter_track(track: &ScoreTrack, params: &HyperParams) -> Result<ScoreTrack> {
    let mut columns = Vec::with_capacity(track.n_classes());
    for class in &track.class_labels {
        let len = params.require(class, "medfilt_len")?;
        columns.push(postproc::median_filter(track, class, len)?);
    }
    let rows = (0..track.n_frames())
        .map(|n| columns.iter().map(|col| col[n]).collect())
        .collect();
    ScoreTrack::new(
        track.clip_id.clone(),
        track.class_labels.clone(),
        track.boundaries.clone(),
        rows,
    )
}

/// Applies one conversion method to every clip.
pub fn convert_corpus(
    tracks: &ClipTracks,
    method: Method,
    params: &HyperParams,
) -> Result<CorpusDetections> {
    params.validate()?;
    let entries: Vec<(&String, &ScoreTrack)> = tracks.iter().collect();
    match method {
        Method::Legacy => Ok(CorpusDetections::Tracks(tracks.clone())),
        Method::Medfilt => {
            let filtered = exec::map(&entries, |(id, track)| {
                filter_track(track, params).map(|t| ((*id).clone(), t))
            });
            Ok(CorpusDetections::Tracks(
                filtered.into_iter().collect::<Result<_>>()?,
            ))
        }
        Method::Tsebb | Method::Csebb | Method::Hsebb => {
            let converted = exec::map(&entries, |(id, track)| {
                let sebbs = match method {
                    Method::Tsebb => postproc::tsebb(track, params)?,
                    Method::Csebb => postproc::csebb(track, params)?,
                    _ => {
                        let t = postproc::tsebb(track, params)?;
                        let c = postproc::csebb(track, params)?;
                        postproc::hsebb(&t, &c, params)?
                    }
                };
                Ok(((*id).clone(), sebbs))
            });
            Ok(CorpusDetections::Sebbs(
                converted.into_iter().collect::<Result<_>>()?,
            ))
        }
    }
}

/// Union candidate thresholds over every clip and class of a corpus.
pub fn corpus_candidates(dets: &CorpusDetections) -> Vec<f64> {
    let mut confs = Vec::new();
    match dets {
        CorpusDetections::Sebbs(m) => {
            for sebbs in m.values() {
                confs.extend(sebbs.iter().map(|s| s.confidence));
            }
        }
        CorpusDetections::Tracks(m) => {
            for track in m.values() {
                for row in &track.scores {
                    confs.extend(row.iter().copied());
                }
            }
        }
    }
    candidate_thresholds(&confs)
}

/// Final events at the per-class decision thresholds `lambda_f`: SEBBs
/// keep boxes with confidence strictly above the threshold; score tracks
/// merge runs of frames strictly above it.
pub fn final_events(dets: &CorpusDetections, params: &HyperParams) -> Result<ClipEvents> {
    match dets {
        CorpusDetections::Sebbs(m) => m
            .iter()
            .map(|(id, sebbs)| {
                let classes: BTreeSet<&str> =
                    sebbs.iter().map(|s| s.class_label.as_str()).collect();
                let mut lambdas = BTreeMap::new();
                for class in classes {
                    lambdas.insert(class.to_string(), params.require(class, "lambda_f")?);
                }
                Ok((
                    id.clone(),
                    postproc::select_events(sebbs, |c| lambdas[c]),
                ))
            })
            .collect(),
        CorpusDetections::Tracks(m) => m
            .iter()
            .map(|(id, track)| {
                let mut events = Vec::new();
                for class in &track.class_labels {
                    let lambda = params.require(class, "lambda_f")?;
                    events.extend(postproc::frame_threshold_merge(track, class, lambda)?);
                }
                Ok((id.clone(), events))
            })
            .collect(),
    }
}

/// Scores converted detections with one metric. PSDS-type metrics sweep
/// the full candidate threshold set; the collar metric decides at each
/// class's `lambda_f`. `params` supplies the decision thresholds and is
/// ignored for plain PSDS1.
pub fn score_detections(
    dets: &CorpusDetections,
    gt: &GroundTruth,
    metric: Metric,
    params: &HyperParams,
    cfg: &EvalConfig,
) -> Result<f64> {
    match metric {
        Metric::Psds1 => {
            let thresholds = corpus_candidates(dets);
            let points = metrics::operating_points(&dets.as_input(), gt, cfg, &thresholds)?;
            Ok(metrics::psds(
                &metrics::psd_roc_envelope(&points, cfg.e_max),
                cfg,
            ))
        }
        Metric::NoPsds1 => {
            let thresholds = corpus_candidates(dets);
            let points = metrics::operating_points(&dets.as_input(), gt, cfg, &thresholds)?;
            let curve = metrics::psd_roc_raw(&points, params, cfg.e_max)?;
            Ok(metrics::psds(&curve, cfg))
        }
        Metric::CollarF1 => {
            let events = final_events(dets, params)?;
            Ok(metrics::collar_f1(&events, gt, cfg)?.macro_f1())
        }
    }
}

/// One fold's held-out evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub test_clips: Vec<String>,
    pub params: HyperParams,
    pub metric_value: f64,
}

/// Cross-validation outcome: per-fold values plus the pooled value over
/// the concatenation of all held-out predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub method: Method,
    pub metric: Metric,
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<FoldReport>,
    pub pooled: f64,
}

/// Detections restricted to what each clip's fold would ever report: SEBBs
/// at or below the fold's `lambda_nopsds` floor are dropped; track scores
/// at or below it collapse to zero. Thresholding the result at any lambda
/// equals thresholding the original at `max(lambda, floor)`.
fn floor_detections(dets: &CorpusDetections, params: &HyperParams) -> Result<CorpusDetections> {
    match dets {
        CorpusDetections::Sebbs(m) => m
            .iter()
            .map(|(id, sebbs)| {
                let mut kept: Vec<Sebb> = Vec::new();
                for s in sebbs {
                    let floor = params.require(&s.class_label, "lambda_nopsds")?;
                    if s.confidence > floor {
                        kept.push(s.clone());
                    }
                }
                Ok((id.clone(), kept))
            })
            .collect::<Result<_>>()
            .map(CorpusDetections::Sebbs),
        CorpusDetections::Tracks(m) => m
            .iter()
            .map(|(id, track)| {
                let mut squashed = track.clone();
                let labels = squashed.class_labels.clone();
                for (ci, class) in labels.iter().enumerate() {
                    let floor = params.require(class, "lambda_nopsds")?;
                    for row in &mut squashed.scores {
                        if row[ci] <= floor {
                            row[ci] = 0.0;
                        }
                    }
                }
                Ok((id.clone(), squashed))
            })
            .collect::<Result<_>>()
            .map(CorpusDetections::Tracks),
    }
}

fn merge_corpora(method: Method, parts: Vec<CorpusDetections>) -> CorpusDetections {
    if method.produces_sebbs() {
        let mut all = ClipSebbs::new();
        for p in parts {
            match p {
                CorpusDetections::Sebbs(m) => all.extend(m),
                CorpusDetections::Tracks(_) => unreachable!("method produces SEBBs"),
            }
        }
        CorpusDetections::Sebbs(all)
    } else {
        let mut all = ClipTracks::new();
        for p in parts {
            match p {
                CorpusDetections::Tracks(m) => all.extend(m),
                CorpusDetections::Sebbs(_) => unreachable!("method produces tracks"),
            }
        }
        CorpusDetections::Tracks(all)
    }
}

fn pooled_score(
    method: Method,
    metric: Metric,
    folds: &[FoldReport],
    fold_dets: &[CorpusDetections],
    gt: &GroundTruth,
    cfg: &EvalConfig,
) -> Result<f64> {
    match metric {
        Metric::CollarF1 => {
            let mut events = ClipEvents::new();
            for (fold, dets) in folds.iter().zip(fold_dets) {
                events.extend(final_events(dets, &fold.params)?);
            }
            Ok(metrics::collar_f1(&events, gt, cfg)?.macro_f1())
        }
        Metric::Psds1 => {
            let merged = merge_corpora(method, fold_dets.to_vec());
            score_detections(&merged, gt, Metric::Psds1, &HyperParams::new(), cfg)
        }
        Metric::NoPsds1 => {
            // each fold's floor is baked into its clips' detections, so the
            // pooled sweep needs no further floor of its own
            let floored = folds
                .iter()
                .zip(fold_dets)
                .map(|(fold, dets)| floor_detections(dets, &fold.params))
                .collect::<Result<Vec<_>>>()?;
            let merged = merge_corpora(method, floored);
            let mut zero = HyperParams::new();
            let mut classes: BTreeSet<String> = gt.class_labels().into_iter().collect();
            for fold in folds {
                classes.extend(fold.params.classes.keys().cloned());
            }
            for class in classes {
                zero.classes.insert(
                    class,
                    ClassParams {
                        lambda_nopsds: Some(0.0),
                        ..ClassParams::default()
                    },
                );
            }
            score_detections(&merged, gt, Metric::NoPsds1, &zero, cfg)
        }
    }
}

/// Seeded k-fold cross-validation: per fold, hyperparameters are tuned on
/// the other folds' clips and applied to the held-out clips. Reported are
/// each fold's metric on its held-out predictions and the pooled metric
/// over all held-out predictions together.
pub fn cross_validate(
    tracks: &ClipTracks,
    gt: &GroundTruth,
    grid: &Grid,
    method: Method,
    k: usize,
    seed: u64,
    cfg: &EvalConfig,
) -> Result<CvReport> {
    cfg.validate()?;
    grid.validate()?;
    if tracks.is_empty() {
        return Err(Error::Data("cross-validation without clips".into()));
    }
    for clip_id in tracks.keys() {
        if !gt.clips.contains_key(clip_id) {
            return Err(Error::UnknownClip {
                clip_id: clip_id.clone(),
            });
        }
    }
    let ids: Vec<String> = tracks.keys().cloned().collect();
    let split = FoldSplit::new(&ids, k, seed)?;
    let gt_all = gt.subset(&ids);

    let mut folds = Vec::with_capacity(k);
    let mut fold_dets = Vec::with_capacity(k);
    for fold in 0..k {
        let train_ids = split.other_clips(fold);
        let test_ids = split.fold_clips(fold);
        let train_tracks: ClipTracks = train_ids
            .iter()
            .map(|id| (id.clone(), tracks[id].clone()))
            .collect();
        let test_tracks: ClipTracks = test_ids
            .iter()
            .map(|id| (id.clone(), tracks[id].clone()))
            .collect();
        let params = grid_search(&train_tracks, &gt_all, grid, method, cfg)?;
        let dets = convert_corpus(&test_tracks, method, &params)?;
        let test_gt = gt_all.subset(&test_ids);
        let metric_value = score_detections(&dets, &test_gt, grid.metric, &params, cfg)?;
        folds.push(FoldReport {
            fold,
            test_clips: test_ids,
            params,
            metric_value,
        });
        fold_dets.push(dets);
    }
    let pooled = pooled_score(method, grid.metric, &folds, &fold_dets, &gt_all, cfg)?;
    Ok(CvReport {
        method,
        metric: grid.metric,
        k,
        seed,
        folds,
        pooled,
    })
}
