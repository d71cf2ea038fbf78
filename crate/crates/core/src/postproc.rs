//! Conversion of frame-level scores into events and SEBBs.
//!
//! Three conversion pipelines share the primitives in this module:
//!
//! - tSEBB: median filtering fixes the extents via a frame threshold, the
//!   filtered scores over each extent give the confidence.
//! - cSEBB: change-point detection on the unfiltered scores segments the
//!   clip; candidate boundaries come from extrema of a forward/backward
//!   mean difference, weakly separated segments are merged, and the raw
//!   scores over each extent give the confidence.
//! - hSEBB: confident tSEBBs plus the cSEBBs that do not overlap them.
//!
//! All extents are half-open `[onset, offset)` on frame boundaries.

use crate::error::Error;
use crate::model::{Event, Gamma, GammaMode, HyperParams, ScoreTrack, Sebb};
use crate::Result;

/// Change-point scores for one class of one clip, sampled at every frame
/// boundary. Positive values indicate rising score level, negative falling.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaTrack {
    pub clip_id: String,
    pub class_label: String,
    /// `(time, delta)` pairs, one per frame boundary, times ascending.
    pub points: Vec<(f64, f64)>,
}

/// One tentative segment edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentBoundary {
    pub time: f64,
    /// True when the edge was added at the clip boundary rather than found
    /// as a delta extremum.
    pub implicit: bool,
}

/// Alternating onset/offset times delimiting tentative events.
///
/// `onsets[i] < offsets[i] < onsets[i+1]` holds throughout; the gaps
/// between consecutive segments are the candidates for merging.
#[derive(Debug, Clone, PartialEq)]
pub struct TentativeSegmentation {
    pub onsets: Vec<SegmentBoundary>,
    pub offsets: Vec<SegmentBoundary>,
}

impl TentativeSegmentation {
    pub fn n_segments(&self) -> usize {
        debug_assert_eq!(self.onsets.len(), self.offsets.len());
        self.onsets.len()
    }

    /// Segment extents as `(onset, offset)` pairs.
    pub fn segments(&self) -> Vec<(f64, f64)> {
        self.onsets
            .iter()
            .zip(&self.offsets)
            .map(|(a, b)| (a.time, b.time))
            .collect()
    }
}

/// Window size in frames for a filter length in seconds: the rounded
/// frame count, bumped to the next odd number, at least 1.
pub(crate) fn window_frames(medfilt_len: f64, median_frame_width: f64) -> usize {
    let mut k = (medfilt_len / median_frame_width).round() as i64;
    if k % 2 == 0 {
        k += 1;
    }
    k.max(1) as usize
}

/// Sliding median with edge replication; `k` must be odd.
pub(crate) fn median_filter_column(scores: &[f64], k: usize) -> Vec<f64> {
    debug_assert!(k % 2 == 1);
    if k == 1 || scores.is_empty() {
        return scores.to_vec();
    }
    let half = k / 2;
    let n = scores.len();
    let mut window = vec![0.0; k];
    (0..n)
        .map(|i| {
            for (j, slot) in window.iter_mut().enumerate() {
                let idx = (i + j).saturating_sub(half).min(n - 1);
                *slot = scores[idx];
            }
            window.sort_unstable_by(f64::total_cmp);
            window[half]
        })
        .collect()
}

/// Median-filters one class channel. A length of 0 is the identity.
pub fn median_filter(track: &ScoreTrack, class: &str, medfilt_len: f64) -> Result<Vec<f64>> {
    if !(medfilt_len >= 0.0) || !medfilt_len.is_finite() {
        return Err(Error::Config(format!(
            "median filter length {medfilt_len} must be a finite value >= 0"
        )));
    }
    let c = track.require_class(class)?;
    let k = window_frames(medfilt_len, track.median_frame_width());
    Ok(median_filter_column(&track.class_column(c), k))
}

/// Maximal runs of indices with `scores > lambda` (strict), as half-open
/// frame index ranges.
pub(crate) fn runs_above(scores: &[f64], lambda: f64) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &s) in scores.iter().enumerate() {
        if s > lambda {
            start.get_or_insert(i);
        } else if let Some(a) = start.take() {
            runs.push((a, i));
        }
    }
    if let Some(a) = start {
        runs.push((a, scores.len()));
    }
    runs
}

/// Thresholds one class channel at `lambda` (strict) and merges adjacent
/// positive frames into events.
pub fn frame_threshold_merge(track: &ScoreTrack, class: &str, lambda: f64) -> Result<Vec<Event>> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Config(format!("threshold {lambda} outside [0, 1]")));
    }
    let c = track.require_class(class)?;
    let column = track.class_column(c);
    Ok(runs_above(&column, lambda)
        .into_iter()
        .map(|(a, b)| Event {
            class_label: class.to_string(),
            onset: track.boundaries[a],
            offset: track.boundaries[b],
        })
        .collect())
}

/// Duration-weighted mean of `scores` over the frame range `[a, b)`.
pub(crate) fn weighted_mean(scores: &[f64], boundaries: &[f64], a: usize, b: usize) -> f64 {
    debug_assert!(a < b && b <= scores.len());
    let total: f64 = (a..b)
        .map(|i| scores[i] * (boundaries[i + 1] - boundaries[i]))
        .sum();
    total / (boundaries[b] - boundaries[a])
}

/// tSEBB core on an already-filtered column: threshold runs become
/// extents, the filtered values over each extent give the confidence.
pub(crate) fn tsebb_boxes(
    filtered: &[f64],
    boundaries: &[f64],
    lambda_ext: f64,
) -> Vec<(f64, f64, f64)> {
    runs_above(filtered, lambda_ext)
        .into_iter()
        .map(|(a, b)| {
            (
                boundaries[a],
                boundaries[b],
                weighted_mean(filtered, boundaries, a, b),
            )
        })
        .collect()
}

/// Converts one clip into tSEBBs: per class, median-filter, threshold at
/// the extent threshold, and score each run by the duration-weighted mean
/// of the filtered values over its extent.
pub fn tsebb(track: &ScoreTrack, params: &HyperParams) -> Result<Vec<Sebb>> {
    let mut out = Vec::new();
    for (c, class) in track.class_labels.iter().enumerate() {
        let medfilt_len = params.require(class, "medfilt_len")?;
        let lambda_ext = params.require(class, "lambda_ext")?;
        if !(0.0..=1.0).contains(&lambda_ext) {
            return Err(Error::Config(format!(
                "class '{class}': lambda_ext {lambda_ext} outside [0, 1]"
            )));
        }
        let k = window_frames(medfilt_len, track.median_frame_width());
        let filtered = median_filter_column(&track.class_column(c), k);
        for (onset, offset, confidence) in tsebb_boxes(&filtered, &track.boundaries, lambda_ext) {
            out.push(Sebb {
                class_label: class.clone(),
                onset,
                offset,
                confidence,
            });
        }
    }
    Ok(out)
}

/// Integral of the piecewise-constant score signal over `[a, b]`, with the
/// first/last frame value replicated beyond the clip edges.
fn extended_integral(scores: &[f64], boundaries: &[f64], cum: &[f64], a: f64, b: f64) -> f64 {
    debug_assert!(a <= b);
    let t0 = boundaries[0];
    let t_end = boundaries[boundaries.len() - 1];
    let mut total = 0.0;
    if a < t0 {
        total += (t0.min(b) - a) * scores[0];
    }
    if b > t_end {
        total += (b - t_end.max(a)) * scores[scores.len() - 1];
    }
    let (lo, hi) = (a.max(t0), b.min(t_end));
    if lo < hi {
        // frame containing t: last boundary <= t
        let frame_of = |t: f64| -> usize {
            let i = boundaries.partition_point(|&x| x <= t);
            i.saturating_sub(1).min(scores.len() - 1)
        };
        let (fa, fb) = (frame_of(lo), frame_of(hi));
        if fa == fb {
            total += (hi - lo) * scores[fa];
        } else {
            total += (boundaries[fa + 1] - lo) * scores[fa];
            total += cum[fb] - cum[fa + 1];
            total += (hi - boundaries[fb]) * scores[fb];
        }
    }
    total
}

/// Change-point core on one column: per boundary `t`, mean score over the
/// next `tau/2` seconds minus the mean over the previous `tau/2` seconds.
pub(crate) fn delta_points(scores: &[f64], boundaries: &[f64], tau: f64) -> Vec<(f64, f64)> {
    // cum[i] = integral over the first i frames
    let mut cum = vec![0.0; scores.len() + 1];
    for i in 0..scores.len() {
        cum[i + 1] = cum[i] + scores[i] * (boundaries[i + 1] - boundaries[i]);
    }
    let half = tau / 2.0;
    boundaries
        .iter()
        .map(|&t| {
            let fwd = extended_integral(scores, boundaries, &cum, t, t + half);
            let back = extended_integral(scores, boundaries, &cum, t - half, t);
            (t, (fwd - back) / half)
        })
        .collect()
}

/// Change-point scores: at every frame boundary `t`, the mean score over
/// the next `tau/2` seconds minus the mean over the previous `tau/2`
/// seconds, with edge values replicated beyond the clip.
pub fn delta_scores(track: &ScoreTrack, class: &str, tau: f64) -> Result<DeltaTrack> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Config(format!("tau {tau} must be finite and > 0")));
    }
    let c = track.require_class(class)?;
    let scores = track.class_column(c);
    Ok(DeltaTrack {
        clip_id: track.clip_id.clone(),
        class_label: class.to_string(),
        points: delta_points(&scores, &track.boundaries, tau),
    })
}

/// Tentative segmentation from delta extrema.
///
/// Local maxima become tentative onsets and local minima tentative
/// offsets; plateaus of equal values collapse to their first boundary.
/// When the first extremum is an offset, an onset at the clip start is
/// prepended; when the last is an onset, an offset at the clip end is
/// appended. A constant delta yields one segment spanning the clip.
pub fn extract_segmentation(delta: &DeltaTrack) -> TentativeSegmentation {
    extract_segmentation_points(&delta.points)
}

pub(crate) fn extract_segmentation_points(points: &[(f64, f64)]) -> TentativeSegmentation {
    if points.len() < 2 {
        return TentativeSegmentation {
            onsets: Vec::new(),
            offsets: Vec::new(),
        };
    }
    // compress to runs of exactly-equal values, keeping each first time
    let mut runs: Vec<(f64, f64)> = Vec::new(); // (value, first_time)
    for &(t, v) in points {
        match runs.last() {
            Some(&(lv, _)) if lv == v => {}
            _ => runs.push((v, t)),
        }
    }
    // interior runs only: clip edges never count as extrema themselves
    let mut extrema: Vec<(f64, bool)> = Vec::new(); // (time, is_max)
    for i in 1..runs.len().saturating_sub(1) {
        let (prev, v, next) = (runs[i - 1].0, runs[i].0, runs[i + 1].0);
        if v > prev && v > next {
            extrema.push((runs[i].1, true));
        } else if v < prev && v < next {
            extrema.push((runs[i].1, false));
        }
    }
    debug_assert!(
        extrema.windows(2).all(|w| w[0].1 != w[1].1),
        "extrema of a path must alternate"
    );

    let clip_start = points[0].0;
    let clip_end = points[points.len() - 1].0;
    let mut onsets = Vec::new();
    let mut offsets = Vec::new();
    if extrema.first().is_none_or(|&(_, is_max)| !is_max) {
        onsets.push(SegmentBoundary {
            time: clip_start,
            implicit: true,
        });
    }
    for (time, is_max) in &extrema {
        let edge = SegmentBoundary {
            time: *time,
            implicit: false,
        };
        if *is_max {
            onsets.push(edge);
        } else {
            offsets.push(edge);
        }
    }
    if extrema.last().is_none_or(|&(_, is_max)| is_max) {
        offsets.push(SegmentBoundary {
            time: clip_end,
            implicit: true,
        });
    }
    debug_assert_eq!(onsets.len(), offsets.len());
    TentativeSegmentation { onsets, offsets }
}

fn boundary_index(boundaries: &[f64], t: f64) -> Result<usize> {
    let i = boundaries.partition_point(|&x| x < t);
    if i < boundaries.len() && boundaries[i] == t {
        Ok(i)
    } else {
        Err(Error::Config(format!(
            "segmentation time {t} is not a frame boundary"
        )))
    }
}

fn merge_due(p: f64, q: f64, m: f64, gamma: Gamma) -> bool {
    match gamma.mode {
        GammaMode::Absolute => p - m < gamma.value && q - m < gamma.value,
        GammaMode::Relative => p < gamma.value * m && q < gamma.value * m,
    }
}

/// Merges weakly separated tentative segments.
///
/// For each gap, let `m` be the lowest score inside the gap and `p`, `q`
/// the highest scores of the two adjacent segments. The segments merge
/// when both `p` and `q` fall under the gamma criterion relative to `m`.
/// Gaps are scanned left to right, neighbour maxima are recomputed right
/// after each merge, and passes repeat until none merges.
pub fn merge_gaps(
    track: &ScoreTrack,
    class: &str,
    seg: &TentativeSegmentation,
    gamma: Gamma,
) -> Result<TentativeSegmentation> {
    let c = track.require_class(class)?;
    merge_gaps_column(&track.class_column(c), &track.boundaries, seg, gamma)
}

pub(crate) fn merge_gaps_column(
    scores: &[f64],
    boundaries: &[f64],
    seg: &TentativeSegmentation,
    gamma: Gamma,
) -> Result<TentativeSegmentation> {
    gamma.validate()?;

    struct Piece {
        onset: SegmentBoundary,
        offset: SegmentBoundary,
        a: usize,
        b: usize,
        max: f64,
    }
    let range_max = |a: usize, b: usize| -> f64 {
        scores[a..b].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    };
    let range_min = |a: usize, b: usize| -> f64 {
        scores[a..b].iter().copied().fold(f64::INFINITY, f64::min)
    };

    let mut pieces = Vec::with_capacity(seg.n_segments());
    for (on, off) in seg.onsets.iter().zip(&seg.offsets) {
        let a = boundary_index(boundaries, on.time)?;
        let b = boundary_index(boundaries, off.time)?;
        if a >= b {
            return Err(Error::Config(format!(
                "segment [{}, {}) is empty or reversed",
                on.time, off.time
            )));
        }
        pieces.push(Piece {
            onset: *on,
            offset: *off,
            a,
            b,
            max: range_max(a, b),
        });
    }

    loop {
        let mut merged_any = false;
        let mut i = 0;
        while i + 1 < pieces.len() {
            let gap_min = range_min(pieces[i].b, pieces[i + 1].a);
            if merge_due(pieces[i].max, pieces[i + 1].max, gap_min, gamma) {
                let right = pieces.remove(i + 1);
                let left = &mut pieces[i];
                let gap_max = range_max(left.b, right.a);
                left.offset = right.offset;
                left.b = right.b;
                left.max = left.max.max(gap_max).max(right.max);
                merged_any = true;
            } else {
                i += 1;
            }
        }
        if !merged_any {
            break;
        }
    }

    Ok(TentativeSegmentation {
        onsets: pieces.iter().map(|p| p.onset).collect(),
        offsets: pieces.iter().map(|p| p.offset).collect(),
    })
}

/// cSEBB core on one column: delta scores, tentative segmentation, gap
/// merging, raw-score confidences. Emits every segment.
pub(crate) fn csebb_boxes(
    scores: &[f64],
    boundaries: &[f64],
    tau: f64,
    gamma: Gamma,
) -> Result<Vec<(f64, f64, f64)>> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Config(format!("tau {tau} must be finite and > 0")));
    }
    let points = delta_points(scores, boundaries, tau);
    let seg = extract_segmentation_points(&points);
    let merged = merge_gaps_column(scores, boundaries, &seg, gamma)?;
    let mut out = Vec::with_capacity(merged.n_segments());
    for (onset, offset) in merged.segments() {
        let a = boundary_index(boundaries, onset)?;
        let b = boundary_index(boundaries, offset)?;
        out.push((onset, offset, weighted_mean(scores, boundaries, a, b)));
    }
    Ok(out)
}

/// Converts one clip into cSEBBs: per class, change-point segmentation of
/// the whole clip, gap merging, and raw-score confidences. Every segment
/// is emitted regardless of confidence; selection happens later.
pub fn csebb(track: &ScoreTrack, params: &HyperParams) -> Result<Vec<Sebb>> {
    let mut out = Vec::new();
    for (c, class) in track.class_labels.iter().enumerate() {
        let tau = params.require(class, "tau")?;
        let gamma = params.require_gamma(class)?;
        let scores = track.class_column(c);
        for (onset, offset, confidence) in
            csebb_boxes(&scores, &track.boundaries, tau, gamma)?
        {
            out.push(Sebb {
                class_label: class.clone(),
                onset,
                offset,
                confidence,
            });
        }
    }
    Ok(out)
}

/// Hybrid core for one class: tSEBB triples passing the hybrid threshold,
/// plus cSEBB triples disjoint from every kept tSEBB, sorted by extent.
pub(crate) fn hsebb_boxes(
    tboxes: &[(f64, f64, f64)],
    cboxes: &[(f64, f64, f64)],
    lambda_hyb: f64,
) -> Vec<(f64, f64, f64)> {
    let kept: Vec<(f64, f64, f64)> = tboxes
        .iter()
        .copied()
        .filter(|&(_, _, conf)| conf > lambda_hyb)
        .collect();
    let mut group = kept.clone();
    for &(onset, offset, conf) in cboxes {
        let disjoint = kept
            .iter()
            .all(|&(ton, toff, _)| onset >= toff || offset <= ton);
        if disjoint {
            group.push((onset, offset, conf));
        }
    }
    group.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    group
}

/// Combines tSEBBs and cSEBBs: tSEBBs with confidence above the per-class
/// hybrid threshold are kept, and cSEBBs are added wherever they do not
/// overlap any kept tSEBB of the same class.
pub fn hsebb(tsebbs: &[Sebb], csebbs: &[Sebb], params: &HyperParams) -> Result<Vec<Sebb>> {
    let mut classes: Vec<&str> = Vec::new();
    for s in tsebbs.iter().chain(csebbs) {
        if !classes.contains(&s.class_label.as_str()) {
            classes.push(&s.class_label);
        }
    }
    classes.sort_unstable();

    let mut out = Vec::new();
    for class in classes {
        let lambda_hyb = params.require(class, "lambda_hyb")?;
        let tboxes: Vec<(f64, f64, f64)> = tsebbs
            .iter()
            .filter(|s| s.class_label == class)
            .map(|s| (s.onset, s.offset, s.confidence))
            .collect();
        let cboxes: Vec<(f64, f64, f64)> = csebbs
            .iter()
            .filter(|s| s.class_label == class)
            .map(|s| (s.onset, s.offset, s.confidence))
            .collect();
        for (onset, offset, confidence) in hsebb_boxes(&tboxes, &cboxes, lambda_hyb) {
            out.push(Sebb {
                class_label: class.to_string(),
                onset,
                offset,
                confidence,
            });
        }
    }
    Ok(out)
}

/// Final detections: SEBBs whose confidence strictly exceeds the per-class
/// threshold, extents untouched.
pub fn select_events(sebbs: &[Sebb], threshold: impl Fn(&str) -> f64) -> Vec<Event> {
    sebbs
        .iter()
        .filter(|s| s.confidence > threshold(&s.class_label))
        .map(Sebb::to_event)
        .collect()
}
