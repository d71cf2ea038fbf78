//! Seeded synthetic corpora: planted events rendered as trapezoid scores.
//!
//! Each planted event is drawn as a trapezoid whose linear ramps are
//! centered on the event edges, so the half-height crossings coincide with
//! the ground-truth onset and offset. Ramps are what make frame-level
//! thresholding extent-dependent: raising the threshold shrinks the
//! detected extent along the ramps, which is exactly the failure mode the
//! SEBB algorithms address. Generation is a pure function of the spec;
//! clips derive independent ChaCha8 streams from the corpus seed, so the
//! corpus is bit-identical across runs and thread counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::Error;
use crate::exec;
use crate::model::{ClipTracks, Event, GroundTruth, ScoreTrack};
use crate::Result;

/// Recipe for a synthetic corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_clips: usize,
    /// Seconds; must be an integer number of frames.
    pub clip_duration: f64,
    pub frame_width: f64,
    pub classes: Vec<String>,
    /// Expected number of events per clip and class (Poisson-distributed).
    pub event_rate: f64,
    /// Peak heights drawn uniformly from this set, e.g. {0.9, 0.4}.
    pub peak_heights: Vec<f64>,
    /// Total width of each linear ramp, centered on the event edge.
    pub ramp_width: f64,
    /// Uniform noise in [-amplitude, amplitude] added per frame, then
    /// clamped to [0, 1].
    pub noise_amplitude: f64,
    /// Event lengths drawn uniformly from [min, max] seconds.
    pub event_len_range: (f64, f64),
    /// Minimum silence between same-class events of one clip.
    pub min_gap: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.clip_duration > 0.0) || !(self.frame_width > 0.0) {
            problems.push("clip_duration and frame_width must be positive".to_string());
        } else {
            let n = (self.clip_duration / self.frame_width).round();
            if n < 1.0 || (n * self.frame_width - self.clip_duration).abs() > 1e-9 {
                problems.push("frame_width must divide clip_duration".to_string());
            }
        }
        if self.classes.is_empty() {
            problems.push("at least one class required".to_string());
        }
        let mut sorted = self.classes.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.classes.len() {
            problems.push("duplicate class labels".to_string());
        }
        if !(self.event_rate >= 0.0) {
            problems.push("event_rate must be non-negative".to_string());
        }
        if self.peak_heights.is_empty()
            || !self.peak_heights.iter().all(|&h| h > 0.0 && h <= 1.0)
        {
            problems.push("peak_heights must be non-empty values in (0, 1]".to_string());
        }
        if !(self.ramp_width >= 0.0) || !(self.noise_amplitude >= 0.0) || !(self.min_gap >= 0.0) {
            problems.push("ramp_width, noise_amplitude, min_gap must be non-negative".to_string());
        }
        let (lo, hi) = self.event_len_range;
        if !(lo > 0.0 && lo <= hi && hi <= self.clip_duration) {
            problems.push("event_len_range must satisfy 0 < min <= max <= clip_duration".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid SynthSpec: {}", problems.join("; "))))
        }
    }

    fn n_frames(&self) -> usize {
        (self.clip_duration / self.frame_width).round() as usize
    }
}

/// Trapezoid with linear ramps of total width `ramp` centered on the event
/// edges: half height at `onset`/`offset`, full height on
/// `[onset + ramp/2, offset - ramp/2]`, zero outside
/// `[onset - ramp/2, offset + ramp/2]`.
fn trapezoid(t: f64, onset: f64, offset: f64, ramp: f64, height: f64) -> f64 {
    if ramp == 0.0 {
        return if t >= onset && t < offset { height } else { 0.0 };
    }
    let rise = (t - (onset - ramp / 2.0)) / ramp;
    let fall = ((offset + ramp / 2.0) - t) / ramp;
    height * rise.min(fall).clamp(0.0, 1.0)
}

/// Noise-free signal value: maximum over all plants of one class.
fn plant_signal(t: f64, plants: &[(f64, f64, f64)], ramp: f64) -> f64 {
    plants
        .iter()
        .map(|&(on, off, h)| trapezoid(t, on, off, ramp, h))
        .fold(0.0, f64::max)
}

const PLACE_RETRIES: usize = 1000;

/// Draws non-overlapping same-class extents, `min_gap` apart.
fn place_events(
    rng: &mut ChaCha8Rng,
    n: usize,
    spec: &SynthSpec,
    clip_id: &str,
    class: &str,
) -> Result<Vec<(f64, f64, f64)>> {
    let (lo, hi) = spec.event_len_range;
    let mut placed: Vec<(f64, f64, f64)> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut ok = false;
        for _ in 0..PLACE_RETRIES {
            let len = if lo == hi { lo } else { rng.random_range(lo..=hi) };
            let onset = if len >= spec.clip_duration {
                0.0
            } else {
                rng.random_range(0.0..=(spec.clip_duration - len))
            };
            let offset = onset + len;
            if placed
                .iter()
                .all(|&(a, b, _)| offset + spec.min_gap <= a || b + spec.min_gap <= onset)
            {
                let h = spec.peak_heights[rng.random_range(0..spec.peak_heights.len())];
                placed.push((onset, offset, h));
                ok = true;
                break;
            }
        }
        if !ok {
            return Err(Error::Data(format!(
                "clip {clip_id}, class {class}: could not place event without \
                 overlap after {PLACE_RETRIES} retries"
            )));
        }
    }
    placed.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(placed)
}

fn build_clip(spec: &SynthSpec, index: usize) -> Result<(ScoreTrack, Vec<Event>)> {
    let clip_id = format!("synth_{index:04}");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64 + 1);

    let mut plants_per_class: Vec<Vec<(f64, f64, f64)>> = Vec::new();
    for class in &spec.classes {
        let n = if spec.event_rate > 0.0 {
            Poisson::new(spec.event_rate)
                .map_err(|e| Error::Config(format!("event_rate: {e}")))?
                .sample(&mut rng) as usize
        } else {
            0
        };
        plants_per_class.push(place_events(&mut rng, n, spec, &clip_id, class)?);
    }

    let n = spec.n_frames();
    let boundaries: Vec<f64> = (0..=n).map(|i| i as f64 * spec.frame_width).collect();
    let mut scores = vec![vec![0.0; spec.classes.len()]; n];
    for (i, row) in scores.iter_mut().enumerate() {
        let center = (i as f64 + 0.5) * spec.frame_width;
        for (c, cell) in row.iter_mut().enumerate() {
            let mut v = plant_signal(center, &plants_per_class[c], spec.ramp_width);
            if spec.noise_amplitude > 0.0 {
                v += rng.random_range(-spec.noise_amplitude..=spec.noise_amplitude);
            }
            *cell = v.clamp(0.0, 1.0);
        }
    }

    let track = ScoreTrack::new(&clip_id, spec.classes.clone(), boundaries, scores)?;
    let mut events = Vec::new();
    for (c, plants) in plants_per_class.iter().enumerate() {
        for &(on, off, _) in plants {
            events.push(Event::new(spec.classes[c].clone(), on, off)?);
        }
    }
    Ok((track, events))
}

/// Renders the corpus: score tracks plus the planted ground truth.
/// Deterministic given the spec; parallel over clips.
pub fn generate(spec: &SynthSpec) -> Result<(ClipTracks, GroundTruth)> {
    spec.validate()?;
    let indices: Vec<usize> = (0..spec.n_clips).collect();
    let clips = exec::map(&indices, |&i| build_clip(spec, i));
    let mut tracks = ClipTracks::new();
    let mut gt = GroundTruth::new();
    for built in clips {
        let (track, events) = built?;
        gt.insert_clip(&track.clip_id, spec.clip_duration, events)?;
        tracks.insert(track.clip_id.clone(), track);
    }
    Ok((tracks, gt))
}

/// One clip with two planted events whose peaks differ (0.9 vs 0.4), the
/// geometry where no single frame threshold detects both events: any
/// threshold low enough to catch the weak event makes the strong event's
/// extent overshoot its detection tolerance. Change-point extents centered
/// on the score edges recover both. Ground truth is inset 0.14 s from the
/// rendered box edges so the boxes themselves stay just above the 0.7
/// intersection tolerance.
pub fn two_peak_clip() -> (ScoreTrack, GroundTruth) {
    const FRAME: f64 = 0.02;
    const RAMP: f64 = 0.48;
    const INSET: f64 = 0.14;
    let n = 500; // 10 s
    let plants = [(2.0, 3.0, 0.9), (6.0, 7.0, 0.4)];

    let boundaries: Vec<f64> = (0..=n).map(|i| i as f64 * FRAME).collect();
    let scores: Vec<Vec<f64>> = (0..n)
        .map(|i| vec![plant_signal((i as f64 + 0.5) * FRAME, &plants, RAMP)])
        .collect();
    let track = ScoreTrack::new("two_peak", vec!["a".into()], boundaries, scores)
        .expect("fixed geometry is valid");

    let events = plants
        .iter()
        .map(|&(on, off, _)| Event::new("a", on + INSET, off - INSET).expect("inset well-formed"))
        .collect();
    let mut gt = GroundTruth::new();
    gt.insert_clip("two_peak", 10.0, events)
        .expect("fixed geometry is valid");
    (track, gt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::HyperParams;
    use approx::assert_relative_eq;

    fn base_spec() -> SynthSpec {
        SynthSpec {
            n_clips: 12,
            clip_duration: 10.0,
            frame_width: 0.02,
            classes: vec!["a".into(), "b".into()],
            event_rate: 0.8,
            peak_heights: vec![0.9, 0.4],
            ramp_width: 0.1,
            noise_amplitude: 0.0,
            event_len_range: (0.8, 1.6),
            min_gap: 0.7,
            seed: 7,
        }
    }

    #[test]
    fn trapezoid_shape() {
        // event (2, 4), ramp 0.5, height 0.8
        let f = |t| trapezoid(t, 2.0, 4.0, 0.5, 0.8);
        assert_eq!(f(1.7), 0.0);
        assert_relative_eq!(f(2.0), 0.4); // half height at the edge
        assert_eq!(f(2.25), 0.8);
        assert_eq!(f(3.0), 0.8);
        assert_relative_eq!(f(4.0), 0.4);
        assert_eq!(f(4.3), 0.0);
        // zero ramp is a half-open rectangle
        let r = |t| trapezoid(t, 2.0, 4.0, 0.0, 1.0);
        assert_eq!((r(1.99), r(2.0), r(3.99), r(4.0)), (0.0, 1.0, 1.0, 0.0));
    }

    #[test]
    fn same_seed_same_corpus() {
        let spec = SynthSpec {
            noise_amplitude: 0.2,
            ..base_spec()
        };
        let (t1, g1) = generate(&spec).unwrap();
        let (t2, g2) = generate(&spec).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(g1.clips, g2.clips);
        let (t3, _) = generate(&SynthSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(t1, t3);
    }

    #[test]
    fn scores_stay_in_unit_interval_under_heavy_noise() {
        let spec = SynthSpec {
            noise_amplitude: 1.0,
            ..base_spec()
        };
        let (tracks, _) = generate(&spec).unwrap();
        for track in tracks.values() {
            assert!(track
                .scores
                .iter()
                .flatten()
                .all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn noiseless_rectangles_render_exactly() {
        let spec = SynthSpec {
            ramp_width: 0.0,
            peak_heights: vec![1.0],
            ..base_spec()
        };
        let (tracks, gt) = generate(&spec).unwrap();
        for (id, track) in &tracks {
            let truth = &gt.clips[id];
            for (ci, class) in track.class_labels.iter().enumerate() {
                for i in 0..track.n_frames() {
                    let center = (i as f64 + 0.5) * spec.frame_width;
                    let inside = truth
                        .events
                        .iter()
                        .any(|e| e.class_label == *class && e.onset <= center && center < e.offset);
                    assert_eq!(track.scores[i][ci], if inside { 1.0 } else { 0.0 });
                }
            }
        }
    }

    #[test]
    fn plants_fit_clip_and_respect_gap() {
        let (_, gt) = generate(&base_spec()).unwrap();
        let mut total = 0;
        for truth in gt.clips.values() {
            total += truth.events.len();
            for class in ["a", "b"] {
                let mut extents: Vec<(f64, f64)> = truth
                    .events
                    .iter()
                    .filter(|e| e.class_label == class)
                    .map(|e| (e.onset, e.offset))
                    .collect();
                extents.sort_by(|a, b| a.0.total_cmp(&b.0));
                for w in extents.windows(2) {
                    assert!(w[1].0 - w[0].1 >= 0.7);
                }
                for &(on, off) in &extents {
                    assert!(on >= 0.0 && off <= 10.0);
                }
            }
        }
        assert!(total > 0);
    }

    #[test]
    fn impossible_placement_reports_error() {
        // ~30 expected events of 4-5 s cannot fit a 10 s clip
        let spec = SynthSpec {
            event_rate: 30.0,
            event_len_range: (4.0, 5.0),
            ..base_spec()
        };
        let err = generate(&spec).unwrap_err();
        assert!(!err.is_config());
    }

    #[test]
    fn spec_validation_catches_bad_fields() {
        assert!(generate(&SynthSpec { frame_width: 0.3, ..base_spec() }).is_err());
        assert!(generate(&SynthSpec { classes: vec![], ..base_spec() }).is_err());
        assert!(generate(&SynthSpec { peak_heights: vec![1.5], ..base_spec() }).is_err());
        assert!(
            generate(&SynthSpec { event_len_range: (0.0, 1.0), ..base_spec() }).is_err()
        );
    }

    #[test]
    fn two_peak_geometry() {
        let (track, gt) = two_peak_clip();
        assert_eq!(track.n_frames(), 500);
        // plateau frames carry the full peak heights exactly
        let at = |t: f64| track.scores[(t / 0.02) as usize][0];
        assert_eq!(at(2.5), 0.9);
        assert_eq!(at(6.5), 0.4);
        assert_eq!(at(4.5), 0.0);
        let events = &gt.clips["two_peak"].events;
        assert_eq!(events.len(), 2);
        assert_relative_eq!(events[0].onset, 2.14);
        assert_relative_eq!(events[0].offset, 2.86);
    }

    /// The change-point pipeline at the documented setting (tau 0.48,
    /// relative gamma 3) must put box edges exactly on the ramp centers.
    #[test]
    fn two_peak_csebb_boxes_sit_on_ramp_centers() {
        let (track, _) = two_peak_clip();
        let mut params = HyperParams::new();
        {
            let p = params.classes.entry("a".into()).or_default();
            p.tau = Some(0.48);
            p.gamma = Some(crate::model::Gamma::relative(3.0));
        }
        let sebbs = crate::postproc::csebb(&track, &params).unwrap();
        assert_eq!(sebbs.len(), 2);
        assert_relative_eq!(sebbs[0].onset, 2.0, epsilon = 1e-9);
        assert_relative_eq!(sebbs[0].offset, 3.0, epsilon = 1e-9);
        assert_relative_eq!(sebbs[0].confidence, 0.792, epsilon = 1e-9);
        assert_relative_eq!(sebbs[1].onset, 6.0, epsilon = 1e-9);
        assert_relative_eq!(sebbs[1].offset, 7.0, epsilon = 1e-9);
        assert_relative_eq!(sebbs[1].confidence, 0.352, epsilon = 1e-9);
    }

    /// Noise-free narrow-ramp corpora: every plant is recovered as a true
    /// positive by the change-point pipeline at event-threshold 0.
    #[test]
    fn csebb_recovers_noiseless_plants() {
        let spec = SynthSpec {
            n_clips: 20,
            seed: 11,
            ..base_spec()
        };
        let (tracks, gt) = generate(&spec).unwrap();
        let mut params = HyperParams::new();
        for class in &spec.classes {
            let p = params.classes.entry(class.clone()).or_default();
            p.tau = Some(0.48);
            p.gamma = Some(crate::model::Gamma::relative(3.0));
        }
        let mut detections = crate::model::ClipEvents::new();
        for (id, track) in &tracks {
            let sebbs = crate::postproc::csebb(track, &params).unwrap();
            detections.insert(id.clone(), crate::postproc::select_events(&sebbs, |_| 0.0));
        }
        for class in &spec.classes {
            let counts =
                crate::metrics::intersection_counts(&detections, &gt, class, 0.7, 0.7).unwrap();
            assert_eq!(counts.tp, counts.n_gt, "class {class}");
            assert!(counts.n_gt > 0);
        }
    }
}
