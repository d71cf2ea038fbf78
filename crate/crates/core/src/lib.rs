//! Sound event bounding boxes (SEBBs) for sound event detection.
//!
//! A SEBB is a tuple `(class, onset, offset, confidence)`. Converting
//! frame-level classifier scores into SEBBs decouples the predicted extent
//! of an event from the decision whether to report it: extents are fixed
//! by change-point analysis or filtered-score merging, and a single
//! event-level threshold on the confidence then selects the final events.
//! Event-level thresholding guarantees that detection ROC curves are
//! monotone, which frame-level thresholding does not.
//!
//! Modules:
//! - [`model`]: score tracks, events, SEBBs, ground truth, configuration.
//! - [`postproc`]: median filtering, frame thresholding, change-point
//!   (delta) scores, segmentation, gap merging, and the tSEBB / cSEBB /
//!   hSEBB conversion pipelines.
//! - [`metrics`]: intersection-based counting, PSD-ROC curves (optimistic
//!   envelope and raw non-monotonic variant), PSDS integration, and
//!   collar-based F1.
//! - [`tuning`]: candidate thresholds, per-class grid search, fold splits
//!   and cross-validation.
//! - [`dataio`]: TSV/JSON readers and writers for all of the above.
//! - [`synth`]: seeded synthetic corpus generation for tests and demos.
//!
//! With the default `parallel` feature, per-clip and per-grid-point work
//! runs on rayon; disabling the feature yields a dependency-free
//! sequential build with identical results.

pub(crate) mod curve;
pub mod dataio;
pub mod error;
pub(crate) mod exec;
pub mod metrics;
pub mod model;
pub mod postproc;
pub mod synth;
pub mod tuning;

pub use error::Error;
pub use model::{
    ClipEvents, ClipSebbs, EvalConfig, Event, Gamma, GammaMode, GroundTruth, ScoreTrack, Sebb,
    StdMode,
};

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
