use thiserror::Error;

/// Errors produced by the library.
///
/// `Config`-class errors signal bad arguments or parameter sets; the
/// remaining variants signal bad data (malformed files, inconsistent
/// corpora). The CLI maps the former to exit code 2 and the latter to 1.
#[derive(Debug, Error)]
pub enum Error {
    /// A score track violated one or more structural invariants. Every
    /// violation is listed, not just the first.
    #[error("invalid score track '{clip_id}': {}", violations.join("; "))]
    InvalidTrack {
        clip_id: String,
        violations: Vec<String>,
    },

    /// A class label was requested that the track does not carry.
    #[error("unknown class label '{class}' in clip '{clip_id}'")]
    UnknownClass { class: String, clip_id: String },

    /// Detections reference a clip that is absent from the ground truth.
    #[error("clip '{clip_id}' appears in detections but not in ground truth")]
    UnknownClip { clip_id: String },

    /// A required per-class hyperparameter is missing.
    #[error("class '{class}': missing hyperparameter '{param}'")]
    MissingParam { class: String, param: String },

    /// An argument or parameter value is out of its documented domain.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A file could not be parsed; names the file and (1-based) line.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// Corpus-level inconsistency across files (e.g. score headers differ).
    #[error("inconsistent data: {0}")]
    Data(String),

    #[error("i/o error on '{path}': {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors caused by unusable arguments or parameter files
    /// rather than by the data being evaluated.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::MissingParam { .. })
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
