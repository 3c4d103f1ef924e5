use thiserror::Error;

/// Errors produced by the library.
///
/// The variants map onto the CLI exit codes: validation-type errors exit
/// with 2, [`Error::Resource`] exits with 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid word: index {index} out of range for a system with {len} maps")]
    InvalidWord { index: usize, len: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource cap exceeded: {what} needs more than {cap} items (raise AFFINE_DIM_CAP)")]
    Resource { what: String, cap: u64 },

    #[error("invalid system: {0}")]
    Validation(String),

    #[error("scale order violated: {0}")]
    ScaleOrder(String),

    #[error(
        "theta = {theta} is below theta0 = {theta0}; the spectrum formula needs \
         max_i log(alpha_i)/log(beta_i) <= theta < 1"
    )]
    ThetaRange { theta: f64, theta0: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn resource(what: impl Into<String>, cap: u64) -> Self {
        Error::Resource { what: what.into(), cap }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Resource { .. } => 3,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Enumeration guard shared by every operation that walks words or cells.
///
/// The default is `10^7` items; the `AFFINE_DIM_CAP` environment variable
/// overrides it for the whole process.
pub fn default_cap() -> u64 {
    use std::sync::OnceLock;
    static CAP: OnceLock<u64> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var("AFFINE_DIM_CAP")
            .ok()
            .and_then(|v| v.trim().replace('_', "").parse::<u64>().ok())
            .filter(|&v| v > 0)
            .unwrap_or(DEFAULT_CAP)
    })
}

pub const DEFAULT_CAP: u64 = 10_000_000;

/// Counts work items against a cap.
#[derive(Debug)]
pub struct Budget {
    what: &'static str,
    cap: u64,
    used: u64,
}

impl Budget {
    pub fn new(what: &'static str, cap: u64) -> Self {
        Budget { what, cap, used: 0 }
    }

    #[inline]
    pub fn spend(&mut self, n: u64) -> Result<()> {
        self.used += n;
        if self.used > self.cap {
            Err(Error::resource(self.what, self.cap))
        } else {
            Ok(())
        }
    }
}
