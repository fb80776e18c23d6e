use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

/// Every variant carries the `module::operation` that raised it.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{op}: size cap exceeded ({count} points, cap {cap})")]
    SizeCap { op: &'static str, count: u128, cap: u64 },
    #[error("{op}: invalid parameter: {msg}")]
    Parameter { op: &'static str, msg: String },
    #[error("{op}: invalid argument: {msg}")]
    Argument { op: &'static str, msg: String },
    #[error("{op}: precondition failed: {msg}")]
    Precondition { op: &'static str, msg: String },
    #[error("{op}: structural error: {msg}")]
    Structural { op: &'static str, msg: String },
    #[error("{op}: resolution error: {msg}")]
    Resolution { op: &'static str, msg: String },
    #[error("{op}: internal invariant violated: {msg}")]
    Invariant { op: &'static str, msg: String },
    #[error("{op}: inconclusive: {msg}")]
    Inconclusive { op: &'static str, msg: String },
    #[error("{op}: pipeline error: {msg}")]
    Pipeline { op: &'static str, msg: String },
}

impl Error {
    pub fn op(&self) -> &'static str {
        match self {
            Error::SizeCap { op, .. }
            | Error::Parameter { op, .. }
            | Error::Argument { op, .. }
            | Error::Precondition { op, .. }
            | Error::Structural { op, .. }
            | Error::Resolution { op, .. }
            | Error::Invariant { op, .. }
            | Error::Inconclusive { op, .. }
            | Error::Pipeline { op, .. } => op,
        }
    }
}
