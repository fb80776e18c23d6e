//! Command-line front end for `confdim-core`: configuration, thread pool,
//! report files and the six subcommands.

pub mod config;
pub mod format;
mod run;

use std::fmt;

use serde::Serialize;

pub use config::ExperimentConfig;
pub use run::{execute, Command, Outcome, SCHEMA_VERSION};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "CONFDIM_WORKERS";

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Core(confdim_core::Error),
    Config { op: &'static str, msg: String },
    Io { op: &'static str, msg: String },
}

impl From<confdim_core::Error> for CliError {
    fn from(e: confdim_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Config { op, msg } => write!(f, "{op}: invalid configuration: {msg}"),
            CliError::Io { op, msg } => write!(f, "{op}: io error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Machine-readable error naming the module and operation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorPayload {
    pub module: String,
    pub operation: String,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn op(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.op(),
            CliError::Config { op, .. } | CliError::Io { op, .. } => op,
        }
    }

    pub fn kind(&self) -> &'static str {
        use confdim_core::Error as E;
        match self {
            CliError::Core(e) => match e {
                E::SizeCap { .. } => "size_cap",
                E::Parameter { .. } => "parameter",
                E::Argument { .. } => "argument",
                E::Precondition { .. } => "precondition",
                E::Structural { .. } => "structural",
                E::Resolution { .. } => "resolution",
                E::Invariant { .. } => "invariant",
                E::Inconclusive { .. } => "inconclusive",
                E::Pipeline { .. } => "pipeline",
            },
            CliError::Config { .. } => "config",
            CliError::Io { .. } => "io",
        }
    }

    /// 3 for an inconclusive estimate, 2 for anything the caller can fix
    /// through inputs, 1 for internal and IO failures.
    pub fn exit_code(&self) -> i32 {
        use confdim_core::Error as E;
        match self {
            CliError::Core(E::Inconclusive { .. }) => 3,
            CliError::Core(E::Invariant { .. } | E::Pipeline { .. }) | CliError::Io { .. } => 1,
            CliError::Core(_) | CliError::Config { .. } => 2,
        }
    }

    pub fn payload(&self) -> ErrorPayload {
        let op = self.op();
        let (module, operation) = op.split_once("::").unwrap_or((op, ""));
        ErrorPayload { module: module.into(), operation: operation.into(), kind: self.kind(), message: self.to_string() }
    }
}

/// Order-preserving parallel map on a dedicated rayon pool.
pub struct Pool {
    pool: rayon::ThreadPool,
    workers: usize,
}

impl Pool {
    pub fn new(workers: usize) -> Result<Self, CliError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::Io { op: "cli::thread_pool", msg: e.to_string() })?;
        Ok(Pool { pool, workers })
    }

    /// Sized by `CONFDIM_WORKERS`, else by the available parallelism.
    pub fn from_env() -> Result<Self, CliError> {
        let workers = match std::env::var(WORKERS_ENV) {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(n) if n >= 1 => n,
                _ => {
                    return Err(CliError::Config {
                        op: "cli::thread_pool",
                        msg: format!("{WORKERS_ENV} = {v:?} is not a positive integer"),
                    })
                }
            },
            Err(_) => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        };
        Self::new(workers)
    }

    pub fn workers(&self) -> usize {
        self.workers
    }
}

impl confdim_core::Executor for Pool {
    fn map<T, R, F>(&self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(T) -> R + Sync + Send,
    {
        use rayon::prelude::*;
        if self.workers == 1 {
            return items.into_iter().map(f).collect();
        }
        self.pool.install(|| items.into_par_iter().map(f).collect())
    }
}
