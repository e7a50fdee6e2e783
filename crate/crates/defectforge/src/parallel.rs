use defectforge_core::train::{Executor, Sequential};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const THREADS_ENV: &str = "DEFECTFORGE_THREADS";

/// [`Executor`] backed by either the calling thread or a rayon pool.
/// Results come back in index order either way, so training output does
/// not depend on the choice.
pub enum Runner {
    Sequential,
    Pool(rayon::ThreadPool),
}

impl Runner {
    pub fn with_threads(threads: usize) -> Result<Self> {
        if threads == 0 {
            return Ok(Runner::Sequential);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map(Runner::Pool)
            .map_err(|e| Error::Data(format!("cannot start worker threads: {e}")))
    }

    /// Reads [`THREADS_ENV`]: unset means one worker per core, `0` means
    /// the calling thread only. `deterministic` forces the latter.
    pub fn from_env(deterministic: bool) -> Result<Self> {
        if deterministic {
            return Ok(Runner::Sequential);
        }
        match std::env::var(THREADS_ENV) {
            Err(std::env::VarError::NotPresent) => {
                Self::with_threads(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
            }
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(n) => Self::with_threads(n),
                Err(_) => Err(Error::Usage(format!("{THREADS_ENV} must be a non-negative integer, got {v:?}"))),
            },
            Err(e) => Err(Error::Usage(format!("{THREADS_ENV}: {e}"))),
        }
    }

    pub fn threads(&self) -> usize {
        match self {
            Runner::Sequential => 0,
            Runner::Pool(p) => p.current_num_threads(),
        }
    }
}

impl Executor for Runner {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Runner::Sequential => Sequential.map(n, f),
            Runner::Pool(pool) => pool.install(|| (0..n).into_par_iter().map(f).collect()),
        }
    }
}
