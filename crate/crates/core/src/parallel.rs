//! Ordered data-parallel map with a sequential fallback.

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Execution {
    Sequential,
    /// One worker per core; sequential without the `parallel` feature.
    #[default]
    Parallel,
    /// Fixed-size worker pool.
    Threads(usize),
}

impl Execution {
    /// `--jobs` style selection: `1` is sequential, `0` is one thread per core.
    pub fn from_jobs(jobs: usize) -> Self {
        match jobs {
            0 => Execution::Parallel,
            1 => Execution::Sequential,
            n => Execution::Threads(n),
        }
    }
}

/// `items.map(f)` with results in input order regardless of completion order.
pub fn map_ordered<T, R, F>(items: &[T], exec: Execution, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        Execution::Sequential => Ok(items.iter().map(f).collect()),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            Ok(items.par_iter().map(f).collect())
        }
        #[cfg(feature = "parallel")]
        Execution::Threads(n) => {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| crate::error::Error::Configuration(format!("worker pool: {e}")))?;
            Ok(pool.install(|| items.par_iter().map(f).collect()))
        }
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel | Execution::Threads(_) => Ok(items.iter().map(f).collect()),
    }
}
