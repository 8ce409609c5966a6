//! Worker-pool plumbing. Results are always returned in index order, so
//! output never depends on the number of workers.

use crate::error::{invalid, Result};

/// Runs work on a dedicated pool of a fixed size, or on the global pool.
#[derive(Debug)]
pub struct Executor {
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl Executor {
    /// `threads = None` uses the global pool; `Some(n)` builds an n-worker
    /// pool. Without the `parallel` feature everything runs inline.
    pub fn new(threads: Option<usize>) -> Result<Self> {
        if threads == Some(0) {
            return Err(invalid("threads", "must be at least 1"));
        }
        #[cfg(feature = "parallel")]
        {
            let pool = match threads {
                Some(n) => Some(
                    rayon::ThreadPoolBuilder::new()
                        .num_threads(n)
                        .build()
                        .map_err(|e| invalid("threads", e.to_string()))?,
                ),
                None => None,
            };
            Ok(Self { pool })
        }
        #[cfg(not(feature = "parallel"))]
        {
            Ok(Self {})
        }
    }

    pub fn sequential() -> Self {
        Self::new(Some(1)).expect("one worker is valid")
    }

    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> T {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.install(f);
        }
        f()
    }
}

impl Default for Executor {
    fn default() -> Self {
        Self::new(None).expect("global pool")
    }
}

/// `f(0..n)` collected in index order, in parallel when available.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
