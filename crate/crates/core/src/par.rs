//! Order-preserving data-parallel map with a sequential fallback.

/// Runs independent work items either on a dedicated rayon pool or inline.
///
/// Results always come back in input order, so output never depends on the
/// number of jobs as long as each item is itself deterministic.
pub struct Executor {
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl Executor {
    /// `jobs == 0` uses every available core, `jobs == 1` runs inline.
    pub fn new(jobs: usize) -> Self {
        #[cfg(feature = "parallel")]
        {
            if jobs == 1 {
                return Self { pool: None };
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .ok();
            Self { pool }
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = jobs;
            Self {}
        }
    }

    pub fn sequential() -> Self {
        Self::new(1)
    }

    pub fn is_parallel(&self) -> bool {
        #[cfg(feature = "parallel")]
        {
            self.pool.is_some()
        }
        #[cfg(not(feature = "parallel"))]
        {
            false
        }
    }

    pub fn threads(&self) -> usize {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.current_num_threads();
        }
        1
    }

    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| items.par_iter().map(&f).collect());
        }
        items.iter().map(f).collect()
    }

    /// Like [`map`](Self::map) but short-circuits on the first error in input order.
    pub fn try_map<T, R, E, F>(&self, items: &[T], f: F) -> Result<Vec<R>, E>
    where
        T: Sync,
        R: Send,
        E: Send,
        F: Fn(&T) -> Result<R, E> + Sync + Send,
    {
        self.map(items, f).into_iter().collect()
    }
}

impl Default for Executor {
    fn default() -> Self {
        Self::sequential()
    }
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor")
            .field("threads", &self.threads())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order_for_any_job_count() {
        let items: Vec<u64> = (0..1000).collect();
        let expected: Vec<u64> = items.iter().map(|x| x * x + 1).collect();
        for jobs in [0, 1, 2, 7] {
            let exec = Executor::new(jobs);
            assert_eq!(exec.map(&items, |x| x * x + 1), expected);
        }
    }

    #[test]
    fn try_map_reports_first_error() {
        let exec = Executor::new(4);
        let items: Vec<i32> = (0..100).collect();
        let out: Result<Vec<i32>, i32> =
            exec.try_map(&items, |&x| if x % 30 == 29 { Err(x) } else { Ok(x) });
        assert_eq!(out, Err(29));
    }
}
