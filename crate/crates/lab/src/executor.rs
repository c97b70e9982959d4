//! Rayon backed executor. Results come back in index order, so reductions
//! done by the core do not depend on the number of threads.

use carleman_core::exec::Executor;
use rayon::prelude::*;

pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    /// `jobs = 0` lets rayon pick the thread count.
    pub fn new(jobs: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
        Ok(RayonExecutor { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for RayonExecutor {
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool
            .install(|| (0..len).into_par_iter().map(f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use carleman_core::exec::Sequential;

    #[test]
    fn matches_sequential_order() {
        let exec = RayonExecutor::new(4).unwrap();
        let f = |i: usize| (i as f64).sqrt() * 3.0;
        assert_eq!(exec.map(1000, f), Sequential.map(1000, f));
    }
}
