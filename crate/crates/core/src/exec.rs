//! Execution strategy for embarrassingly parallel loops.
//!
//! Implementations must return results in index order; every reduction
//! happens afterwards on the ordered vector, so the outcome does not depend on
//! the executor.

use alloc::vec::Vec;

pub trait Executor: Sync {
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..len).map(f).collect()
    }
}
