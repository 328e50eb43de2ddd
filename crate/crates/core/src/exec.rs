//! How per-node work inside one synchronous round is scheduled.
//!
//! Solvers hand each phase of a round to a [`RoundExecutor`] as an indexed
//! map. Every task reads only state frozen at the start of the phase, so the
//! result is the same whether tasks run one after another or in parallel.

use alloc::vec::Vec;

pub trait RoundExecutor: Sync {
    /// Evaluates `f(0), …, f(len - 1)` and returns the results in index order.
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs tasks in index order on the calling thread.
#[derive(Debug, Default, Clone, Copy)]
pub struct Sequential;

impl RoundExecutor for Sequential {
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..len).map(f).collect()
    }
}
