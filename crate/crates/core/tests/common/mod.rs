#![allow(dead_code)]

use lago_core::exec::RoundExecutor;

/// Splits each phase into contiguous chunks, one scoped thread per chunk.
pub struct Threads(pub usize);

impl RoundExecutor for Threads {
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        let chunk = len.div_ceil(self.0.max(1)).max(1);
        let f = &f;
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..len)
                .step_by(chunk)
                .map(|start| s.spawn(move || (start..(start + chunk).min(len)).map(f).collect::<Vec<_>>()))
                .collect();
            handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
        })
    }
}
