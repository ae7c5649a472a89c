//! Parallel execution of independent experiment cells with an ordered sink.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;

use rayon::prelude::*;
use rayon::ThreadPoolBuilder;

use crate::CliError;

/// Runs `work` on every cell on a pool of `jobs` threads (0 picks the
/// machine default) and hands results to `sink` in cell order as soon as each
/// prefix completes. The first error stops the sink and skips cells that
/// have not started.
pub fn run_ordered<C, R, W, S>(cells: &[C], jobs: usize, work: W, mut sink: S) -> Result<(), CliError>
where
    C: Sync,
    R: Send,
    W: Fn(&C) -> Result<R, CliError> + Sync,
    S: FnMut(R) -> Result<(), CliError>,
{
    let pool = ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let cancelled = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel();
    let (work, cancelled_ref) = (&work, &cancelled);
    pool.in_place_scope(|scope| {
        scope.spawn(move |_| {
            cells.par_iter().enumerate().for_each_with(tx, |tx, (i, cell)| {
                if !cancelled_ref.load(Ordering::Relaxed) {
                    let _ = tx.send((i, work(cell)));
                }
            });
        });
        let mut pending = BTreeMap::new();
        let mut next = 0;
        for (i, result) in rx.iter() {
            pending.insert(i, result);
            while let Some(result) = pending.remove(&next) {
                next += 1;
                if let Err(e) = result.and_then(&mut sink) {
                    cancelled.store(true, Ordering::Relaxed);
                    return Err(e);
                }
            }
        }
        Ok(())
    })
}
