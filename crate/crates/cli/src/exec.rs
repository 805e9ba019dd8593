//! Rayon-backed row executor.

use anyhow::{Context, Result};
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use vrcockpit_core::render::{RowExecutor, Sample};

/// Renders rows on a rayon pool. Output is independent of the thread
/// count because rows are pure and collected in order.
pub struct Parallel {
    pool: ThreadPool,
}

impl Parallel {
    /// `None` uses rayon's default thread count.
    pub fn new(threads: Option<usize>) -> Result<Parallel> {
        let mut b = ThreadPoolBuilder::new();
        if let Some(n) = threads {
            b = b.num_threads(n.max(1));
        }
        Ok(Parallel { pool: b.build().context("starting render threads")? })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl RowExecutor for Parallel {
    fn map_rows(&self, rows: usize, job: &(dyn Fn(usize) -> Vec<Sample> + Sync)) -> Vec<Vec<Sample>> {
        self.pool.install(|| (0..rows).into_par_iter().map(job).collect())
    }
}
