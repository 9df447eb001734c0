//! Replica batches and the worker pool that evaluates them.
//!
//! Paths are never materialized as a whole batch: each replica is generated
//! inside the worker that consumes it and reduced to whatever functional the
//! caller needs. Results come back in replica order, so downstream pairwise
//! reductions see the same inputs regardless of the worker count.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{ensure, Error, Result};
use crate::far::write_path_csv;
use crate::hilbert::HilbertVec;

use super::source::PathSource;

pub struct Runner {
    pool: rayon::ThreadPool,
    workers: usize,
}

impl Runner {
    /// A pool with `workers` threads, or one per available core.
    pub fn new(workers: Option<usize>) -> Result<Self> {
        let workers = match workers {
            Some(w) => {
                ensure(w >= 1, "workers must be at least 1")?;
                w
            }
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))?;
        Ok(Runner { pool, workers })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// `f(0), …, f(count − 1)` evaluated in parallel, returned in index order.
    pub fn map<T, F>(&self, count: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync,
    {
        self.pool
            .install(|| (0..count).into_par_iter().map(&f).collect())
    }
}

/// `R` independent replicas of length `n` from one source; replica `r` uses
/// stream `r` of `seed`.
pub struct PathBatch<'a> {
    source: &'a dyn PathSource,
    n: usize,
    replicas: usize,
    seed: u64,
}

pub fn simulate_batch<'a>(
    source: &'a dyn PathSource,
    n: usize,
    replicas: usize,
    seed: u64,
    max_values: u64,
) -> Result<PathBatch<'a>> {
    ensure(n >= 1, "horizon n must be at least 1")?;
    ensure(replicas >= 1, "replica count R must be at least 1")?;
    let requested = n as u128 * replicas as u128 * source.dim() as u128;
    if requested > max_values as u128 {
        return Err(Error::ResourceLimit {
            requested,
            cap: max_values as u128,
        });
    }
    Ok(PathBatch {
        source,
        n,
        replicas,
        seed,
    })
}

impl<'a> PathBatch<'a> {
    pub fn source(&self) -> &'a dyn PathSource {
        self.source
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn replicas(&self) -> usize {
        self.replicas
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    /// Increments `X_1, …, X_n` of one replica (`path[i − 1] = X_i`).
    pub fn path(&self, replica: usize) -> Result<Vec<HilbertVec>> {
        ensure(
            replica < self.replicas,
            format!("replica {replica} out of range"),
        )?;
        self.source.path(self.n, self.seed, replica as u64)
    }

    /// `S_0 = 0, S_1, …, S_n` of one replica.
    pub fn partial_sums(&self, replica: usize) -> Result<Vec<HilbertVec>> {
        Ok(partial_sums(&self.path(replica)?))
    }

    /// Applies `f(replica, path)` to every replica in parallel.
    pub fn map_paths<T, F>(&self, runner: &Runner, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize, &[HilbertVec]) -> Result<T> + Sync,
    {
        runner.map(self.replicas, |r| f(r, &self.path(r)?))
    }

    /// Writes `path_<seed>_<replica>.csv` for every replica into `dir`.
    pub fn write_csv_dir(&self, dir: &Path, runner: &Runner) -> Result<Vec<PathBuf>> {
        self.map_paths(runner, |r, path| {
            let file = dir.join(format!("path_{}_{}.csv", self.seed, r));
            write_path_csv(path, BufWriter::new(File::create(&file)?))?;
            Ok(file)
        })
    }
}

/// `S_0 = 0, S_1 = X_1, …, S_n`.
pub fn partial_sums(path: &[HilbertVec]) -> Vec<HilbertVec> {
    let dim = path.first().map_or(0, HilbertVec::dim);
    let mut acc = HilbertVec::zeros(dim);
    let mut out = Vec::with_capacity(path.len() + 1);
    out.push(acc.clone());
    for x in path {
        acc += x;
        out.push(acc.clone());
    }
    out
}
