use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{GwError, Result};
use crate::sampler::{PlaneTree, TreeSampler};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replicate `rep` under `master`.
pub fn replicate_seed(master: u64, rep: u64) -> u64 {
    mix64(master.wrapping_add(mix64(rep.wrapping_add(1).wrapping_mul(GOLDEN))))
}

/// Master seed of an auxiliary stream, so reference samples never reuse
/// the replicate streams.
pub fn stream_seed(master: u64, tag: &str) -> u64 {
    tag.bytes().fold(mix64(master ^ GOLDEN), |h, b| mix64(h ^ u64::from(b)))
}

pub fn replicate_rng(master: u64, rep: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(replicate_seed(master, rep as u64))
}

/// Maps replicates in parallel; results come back in replicate order.
pub struct Runner {
    pool: Option<rayon::ThreadPool>,
}

impl Runner {
    /// `None` uses the global rayon pool.
    pub fn new(workers: Option<usize>) -> Result<Self> {
        let pool = match workers {
            None => None,
            Some(w) => Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(w)
                    .build()
                    .map_err(|e| GwError::InvalidParameter(format!("cannot start {w} workers: {e}")))?,
            ),
        };
        Ok(Runner { pool })
    }

    pub fn map<T, F>(&self, reps: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        let run = || (0..reps).into_par_iter().map(&f).collect();
        match &self.pool {
            Some(pool) => pool.install(run),
            None => run(),
        }
    }
}

/// Per-replicate values with the INVALID and failed replicates counted.
#[derive(Debug, Clone)]
pub struct Replicates<T> {
    pub values: Vec<(usize, T)>,
    pub invalid: usize,
    pub failed: usize,
    pub first_error: Option<String>,
}

impl<T> Replicates<T> {
    pub fn total(&self) -> usize {
        self.values.len() + self.invalid + self.failed
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.values.iter().map(|(_, v)| v)
    }
}

/// Samples one tree per replicate and reduces it with `f`.
pub fn sample_replicates<T, F>(runner: &Runner, sampler: &TreeSampler, master: u64, reps: usize, f: F) -> Replicates<T>
where
    T: Send,
    F: Fn(&PlaneTree) -> T + Sync + Send,
{
    let raw = runner.map(reps, |rep| {
        let mut rng = replicate_rng(master, rep);
        sampler.sample(&mut rng).map(|t| t.map(|t| f(&t)))
    });
    let mut out = Replicates { values: Vec::with_capacity(reps), invalid: 0, failed: 0, first_error: None };
    for (rep, r) in raw.into_iter().enumerate() {
        match r {
            Ok(Some(v)) => out.values.push((rep, v)),
            Ok(None) => out.invalid += 1,
            Err(e) => {
                out.failed += 1;
                out.first_error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    out
}
