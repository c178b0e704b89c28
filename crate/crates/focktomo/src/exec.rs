//! Deterministic block-parallel execution.
//!
//! Work is split into fixed-size blocks indexed `0..block_count`; per-block
//! results are combined in block order. Block boundaries depend only on the
//! input length, never on the worker count, so [`Exec::Parallel`] and
//! [`Exec::Sequential`] produce bit-identical results. Seeded operations give
//! each block its own RNG stream via [`stream_rng`].

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Default number of items per block.
pub const BLOCK_LEN: usize = 1024;

/// Stream-id bases keep RNG streams of different subsystems disjoint under a
/// shared run seed (blocks/replicates index within each base).
pub const STREAM_SAMPLER_BASE: u64 = 0;
pub const STREAM_BOOTSTRAP_BASE: u64 = 1 << 32;
pub const STREAM_SYNTH_BASE: u64 = 2 << 32;

/// Execution strategy for data-parallel inner loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

#[allow(clippy::derivable_impls)] // default depends on the feature set
impl Default for Exec {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Exec::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Exec::Sequential
        }
    }
}

/// Number of blocks covering `0..len` at `block_len` items per block.
pub fn block_count(len: usize, block_len: usize) -> usize {
    assert!(block_len > 0, "block_len must be positive");
    len.div_ceil(block_len)
}

/// Index range of block `b`.
pub fn block_range(b: usize, len: usize, block_len: usize) -> Range<usize> {
    let start = b * block_len;
    start..((start + block_len).min(len))
}

impl Exec {
    /// Run `f` once per block, returning per-block results in block order.
    pub fn map_blocks<T, F>(self, len: usize, block_len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, Range<usize>) -> T + Sync,
    {
        let blocks = block_count(len, block_len);
        match self {
            Exec::Sequential => (0..blocks)
                .map(|b| f(b, block_range(b, len, block_len)))
                .collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => (0..blocks)
                .into_par_iter()
                .map(|b| f(b, block_range(b, len, block_len)))
                .collect(),
        }
    }

    /// Run `f` once per block and concatenate the per-block vectors in block
    /// order.
    pub fn flat_map_blocks<T, F>(self, len: usize, block_len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, Range<usize>) -> Vec<T> + Sync,
    {
        let mut out = Vec::with_capacity(len);
        for part in self.map_blocks(len, block_len, f) {
            out.extend(part);
        }
        out
    }
}

/// RNG for one block/replicate: one ChaCha key per user seed, one counter
/// stream per work unit. Streams are independent by construction, so outputs
/// do not depend on how blocks are scheduled across workers.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Running compensated (Neumaier) sum; fixed summation order still matters
/// for bit-level determinism, this only reduces round-off.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
