//! Seeded random streams.
//!
//! Every stochastic routine takes an explicit generator. Parallel work is
//! split into fixed blocks, and block `k` of a job seeded with `seed` draws
//! from `stream(seed, k)`, so results never depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

pub type Stream = ChaCha8Rng;

/// Independent stream `index` derived from a master seed.
pub fn stream(master_seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Fresh 64-bit seed drawn from an existing generator.
pub fn child_seed<R: Rng + ?Sized>(rng: &mut R) -> u64 {
    rng.random()
}

#[inline]
pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn fill_normal<R: Rng + ?Sized>(rng: &mut R, buf: &mut [f64]) {
    for v in buf.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
}

/// Number of fixed Monte Carlo blocks used by parallel estimators.
pub const MC_BLOCKS: usize = 64;

/// Split `n` samples into at most `MC_BLOCKS` contiguous block sizes.
pub fn block_sizes(n: usize) -> Vec<usize> {
    let blocks = MC_BLOCKS.min(n.max(1));
    let base = n / blocks;
    let extra = n % blocks;
    (0..blocks).map(|k| base + usize::from(k < extra)).collect()
}

/// Runs `job(rng, block_len)` once per Monte Carlo block in parallel and
/// returns the block results in block order.
pub fn run_blocks<T, F>(seed: u64, n: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut Stream, usize) -> T + Sync,
{
    block_sizes(n)
        .into_par_iter()
        .enumerate()
        .map(|(k, len)| job(&mut stream(seed, k as u64), len))
        .collect()
}
