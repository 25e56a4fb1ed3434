//! Uniform random `b`-subsets of `{0, …, n−1}` without replacement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Name of the generator behind every seeded stream, recorded in trace headers.
pub const GENERATOR_NAME: &str = "ChaCha8Rng (rand_chacha 0.9, seed_from_u64, stream = run index)";

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error("batch size {b} not in [1, {n}]")]
    BatchSize { n: usize, b: usize },
}

/// A mini-batch index set in canonical (ascending) order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MiniBatch {
    indices: Vec<usize>,
}

impl MiniBatch {
    /// Builds a batch from arbitrary distinct indices.
    pub fn from_indices(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]), "duplicate index");
        MiniBatch { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Creates the generator for `seed`, on stream `run` so parallel runs
/// derived from one master seed never share a sequence.
pub fn seeded_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

/// Reusable sampler holding a permutation of `0..n`.
///
/// Draws run a partial Fisher–Yates shuffle over the pool: `b` swaps when
/// `b ≤ n/2`, otherwise `n − b` swaps selecting the complement. Any
/// permutation is a valid starting state, so the pool is never reset.
#[derive(Debug, Clone)]
pub struct Sampler {
    pool: Vec<usize>,
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(n: usize, rng: ChaCha8Rng) -> Self {
        Sampler {
            pool: (0..n).collect(),
            rng,
        }
    }

    pub fn n(&self) -> usize {
        self.pool.len()
    }

    pub fn draw(&mut self, b: usize) -> Result<MiniBatch, SamplerError> {
        draw_from_pool(&mut self.pool, b, &mut self.rng)
    }
}

/// One-shot draw of a uniform `b`-subset of `0..n`.
pub fn draw<R: Rng + ?Sized>(n: usize, b: usize, rng: &mut R) -> Result<MiniBatch, SamplerError> {
    let mut pool: Vec<usize> = (0..n).collect();
    draw_from_pool(&mut pool, b, rng)
}

fn draw_from_pool<R: Rng + ?Sized>(
    pool: &mut [usize],
    b: usize,
    rng: &mut R,
) -> Result<MiniBatch, SamplerError> {
    let n = pool.len();
    if b == 0 || b > n {
        return Err(SamplerError::BatchSize { n, b });
    }
    let take_complement = b > n / 2;
    let k = if take_complement { n - b } else { b };
    for i in 0..k {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    let chosen = if take_complement {
        &pool[k..]
    } else {
        &pool[..k]
    };
    Ok(MiniBatch::from_indices(chosen.to_vec()))
}
