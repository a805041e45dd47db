//! Seeded Monte Carlo plumbing.
//!
//! Every estimator splits its `n` draws into fixed-size chunks. Chunk `k`
//! draws from ChaCha stream `k` of the run seed, so the result does not
//! depend on how many worker threads process the chunks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::scalar::{lit, Real};

/// Draws per substream.
pub const CHUNK: usize = 1 << 14;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate<T> {
    pub value: T,
    pub std_error: T,
    pub n: usize,
    pub seed: u64,
}

/// RNG for substream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mean of `f` over `n` draws, each chunk drawing from its own substream.
///
/// `f` receives the chunk RNG and returns one observation.
pub fn chunked_mean<T, F>(n: usize, seed: u64, f: F) -> McEstimate<T>
where
    T: Real,
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(seed, k as u64);
            let len = CHUNK.min(n - k * CHUNK);
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..len {
                let v = f(&mut rng);
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = partial
        .iter()
        .fold((0.0, 0.0), |(a, b), &(c, d)| (a + c, b + d));
    let nf = n.max(1) as f64;
    let mean = s / nf;
    let var = if n > 1 {
        ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    McEstimate {
        value: lit(mean),
        std_error: lit((var / nf).sqrt()),
        n,
        seed,
    }
}
