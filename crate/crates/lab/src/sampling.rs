//! Chunked parallel sampling with per-chunk derived streams.
//!
//! Draw `i` of a request always lands in chunk `i / CHUNK` and is produced by
//! the stream derived from `(seed, purpose, chunk)`, so the output does not
//! depend on the number of worker threads.

use rayon::prelude::*;
use slr_core::rng::derive_stream;
use slr_core::{EvidencePair, Hypothesis, PairModel, SamplingMode};

pub const CHUNK: usize = 2048;

/// `n` pairs under `h`. Distinct `purpose` tags give independent streams.
pub fn sample_pairs(
    model: &PairModel,
    h: Hypothesis,
    mode: SamplingMode,
    n: usize,
    seed: u64,
    purpose: &str,
) -> Vec<EvidencePair> {
    let tag = format!("{purpose}/{h}");
    let n_chunks = n.div_ceil(CHUNK);
    (0..n_chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = derive_stream(seed, &tag, c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            (0..len).map(move |_| model.sample_pair_with(h, mode, &mut rng)).collect::<Vec<_>>()
        })
        .collect()
}
