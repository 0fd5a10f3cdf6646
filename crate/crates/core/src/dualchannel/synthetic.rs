//! A linearly separable toy task for sanity-checking the training loop.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::{Example, ModelConfig};
use crate::hashing::derive_seed;

/// `n` examples, alternating labels, whose token ids come from disjoint
/// halves of the vocabulary: class 0 draws from the lower half and class 1
/// from the upper half. The English channel carries the same ids, which is
/// what identity translation produces.
pub fn separable_set(config: &ModelConfig, n: usize, seed: u64) -> Vec<Example> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "dc.separable"));
    let half = (config.vocab_size / 2) as u32;
    let pool = half.min(16);
    (0..n)
        .map(|i| {
            let label = i % 2;
            let len = rng.gen_range(3..=8).min(config.max_length.max(1));
            let ids: Vec<u32> = (0..len)
                .map(|_| label as u32 * half + rng.gen_range(0..pool))
                .collect();
            Example {
                ids_cm: ids.clone(),
                ids_en: ids,
                label,
            }
        })
        .collect()
}
