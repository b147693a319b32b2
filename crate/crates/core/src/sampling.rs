//! Seeded signature sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{SignatureSet, TBox};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplingError {
    #[error("cannot sample rule signatures from an empty TBox")]
    EmptyTBox,
    #[error("inclusion probability {0} is outside [0, 1]")]
    Probability(f64),
}

/// Signatures of `n` rules drawn uniformly with replacement, without ⊥, ⊤
/// and equality.
pub fn sample_genuine_signatures(t: &TBox, n: usize, seed: u64) -> Result<Vec<SignatureSet>, SamplingError> {
    if t.is_empty() {
        return Err(SamplingError::EmptyTBox);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let r = &t.rules()[rng.gen_range(0..t.len())];
            r.signature().symbols().cloned().collect()
        })
        .collect())
}

/// Each symbol of sig(T) independently with probability `p`.
pub fn sample_random_signature(t: &TBox, p: f64, seed: u64) -> Result<SignatureSet, SamplingError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SamplingError::Probability(p));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(t.signature().symbols().filter(|_| rng.gen_bool(p)).cloned().collect())
}
