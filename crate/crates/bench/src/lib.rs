//! Inputs shared by the benchmarks.

use modex::sampling::sample_genuine_signatures;
use modex::synth::chain_tbox;
use modex::{SignatureSet, TBox};

/// A chain TBox of `n` rules with `samples` genuine signatures drawn from it.
pub fn chain_with_signatures(n: usize, samples: usize, seed: u64) -> (TBox, Vec<SignatureSet>) {
    let t = chain_tbox(n);
    let sigs = sample_genuine_signatures(&t, samples, seed).expect("chain has rules");
    (t, sigs)
}
