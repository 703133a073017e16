//! Benchmark fixtures.

use stochmatch::{ArrivalDistribution, CompatibilityGraph, FiniteBufferChain, Policy, Word};

pub const PAW_MU: [f64; 4] = [0.2, 0.3, 0.25, 0.25];

pub fn paw() -> CompatibilityGraph {
    CompatibilityGraph::builtin("paw").expect("builtin")
}

pub fn paw_chain(policy: Policy, capacity: usize) -> FiniteBufferChain {
    let mu = ArrivalDistribution::new(PAW_MU.to_vec()).expect("valid mu");
    FiniteBufferChain::new(paw(), policy, capacity, mu).expect("valid chain")
}

/// Deterministic word cycling through the classes with a stride.
pub fn strided_word(n: usize, len: usize, stride: usize) -> Word {
    let letters: Vec<u8> = (0..len).map(|i| (1 + (i * stride) % n) as u8).collect();
    Word::from_slice(&letters)
}
