//! Deterministic instance sampling for the comparison harness.

use layercast_core::model::{Instance, Peer};
use layercast_core::rational::Rational;

/// SplitMix64: tiny, seedable, and stable across platforms and releases,
/// which keeps `--seed` reproducible forever.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform value in `0..bound` (`bound >= 1`).
    pub fn below(&mut self, bound: u64) -> u64 {
        self.next_u64() % bound.max(1)
    }
}

/// Bounds for random instances. Capacities lie in `0..=max_capacity` and
/// rates in `0..=max_rate`, as exact rationals with denominators up to
/// `max_denominator` (1 keeps everything integral).
#[derive(Debug, Clone)]
pub struct InstanceBounds {
    pub max_peers: usize,
    pub max_layers: usize,
    pub max_capacity: u64,
    pub max_rate: u64,
    pub max_denominator: u64,
}

impl Default for InstanceBounds {
    fn default() -> Self {
        InstanceBounds {
            max_peers: 4,
            max_layers: 3,
            max_capacity: 6,
            max_rate: 3,
            max_denominator: 1,
        }
    }
}

fn sample_rational(rng: &mut SplitMix64, max_value: u64, max_denominator: u64) -> Rational {
    let denom = 1 + rng.below(max_denominator.max(1));
    let numer = rng.below(max_value * denom + 1);
    Rational::from(numer) / Rational::from(denom)
}

/// Draws a valid instance within the bounds. The top layer always has at
/// least one demander.
pub fn sample_instance(rng: &mut SplitMix64, bounds: &InstanceBounds) -> Instance {
    let k = 1 + rng.below(bounds.max_peers as u64) as usize;
    let n = 1 + rng.below(bounds.max_layers as u64) as usize;
    let source_capacity = sample_rational(rng, bounds.max_capacity, bounds.max_denominator);
    let mut peers: Vec<Peer> = (0..k)
        .map(|i| Peer {
            id: format!("p{}", i + 1),
            capacity: sample_rational(rng, bounds.max_capacity, bounds.max_denominator),
            max_layer: 1 + rng.below(n as u64) as usize,
        })
        .collect();
    let top = rng.below(k as u64) as usize;
    peers[top].max_layer = n;
    let layer_rates = (0..n)
        .map(|_| sample_rational(rng, bounds.max_rate, bounds.max_denominator))
        .collect();
    Instance::new(source_capacity, peers, layer_rates).expect("sampled instance is valid")
}
