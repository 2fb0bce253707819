//! Problem representation: upload capacities, layer rates, and nested demands.
//!
//! An [`Instance`] describes a fully connected overlay with one source and
//! `k` peers. The stream is split into `n` layers; peer `i` demands layers
//! `1..=max_layer(i)`, so the per-layer demand sets are nested by
//! construction. Capacity sums over a demand set include the source, while
//! demander counts exclude it.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::Rational;

/// A node of the overlay: the single source, or a peer by 0-based index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Source,
    Peer(usize),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Source => write!(f, "source"),
            Node::Peer(i) => write!(f, "peer#{i}"),
        }
    }
}

/// One peer: stable id, upload capacity, and the highest layer it demands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Peer {
    pub id: String,
    pub capacity: Rational,
    pub max_layer: usize,
}

/// A validated problem instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    source_capacity: Rational,
    peers: Vec<Peer>,
    layer_rates: Vec<Rational>,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed instance JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("instance needs at least one peer")]
    NoPeers,
    #[error("instance needs at least one layer")]
    NoLayers,
    #[error("source capacity must be non-negative, got {0}")]
    NegativeSourceCapacity(Rational),
    #[error("peer {id:?} capacity must be non-negative, got {capacity}")]
    NegativeCapacity { id: String, capacity: Rational },
    #[error("layer {layer} rate must be non-negative, got {rate}")]
    NegativeRate { layer: usize, rate: Rational },
    #[error("peer {id:?} demands layer {max_layer}, outside 1..={layers}")]
    DemandOutOfRange {
        id: String,
        max_layer: i64,
        layers: usize,
    },
    #[error("no peer demands the top layer {0}")]
    NoTopLayerDemander(usize),
    #[error("duplicate peer id {0:?}")]
    DuplicatePeerId(String),
    #[error("peer id {0:?} is reserved for the source")]
    ReservedPeerId(String),
    #[error("expected {expected} layer rates, got {got}")]
    RateLengthMismatch { expected: usize, got: usize },
}

impl Instance {
    pub fn new(
        source_capacity: Rational,
        peers: Vec<Peer>,
        layer_rates: Vec<Rational>,
    ) -> Result<Self, ModelError> {
        if peers.is_empty() {
            return Err(ModelError::NoPeers);
        }
        if layer_rates.is_empty() {
            return Err(ModelError::NoLayers);
        }
        if source_capacity.is_negative() {
            return Err(ModelError::NegativeSourceCapacity(source_capacity));
        }
        let n = layer_rates.len();
        let mut seen = BTreeSet::new();
        for peer in &peers {
            if peer.id == "source" {
                return Err(ModelError::ReservedPeerId(peer.id.clone()));
            }
            if !seen.insert(peer.id.clone()) {
                return Err(ModelError::DuplicatePeerId(peer.id.clone()));
            }
            if peer.capacity.is_negative() {
                return Err(ModelError::NegativeCapacity {
                    id: peer.id.clone(),
                    capacity: peer.capacity.clone(),
                });
            }
            if peer.max_layer < 1 || peer.max_layer > n {
                return Err(ModelError::DemandOutOfRange {
                    id: peer.id.clone(),
                    max_layer: peer.max_layer as i64,
                    layers: n,
                });
            }
        }
        for (idx, rate) in layer_rates.iter().enumerate() {
            if rate.is_negative() {
                return Err(ModelError::NegativeRate {
                    layer: idx + 1,
                    rate: rate.clone(),
                });
            }
        }
        if !peers.iter().any(|p| p.max_layer == n) {
            return Err(ModelError::NoTopLayerDemander(n));
        }
        Ok(Instance {
            source_capacity,
            peers,
            layer_rates,
        })
    }

    /// Same capacities and demands with replaced layer rates.
    pub fn with_layer_rates(&self, layer_rates: Vec<Rational>) -> Result<Self, ModelError> {
        if layer_rates.len() != self.layer_rates.len() {
            return Err(ModelError::RateLengthMismatch {
                expected: self.layer_rates.len(),
                got: layer_rates.len(),
            });
        }
        Instance::new(self.source_capacity.clone(), self.peers.clone(), layer_rates)
    }

    pub fn peer_count(&self) -> usize {
        self.peers.len()
    }

    pub fn layer_count(&self) -> usize {
        self.layer_rates.len()
    }

    pub fn source_capacity(&self) -> &Rational {
        &self.source_capacity
    }

    pub fn peers(&self) -> &[Peer] {
        &self.peers
    }

    pub fn peer(&self, idx: usize) -> &Peer {
        &self.peers[idx]
    }

    pub fn layer_rates(&self) -> &[Rational] {
        &self.layer_rates
    }

    /// Rate of layer `j` (1-based).
    pub fn layer_rate(&self, j: usize) -> &Rational {
        &self.layer_rates[j - 1]
    }

    pub fn capacity_of(&self, node: Node) -> &Rational {
        match node {
            Node::Source => &self.source_capacity,
            Node::Peer(i) => &self.peers[i].capacity,
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        std::iter::once(Node::Source).chain((0..self.peers.len()).map(Node::Peer))
    }

    /// Sum of all layer rates.
    pub fn total_rate(&self) -> Rational {
        self.layer_rates.iter().sum()
    }

    /// `C_0 + sum of all peer capacities`.
    pub fn total_capacity(&self) -> Rational {
        &self.source_capacity + self.peers.iter().map(|p| &p.capacity).sum::<Rational>()
    }

    pub fn is_demander(&self, peer_idx: usize, layer: usize) -> bool {
        self.peers[peer_idx].max_layer >= layer
    }

    /// 0-based indices of the peers demanding layer `j`, ascending.
    /// `j = n + 1` yields the empty set (only the source "demands" it).
    pub fn demanders(&self, layer: usize) -> impl Iterator<Item = usize> + '_ {
        self.peers
            .iter()
            .enumerate()
            .filter(move |(_, p)| p.max_layer >= layer)
            .map(|(i, _)| i)
    }

    /// `|X_j|` with the source excluded.
    pub fn demander_count(&self, layer: usize) -> usize {
        self.demanders(layer).count()
    }

    /// Capacity sum over the demand set of layer `j`, source included.
    pub fn capacity_sum(&self, layer: usize) -> Rational {
        &self.source_capacity
            + self
                .demanders(layer)
                .map(|i| &self.peers[i].capacity)
                .sum::<Rational>()
    }

    pub fn node_label(&self, node: Node) -> String {
        match node {
            Node::Source => "source".to_string(),
            Node::Peer(i) => self.peers[i].id.clone(),
        }
    }

    pub fn peer_index_by_id(&self, id: &str) -> Option<usize> {
        self.peers.iter().position(|p| p.id == id)
    }
}

/// Per-layer demander counts and capacity sums.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemandProfile {
    demander_count: Vec<usize>,
    capacity_sum: Vec<Rational>,
}

impl DemandProfile {
    /// `|X_j|` for 1-based `j`; `j = n + 1` gives 0.
    pub fn demander_count(&self, layer: usize) -> usize {
        if layer > self.demander_count.len() {
            0
        } else {
            self.demander_count[layer - 1]
        }
    }

    pub fn capacity_sum(&self, layer: usize) -> &Rational {
        &self.capacity_sum[layer - 1]
    }

    pub fn counts(&self) -> &[usize] {
        &self.demander_count
    }

    pub fn sums(&self) -> &[Rational] {
        &self.capacity_sum
    }
}

pub fn demand_profile(inst: &Instance) -> DemandProfile {
    let n = inst.layer_count();
    let mut demander_count = Vec::with_capacity(n);
    let mut capacity_sum = Vec::with_capacity(n);
    for j in 1..=n {
        demander_count.push(inst.demander_count(j));
        capacity_sum.push(inst.capacity_sum(j));
    }
    debug_assert!(demander_count.windows(2).all(|w| w[0] >= w[1]));
    debug_assert!(capacity_sum.windows(2).all(|w| w[0] >= w[1]));
    DemandProfile {
        demander_count,
        capacity_sum,
    }
}

#[derive(Serialize, Deserialize)]
struct PeerWire {
    id: String,
    capacity: Rational,
    max_layer: i64,
}

#[derive(Serialize, Deserialize)]
struct InstanceWire {
    source_capacity: Rational,
    peers: Vec<PeerWire>,
    layer_rates: Vec<Rational>,
}

/// Parses the documented instance JSON. Rationals are accepted as integers
/// or `"p/q"` strings; peer order in the file defines indices.
pub fn parse_instance(text: &str) -> Result<Instance, ModelError> {
    let wire: InstanceWire = serde_json::from_str(text)?;
    let n = wire.layer_rates.len();
    let mut peers = Vec::with_capacity(wire.peers.len());
    for p in wire.peers {
        if p.max_layer < 1 || p.max_layer > n as i64 {
            return Err(ModelError::DemandOutOfRange {
                id: p.id,
                max_layer: p.max_layer,
                layers: n,
            });
        }
        peers.push(Peer {
            id: p.id,
            capacity: p.capacity,
            max_layer: p.max_layer as usize,
        });
    }
    Instance::new(wire.source_capacity, peers, wire.layer_rates)
}

/// Canonical JSON for an instance; parsing it back yields an equal instance.
pub fn instance_to_json(inst: &Instance) -> String {
    let wire = InstanceWire {
        source_capacity: inst.source_capacity.clone(),
        peers: inst
            .peers
            .iter()
            .map(|p| PeerWire {
                id: p.id.clone(),
                capacity: p.capacity.clone(),
                max_layer: p.max_layer as i64,
            })
            .collect(),
        layer_rates: inst.layer_rates.clone(),
    };
    let mut out = serde_json::to_string_pretty(&wire).expect("instance serialization");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w1_json() -> &'static str {
        r#"{
            "source_capacity": 2,
            "peers": [
                {"id": "p1", "capacity": 0, "max_layer": 2},
                {"id": "p2", "capacity": 0, "max_layer": 2},
                {"id": "p3", "capacity": 4, "max_layer": 1}
            ],
            "layer_rates": [1, 1]
        }"#
    }

    #[test]
    fn parses_w1_demand_sets() {
        let inst = parse_instance(w1_json()).unwrap();
        assert_eq!(inst.peer_count(), 3);
        assert_eq!(inst.layer_count(), 2);
        assert_eq!(inst.demanders(1).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(inst.demanders(2).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(inst.demanders(3).count(), 0);
    }

    #[test]
    fn rejects_demand_out_of_range() {
        let text = r#"{
            "source_capacity": 1,
            "peers": [{"id": "p1", "capacity": 1, "max_layer": 3}],
            "layer_rates": [1, 1]
        }"#;
        match parse_instance(text) {
            Err(ModelError::DemandOutOfRange { max_layer: 3, .. }) => {}
            other => panic!("expected DemandOutOfRange, got {other:?}"),
        }
    }

    #[test]
    fn parses_rational_capacity_exactly() {
        let text = r#"{
            "source_capacity": "3/2",
            "peers": [{"id": "p1", "capacity": "1/3", "max_layer": 1}],
            "layer_rates": ["1/2"]
        }"#;
        let inst = parse_instance(text).unwrap();
        assert_eq!(*inst.source_capacity(), Rational::new(3, 2));
        assert_eq!(inst.peer(0).capacity, Rational::new(1, 3));
        assert_eq!(*inst.layer_rate(1), Rational::new(1, 2));
    }

    #[test]
    fn rejects_zero_denominator() {
        let text = r#"{
            "source_capacity": "1/0",
            "peers": [{"id": "p1", "capacity": 1, "max_layer": 1}],
            "layer_rates": [1]
        }"#;
        let err = parse_instance(text).unwrap_err();
        assert!(err.to_string().contains("denominator"), "{err}");
    }

    #[test]
    fn rejects_negative_and_structural_errors() {
        let bad_cap = r#"{
            "source_capacity": 1,
            "peers": [{"id": "p1", "capacity": -1, "max_layer": 1}],
            "layer_rates": [1]
        }"#;
        assert!(matches!(
            parse_instance(bad_cap),
            Err(ModelError::NegativeCapacity { .. })
        ));
        let no_top = r#"{
            "source_capacity": 1,
            "peers": [{"id": "p1", "capacity": 1, "max_layer": 1}],
            "layer_rates": [1, 1]
        }"#;
        assert!(matches!(
            parse_instance(no_top),
            Err(ModelError::NoTopLayerDemander(2))
        ));
        let dup = r#"{
            "source_capacity": 1,
            "peers": [
                {"id": "p1", "capacity": 1, "max_layer": 1},
                {"id": "p1", "capacity": 0, "max_layer": 1}
            ],
            "layer_rates": [1]
        }"#;
        assert!(matches!(
            parse_instance(dup),
            Err(ModelError::DuplicatePeerId(_))
        ));
        let bad_rate = r#"{
            "source_capacity": 1,
            "peers": [{"id": "p1", "capacity": 1, "max_layer": 1}],
            "layer_rates": ["-1/2"]
        }"#;
        assert!(matches!(
            parse_instance(bad_rate),
            Err(ModelError::NegativeRate { layer: 1, .. })
        ));
        let zero_layer = r#"{
            "source_capacity": 1,
            "peers": [
                {"id": "p1", "capacity": 1, "max_layer": 0},
                {"id": "p2", "capacity": 1, "max_layer": 1}
            ],
            "layer_rates": [1]
        }"#;
        assert!(matches!(
            parse_instance(zero_layer),
            Err(ModelError::DemandOutOfRange { max_layer: 0, .. })
        ));
    }

    #[test]
    fn w1_demand_profile() {
        let inst = parse_instance(w1_json()).unwrap();
        let profile = demand_profile(&inst);
        assert_eq!(profile.counts(), &[3, 2]);
        assert_eq!(
            profile.sums(),
            &[Rational::from(6i64), Rational::from(2i64)]
        );
    }

    #[test]
    fn single_peer_profile() {
        let inst = Instance::new(
            Rational::from(1i64),
            vec![Peer {
                id: "p1".into(),
                capacity: Rational::zero(),
                max_layer: 1,
            }],
            vec![Rational::from(1i64)],
        )
        .unwrap();
        let profile = demand_profile(&inst);
        assert_eq!(profile.counts(), &[1]);
        assert_eq!(profile.sums(), &[Rational::from(1i64)]);
    }

    #[test]
    fn w2_demand_profile() {
        let inst = Instance::new(
            Rational::from(3i64),
            vec![
                Peer { id: "p1".into(), capacity: Rational::zero(), max_layer: 3 },
                Peer { id: "p2".into(), capacity: Rational::zero(), max_layer: 3 },
                Peer { id: "p3".into(), capacity: Rational::from(3i64), max_layer: 2 },
                Peer { id: "p4".into(), capacity: Rational::from(4i64), max_layer: 1 },
            ],
            vec![
                Rational::from(1i64),
                Rational::from(1i64),
                Rational::from(1i64),
            ],
        )
        .unwrap();
        let profile = demand_profile(&inst);
        assert_eq!(profile.counts(), &[4, 3, 2]);
        assert_eq!(
            profile.sums(),
            &[
                Rational::from(10i64),
                Rational::from(6i64),
                Rational::from(3i64)
            ]
        );
    }

    #[test]
    fn round_trips_through_json() {
        let inst = parse_instance(w1_json()).unwrap();
        let text = instance_to_json(&inst);
        let back = parse_instance(&text).unwrap();
        assert_eq!(inst, back);
    }
}
