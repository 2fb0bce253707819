//! Transmission plan data model and its JSON wire format.
//!
//! A plan is an ordered list of relay phases followed by distribution
//! trees. Each element carries a half-open rational interval of one layer's
//! stream; intervals are the routing-level unit of "distinct information".
//! The structures here are plain data: the scheduler emits them and the
//! verifier re-derives every property from scratch, so nothing in this
//! module enforces semantic validity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Instance, Node};
use crate::rational::Rational;

/// Half-open interval `[start, end)` of one layer's stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub layer: usize,
    pub start: Rational,
    pub end: Rational,
}

impl Segment {
    pub fn new(layer: usize, start: Rational, end: Rational) -> Self {
        Segment { layer, start, end }
    }

    pub fn width(&self) -> Rational {
        &self.end - &self.start
    }
}

/// Source hands a sub-portion of the phase's portion to one helper.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelaySend {
    pub helper: usize,
    pub segment: Segment,
    pub rate: Rational,
}

/// Helper forwards the sub-portion it received to the layer's demanders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelayForward {
    pub helper: usize,
    pub segment: Segment,
    pub rate: Rational,
    pub recipients: Vec<usize>,
}

/// One relay iteration: the source splits a portion of layer `layer`
/// across helpers, each helper fans its piece out to all demanders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelayPhase {
    pub layer: usize,
    pub source_to: Vec<RelaySend>,
    pub helper_to: Vec<RelayForward>,
}

/// A source-rooted distribution tree carrying one segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanTree {
    pub segment: Segment,
    pub rate: Rational,
    pub edges: Vec<(Node, Node)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TransmissionPlan {
    pub phases: Vec<RelayPhase>,
    pub trees: Vec<PlanTree>,
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("malformed plan JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("plan references unknown node id {0:?}")]
    UnknownNode(String),
}

#[derive(Serialize, Deserialize)]
struct SendWire {
    helper: String,
    interval: [Rational; 2],
    rate: Rational,
}

#[derive(Serialize, Deserialize)]
struct ForwardWire {
    helper: String,
    interval: [Rational; 2],
    rate: Rational,
    recipients: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum ItemWire {
    Relay {
        layer: usize,
        source_to: Vec<SendWire>,
        helper_to: Vec<ForwardWire>,
    },
    Tree {
        layer: usize,
        interval: [Rational; 2],
        rate: Rational,
        edges: Vec<[String; 2]>,
    },
}

fn peer_by_id(inst: &Instance, id: &str) -> Result<usize, PlanError> {
    inst.peer_index_by_id(id)
        .ok_or_else(|| PlanError::UnknownNode(id.to_string()))
}

fn node_by_id(inst: &Instance, id: &str) -> Result<Node, PlanError> {
    if id == "source" {
        Ok(Node::Source)
    } else {
        peer_by_id(inst, id).map(Node::Peer)
    }
}

/// Serializes a plan into the documented JSON: a top-level array of
/// `relay` and `tree` objects with exact rational strings throughout.
pub fn plan_to_json(inst: &Instance, plan: &TransmissionPlan) -> String {
    let mut items = Vec::new();
    for phase in &plan.phases {
        items.push(ItemWire::Relay {
            layer: phase.layer,
            source_to: phase
                .source_to
                .iter()
                .map(|s| SendWire {
                    helper: inst.node_label(Node::Peer(s.helper)),
                    interval: [s.segment.start.clone(), s.segment.end.clone()],
                    rate: s.rate.clone(),
                })
                .collect(),
            helper_to: phase
                .helper_to
                .iter()
                .map(|f| ForwardWire {
                    helper: inst.node_label(Node::Peer(f.helper)),
                    interval: [f.segment.start.clone(), f.segment.end.clone()],
                    rate: f.rate.clone(),
                    recipients: f
                        .recipients
                        .iter()
                        .map(|&r| inst.node_label(Node::Peer(r)))
                        .collect(),
                })
                .collect(),
        });
    }
    for tree in &plan.trees {
        items.push(ItemWire::Tree {
            layer: tree.segment.layer,
            interval: [tree.segment.start.clone(), tree.segment.end.clone()],
            rate: tree.rate.clone(),
            edges: tree
                .edges
                .iter()
                .map(|&(from, to)| [inst.node_label(from), inst.node_label(to)])
                .collect(),
        });
    }
    let mut out = serde_json::to_string_pretty(&items).expect("plan serialization");
    out.push('\n');
    out
}

/// Parses the plan JSON against an instance. Node ids must resolve; all
/// semantic checks are left to the verifier.
pub fn plan_from_json(inst: &Instance, text: &str) -> Result<TransmissionPlan, PlanError> {
    let items: Vec<ItemWire> = serde_json::from_str(text)?;
    let mut plan = TransmissionPlan::default();
    for item in items {
        match item {
            ItemWire::Relay {
                layer,
                source_to,
                helper_to,
            } => {
                let mut phase = RelayPhase {
                    layer,
                    source_to: Vec::with_capacity(source_to.len()),
                    helper_to: Vec::with_capacity(helper_to.len()),
                };
                for s in source_to {
                    let [start, end] = s.interval;
                    phase.source_to.push(RelaySend {
                        helper: peer_by_id(inst, &s.helper)?,
                        segment: Segment::new(layer, start, end),
                        rate: s.rate,
                    });
                }
                for f in helper_to {
                    let [start, end] = f.interval;
                    phase.helper_to.push(RelayForward {
                        helper: peer_by_id(inst, &f.helper)?,
                        segment: Segment::new(layer, start, end),
                        rate: f.rate,
                        recipients: f
                            .recipients
                            .iter()
                            .map(|id| peer_by_id(inst, id))
                            .collect::<Result<_, _>>()?,
                    });
                }
                plan.phases.push(phase);
            }
            ItemWire::Tree {
                layer,
                interval,
                rate,
                edges,
            } => {
                let [start, end] = interval;
                plan.trees.push(PlanTree {
                    segment: Segment::new(layer, start, end),
                    rate,
                    edges: edges
                        .iter()
                        .map(|[from, to]| {
                            Ok((node_by_id(inst, from)?, node_by_id(inst, to)?))
                        })
                        .collect::<Result<_, PlanError>>()?,
                });
            }
        }
    }
    Ok(plan)
}
