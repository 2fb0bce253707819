//! Independent plan validation.
//!
//! The verifier trusts nothing about how a plan was produced. It re-derives
//! per-node upload from raw plan elements, checks that helpers only forward
//! what the source handed them and that trees are source-rooted, and checks
//! that every demanding peer's received segments tile its demanded layers
//! exactly. It deliberately shares no accounting code with the scheduler.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::model::{Instance, Node};
use crate::plan::{PlanTree, Segment, TransmissionPlan};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    CapacityExceeded,
    AvailabilityViolation,
    CoverageGap,
    CoverageOverlap,
    MalformedPlan,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub ok: bool,
    pub upload_usage: BTreeMap<Node, Rational>,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Error)]
pub enum VerifierError {
    #[error("malformed plan: {0}")]
    MalformedPlan(String),
}

/// Upload totals, delivered stream per layer, and element counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanStats {
    pub upload: BTreeMap<Node, Rational>,
    pub total_upload: Rational,
    /// Stream width handed out per layer (index 0 is layer 1): relay
    /// portions plus tree segments.
    pub delivered_per_layer: Vec<Rational>,
    pub phase_count: usize,
    pub tree_count: usize,
}

struct TreeShape {
    /// Nodes reachable from the source, source first.
    reached: Vec<Node>,
    out_degree: BTreeMap<Node, usize>,
    /// Nodes with outgoing edges that no path from the source reaches:
    /// they forward a segment they never received.
    unreachable_forwarders: Vec<Node>,
}

fn segment_bounds_ok(inst: &Instance, seg: &Segment) -> Result<(), String> {
    if seg.layer < 1 || seg.layer > inst.layer_count() {
        return Err(format!("layer {} outside 1..={}", seg.layer, inst.layer_count()));
    }
    if seg.start >= seg.end {
        return Err(format!(
            "inverted or empty interval [{}, {})",
            seg.start, seg.end
        ));
    }
    if seg.start.is_negative() || &seg.end > inst.layer_rate(seg.layer) {
        return Err(format!(
            "interval [{}, {}) outside the layer-{} stream [0, {})",
            seg.start,
            seg.end,
            seg.layer,
            inst.layer_rate(seg.layer)
        ));
    }
    Ok(())
}

/// Structural tree validation. Unknown nodes, self-loops, duplicate parents,
/// and edges into the source are malformed. Nodes that forward without a
/// path from the source — including every forwarder of a tree rooted away
/// from the source — are reported for availability checking instead: the
/// plan is parseable, it just claims transmissions of data never received.
fn tree_shape(inst: &Instance, tree: &PlanTree) -> Result<TreeShape, String> {
    let valid_node = |node: Node| match node {
        Node::Source => true,
        Node::Peer(i) => i < inst.peer_count(),
    };
    let mut children: BTreeMap<Node, Vec<Node>> = BTreeMap::new();
    let mut in_degree: BTreeMap<Node, usize> = BTreeMap::new();
    for &(from, to) in &tree.edges {
        if !valid_node(from) || !valid_node(to) {
            return Err(format!("edge ({from}, {to}) references an unknown node"));
        }
        if to == Node::Source {
            return Err("edge points into the source".into());
        }
        if from == to {
            return Err(format!("self-loop at {from}"));
        }
        children.entry(from).or_default().push(to);
        let indeg = in_degree.entry(to).or_insert(0);
        *indeg += 1;
        if *indeg > 1 {
            return Err(format!("{to} has more than one parent"));
        }
    }
    let mut reached = vec![Node::Source];
    let mut queue = vec![Node::Source];
    while let Some(node) = queue.pop() {
        for &child in children.get(&node).map_or(&[][..], Vec::as_slice) {
            reached.push(child);
            queue.push(child);
        }
    }
    let unreachable_forwarders = children
        .keys()
        .filter(|node| !reached.contains(node))
        .copied()
        .collect();
    let out_degree = children
        .iter()
        .map(|(&node, kids)| (node, kids.len()))
        .collect();
    Ok(TreeShape {
        reached,
        out_degree,
        unreachable_forwarders,
    })
}

/// Checks a plan against the instance's constraints: exact per-node upload
/// within capacity, availability (helpers forward only what they received,
/// trees are source-rooted), and exact disjoint coverage of `[0, L_j)` for
/// every demanding peer.
pub fn verify_plan(inst: &Instance, plan: &TransmissionPlan) -> VerificationReport {
    let mut violations: Vec<Violation> = Vec::new();
    let mut usage: BTreeMap<Node, Rational> =
        inst.nodes().map(|n| (n, Rational::zero())).collect();
    // segments received per (peer, layer)
    let mut received: BTreeMap<(usize, usize), Vec<(Rational, Rational)>> = BTreeMap::new();

    let flag = |violations: &mut Vec<Violation>, kind: ViolationKind, detail: String| {
        violations.push(Violation { kind, detail });
    };

    for (pi, phase) in plan.phases.iter().enumerate() {
        let mut sent: Vec<(usize, &Segment)> = Vec::new();
        for send in &phase.source_to {
            if send.helper >= inst.peer_count() {
                flag(
                    &mut violations,
                    ViolationKind::MalformedPlan,
                    format!("phase {pi}: unknown helper index {}", send.helper),
                );
                continue;
            }
            if send.segment.layer != phase.layer {
                flag(
                    &mut violations,
                    ViolationKind::MalformedPlan,
                    format!("phase {pi}: segment layer differs from phase layer"),
                );
                continue;
            }
            if let Err(why) = segment_bounds_ok(inst, &send.segment) {
                flag(
                    &mut violations,
                    ViolationKind::MalformedPlan,
                    format!("phase {pi}: {why}"),
                );
                continue;
            }
            if send.rate != send.segment.width() {
                flag(
                    &mut violations,
                    ViolationKind::MalformedPlan,
                    format!(
                        "phase {pi}: declared rate {} differs from interval width {}",
                        send.rate,
                        send.segment.width()
                    ),
                );
                continue;
            }
            *usage.get_mut(&Node::Source).unwrap() += &send.rate;
            received
                .entry((send.helper, send.segment.layer))
                .or_default()
                .push((send.segment.start.clone(), send.segment.end.clone()));
            sent.push((send.helper, &send.segment));
        }
        for fwd in &phase.helper_to {
            if fwd.helper >= inst.peer_count()
                || fwd.recipients.iter().any(|&r| r >= inst.peer_count())
            {
                flag(
                    &mut violations,
                    ViolationKind::MalformedPlan,
                    format!("phase {pi}: unknown node index in forward entry"),
                );
                continue;
            }
            if fwd.segment.layer != phase.layer {
                flag(
                    &mut violations,
                    ViolationKind::MalformedPlan,
                    format!("phase {pi}: forward segment layer differs from phase layer"),
                );
                continue;
            }
            if let Err(why) = segment_bounds_ok(inst, &fwd.segment) {
                flag(
                    &mut violations,
                    ViolationKind::MalformedPlan,
                    format!("phase {pi}: {why}"),
                );
                continue;
            }
            if fwd.rate != fwd.segment.width() {
                flag(
                    &mut violations,
                    ViolationKind::MalformedPlan,
                    format!("phase {pi}: forward rate differs from interval width"),
                );
                continue;
            }
            if fwd.recipients.contains(&fwd.helper) {
                flag(
                    &mut violations,
                    ViolationKind::MalformedPlan,
                    format!("phase {pi}: helper {} lists itself as recipient", fwd.helper),
                );
                continue;
            }
            // only data actually handed over by the source may be forwarded
            if !sent
                .iter()
                .any(|&(h, seg)| h == fwd.helper && *seg == fwd.segment)
            {
                flag(
                    &mut violations,
                    ViolationKind::AvailabilityViolation,
                    format!(
                        "phase {pi}: helper {} forwards [{}, {}) of layer {} it never received",
                        fwd.helper, fwd.segment.start, fwd.segment.end, fwd.segment.layer
                    ),
                );
                continue;
            }
            let upload = Rational::from_usize(fwd.recipients.len()) * &fwd.rate;
            *usage.get_mut(&Node::Peer(fwd.helper)).unwrap() += &upload;
            for &r in &fwd.recipients {
                received
                    .entry((r, fwd.segment.layer))
                    .or_default()
                    .push((fwd.segment.start.clone(), fwd.segment.end.clone()));
            }
        }
    }

    for (ti, tree) in plan.trees.iter().enumerate() {
        if tree.edges.is_empty() {
            continue; // delivers nothing, consumes nothing
        }
        if let Err(why) = segment_bounds_ok(inst, &tree.segment) {
            flag(
                &mut violations,
                ViolationKind::MalformedPlan,
                format!("tree {ti}: {why}"),
            );
            continue;
        }
        if tree.rate != tree.segment.width() {
            flag(
                &mut violations,
                ViolationKind::MalformedPlan,
                format!("tree {ti}: declared rate differs from interval width"),
            );
            continue;
        }
        let shape = match tree_shape(inst, tree) {
            Ok(shape) => shape,
            Err(why) => {
                flag(
                    &mut violations,
                    ViolationKind::MalformedPlan,
                    format!("tree {ti}: {why}"),
                );
                continue;
            }
        };
        for &node in &shape.unreachable_forwarders {
            flag(
                &mut violations,
                ViolationKind::AvailabilityViolation,
                format!(
                    "tree {ti}: {} forwards a segment it never received",
                    inst.node_label(node)
                ),
            );
        }
        // declared transmissions consume upload whether or not they are fed
        for (&node, &deg) in &shape.out_degree {
            *usage.get_mut(&node).unwrap() += &(Rational::from_usize(deg) * &tree.rate);
        }
        // only the source-rooted component actually delivers data
        for &node in shape.reached.iter().skip(1) {
            if let Node::Peer(i) = node {
                received
                    .entry((i, tree.segment.layer))
                    .or_default()
                    .push((tree.segment.start.clone(), tree.segment.end.clone()));
            }
        }
    }

    for node in inst.nodes() {
        if usage[&node] > *inst.capacity_of(node) {
            flag(
                &mut violations,
                ViolationKind::CapacityExceeded,
                format!(
                    "{} uploads {}, above its capacity {}",
                    inst.node_label(node),
                    usage[&node],
                    inst.capacity_of(node)
                ),
            );
        }
    }

    // Exact disjoint tiling of [0, L_j) per demanded (peer, layer).
    for (idx, peer) in inst.peers().iter().enumerate() {
        for layer in 1..=peer.max_layer {
            let rate = inst.layer_rate(layer);
            let mut segments = received.remove(&(idx, layer)).unwrap_or_default();
            segments.sort();
            let mut cursor = Rational::zero();
            let mut broken = false;
            for (start, end) in &segments {
                if *start > cursor {
                    flag(
                        &mut violations,
                        ViolationKind::CoverageGap,
                        format!(
                            "peer {} layer {layer}: gap at [{cursor}, {start})",
                            peer.id
                        ),
                    );
                    broken = true;
                    break;
                }
                if *start < cursor {
                    flag(
                        &mut violations,
                        ViolationKind::CoverageOverlap,
                        format!(
                            "peer {} layer {layer}: [{start}, {end}) overlaps up to {cursor}",
                            peer.id
                        ),
                    );
                    broken = true;
                    break;
                }
                cursor = end.clone();
            }
            if !broken && cursor != *rate {
                flag(
                    &mut violations,
                    ViolationKind::CoverageGap,
                    format!(
                        "peer {} layer {layer}: covered [0, {cursor}) of [0, {rate})",
                        peer.id
                    ),
                );
            }
        }
    }

    VerificationReport {
        ok: violations.is_empty(),
        upload_usage: usage,
        violations,
    }
}

impl VerificationReport {
    pub fn to_json(&self, inst: &Instance) -> String {
        #[derive(Serialize)]
        struct Wire<'a> {
            ok: bool,
            upload_usage: BTreeMap<String, &'a Rational>,
            violations: &'a [Violation],
        }
        let wire = Wire {
            ok: self.ok,
            upload_usage: self
                .upload_usage
                .iter()
                .map(|(&node, used)| (inst.node_label(node), used))
                .collect(),
            violations: &self.violations,
        };
        let mut out = serde_json::to_string_pretty(&wire).expect("report serialization");
        out.push('\n');
        out
    }
}

/// Exact aggregates over a structurally sound plan.
pub fn plan_stats(inst: &Instance, plan: &TransmissionPlan) -> Result<PlanStats, VerifierError> {
    let mut upload: BTreeMap<Node, Rational> =
        inst.nodes().map(|n| (n, Rational::zero())).collect();
    let mut delivered = vec![Rational::zero(); inst.layer_count()];

    for phase in &plan.phases {
        for send in &phase.source_to {
            if send.helper >= inst.peer_count() {
                return Err(VerifierError::MalformedPlan("unknown helper index".into()));
            }
            segment_bounds_ok(inst, &send.segment).map_err(VerifierError::MalformedPlan)?;
            *upload.get_mut(&Node::Source).unwrap() += &send.segment.width();
            delivered[send.segment.layer - 1] += &send.segment.width();
        }
        for fwd in &phase.helper_to {
            if fwd.helper >= inst.peer_count() {
                return Err(VerifierError::MalformedPlan("unknown helper index".into()));
            }
            segment_bounds_ok(inst, &fwd.segment).map_err(VerifierError::MalformedPlan)?;
            let width = fwd.segment.width();
            *upload.get_mut(&Node::Peer(fwd.helper)).unwrap() +=
                &(Rational::from_usize(fwd.recipients.len()) * &width);
        }
    }
    for tree in &plan.trees {
        if tree.edges.is_empty() {
            continue;
        }
        segment_bounds_ok(inst, &tree.segment).map_err(VerifierError::MalformedPlan)?;
        let shape = tree_shape(inst, tree).map_err(VerifierError::MalformedPlan)?;
        for (&node, &deg) in &shape.out_degree {
            *upload.get_mut(&node).unwrap() += &(Rational::from_usize(deg) * &tree.rate);
        }
        delivered[tree.segment.layer - 1] += &tree.segment.width();
    }

    let total_upload = upload.values().sum();
    Ok(PlanStats {
        upload,
        total_upload,
        delivered_per_layer: delivered,
        phase_count: plan.phases.len(),
        tree_count: plan.trees.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Instance, Peer};
    use crate::plan::RelayForward;
    use crate::scheduler::{schedule, ScheduleOutcome};

    fn rat(v: i64) -> Rational {
        Rational::from(v)
    }

    fn build(c0: i64, caps: &[i64], max_layers: &[usize], rates: &[i64]) -> Instance {
        let peers = caps
            .iter()
            .zip(max_layers)
            .enumerate()
            .map(|(i, (&c, &m))| Peer {
                id: format!("p{}", i + 1),
                capacity: rat(c),
                max_layer: m,
            })
            .collect();
        Instance::new(rat(c0), peers, rates.iter().map(|&r| rat(r)).collect()).unwrap()
    }

    fn w1() -> Instance {
        build(2, &[0, 0, 4], &[2, 2, 1], &[1, 1])
    }

    fn w2() -> Instance {
        build(3, &[0, 0, 3, 4], &[3, 3, 2, 1], &[1, 1, 1])
    }

    fn plan_of(inst: &Instance) -> TransmissionPlan {
        match schedule(inst).unwrap() {
            ScheduleOutcome::Plan(plan) => plan,
            ScheduleOutcome::Infeasible(_) => panic!("expected a feasible instance"),
        }
    }

    #[test]
    fn accepts_w1_plan_with_exact_usage() {
        let inst = w1();
        let plan = plan_of(&inst);
        let report = verify_plan(&inst, &plan);
        assert!(report.ok, "violations: {:?}", report.violations);
        assert_eq!(report.upload_usage[&Node::Source], rat(2));
        assert_eq!(report.upload_usage[&Node::Peer(2)], rat(4));
        assert_eq!(report.upload_usage[&Node::Peer(0)], rat(0));
        assert_eq!(report.upload_usage[&Node::Peer(1)], rat(0));
    }

    #[test]
    fn flags_duplicate_delivery_as_overlap() {
        let inst = w1();
        let mut plan = plan_of(&inst);
        // p3 echoes layer 1 to p1 again through an extra tree
        plan.trees.push(PlanTree {
            segment: Segment::new(1, rat(0), rat(1)),
            rate: rat(1),
            edges: vec![
                (Node::Source, Node::Peer(2)),
                (Node::Peer(2), Node::Peer(0)),
            ],
        });
        let report = verify_plan(&inst, &plan);
        assert!(!report.ok);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::CoverageOverlap));
    }

    #[test]
    fn flags_missing_edge_as_gap() {
        let inst = w1();
        let mut plan = plan_of(&inst);
        let edges = &mut plan.trees[0].edges;
        edges.retain(|&(_, to)| to != Node::Peer(1)); // drop p3 -> p2
        let report = verify_plan(&inst, &plan);
        assert!(!report.ok);
        assert!(report.violations.iter().any(|v| {
            v.kind == ViolationKind::CoverageGap && v.detail.contains("p2")
        }));
    }

    #[test]
    fn flags_capacity_inflation() {
        let inst = w1();
        let mut plan = plan_of(&inst);
        // forward the relay piece twice: p3's upload rises above its capacity
        let phase = &mut plan.phases[0];
        let dup = RelayForward {
            recipients: vec![0, 1],
            ..phase.helper_to[0].clone()
        };
        phase.helper_to.push(dup);
        let report = verify_plan(&inst, &plan);
        assert!(!report.ok);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::CapacityExceeded));
    }

    #[test]
    fn flags_unreceived_forward_as_availability() {
        let inst = w1();
        let mut plan = plan_of(&inst);
        let phase = &mut plan.phases[0];
        phase.helper_to.push(RelayForward {
            helper: 1,
            segment: Segment::new(2, rat(0), rat(1)),
            rate: rat(1),
            recipients: vec![0],
        });
        let report = verify_plan(&inst, &plan);
        assert!(!report.ok);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::AvailabilityViolation));
    }

    #[test]
    fn flags_unfed_relay_as_availability() {
        let inst = w1();
        let mut plan = plan_of(&inst);
        // cut the source->p3 edge: p3 still fans out but was never fed
        plan.trees[0].edges.retain(|&(from, _)| from != Node::Source);
        let report = verify_plan(&inst, &plan);
        assert!(!report.ok);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::AvailabilityViolation));
    }

    #[test]
    fn flags_foreign_root_as_availability() {
        let inst = w1();
        let mut plan = plan_of(&inst);
        // a tree rooted away from the source claims relays of unfed data
        plan.trees.push(PlanTree {
            segment: Segment::new(1, rat(0), rat(1)),
            rate: rat(1),
            edges: vec![(Node::Peer(2), Node::Peer(0))],
        });
        let report = verify_plan(&inst, &plan);
        assert!(!report.ok);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::AvailabilityViolation));
    }

    #[test]
    fn flags_edge_into_source_as_malformed() {
        let inst = w1();
        let mut plan = plan_of(&inst);
        plan.trees[0].edges.push((Node::Peer(0), Node::Source));
        let report = verify_plan(&inst, &plan);
        assert!(!report.ok);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::MalformedPlan));
    }

    #[test]
    fn flags_inverted_interval_as_malformed() {
        let inst = w1();
        let mut plan = plan_of(&inst);
        plan.trees[0].segment = Segment::new(1, rat(1), rat(0));
        let report = verify_plan(&inst, &plan);
        assert!(!report.ok);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::MalformedPlan && v.detail.contains("inverted")));
    }

    #[test]
    fn stats_for_worked_instances() {
        let inst = w1();
        let stats = plan_stats(&inst, &plan_of(&inst)).unwrap();
        assert_eq!(stats.total_upload, rat(6));
        assert_eq!(stats.phase_count, 1);
        assert_eq!(stats.tree_count, 1);

        let inst = w2();
        let stats = plan_stats(&inst, &plan_of(&inst)).unwrap();
        assert_eq!(stats.total_upload, rat(10));
        assert_eq!(stats.phase_count, 1);
        assert_eq!(stats.tree_count, 2);
        assert_eq!(stats.upload[&Node::Source], rat(3));
        assert_eq!(stats.upload[&Node::Peer(2)], rat(3));
        assert_eq!(stats.upload[&Node::Peer(3)], rat(4));
        assert_eq!(stats.delivered_per_layer, vec![rat(1), rat(1), rat(1)]);
    }

    #[test]
    fn stats_for_empty_plan() {
        let inst = w1();
        let stats = plan_stats(&inst, &TransmissionPlan::default()).unwrap();
        assert_eq!(stats.total_upload, rat(0));
        assert_eq!(stats.phase_count, 0);
        assert_eq!(stats.tree_count, 0);
        assert!(stats.delivered_per_layer.iter().all(Rational::is_zero));
    }
}
