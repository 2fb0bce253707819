//! Degree-exact distribution trees and fractional unit-tree packing.

use std::collections::{BTreeMap, VecDeque};

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::model::Node;
use crate::rational::Rational;

use super::ScheduleError;

/// Default ceiling on the number of scaled unit rounds a single packing may
/// produce. Keeps pathological denominators from exploding the plan.
pub const DEFAULT_UNIT_GUARD: u64 = 1_000_000;

/// A rooted directed tree whose out-degrees match a requested degree vector
/// exactly. Built only through [`build_degree_tree`], so the structure is
/// valid by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeTree {
    root: Node,
    children: BTreeMap<Node, Vec<Node>>,
}

impl DegreeTree {
    pub fn root(&self) -> Node {
        self.root
    }

    pub fn out_degree(&self, node: Node) -> usize {
        self.children.get(&node).map_or(0, Vec::len)
    }

    pub fn children_of(&self, node: Node) -> &[Node] {
        self.children.get(&node).map_or(&[], Vec::as_slice)
    }

    /// Edges in preorder: parent before child, children in attach order.
    pub fn edges(&self) -> Vec<(Node, Node)> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(node) = stack.pop() {
            let kids = self.children_of(node);
            for &child in kids {
                out.push((node, child));
            }
            for &child in kids.iter().rev() {
                stack.push(child);
            }
        }
        out
    }

    /// All nodes of the tree, root first, in preorder.
    pub fn nodes(&self) -> Vec<Node> {
        let mut out = vec![self.root];
        out.extend(self.edges().iter().map(|&(_, to)| to));
        out
    }
}

/// Builds the source-rooted tree with `out_degree(source) = root_degree` and
/// `out_degree(member_i) = degree_i`, every member with in-degree one.
///
/// Nodes are attached in descending-degree order (ties by node index) to
/// open child slots consumed first-in-first-out; each attached node opens as
/// many new slots as its own degree. With a valid degree vector the slot
/// queue never runs dry before the last node.
pub fn build_degree_tree(
    root_degree: usize,
    members: &[(Node, usize)],
) -> Result<DegreeTree, ScheduleError> {
    let k = members.len();
    let degree_sum: usize = root_degree + members.iter().map(|(_, d)| d).sum::<usize>();
    if degree_sum != k {
        return Err(ScheduleError::DegreeMismatch {
            expected: k,
            got: degree_sum,
        });
    }
    if root_degree == 0 && k > 0 {
        return Err(ScheduleError::ZeroRootDegree);
    }

    let mut order: Vec<(Node, usize)> = members.to_vec();
    order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut children: BTreeMap<Node, Vec<Node>> = BTreeMap::new();
    let mut slots: VecDeque<Node> = VecDeque::new();
    for _ in 0..root_degree {
        slots.push_back(Node::Source);
    }
    for (node, degree) in order {
        let parent = slots.pop_front().ok_or_else(|| {
            ScheduleError::Internal("tree slots exhausted with nodes left to attach".into())
        })?;
        children.entry(parent).or_default().push(node);
        for _ in 0..degree {
            slots.push_back(node);
        }
    }
    debug_assert!(slots.is_empty());
    Ok(DegreeTree {
        root: Node::Source,
        children,
    })
}

/// Packs distribution trees that deliver `rate` worth of stream to every
/// member, using at most `source_cap` upload at the source and at most the
/// given per-member capacity at each member.
///
/// All quantities are scaled by the least common denominator to integers,
/// then unit rounds are peeled one by one. Each round fills the `k` child
/// slots peers-first (largest remaining capacity first, ties by index, at
/// most `k - 1` from peers) and lets the source cover the shortfall, which
/// preserves `remaining source >= remaining rounds` and
/// `remaining total >= k * remaining rounds`. Consecutive rounds with the
/// same degree vector are merged into one tree with a summed rate.
pub fn pack_unit_trees(
    rate: &Rational,
    source_cap: &Rational,
    members: &[(Node, Rational)],
    unit_guard: u64,
) -> Result<Vec<(DegreeTree, Rational)>, ScheduleError> {
    if rate.is_zero() {
        return Ok(Vec::new());
    }
    if rate.is_negative() {
        return Err(ScheduleError::Precondition("rate must be non-negative".into()));
    }
    let k = members.len();
    if k == 0 {
        return Err(ScheduleError::Precondition(
            "unit-tree packing needs at least one receiver".into(),
        ));
    }
    if source_cap < rate {
        return Err(ScheduleError::Precondition(format!(
            "source capacity {source_cap} below rate {rate}"
        )));
    }
    let cap_total = source_cap + members.iter().map(|(_, c)| c).sum::<Rational>();
    let needed = Rational::from_usize(k) * rate;
    if cap_total < needed {
        return Err(ScheduleError::Precondition(format!(
            "total capacity {cap_total} below {needed} (= receivers x rate)"
        )));
    }

    let mut denoms: Vec<&Rational> = vec![rate, source_cap];
    denoms.extend(members.iter().map(|(_, c)| c));
    let scale = Rational::common_denominator(denoms);
    let rounds_big = rate
        .scaled_integer(&scale)
        .expect("scale is a common denominator");
    let rounds = rounds_big.to_u64().filter(|&r| r <= unit_guard).ok_or(
        ScheduleError::ScaleGuardExceeded {
            units: rounds_big.to_string(),
            guard: unit_guard,
        },
    )?;

    let mut source_left = source_cap
        .scaled_integer(&scale)
        .expect("scale is a common denominator");
    let mut caps_left: Vec<BigInt> = members
        .iter()
        .map(|(_, c)| c.scaled_integer(&scale).expect("scale is a common denominator"))
        .collect();

    let unit_rate = Rational::one() / Rational::from_bigint(scale.clone());
    let mut out: Vec<(DegreeTree, Rational)> = Vec::new();
    let mut run: Option<(Vec<usize>, usize, u64)> = None; // (degrees, root_degree, count)

    for round in 0..rounds {
        let rounds_left = rounds - round;
        // peers-first: largest remaining capacity, ties by index
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| caps_left[b].cmp(&caps_left[a]).then(a.cmp(&b)));
        let mut degrees = vec![0usize; k];
        let mut open = k - 1;
        for idx in order {
            if open == 0 {
                break;
            }
            let take = caps_left[idx]
                .clone()
                .min(BigInt::from(open))
                .to_usize()
                .expect("per-round degree fits usize");
            degrees[idx] = take;
            open -= take;
        }
        let root_degree = 1 + open;
        for (idx, &d) in degrees.iter().enumerate() {
            caps_left[idx] -= BigInt::from(d);
        }
        source_left -= BigInt::from(root_degree);
        if source_left < BigInt::from(rounds_left - 1) {
            return Err(ScheduleError::Internal(
                "unit-round invariant broken: source short of remaining rounds".into(),
            ));
        }

        match &mut run {
            Some((prev, prev_root, count)) if *prev == degrees && *prev_root == root_degree => {
                *count += 1;
            }
            _ => {
                if let Some((prev, prev_root, count)) = run.take() {
                    out.push(flush_run(members, &prev, prev_root, count, &unit_rate)?);
                }
                run = Some((degrees, root_degree, 1));
            }
        }
    }
    if let Some((prev, prev_root, count)) = run {
        out.push(flush_run(members, &prev, prev_root, count, &unit_rate)?);
    }

    debug_assert_eq!(
        out.iter().map(|(_, r)| r).sum::<Rational>(),
        rate.clone(),
        "per-member delivered rate must equal the requested rate"
    );
    Ok(out)
}

fn flush_run(
    members: &[(Node, Rational)],
    degrees: &[usize],
    root_degree: usize,
    count: u64,
    unit_rate: &Rational,
) -> Result<(DegreeTree, Rational), ScheduleError> {
    let with_nodes: Vec<(Node, usize)> = members
        .iter()
        .zip(degrees)
        .map(|((node, _), &d)| (*node, d))
        .collect();
    let tree = build_degree_tree(root_degree, &with_nodes)?;
    Ok((tree, Rational::from(count) * unit_rate))
}
