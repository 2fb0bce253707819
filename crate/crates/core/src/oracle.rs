//! Brute-force ground truth for small instances.
//!
//! For every layer the oracle enumerates all source-rooted directed trees
//! spanning that layer's demanders, optionally routing through helper peers
//! that do not demand the layer. Feasibility then reduces to the existence
//! of non-negative per-tree rates summing to each layer's rate without any
//! node exceeding its upload capacity, decided by an exact rational linear
//! feasibility check. Nothing here touches the closed-form region code, so
//! agreement between the two is a genuine cross-check.

mod simplex;

use thiserror::Error;

use crate::model::{Instance, Node};
use crate::rational::Rational;
use simplex::{solve, FeasibilityProblem};

/// Default cap on the peer count for exhaustive enumeration.
pub const DEFAULT_PEER_LIMIT: usize = 5;

/// All admissible distribution trees for one layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeCatalog {
    pub layer: usize,
    pub trees: Vec<CatalogTree>,
}

/// One enumerated tree, stored as `(parent, child)` edges. Out-degrees are
/// derived on demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogTree {
    pub edges: Vec<(Node, Node)>,
}

impl CatalogTree {
    pub fn out_degree(&self, node: Node) -> usize {
        self.edges.iter().filter(|&&(from, _)| from == node).count()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance has {peers} peers, above the enumeration limit {limit}")]
    LimitExceeded { peers: usize, limit: usize },
}

/// Enumerates every directed tree rooted at the source whose node set is
/// the source, all demanders of `layer`, and any subset of the remaining
/// peers — with the restriction that such helper peers appear only as
/// internal relays. A helper leaf would receive data it neither demands nor
/// forwards, so dropping those trees loses no routing power: removing the
/// leaf yields another catalog tree with node uploads only reduced.
pub fn enumerate_trees(
    inst: &Instance,
    layer: usize,
    limit: usize,
) -> Result<TreeCatalog, OracleError> {
    assert!(
        layer >= 1 && layer <= inst.layer_count(),
        "layer {layer} outside 1..={}",
        inst.layer_count()
    );
    if inst.peer_count() > limit {
        return Err(OracleError::LimitExceeded {
            peers: inst.peer_count(),
            limit,
        });
    }
    let demanders: Vec<usize> = inst.demanders(layer).collect();
    let helpers: Vec<usize> = (0..inst.peer_count())
        .filter(|i| !inst.is_demander(*i, layer))
        .collect();

    let mut trees = Vec::new();
    for mask in 0..(1usize << helpers.len()) {
        let chosen: Vec<usize> = helpers
            .iter()
            .enumerate()
            .filter(|(bit, _)| mask & (1 << bit) != 0)
            .map(|(_, &peer)| peer)
            .collect();
        // nodes[0] is the source; the rest take a parent each
        let mut nodes: Vec<Node> = vec![Node::Source];
        nodes.extend(demanders.iter().map(|&i| Node::Peer(i)));
        nodes.extend(chosen.iter().map(|&i| Node::Peer(i)));
        let helper_range = 1 + demanders.len()..nodes.len();

        let v = nodes.len();
        let mut parent = vec![0usize; v]; // parent choice per non-root node
        'assignments: loop {
            if is_tree(&parent, v) {
                let internal_ok = helper_range
                    .clone()
                    .all(|h| parent.iter().skip(1).any(|&p| p == h));
                if internal_ok {
                    let mut edges: Vec<(Node, Node)> =
                        (1..v).map(|i| (nodes[parent[i]], nodes[i])).collect();
                    edges.sort();
                    trees.push(CatalogTree { edges });
                }
            }
            // next parent assignment in lexicographic order, skipping self
            let mut i = v - 1;
            loop {
                if i == 0 {
                    break 'assignments;
                }
                parent[i] += 1;
                if parent[i] == i {
                    parent[i] += 1; // no self-parent
                }
                if parent[i] < v {
                    break;
                }
                parent[i] = 0;
                i -= 1;
            }
        }
    }
    Ok(TreeCatalog { layer, trees })
}

/// True when following parents from every node reaches the root without
/// revisiting a node.
fn is_tree(parent: &[usize], v: usize) -> bool {
    for start in 1..v {
        let mut hops = 0;
        let mut node = start;
        while node != 0 {
            node = parent[node];
            hops += 1;
            if hops >= v {
                return false;
            }
        }
    }
    true
}

/// Decides routing feasibility by exhaustive tree packing.
pub fn oracle_feasible(inst: &Instance) -> Result<bool, OracleError> {
    oracle_feasible_with_limit(inst, DEFAULT_PEER_LIMIT)
}

pub fn oracle_feasible_with_limit(inst: &Instance, limit: usize) -> Result<bool, OracleError> {
    let n = inst.layer_count();
    let mut catalogs = Vec::new();
    for layer in 1..=n {
        if inst.layer_rate(layer).is_zero() {
            continue; // zero-rate layers constrain nothing
        }
        catalogs.push(enumerate_trees(inst, layer, limit)?);
    }
    Ok(catalog_feasible(inst, &catalogs))
}

/// Feasibility of the tree-packing program over explicit catalogs: do
/// non-negative per-tree rates exist that sum to each cataloged layer's
/// rate while keeping every node within its upload capacity? Growing a
/// catalog can only enlarge the feasible set.
pub fn catalog_feasible(inst: &Instance, catalogs: &[TreeCatalog]) -> bool {
    let nvars: usize = catalogs.iter().map(|c| c.trees.len()).sum();
    let mut eq = Vec::with_capacity(catalogs.len());
    let mut offset = 0;
    for catalog in catalogs {
        let mut row = vec![Rational::zero(); nvars];
        for slot in row.iter_mut().skip(offset).take(catalog.trees.len()) {
            *slot = Rational::one();
        }
        eq.push((row, inst.layer_rate(catalog.layer).clone()));
        offset += catalog.trees.len();
    }
    let mut ub = Vec::new();
    for node in inst.nodes() {
        let mut row = vec![Rational::zero(); nvars];
        let mut offset = 0;
        for catalog in catalogs {
            for (t, tree) in catalog.trees.iter().enumerate() {
                let deg = tree.out_degree(node);
                if deg > 0 {
                    row[offset + t] = Rational::from_usize(deg);
                }
            }
            offset += catalog.trees.len();
        }
        ub.push((row, inst.capacity_of(node).clone()));
    }

    let problem = FeasibilityProblem { nvars, eq, ub };
    solve(&problem).is_feasible()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::check_feasibility;
    use crate::model::Peer;

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

    #[test]
    fn enumerates_two_peer_single_layer() {
        let inst = build(1, &[1, 1], &[1, 1], &[1]);
        let catalog = enumerate_trees(&inst, 1, DEFAULT_PEER_LIMIT).unwrap();
        // star, and the two chains
        assert_eq!(catalog.trees.len(), 3);
    }

    #[test]
    fn enumerates_helper_relay_topologies() {
        // p1 demands both layers, p2 only layer 1: for layer 2 the catalog
        // holds the direct send and the relay through p2
        let inst = build(1, &[1, 1], &[2, 1], &[1, 1]);
        let catalog = enumerate_trees(&inst, 2, DEFAULT_PEER_LIMIT).unwrap();
        assert_eq!(catalog.trees.len(), 2);
        let direct = CatalogTree {
            edges: vec![(Node::Source, Node::Peer(0))],
        };
        let via_helper = CatalogTree {
            edges: vec![(Node::Source, Node::Peer(1)), (Node::Peer(1), Node::Peer(0))],
        };
        assert!(catalog.trees.contains(&direct));
        assert!(catalog.trees.contains(&via_helper));
    }

    #[test]
    fn single_demander_no_helpers() {
        let inst = build(1, &[1], &[1], &[1]);
        let catalog = enumerate_trees(&inst, 1, DEFAULT_PEER_LIMIT).unwrap();
        assert_eq!(catalog.trees.len(), 1);
    }

    #[test]
    fn enforces_peer_limit() {
        let inst = build(1, &[1, 1, 1, 1, 1, 1], &[1; 6], &[1]);
        assert_eq!(
            enumerate_trees(&inst, 1, 5),
            Err(OracleError::LimitExceeded { peers: 6, limit: 5 })
        );
        assert_eq!(
            oracle_feasible(&inst),
            Err(OracleError::LimitExceeded { peers: 6, limit: 5 })
        );
    }

    #[test]
    fn w1_is_feasible_and_its_weakening_is_not() {
        let w1 = build(2, &[0, 0, 4], &[2, 2, 1], &[1, 1]);
        assert!(oracle_feasible(&w1).unwrap());
        let weakened = build(2, &[0, 0, 3], &[2, 2, 1], &[1, 1]);
        assert!(!oracle_feasible(&weakened).unwrap());
    }

    #[test]
    fn zero_rates_are_always_feasible() {
        let inst = build(0, &[0, 0], &[2, 1], &[0, 0]);
        assert!(oracle_feasible(&inst).unwrap());
    }

    #[test]
    fn agrees_with_closed_form_on_w2() {
        let w2 = build(3, &[0, 0, 3, 4], &[3, 3, 2, 1], &[1, 1, 1]);
        assert!(oracle_feasible(&w2).unwrap());
        assert!(check_feasibility(&w2).feasible);
        let starved = build(3, &[0, 0, 3, 3], &[3, 3, 2, 1], &[1, 1, 1]);
        assert!(!oracle_feasible(&starved).unwrap());
        assert!(!check_feasibility(&starved).feasible);
    }
}
