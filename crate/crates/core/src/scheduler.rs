//! Routing plan synthesis for feasible instances.
//!
//! The scheduler runs in two stages. While any layer has a positive margin,
//! a relay phase picks the widest span of deficient layers (`m` lowest, `M`
//! highest), carves a portion of layer `M` off the stream, and pays helper
//! peers outside `X_m` to fan it out to the demanders of `M`; the residual
//! margins provably lose at least one positive entry per phase. Once every
//! margin is non-positive, the layers are peeled top down: each layer gets
//! per-node capacity shares that keep the remaining system balanced, and the
//! shares are packed into degree-exact distribution trees.
//!
//! Proof-level facts (margin update laws, the helper-total bound, share
//! existence) are re-checked at runtime instead of being trusted; a failed
//! check surfaces as [`ScheduleError::Internal`], never as a bad plan.

mod tree;

pub use tree::{build_degree_tree, pack_unit_trees, DegreeTree, DEFAULT_UNIT_GUARD};

use thiserror::Error;

use crate::capacity::{check_feasibility, FeasibilityReport};
use crate::margins::{residual_margins, MarginVector};
use crate::model::{Instance, Node};
use crate::plan::{PlanTree, RelayForward, RelayPhase, RelaySend, Segment, TransmissionPlan};
use crate::rational::Rational;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("no layer has a positive margin; relay phase not applicable")]
    PhaseNotApplicable,
    #[error("degree vector sums to {got}, expected {expected}")]
    DegreeMismatch { expected: usize, got: usize },
    #[error("root degree must be at least one")]
    ZeroRootDegree,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("scaling needs {units} unit rounds, above the configured guard {guard}")]
    ScaleGuardExceeded { units: String, guard: u64 },
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

/// Either a complete plan or the feasibility report explaining why none
/// exists.
#[derive(Debug)]
pub enum ScheduleOutcome {
    Plan(TransmissionPlan),
    Infeasible(Box<FeasibilityReport>),
}

/// Mutable scheduling state: residual capacities and rates plus a consumed
/// prefix cursor per layer. Demand sets stay fixed to the instance.
#[derive(Debug, Clone)]
pub struct ResidualState<'a> {
    inst: &'a Instance,
    source_capacity: Rational,
    peer_capacities: Vec<Rational>,
    layer_rates: Vec<Rational>,
    cursors: Vec<Rational>,
}

/// Per-node capacity shares dedicated to one layer's distribution trees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerShares {
    pub source: Rational,
    /// `(peer index, positive share)`, ascending by peer index.
    pub peers: Vec<(usize, Rational)>,
}

impl<'a> ResidualState<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        ResidualState {
            inst,
            source_capacity: inst.source_capacity().clone(),
            peer_capacities: inst.peers().iter().map(|p| p.capacity.clone()).collect(),
            layer_rates: inst.layer_rates().to_vec(),
            cursors: vec![Rational::zero(); inst.layer_count()],
        }
    }

    pub fn instance(&self) -> &Instance {
        self.inst
    }

    pub fn source_capacity(&self) -> &Rational {
        &self.source_capacity
    }

    pub fn peer_capacity(&self, idx: usize) -> &Rational {
        &self.peer_capacities[idx]
    }

    pub fn peer_capacities(&self) -> &[Rational] {
        &self.peer_capacities
    }

    /// Residual rate of layer `j` (1-based).
    pub fn layer_rate(&self, j: usize) -> &Rational {
        &self.layer_rates[j - 1]
    }

    /// Consumed prefix of layer `j`'s stream.
    pub fn cursor(&self, j: usize) -> &Rational {
        &self.cursors[j - 1]
    }

    pub fn margins(&self) -> MarginVector {
        residual_margins(
            self.inst,
            &self.source_capacity,
            &self.peer_capacities,
            &self.layer_rates,
        )
    }

    /// Executes one relay iteration and updates the residual state.
    pub fn relay_phase(&mut self) -> Result<RelayPhase, ScheduleError> {
        let before = self.margins();
        let positive = before.positive_layers();
        let (&m, &big_m) = match (positive.first(), positive.last()) {
            (Some(m), Some(big_m)) => (m, big_m),
            _ => return Err(ScheduleError::PhaseNotApplicable),
        };
        let n_value = before.value(m).min(before.value(big_m)).clone();
        let recipients: Vec<usize> = self.inst.demanders(big_m).collect();
        let receiver_count = recipients.len();
        if receiver_count < 2 {
            return Err(ScheduleError::Internal(format!(
                "layer {big_m} has a positive margin with {receiver_count} demander(s); \
                 the instance cannot satisfy the source condition"
            )));
        }
        let fanout = Rational::from_usize(receiver_count);
        let portion_width = &n_value / (&fanout - &Rational::one());

        // Entry inequality: the helpers' budget below X_1 covers the total.
        let helper_total = &fanout * &portion_width;
        if &n_value - before.value(1) < helper_total {
            return Err(ScheduleError::Internal(
                "helper budget below X_1 does not cover the relay total".into(),
            ));
        }
        if &portion_width > self.layer_rate(big_m) {
            return Err(ScheduleError::Internal(
                "relay portion exceeds the residual layer rate".into(),
            ));
        }

        let shares = helper_allocation(&before, self.inst, &self.peer_capacities, m, big_m)?;

        // Split the next unconsumed portion of layer M into helper pieces.
        let mut phase = RelayPhase {
            layer: big_m,
            source_to: Vec::with_capacity(shares.len()),
            helper_to: Vec::with_capacity(shares.len()),
        };
        let mut cursor = self.cursors[big_m - 1].clone();
        let portion_end = &cursor + &portion_width;
        for (helper, amount) in &shares {
            let piece = amount / &fanout;
            let segment = Segment::new(big_m, cursor.clone(), &cursor + &piece);
            cursor = segment.end.clone();
            phase.source_to.push(RelaySend {
                helper: *helper,
                segment: segment.clone(),
                rate: piece.clone(),
            });
            phase.helper_to.push(RelayForward {
                helper: *helper,
                segment,
                rate: piece,
                recipients: recipients.clone(),
            });
        }
        if cursor != portion_end {
            return Err(ScheduleError::Internal(
                "helper pieces do not tile the relay portion".into(),
            ));
        }

        // Residual updates.
        self.source_capacity -= &portion_width;
        for (helper, amount) in &shares {
            self.peer_capacities[*helper] -= amount;
            if self.peer_capacities[*helper].is_negative() {
                return Err(ScheduleError::Internal(
                    "helper share exceeds its residual capacity".into(),
                ));
            }
        }
        if self.source_capacity.is_negative() {
            return Err(ScheduleError::Internal(
                "relay phase exceeds residual source capacity".into(),
            ));
        }
        self.layer_rates[big_m - 1] -= &portion_width;
        self.cursors[big_m - 1] = portion_end;

        self.check_phase_update_laws(&before, &shares, m, big_m, &n_value)?;
        Ok(phase)
    }

    /// The margin update laws from the reduction step, re-derived from the
    /// fresh residual state rather than trusted.
    fn check_phase_update_laws(
        &self,
        before: &MarginVector,
        shares: &[(usize, Rational)],
        m: usize,
        big_m: usize,
        n_value: &Rational,
    ) -> Result<(), ScheduleError> {
        let after = self.margins();
        let n = self.inst.layer_count();
        for j in 1..=n {
            let expected = if j < m {
                let inside: Rational = shares
                    .iter()
                    .filter(|(helper, _)| self.inst.is_demander(*helper, j))
                    .map(|(_, amount)| amount)
                    .sum();
                let value = before.value(j) - n_value + inside;
                if value.is_positive() {
                    return Err(ScheduleError::Internal(format!(
                        "updated margin N_{j} = {value} stayed positive below m"
                    )));
                }
                value
            } else if j <= big_m {
                before.value(j) - n_value
            } else {
                before.value(j).clone()
            };
            if *after.value(j) != expected {
                return Err(ScheduleError::Internal(format!(
                    "margin update law failed at layer {j}: got {}, expected {expected}",
                    after.value(j)
                )));
            }
        }
        if after.positive_layers().len() >= before.positive_layers().len() {
            return Err(ScheduleError::Internal(
                "relay phase did not shrink the set of positive margins".into(),
            ));
        }
        Ok(())
    }
}

/// Picks the helper upload budget `C_{iM}` for one relay phase.
///
/// Helpers live strictly outside `X_m`. Shell anchors `j_1 > j_2 > ...` are
/// the iterated arg-maxima of the margins over shrinking prefixes of
/// `1..m-1` (smallest index on ties). If the whole total fits under the
/// `N - N_{j_1}` budget it is drawn entirely from the innermost shell
/// (case 1); otherwise the shells are filled inside out with their exact
/// slack until the remainder fits (case 2). Within a shell, peers are
/// filled in ascending index order up to their residual capacity.
///
/// Returns `(peer, amount)` pairs with positive amounts, ascending by peer.
pub fn helper_allocation(
    margins: &MarginVector,
    inst: &Instance,
    capacities: &[Rational],
    m: usize,
    big_m: usize,
) -> Result<Vec<(usize, Rational)>, ScheduleError> {
    let n = inst.layer_count();
    if m < 2 || m > big_m || big_m > n {
        return Err(ScheduleError::Precondition(format!(
            "need 2 <= m <= M <= {n}, got m = {m}, M = {big_m}"
        )));
    }
    if !margins.value(m).is_positive() || !margins.value(big_m).is_positive() {
        return Err(ScheduleError::Precondition(
            "margins at m and M must be positive".into(),
        ));
    }
    if (1..m).any(|j| margins.value(j).is_positive()) {
        return Err(ScheduleError::Precondition(
            "m must be the lowest layer with a positive margin".into(),
        ));
    }
    let receiver_count = inst.demander_count(big_m);
    if receiver_count < 2 {
        return Err(ScheduleError::Precondition(format!(
            "layer {big_m} needs at least two demanders, has {receiver_count}"
        )));
    }

    let n_value = margins.value(m).min(margins.value(big_m)).clone();
    let fanout = Rational::from_usize(receiver_count);
    let total = &fanout * &n_value / (&fanout - &Rational::one());

    // Shell anchors over the prefix 1..m-1.
    let mut anchors: Vec<usize> = Vec::new();
    let mut hi = m - 1;
    while hi >= 1 {
        let anchor = (1..=hi)
            .min_by(|&a, &b| margins.value(b).cmp(margins.value(a)).then(a.cmp(&b)))
            .expect("non-empty prefix");
        anchors.push(anchor);
        hi = anchor - 1;
    }
    debug_assert_eq!(*anchors.last().unwrap(), 1);

    let mut amounts = vec![Rational::zero(); inst.peer_count()];
    // fills `target` within the shell X_lo \ X_hi, ascending peer index
    let fill = |amounts: &mut Vec<Rational>, lo: usize, hi: usize, target: Rational| {
        let mut remaining = target;
        for (idx, peer) in inst.peers().iter().enumerate() {
            if remaining.is_zero() {
                break;
            }
            if peer.max_layer >= lo && peer.max_layer < hi {
                let take = capacities[idx].clone().min(remaining.clone());
                amounts[idx] += &take;
                remaining -= &take;
            }
        }
        if !remaining.is_zero() {
            return Err(ScheduleError::Internal(format!(
                "shell X_{lo} \\ X_{hi} is short of {remaining} helper capacity"
            )));
        }
        Ok(())
    };

    let j1 = anchors[0];
    let budget_j1 = &n_value - margins.value(j1);
    if total <= budget_j1 {
        fill(&mut amounts, j1, m, total.clone())?;
    } else {
        // find t with N - N_{j_{t+1}} >= total > N - N_{j_t}
        let t = (1..anchors.len())
            .find(|&r| &n_value - margins.value(anchors[r]) >= total)
            .ok_or_else(|| {
                ScheduleError::Internal(
                    "no anchor index satisfies the helper-budget inequality".into(),
                )
            })?;
        fill(&mut amounts, j1, m, budget_j1)?;
        for r in 1..t {
            let target = margins.value(anchors[r - 1]) - margins.value(anchors[r]);
            fill(&mut amounts, anchors[r], anchors[r - 1], target)?;
        }
        let already = &n_value - margins.value(anchors[t - 1]);
        fill(&mut amounts, anchors[t], anchors[t - 1], &total - &already)?;
    }

    // Prefix bounds promised to the margin update laws.
    for j in 1..m {
        let inside: Rational = amounts
            .iter()
            .enumerate()
            .filter(|(idx, _)| inst.is_demander(*idx, j))
            .map(|(_, amount)| amount)
            .sum();
        if inside > &n_value - margins.value(j) {
            return Err(ScheduleError::Internal(format!(
                "helper shares inside X_{j} exceed N - N_{j}"
            )));
        }
    }
    let granted: Rational = amounts.iter().sum();
    if granted != total {
        return Err(ScheduleError::Internal(format!(
            "helper shares sum to {granted}, expected {total}"
        )));
    }

    Ok(amounts
        .into_iter()
        .enumerate()
        .filter(|(_, amount)| amount.is_positive())
        .collect())
}

/// Chooses per-node shares for layer `j`'s distribution trees from a
/// residual state whose margins are all non-positive.
///
/// The source contributes `max(L_j, |X_j| L_j - sum of demander capacity)`,
/// which is the least it can while leaving room for the lower layers; the
/// demanders cover the rest in descending capacity order (ties by index).
/// Shares sum to exactly `|X_j| L_j`.
pub fn allocate_layer(state: &ResidualState<'_>, j: usize) -> Result<LayerShares, ScheduleError> {
    let inst = state.instance();
    let n = inst.layer_count();
    if j < 1 || j > n {
        return Err(ScheduleError::Precondition(format!(
            "layer {j} outside 1..={n}"
        )));
    }
    let rate = state.layer_rate(j).clone();
    if rate.is_zero() {
        return Ok(LayerShares {
            source: Rational::zero(),
            peers: Vec::new(),
        });
    }
    let margins = state.margins();
    if (1..=n).any(|l| margins.value(l).is_positive()) {
        return Err(ScheduleError::Internal(
            "layer allocation requires all residual margins to be non-positive".into(),
        ));
    }

    let demanders: Vec<usize> = inst.demanders(j).collect();
    let demander_total: Rational = demanders.iter().map(|&i| state.peer_capacity(i)).sum();
    let target = Rational::from_usize(demanders.len()) * &rate;
    let mut source = &target - &demander_total;
    if source < rate {
        source = rate.clone();
    }
    let lower_rates: Rational = (1..j).map(|l| state.layer_rate(l)).sum();
    let source_budget = state.source_capacity() - &lower_rates;
    if source > source_budget {
        return Err(ScheduleError::Internal(format!(
            "source share {source} for layer {j} exceeds its budget {source_budget}"
        )));
    }

    let mut remaining = &target - &source;
    let mut order = demanders.clone();
    order.sort_by(|&a, &b| {
        state
            .peer_capacity(b)
            .cmp(state.peer_capacity(a))
            .then(a.cmp(&b))
    });
    let mut shares: Vec<(usize, Rational)> = Vec::new();
    for idx in order {
        if remaining.is_zero() {
            break;
        }
        let take = state.peer_capacity(idx).clone().min(remaining.clone());
        if take.is_positive() {
            shares.push((idx, take.clone()));
            remaining -= &take;
        }
    }
    if !remaining.is_zero() {
        return Err(ScheduleError::Internal(format!(
            "demanders of layer {j} are short of {remaining} capacity"
        )));
    }
    shares.sort_by_key(|&(idx, _)| idx);
    Ok(LayerShares {
        source,
        peers: shares,
    })
}

/// Synthesizes a complete transmission plan, or reports infeasibility.
pub fn schedule(inst: &Instance) -> Result<ScheduleOutcome, ScheduleError> {
    schedule_with_guard(inst, DEFAULT_UNIT_GUARD)
}

pub fn schedule_with_guard(
    inst: &Instance,
    unit_guard: u64,
) -> Result<ScheduleOutcome, ScheduleError> {
    let report = check_feasibility(inst);
    if !report.feasible {
        return Ok(ScheduleOutcome::Infeasible(Box::new(report)));
    }

    let n = inst.layer_count();
    let mut state = ResidualState::new(inst);
    let mut phases = Vec::new();
    while !state.margins().positive_layers().is_empty() {
        if phases.len() == n {
            return Err(ScheduleError::Internal(
                "relay loop exceeded the layer count".into(),
            ));
        }
        phases.push(state.relay_phase()?);
    }

    // Peeling preconditions, checked rather than assumed.
    let margins = state.margins();
    if (1..=n).any(|j| margins.value(j).is_positive()) {
        return Err(ScheduleError::Internal(
            "positive margin left after the relay loop".into(),
        ));
    }
    let residual_rate_sum: Rational = (1..=n).map(|j| state.layer_rate(j)).sum();
    if *state.source_capacity() < residual_rate_sum {
        return Err(ScheduleError::Internal(
            "residual source capacity below the residual rate sum".into(),
        ));
    }

    let mut trees = Vec::new();
    for j in (1..=n).rev() {
        let rate = state.layer_rate(j).clone();
        if rate.is_zero() {
            continue;
        }
        let shares = allocate_layer(&state, j)?;
        let members: Vec<(Node, Rational)> = inst
            .demanders(j)
            .map(|idx| {
                let share = shares
                    .peers
                    .iter()
                    .find(|(i, _)| *i == idx)
                    .map(|(_, s)| s.clone())
                    .unwrap_or_else(Rational::zero);
                (Node::Peer(idx), share)
            })
            .collect();
        let packed = pack_unit_trees(&rate, &shares.source, &members, unit_guard)?;

        let mut cursor = state.cursors[j - 1].clone();
        for (tree, tree_rate) in packed {
            let segment = Segment::new(j, cursor.clone(), &cursor + &tree_rate);
            cursor = segment.end.clone();
            trees.push(PlanTree {
                segment,
                rate: tree_rate,
                edges: tree.edges(),
            });
        }
        if cursor != *inst.layer_rate(j) {
            return Err(ScheduleError::Internal(format!(
                "layer {j} trees do not tile the residual stream"
            )));
        }

        state.source_capacity -= &shares.source;
        for (idx, amount) in &shares.peers {
            state.peer_capacities[*idx] -= amount;
            if state.peer_capacities[*idx].is_negative() {
                return Err(ScheduleError::Internal(
                    "layer share exceeds residual peer capacity".into(),
                ));
            }
        }
        if state.source_capacity.is_negative() {
            return Err(ScheduleError::Internal(
                "layer share exceeds residual source capacity".into(),
            ));
        }
        state.layer_rates[j - 1] = Rational::zero();
        state.cursors[j - 1] = cursor;
    }

    Ok(ScheduleOutcome::Plan(TransmissionPlan { phases, trees }))
}
