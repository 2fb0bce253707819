//! Per-layer margins, their dominant subsequence, and shell capacities.
//!
//! The margin of layer `j` measures how far the peers demanding layer `j`
//! (plus the source) fall short of carrying layers `j..=n` by themselves
//! while the lower layers still have to be delivered once each:
//!
//! ```text
//! N_j = sum_{i=j..n} |X_i| L_i + sum_{i<j} L_i - (C_0 + sum_{i in X_j} C_i)
//! ```
//!
//! `N_{n+1}` is defined as zero. A positive margin means outside helpers
//! must relay data they do not demand, which is what the capacity bound's
//! penalty term prices.

use thiserror::Error;

use crate::model::{demand_profile, Instance};
use crate::rational::Rational;

/// Margins `N_1..N_{n+1}` plus the indices of their dominant subsequence.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct MarginVector {
    values: Vec<Rational>,
    dominant_indices: Vec<usize>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MarginError {
    #[error("dominant subsequence of an empty sequence is undefined")]
    EmptySequence,
    #[error("layer pair ({j}, {t}) violates 1 <= j < t <= {max}")]
    IndexViolation { j: usize, t: usize, max: usize },
}

impl MarginVector {
    /// Margin of layer `j`, 1-based, `j <= n + 1`.
    pub fn value(&self, j: usize) -> &Rational {
        &self.values[j - 1]
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    /// Dominant indices `d_1 < ... < d_{h+1}`; the last one is always `n + 1`.
    pub fn dominant_indices(&self) -> &[usize] {
        &self.dominant_indices
    }

    /// Number of stream layers `n` (one less than the number of margins).
    pub fn layer_count(&self) -> usize {
        self.values.len() - 1
    }

    /// Layers with strictly positive margin, ascending. The set `I`.
    pub fn positive_layers(&self) -> Vec<usize> {
        (1..=self.layer_count())
            .filter(|&j| self.value(j).is_positive())
            .collect()
    }
}

/// Margins of `inst` under its own capacities and rates.
pub fn margins(inst: &Instance) -> MarginVector {
    let caps: Vec<Rational> = inst.peers().iter().map(|p| p.capacity.clone()).collect();
    residual_margins(inst, inst.source_capacity(), &caps, inst.layer_rates())
}

/// Margins of `inst` with its capacities and rates replaced by residual
/// values, keeping the demand sets. Scheduling iterations and their tests
/// both recompute margins through this single entry point.
pub fn residual_margins(
    inst: &Instance,
    source_capacity: &Rational,
    peer_capacities: &[Rational],
    layer_rates: &[Rational],
) -> MarginVector {
    let n = inst.layer_count();
    debug_assert_eq!(peer_capacities.len(), inst.peer_count());
    debug_assert_eq!(layer_rates.len(), n);

    let profile = demand_profile(inst);
    // suffix[j-1] = sum_{i=j..n} |X_i| L_i
    let mut suffix = vec![Rational::zero(); n + 1];
    for j in (1..=n).rev() {
        suffix[j - 1] =
            &suffix[j] + Rational::from_usize(profile.demander_count(j)) * &layer_rates[j - 1];
    }
    let mut values = Vec::with_capacity(n + 1);
    let mut prefix = Rational::zero();
    for j in 1..=n {
        let cap_sum = source_capacity
            + inst
                .demanders(j)
                .map(|i| &peer_capacities[i])
                .sum::<Rational>();
        values.push(&suffix[j - 1] + &prefix - cap_sum);
        prefix += &layer_rates[j - 1];
    }
    values.push(Rational::zero());
    let dominant_indices = dominant_subsequence(&values).expect("margin vector is non-empty");
    MarginVector {
        values,
        dominant_indices,
    }
}

/// Indices (1-based) of the dominant subsequence of `seq`.
///
/// The last element is always selected; scanning right to left, an element
/// is selected exactly when it strictly exceeds everything to its right.
/// Ties are excluded by the strict comparison.
pub fn dominant_subsequence(seq: &[Rational]) -> Result<Vec<usize>, MarginError> {
    if seq.is_empty() {
        return Err(MarginError::EmptySequence);
    }
    let mut picked = vec![seq.len()];
    let mut running_max = &seq[seq.len() - 1];
    for idx in (0..seq.len() - 1).rev() {
        if seq[idx] > *running_max {
            picked.push(idx + 1);
            running_max = &seq[idx];
        }
    }
    picked.reverse();
    Ok(picked)
}

/// Direct capacity sum over the shell `X_j \ X_t` (peers demanding layer `j`
/// but not layer `t`; the source is never in the difference set).
pub fn shell_capacity(inst: &Instance, j: usize, t: usize) -> Result<Rational, MarginError> {
    let n = inst.layer_count();
    if j < 1 || j >= t || t > n + 1 {
        return Err(MarginError::IndexViolation { j, t, max: n + 1 });
    }
    Ok(inst
        .peers()
        .iter()
        .filter(|p| p.max_layer >= j && p.max_layer < t)
        .map(|p| &p.capacity)
        .sum())
}

/// The closed-form side of the shell identity:
/// `N_t - N_j + sum_{i=j..t-1} L_i (|X_i| - 1)`.
///
/// Both margins are the inequality-formula values. For `t <= n` that is the
/// ordinary margin; at `t = n + 1` the demand set is the source alone, so
/// the formula gives `sum L_i - C_0`, which differs from the defined
/// `N_{n+1} = 0` by exactly the source's slack. For every valid pair this
/// equals [`shell_capacity`]; the two routes are kept separate so tests can
/// compare them.
pub fn shell_capacity_identity_rhs(
    inst: &Instance,
    j: usize,
    t: usize,
) -> Result<Rational, MarginError> {
    let n = inst.layer_count();
    if j < 1 || j >= t || t > n + 1 {
        return Err(MarginError::IndexViolation { j, t, max: n + 1 });
    }
    let m = margins(inst);
    let formula_margin = |idx: usize| -> Rational {
        if idx <= n {
            m.value(idx).clone()
        } else {
            inst.layer_rates().iter().sum::<Rational>() - inst.source_capacity()
        }
    };
    let mut rhs = formula_margin(t) - formula_margin(j);
    for i in j..t {
        rhs += &(inst.layer_rate(i)
            * Rational::from_usize(inst.demander_count(i).saturating_sub(1)));
    }
    Ok(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
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

    fn w1() -> Instance {
        build(2, &[0, 0, 4], &[2, 2, 1], &[1, 1])
    }

    fn w2() -> Instance {
        build(3, &[0, 0, 3, 4], &[3, 3, 2, 1], &[1, 1, 1])
    }

    #[test]
    fn w1_margins() {
        let m = margins(&w1());
        assert_eq!(m.values(), &[rat(-1), rat(1), rat(0)]);
        assert_eq!(m.dominant_indices(), &[2, 3]);
    }

    #[test]
    fn w2_margins() {
        let m = margins(&w2());
        assert_eq!(m.values(), &[rat(-1), rat(0), rat(1), rat(0)]);
        assert_eq!(m.dominant_indices(), &[3, 4]);
    }

    #[test]
    fn balanced_single_layer_margins() {
        let inst = build(1, &[0], &[1], &[1]);
        let m = margins(&inst);
        assert_eq!(m.values(), &[rat(0), rat(0)]);
        assert_eq!(m.dominant_indices(), &[2]);
    }

    #[test]
    fn dominant_subsequence_examples() {
        let seq = [rat(3), rat(1), rat(2), rat(0)];
        assert_eq!(dominant_subsequence(&seq).unwrap(), vec![1, 3, 4]);
        let seq = [rat(-1), rat(1), rat(0)];
        assert_eq!(dominant_subsequence(&seq).unwrap(), vec![2, 3]);
        let seq = [rat(0), rat(0)];
        assert_eq!(dominant_subsequence(&seq).unwrap(), vec![2]);
        assert_eq!(dominant_subsequence(&[]), Err(MarginError::EmptySequence));
    }

    #[test]
    fn shell_capacities() {
        assert_eq!(shell_capacity(&w2(), 1, 3).unwrap(), rat(7));
        assert_eq!(shell_capacity(&w1(), 1, 2).unwrap(), rat(4));
        // equal demand sets at consecutive layers: empty shell
        let inst = build(1, &[2, 3], &[2, 2], &[1, 1]);
        assert_eq!(shell_capacity(&inst, 1, 2).unwrap(), rat(0));
        assert!(shell_capacity(&w1(), 2, 2).is_err());
        assert!(shell_capacity(&w1(), 1, 4).is_err());
    }

    #[test]
    fn shell_identity_on_worked_instances() {
        for inst in [w1(), w2()] {
            let n = inst.layer_count();
            for j in 1..=n {
                for t in (j + 1)..=(n + 1) {
                    assert_eq!(
                        shell_capacity(&inst, j, t).unwrap(),
                        shell_capacity_identity_rhs(&inst, j, t).unwrap(),
                        "shell identity failed at ({j},{t})"
                    );
                }
            }
        }
    }
}
