//! The exact capacity region: feasibility of a rate vector and the minimum
//! total upload it requires.
//!
//! A rate vector is supportable if and only if
//!
//! ```text
//! C_0 >= sum L_i                                  (source condition)
//! C_0 + sum C_i >= sum |X_i| L_i + penalty        (total-upload condition)
//! penalty = sum_{i=1..h} (N_{d_i} - N_{d_{i+1}}) / (|X_{d_i}| - 1)
//! ```
//!
//! where `d_1 < ... < d_{h+1}` is the dominant subsequence of the margins.
//! Every quantity is evaluated in exact rational arithmetic.

use serde::Serialize;
use thiserror::Error;

use crate::margins::{margins, MarginVector};
use crate::model::{demand_profile, Instance};
use crate::rational::Rational;

/// Outcome of the region test with the numbers behind it.
#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub source_ok: bool,
    pub total_ok: bool,
    /// Right-hand side of the total-upload condition. `None` only in the
    /// degenerate case below, which implies `source_ok` is false.
    pub required_total: Option<Rational>,
    pub actual_total: Rational,
    pub slack: Option<Rational>,
    /// Set when a dominant layer with a positive margin has fewer than two
    /// demanders, which makes the penalty denominator vanish. That can only
    /// happen when the source condition already fails.
    pub degenerate_layer: Option<usize>,
    pub margins: MarginVector,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CapacityError {
    #[error("dominant layer {layer} has a positive margin but fewer than two demanders")]
    DegenerateDenominator { layer: usize },
    #[error("direction must have at least one positive component")]
    ZeroDirection,
    #[error("direction length {got} does not match layer count {expected}")]
    DirectionLengthMismatch { expected: usize, got: usize },
    #[error("tolerance must be positive")]
    NonPositiveTolerance,
}

/// Minimum total upload (source plus peers) that any scheme needs for the
/// instance's rate vector.
pub fn required_total_upload(inst: &Instance) -> Result<Rational, CapacityError> {
    let m = margins(inst);
    let profile = demand_profile(inst);
    let n = inst.layer_count();
    let mut total: Rational = (1..=n)
        .map(|j| Rational::from_usize(profile.demander_count(j)) * inst.layer_rate(j))
        .sum();
    let dominant = m.dominant_indices();
    for pair in dominant.windows(2) {
        let (d, d_next) = (pair[0], pair[1]);
        let count = profile.demander_count(d);
        if count < 2 {
            return Err(CapacityError::DegenerateDenominator { layer: d });
        }
        total += &((m.value(d) - m.value(d_next)) / Rational::from_usize(count - 1));
    }
    Ok(total)
}

/// Evaluates both region conditions exactly.
pub fn check_feasibility(inst: &Instance) -> FeasibilityReport {
    let margin_vector = margins(inst);
    let source_ok = *inst.source_capacity() >= inst.total_rate();
    let actual_total = inst.total_capacity();
    let (required_total, slack, total_ok, degenerate_layer) = match required_total_upload(inst) {
        Ok(required) => {
            let slack = &actual_total - &required;
            let total_ok = !slack.is_negative();
            (Some(required), Some(slack), total_ok, None)
        }
        Err(CapacityError::DegenerateDenominator { layer }) => (None, None, false, Some(layer)),
        Err(_) => unreachable!("required_total_upload only fails on degenerate denominators"),
    };
    // A positive margin at a layer with a single demander forces the source
    // condition to fail, so the degenerate case never masks a feasible point.
    debug_assert!(degenerate_layer.is_none() || !source_ok);
    let feasible = source_ok && total_ok;
    debug_assert!(!feasible || !margin_vector.value(1).is_positive());
    FeasibilityReport {
        feasible,
        source_ok,
        total_ok,
        required_total,
        actual_total,
        slack,
        degenerate_layer,
        margins: margin_vector,
    }
}

impl FeasibilityReport {
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serialization");
        out.push('\n');
        out
    }
}

/// Largest `theta` (within `tolerance`) such that `theta * direction` is a
/// feasible rate vector for the instance's capacities.
///
/// Feasibility is downward closed along the ray, so plain bisection applies.
/// The initial upper bound is the smallest power of two that already
/// violates the source condition; bisection endpoints therefore stay dyadic
/// and boundaries at dyadic rationals are returned exactly.
pub fn max_scale(
    inst: &Instance,
    direction: &[Rational],
    tolerance: &Rational,
) -> Result<Rational, CapacityError> {
    if direction.len() != inst.layer_count() {
        return Err(CapacityError::DirectionLengthMismatch {
            expected: inst.layer_count(),
            got: direction.len(),
        });
    }
    if direction.iter().any(Rational::is_negative) || direction.iter().all(Rational::is_zero) {
        return Err(CapacityError::ZeroDirection);
    }
    if !tolerance.is_positive() {
        return Err(CapacityError::NonPositiveTolerance);
    }

    let feasible_at = |theta: &Rational| -> bool {
        let rates: Vec<Rational> = direction.iter().map(|d| d * theta).collect();
        let scaled = inst
            .with_layer_rates(rates)
            .expect("scaled rates stay valid");
        check_feasibility(&scaled).feasible
    };

    let direction_sum: Rational = direction.iter().sum();
    // smallest power of two strictly above C_0 / sum(direction)
    let cutoff = inst.source_capacity() / &direction_sum;
    let mut hi = Rational::one();
    while hi <= cutoff {
        hi = &hi * &Rational::from(2i64);
    }
    debug_assert!(!feasible_at(&hi));

    let mut lo = Rational::zero();
    debug_assert!(feasible_at(&lo));
    let two = Rational::from(2i64);
    while &(&hi - &lo) > tolerance {
        let mid = (&lo + &hi) / &two;
        if feasible_at(&mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
