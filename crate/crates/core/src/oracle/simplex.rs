//! Exact-rational linear feasibility via a dense phase-1 simplex.
//!
//! Decides whether `{ x >= 0 : E x = e, U x <= u }` is non-empty, with
//! `e, u >= 0`. Slack variables give the inequality rows a starting basis;
//! artificial variables cover the equality rows, and minimizing their sum
//! with Bland's rule (which cannot cycle) either drives them to zero or
//! proves emptiness. Both answers are certified: a feasible point is
//! substituted back into every constraint, and an infeasibility certificate
//! `(lambda, mu >= 0)` with `lambda^T E + mu^T U >= 0` and
//! `lambda^T e + mu^T u < 0` is extracted from the final duals and checked.

use crate::rational::Rational;

pub(crate) struct FeasibilityProblem {
    pub nvars: usize,
    /// `(coefficients, rhs)` rows of `E x = e`, `rhs >= 0`.
    pub eq: Vec<(Vec<Rational>, Rational)>,
    /// `(coefficients, rhs)` rows of `U x <= u`, `rhs >= 0`.
    pub ub: Vec<(Vec<Rational>, Rational)>,
}

// Payloads carry the verified witness / certificate for inspection; the
// oracle itself only needs the verdict.
#[allow(dead_code)]
pub(crate) enum Outcome {
    Feasible(Vec<Rational>),
    Infeasible {
        eq_multipliers: Vec<Rational>,
        ub_multipliers: Vec<Rational>,
    },
}

impl Outcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Outcome::Feasible(_))
    }
}

pub(crate) fn solve(problem: &FeasibilityProblem) -> Outcome {
    let nvars = problem.nvars;
    let me = problem.eq.len();
    let mu = problem.ub.len();
    let rows = me + mu;
    let slack0 = nvars;
    let art0 = nvars + mu;
    let ncols = nvars + mu + me; // plus rhs held separately

    // tableau rows: eq rows first, then ub rows
    let mut tab: Vec<Vec<Rational>> = Vec::with_capacity(rows);
    let mut rhs: Vec<Rational> = Vec::with_capacity(rows);
    let mut basis: Vec<usize> = Vec::with_capacity(rows);
    for (i, (coeffs, b)) in problem.eq.iter().enumerate() {
        assert_eq!(coeffs.len(), nvars);
        assert!(!b.is_negative(), "equality rhs must be non-negative");
        let mut row = vec![Rational::zero(); ncols];
        row[..nvars].clone_from_slice(coeffs);
        row[art0 + i] = Rational::one();
        tab.push(row);
        rhs.push(b.clone());
        basis.push(art0 + i);
    }
    for (i, (coeffs, b)) in problem.ub.iter().enumerate() {
        assert_eq!(coeffs.len(), nvars);
        assert!(!b.is_negative(), "inequality rhs must be non-negative");
        let mut row = vec![Rational::zero(); ncols];
        row[..nvars].clone_from_slice(coeffs);
        row[slack0 + i] = Rational::one();
        tab.push(row);
        rhs.push(b.clone());
        basis.push(slack0 + i);
    }

    // Phase-1 objective: minimize the sum of artificials. Reduced costs
    // start as c - sum(eq rows) so that the basic columns read zero.
    let mut reduced = vec![Rational::zero(); ncols];
    for slot in reduced[art0..].iter_mut() {
        *slot = Rational::one();
    }
    for row in tab.iter().take(me) {
        for (slot, value) in reduced.iter_mut().zip(row) {
            *slot -= value;
        }
    }

    // Bland: entering column is the lowest index with negative cost.
    while let Some(entering) = (0..ncols).find(|&j| reduced[j].is_negative()) {
        // Ratio test; ties resolved by the smallest basis variable (Bland).
        let mut pivot_row: Option<usize> = None;
        let mut best: Option<Rational> = None;
        for i in 0..rows {
            if !tab[i][entering].is_positive() {
                continue;
            }
            let ratio = &rhs[i] / &tab[i][entering];
            let better = match &best {
                None => true,
                Some(current) => {
                    ratio < *current
                        || (ratio == *current && basis[i] < basis[pivot_row.unwrap()])
                }
            };
            if better {
                best = Some(ratio);
                pivot_row = Some(i);
            }
        }
        let r = pivot_row.expect("phase-1 objective is bounded below by zero");

        // pivot on (r, entering)
        let factor = tab[r][entering].clone();
        for value in tab[r].iter_mut() {
            *value = &*value / &factor;
        }
        rhs[r] = &rhs[r] / &factor;
        let pivot_values = tab[r].clone();
        for i in 0..rows {
            if i == r || tab[i][entering].is_zero() {
                continue;
            }
            let scale = tab[i][entering].clone();
            for (slot, value) in tab[i].iter_mut().zip(&pivot_values) {
                *slot -= &(&scale * value);
            }
            let delta = &scale * &rhs[r];
            rhs[i] -= &delta;
        }
        if !reduced[entering].is_zero() {
            let scale = reduced[entering].clone();
            for (slot, value) in reduced.iter_mut().zip(&pivot_values) {
                *slot -= &(&scale * value);
            }
        }
        basis[r] = entering;
    }

    // Phase-1 value: whatever the artificials still carry.
    let objective: Rational = (0..rows)
        .filter(|&i| basis[i] >= art0)
        .map(|i| &rhs[i])
        .sum();
    if objective.is_zero() {
        let mut point = vec![Rational::zero(); nvars];
        for i in 0..rows {
            if basis[i] < nvars {
                point[basis[i]] = rhs[i].clone();
            }
        }
        verify_point(problem, &point);
        Outcome::Feasible(point)
    } else {
        // Duals from the final reduced costs of the initial basic columns:
        // y_eq = 1 - r_art, y_ub = -r_slack; the certificate is their negation.
        let eq_multipliers: Vec<Rational> = (0..me)
            .map(|i| &reduced[art0 + i] - &Rational::one())
            .collect();
        let ub_multipliers: Vec<Rational> = (0..mu).map(|i| reduced[slack0 + i].clone()).collect();
        verify_certificate(problem, &eq_multipliers, &ub_multipliers);
        Outcome::Infeasible {
            eq_multipliers,
            ub_multipliers,
        }
    }
}

fn verify_point(problem: &FeasibilityProblem, point: &[Rational]) {
    assert!(
        point.iter().all(|v| !v.is_negative()),
        "feasible point has a negative coordinate"
    );
    for (coeffs, b) in &problem.eq {
        let lhs: Rational = coeffs.iter().zip(point).map(|(c, x)| c * x).sum();
        assert!(lhs == *b, "feasible point violates an equality row");
    }
    for (coeffs, b) in &problem.ub {
        let lhs: Rational = coeffs.iter().zip(point).map(|(c, x)| c * x).sum();
        assert!(lhs <= *b, "feasible point violates an inequality row");
    }
}

fn verify_certificate(problem: &FeasibilityProblem, lambda: &[Rational], mu: &[Rational]) {
    assert!(
        mu.iter().all(|v| !v.is_negative()),
        "inequality multipliers must be non-negative"
    );
    for j in 0..problem.nvars {
        let mut combo = Rational::zero();
        for (i, (coeffs, _)) in problem.eq.iter().enumerate() {
            combo += &(&lambda[i] * &coeffs[j]);
        }
        for (i, (coeffs, _)) in problem.ub.iter().enumerate() {
            combo += &(&mu[i] * &coeffs[j]);
        }
        assert!(
            !combo.is_negative(),
            "certificate combination has a negative coefficient"
        );
    }
    let mut value = Rational::zero();
    for (i, (_, b)) in problem.eq.iter().enumerate() {
        value += &(&lambda[i] * b);
    }
    for (i, (_, b)) in problem.ub.iter().enumerate() {
        value += &(&mu[i] * b);
    }
    assert!(value.is_negative(), "certificate value must be negative");
}
