//! Eigenvalue inequalities turned into verdicts: the fundamental gap, the
//! Dirichlet lower bounds in diameter and volume form, and the Neumann
//! drift bounds.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::eigen::{drift_eigenpairs, EigenError};
use crate::geometry::{DomainSpec, GridDomain};
use crate::operator::{assemble_neumann_drift, Drift, OperatorError, Potential};
use crate::report::Verdict;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("a bound needs at least one grid level")]
    NoLevels,
}

/// A computed quantity on one grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub h: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundVerdict {
    pub id: String,
    /// Value on the finest grid.
    pub computed: f64,
    /// Richardson-extrapolated value (the fine value with one level).
    pub corrected: f64,
    pub bound: f64,
    /// `computed - bound`.
    pub slack: f64,
    /// `corrected - bound`.
    pub corrected_slack: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    /// Set when the verdict is marginal: the equality case that sits on the
    /// bound.
    pub equality_case: Option<String>,
}

impl BoundVerdict {
    /// Levels are ordered coarse to fine. With two or more levels the two
    /// finest are extrapolated assuming second order and the tolerance is
    /// `1e-6·max(|bound|, (π/D)²)`; a single level uses `10(h/D)²·|value|`.
    pub fn evaluate(
        id: &str,
        levels: &[Level],
        bound: f64,
        d: f64,
        equality_case: &str,
    ) -> Result<BoundVerdict, BoundsError> {
        let fine = *levels.last().ok_or(BoundsError::NoLevels)?;
        let (corrected, tolerance) = if levels.len() >= 2 {
            let coarse = levels[levels.len() - 2];
            let r2 = (coarse.h / fine.h).powi(2);
            (
                (r2 * fine.value - coarse.value) / (r2 - 1.0),
                1e-6 * bound.abs().max((PI / d).powi(2)),
            )
        } else {
            (fine.value, 10.0 * (fine.h / d).powi(2) * fine.value.abs())
        };
        let corrected_slack = corrected - bound;
        let verdict = if corrected_slack.abs() <= tolerance {
            Verdict::Marginal
        } else if corrected_slack > 0.0 {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Ok(BoundVerdict {
            id: id.to_string(),
            computed: fine.value,
            corrected,
            bound,
            slack: fine.value - bound,
            corrected_slack,
            tolerance,
            verdict,
            equality_case: (verdict == Verdict::Marginal).then(|| equality_case.to_string()),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.computed.is_finite() && self.bound.is_finite() && self.corrected_slack.is_finite()
    }
}

/// `λ₁ - λ₀ ≥ 3π²/D²`; `gaps` are per-level values of `λ₁ - λ₀`.
pub fn gap_check(gaps: &[Level], d: f64) -> Result<BoundVerdict, BoundsError> {
    BoundVerdict::evaluate("gap", gaps, 3.0 * (PI / d).powi(2), d, "interval model")
}

/// `λ₀ ≥ n(π/D)² + inf q` and `λ₁ ≥ (n+3)(π/D)² + inf q`. The potential
/// must be certified convex.
pub fn dirichlet_lower_bounds(
    lambda0: &[Level],
    lambda1: &[Level],
    spec: &DomainSpec,
    q: &Potential,
) -> Result<Vec<BoundVerdict>, BoundsError> {
    let h = lambda0.last().ok_or(BoundsError::NoLevels)?.h;
    let inf_q = q.infimum(spec, h)?;
    let d = spec.diameter();
    let n = spec.dimension() as f64;
    let unit = (PI / d).powi(2);
    Ok(vec![
        BoundVerdict::evaluate(
            "lambda0-diameter",
            lambda0,
            n * unit + inf_q,
            d,
            "interval model",
        )?,
        BoundVerdict::evaluate(
            "lambda1-diameter",
            lambda1,
            (n + 3.0) * unit + inf_q,
            d,
            "interval model",
        )?,
    ])
}

/// Volume of the unit ball in `n ≤ 2` dimensions.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => PI,
        _ => panic!("only one- and two-dimensional domains are supported"),
    }
}

/// `λ₀ ≥ n(π²/4)(α(n)/|Ω|)^{2/n} + inf q` and the `λ₁` analogue with
/// `n + 3`.
pub fn isodiametric_bounds(
    lambda0: &[Level],
    lambda1: &[Level],
    spec: &DomainSpec,
    q: &Potential,
) -> Result<Vec<BoundVerdict>, BoundsError> {
    let h = lambda0.last().ok_or(BoundsError::NoLevels)?.h;
    let inf_q = q.infimum(spec, h)?;
    let n = spec.dimension();
    let unit = PI * PI / 4.0 * (unit_ball_volume(n) / spec.volume()).powf(2.0 / n as f64);
    let nf = n as f64;
    let d = spec.diameter();
    Ok(vec![
        BoundVerdict::evaluate(
            "lambda0-volume",
            lambda0,
            nf * unit + inf_q,
            d,
            "interval model",
        )?,
        BoundVerdict::evaluate(
            "lambda1-volume",
            lambda1,
            (nf + 3.0) * unit + inf_q,
            d,
            "interval model",
        )?,
    ])
}

/// Which lower bound the second Neumann eigenvalue is held to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum NeumannBound {
    /// Drift with the model expansion modulus: `λ̃₁ ≥ μ₁ - μ₀ = 3π²/D²`.
    ModelModulus,
    /// Drift with expansion modulus `ε'`: `λ̃₁ ≥ 2ε' + π²/D²`.
    Convex { epsilon: f64 },
}

/// `λ̃₁` of `-Δ + 2X·∇` with Neumann conditions on a cell-centred grid.
pub fn neumann_eigenvalue(grid: &GridDomain, drift: &Drift) -> Result<f64, BoundsError> {
    let op = assemble_neumann_drift(grid, drift)?;
    Ok(drift_eigenpairs(&op, 2)?.eigenvalues[1])
}

pub fn neumann_check(
    levels: &[Level],
    d: f64,
    bound: NeumannBound,
) -> Result<BoundVerdict, BoundsError> {
    let mu0 = (PI / d).powi(2);
    match bound {
        NeumannBound::ModelModulus => BoundVerdict::evaluate(
            "neumann-model-modulus",
            levels,
            3.0 * mu0,
            d,
            "interval with model drift",
        ),
        NeumannBound::Convex { epsilon } => BoundVerdict::evaluate(
            "neumann-convex",
            levels,
            2.0 * epsilon + mu0,
            d,
            "interval without drift",
        ),
    }
}
