//! Expansion-modulus checks on the drift `X = -∇log φ₀` of the ground state,
//! its log-concavity, and the continuity diagnostic for `w = φ₁/φ₀`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigen::SpectralResult;
use crate::geometry::{admissible_nodes, sample_pairs, GeometryError, GridDomain};
use crate::model1d::Model1D;
use crate::operator::{gradient_at, hessian_at, min_eigenvalue, VectorFieldSample};
use crate::par::{self, Execution};
use crate::report::{PairWitness, SlackReport};
use crate::{dist, Point};

/// Pairs at separation `≥ POLE_FRACTION·D` are excluded (tangent pole).
pub const POLE_FRACTION: f64 = 0.999;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModulusError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("ground state is not positive at node {node}")]
    NonPositiveGroundState { node: usize },
    #[error("all {excluded} pairs reach the tangent pole")]
    PoleProximity { excluded: usize },
    #[error("no pairs to evaluate")]
    NoPairs,
    #[error("node {node} is not in the sampled field")]
    PairOutsideField { node: usize },
    #[error("excited level is degenerate (lambda1 = {lambda1}, lambda2 = {lambda2})")]
    DegenerateExcited { lambda1: f64, lambda2: f64 },
    #[error("need {needed} eigenpairs, got {got}")]
    NotEnoughEigenpairs { needed: usize, got: usize },
}

/// Default pairwise tolerance `10h(π/D)²`.
pub fn default_tolerance(h: f64, d: f64) -> f64 {
    10.0 * h * (std::f64::consts::PI / d).powi(2)
}

/// `X = -∇_hφ₀/φ₀` at the nodes where `φ₀ ≥ δ·max φ₀` and the difference
/// stencil is interior.
pub fn ground_state_field(
    spectral: &SpectralResult,
    grid: &GridDomain,
    delta: f64,
) -> Result<VectorFieldSample, ModulusError> {
    let phi = spectral.ground_state();
    if let Some(node) = phi.iter().position(|v| *v <= 0.0) {
        return Err(ModulusError::NonPositiveGroundState { node });
    }
    let nodes = admissible_nodes(grid, phi, delta, false)?;
    let values = nodes
        .iter()
        .map(|&i| {
            let g = gradient_at(phi, grid, i).expect("admissible nodes carry a stencil");
            [-g[0] / phi[i], -g[1] / phi[i]]
        })
        .collect();
    Ok(VectorFieldSample::new(
        grid.len(),
        nodes,
        values,
        format!("-grad log phi0, delta={delta}, h={}", grid.h),
    ))
}

/// Right-hand side of the expansion inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExpansionBound {
    /// `2(π/D) tan(π|y-x|/2D)`.
    Model(Model1D),
    /// Plain monotonicity, `ψ ≡ 0`.
    Zero,
}

impl ExpansionBound {
    fn eval(&self, r: f64) -> f64 {
        match self {
            ExpansionBound::Model(m) => m.expansion_bound(r),
            ExpansionBound::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SlackOptions {
    /// Overrides the default `10h(π/D)²`.
    pub tolerance: Option<f64>,
    pub execution: Execution,
}

/// Evaluates `slack(i, j, r, u)` over the pairs, dropping those at
/// separation `≥ 0.999 D`, and aggregates the result.
pub(crate) fn pair_report<F>(
    inequality: &str,
    grid: &GridDomain,
    pairs: &[(usize, usize)],
    d: f64,
    tolerance: f64,
    execution: Execution,
    slack: F,
) -> Result<(SlackReport, Vec<f64>), ModulusError>
where
    F: Fn(usize, usize, f64, Point) -> f64 + Sync,
{
    if pairs.is_empty() {
        return Err(ModulusError::NoPairs);
    }
    let limit = POLE_FRACTION * d;
    let kept: Vec<(usize, usize)> = pairs
        .iter()
        .copied()
        .filter(|&(i, j)| dist(grid.node(i), grid.node(j)) < limit)
        .collect();
    let excluded = pairs.len() - kept.len();
    if kept.is_empty() {
        return Err(ModulusError::PoleProximity { excluded });
    }
    let slacks = par::map(execution, &kept, |&(i, j)| {
        let (x, y) = (grid.node(i), grid.node(j));
        let r = dist(x, y);
        slack(i, j, r, [(y[0] - x[0]) / r, (y[1] - x[1]) / r])
    });
    let report = SlackReport::from_slacks(inequality, &slacks, excluded, tolerance, |k| {
        let (i, j) = kept[k];
        PairWitness {
            x: grid.node(i),
            y: grid.node(j),
            separation: dist(grid.node(i), grid.node(j)),
        }
    });
    Ok((report, slacks))
}

/// Per pair, `(X(y) - X(x))·(y-x)/|y-x| - bound(|y-x|)`.
pub fn expansion_slack(
    x: &VectorFieldSample,
    grid: &GridDomain,
    pairs: &[(usize, usize)],
    bound: ExpansionBound,
    opts: &SlackOptions,
) -> Result<SlackReport, ModulusError> {
    Ok(expansion_slacks(x, grid, pairs, bound, opts)?.0)
}

/// [`expansion_slack`] together with the per-pair slacks of the evaluated
/// (non-excluded) pairs, in pair order.
pub fn expansion_slacks(
    x: &VectorFieldSample,
    grid: &GridDomain,
    pairs: &[(usize, usize)],
    bound: ExpansionBound,
    opts: &SlackOptions,
) -> Result<(SlackReport, Vec<f64>), ModulusError> {
    for &(i, j) in pairs {
        for node in [i, j] {
            if x.get(node).is_none() {
                return Err(ModulusError::PairOutsideField { node });
            }
        }
    }
    let d = match bound {
        ExpansionBound::Model(m) => m.d,
        ExpansionBound::Zero => grid.diameter,
    };
    let tol = opts
        .tolerance
        .unwrap_or_else(|| default_tolerance(grid.h, d));
    let id = match bound {
        ExpansionBound::Model(_) => "expansion-modulus",
        ExpansionBound::Zero => "expansion-monotone",
    };
    pair_report(id, grid, pairs, d, tol, opts.execution, |i, j, r, u| {
        let (xi, xj) = (x.get(i).unwrap(), x.get(j).unwrap());
        (xj[0] - xi[0]) * u[0] + (xj[1] - xi[1]) * u[1] - bound.eval(r)
    })
}

/// Smallest Hessian eigenvalue of `-log φ₀` over the admissible nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogConcavity {
    pub min_eigenvalue: f64,
    pub argmin: Point,
    pub node_count: usize,
}

pub fn logconcavity_min_eig(
    spectral: &SpectralResult,
    grid: &GridDomain,
    delta: f64,
) -> Result<LogConcavity, ModulusError> {
    let phi = spectral.ground_state();
    if let Some(node) = phi.iter().position(|v| *v <= 0.0) {
        return Err(ModulusError::NonPositiveGroundState { node });
    }
    let neg_log: Vec<f64> = phi.iter().map(|v| -v.ln()).collect();
    // Second differences reaching a cut node amplify its O(h) error by 1/h².
    let nodes: Vec<usize> = admissible_nodes(grid, phi, delta, true)?
        .into_iter()
        .filter(|&i| {
            let reach = if grid.dimension == 1 { 0 } else { 1 };
            (-1..=1).all(|di| {
                (-reach..=reach).all(|dj| grid.offset(i, di, dj).is_some_and(|j| !grid.is_cut(j)))
            })
        })
        .collect();
    if nodes.is_empty() {
        return Err(GeometryError::NoAdmissibleNodes.into());
    }
    let mut best = (f64::INFINITY, nodes[0]);
    for &i in &nodes {
        let m = hessian_at(&neg_log, grid, i).expect("admissible nodes carry a full stencil");
        let e = min_eigenvalue(&m, grid.dimension);
        if e < best.0 {
            best = (e, i);
        }
    }
    Ok(LogConcavity {
        min_eigenvalue: best.0,
        argmin: grid.node(best.1),
        node_count: nodes.len(),
    })
}

/// `C* = max (w(y) - w(x)) / w̄(|y-x|/2)` over admissible pairs, with
/// `w = φ₁/φ₀`. A diagnostic, not a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioDiagnostic {
    pub c_star: f64,
    pub argmax: PairWitness,
    pub pair_count: usize,
}

/// Needs the three lowest eigenpairs so that a degenerate `λ₁` can be
/// detected.
pub fn ratio_continuity(
    spectral: &SpectralResult,
    grid: &GridDomain,
    model: &Model1D,
    delta: f64,
    max_pairs: usize,
    seed: u64,
) -> Result<RatioDiagnostic, ModulusError> {
    if spectral.len() < 3 {
        return Err(ModulusError::NotEnoughEigenpairs {
            needed: 3,
            got: spectral.len(),
        });
    }
    let (l1, l2) = (spectral.eigenvalues[1], spectral.eigenvalues[2]);
    if l2 - l1 <= 1e-6 * l1.abs() {
        return Err(ModulusError::DegenerateExcited {
            lambda1: l1,
            lambda2: l2,
        });
    }
    let phi0 = spectral.ground_state();
    let w: Vec<f64> = phi0
        .iter()
        .zip(&spectral.eigenfunctions[1])
        .map(|(a, b)| b / a)
        .collect();
    let nodes = admissible_nodes(grid, phi0, delta, false)?;
    let pairs = sample_pairs(&nodes, max_pairs, seed);
    if pairs.is_empty() {
        return Err(ModulusError::NoPairs);
    }
    let mut best = (f64::NEG_INFINITY, pairs[0]);
    for &(i, j) in &pairs {
        let r = dist(grid.node(i), grid.node(j));
        // Both orientations of the unordered pair.
        let c = (w[j] - w[i]).abs() / model.wbar(0.5 * r);
        if c > best.0 {
            best = (c, (i, j));
        }
    }
    let (i, j) = best.1;
    Ok(RatioDiagnostic {
        c_star: best.0,
        argmax: PairWitness {
            x: grid.node(i),
            y: grid.node(j),
            separation: dist(grid.node(i), grid.node(j)),
        },
        pair_count: pairs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::smallest_eigenpairs;
    use crate::geometry::{build_grid, DomainSpec};
    use crate::operator::{assemble_dirichlet, Potential};
    use std::f64::consts::PI;

    fn interval(h: f64) -> (GridDomain, SpectralResult) {
        let g = build_grid(&DomainSpec::interval(-0.5, 0.5), h).unwrap();
        let s =
            smallest_eigenpairs(&assemble_dirichlet(&g, &Potential::zero()).unwrap(), 3).unwrap();
        (g, s)
    }

    #[test]
    fn field_is_odd_and_vanishes_at_peak() {
        let (g, s) = interval(1.0 / 128.0);
        let x = ground_state_field(&s, &g, 1e-2).unwrap();
        let n = g.len();
        for &i in &x.nodes {
            let mirror = x.get(n - 1 - i).unwrap();
            assert!((x.get(i).unwrap()[0] + mirror[0]).abs() < 1e-8);
        }
        let peak = g.nearest_node([0.0, 0.0]);
        assert!(x.get(peak).unwrap()[0].abs() <= g.h);
    }

    #[test]
    fn pole_pairs_are_excluded() {
        let (g, s) = interval(1.0 / 64.0);
        let x = ground_state_field(&s, &g, 1e-3).unwrap();
        let m = Model1D::new(0.5).unwrap();
        let a = *x.nodes.first().unwrap();
        let b = *x.nodes.last().unwrap();
        let near = x.nodes[1];
        let r = expansion_slack(
            &x,
            &g,
            &[(a, b), (a, near)],
            ExpansionBound::Model(m),
            &SlackOptions::default(),
        )
        .unwrap();
        assert_eq!((r.pair_count, r.excluded_pairs), (1, 1));
        assert!(matches!(
            expansion_slack(
                &x,
                &g,
                &[(a, b)],
                ExpansionBound::Model(m),
                &SlackOptions::default()
            ),
            Err(ModulusError::PoleProximity { excluded: 1 })
        ));
    }

    #[test]
    fn larger_model_length_increases_slack() {
        let (g, s) = interval(1.0 / 64.0);
        let x = ground_state_field(&s, &g, 1e-2).unwrap();
        let pairs = sample_pairs(&x.nodes, 500, 3);
        let opts = SlackOptions {
            tolerance: Some(1.0),
            execution: Execution::Sequential,
        };
        let (_, a) = expansion_slacks(
            &x,
            &g,
            &pairs,
            ExpansionBound::Model(Model1D::new(1.0).unwrap()),
            &opts,
        )
        .unwrap();
        let (_, b) = expansion_slacks(
            &x,
            &g,
            &pairs,
            ExpansionBound::Model(Model1D::new(1.1).unwrap()),
            &opts,
        )
        .unwrap();
        assert!(a.iter().zip(&b).all(|(p, q)| q > p));
    }

    #[test]
    fn one_dimensional_ratio_diagnostic() {
        let (g, s) = interval(1.0 / 64.0);
        let m = Model1D::new(1.0).unwrap();
        let d = ratio_continuity(&s, &g, &m, 1e-2, 10_000, 0).unwrap();
        assert!(d.c_star.is_finite() && d.c_star > 0.0);
    }

    #[test]
    fn square_excited_level_is_degenerate() {
        let g = build_grid(&DomainSpec::unit_square(), 1.0 / 16.0).unwrap();
        let s =
            smallest_eigenpairs(&assemble_dirichlet(&g, &Potential::zero()).unwrap(), 3).unwrap();
        let m = Model1D::new(2f64.sqrt()).unwrap();
        assert!(matches!(
            ratio_continuity(&s, &g, &m, 1e-2, 100, 0),
            Err(ModulusError::DegenerateExcited { .. })
        ));
    }

    #[test]
    fn one_dimensional_logconcavity() {
        let (g, s) = interval(1.0 / 256.0);
        let lc = logconcavity_min_eig(&s, &g, 1e-2).unwrap();
        assert!(lc.min_eigenvalue > PI * PI - 0.05);
    }
}
