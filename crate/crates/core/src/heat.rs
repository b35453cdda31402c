//! Dirichlet heat kernels `H(z, ·, t)` on the grid, their pairwise
//! log-concavity comparison against the interval model, and the decay check
//! of their spatial maximum.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigen::SpectralResult;
use crate::geometry::GridDomain;
use crate::linalg::{BandCholesky, NotPositiveDefinite};
use crate::model1d::{Model1D, ModelError};
use crate::modulus::{default_tolerance, pair_report, ModulusError, SlackOptions};
use crate::operator::{gradient_at, BoundaryCondition, OperatorMatrix};
use crate::par::{self, Execution};
use crate::report::{SlackReport, Verdict};

/// Spectral truncation must drop less than this at the smallest time.
pub const TAIL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeatError {
    #[error("spectral tail bound {bound:e} at t = {t} exceeds 1e-12")]
    TailTooFat { t: f64, bound: f64 },
    #[error("Crank-Nicolson solve failed: {0}")]
    LinearSolveFailure(#[from] NotPositiveDefinite),
    #[error("t = {t} is below the minimum checked time {t_min}")]
    BelowMinimumTime { t: f64, t_min: f64 },
    #[error("times must be positive and increasing")]
    InvalidTimes,
    #[error("source node {0} is not an unknown of the grid")]
    SourceOutOfRange(usize),
    #[error("heat kernels need a Dirichlet operator")]
    NotDirichlet,
    #[error("decay check needs at least 3 snapshots, got {0}")]
    TooFewSnapshots(usize),
    #[error(transparent)]
    Modulus(#[from] ModulusError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum HeatMethod {
    Spectral { modes: usize },
    CrankNicolson { dt: f64 },
}

/// `H(z, x, t)` at every interior node `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatState {
    pub source: usize,
    pub t: f64,
    pub values: Vec<f64>,
    pub method: HeatMethod,
    pub cell_volume: f64,
}

impl HeatState {
    /// `Σ H hⁿ`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_volume
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_positive(&self) -> bool {
        self.values.iter().all(|v| *v > 0.0)
    }

    /// Node coordinates and kernel values as `x,y,value` lines.
    pub fn write_csv<W: Write>(&self, grid: &GridDomain, mut out: W) -> io::Result<()> {
        writeln!(out, "x,y,value")?;
        for (p, v) in grid.nodes().iter().zip(&self.values) {
            writeln!(out, "{},{},{}", p[0], p[1], v)?;
        }
        Ok(())
    }
}

/// `max(0.02 D², 10h²)`.
pub fn t_min(grid: &GridDomain) -> f64 {
    (0.02 * grid.diameter * grid.diameter).max(10.0 * grid.h * grid.h)
}

fn check_times(times: &[f64]) -> Result<(), HeatError> {
    if times.is_empty() || times[0] <= 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(HeatError::InvalidTimes);
    }
    Ok(())
}

/// `H(z,x,t) = Σ_k e^{-λ_k t} φ_k(z) φ_k(x)` from (possibly truncated)
/// eigenpairs. Truncation is accepted only if `e^{-λ_last t_min} ≤ 1e-12`.
pub fn kernel_spectral(
    spectral: &SpectralResult,
    source: usize,
    times: &[f64],
    execution: Execution,
) -> Result<Vec<HeatState>, HeatError> {
    check_times(times)?;
    let n = spectral.eigenfunctions.first().map_or(0, |f| f.len());
    if source >= n {
        return Err(HeatError::SourceOutOfRange(source));
    }
    if spectral.len() < n {
        let bound = (-spectral.eigenvalues.last().unwrap() * times[0]).exp();
        if bound > TAIL_TOL {
            return Err(HeatError::TailTooFat { t: times[0], bound });
        }
    }
    Ok(par::map(execution, times, |&t| {
        let mut values = vec![0.0; n];
        for (lam, phi) in spectral.eigenvalues.iter().zip(&spectral.eigenfunctions) {
            let c = (-lam * t).exp() * phi[source];
            if c == 0.0 {
                continue;
            }
            values.iter_mut().zip(phi).for_each(|(v, p)| *v += c * p);
        }
        HeatState {
            source,
            t,
            values,
            method: HeatMethod::Spectral {
                modes: spectral.len(),
            },
            cell_volume: spectral.cell_volume,
        }
    }))
}

/// Crank–Nicolson evolution of the discrete delta `h⁻ⁿ e_z`. Each interval
/// between snapshots is split into equal steps no longer than `dt`.
pub fn kernel_cn(
    op: &OperatorMatrix,
    source: usize,
    times: &[f64],
    dt: f64,
) -> Result<Vec<HeatState>, HeatError> {
    if op.boundary != BoundaryCondition::Dirichlet {
        return Err(HeatError::NotDirichlet);
    }
    check_times(times)?;
    if !(dt > 0.0) {
        return Err(HeatError::InvalidTimes);
    }
    let n = op.dim();
    if source >= n {
        return Err(HeatError::SourceOutOfRange(source));
    }
    let mut u = vec![0.0; n];
    u[source] = 1.0 / op.cell_volume;
    let mut now = 0.0;
    let mut cache: Option<(f64, BandCholesky)> = None;
    let mut out = Vec::with_capacity(times.len());
    let mut rhs = vec![0.0; n];
    for &t in times {
        let steps = ((t - now) / dt).ceil().max(1.0) as usize;
        let step = (t - now) / steps as f64;
        let stale = cache
            .as_ref()
            .is_none_or(|(s, _)| (s - step).abs() > 1e-14 * step);
        if stale {
            cache = Some((
                step,
                BandCholesky::factor(&op.matrix.identity_plus(0.5 * step))?,
            ));
        }
        let chol = &cache.as_ref().unwrap().1;
        for _ in 0..steps {
            op.matrix.mul_vec_into(&u, &mut rhs);
            for (r, ui) in rhs.iter_mut().zip(&u) {
                *r = ui - 0.5 * step * *r;
            }
            chol.solve_in_place(&mut rhs);
            std::mem::swap(&mut u, &mut rhs);
        }
        now = t;
        out.push(HeatState {
            source,
            t,
            values: u.clone(),
            method: HeatMethod::CrankNicolson { dt: step },
            cell_volume: op.cell_volume,
        });
    }
    Ok(out)
}

fn check_time(state: &HeatState, grid: &GridDomain) -> Result<(), HeatError> {
    let tm = t_min(grid);
    if state.t < tm * (1.0 - 1e-12) {
        return Err(HeatError::BelowMinimumTime {
            t: state.t,
            t_min: tm,
        });
    }
    Ok(())
}

/// `∇H/H` at every pair endpoint. The quotient of central differences is
/// exact on the linear profile next to a wall, where differencing `log H`
/// carries an `O(1/h)` error.
fn log_gradients(
    state: &HeatState,
    grid: &GridDomain,
    pairs: &[(usize, usize)],
) -> Result<Vec<Option<[f64; 2]>>, HeatError> {
    let mut g = vec![None; grid.len()];
    for &(i, j) in pairs {
        for k in [i, j] {
            if g[k].is_none() {
                let d = gradient_at(&state.values, grid, k)
                    .map_err(|_| ModulusError::PairOutsideField { node: k })?;
                g[k] = Some([d[0] / state.values[k], d[1] / state.values[k]]);
            }
        }
    }
    Ok(g)
}

fn projected_difference(g: &[Option<[f64; 2]>], i: usize, j: usize, u: [f64; 2]) -> f64 {
    let (gx, gy) = (g[i].unwrap(), g[j].unwrap());
    (gy[0] - gx[0]) * u[0] + (gy[1] - gx[1]) * u[1]
}

/// Per pair, `2 ∂_s log H̄(|y-x|/2, t) - (∇log H(y) - ∇log H(x))·(y-x)/|y-x|`.
/// Pairs must come from the admissible nodes of `state.values`.
pub fn kernel_slack(
    state: &HeatState,
    grid: &GridDomain,
    model: &Model1D,
    pairs: &[(usize, usize)],
    opts: &SlackOptions,
) -> Result<(SlackReport, Vec<f64>), HeatError> {
    check_time(state, grid)?;
    let g = log_gradients(state, grid, pairs)?;
    let tol = opts
        .tolerance
        .unwrap_or_else(|| default_tolerance(grid.h, model.d));
    let t = state.t;
    let slope = |r: f64| model.log_hbar_slope(0.5 * r, t);
    slope(0.0)?;
    let out = pair_report(
        "parabolic-log-concavity",
        grid,
        pairs,
        model.d,
        tol,
        opts.execution,
        |i, j, r, u| 2.0 * slope(r).unwrap_or(f64::NAN) - projected_difference(&g, i, j, u),
    )?;
    Ok(out)
}

/// The same slack written through `φ = H/K`, `K` the free kernel centred at
/// the source: `-(∇log φ(y) - ∇log φ(x))·u + 2ψ(|y-x|/2, t)`. The free kernel
/// contributes `∇log K(x) = -(x-z)/2t` exactly.
pub fn kernel_slack_ratio_form(
    state: &HeatState,
    grid: &GridDomain,
    model: &Model1D,
    pairs: &[(usize, usize)],
    opts: &SlackOptions,
) -> Result<(SlackReport, Vec<f64>), HeatError> {
    check_time(state, grid)?;
    let t = state.t;
    let z = grid.node(state.source);
    let mut g = log_gradients(state, grid, pairs)?;
    for (k, v) in g.iter_mut().enumerate() {
        if let Some(v) = v {
            let p = grid.node(k);
            v[0] += (p[0] - z[0]) / (2.0 * t);
            v[1] += (p[1] - z[1]) / (2.0 * t);
        }
    }
    model.psi_parabolic(0.0, t)?;
    let tol = opts
        .tolerance
        .unwrap_or_else(|| default_tolerance(grid.h, model.d));
    let out = pair_report(
        "parabolic-ratio-form",
        grid,
        pairs,
        model.d,
        tol,
        opts.execution,
        |i, j, r, u| {
            2.0 * model.psi_parabolic(0.5 * r, t).unwrap_or(f64::NAN)
                - projected_difference(&g, i, j, u)
        },
    )?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayStep {
    pub t0: f64,
    pub t1: f64,
    /// `log m(t1) - log m(t0)`.
    pub observed: f64,
    /// `n[log H̄(0,t1) - log H̄(0,t0)] - inf q·(t1 - t0)`.
    pub bound: f64,
    pub tolerance: f64,
}

impl DecayStep {
    pub fn violation(&self) -> f64 {
        self.observed - self.bound
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub steps: Vec<DecayStep>,
    /// Largest `observed - bound` over the steps (negative when every step
    /// has room).
    pub max_violation: f64,
    pub verdict: Verdict,
}

/// Compares the decay of `m(t) = max_x H(z,x,t)` between consecutive
/// snapshots with the model kernel at the centre. The per-step tolerance
/// defaults to `10h(π/D)²·Δt`.
pub fn decay_check(
    states: &[HeatState],
    grid: &GridDomain,
    model: &Model1D,
    inf_q: f64,
    tolerance_rate: Option<f64>,
) -> Result<DecayReport, HeatError> {
    if states.len() < 3 {
        return Err(HeatError::TooFewSnapshots(states.len()));
    }
    check_times(&states.iter().map(|s| s.t).collect::<Vec<_>>())?;
    let n = grid.dimension as f64;
    let rate = tolerance_rate.unwrap_or_else(|| default_tolerance(grid.h, model.d));
    let mut steps = Vec::with_capacity(states.len() - 1);
    for w in states.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let model_drop = model
            .hbar(0.0, b.t, crate::model1d::KernelMethod::Auto)?
            .ln()
            - model
                .hbar(0.0, a.t, crate::model1d::KernelMethod::Auto)?
                .ln();
        steps.push(DecayStep {
            t0: a.t,
            t1: b.t,
            observed: b.max().ln() - a.max().ln(),
            bound: n * model_drop - inf_q * (b.t - a.t),
            tolerance: rate * (b.t - a.t),
        });
    }
    let max_violation = steps
        .iter()
        .map(DecayStep::violation)
        .fold(f64::NEG_INFINITY, f64::max);
    let ok = steps.iter().all(|s| s.violation() <= s.tolerance);
    Ok(DecayReport {
        steps,
        max_violation,
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
    })
}
