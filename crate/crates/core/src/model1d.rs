//! Closed-form one-dimensional model on `[-D/2, D/2]`: the Dirichlet
//! eigendata, the tangent barrier, and the free and Dirichlet heat kernels
//! together with the log-derivative of their ratio.
//!
//! Everything here is analytic (no finite differences); it is the oracle the
//! grid solvers are measured against.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("model length must be positive and finite, got {0}")]
    InvalidLength(f64),
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("s = {s} lies outside the open interval (-{half}, {half})")]
    OutsideInterval { s: f64, half: f64 },
    #[error("{method:?} truncation tail bound {bound:e} exceeds 1e-12")]
    TruncationUnderflow { method: KernelMethod, bound: f64 },
}

/// How the Dirichlet kernel is summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelMethod {
    /// Sine series over the Dirichlet eigenfunctions.
    Series,
    /// Alternating sum of free kernels reflected at `mD`.
    Images,
    /// Images for `t < 0.05 D²`, series otherwise.
    Auto,
}

/// Tail bound above which a truncated sum is rejected.
pub const TRUNCATION_TOL: f64 = 1e-12;

/// `(ψ, ∂_sψ, ∂_s²ψ, ∂_tψ)` for `ψ(s,t) = ∂_s log(H̄/K̄)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiJet {
    pub psi: f64,
    pub psi_s: f64,
    pub psi_ss: f64,
    pub psi_t: f64,
}

/// The interval model of length `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Model1D {
    pub d: f64,
    /// Highest series mode.
    pub k_max: usize,
    /// Reflections on each side in the image sum.
    pub m_max: usize,
}

/// Standard heat kernel `(4πt)^{-1/2} exp(-s²/4t)`.
pub fn kbar(s: f64, t: f64) -> f64 {
    (-s * s / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
}

impl Model1D {
    pub fn new(d: f64) -> Result<Self, ModelError> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(ModelError::InvalidLength(d));
        }
        Ok(Model1D {
            d,
            k_max: 200,
            m_max: 20,
        })
    }

    pub fn with_truncation(self, k_max: usize, m_max: usize) -> Self {
        Model1D {
            k_max,
            m_max,
            ..self
        }
    }

    /// `π/D`.
    pub fn wavenumber(&self) -> f64 {
        PI / self.d
    }

    /// `π²/D²`.
    pub fn mu0(&self) -> f64 {
        self.wavenumber().powi(2)
    }

    /// `4π²/D²`.
    pub fn mu1(&self) -> f64 {
        4.0 * self.mu0()
    }

    pub fn phi0(&self, s: f64) -> f64 {
        (self.wavenumber() * s).cos()
    }

    pub fn phi1(&self, s: f64) -> f64 {
        (2.0 * self.wavenumber() * s).sin()
    }

    /// Ratio of the model eigenfunctions, `2 sin(πs/D)`.
    pub fn wbar(&self, s: f64) -> f64 {
        2.0 * (self.wavenumber() * s).sin()
    }

    /// Tangent barrier `ψ(s) = -(π/D) tan(πs/D)`, the log-derivative of the
    /// model ground state.
    pub fn psi(&self, s: f64) -> f64 {
        -self.wavenumber() * (self.wavenumber() * s).tan()
    }

    /// `(ψ, ψ', ψ'')` of the tangent barrier.
    pub fn psi_derivatives(&self, s: f64) -> [f64; 3] {
        let k = self.wavenumber();
        let tn = (k * s).tan();
        let sec2 = 1.0 + tn * tn;
        [-k * tn, -k * k * sec2, -2.0 * k * k * k * sec2 * tn]
    }

    /// Expansion bound `2(π/D) tan(πr/2D) = -2ψ(r/2)` for a pair at
    /// separation `r`.
    pub fn expansion_bound(&self, r: f64) -> f64 {
        -2.0 * self.psi(0.5 * r)
    }

    /// Largest `|ψ'' + 2ψψ'|` over the samples for the rescaled barrier
    /// `cψ(cs)` (`scale = c`; `c = 1` is the barrier itself).
    pub fn check_psi_ode(&self, samples: &[f64], scale: f64) -> f64 {
        samples
            .iter()
            .map(|&s| {
                let [p, dp, ddp] = self.psi_derivatives(scale * s);
                let (p, dp, ddp) = (scale * p, scale * scale * dp, scale.powi(3) * ddp);
                (ddp + 2.0 * p * dp).abs()
            })
            .fold(0.0, f64::max)
    }

    fn check_args(&self, s: f64, t: f64) -> Result<(), ModelError> {
        if !(t > 0.0) {
            return Err(ModelError::NonPositiveTime(t));
        }
        let half = 0.5 * self.d;
        if !(s.abs() < half) {
            return Err(ModelError::OutsideInterval { s, half });
        }
        Ok(())
    }

    fn resolve(&self, method: KernelMethod, t: f64) -> KernelMethod {
        match method {
            KernelMethod::Auto if t < 0.05 * self.d * self.d => KernelMethod::Images,
            KernelMethod::Auto => KernelMethod::Series,
            m => m,
        }
    }

    /// Dirichlet heat kernel on `[-D/2, D/2]` with source at the centre.
    pub fn hbar(&self, s: f64, t: f64, method: KernelMethod) -> Result<f64, ModelError> {
        self.check_args(s, t)?;
        match self.resolve(method, t) {
            KernelMethod::Series => Ok(self.series_sums(s, t)?[0]),
            _ => Ok(kbar(s, t) * self.image_sums(s, t)?.0[0]),
        }
    }

    /// `∂_s log H̄(s, t)`.
    pub fn log_hbar_slope(&self, s: f64, t: f64) -> Result<f64, ModelError> {
        Ok(self.psi_jet(s, t, KernelMethod::Auto)?.psi - s / (2.0 * t))
    }

    /// `ψ(s,t) = ∂_s log(H̄/K̄)`.
    pub fn psi_parabolic(&self, s: f64, t: f64) -> Result<f64, ModelError> {
        Ok(self.psi_jet(s, t, KernelMethod::Auto)?.psi)
    }

    pub fn psi_jet(&self, s: f64, t: f64, method: KernelMethod) -> Result<PsiJet, ModelError> {
        self.check_args(s, t)?;
        match self.resolve(method, t) {
            KernelMethod::Series => {
                let [h0, h1, h2, h3] = self.series_sums(s, t)?;
                // Log-derivatives of H̄; ∂_t log H̄ = H̄''/H̄ since H̄_t = H̄''.
                let l1 = h1 / h0;
                let r2 = h2 / h0;
                let l2 = r2 - l1 * l1;
                let l3 = h3 / h0 - 3.0 * l1 * r2 + 2.0 * l1 * l1 * l1;
                Ok(PsiJet {
                    psi: l1 + s / (2.0 * t),
                    psi_s: l2 + 1.0 / (2.0 * t),
                    psi_ss: l3,
                    psi_t: l3 + 2.0 * l1 * l2 - s / (2.0 * t * t),
                })
            }
            _ => {
                let ([r0, r1, r2, r3], [q0, q1]) = self.image_sums(s, t)?;
                let a1 = r1 / r0;
                let a2 = r2 / r0 - a1 * a1;
                let a3 = r3 / r0 - 3.0 * a1 * r2 / r0 + 2.0 * a1 * a1 * a1;
                Ok(PsiJet {
                    psi: a1,
                    psi_s: a2,
                    psi_ss: a3,
                    psi_t: (q1 * r0 - q0 * r1) / (r0 * r0),
                })
            }
        }
    }

    /// `ψ_t - ψ'' - 2ψψ' + ψ/t + ψ's/t` at one point.
    pub fn parabolic_residual(&self, s: f64, t: f64) -> Result<f64, ModelError> {
        let j = self.psi_jet(s, t, KernelMethod::Auto)?;
        Ok(j.psi_t - j.psi_ss - 2.0 * j.psi * j.psi_s + j.psi / t + j.psi_s * s / t)
    }

    /// Signed parabolic residual over a tensor grid, as `(min, max)`.
    pub fn check_psi_pde(&self, s_grid: &[f64], t_grid: &[f64]) -> Result<(f64, f64), ModelError> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &t in t_grid {
            for &s in s_grid {
                let r = self.parabolic_residual(s, t)?;
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        Ok((lo, hi))
    }

    /// `[H̄, H̄', H̄'', H̄''']` from the sine series. Only odd modes are
    /// nonzero at the centre, where the series reduces to
    /// `(2/D) Σ e^{-κ²t} cos(κs)`.
    fn series_sums(&self, s: f64, t: f64) -> Result<[f64; 4], ModelError> {
        let k0 = self.wavenumber();
        let next = (self.k_max + 1) as f64 * k0;
        let ratio = (-(k0 * k0) * (2 * self.k_max + 3) as f64 * t).exp();
        let bound =
            2.0 / self.d * (-(next * next) * t).exp() * (1.0 + next.powi(3)) / (1.0 - ratio);
        if bound > TRUNCATION_TOL {
            return Err(ModelError::TruncationUnderflow {
                method: KernelMethod::Series,
                bound,
            });
        }
        let mut out = [0.0; 4];
        for k in (1..=self.k_max).step_by(2) {
            let kappa = k as f64 * k0;
            let w = 2.0 / self.d * (-kappa * kappa * t).exp();
            if w == 0.0 {
                break;
            }
            let (sn, cs) = (kappa * s).sin_cos();
            out[0] += w * cs;
            out[1] -= w * kappa * sn;
            out[2] -= w * kappa * kappa * cs;
            out[3] += w * kappa * kappa * kappa * sn;
        }
        Ok(out)
    }

    /// Image sums in ratio form. With `e_m = (-1)^m exp(-(m²D² - 2smD)/4t)`
    /// and `x_m = mD/2t`, returns `[Σe_m x_m^j]_{j=0..3}` (the `s`-derivatives
    /// of `R = H̄/K̄`) and `[∂_tR, ∂_s∂_tR]`.
    fn image_sums(&self, s: f64, t: f64) -> Result<([f64; 4], [f64; 2]), ModelError> {
        let d = self.d;
        let mm = (self.m_max + 1) as f64;
        let bound =
            (-(d * d) * mm * (mm - 1.0) / (4.0 * t)).exp() * (1.0 + (mm * d / (2.0 * t)).powi(3));
        if bound > TRUNCATION_TOL {
            return Err(ModelError::TruncationUnderflow {
                method: KernelMethod::Images,
                bound,
            });
        }
        let mut r = [0.0; 4];
        let mut q = [0.0; 2];
        let term = |m: i64| {
            let mf = m as f64;
            let c = mf * mf * d * d - 2.0 * s * mf * d;
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let e = sign * (-c / (4.0 * t)).exp();
            let x = mf * d / (2.0 * t);
            let ct = c / (4.0 * t * t);
            [
                e,
                e * x,
                e * x * x,
                e * x * x * x,
                e * ct,
                e * (x * ct - 2.0 * mf * d / (4.0 * t * t)),
            ]
        };
        let mut acc = term(0);
        // Mirror images are added in pairs, so odd sums vanish exactly at s = 0.
        for m in 1..=self.m_max as i64 {
            let (a, b) = (term(m), term(-m));
            for j in 0..6 {
                acc[j] += a[j] + b[j];
            }
        }
        r.copy_from_slice(&acc[..4]);
        q.copy_from_slice(&acc[4..]);
        Ok((r, q))
    }
}
