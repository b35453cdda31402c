//! Discrete Schrödinger and drift-Laplacian operators, plus central-difference
//! gradients and Hessians of grid fields.
//!
//! Sign convention: the assembled matrices approximate `-Δ + q`, so the
//! ground state energy is the *smallest* eigenvalue and `Δφ - qφ = -λφ`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Centering, DomainSpec, GridDomain};
use crate::linalg::CsrMatrix;
use crate::Point;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("drift field is not finite at node {node}")]
    SingularDrift { node: usize },
    #[error("stencil of node {node} leaves the interior")]
    StencilEscape { node: usize },
    #[error("potential matrix is not symmetric")]
    AsymmetricPotential,
    #[error("potential is not convex (smallest Hessian eigenvalue {min_eig:e})")]
    NonConvexPotential { min_eig: f64 },
    #[error("{operator} needs a {expected:?}-centred grid")]
    WrongCentering {
        operator: &'static str,
        expected: Centering,
    },
    #[error("field has {got} values, grid has {expected} nodes")]
    LengthMismatch { got: usize, expected: usize },
}

/// `q(x) = xᵀAx + b·x + c`. In one dimension only `a[0][0]` and `b[0]`
/// matter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Potential {
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
    pub c: f64,
}

impl Default for Potential {
    fn default() -> Self {
        Potential::zero()
    }
}

impl Potential {
    pub fn zero() -> Self {
        Potential {
            a: [[0.0; 2]; 2],
            b: [0.0; 2],
            c: 0.0,
        }
    }

    pub fn constant(c: f64) -> Self {
        Potential {
            c,
            ..Potential::zero()
        }
    }

    /// `k·|x - center|²`.
    pub fn radial(k: f64, center: Point) -> Self {
        Potential {
            a: [[k, 0.0], [0.0, k]],
            b: [-2.0 * k * center[0], -2.0 * k * center[1]],
            c: k * (center[0] * center[0] + center[1] * center[1]),
        }
    }

    pub fn eval(&self, x: Point) -> f64 {
        let a = &self.a;
        x[0] * (a[0][0] * x[0] + a[0][1] * x[1])
            + x[1] * (a[1][0] * x[0] + a[1][1] * x[1])
            + self.b[0] * x[0]
            + self.b[1] * x[1]
            + self.c
    }

    /// Eigenvalues of the quadratic part restricted to `dim` dimensions.
    pub fn hessian_eigenvalues(&self, dim: usize) -> Vec<f64> {
        let a = &self.a;
        if dim == 1 {
            return vec![a[0][0]];
        }
        let m = 0.5 * (a[0][0] + a[1][1]);
        let d = (0.25 * (a[0][0] - a[1][1]).powi(2) + a[0][1] * a[0][1]).sqrt();
        vec![m - d, m + d]
    }

    /// Checks symmetry and `A ⪰ 0` (eigenvalues ≥ -1e-12).
    pub fn certify_convex(&self, dim: usize) -> Result<(), OperatorError> {
        if dim == 2 && (self.a[0][1] - self.a[1][0]).abs() > 1e-12 * (1.0 + self.a[0][1].abs()) {
            return Err(OperatorError::AsymmetricPotential);
        }
        let min_eig = self
            .hessian_eigenvalues(dim)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-12 {
            return Err(OperatorError::NonConvexPotential { min_eig });
        }
        Ok(())
    }

    pub fn is_convex(&self, dim: usize) -> bool {
        self.certify_convex(dim).is_ok()
    }

    /// `inf_Ω q` for a certified-convex potential: the stationary point when
    /// it lies in the closed domain, otherwise a boundary minimization
    /// (exact on straight edges, sampled at spacing `h/4` and refined on
    /// curved ones).
    pub fn infimum(&self, spec: &DomainSpec, h: f64) -> Result<f64, OperatorError> {
        let dim = spec.dimension();
        self.certify_convex(dim)?;
        if let Some(x) = self.stationary_point(dim) {
            if spec.contains_strict(x, 0.0) {
                return Ok(self.eval(x));
            }
        }
        if let Some(segs) = spec.boundary_segments() {
            return Ok(segs
                .iter()
                .map(|(p, q)| self.segment_min(*p, *q))
                .fold(f64::INFINITY, f64::min));
        }
        let (center, axes) = match spec {
            DomainSpec::Disk { center, radius } => (*center, [*radius, *radius]),
            DomainSpec::Ellipse { center, semi_axes } => (*center, *semi_axes),
            _ => unreachable!("polygonal domains handled above"),
        };
        let at = |th: f64| {
            self.eval([
                center[0] + axes[0] * th.cos(),
                center[1] + axes[1] * th.sin(),
            ])
        };
        let perim = 2.0 * std::f64::consts::PI * axes[0].max(axes[1]);
        let m = ((4.0 * perim / h).ceil() as usize).max(4096);
        let step = 2.0 * std::f64::consts::PI / m as f64;
        let (mut best, mut th_best) = (f64::INFINITY, 0.0);
        for k in 0..m {
            let th = k as f64 * step;
            let v = at(th);
            if v < best {
                best = v;
                th_best = th;
            }
        }
        // Golden-section refinement inside the bracketing samples.
        let (mut lo, mut hi) = (th_best - step, th_best + step);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let a = hi - g * (hi - lo);
            let b = lo + g * (hi - lo);
            if at(a) < at(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        Ok(best.min(at(0.5 * (lo + hi))))
    }

    fn stationary_point(&self, dim: usize) -> Option<Point> {
        let a = &self.a;
        if dim == 1 {
            return (a[0][0] > 0.0).then(|| [-self.b[0] / (2.0 * a[0][0]), 0.0]);
        }
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if a[0][0] <= 0.0 || det <= 0.0 {
            return None;
        }
        // ∇q = 2Ax + b = 0
        let (r0, r1) = (-0.5 * self.b[0], -0.5 * self.b[1]);
        Some([
            (a[1][1] * r0 - a[0][1] * r1) / det,
            (a[0][0] * r1 - a[1][0] * r0) / det,
        ])
    }

    fn segment_min(&self, p: Point, q: Point) -> f64 {
        // q(p + s(q-p)) = α s² + β s + γ on [0, 1].
        let gamma = self.eval(p);
        let end = self.eval(q);
        let mid = self.eval([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
        let alpha = 2.0 * (end + gamma - 2.0 * mid);
        let beta = end - gamma - alpha;
        let mut best = gamma.min(end);
        if alpha > 0.0 {
            let s = -beta / (2.0 * alpha);
            if (0.0..=1.0).contains(&s) {
                best = best.min(alpha * s * s + beta * s + gamma);
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

/// Assembled sparse operator over the interior nodes of a grid.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub matrix: CsrMatrix,
    pub boundary: BoundaryCondition,
    pub symmetric: bool,
    /// `hⁿ`, the discrete L² weight of one node.
    pub cell_volume: f64,
    /// Domain diameter, the natural length scale of the spectrum.
    pub length_scale: f64,
    /// For a drift operator solved in symmetrized form, eigenvectors `v` of
    /// `matrix` map back to eigenfunctions `w_i = conjugation_i · v_i`.
    pub conjugation: Option<Vec<f64>>,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn norm_inf(&self) -> f64 {
        self.matrix.norm_inf()
    }
}

/// `-Δ_h + q` with homogeneous Dirichlet data.
///
/// Interior rows use the standard 3/5-point stencil. Where a grid-line
/// neighbour falls outside the domain the boundary is located exactly along
/// that line at distance `θh`, and the ghost value obtained by linear
/// extrapolation through the boundary zero contributes `1/(θh²)` to the
/// diagonal. Off-diagonals are untouched, so the matrix stays exactly
/// symmetric; for rectangles and intervals aligned with the lattice `θ = 1`
/// and the stencil is the textbook one.
pub fn assemble_dirichlet(
    grid: &GridDomain,
    q: &Potential,
) -> Result<OperatorMatrix, OperatorError> {
    if grid.centering != Centering::Node {
        return Err(OperatorError::WrongCentering {
            operator: "Dirichlet Laplacian",
            expected: Centering::Node,
        });
    }
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let rows = (0..grid.len())
        .map(|i| {
            let mut diag = q.eval(grid.node(i));
            let mut row = Vec::with_capacity(2 * grid.dimension + 1);
            for axis in 0..grid.dimension {
                for dir in [-1isize, 1] {
                    match grid.neighbor(i, axis, dir) {
                        Some(j) => {
                            row.push((j, -inv_h2));
                            diag += inv_h2;
                        }
                        None => diag += inv_h2 / grid.boundary_fraction(i, axis, dir),
                    }
                }
            }
            row.push((i, diag));
            row
        })
        .collect();
    Ok(OperatorMatrix {
        matrix: CsrMatrix::from_rows(rows),
        boundary: BoundaryCondition::Dirichlet,
        symmetric: true,
        cell_volume: grid.cell_volume(),
        length_scale: grid.diameter,
        conjugation: None,
    })
}

/// Drift field `X` of the operator `-Δ + 2X·∇`.
#[derive(Debug, Clone, PartialEq)]
pub enum Drift {
    Zero,
    /// `X = ∇f` with `f` sampled at every grid node. Solved in symmetric
    /// form after conjugation by `e^{-f}`.
    Gradient(Vec<f64>),
    /// A general field, one vector per grid node; the operator is
    /// nonsymmetric.
    Field(Vec<Point>),
}

impl Drift {
    /// The interval model drift `X(s) = (π/D)·tan(π(s - c)/D)`, i.e.
    /// `X = ∇f` with `f = -log cos(π(s - c)/D)` for the interval of length
    /// `D` centred at `c`.
    pub fn interval_model(grid: &GridDomain) -> Drift {
        let (lo, hi) = grid.spec.bounding_box();
        let d = hi[0] - lo[0];
        let c = 0.5 * (lo[0] + hi[0]);
        let k = std::f64::consts::PI / d;
        Drift::Gradient(
            grid.nodes()
                .iter()
                .map(|p| -(k * (p[0] - c)).cos().ln())
                .collect(),
        )
    }

    /// Gradient-field drift `X = -∇log ρ` for a positive density `ρ` sampled
    /// at the grid nodes.
    pub fn from_density(rho: &[f64]) -> Drift {
        Drift::Gradient(rho.iter().map(|r| -r.ln()).collect())
    }
}

/// `-Δ_h + 2X·∇_h` on a cell-centred grid with homogeneous Neumann
/// conditions imposed by mirror ghost cells.
///
/// Its eigenvalues `λ̃` satisfy `Δw - 2⟨∇w, X⟩ = -λ̃w`. Gradient drifts use
/// the flux form `-(1/ρ)∇·(ρ∇w)`, `ρ = e^{-2f}`, with face weights
/// `√(ρ_i ρ_j)`; after conjugation the matrix is symmetric with
/// off-diagonals `-1/h²` and diagonal `Σ_j e^{f_i - f_j}/h²`. General fields
/// use central differences for `X·∇`.
pub fn assemble_neumann_drift(
    grid: &GridDomain,
    drift: &Drift,
) -> Result<OperatorMatrix, OperatorError> {
    if grid.centering != Centering::Cell {
        return Err(OperatorError::WrongCentering {
            operator: "Neumann drift Laplacian",
            expected: Centering::Cell,
        });
    }
    let n = grid.len();
    let check_len = |got: usize| {
        if got != n {
            Err(OperatorError::LengthMismatch { got, expected: n })
        } else {
            Ok(())
        }
    };
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let neighbors = |i: usize| {
        (0..grid.dimension).flat_map(move |axis| {
            [-1isize, 1]
                .into_iter()
                .map(move |dir| (axis, dir, grid.neighbor(i, axis, dir)))
        })
    };
    let (rows, symmetric, conjugation): (Vec<Vec<(usize, f64)>>, bool, Option<Vec<f64>>) =
        match drift {
            Drift::Zero => {
                let rows = (0..n)
                    .map(|i| {
                        let mut row = vec![(i, 0.0)];
                        for (_, _, nb) in neighbors(i) {
                            if let Some(j) = nb {
                                row.push((j, -inv_h2));
                                row.push((i, inv_h2));
                            }
                        }
                        row
                    })
                    .collect();
                (rows, true, None)
            }
            Drift::Gradient(f) => {
                check_len(f.len())?;
                if let Some(node) = f.iter().position(|v| !v.is_finite()) {
                    return Err(OperatorError::SingularDrift { node });
                }
                let rows = (0..n)
                    .map(|i| {
                        let mut row = vec![(i, 0.0)];
                        for (_, _, nb) in neighbors(i) {
                            if let Some(j) = nb {
                                row.push((j, -inv_h2));
                                row.push((i, (f[i] - f[j]).exp() * inv_h2));
                            }
                        }
                        row
                    })
                    .collect();
                (rows, true, Some(f.iter().map(|v| v.exp()).collect()))
            }
            Drift::Field(x) => {
                check_len(x.len())?;
                if let Some(node) = x
                    .iter()
                    .position(|v| !(v[0].is_finite() && v[1].is_finite()))
                {
                    return Err(OperatorError::SingularDrift { node });
                }
                let rows = (0..n)
                    .map(|i| {
                        let mut row = vec![(i, 0.0)];
                        for (axis, dir, nb) in neighbors(i) {
                            // -(w_j - 2w_i + ...)/h² + 2X·(w_{+} - w_{-})/(2h)
                            let coeff = -inv_h2 + dir as f64 * x[i][axis] / grid.h;
                            row.push((i, inv_h2));
                            match nb {
                                Some(j) => row.push((j, coeff)),
                                None => row.push((i, coeff)),
                            }
                        }
                        row
                    })
                    .collect();
                (rows, false, None)
            }
        };
    Ok(OperatorMatrix {
        matrix: CsrMatrix::from_rows(rows),
        boundary: BoundaryCondition::Neumann,
        symmetric,
        cell_volume: grid.cell_volume(),
        length_scale: grid.diameter,
        conjugation,
    })
}

/// Values of a vector field at a subset of grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldSample {
    pub nodes: Vec<usize>,
    pub values: Vec<Point>,
    /// Where the field came from (field name, threshold, grid spacing).
    pub provenance: String,
    lookup: Vec<usize>,
}

impl VectorFieldSample {
    pub fn new(grid_len: usize, nodes: Vec<usize>, values: Vec<Point>, provenance: String) -> Self {
        assert_eq!(nodes.len(), values.len());
        let mut lookup = vec![usize::MAX; grid_len];
        for (k, &i) in nodes.iter().enumerate() {
            lookup[i] = k;
        }
        VectorFieldSample {
            nodes,
            values,
            provenance,
            lookup,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Value at grid node `i`, if sampled there.
    pub fn get(&self, i: usize) -> Option<Point> {
        match self.lookup.get(i) {
            Some(&k) if k != usize::MAX => Some(self.values[k]),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v[0].is_finite() && v[1].is_finite())
    }
}

/// Central-difference gradient at one node.
pub fn gradient_at(field: &[f64], grid: &GridDomain, i: usize) -> Result<Point, OperatorError> {
    let mut g = [0.0; 2];
    for (axis, gk) in g.iter_mut().enumerate().take(grid.dimension) {
        match (grid.neighbor(i, axis, 1), grid.neighbor(i, axis, -1)) {
            (Some(p), Some(m)) => *gk = (field[p] - field[m]) / (2.0 * grid.h),
            _ => return Err(OperatorError::StencilEscape { node: i }),
        }
    }
    Ok(g)
}

/// Second-order central-difference gradient at every node whose stencil is
/// interior; other nodes are skipped.
pub fn gradient(field: &[f64], grid: &GridDomain) -> VectorFieldSample {
    let nodes: Vec<usize> = (0..grid.len()).filter(|&i| grid.has_stencil(i)).collect();
    let values = nodes
        .iter()
        .map(|&i| gradient_at(field, grid, i).unwrap())
        .collect();
    VectorFieldSample::new(grid.len(), nodes, values, format!("gradient h={}", grid.h))
}

/// Symmetric 2×2 matrix (the lower-right entry is unused in 1-D).
pub type Sym2 = [[f64; 2]; 2];

/// Central-difference Hessian at one node (mixed derivative from the four
/// diagonal neighbours).
pub fn hessian_at(field: &[f64], grid: &GridDomain, i: usize) -> Result<Sym2, OperatorError> {
    if !grid.has_full_stencil(i) {
        return Err(OperatorError::StencilEscape { node: i });
    }
    let h2 = grid.h * grid.h;
    let f = |di: isize, dj: isize| field[grid.offset(i, di, dj).unwrap()];
    let fxx = (f(1, 0) - 2.0 * field[i] + f(-1, 0)) / h2;
    if grid.dimension == 1 {
        return Ok([[fxx, 0.0], [0.0, 0.0]]);
    }
    let fyy = (f(0, 1) - 2.0 * field[i] + f(0, -1)) / h2;
    let fxy = (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / (4.0 * h2);
    Ok([[fxx, fxy], [fxy, fyy]])
}

/// Hessian at every node with a full 3ⁿ stencil, returned with the node
/// indices.
pub fn hessian(field: &[f64], grid: &GridDomain) -> (Vec<usize>, Vec<Sym2>) {
    let nodes: Vec<usize> = (0..grid.len())
        .filter(|&i| grid.has_full_stencil(i))
        .collect();
    let values = nodes
        .iter()
        .map(|&i| hessian_at(field, grid, i).unwrap())
        .collect();
    (nodes, values)
}

/// Smallest eigenvalue of a symmetric matrix in `dim` dimensions.
pub fn min_eigenvalue(m: &Sym2, dim: usize) -> f64 {
    if dim == 1 {
        return m[0][0];
    }
    let mean = 0.5 * (m[0][0] + m[1][1]);
    let r = (0.25 * (m[0][0] - m[1][1]).powi(2) + m[0][1] * m[0][1]).sqrt();
    mean - r
}
