//! Convex domains and their uniform-grid rasterizations.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{dist, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("no lattice node lies strictly inside the domain")]
    EmptyInterior,
    #[error("polygon vertices are not strictly convex (turn {index} has cross product {cross:e})")]
    NonConvex { index: usize, cross: f64 },
    #[error("invalid domain: {0}")]
    InvalidSpec(String),
    #[error("grid spacing {h} leaves fewer than 3 interior nodes along axis {axis}")]
    TooCoarse { h: f64, axis: usize },
    #[error("no node passes the admissibility threshold")]
    NoAdmissibleNodes,
}

/// A bounded convex domain in one or two dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainSpec {
    Interval {
        a: f64,
        b: f64,
    },
    Rectangle {
        min: Point,
        max: Point,
    },
    Disk {
        center: Point,
        radius: f64,
    },
    /// Axis-aligned ellipse.
    Ellipse {
        center: Point,
        semi_axes: [f64; 2],
    },
    ConvexPolygon {
        vertices: Vec<Point>,
    },
}

impl DomainSpec {
    pub fn interval(a: f64, b: f64) -> Self {
        DomainSpec::Interval { a, b }
    }

    pub fn rectangle(min: Point, max: Point) -> Self {
        DomainSpec::Rectangle { min, max }
    }

    pub fn unit_square() -> Self {
        Self::rectangle([0.0, 0.0], [1.0, 1.0])
    }

    pub fn disk(center: Point, radius: f64) -> Self {
        DomainSpec::Disk { center, radius }
    }

    pub fn dimension(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } => 1,
            _ => 2,
        }
    }

    /// Checks size parameters and polygon convexity.
    pub fn validate(&self) -> Result<(), GeometryError> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            DomainSpec::Interval { a, b } => {
                if !finite(&[*a, *b]) || b <= a {
                    return Err(GeometryError::InvalidSpec(format!("interval [{a}, {b}]")));
                }
            }
            DomainSpec::Rectangle { min, max } => {
                if !finite(&[min[0], min[1], max[0], max[1]])
                    || max[0] <= min[0]
                    || max[1] <= min[1]
                {
                    return Err(GeometryError::InvalidSpec(
                        "rectangle sides must be positive".into(),
                    ));
                }
            }
            DomainSpec::Disk { center, radius } => {
                if !finite(&[center[0], center[1], *radius]) || *radius <= 0.0 {
                    return Err(GeometryError::InvalidSpec(
                        "disk radius must be positive".into(),
                    ));
                }
            }
            DomainSpec::Ellipse { center, semi_axes } => {
                if !finite(&[center[0], center[1], semi_axes[0], semi_axes[1]])
                    || semi_axes[0] <= 0.0
                    || semi_axes[1] <= 0.0
                {
                    return Err(GeometryError::InvalidSpec(
                        "semi-axes must be positive".into(),
                    ));
                }
            }
            DomainSpec::ConvexPolygon { vertices } => check_convex(vertices)?,
        }
        Ok(())
    }

    /// Exact continuum diameter.
    pub fn diameter(&self) -> f64 {
        match self {
            DomainSpec::Interval { a, b } => b - a,
            DomainSpec::Rectangle { min, max } => dist(*min, *max),
            DomainSpec::Disk { radius, .. } => 2.0 * radius,
            DomainSpec::Ellipse { semi_axes, .. } => 2.0 * semi_axes[0].max(semi_axes[1]),
            DomainSpec::ConvexPolygon { vertices } => {
                let mut d: f64 = 0.0;
                for (i, p) in vertices.iter().enumerate() {
                    for q in &vertices[i + 1..] {
                        d = d.max(dist(*p, *q));
                    }
                }
                d
            }
        }
    }

    /// Lebesgue measure (length in 1-D, area in 2-D).
    pub fn volume(&self) -> f64 {
        match self {
            DomainSpec::Interval { a, b } => b - a,
            DomainSpec::Rectangle { min, max } => (max[0] - min[0]) * (max[1] - min[1]),
            DomainSpec::Disk { radius, .. } => std::f64::consts::PI * radius * radius,
            DomainSpec::Ellipse { semi_axes, .. } => {
                std::f64::consts::PI * semi_axes[0] * semi_axes[1]
            }
            DomainSpec::ConvexPolygon { vertices } => shoelace(vertices).abs(),
        }
    }

    pub fn centroid(&self) -> Point {
        match self {
            DomainSpec::Interval { a, b } => [0.5 * (a + b), 0.0],
            DomainSpec::Rectangle { min, max } => {
                [0.5 * (min[0] + max[0]), 0.5 * (min[1] + max[1])]
            }
            DomainSpec::Disk { center, .. } | DomainSpec::Ellipse { center, .. } => *center,
            DomainSpec::ConvexPolygon { vertices } => {
                let a = shoelace(vertices);
                let (mut cx, mut cy) = (0.0, 0.0);
                for i in 0..vertices.len() {
                    let p = vertices[i];
                    let q = vertices[(i + 1) % vertices.len()];
                    let c = p[0] * q[1] - q[0] * p[1];
                    cx += (p[0] + q[0]) * c;
                    cy += (p[1] + q[1]) * c;
                }
                [cx / (6.0 * a), cy / (6.0 * a)]
            }
        }
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Point, Point) {
        match self {
            DomainSpec::Interval { a, b } => ([*a, 0.0], [*b, 0.0]),
            DomainSpec::Rectangle { min, max } => (*min, *max),
            DomainSpec::Disk { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            DomainSpec::Ellipse { center, semi_axes } => (
                [center[0] - semi_axes[0], center[1] - semi_axes[1]],
                [center[0] + semi_axes[0], center[1] + semi_axes[1]],
            ),
            DomainSpec::ConvexPolygon { vertices } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k]);
                        hi[k] = hi[k].max(v[k]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// True when `p` lies inside the domain at distance greater than `margin`
    /// from the boundary (measured along the relevant constraint).
    pub fn contains_strict(&self, p: Point, margin: f64) -> bool {
        match self {
            DomainSpec::Interval { a, b } => p[0] > a + margin && p[0] < b - margin,
            DomainSpec::Rectangle { min, max } => {
                (0..2).all(|k| p[k] > min[k] + margin && p[k] < max[k] - margin)
            }
            DomainSpec::Disk { center, radius } => dist(p, *center) < radius - margin,
            DomainSpec::Ellipse { center, semi_axes } => {
                let u = (p[0] - center[0]) / semi_axes[0];
                let v = (p[1] - center[1]) / semi_axes[1];
                // Scaled-radius test; margin is applied along the shorter axis.
                let m = margin / semi_axes[0].min(semi_axes[1]);
                (u * u + v * v).sqrt() < 1.0 - m
            }
            DomainSpec::ConvexPolygon { vertices } => {
                let ccw = shoelace(vertices) > 0.0;
                (0..vertices.len()).all(|i| {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % vertices.len()];
                    let e = [b[0] - a[0], b[1] - a[1]];
                    let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
                    let cross = e[0] * (p[1] - a[1]) - e[1] * (p[0] - a[0]);
                    let signed = if ccw { cross } else { -cross } / len;
                    signed > margin
                })
            }
        }
    }

    /// Distance from an interior point `p` to the boundary along the ray
    /// `p + s·dir·e_axis`, `s > 0`.
    pub fn ray_exit(&self, p: Point, axis: usize, dir: f64) -> f64 {
        let mut e = [0.0; 2];
        e[axis] = dir;
        match self {
            DomainSpec::Interval { a, b } => {
                if dir > 0.0 {
                    b - p[0]
                } else {
                    p[0] - a
                }
            }
            DomainSpec::Rectangle { min, max } => {
                if dir > 0.0 {
                    max[axis] - p[axis]
                } else {
                    p[axis] - min[axis]
                }
            }
            DomainSpec::Disk { center, radius } => {
                let d = [p[0] - center[0], p[1] - center[1]];
                let other = d[1 - axis];
                let along = (radius * radius - other * other).max(0.0).sqrt();
                along - dir * d[axis]
            }
            DomainSpec::Ellipse { center, semi_axes } => {
                let d = [p[0] - center[0], p[1] - center[1]];
                let o = 1 - axis;
                let frac = 1.0 - (d[o] / semi_axes[o]).powi(2);
                let along = semi_axes[axis] * frac.max(0.0).sqrt();
                along - dir * d[axis]
            }
            DomainSpec::ConvexPolygon { vertices } => {
                let ccw = shoelace(vertices) > 0.0;
                let mut best = f64::INFINITY;
                for i in 0..vertices.len() {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % vertices.len()];
                    // Outward normal.
                    let mut n = [b[1] - a[1], -(b[0] - a[0])];
                    if !ccw {
                        n = [-n[0], -n[1]];
                    }
                    let rate = n[0] * e[0] + n[1] * e[1];
                    if rate > 0.0 {
                        let gap = n[0] * (a[0] - p[0]) + n[1] * (a[1] - p[1]);
                        best = best.min(gap / rate);
                    }
                }
                best
            }
        }
    }

    /// Points on the boundary, spaced roughly `spacing` apart, used for
    /// boundary minimization scans.
    pub fn boundary_samples(&self, spacing: f64) -> Vec<Point> {
        let segs: Vec<(Point, Point)> = match self {
            DomainSpec::Interval { a, b } => return vec![[*a, 0.0], [*b, 0.0]],
            DomainSpec::Rectangle { min, max } => {
                let c = [*min, [max[0], min[1]], *max, [min[0], max[1]]];
                (0..4).map(|i| (c[i], c[(i + 1) % 4])).collect()
            }
            DomainSpec::ConvexPolygon { vertices } => (0..vertices.len())
                .map(|i| (vertices[i], vertices[(i + 1) % vertices.len()]))
                .collect(),
            DomainSpec::Disk { center, radius } => {
                return ellipse_samples(*center, [*radius, *radius], spacing)
            }
            DomainSpec::Ellipse { center, semi_axes } => {
                return ellipse_samples(*center, *semi_axes, spacing)
            }
        };
        let mut out = Vec::new();
        for (a, b) in segs {
            let m = ((dist(a, b) / spacing).ceil() as usize).max(1);
            for j in 0..m {
                let s = j as f64 / m as f64;
                out.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
            }
        }
        out
    }

    /// Straight boundary segments, if the boundary is polygonal.
    pub fn boundary_segments(&self) -> Option<Vec<(Point, Point)>> {
        match self {
            DomainSpec::Interval { a, b } => {
                Some(vec![([*a, 0.0], [*a, 0.0]), ([*b, 0.0], [*b, 0.0])])
            }
            DomainSpec::Rectangle { min, max } => {
                let c = [*min, [max[0], min[1]], *max, [min[0], max[1]]];
                Some((0..4).map(|i| (c[i], c[(i + 1) % 4])).collect())
            }
            DomainSpec::ConvexPolygon { vertices } => Some(
                (0..vertices.len())
                    .map(|i| (vertices[i], vertices[(i + 1) % vertices.len()]))
                    .collect(),
            ),
            _ => None,
        }
    }

    /// Polygon corners (the boundary is only piecewise smooth there).
    pub fn corners(&self) -> Vec<Point> {
        match self {
            DomainSpec::Rectangle { min, max } => {
                vec![*min, [max[0], min[1]], *max, [min[0], max[1]]]
            }
            DomainSpec::ConvexPolygon { vertices } => vertices.clone(),
            _ => Vec::new(),
        }
    }

    /// Same domain after `x ↦ scale·x`.
    pub fn scaled(&self, scale: f64) -> Self {
        let s = |p: &Point| [p[0] * scale, p[1] * scale];
        match self {
            DomainSpec::Interval { a, b } => DomainSpec::Interval {
                a: a * scale,
                b: b * scale,
            },
            DomainSpec::Rectangle { min, max } => DomainSpec::Rectangle {
                min: s(min),
                max: s(max),
            },
            DomainSpec::Disk { center, radius } => DomainSpec::Disk {
                center: s(center),
                radius: radius * scale,
            },
            DomainSpec::Ellipse { center, semi_axes } => DomainSpec::Ellipse {
                center: s(center),
                semi_axes: s(semi_axes),
            },
            DomainSpec::ConvexPolygon { vertices } => DomainSpec::ConvexPolygon {
                vertices: vertices.iter().map(s).collect(),
            },
        }
    }
}

fn ellipse_samples(center: Point, axes: [f64; 2], spacing: f64) -> Vec<Point> {
    let perim = 2.0 * std::f64::consts::PI * axes[0].max(axes[1]);
    let m = ((perim / spacing).ceil() as usize).max(16);
    (0..m)
        .map(|j| {
            let th = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
            [
                center[0] + axes[0] * th.cos(),
                center[1] + axes[1] * th.sin(),
            ]
        })
        .collect()
}

fn shoelace(v: &[Point]) -> f64 {
    let n = v.len();
    0.5 * (0..n)
        .map(|i| {
            let p = v[i];
            let q = v[(i + 1) % n];
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
}

fn check_convex(vertices: &[Point]) -> Result<(), GeometryError> {
    if vertices.len() < 3 {
        return Err(GeometryError::InvalidSpec(
            "polygon needs at least 3 vertices".into(),
        ));
    }
    if vertices
        .iter()
        .any(|v| !v[0].is_finite() || !v[1].is_finite())
    {
        return Err(GeometryError::InvalidSpec("non-finite vertex".into()));
    }
    let n = vertices.len();
    let scale = vertices
        .iter()
        .flat_map(|v| v.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(1.0);
    let mut sign = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let c = vertices[(i + 2) % n];
        let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
        if cross.abs() <= 1e-12 * scale * scale || (sign != 0.0 && cross.signum() != sign) {
            return Err(GeometryError::NonConvex {
                index: (i + 1) % n,
                cross,
            });
        }
        sign = cross.signum();
    }
    // A star polygon turns consistently but winds more than once.
    let mut turning = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let c = vertices[(i + 2) % n];
        let e1 = (b[1] - a[1]).atan2(b[0] - a[0]);
        let e2 = (c[1] - b[1]).atan2(c[0] - b[0]);
        let mut d = e2 - e1;
        while d > std::f64::consts::PI {
            d -= 2.0 * std::f64::consts::PI;
        }
        while d < -std::f64::consts::PI {
            d += 2.0 * std::f64::consts::PI;
        }
        turning += d;
    }
    if (turning.abs() - 2.0 * std::f64::consts::PI).abs() > 1e-6 {
        return Err(GeometryError::NonConvex {
            index: 0,
            cross: turning,
        });
    }
    Ok(())
}

/// Where grid unknowns sit relative to the lattice cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Centering {
    /// Unknowns at lattice points `min + i·h` (Dirichlet problems).
    Node,
    /// Unknowns at cell centres `min + (i + ½)·h` (Neumann problems).
    Cell,
}

const NONE: usize = usize::MAX;

/// A convex domain rasterized onto a uniform lattice.
///
/// Unknowns are the lattice points strictly inside the domain. Their
/// neighbours that fall outside carry the boundary condition: Dirichlet
/// rows account for the exact distance to the boundary along the grid
/// line, Neumann rows mirror the unknown itself.
#[derive(Debug, Clone)]
pub struct GridDomain {
    pub spec: DomainSpec,
    pub h: f64,
    pub dimension: usize,
    pub centering: Centering,
    pub diameter: f64,
    origin: Point,
    shape: [usize; 2],
    nodes: Vec<Point>,
    lattice: Vec<[usize; 2]>,
    index: Vec<usize>,
    stencil: Vec<bool>,
    full_stencil: Vec<bool>,
}

impl GridDomain {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> Point {
        self.nodes[i]
    }

    pub fn lattice_coords(&self, i: usize) -> [usize; 2] {
        self.lattice[i]
    }

    /// Lattice extent along each axis (1 along unused axes).
    pub fn shape(&self) -> [usize; 2] {
        self.shape
    }

    /// Bounding-box corner the lattice is anchored at.
    pub fn origin(&self) -> Point {
        self.origin
    }

    /// `hⁿ`, the quadrature weight of one node.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dimension as i32)
    }

    /// Interior index of the lattice point `coords`, if it is an unknown.
    pub fn index_of(&self, coords: [isize; 2]) -> Option<usize> {
        if coords[0] < 0 || coords[1] < 0 {
            return None;
        }
        let (i, j) = (coords[0] as usize, coords[1] as usize);
        if i >= self.shape[0] || j >= self.shape[1] {
            return None;
        }
        let k = self.index[j * self.shape[0] + i];
        (k != NONE).then_some(k)
    }

    /// Neighbouring unknown of node `i` one step along `axis` in direction
    /// `dir` (±1).
    pub fn neighbor(&self, i: usize, axis: usize, dir: isize) -> Option<usize> {
        if axis >= self.dimension {
            return None;
        }
        let l = self.lattice[i];
        let mut c = [l[0] as isize, l[1] as isize];
        c[axis] += dir;
        self.index_of(c)
    }

    /// Neighbour at lattice offset `(di, dj)`.
    pub fn offset(&self, i: usize, di: isize, dj: isize) -> Option<usize> {
        let l = self.lattice[i];
        self.index_of([l[0] as isize + di, l[1] as isize + dj])
    }

    /// Distance to the boundary along a grid line, in units of `h`, clamped
    /// to `[1e-3, 1]`. Used where the neighbour along that line is missing.
    pub fn boundary_fraction(&self, i: usize, axis: usize, dir: isize) -> f64 {
        let d = self.spec.ray_exit(self.nodes[i], axis, dir as f64);
        (d / self.h).clamp(1e-3, 1.0)
    }

    /// True when the boundary cuts one of the grid lines leaving node `i`
    /// short of a full step. The Dirichlet stencil there is only first-order
    /// accurate.
    pub fn is_cut(&self, i: usize) -> bool {
        (0..self.dimension).any(|axis| {
            [-1, 1].into_iter().any(|dir| {
                self.neighbor(i, axis, dir).is_none()
                    && self.boundary_fraction(i, axis, dir) < 1.0 - 1e-6
            })
        })
    }

    /// True when all 2n axis neighbours of node `i` are unknowns, so that
    /// central first differences are defined there.
    pub fn has_stencil(&self, i: usize) -> bool {
        self.stencil[i]
    }

    /// True when the full 3ⁿ neighbourhood is interior (mixed second
    /// differences are defined).
    pub fn has_full_stencil(&self, i: usize) -> bool {
        self.full_stencil[i]
    }

    /// Per-node flags of [`GridDomain::has_stencil`].
    pub fn stencil_mask(&self) -> &[bool] {
        &self.stencil
    }

    /// Interior node closest to `p`.
    pub fn nearest_node(&self, p: Point) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, q) in self.nodes.iter().enumerate() {
            let d = dist(p, *q);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    /// Distance from node `i` to the nearest polygon corner, if the domain
    /// has corners.
    pub fn corner_distance(&self, i: usize) -> Option<f64> {
        self.spec
            .corners()
            .iter()
            .map(|c| dist(*c, self.nodes[i]))
            .min_by(f64::total_cmp)
    }
}

/// Rasterizes `spec` onto the node-centred lattice of spacing `h` anchored at
/// the bounding-box minimum.
pub fn build_grid(spec: &DomainSpec, h: f64) -> Result<GridDomain, GeometryError> {
    build(spec, h, Centering::Node)
}

/// Cell-centred rasterization used by the Neumann operators.
pub fn build_cell_grid(spec: &DomainSpec, h: f64) -> Result<GridDomain, GeometryError> {
    build(spec, h, Centering::Cell)
}

fn build(spec: &DomainSpec, h: f64, centering: Centering) -> Result<GridDomain, GeometryError> {
    spec.validate()?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(GeometryError::InvalidSpec(format!("grid spacing {h}")));
    }
    let dim = spec.dimension();
    let (lo, hi) = spec.bounding_box();
    let offset = match centering {
        Centering::Node => 0.0,
        Centering::Cell => 0.5,
    };
    let mut shape = [1usize; 2];
    for k in 0..dim {
        let cells = ((hi[k] - lo[k]) / h + 1e-9).floor() as usize;
        shape[k] = match centering {
            Centering::Node => cells + 1,
            Centering::Cell => cells,
        };
    }
    let margin = 1e-9 * h;
    let mut index = vec![NONE; shape[0] * shape[1]];
    let mut nodes = Vec::new();
    let mut lattice = Vec::new();
    for j in 0..shape[1] {
        for i in 0..shape[0] {
            let mut p = [lo[0] + (i as f64 + offset) * h, 0.0];
            if dim == 2 {
                p[1] = lo[1] + (j as f64 + offset) * h;
            }
            if spec.contains_strict(p, margin) {
                index[j * shape[0] + i] = nodes.len();
                nodes.push(p);
                lattice.push([i, j]);
            }
        }
    }
    if nodes.is_empty() {
        return Err(GeometryError::EmptyInterior);
    }
    for axis in 0..dim {
        let mut seen: Vec<usize> = lattice.iter().map(|l| l[axis]).collect();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() < 3 {
            return Err(GeometryError::TooCoarse { h, axis });
        }
    }
    let mut grid = GridDomain {
        spec: spec.clone(),
        h,
        dimension: dim,
        centering,
        diameter: spec.diameter(),
        origin: lo,
        shape,
        nodes,
        lattice,
        index,
        stencil: Vec::new(),
        full_stencil: Vec::new(),
    };
    let n = grid.len();
    grid.stencil = (0..n)
        .map(|i| {
            (0..dim).all(|a| grid.neighbor(i, a, 1).is_some() && grid.neighbor(i, a, -1).is_some())
        })
        .collect();
    grid.full_stencil = (0..n)
        .map(|i| {
            if dim == 1 {
                grid.stencil[i]
            } else {
                (-1..=1).all(|di| (-1..=1).all(|dj| grid.offset(i, di, dj).is_some()))
            }
        })
        .collect();
    Ok(grid)
}

/// Nodes where `field ≥ δ·max(field)` and the first-difference stencil is
/// interior.
pub fn admissible_nodes(
    grid: &GridDomain,
    field: &[f64],
    delta: f64,
    full_stencil: bool,
) -> Result<Vec<usize>, GeometryError> {
    let max = field.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let cut = delta * max;
    let nodes: Vec<usize> = (0..grid.len())
        .filter(|&i| {
            let st = if full_stencil {
                grid.has_full_stencil(i)
            } else {
                grid.has_stencil(i)
            };
            st && field[i] >= cut && field[i] > 0.0
        })
        .collect();
    if nodes.is_empty() {
        return Err(GeometryError::NoAdmissibleNodes);
    }
    Ok(nodes)
}

/// Unordered pairs of distinct admissible nodes: all of them when there are
/// at most `max_pairs`, otherwise `max_pairs` distinct pairs drawn uniformly
/// with a ChaCha8 stream seeded by `seed`. Pairs are returned in canonical
/// (lexicographic) order.
pub fn admissible_pairs(
    grid: &GridDomain,
    field: &[f64],
    delta: f64,
    max_pairs: usize,
    seed: u64,
) -> Result<Vec<(usize, usize)>, GeometryError> {
    let nodes = admissible_nodes(grid, field, delta, false)?;
    Ok(sample_pairs(&nodes, max_pairs, seed))
}

/// Pair sampling over an explicit node list; see [`admissible_pairs`].
pub fn sample_pairs(nodes: &[usize], max_pairs: usize, seed: u64) -> Vec<(usize, usize)> {
    let n = nodes.len();
    let total = n * n.saturating_sub(1) / 2;
    if total <= max_pairs {
        let mut out = Vec::with_capacity(total);
        for a in 0..n {
            for b in a + 1..n {
                out.push((nodes[a], nodes[b]));
            }
        }
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ranks = index::sample(&mut rng, total, max_pairs).into_vec();
    ranks.sort_unstable();
    let row_start = |a: usize| a * n - a * (a + 1) / 2;
    let mut out = Vec::with_capacity(max_pairs);
    let mut a = 0;
    for r in ranks {
        while row_start(a + 1) <= r {
            a += 1;
        }
        let b = a + 1 + (r - row_start(a));
        out.push((nodes[a], nodes[b]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_quarter_grid() {
        let g = build_grid(&DomainSpec::interval(-0.5, 0.5), 0.25).unwrap();
        let xs: Vec<f64> = g.nodes().iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![-0.25, 0.0, 0.25]);
    }

    #[test]
    fn unit_square_quarter_grid() {
        let g = build_grid(&DomainSpec::unit_square(), 0.25).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.stencil_mask().iter().filter(|&&s| s).count(), 1);
    }

    #[test]
    fn collinear_vertex_is_rejected() {
        let spec = DomainSpec::ConvexPolygon {
            vertices: vec![[0.0, 0.0], [0.5, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        };
        assert!(matches!(
            build_grid(&spec, 0.1),
            Err(GeometryError::NonConvex { .. })
        ));
    }

    #[test]
    fn star_polygon_is_rejected() {
        let pts: Vec<Point> = (0..5)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * (2 * k) as f64 / 5.0;
                [th.cos(), th.sin()]
            })
            .collect();
        assert!(DomainSpec::ConvexPolygon { vertices: pts }
            .validate()
            .is_err());
    }

    #[test]
    fn diameters() {
        assert!((DomainSpec::unit_square().diameter() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(DomainSpec::disk([0.0, 0.0], 1.0).diameter(), 2.0);
        assert_eq!(DomainSpec::interval(-0.5, 0.5).diameter(), 1.0);
    }

    #[test]
    fn disk_ray_exit_matches_circle() {
        let d = DomainSpec::disk([0.0, 0.0], 1.0);
        let e = d.ray_exit([0.3, 0.4], 0, 1.0);
        assert!(((0.3 + e).powi(2) + 0.16 - 1.0).abs() < 1e-14);
        let e = d.ray_exit([0.3, 0.4], 1, -1.0);
        assert!((0.09 + (0.4 - e).powi(2) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn polygon_ray_exit_and_area() {
        let tri = DomainSpec::ConvexPolygon {
            vertices: vec![[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]],
        };
        assert!((tri.ray_exit([0.5, 0.5], 0, 1.0) - 1.0).abs() < 1e-14);
        assert!((tri.ray_exit([0.5, 0.5], 0, -1.0) - 0.5).abs() < 1e-14);
        assert!((tri.volume() - 2.0).abs() < 1e-14);
        let c = tri.centroid();
        assert!((c[0] - 2.0 / 3.0).abs() < 1e-14 && (c[1] - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn too_coarse_is_an_error() {
        assert!(build_grid(&DomainSpec::interval(0.0, 1.0), 0.4).is_err());
    }

    #[test]
    fn pairs_below_cap_are_exhaustive() {
        let g = build_grid(&DomainSpec::interval(-0.5, 0.5), 0.25).unwrap();
        let f = vec![1.0; g.len()];
        // Only the middle node has a complete stencil.
        assert!(admissible_pairs(&g, &f, 0.5, 10, 1).unwrap().is_empty());
        assert_eq!(
            sample_pairs(&[0, 1, 2], 10, 0),
            vec![(0, 1), (0, 2), (1, 2)]
        );
    }

    #[test]
    fn sampled_pairs_are_distinct_and_reproducible() {
        let nodes: Vec<usize> = (0..100).collect();
        let a = sample_pairs(&nodes, 1000, 42);
        let b = sample_pairs(&nodes, 1000, 42);
        assert_eq!(a, b);
        assert_eq!(a.len(), 1000);
        let mut c = a.clone();
        c.dedup();
        assert_eq!(c.len(), 1000);
        assert!(a.iter().all(|(x, y)| x < y));
        assert_ne!(a, sample_pairs(&nodes, 1000, 43));
    }

    #[test]
    fn peaked_field_with_high_threshold() {
        let g = build_grid(&DomainSpec::interval(-0.5, 0.5), 1.0 / 64.0).unwrap();
        let f: Vec<f64> = g
            .nodes()
            .iter()
            .map(|p| (-100.0 * p[0] * p[0]).exp())
            .collect();
        match admissible_pairs(&g, &f, 0.999, 100, 0) {
            Ok(p) => assert!(p.is_empty()),
            Err(e) => assert_eq!(e, GeometryError::NoAdmissibleNodes),
        }
    }
}
