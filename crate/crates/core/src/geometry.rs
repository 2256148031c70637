//! Test domains in one and two dimensions, uniform grids over boxes, and the
//! measurements built on counting measure: region volumes, the Ahlfors
//! regularity constant and halving radii.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A point of the plane; one-dimensional domains ignore the second coordinate.
pub type Point = [f64; 2];

/// Names accepted by [`make_domain`], in catalog order.
pub const SHAPES: [&str; 6] = ["interval", "disk", "square", "annulus", "cusp", "halfplane_truncated"];

/// Axis-aligned box `[lo, hi]`; the second axis is degenerate in 1-D.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub lo: Point,
    pub hi: Point,
}

impl BBox {
    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn center(&self) -> Point {
        [0.5 * (self.lo[0] + self.hi[0]), 0.5 * (self.lo[1] + self.hi[1])]
    }

    pub fn contains(&self, x: Point, dim: usize) -> bool {
        (0..dim).all(|a| x[a] >= self.lo[a] && x[a] <= self.hi[a])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    Interval { a: f64, b: f64 },
    Disk { c: Point, r: f64 },
    Square { lo: Point, side: f64 },
    Annulus { c: Point, r_in: f64, r_out: f64 },
    Cusp { s: f64 },
    HalfPlane { window: f64 },
}

/// An open domain given by an indicator and a signed distance to its boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    name: String,
    shape: Shape,
    dim: usize,
    bbox: BBox,
    diam: f64,
}

/// Config-file form of a domain: `shape` plus numeric parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub shape: String,
    #[serde(flatten)]
    pub params: BTreeMap<String, f64>,
}

impl DomainSpec {
    pub fn build(&self) -> Result<Domain> {
        make_domain(&self.shape, &self.params)
    }
}

/// Build a domain from the catalog.
///
/// | shape | params (defaults) |
/// |---|---|
/// | `interval` | `a` (0), `b` (1) |
/// | `disk` | `cx`, `cy` (0), `radius` (1) |
/// | `square` | `x0`, `y0` (0), `side` (1) |
/// | `annulus` | `cx`, `cy` (0), `r_in` (0.5), `r_out` (1) |
/// | `cusp` | `s` (2): `{0 < x < 1, abs(y) < x^s}` |
/// | `halfplane_truncated` | `window` (1): `{x < 0}` viewed through `[-w, 0] x [-w/2, w/2]` |
pub fn make_domain(name: &str, params: &BTreeMap<String, f64>) -> Result<Domain> {
    let get = |k: &str, d: f64| -> Result<f64> {
        let v = params.get(k).copied().unwrap_or(d);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(invalid(k, v, "must be finite"))
        }
    };
    let positive = |k: &str, d: f64| -> Result<f64> {
        let v = get(k, d)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(invalid(k, v, "must be > 0"))
        }
    };
    let (shape, dim, bbox, diam) = match name {
        "interval" => {
            let (a, b) = (get("a", 0.0)?, get("b", 1.0)?);
            if b <= a {
                return Err(invalid("b", b, "must exceed a"));
            }
            (
                Shape::Interval { a, b },
                1,
                BBox {
                    lo: [a, 0.0],
                    hi: [b, 0.0],
                },
                b - a,
            )
        }
        "disk" => {
            let c = [get("cx", 0.0)?, get("cy", 0.0)?];
            let r = positive("radius", 1.0)?;
            (
                Shape::Disk { c, r },
                2,
                BBox {
                    lo: [c[0] - r, c[1] - r],
                    hi: [c[0] + r, c[1] + r],
                },
                2.0 * r,
            )
        }
        "square" => {
            let lo = [get("x0", 0.0)?, get("y0", 0.0)?];
            let side = positive("side", 1.0)?;
            (
                Shape::Square { lo, side },
                2,
                BBox {
                    lo,
                    hi: [lo[0] + side, lo[1] + side],
                },
                side * std::f64::consts::SQRT_2,
            )
        }
        "annulus" => {
            let c = [get("cx", 0.0)?, get("cy", 0.0)?];
            let r_in = positive("r_in", 0.5)?;
            let r_out = positive("r_out", 1.0)?;
            if r_out <= r_in {
                return Err(invalid("r_out", r_out, "must exceed r_in"));
            }
            (
                Shape::Annulus { c, r_in, r_out },
                2,
                BBox {
                    lo: [c[0] - r_out, c[1] - r_out],
                    hi: [c[0] + r_out, c[1] + r_out],
                },
                2.0 * r_out,
            )
        }
        "cusp" => {
            let s = get("s", 2.0)?;
            if s <= 1.0 {
                return Err(invalid("s", s, "cusp exponent must be > 1"));
            }
            (
                Shape::Cusp { s },
                2,
                BBox {
                    lo: [0.0, -1.0],
                    hi: [1.0, 1.0],
                },
                2.0,
            )
        }
        "halfplane_truncated" => {
            let w = positive("window", 1.0)?;
            (
                Shape::HalfPlane { window: w },
                2,
                BBox {
                    lo: [-w, -0.5 * w],
                    hi: [0.0, 0.5 * w],
                },
                f64::INFINITY,
            )
        }
        other => {
            return Err(Error::UnknownName {
                kind: "domain",
                name: other.to_string(),
            })
        }
    };
    Ok(Domain {
        name: name.to_string(),
        shape,
        dim,
        bbox,
        diam,
    })
}

fn norm(v: Point) -> f64 {
    v[0].hypot(v[1])
}

impl Domain {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Bounding box of the domain (for the half-plane, its viewing window).
    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    /// Analytic diameter; infinite for the half-plane.
    pub fn diam(&self) -> f64 {
        self.diam
    }

    pub fn is_bounded(&self) -> bool {
        self.diam.is_finite()
    }

    /// Lebesgue measure, when known in closed form.
    pub fn area(&self) -> Option<f64> {
        use std::f64::consts::PI;
        match self.shape {
            Shape::Interval { a, b } => Some(b - a),
            Shape::Disk { r, .. } => Some(PI * r * r),
            Shape::Square { side, .. } => Some(side * side),
            Shape::Annulus { r_in, r_out, .. } => Some(PI * (r_out * r_out - r_in * r_in)),
            Shape::Cusp { s } => Some(2.0 / (s + 1.0)),
            Shape::HalfPlane { .. } => None,
        }
    }

    /// Boundary length (2-D) or number of boundary points (1-D), when known.
    pub fn perimeter(&self) -> Option<f64> {
        use std::f64::consts::PI;
        match self.shape {
            Shape::Interval { .. } => Some(2.0),
            Shape::Disk { r, .. } => Some(2.0 * PI * r),
            Shape::Square { side, .. } => Some(4.0 * side),
            Shape::Annulus { r_in, r_out, .. } => Some(2.0 * PI * (r_in + r_out)),
            _ => None,
        }
    }

    pub fn inside(&self, x: Point) -> bool {
        match self.shape {
            Shape::Cusp { s } => x[0] > 0.0 && x[0] < 1.0 && x[1].abs() < x[0].powf(s),
            Shape::HalfPlane { .. } => x[0] < 0.0,
            _ => self.sdist(x) < 0.0,
        }
    }

    /// Signed distance to the boundary, negative inside.
    pub fn sdist(&self, x: Point) -> f64 {
        match self.shape {
            Shape::Interval { a, b } => (a - x[0]).max(x[0] - b),
            Shape::Disk { c, r } => norm([x[0] - c[0], x[1] - c[1]]) - r,
            Shape::Square { lo, side } => {
                let h = 0.5 * side;
                let q = [
                    (x[0] - lo[0] - h).abs() - h,
                    (x[1] - lo[1] - h).abs() - h,
                ];
                norm([q[0].max(0.0), q[1].max(0.0)]) + q[0].max(q[1]).min(0.0)
            }
            Shape::Annulus { c, r_in, r_out } => {
                let rho = norm([x[0] - c[0], x[1] - c[1]]);
                (r_in - rho).max(rho - r_out)
            }
            Shape::Cusp { s } => {
                let d = cusp_distance(s, x).0;
                if self.inside(x) {
                    -d
                } else {
                    d
                }
            }
            Shape::HalfPlane { .. } => x[0],
        }
    }

    /// A nearest boundary point to `x`.
    pub fn project(&self, x: Point) -> Point {
        match self.shape {
            Shape::Interval { a, b } => {
                if (x[0] - a).abs() <= (x[0] - b).abs() {
                    [a, 0.0]
                } else {
                    [b, 0.0]
                }
            }
            Shape::Disk { c, r } => radial_projection(c, r, x),
            Shape::Annulus { c, r_in, r_out } => {
                let rho = norm([x[0] - c[0], x[1] - c[1]]);
                if (rho - r_in).abs() <= (rho - r_out).abs() {
                    radial_projection(c, r_in, x)
                } else {
                    radial_projection(c, r_out, x)
                }
            }
            Shape::Square { lo, side } => {
                let hi = [lo[0] + side, lo[1] + side];
                let clamped = [x[0].clamp(lo[0], hi[0]), x[1].clamp(lo[1], hi[1])];
                if clamped != x {
                    return clamped;
                }
                // interior: push to the nearest edge
                let gaps = [x[0] - lo[0], hi[0] - x[0], x[1] - lo[1], hi[1] - x[1]];
                let k = (0..4).min_by(|&i, &j| gaps[i].total_cmp(&gaps[j])).unwrap_or(0);
                match k {
                    0 => [lo[0], x[1]],
                    1 => [hi[0], x[1]],
                    2 => [x[0], lo[1]],
                    _ => [x[0], hi[1]],
                }
            }
            Shape::Cusp { s } => cusp_distance(s, x).1,
            Shape::HalfPlane { .. } => [0.0, x[1]],
        }
    }
}

fn radial_projection(c: Point, r: f64, x: Point) -> Point {
    let v = [x[0] - c[0], x[1] - c[1]];
    let rho = norm(v);
    if rho == 0.0 {
        [c[0] + r, c[1]]
    } else {
        [c[0] + r * v[0] / rho, c[1] + r * v[1] / rho]
    }
}

/// Distance from `x` to the cusp boundary and the nearest boundary point.
///
/// The boundary consists of the curves `y = +-x^s` on `[0, 1]` and the segment
/// `x = 1, abs(y) <= 1`. Each curve is projected by a coarse scan followed by
/// golden-section refinement of the best bracket.
fn cusp_distance(s: f64, x: Point) -> (f64, Point) {
    let mut best = (f64::INFINITY, [0.0, 0.0]);
    let mut consider = |p: Point| {
        let d = norm([x[0] - p[0], x[1] - p[1]]);
        if d < best.0 {
            best = (d, p);
        }
    };
    consider([1.0, x[1].clamp(-1.0, 1.0)]);
    for sign in [1.0, -1.0] {
        let curve = |xi: f64| [xi, sign * xi.powf(s)];
        let dist2 = |xi: f64| {
            let p = curve(xi);
            (x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2)
        };
        const SCAN: usize = 64;
        let mut k_best = 0;
        let mut d_best = f64::INFINITY;
        for k in 0..=SCAN {
            let d = dist2(k as f64 / SCAN as f64);
            if d < d_best {
                d_best = d;
                k_best = k;
            }
        }
        let mut a = (k_best.saturating_sub(1)) as f64 / SCAN as f64;
        let mut b = ((k_best + 1).min(SCAN)) as f64 / SCAN as f64;
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (dist2(c), dist2(d));
        for _ in 0..80 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = dist2(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = dist2(d);
            }
            if b - a < 1e-15 {
                break;
            }
        }
        consider(curve(0.5 * (a + b)));
        consider(curve(k_best as f64 / SCAN as f64));
    }
    best
}

/// Classification of a grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    /// Center lies in the domain.
    Inside,
    /// Center outside, at distance below the half-diagonal from the boundary.
    Boundary,
    Outside,
}

/// Uniform grid of square cells over a box, classified against a domain.
#[derive(Debug, Clone)]
pub struct Grid {
    domain: Arc<Domain>,
    dim: usize,
    origin: Point,
    h: f64,
    shape: [usize; 2],
    mask: Vec<CellKind>,
    inside: Vec<u32>,
}

impl Grid {
    /// Grid over the domain's bounding box with `resolution` cells along its
    /// longest axis. The shorter axis gets enough cells of the same size to
    /// cover it, centred on the box.
    pub fn over_domain(domain: Arc<Domain>, resolution: usize) -> Result<Self> {
        let bbox = domain.bbox();
        Self::over_box(domain, bbox, resolution)
    }

    /// Grid over an arbitrary box (a window or a truncation box).
    pub fn over_box(domain: Arc<Domain>, bbox: BBox, resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(invalid("resolution", resolution as f64, "need at least 2 cells"));
        }
        let dim = domain.dim();
        let longest = (0..dim).map(|a| bbox.extent(a)).fold(0.0, f64::max);
        if !(longest > 0.0) || !longest.is_finite() {
            return Err(Error::Precondition("grid box must have positive finite extent".into()));
        }
        let h = longest / resolution as f64;
        let mut shape = [1usize; 2];
        let mut origin = bbox.lo;
        for a in 0..dim {
            let cells = ((bbox.extent(a) / h) - 1e-9).ceil().max(1.0) as usize;
            shape[a] = cells;
            let pad = 0.5 * (cells as f64 * h - bbox.extent(a));
            origin[a] = bbox.lo[a] - pad;
        }
        if dim == 1 {
            origin[1] = 0.0;
        }
        Ok(Self::with_layout(domain, origin, h, shape))
    }

    /// Grid with explicit origin, cell size and cell counts.
    pub fn with_layout(domain: Arc<Domain>, origin: Point, h: f64, shape: [usize; 2]) -> Self {
        let dim = domain.dim();
        let shape = if dim == 1 { [shape[0], 1] } else { shape };
        let half_diag = 0.5 * h * (dim as f64).sqrt();
        let mut mask = Vec::with_capacity(shape[0] * shape[1]);
        let mut inside = Vec::new();
        for j in 0..shape[1] {
            for i in 0..shape[0] {
                let c = [
                    origin[0] + (i as f64 + 0.5) * h,
                    if dim == 1 { 0.0 } else { origin[1] + (j as f64 + 0.5) * h },
                ];
                let kind = if domain.inside(c) {
                    inside.push((j * shape[0] + i) as u32);
                    CellKind::Inside
                } else if domain.sdist(c) < half_diag {
                    CellKind::Boundary
                } else {
                    CellKind::Outside
                };
                mask.push(kind);
            }
        }
        Self {
            domain,
            dim,
            origin,
            h,
            shape,
            mask,
            inside,
        }
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    /// Cells per axis (`[n, 1]` in 1-D).
    pub fn shape(&self) -> [usize; 2] {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    /// `h^n`.
    pub fn cell_measure(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn kind(&self, cell: usize) -> CellKind {
        self.mask[cell]
    }

    /// Linear indices of inside cells, ascending.
    pub fn inside_cells(&self) -> &[u32] {
        &self.inside
    }

    /// Linear indices of every cell.
    pub fn all_cells(&self) -> Vec<u32> {
        (0..self.len() as u32).collect()
    }

    pub fn coords(&self, cell: usize) -> [usize; 2] {
        [cell % self.shape[0], cell / self.shape[0]]
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.shape[0] + i
    }

    pub fn center(&self, cell: usize) -> Point {
        let [i, j] = self.coords(cell);
        [
            self.origin[0] + (i as f64 + 0.5) * self.h,
            if self.dim == 1 { 0.0 } else { self.origin[1] + (j as f64 + 0.5) * self.h },
        ]
    }

    /// Cell containing `x`, if it lies in the grid box.
    pub fn locate(&self, x: Point) -> Option<usize> {
        let i = ((x[0] - self.origin[0]) / self.h).floor();
        let j = if self.dim == 1 { 0.0 } else { ((x[1] - self.origin[1]) / self.h).floor() };
        if i < 0.0 || j < 0.0 || i >= self.shape[0] as f64 || j >= self.shape[1] as f64 {
            return None;
        }
        Some(self.index(i as usize, j as usize))
    }

    /// Total grid box.
    pub fn bbox(&self) -> BBox {
        BBox {
            lo: self.origin,
            hi: [
                self.origin[0] + self.shape[0] as f64 * self.h,
                if self.dim == 1 { 0.0 } else { self.origin[1] + self.shape[1] as f64 * self.h },
            ],
        }
    }

    /// Distances from `x` to the centers of all inside cells, sorted.
    pub fn sorted_inside_distances(&self, x: Point) -> Vec<f64> {
        let mut d: Vec<f64> = self
            .inside
            .iter()
            .map(|&c| {
                let p = self.center(c as usize);
                dist(p, x)
            })
            .collect();
        d.sort_by(f64::total_cmp);
        d
    }
}

pub fn dist(a: Point, b: Point) -> f64 {
    norm([a[0] - b[0], a[1] - b[1]])
}

/// `h^n * #{inside cells whose center satisfies region}`.
///
/// Center-point membership biases the result by `O(h * perimeter)`.
pub fn region_measure<F: Fn(Point) -> bool>(grid: &Grid, region: F) -> f64 {
    let count = grid
        .inside_cells()
        .iter()
        .filter(|&&c| region(grid.center(c as usize)))
        .count();
    count as f64 * grid.cell_measure()
}

/// Measure of `B(x, r) ∩ Ω` from a sorted distance list.
fn ball_count(sorted: &[f64], r: f64) -> usize {
    sorted.partition_point(|&d| d < r)
}

/// One row of an Ahlfors scan.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AhlforsRow {
    pub r: f64,
    pub min_ratio: f64,
    pub argmin: Point,
}

/// Empirical Ahlfors regularity constant.
#[derive(Debug, Clone, Serialize)]
pub struct AhlforsReport {
    pub theta_hat: f64,
    pub rows: Vec<AhlforsRow>,
    pub samples: usize,
    /// Every `(x, r, ratio)` evaluated, for CSV export.
    pub cases: Vec<(Point, f64, f64)>,
}

/// `theta_hat = min_{i,j} |B(x_i, r_j) ∩ Ω| / r_j^n`.
pub fn ahlfors_theta(domain: &Domain, grid: &Grid, samples: &[Point], radii: &[f64]) -> Result<AhlforsReport> {
    if samples.is_empty() {
        return Err(Error::Empty("Ahlfors sample set"));
    }
    if radii.is_empty() {
        return Err(Error::Empty("Ahlfors radius set"));
    }
    for x in samples {
        if !domain.inside(*x) {
            return Err(Error::Precondition(format!("sample {x:?} is not inside {}", domain.name())));
        }
    }
    for &r in radii {
        if !(r > 0.0 && r < 2.0 * domain.diam()) {
            return Err(invalid("r", r, "radius must lie in (0, 2 diam)"));
        }
    }
    let n = domain.dim() as i32;
    let mut rows: Vec<AhlforsRow> = radii
        .iter()
        .map(|&r| AhlforsRow {
            r,
            min_ratio: f64::INFINITY,
            argmin: [0.0; 2],
        })
        .collect();
    let mut cases = Vec::with_capacity(samples.len() * radii.len());
    for &x in samples {
        let sorted = grid.sorted_inside_distances(x);
        for row in rows.iter_mut() {
            let m = ball_count(&sorted, row.r) as f64 * grid.cell_measure();
            let ratio = m / row.r.powi(n);
            cases.push((x, row.r, ratio));
            if ratio < row.min_ratio {
                row.min_ratio = ratio;
                row.argmin = x;
            }
        }
    }
    let theta_hat = rows.iter().map(|r| r.min_ratio).fold(f64::INFINITY, f64::min);
    Ok(AhlforsReport {
        theta_hat,
        rows,
        samples: samples.len(),
        cases,
    })
}

/// Minimum number of cells a target ball must hold for [`halving_radii`].
pub const HALVING_MIN_CELLS: usize = 32;

/// Radii `b_j` with `|B(x, b_j t) ∩ Ω| = 2^-j |B(x, t) ∩ Ω|`, `b_0 = 1`.
///
/// Each `b_j` is located by bisection on the counting measure.
pub fn halving_radii(domain: &Domain, grid: &Grid, x: Point, t: f64, j_max: usize) -> Result<Vec<f64>> {
    if !domain.inside(x) {
        return Err(Error::Precondition(format!("{x:?} is not inside {}", domain.name())));
    }
    if !(t > 0.0 && t < domain.diam()) {
        return Err(invalid("t", t, "must lie in (0, diam)"));
    }
    let sorted = grid.sorted_inside_distances(x);
    let full = ball_count(&sorted, t);
    let mut out = vec![1.0];
    for j in 1..=j_max {
        let target = full as f64 / f64::powi(2.0, j as i32);
        if target < HALVING_MIN_CELLS as f64 {
            return Err(Error::Resolution(format!(
                "ball B(x, b_{j} t) would hold {target:.1} cells (< {HALVING_MIN_CELLS}); refine the grid"
            )));
        }
        let (mut lo, mut hi) = (0.0, *out.last().unwrap_or(&1.0));
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if (ball_count(&sorted, mid * t) as f64) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-12 {
                break;
            }
        }
        out.push(hi);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn dom(name: &str, kv: &[(&str, f64)]) -> Domain {
        let p = kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        make_domain(name, &p).unwrap()
    }

    #[test]
    fn catalog_examples() {
        assert_eq!(dom("disk", &[]).sdist([2.0, 0.0]), 1.0);
        assert!(dom("square", &[]).inside([0.5, 0.5]));
        let cusp = dom("cusp", &[("s", 2.0)]);
        assert!(cusp.inside([0.1, 0.005]));
        assert!(!cusp.inside([0.1, 0.02]));
    }

    #[test]
    fn rejects_unknown_and_bad_params() {
        assert!(matches!(
            make_domain("torus", &BTreeMap::new()),
            Err(Error::UnknownName { .. })
        ));
        let p = [("s".to_string(), 1.0)].into_iter().collect();
        assert!(make_domain("cusp", &p).is_err());
    }

    #[test]
    fn sdist_agrees_with_indicator() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for name in SHAPES {
            let d = dom(name, &[]);
            let b = d.bbox();
            let c = b.center();
            let span = (0..d.dim()).map(|a| b.extent(a)).fold(0.0, f64::max).max(1.0);
            for _ in 0..10_000 {
                let x = [
                    c[0] + span * (rng.random::<f64>() * 3.0 - 1.5),
                    if d.dim() == 1 { 0.0 } else { c[1] + span * (rng.random::<f64>() * 3.0 - 1.5) },
                ];
                let s = d.sdist(x);
                if s.abs() > 1e-6 {
                    assert_eq!(d.inside(x), s < 0.0, "{name} at {x:?}: sdist {s}");
                }
                if d.is_bounded() && d.inside(x) {
                    assert!(b.contains(x, d.dim()));
                }
            }
        }
    }

    #[test]
    fn cusp_projection_is_accurate() {
        let cusp = dom("cusp", &[]);
        // brute-force oracle over a fine parametrization of the upper curve
        for x in [[0.5, 0.6], [0.3, 0.0], [0.8, 0.1], [-0.2, 0.3], [1.3, 0.2]] {
            let brute = (0..=200_000)
                .map(|k| {
                    let xi = k as f64 / 200_000.0;
                    let up = dist(x, [xi, xi * xi]);
                    let down = dist(x, [xi, -xi * xi]);
                    up.min(down)
                })
                .fold(dist(x, [1.0, x[1].clamp(-1.0, 1.0)]), f64::min);
            assert!((cusp.sdist(x).abs() - brute).abs() < 1e-8, "{x:?}");
        }
    }

    #[test]
    fn region_measure_examples() {
        let disk = Arc::new(dom("disk", &[]));
        let g = Grid::over_domain(disk, 512).unwrap();
        let area = region_measure(&g, |_| true);
        assert!((area - PI).abs() < 0.02 * PI);
        assert_eq!(region_measure(&g, |_| false), 0.0);

        let sq = Arc::new(dom("square", &[]));
        let g = Grid::over_domain(sq, 64).unwrap();
        assert!((region_measure(&g, |x| x[0] < 0.5) - 0.5).abs() <= 2.0 * g.h());
    }

    #[test]
    fn region_measure_converges() {
        for name in ["disk", "square"] {
            let d = Arc::new(dom(name, &[]));
            let per = d.perimeter().unwrap();
            for n in [32usize, 64, 128] {
                let a = region_measure(&Grid::over_domain(d.clone(), n).unwrap(), |_| true);
                let g2 = Grid::over_domain(d.clone(), 2 * n).unwrap();
                let b = region_measure(&g2, |_| true);
                let h = 2.0 * g2.h();
                assert!((a - b).abs() <= 4.0 * h * per, "{name} {n}");
            }
        }
    }

    #[test]
    fn mask_matches_center_test() {
        let d = Arc::new(dom("annulus", &[]));
        let g = Grid::over_domain(d.clone(), 40).unwrap();
        for c in 0..g.len() {
            assert_eq!(g.kind(c) == CellKind::Inside, d.inside(g.center(c)));
        }
    }

    #[test]
    fn ahlfors_disk_lower_bound() {
        let d = dom("disk", &[]);
        let g = Grid::over_domain(Arc::new(d.clone()), 200).unwrap();
        let samples = [[0.0, 0.0], [0.99, 0.0], [0.0, -0.99], [0.5, 0.5]];
        let radii = [0.05, 0.2, 0.5, 1.0, 2.0, 3.99];
        let rep = ahlfors_theta(&d, &g, &samples, &radii).unwrap();
        assert!(rep.theta_hat >= PI / 16.0 * 0.98, "{}", rep.theta_hat);
        // enriching the sample set can only lower theta_hat
        let more = [[0.0, 0.0], [0.99, 0.0], [0.0, -0.99], [0.5, 0.5], [-0.7, 0.7]];
        let rep2 = ahlfors_theta(&d, &g, &more, &radii).unwrap();
        assert!(rep2.theta_hat <= rep.theta_hat);
    }

    #[test]
    fn ahlfors_square_corner_quarter_disk() {
        let d = dom("square", &[]);
        let g = Grid::over_domain(Arc::new(d.clone()), 400).unwrap();
        let rep = ahlfors_theta(&d, &g, &[[1e-4, 1e-4]], &[0.2]).unwrap();
        assert!((rep.theta_hat - PI / 4.0).abs() < 0.05 * PI / 4.0, "{}", rep.theta_hat);
    }

    #[test]
    fn ahlfors_rejects_empty_and_outside() {
        let d = dom("disk", &[]);
        let g = Grid::over_domain(Arc::new(d.clone()), 16).unwrap();
        assert!(ahlfors_theta(&d, &g, &[], &[0.1]).is_err());
        assert!(ahlfors_theta(&d, &g, &[[2.0, 0.0]], &[0.1]).is_err());
        assert!(ahlfors_theta(&d, &g, &[[0.0, 0.0]], &[4.5]).is_err());
    }

    #[test]
    fn halving_on_full_balls() {
        let d = dom("disk", &[]);
        let g = Grid::over_domain(Arc::new(d.clone()), 400).unwrap();
        let b = halving_radii(&d, &g, [0.0, 0.0], 0.5, 4).unwrap();
        for (j, bj) in b.iter().enumerate() {
            let expect = 2f64.powf(-(j as f64) / 2.0);
            assert!((bj - expect).abs() < 0.01 * expect, "{j}: {bj}");
        }
        assert_eq!(halving_radii(&d, &g, [0.0, 0.0], 0.5, 0).unwrap(), vec![1.0]);
    }

    #[test]
    fn halving_refuses_coarse_grid() {
        let d = dom("disk", &[]);
        let g = Grid::over_domain(Arc::new(d.clone()), 16).unwrap();
        assert!(matches!(
            halving_radii(&d, &g, [0.0, 0.0], 0.3, 3),
            Err(Error::Resolution(_))
        ));
    }
}
