//! Modulars and Luxemburg (semi)norms of grid functions.
//!
//! The double integral of the fractional seminorm is replaced by a sum over
//! unordered pairs of distinct cells,
//!
//! ```text
//! sum_{i<j} 2 phi(|u_i - u_j| / lambda) h^{2n} / |x_i - x_j|^{n+beta}
//! ```
//!
//! with the diagonal dropped. On a uniform grid the kernel depends only on the
//! integer offset between cells, so it is tabulated once per grid. The
//! near-diagonal part of the sum converges under refinement exactly when
//! `C_beta` is finite; otherwise it grows without bound.

use std::io::{Read, Write};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Grid, Point};
use crate::sum::{compensated, tiled_sum};
use crate::young::YoungFunction;

/// Values of a function on a set of grid cells.
#[derive(Debug, Clone)]
pub struct SampledFunction {
    grid: Arc<Grid>,
    cells: Arc<Vec<u32>>,
    values: Vec<f64>,
    name: String,
}

impl SampledFunction {
    /// Sample `f` at the centers of the inside cells of `grid`.
    pub fn on_inside<F: Fn(Point) -> f64>(grid: Arc<Grid>, name: &str, f: F) -> Self {
        let cells: Vec<u32> = grid.inside_cells().to_vec();
        Self::on_cells(grid, Arc::new(cells), name, f)
    }

    /// Sample `f` at the centers of the given cells.
    pub fn on_cells<F: Fn(Point) -> f64>(grid: Arc<Grid>, cells: Arc<Vec<u32>>, name: &str, f: F) -> Self {
        let values = cells.iter().map(|&c| f(grid.center(c as usize))).collect();
        Self {
            grid,
            cells,
            values,
            name: name.to_string(),
        }
    }

    pub fn from_values(grid: Arc<Grid>, cells: Arc<Vec<u32>>, values: Vec<f64>, name: &str) -> Result<Self> {
        if cells.len() != values.len() {
            return Err(Error::Precondition(format!(
                "{} cells but {} values",
                cells.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!("non-finite value {v} in {name}")));
        }
        Ok(Self {
            grid,
            cells,
            values,
            name: name.to_string(),
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn cells(&self) -> &Arc<Vec<u32>> {
        &self.cells
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    /// Same support, values mapped pointwise.
    pub fn map<F: Fn(f64) -> f64>(&self, name: &str, f: F) -> Self {
        Self {
            grid: self.grid.clone(),
            cells: self.cells.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            name: name.to_string(),
        }
    }

    /// `a * self + b * other` on a shared support.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if !Arc::ptr_eq(&self.cells, &other.cells) && self.cells != other.cells {
            return Err(Error::Precondition("functions live on different supports".into()));
        }
        Ok(Self {
            grid: self.grid.clone(),
            cells: self.cells.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
            name: format!("{a}*{}+{b}*{}", self.name, other.name),
        })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_constant(&self) -> bool {
        self.values.windows(2).all(|w| w[0] == w[1])
    }

    /// Write `cell,x,y,value` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Precondition(e.to_string());
        out.write_record(["cell", "x", "y", "value"]).map_err(io)?;
        for (&c, &v) in self.cells.iter().zip(&self.values) {
            let p = self.grid.center(c as usize);
            out.write_record([c.to_string(), p[0].to_string(), p[1].to_string(), v.to_string()])
                .map_err(io)?;
        }
        out.flush().map_err(|e| Error::Precondition(e.to_string()))?;
        Ok(())
    }

    /// Read `cell,x,y,value` rows onto `grid`; cells must be inside cells.
    pub fn read_csv<R: Read>(grid: Arc<Grid>, r: R, name: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut pairs = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Precondition(e.to_string()))?;
            let cell: u32 = rec
                .get(0)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Precondition(format!("bad cell index in {rec:?}")))?;
            let value: f64 = rec
                .get(3)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Precondition(format!("bad value in {rec:?}")))?;
            if cell as usize >= grid.len() {
                return Err(Error::Precondition(format!("cell {cell} outside the grid")));
            }
            pairs.push((cell, value));
        }
        pairs.sort_by_key(|p| p.0);
        pairs.dedup_by_key(|p| p.0);
        let cells: Vec<u32> = pairs.iter().map(|p| p.0).collect();
        let values = pairs.iter().map(|p| p.1).collect();
        Self::from_values(grid, Arc::new(cells), values, name)
    }
}

/// Offset-indexed kernel `2 h^{2n} / |x - y|^{n+beta}` for one grid.
#[derive(Debug, Clone)]
pub struct PairKernel {
    stride: usize,
    table: Vec<f64>,
}

impl PairKernel {
    pub fn new(grid: &Grid, beta: f64) -> Self {
        let [nx, ny] = grid.shape();
        let n = grid.dim() as f64;
        let h = grid.h();
        let scale = 2.0 * h.powf(n - beta);
        let mut table = vec![0.0; nx * ny];
        for dy in 0..ny {
            for dx in 0..nx {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let r = (dx as f64).hypot(dy as f64);
                table[dy * nx + dx] = scale / r.powf(n + beta);
            }
        }
        Self { stride: nx, table }
    }

    #[inline]
    fn weight(&self, dx: usize, dy: usize) -> f64 {
        self.table[dy * self.stride + dx]
    }
}

const PAIR_TILE: usize = 64;

/// Precomputed pair layout of one function, reusable across `lambda`.
struct PairSet<'a> {
    ix: Vec<i32>,
    iy: Vec<i32>,
    values: &'a [f64],
    kernel: PairKernel,
}

impl<'a> PairSet<'a> {
    fn new(u: &'a SampledFunction, beta: f64) -> Self {
        let grid = u.grid();
        let (ix, iy) = u
            .cells()
            .iter()
            .map(|&c| {
                let [i, j] = grid.coords(c as usize);
                (i as i32, j as i32)
            })
            .unzip();
        Self {
            ix,
            iy,
            values: u.values(),
            kernel: PairKernel::new(grid, beta),
        }
    }

    /// `sum_{i<j} w_ij g(|u_i - u_j|)` with a fixed tile schedule.
    fn sum<G: Fn(f64) -> f64 + Sync>(&self, g: G) -> f64 {
        let m = self.values.len();
        tiled_sum(m, PAIR_TILE, |rows| {
            compensated(rows.map(|a| {
                let (xa, ya, ua) = (self.ix[a], self.iy[a], self.values[a]);
                let mut acc = 0.0;
                for b in a + 1..m {
                    let d = (ua - self.values[b]).abs();
                    if d == 0.0 {
                        continue;
                    }
                    let dx = (xa - self.ix[b]).unsigned_abs() as usize;
                    let dy = (ya - self.iy[b]).unsigned_abs() as usize;
                    acc += self.kernel.weight(dx, dy) * g(d);
                }
                acc
            }))
        })
    }
}

/// Discrete seminorm modular `sum_{i<j} 2 phi(|u_i-u_j|/lambda) h^{2n} / |x_i-x_j|^{n+beta}`.
pub fn seminorm_modular(u: &SampledFunction, phi: &YoungFunction, beta: f64, lambda: f64) -> f64 {
    if u.len() < 2 {
        return 0.0;
    }
    let inv = 1.0 / lambda;
    PairSet::new(u, beta).sum(|d| phi.eval(d * inv))
}

/// Modular sampled at several `lambda`, with a monotonicity certificate.
#[derive(Debug, Clone, Serialize)]
pub struct ModularCurve {
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
    /// True when values are nonincreasing in `lambda`, strictly where positive.
    pub monotone: bool,
}

impl ModularCurve {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Precondition(e.to_string());
        out.write_record(["lambda", "modular"]).map_err(io)?;
        for (l, v) in self.lambdas.iter().zip(&self.values) {
            out.write_record([l.to_string(), v.to_string()]).map_err(io)?;
        }
        out.flush().map_err(|e| Error::Precondition(e.to_string()))?;
        Ok(())
    }
}

pub fn modular_curve(u: &SampledFunction, phi: &YoungFunction, beta: f64, lambdas: &[f64]) -> ModularCurve {
    let mut lambdas = lambdas.to_vec();
    lambdas.sort_by(f64::total_cmp);
    let pairs = PairSet::new(u, beta);
    let values: Vec<f64> = lambdas
        .iter()
        .map(|&l| {
            let inv = 1.0 / l;
            pairs.sum(|d| phi.eval(d * inv))
        })
        .collect();
    let monotone = values
        .windows(2)
        .all(|w| if w[0] > 0.0 { w[1] < w[0] } else { w[1] <= w[0] });
    ModularCurve {
        lambdas,
        values,
        monotone,
    }
}

/// Relative tolerance on `lambda` for every Luxemburg root.
pub const LAMBDA_RTOL: f64 = 1e-10;

/// Smallest `lambda` with `modular(lambda) <= 1` for a nonincreasing modular.
///
/// The bracket is grown by doubling/halving from `guess`; the root is then
/// located by Illinois-modified false position on `ln modular` against
/// `ln lambda`, which keeps the bracket and converges in a handful of steps
/// for power-like modulars. The returned value is the upper bracket end, so
/// `modular(result) <= 1` always holds.
pub fn luxemburg_root<M: FnMut(f64) -> f64>(mut modular: M, guess: f64) -> Result<f64> {
    let mut g = |l: f64| -> f64 {
        let m = modular(l.exp());
        if m.is_nan() {
            f64::INFINITY
        } else {
            m.ln()
        }
    };
    let guess = if guess > 0.0 && guess.is_finite() { guess } else { 1.0 };
    let mut a = guess.ln();
    let mut ga = g(a);
    let (mut lo, mut glo, mut hi, mut ghi);
    if ga > 0.0 {
        // too small: walk up
        let mut step = std::f64::consts::LN_2;
        loop {
            let b = a + step;
            let gb = g(b);
            if gb <= 0.0 {
                lo = a;
                glo = ga;
                hi = b;
                ghi = gb;
                break;
            }
            a = b;
            ga = gb;
            step *= 2.0;
            if a > 700.0 {
                return Err(Error::Bracket("modular stays above 1 for lambda up to e^700".into()));
            }
        }
    } else {
        let mut step = std::f64::consts::LN_2;
        loop {
            let b = a - step;
            let gb = g(b);
            if gb > 0.0 {
                lo = b;
                glo = gb;
                hi = a;
                ghi = ga;
                break;
            }
            a = b;
            ga = gb;
            step *= 2.0;
            if a < -700.0 {
                return Err(Error::Bracket("modular stays below 1 for lambda down to e^-700".into()));
            }
        }
    }
    // invariant: g(lo) > 0 >= g(hi)
    let mut side = 0i32;
    for _ in 0..200 {
        if (hi - lo) <= LAMBDA_RTOL {
            break;
        }
        let mid = if glo.is_finite() && ghi.is_finite() && ghi < 0.0 {
            let t = lo + (hi - lo) * glo / (glo - ghi);
            if t > lo && t < hi {
                t
            } else {
                0.5 * (lo + hi)
            }
        } else {
            0.5 * (lo + hi)
        };
        let gm = g(mid);
        if gm > 0.0 {
            lo = mid;
            glo = gm;
            if side == -1 {
                ghi *= 0.5;
            }
            side = -1;
        } else {
            hi = mid;
            ghi = gm;
            if gm == 0.0 {
                break;
            }
            if side == 1 {
                glo *= 0.5;
            }
            side = 1;
        }
    }
    Ok(hi.exp())
}

/// Luxemburg seminorm `inf{lambda > 0 : modular(lambda) <= 1}`.
pub fn luxemburg_seminorm(u: &SampledFunction, phi: &YoungFunction, beta: f64) -> Result<f64> {
    if u.len() < 2 || u.is_constant() {
        return Ok(0.0);
    }
    let pairs = PairSet::new(u, beta);
    if let Some(p) = phi.pure_power() {
        // homogeneous modular: M(lambda) = lambda^-p M(1)
        return Ok(pairs.sum(|d| phi.eval(d)).powf(1.0 / p));
    }
    let guess = u.max() - u.min();
    let lambda = luxemburg_root(
        |l| {
            let inv = 1.0 / l;
            pairs.sum(|d| phi.eval(d * inv))
        },
        guess,
    )?;
    Ok(lambda)
}

/// Luxemburg norm of the single integral `sum psi(|u_i|/lambda) h^n <= 1`.
pub fn orlicz_norm(u: &SampledFunction, psi: &YoungFunction) -> Result<f64> {
    let amax = u.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if amax == 0.0 {
        return Ok(0.0);
    }
    let hn = u.grid().cell_measure();
    luxemburg_root(
        |l| {
            let inv = 1.0 / l;
            hn * compensated(u.values().iter().map(|v| psi.eval(v.abs() * inv)))
        },
        amax,
    )
}

/// `(c*, min_c ||u - c||_{L^psi})` by ternary search over `[min u, max u]`.
pub fn inf_centered_norm(u: &SampledFunction, psi: &YoungFunction) -> Result<(f64, f64)> {
    let (mut a, mut b) = (u.min(), u.max());
    if u.is_empty() {
        return Err(Error::Empty("function support"));
    }
    if a == b {
        return Ok((a, 0.0));
    }
    let tol = 1e-6 * (b - a);
    let f = |c: f64| orlicz_norm(&u.map("centered", |v| v - c), psi);
    while b - a > tol {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if f(m1)? <= f(m2)? {
            b = m2;
        } else {
            a = m1;
        }
    }
    let c = 0.5 * (a + b);
    Ok((c, f(c)?))
}

fn region_values<'a, F: Fn(Point) -> bool + 'a>(
    u: &'a SampledFunction,
    region: F,
) -> impl Iterator<Item = f64> + 'a {
    let grid = u.grid().clone();
    u.cells()
        .iter()
        .zip(u.values())
        .filter(move |(&c, _)| region(grid.center(c as usize)))
        .map(|(_, &v)| v)
}

/// Cell mean of `u` over the cells whose centers satisfy `region`.
pub fn average<F: Fn(Point) -> bool>(u: &SampledFunction, region: F) -> Result<f64> {
    let vals: Vec<f64> = region_values(u, region).collect();
    if vals.is_empty() {
        return Err(Error::Empty("averaging region"));
    }
    Ok(compensated(vals.iter().copied()) / vals.len() as f64)
}

/// Median `inf{c : #{u > c} <= N/2}` in cell-counting measure.
pub fn median<F: Fn(Point) -> bool>(u: &SampledFunction, region: F) -> Result<f64> {
    let mut vals: Vec<f64> = region_values(u, region).collect();
    if vals.is_empty() {
        return Err(Error::Empty("median region"));
    }
    vals.sort_by(f64::total_cmp);
    let n = vals.len();
    // #{u > v_k} = n - (index one past the last copy of v_k)
    let mut k = 0;
    while k < n {
        let v = vals[k];
        let end = vals.partition_point(|&x| x <= v);
        if 2 * (n - end) <= n {
            return Ok(v);
        }
        k = end;
    }
    Ok(vals[n - 1])
}

/// Pointwise clamp to `[-level, level]`.
pub fn truncate(u: &SampledFunction, level: f64) -> Result<SampledFunction> {
    if !(level > 0.0) {
        return Err(crate::error::invalid("N", level, "truncation level must be > 0"));
    }
    Ok(u.map(&format!("{}_N{level}", u.name()), |v| v.clamp(-level, level)))
}
