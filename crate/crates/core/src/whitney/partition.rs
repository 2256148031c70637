use std::sync::{Arc, OnceLock};

use serde::Serialize;

use super::decompose::WhitneyDecomposition;
use crate::geometry::Point;
use crate::quadrature::integrate;

const STEP_INTERVALS: usize = 8192;

/// Tabulated `S(z) = ∫_0^z psi(2s-1) ds / ∫_0^1 psi(2s-1) ds` with
/// `psi(t) = exp(-1/(1-t^2))`, interpolated by cubic Hermite.
struct SmoothStep {
    values: Vec<f64>,
    slopes: Vec<f64>,
}

fn bump_density(z: f64) -> f64 {
    let t = 2.0 * z - 1.0;
    let q = 1.0 - t * t;
    if q <= 0.0 {
        0.0
    } else {
        (-1.0 / q).exp()
    }
}

impl SmoothStep {
    fn build() -> Self {
        let n = STEP_INTERVALS;
        let dz = 1.0 / n as f64;
        let mut values = Vec::with_capacity(n + 1);
        let mut acc = crate::sum::Neumaier::new();
        values.push(0.0);
        for k in 0..n {
            let a = k as f64 * dz;
            let r = integrate(bump_density, a, a + dz, 1e-13, 1e-19);
            acc.add(r.value);
            values.push(acc.value());
        }
        let total = acc.value();
        for v in values.iter_mut() {
            *v /= total;
        }
        let slopes = (0..=n).map(|k| bump_density(k as f64 * dz) / total).collect();
        Self { values, slopes }
    }

    fn get() -> &'static SmoothStep {
        static STEP: OnceLock<SmoothStep> = OnceLock::new();
        STEP.get_or_init(SmoothStep::build)
    }

    fn eval(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        if z >= 1.0 {
            return 1.0;
        }
        let n = STEP_INTERVALS;
        let x = z * n as f64;
        let k = (x.floor() as usize).min(n - 1);
        let s = x - k as f64;
        let dz = 1.0 / n as f64;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.slopes[k] * dz, self.slopes[k + 1] * dz);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * m1
    }
}

/// Smooth cutoff: 1 on `[-1/2, 1/2]`, 0 outside `[-17/32, 17/32]`.
pub fn cutoff(t: f64) -> f64 {
    let a = t.abs();
    if a <= 0.5 {
        1.0
    } else if a >= 17.0 / 32.0 {
        0.0
    } else {
        SmoothStep::get().eval((17.0 / 32.0 - a) * 32.0)
    }
}

/// Normalized bumps `phi_Q = b_Q / sum_P b_P` over a decomposition.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    decomposition: Arc<WhitneyDecomposition>,
    /// Cell radius of the owner-map window searched around a point.
    reach: isize,
}

/// Finite-difference estimate of `sup_Q l_Q |grad phi_Q|`.
#[derive(Debug, Clone, Serialize)]
pub struct LipschitzReport {
    pub l_measured: f64,
    pub argmax: Point,
    pub samples: usize,
}

impl PartitionOfUnity {
    pub fn new(decomposition: Arc<WhitneyDecomposition>) -> Self {
        let max_side = decomposition.cubes.iter().map(|c| c.side_cells).max().unwrap_or(1);
        let reach = (max_side as f64 / 32.0).ceil() as isize + 1;
        Self { decomposition, reach }
    }

    pub fn decomposition(&self) -> &Arc<WhitneyDecomposition> {
        &self.decomposition
    }

    /// `b_Q(x)`.
    pub fn bump(&self, q: usize, x: Point) -> f64 {
        let c = &self.decomposition.cubes[q];
        let dim = self.decomposition.dim();
        (0..dim).map(|a| cutoff((x[a] - c.center[a]) / c.side)).product()
    }

    /// Cubes whose `(17/16)`-expansion may contain `x`, ascending.
    fn candidates(&self, x: Point) -> Vec<usize> {
        let grid = self.decomposition.grid();
        let dim = grid.dim();
        let o = grid.origin();
        let h = grid.h();
        let [nx, ny] = grid.shape();
        let i = ((x[0] - o[0]) / h).floor() as isize;
        let j = if dim == 1 { 0 } else { ((x[1] - o[1]) / h).floor() as isize };
        let r = self.reach;
        let (jlo, jhi) = if dim == 1 { (0, 0) } else { (j - r, j + r) };
        let mut out = Vec::new();
        for jj in jlo.max(0)..=jhi.min(ny as isize - 1) {
            for ii in (i - r).max(0)..=(i + r).min(nx as isize - 1) {
                if let Some(q) = self.decomposition.owner_of(grid.index(ii as usize, jj as usize)) {
                    out.push(q);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// `sum_P b_P(x)`.
    pub fn total(&self, x: Point) -> f64 {
        self.candidates(x).into_iter().map(|q| self.bump(q, x)).sum()
    }

    /// Nonzero `(Q, phi_Q(x))`, ascending in `Q`; empty where no bump reaches.
    pub fn weights(&self, x: Point) -> Vec<(usize, f64)> {
        let raw: Vec<(usize, f64)> = self
            .candidates(x)
            .into_iter()
            .map(|q| (q, self.bump(q, x)))
            .filter(|&(_, b)| b > 0.0)
            .collect();
        let total: f64 = raw.iter().map(|&(_, b)| b).sum();
        if total <= 0.0 {
            return Vec::new();
        }
        raw.into_iter().map(|(q, b)| (q, b / total)).collect()
    }

    /// `phi_Q(x)`.
    pub fn value(&self, q: usize, x: Point) -> f64 {
        self.weights(x)
            .into_iter()
            .find(|&(p, _)| p == q)
            .map_or(0.0, |(_, w)| w)
    }

    /// Central-difference gradients `l_P |grad phi_P(x)|` of every weight at `x`.
    pub fn scaled_gradients(&self, x: Point) -> Vec<(usize, f64)> {
        let dim = self.decomposition.dim();
        let base = self.weights(x);
        let lmin = base
            .iter()
            .map(|&(q, _)| self.decomposition.cubes[q].side)
            .fold(f64::INFINITY, f64::min);
        if !lmin.is_finite() {
            return Vec::new();
        }
        let eta = 1e-5 * lmin;
        let mut grads = vec![[0.0f64; 2]; base.len()];
        for a in 0..dim {
            let mut xp = x;
            let mut xm = x;
            xp[a] += eta;
            xm[a] -= eta;
            let wp = self.weights(xp);
            let wm = self.weights(xm);
            let look = |w: &[(usize, f64)], q: usize| w.iter().find(|&&(p, _)| p == q).map_or(0.0, |&(_, v)| v);
            for (k, &(q, _)) in base.iter().enumerate() {
                grads[k][a] = (look(&wp, q) - look(&wm, q)) / (2.0 * eta);
            }
        }
        base.iter()
            .zip(grads)
            .map(|(&(q, _), g)| (q, self.decomposition.cubes[q].side * (g[0] * g[0] + g[1] * g[1]).sqrt()))
            .collect()
    }

    /// Sample points across the transition bands of every cube, restricted to
    /// points where some bump is positive.
    pub fn band_samples(&self) -> Vec<Point> {
        let dim = self.decomposition.dim();
        let offsets = [0.5 + 1.0 / 128.0, 33.0 / 64.0, 17.0 / 32.0 - 1.0 / 128.0];
        let tangential: Vec<f64> = (0..17).map(|k| -17.0 / 32.0 + k as f64 * (17.0 / 16.0) / 16.0).collect();
        let mut out = Vec::new();
        for c in &self.decomposition.cubes {
            for &off in &offsets {
                for sign in [-1.0, 1.0] {
                    if dim == 1 {
                        out.push([c.center[0] + sign * off * c.side, 0.0]);
                        continue;
                    }
                    for &t in &tangential {
                        out.push([c.center[0] + sign * off * c.side, c.center[1] + t * c.side]);
                        out.push([c.center[0] + t * c.side, c.center[1] + sign * off * c.side]);
                    }
                }
            }
        }
        out.retain(|&x| self.total(x) > 0.0);
        out
    }

    /// Largest `l_Q |grad phi_Q|` over the band samples and `extra`.
    pub fn measure_lipschitz(&self, extra: &[Point]) -> LipschitzReport {
        use rayon::prelude::*;
        let mut pts = self.band_samples();
        pts.extend(extra.iter().copied().filter(|&x| self.total(x) > 0.0));
        let best = pts
            .par_iter()
            .map(|&x| {
                let m = self.scaled_gradients(x).into_iter().map(|(_, g)| g).fold(0.0, f64::max);
                (m, x)
            })
            .reduce(|| (0.0, [0.0; 2]), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
        LipschitzReport {
            l_measured: best.0,
            argmax: best.1,
            samples: pts.len(),
        }
    }
}
