use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{dist, Domain, Grid, Point};
use crate::norms::{truncate, SampledFunction};

/// A cutoff `u_{x,r,t}`; with `grid_units` all three are multiples of the
/// cell size `h` (the center measured from the origin).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub x: [f64; 2],
    pub r: f64,
    pub t: f64,
    #[serde(default)]
    pub grid_units: bool,
}

impl CutoffSpec {
    pub fn resolve(&self, h: f64) -> (Point, f64, f64) {
        if self.grid_units {
            ([self.x[0] * h, self.x[1] * h], self.r * h, self.t * h)
        } else {
            (self.x, self.r, self.t)
        }
    }
}

/// Generator of test functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    /// `x^a y^b` with `1 <= a + b <= max_degree`.
    Polynomials { max_degree: u32 },
    /// `(1 - |x - c_k|^2 / rho^2)_+^2` around points on a circle.
    RadialBumps { count: usize },
    /// Seeded sums of `terms` cosines.
    Trig { count: usize, seed: u64, terms: usize },
    Cutoffs { cases: Vec<CutoffSpec> },
    /// Each base member clamped at the given fractions of its sup norm.
    Truncations { base: Box<FamilySpec>, fractions: Vec<f64> },
}

type Formula = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

#[derive(Clone)]
enum MemberKind {
    Formula(Formula),
    Cutoff(CutoffSpec),
    Truncated(Box<Member>, f64),
}

/// One test function, sampled on demand.
#[derive(Clone)]
pub struct Member {
    pub label: String,
    kind: MemberKind,
}

impl fmt::Debug for Member {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Member").field("label", &self.label).finish()
    }
}

impl Member {
    pub fn formula<F: Fn(Point) -> f64 + Send + Sync + 'static>(label: &str, f: F) -> Self {
        Self {
            label: label.to_string(),
            kind: MemberKind::Formula(Arc::new(f)),
        }
    }

    /// Sample on `cells` of `grid`.
    pub fn sample(&self, grid: &Arc<Grid>, cells: &Arc<Vec<u32>>) -> Result<SampledFunction> {
        match &self.kind {
            MemberKind::Formula(f) => Ok(SampledFunction::on_cells(grid.clone(), cells.clone(), &self.label, |x| f(x))),
            MemberKind::Cutoff(spec) => {
                let (x, r, t) = spec.resolve(grid.h());
                check_cutoff(grid.domain(), x, r, t)?;
                Ok(SampledFunction::on_cells(grid.clone(), cells.clone(), &self.label, |z| {
                    cutoff_profile(x, r, t, z)
                }))
            }
            MemberKind::Truncated(base, fraction) => {
                let u = base.sample(grid, cells)?;
                let sup = u.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if sup == 0.0 {
                    return Ok(u.with_name(&self.label));
                }
                Ok(truncate(&u, fraction * sup)?.with_name(&self.label))
            }
        }
    }

    /// Sample on the inside cells of `grid`.
    pub fn sample_inside(&self, grid: &Arc<Grid>) -> Result<SampledFunction> {
        let cells = Arc::new(grid.inside_cells().to_vec());
        self.sample(grid, &cells)
    }
}

fn cutoff_profile(x: Point, r: f64, t: f64, z: Point) -> f64 {
    let d = dist(x, z);
    if d <= r {
        1.0
    } else if d >= t {
        0.0
    } else {
        (t - d) / (t - r)
    }
}

fn check_cutoff(domain: &Domain, x: Point, r: f64, t: f64) -> Result<()> {
    if !domain.inside(x) {
        return Err(Error::Precondition(format!("cutoff center {x:?} is not inside {}", domain.name())));
    }
    if !(r > 0.0) {
        return Err(invalid("r", r, "must be > 0"));
    }
    if !(t > r) {
        return Err(invalid("t", t, "must exceed r"));
    }
    if !(t < domain.diam()) {
        return Err(invalid("t", t, "must be below diam"));
    }
    Ok(())
}

/// `u_{x,r,t}` on the inside cells: 1 on `B(x,r)`, the linear ramp
/// `(t - |x - z|)/(t - r)` on the annulus, 0 beyond `t`.
pub fn make_cutoff(grid: &Arc<Grid>, x: Point, r: f64, t: f64) -> Result<SampledFunction> {
    check_cutoff(grid.domain(), x, r, t)?;
    Ok(SampledFunction::on_inside(grid.clone(), &format!("cutoff({},{};{r},{t})", x[0], x[1]), |z| {
        cutoff_profile(x, r, t, z)
    }))
}

/// Members of `spec` scaled to `domain`.
pub fn members(spec: &FamilySpec, domain: &Domain) -> Result<Vec<Member>> {
    let dim = domain.dim();
    let b = domain.bbox();
    let c = b.center();
    let scale = 0.5 * (0..dim).map(|a| b.extent(a)).fold(0.0, f64::max);
    match spec {
        FamilySpec::Polynomials { max_degree } => {
            if *max_degree == 0 {
                return Err(invalid("max_degree", 0.0, "must be >= 1"));
            }
            let mut out = Vec::new();
            for deg in 1..=*max_degree as i32 {
                for b_exp in 0..=deg {
                    if dim == 1 && b_exp > 0 {
                        continue;
                    }
                    let a_exp = deg - b_exp;
                    out.push(Member::formula(&format!("x^{a_exp}y^{b_exp}"), move |x| {
                        x[0].powi(a_exp) * x[1].powi(b_exp)
                    }));
                }
            }
            Ok(out)
        }
        FamilySpec::RadialBumps { count } => Ok((0..*count)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / *count as f64;
                let ck = if dim == 1 {
                    [c[0] + 0.3 * scale * th.cos(), 0.0]
                } else {
                    [c[0] + 0.3 * scale * th.cos(), c[1] + 0.3 * scale * th.sin()]
                };
                let rho = 0.6 * scale;
                Member::formula(&format!("bump{k}"), move |x| {
                    let s = 1.0 - (dist(x, ck) / rho).powi(2);
                    if s > 0.0 {
                        s * s
                    } else {
                        0.0
                    }
                })
            })
            .collect()),
        FamilySpec::Trig { count, seed, terms } => {
            if *terms == 0 {
                return Err(invalid("terms", 0.0, "must be >= 1"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut out = Vec::with_capacity(*count);
            for k in 0..*count {
                let coeffs: Vec<(f64, [f64; 2], f64)> = (0..*terms)
                    .map(|_| {
                        let a = rng.random_range(-1.0..1.0);
                        let w = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
                        let ph = rng.random_range(0.0..2.0 * PI);
                        (a, if dim == 1 { [w[0], 0.0] } else { w }, ph)
                    })
                    .collect();
                out.push(Member::formula(&format!("trig{seed}_{k}"), move |x| {
                    let y = [(x[0] - c[0]) / scale, (x[1] - c[1]) / scale];
                    coeffs.iter().map(|&(a, w, ph)| a * (w[0] * y[0] + w[1] * y[1] + ph).cos()).sum()
                }));
            }
            Ok(out)
        }
        FamilySpec::Cutoffs { cases } => Ok(cases
            .iter()
            .map(|s| Member {
                label: format!(
                    "cutoff({},{};{},{}{})",
                    s.x[0],
                    s.x[1],
                    s.r,
                    s.t,
                    if s.grid_units { ";h" } else { "" }
                ),
                kind: MemberKind::Cutoff(*s),
            })
            .collect()),
        FamilySpec::Truncations { base, fractions } => {
            for &f in fractions {
                if !(f > 0.0) {
                    return Err(invalid("fraction", f, "must be > 0"));
                }
            }
            let base = members(base, domain)?;
            Ok(base
                .iter()
                .flat_map(|m| {
                    fractions.iter().map(move |&f| Member {
                        label: format!("{}_N{f}", m.label),
                        kind: MemberKind::Truncated(Box::new(m.clone()), f),
                    })
                })
                .collect())
        }
    }
}
