use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::decompose::{box_grid, whitney_decompose, WhitneyDecomposition};
use super::partition::{LipschitzReport, PartitionOfUnity};
use super::reflect::{reflect, reflect_point, ReflectMode, ReflectedCube, ReflectionStats, DEFAULT_REFLECT_SCALE, MAX_ENLARGEMENTS};
use crate::error::{Error, Result};
use crate::geometry::{ahlfors_theta, dist, AhlforsReport, CellKind, Domain, Grid, Point};
use crate::norms::SampledFunction;
use crate::sum::compensated;

/// Build parameters for [`ExtensionOperator`].
#[derive(Debug, Clone, Serialize)]
pub struct ExtensionConfig {
    /// Cells per side of the truncation box.
    pub resolution: usize,
    pub max_level: Option<u32>,
    /// Reflected cube side relative to `l_Q`.
    pub reflect_scale: f64,
    /// Doublings allowed when a reflected region holds no cell.
    pub max_enlargements: u32,
    /// Upper bound on the number of Ahlfors sample points.
    pub ahlfors_samples: usize,
}

impl Default for ExtensionConfig {
    fn default() -> Self {
        Self {
            resolution: 48,
            max_level: None,
            reflect_scale: DEFAULT_REFLECT_SCALE,
            max_enlargements: MAX_ENLARGEMENTS,
            ahlfors_samples: 64,
        }
    }
}

#[derive(Debug, Clone)]
enum CellRule {
    /// Position in the domain cell list.
    Domain(usize),
    Boundary,
    /// `(reflected cube, phi_Q)` pairs.
    Combination(Vec<(u32, f64)>),
    /// Average over a region built for an uncovered cell.
    Virtual(Arc<Vec<u32>>),
}

/// Counts describing how the complement cells were filled.
#[derive(Debug, Clone, Serialize)]
pub struct ExtensionSummary {
    pub resolution: usize,
    pub h: f64,
    pub cubes: usize,
    pub discarded: usize,
    pub gamma0_observed: usize,
    pub domain_cells: usize,
    pub boundary_cells: usize,
    pub combination_cells: usize,
    pub virtual_cells: usize,
    /// Virtual cells that fell back to the nearest domain cell.
    pub nearest_fallbacks: usize,
    pub theta_hat: f64,
    pub reflection: ReflectionStats,
}

/// Linear extension from domain cells to the whole truncation-box grid.
#[derive(Debug, Clone)]
pub struct ExtensionOperator {
    domain: Arc<Domain>,
    decomposition: Arc<WhitneyDecomposition>,
    partition: PartitionOfUnity,
    reflected: Vec<ReflectedCube>,
    ahlfors: AhlforsReport,
    rules: Vec<CellRule>,
    domain_cells: Arc<Vec<u32>>,
    box_cells: Arc<Vec<u32>>,
    summary: ExtensionSummary,
}

/// Deterministic Ahlfors scan on `grid`: strided inside cells, radii halving
/// from the domain scale down to four cells.
pub fn grid_ahlfors(domain: &Domain, grid: &Grid, samples: usize) -> Result<AhlforsReport> {
    let inside = grid.inside_cells();
    if inside.is_empty() {
        return Err(Error::Empty("domain cells on the grid"));
    }
    let stride = inside.len().div_ceil(samples.max(1));
    let pts: Vec<Point> = inside.iter().step_by(stride).map(|&c| grid.center(c as usize)).collect();
    let b = domain.bbox();
    let top = domain.diam().min((0..domain.dim()).map(|a| b.extent(a)).fold(0.0, f64::max));
    let mut radii = Vec::new();
    let mut r = top;
    while r >= 4.0 * grid.h() || radii.is_empty() {
        radii.push(r);
        r *= 0.5;
    }
    ahlfors_theta(domain, grid, &pts, &radii)
}

impl ExtensionOperator {
    pub fn build(domain: Arc<Domain>, config: &ExtensionConfig) -> Result<Self> {
        let grid = Arc::new(box_grid(domain.clone(), config.resolution)?);
        let ahlfors = grid_ahlfors(&domain, &grid, config.ahlfors_samples)?;
        if !(ahlfors.theta_hat > 0.0) {
            return Err(Error::Precondition("Ahlfors constant must be positive".into()));
        }
        let decomposition = Arc::new(whitney_decompose(domain.clone(), grid.clone(), config.max_level)?);
        let (reflected, reflection) = reflect(&decomposition, ahlfors.theta_hat, config.reflect_scale, config.max_enlargements)?;
        let partition = PartitionOfUnity::new(decomposition.clone());
        let l_min = decomposition
            .cubes
            .iter()
            .map(|c| c.side)
            .fold(f64::INFINITY, f64::min);
        let l_min = if l_min.is_finite() { l_min } else { 2.0 * grid.h() };

        let domain_cells = Arc::new(grid.inside_cells().to_vec());
        let mut position = vec![usize::MAX; grid.len()];
        for (k, &c) in domain_cells.iter().enumerate() {
            position[c as usize] = k;
        }
        let rules: Vec<(CellRule, bool)> = (0..grid.len())
            .into_par_iter()
            .map(|c| match grid.kind(c) {
                CellKind::Inside => (CellRule::Domain(position[c]), false),
                CellKind::Boundary => (CellRule::Boundary, false),
                CellKind::Outside => {
                    let x = grid.center(c);
                    let w = partition.weights(x);
                    if !w.is_empty() {
                        return (CellRule::Combination(w.into_iter().map(|(q, v)| (q as u32, v)).collect()), false);
                    }
                    match reflect_point(&grid, x, l_min, config.reflect_scale, config.max_enlargements) {
                        Some((_, cells, _)) => (CellRule::Virtual(Arc::new(cells)), false),
                        None => {
                            let anchor = domain.project(x);
                            let nearest = domain_cells
                                .iter()
                                .copied()
                                .min_by(|&a, &b| {
                                    dist(grid.center(a as usize), anchor).total_cmp(&dist(grid.center(b as usize), anchor))
                                })
                                .expect("domain cells are nonempty");
                            (CellRule::Virtual(Arc::new(vec![nearest])), true)
                        }
                    }
                }
            })
            .collect();
        let nearest_fallbacks = rules.iter().filter(|r| r.1).count();
        let rules: Vec<CellRule> = rules.into_iter().map(|r| r.0).collect();
        let count = |f: fn(&CellRule) -> bool| rules.iter().filter(|r| f(r)).count();
        let summary = ExtensionSummary {
            resolution: config.resolution,
            h: grid.h(),
            cubes: decomposition.cubes.len(),
            discarded: decomposition.discarded,
            gamma0_observed: decomposition.gamma0_observed,
            domain_cells: domain_cells.len(),
            boundary_cells: count(|r| matches!(r, CellRule::Boundary)),
            combination_cells: count(|r| matches!(r, CellRule::Combination(_))),
            virtual_cells: count(|r| matches!(r, CellRule::Virtual(_))),
            nearest_fallbacks,
            theta_hat: ahlfors.theta_hat,
            reflection,
        };
        let box_cells = Arc::new(grid.all_cells());
        Ok(Self {
            domain,
            decomposition,
            partition,
            reflected,
            ahlfors,
            rules,
            domain_cells,
            box_cells,
            summary,
        })
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.decomposition.grid()
    }

    pub fn decomposition(&self) -> &Arc<WhitneyDecomposition> {
        &self.decomposition
    }

    pub fn partition(&self) -> &PartitionOfUnity {
        &self.partition
    }

    pub fn reflected(&self) -> &[ReflectedCube] {
        &self.reflected
    }

    pub fn ahlfors(&self) -> &AhlforsReport {
        &self.ahlfors
    }

    pub fn summary(&self) -> &ExtensionSummary {
        &self.summary
    }

    /// Cells of the domain, in the order expected by [`Self::extend`].
    pub fn domain_cells(&self) -> &Arc<Vec<u32>> {
        &self.domain_cells
    }

    /// Sample `f` on the domain cells of the box grid.
    pub fn sample<F: Fn(Point) -> f64>(&self, name: &str, f: F) -> SampledFunction {
        SampledFunction::on_cells(self.grid().clone(), self.domain_cells.clone(), name, f)
    }

    pub fn lipschitz(&self, extra: &[Point]) -> LipschitzReport {
        self.partition.measure_lipschitz(extra)
    }

    /// `u_{Q*}` for every accepted cube.
    pub fn cube_averages(&self, u: &SampledFunction) -> Result<Vec<f64>> {
        let lookup = self.lookup(u)?;
        let whole = compensated(lookup.iter().copied().filter(|v| !v.is_nan())) / self.domain_cells.len() as f64;
        Ok(self
            .reflected
            .par_iter()
            .map(|r| match r.mode {
                ReflectMode::Large => whole,
                ReflectMode::Small => region_mean(&lookup, &r.cells),
            })
            .collect())
    }

    fn lookup(&self, u: &SampledFunction) -> Result<Vec<f64>> {
        let same = Arc::ptr_eq(u.grid(), self.grid()) || u.grid().shape() == self.grid().shape();
        if !same || u.cells().as_slice() != self.domain_cells.as_slice() {
            return Err(Error::Precondition(
                "extension input must be sampled on the operator's domain cells".into(),
            ));
        }
        let mut lookup = vec![f64::NAN; self.grid().len()];
        for (&c, &v) in self.domain_cells.iter().zip(u.values()) {
            lookup[c as usize] = v;
        }
        Ok(lookup)
    }

    /// `Eu` on every cell of the truncation box.
    pub fn extend(&self, u: &SampledFunction) -> Result<SampledFunction> {
        let averages = self.cube_averages(u)?;
        let lookup = self.lookup(u)?;
        let values: Vec<f64> = self
            .rules
            .par_iter()
            .map(|rule| match rule {
                CellRule::Domain(k) => u.values()[*k],
                CellRule::Boundary => 0.0,
                CellRule::Combination(w) => compensated(w.iter().map(|&(q, v)| v * averages[q as usize])),
                CellRule::Virtual(cells) => region_mean(&lookup, cells),
            })
            .collect();
        SampledFunction::from_values(self.grid().clone(), self.box_cells.clone(), values, &format!("E[{}]", u.name()))
    }
}

fn region_mean(lookup: &[f64], cells: &[u32]) -> f64 {
    compensated(cells.iter().map(|&c| lookup[c as usize])) / cells.len() as f64
}
