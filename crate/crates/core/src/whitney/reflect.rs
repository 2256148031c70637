use std::sync::Arc;

use serde::Serialize;

use super::decompose::WhitneyDecomposition;
use crate::error::{Error, Result};
use crate::geometry::{Grid, Point};

/// Default side of a reflected cube, relative to `l_Q`.
pub const DEFAULT_REFLECT_SCALE: f64 = 0.5;

/// Default number of doublings tried before a reflected region is declared empty.
pub const MAX_ENLARGEMENTS: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReflectMode {
    /// `Q* = cube(x*_Q, s l_Q) ∩ Ω ∩ 10Q`.
    Small,
    /// `Q* = Ω`.
    Large,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReflectedCube {
    pub mode: ReflectMode,
    /// Nearest boundary point to the cube center.
    pub anchor: Point,
    /// Inside cells of the region.
    #[serde(skip)]
    pub cells: Arc<Vec<u32>>,
    pub measure: f64,
    pub enlargements: u32,
}

/// Summary statistics of a reflection.
#[derive(Debug, Clone, Serialize)]
pub struct ReflectionStats {
    pub epsilon0: f64,
    pub scale: f64,
    pub small: usize,
    pub large: usize,
    pub enlarged: usize,
    /// `max |Q| / |Q*|` over small cubes.
    pub gamma1_observed: f64,
    /// Largest number of small-mode regions sharing one cell.
    pub gamma2_observed: usize,
    /// Largest overlap over `W^(k)` for `k = 0, 1, 2`, all modes included.
    pub overlap_by_iterate: [usize; 3],
}

/// Inside cells in `cube(anchor, side) ∩ cube(center, 10 l)`.
pub(crate) fn region_cells(grid: &Grid, anchor: Point, side: f64, center: Point, l: f64) -> Vec<u32> {
    let dim = grid.dim();
    let h = grid.h();
    let o = grid.origin();
    let [nx, ny] = grid.shape();
    let half = 0.5 * side;
    let mut lo = [0usize; 2];
    let mut hi = [0usize; 2];
    for a in 0..dim {
        let n = if a == 0 { nx } else { ny };
        let from = (anchor[a] - half).max(center[a] - 5.0 * l);
        let to = (anchor[a] + half).min(center[a] + 5.0 * l);
        if from > to {
            return Vec::new();
        }
        // one cell of slack either way; membership is decided below
        lo[a] = (((from - o[a]) / h - 1.5).ceil().max(0.0) as usize).min(n);
        hi[a] = (((to - o[a]) / h + 0.5).floor() + 1.0).clamp(0.0, n as f64) as usize;
    }
    if dim == 1 {
        lo[1] = 0;
        hi[1] = 1;
    }
    let mut out = Vec::new();
    for j in lo[1]..hi[1] {
        for i in lo[0]..hi[0] {
            let c = grid.index(i, j);
            if grid.kind(c) != crate::geometry::CellKind::Inside {
                continue;
            }
            let p = grid.center(c);
            let ok = (0..dim).all(|a| (p[a] - anchor[a]).abs() <= half && (p[a] - center[a]).abs() <= 5.0 * l);
            if ok {
                out.push(c as u32);
            }
        }
    }
    out
}

/// Small-mode region around the projection of `center`, doubling the side up
/// to `enlargements` times when it holds no cell.
pub(crate) fn reflect_point(
    grid: &Grid,
    center: Point,
    l: f64,
    scale: f64,
    enlargements: u32,
) -> Option<(Point, Vec<u32>, u32)> {
    let anchor = grid.domain().project(center);
    for k in 0..=enlargements {
        let side = scale * l * f64::powi(2.0, k as i32);
        let cells = region_cells(grid, anchor, side, center, l);
        if !cells.is_empty() {
            return Some((anchor, cells, k));
        }
    }
    None
}

/// Reflected cube for every accepted cube. Cubes with `l_Q >= diam / epsilon0`
/// use the whole domain; the rest use a cube of side `scale * l_Q` at the
/// nearest boundary point.
pub fn reflect(
    decomposition: &WhitneyDecomposition,
    theta: f64,
    scale: f64,
    enlargements: u32,
) -> Result<(Vec<ReflectedCube>, ReflectionStats)> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(crate::error::invalid("scale", scale, "must be positive"));
    }
    let grid = decomposition.grid();
    let domain = decomposition.domain();
    let dim = grid.dim() as i32;
    let hn = grid.cell_measure();
    let eps0 = decomposition.epsilon0(theta);
    let cap = domain.diam() / eps0;
    let all: Arc<Vec<u32>> = Arc::new(grid.inside_cells().to_vec());
    if all.is_empty() {
        return Err(Error::Empty("domain cells on the Whitney grid"));
    }
    let mut out = Vec::with_capacity(decomposition.cubes.len());
    for (q, cube) in decomposition.cubes.iter().enumerate() {
        if cube.side >= cap {
            out.push(ReflectedCube {
                mode: ReflectMode::Large,
                anchor: domain.project(cube.center),
                measure: all.len() as f64 * hn,
                cells: all.clone(),
                enlargements: 0,
            });
            continue;
        }
        let Some((anchor, cells, k)) = reflect_point(grid, cube.center, cube.side, scale, enlargements) else {
            return Err(Error::EmptyReflection(format!(
                "#{q} (level {}, side {:.4e}, center {:?}) after {enlargements} enlargements",
                cube.level, cube.side, cube.center
            )));
        };
        out.push(ReflectedCube {
            mode: ReflectMode::Small,
            anchor,
            measure: cells.len() as f64 * hn,
            cells: Arc::new(cells),
            enlargements: k,
        });
    }

    let gamma1 = decomposition
        .cubes
        .iter()
        .zip(&out)
        .filter(|(_, r)| r.mode == ReflectMode::Small)
        .map(|(c, r)| c.side.powi(dim) / r.measure)
        .fold(0.0, f64::max);
    let overlap = |set: &[usize], small_only: bool| -> usize {
        let mut count = vec![0usize; grid.len()];
        for &q in set {
            if small_only && out[q].mode != ReflectMode::Small {
                continue;
            }
            for &c in out[q].cells.iter() {
                count[c as usize] += 1;
            }
        }
        count.into_iter().max().unwrap_or(0)
    };
    let every: Vec<usize> = (0..out.len()).collect();
    let small_set = decomposition.small_cubes(eps0);
    let mut by_iterate = [0usize; 3];
    for (k, slot) in by_iterate.iter_mut().enumerate() {
        *slot = overlap(&decomposition.neighbor_iterate(&small_set, k), false);
    }
    let stats = ReflectionStats {
        epsilon0: eps0,
        scale,
        small: out.iter().filter(|r| r.mode == ReflectMode::Small).count(),
        large: out.iter().filter(|r| r.mode == ReflectMode::Large).count(),
        enlarged: out.iter().filter(|r| r.enlargements > 0).count(),
        gamma1_observed: gamma1,
        gamma2_observed: overlap(&every, true),
        overlap_by_iterate: by_iterate,
    };
    Ok((out, stats))
}
