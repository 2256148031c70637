use std::collections::BTreeSet;
use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{BBox, CellKind, Domain, Grid, Point};

/// Accepted dyadic cube of the truncated complement.
#[derive(Debug, Clone, Serialize)]
pub struct WhitneyCube {
    pub level: u32,
    /// Integer position in units of the cube side.
    pub coords: [i64; 2],
    /// Side length `l_Q`.
    pub side: f64,
    pub center: Point,
    /// Lower bound on `dist(Q, ∂Ω)`: `sdist(center)` minus the half-diagonal.
    pub dist_to_boundary: f64,
    /// Lower-left grid cell and side in cells.
    pub cell0: [usize; 2],
    pub side_cells: usize,
}

impl WhitneyCube {
    /// Does the closed cube scaled by `factor` about its center contain `x`?
    pub fn scaled_contains(&self, x: Point, factor: f64, dim: usize) -> bool {
        let half = 0.5 * factor * self.side;
        (0..dim).all(|a| (x[a] - self.center[a]).abs() <= half)
    }

    fn cell_range(&self, axis: usize) -> (usize, usize) {
        (self.cell0[axis], self.cell0[axis] + self.side_cells)
    }
}

/// Dyadic decomposition of the truncation box minus the closure of the domain.
#[derive(Debug, Clone)]
pub struct WhitneyDecomposition {
    pub(crate) domain: Arc<Domain>,
    pub(crate) grid: Arc<Grid>,
    pub cubes: Vec<WhitneyCube>,
    /// `N(Q)` without `Q` itself.
    pub neighbors: Vec<Vec<u32>>,
    /// Owning cube per grid cell, `u32::MAX` when uncovered.
    pub(crate) owner: Vec<u32>,
    /// `max_Q #N(Q)`, counting `Q` itself.
    pub gamma0_observed: usize,
    /// Cubes still meeting the complement when the finest level was reached.
    pub discarded: usize,
    /// Complement cells of the box covered by no accepted cube.
    pub uncovered_cells: usize,
    pub finest_side_cells: usize,
    pub truncation_box: BBox,
}

/// Square box three times the domain's bounding box, sharing its center.
pub fn truncation_box(domain: &Domain) -> BBox {
    let b = domain.bbox();
    let c = b.center();
    let dim = domain.dim();
    let half = 1.5 * (0..dim).map(|a| b.extent(a)).fold(0.0, f64::max);
    if dim == 1 {
        BBox {
            lo: [c[0] - half, 0.0],
            hi: [c[0] + half, 0.0],
        }
    } else {
        BBox {
            lo: [c[0] - half, c[1] - half],
            hi: [c[0] + half, c[1] + half],
        }
    }
}

/// Grid of `resolution` cells per side over [`truncation_box`].
pub fn box_grid(domain: Arc<Domain>, resolution: usize) -> Result<Grid> {
    if resolution < 4 {
        return Err(crate::error::invalid("resolution", resolution as f64, "need at least 4 cells"));
    }
    let b = truncation_box(&domain);
    let h = b.extent(0) / resolution as f64;
    Ok(Grid::with_layout(domain, b.lo, h, [resolution, resolution]))
}

/// Top-down dyadic decomposition over `grid`, which must cover a square box
/// with the same number of cells along each axis.
///
/// A cube is accepted once `sqrt(n) l <= sdist(center) - sqrt(n) l / 2`,
/// split while its side stays an even number of at least two grid cells (and
/// `max_level` allows), and discarded otherwise.
pub fn whitney_decompose(domain: Arc<Domain>, grid: Arc<Grid>, max_level: Option<u32>) -> Result<WhitneyDecomposition> {
    let dim = domain.dim();
    let [nx, ny] = grid.shape();
    if dim == 2 && nx != ny {
        return Err(Error::Precondition("Whitney grid must be square".into()));
    }
    let root = nx;
    let h = grid.h();
    let sqrt_n = (dim as f64).sqrt();
    let mut cubes = Vec::new();
    let mut discarded = 0usize;
    let mut finest = root;

    // explicit stack, children pushed in reverse so the traversal is
    // depth-first in (x, y) order
    let mut stack = vec![(0u32, [0usize, 0usize], root)];
    while let Some((level, cell0, side_cells)) = stack.pop() {
        let side = side_cells as f64 * h;
        let origin = grid.origin();
        let center = [
            origin[0] + (cell0[0] as f64 + 0.5 * side_cells as f64) * h,
            if dim == 1 { 0.0 } else { origin[1] + (cell0[1] as f64 + 0.5 * side_cells as f64) * h },
        ];
        let sd = domain.sdist(center);
        let half_diag = 0.5 * sqrt_n * side;
        let est = sd - half_diag;
        if est >= sqrt_n * side {
            cubes.push(WhitneyCube {
                level,
                coords: [(cell0[0] / side_cells) as i64, (cell0[1] / side_cells) as i64],
                side,
                center,
                dist_to_boundary: est,
                cell0,
                side_cells,
            });
            continue;
        }
        if sd <= -half_diag {
            // entirely inside the domain
            continue;
        }
        let can_split =
            side_cells % 2 == 0 && side_cells / 2 >= 2 && max_level.map_or(true, |m| level < m);
        if !can_split {
            discarded += 1;
            finest = finest.min(side_cells);
            continue;
        }
        let s = side_cells / 2;
        finest = finest.min(s);
        let children: Vec<[usize; 2]> = if dim == 1 {
            vec![[cell0[0], 0], [cell0[0] + s, 0]]
        } else {
            vec![
                [cell0[0], cell0[1]],
                [cell0[0] + s, cell0[1]],
                [cell0[0], cell0[1] + s],
                [cell0[0] + s, cell0[1] + s],
            ]
        };
        for c in children.into_iter().rev() {
            stack.push((level + 1, c, s));
        }
    }

    let mut owner = vec![u32::MAX; grid.len()];
    for (q, cube) in cubes.iter().enumerate() {
        let (x0, x1) = cube.cell_range(0);
        let (y0, y1) = if dim == 1 { (0, 1) } else { cube.cell_range(1) };
        for j in y0..y1 {
            for i in x0..x1 {
                owner[grid.index(i, j)] = q as u32;
            }
        }
    }
    let uncovered_cells = (0..grid.len())
        .filter(|&c| grid.kind(c) != CellKind::Inside && owner[c] == u32::MAX)
        .count();

    let neighbors = touching_pairs(&cubes, dim);
    let gamma0_observed = neighbors.iter().map(|n| n.len() + 1).max().unwrap_or(0);

    Ok(WhitneyDecomposition {
        truncation_box: grid.bbox(),
        domain,
        grid,
        cubes,
        neighbors,
        owner,
        gamma0_observed,
        discarded,
        uncovered_cells,
        finest_side_cells: finest,
    })
}

fn closed_overlap(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

fn open_overlap(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 < b.1 && b.0 < a.1
}

/// Neighbor lists by exhaustive comparison of closed cubes, swept along x.
fn touching_pairs(cubes: &[WhitneyCube], dim: usize) -> Vec<Vec<u32>> {
    let mut order: Vec<usize> = (0..cubes.len()).collect();
    order.sort_by_key(|&i| (cubes[i].cell0[0], cubes[i].cell0[1]));
    let mut out = vec![Vec::new(); cubes.len()];
    for (pos, &i) in order.iter().enumerate() {
        let a = &cubes[i];
        let ax = a.cell_range(0);
        for &j in &order[pos + 1..] {
            let b = &cubes[j];
            if b.cell0[0] > ax.1 {
                break;
            }
            let touch = closed_overlap(ax, b.cell_range(0))
                && (dim == 1 || closed_overlap(a.cell_range(1), b.cell_range(1)));
            if touch {
                out[i].push(j as u32);
                out[j].push(i as u32);
            }
        }
    }
    for n in out.iter_mut() {
        n.sort_unstable();
    }
    out
}

/// Result of the exhaustive invariant checks on a decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct WhitneyAudit {
    pub cubes: usize,
    pub distance_violations: usize,
    pub ratio_violations: usize,
    pub overlapping_pairs: usize,
    pub inside_hits: usize,
    pub gamma0_observed: usize,
    pub min_neighbor_ratio: f64,
    pub max_neighbor_ratio: f64,
}

impl WhitneyAudit {
    pub fn passed(&self) -> bool {
        self.distance_violations == 0
            && self.ratio_violations == 0
            && self.overlapping_pairs == 0
            && self.inside_hits == 0
            && self.gamma0_observed <= 12usize.pow(2)
    }
}

impl WhitneyDecomposition {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    /// Cube owning the grid cell, if covered.
    pub fn owner_of(&self, cell: usize) -> Option<usize> {
        match self.owner[cell] {
            u32::MAX => None,
            q => Some(q as usize),
        }
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Exhaustive pairwise checks: distance bounds, interior disjointness,
    /// neighbor side ratios, no accepted cube meeting the domain.
    pub fn audit(&self) -> WhitneyAudit {
        let dim = self.dim();
        let sqrt_n = (dim as f64).sqrt();
        let mut distance_violations = 0;
        let mut inside_hits = 0;
        for q in &self.cubes {
            let d = q.dist_to_boundary;
            if !(sqrt_n * q.side <= d * (1.0 + 1e-12) && d <= 4.0 * sqrt_n * q.side) {
                distance_violations += 1;
            }
            let (x0, x1) = q.cell_range(0);
            let (y0, y1) = if dim == 1 { (0, 1) } else { q.cell_range(1) };
            for j in y0..y1 {
                for i in x0..x1 {
                    if self.grid.kind(self.grid.index(i, j)) == CellKind::Inside {
                        inside_hits += 1;
                    }
                }
            }
        }
        let mut overlapping_pairs = 0;
        let mut ratio_violations = 0;
        let (mut rmin, mut rmax) = (f64::INFINITY, 0.0f64);
        let m = self.cubes.len();
        for i in 0..m {
            let a = &self.cubes[i];
            for j in i + 1..m {
                let b = &self.cubes[j];
                let (ax, bx) = (a.cell_range(0), b.cell_range(0));
                let (ay, by) = if dim == 1 {
                    ((0, 1), (0, 1))
                } else {
                    (a.cell_range(1), b.cell_range(1))
                };
                if open_overlap(ax, bx) && open_overlap(ay, by) {
                    overlapping_pairs += 1;
                }
                if closed_overlap(ax, bx) && closed_overlap(ay, by) {
                    let r = b.side / a.side;
                    rmin = rmin.min(r).min(1.0 / r);
                    rmax = rmax.max(r).max(1.0 / r);
                    if !(0.25..=4.0).contains(&r) {
                        ratio_violations += 1;
                    }
                }
            }
        }
        WhitneyAudit {
            cubes: m,
            distance_violations,
            ratio_violations,
            overlapping_pairs,
            inside_hits,
            gamma0_observed: self.gamma0_observed,
            min_neighbor_ratio: if rmin.is_finite() { rmin } else { 1.0 },
            max_neighbor_ratio: if rmax > 0.0 { rmax } else { 1.0 },
        }
    }

    /// `epsilon_0 = (theta / 2 gamma_0)^{1/n} / (30 sqrt(n))`.
    pub fn epsilon0(&self, theta: f64) -> f64 {
        let n = self.dim() as f64;
        (theta / (2.0 * self.gamma0_observed.max(1) as f64)).powf(1.0 / n) / (30.0 * n.sqrt())
    }

    /// Indices of cubes with `l_Q < diam / epsilon`.
    pub fn small_cubes(&self, epsilon: f64) -> Vec<usize> {
        let cap = self.domain.diam() / epsilon;
        (0..self.cubes.len()).filter(|&q| self.cubes[q].side < cap).collect()
    }

    /// `k`-th neighbor iterate of a cube set (the set itself for `k = 0`).
    pub fn neighbor_iterate(&self, base: &[usize], k: usize) -> Vec<usize> {
        let mut set: BTreeSet<usize> = base.iter().copied().collect();
        for _ in 0..k {
            let mut next = set.clone();
            for &q in &set {
                next.extend(self.neighbors[q].iter().map(|&p| p as usize));
            }
            set = next;
        }
        set.into_iter().collect()
    }

    /// CSV rows `level,i,j,side,dist,neighbors`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Precondition(e.to_string());
        out.write_record(["level", "i", "j", "x", "y", "side", "dist", "neighbors"])
            .map_err(io)?;
        for (q, c) in self.cubes.iter().enumerate() {
            out.write_record([
                c.level.to_string(),
                c.coords[0].to_string(),
                c.coords[1].to_string(),
                c.center[0].to_string(),
                c.center[1].to_string(),
                c.side.to_string(),
                c.dist_to_boundary.to_string(),
                self.neighbors[q].len().to_string(),
            ])
            .map_err(io)?;
        }
        out.flush().map_err(|e| Error::Precondition(e.to_string()))?;
        Ok(())
    }

    /// SVG overlay of the cubes over the domain's inside cells (2-D only).
    pub fn write_svg<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e: std::io::Error| Error::Precondition(e.to_string());
        let b = self.grid.bbox();
        let size = 800.0;
        let scale = size / b.extent(0).max(b.extent(1)).max(1e-300);
        let tx = |x: f64| (x - b.lo[0]) * scale;
        let ty = |y: f64| (b.hi[1] - y) * scale;
        writeln!(
            w,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
        )
        .map_err(io)?;
        let h = self.grid.h();
        for &c in self.grid.inside_cells() {
            let p = self.grid.center(c as usize);
            writeln!(
                w,
                r##"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="#9ecae1" stroke="none"/>"##,
                tx(p[0] - 0.5 * h),
                ty(p[1] + 0.5 * h),
                h * scale,
                h * scale
            )
            .map_err(io)?;
        }
        for q in &self.cubes {
            let half = 0.5 * q.side;
            writeln!(
                w,
                r##"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="#333" stroke-width="0.5"/>"##,
                tx(q.center[0] - half),
                ty(q.center[1] + half),
                q.side * scale,
                q.side * scale
            )
            .map_err(io)?;
        }
        writeln!(w, "</svg>").map_err(io)?;
        Ok(())
    }
}
