use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::family::{make_cutoff, Member};
use super::report::InequalityReport;
use crate::error::{Error, Result};
use crate::geometry::{dist, region_measure, Domain, Grid, Point};
use crate::norms::{average, inf_centered_norm, luxemburg_seminorm, SampledFunction};
use crate::sum::compensated;
use crate::whitney::{ExtensionConfig, ExtensionOperator};
use crate::young::{estimate_c_beta, estimate_doubling, inverse, power_compose, Estimate, ScanSpec, YoungFunction};

/// Measure of the unit sphere: 2 for `n = 1`, `2 pi` for `n = 2`.
pub fn sphere_measure(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => f64::NAN,
    }
}

fn ball_radius(ball: &Domain) -> Result<f64> {
    match ball.name() {
        "disk" | "interval" => Ok(0.5 * ball.diam()),
        other => Err(Error::Precondition(format!("check needs a ball (disk or interval), got {other}"))),
    }
}

fn ball_grid(ball: &Arc<Domain>, resolution: usize) -> Result<Arc<Grid>> {
    ball_radius(ball)?;
    Ok(Arc::new(Grid::over_domain(ball.clone(), resolution)?))
}

fn phi_params(phi: &YoungFunction) -> String {
    phi.to_string()
}

/// Mean oscillation against `phi^-1(2^{n+beta} r^{beta-n} omega_n^2) ||u||`.
pub fn check_poincare(
    phi: &YoungFunction,
    beta: f64,
    ball: &Arc<Domain>,
    resolution: usize,
    members: &[Member],
    tolerance: f64,
) -> Result<InequalityReport> {
    let mut rep = InequalityReport::new("poincare");
    let n = ball.dim();
    let r = ball_radius(ball)?;
    rep.param("phi", phi_params(phi)).param("beta", beta).param("domain", ball.name()).param("resolution", resolution);
    let grid = ball_grid(ball, resolution)?;
    let factor = inverse(phi, 2f64.powf(n as f64 + beta) * r.powf(beta - n as f64) * sphere_measure(n).powi(2));
    rep.metric("phi_inv_factor", factor);
    for m in members {
        let u = m.sample_inside(&grid)?;
        let mean = average(&u, |_| true)?;
        let lhs = compensated(u.values().iter().map(|v| (v - mean).abs())) / u.len() as f64;
        let rhs = factor * luxemburg_seminorm(&u, phi, beta)?;
        rep.case(&m.label, resolution, lhs, rhs);
    }
    Ok(rep.finish_bounded(1.0, tolerance))
}

/// `4 * 2^{beta+2n} omega_n^2 / (1 - 2^{-(beta-n)/(K-1)})`.
pub fn holder_chain_constant(beta: f64, n: usize, k: f64) -> f64 {
    let w = sphere_measure(n);
    4.0 * 2f64.powf(beta + 2.0 * n as f64) * w * w / (1.0 - 2f64.powf(-(beta - n as f64) / (k - 1.0)))
}

/// Cap on the number of cells whose pairs are enumerated in the Hölder check.
pub const HOLDER_MAX_CELLS: usize = 1536;

/// Pair ratios `|u(x) - u(y)| / (phi^-1(|x-y|^{beta-n}) ||u||)` against the chain constant.
pub fn check_holder(
    phi: &YoungFunction,
    beta: f64,
    ball: &Arc<Domain>,
    resolution: usize,
    members: &[Member],
    tolerance: f64,
) -> Result<InequalityReport> {
    let n = ball.dim();
    if !(beta > n as f64) {
        return Err(crate::error::invalid("beta", beta, "Hölder check needs beta > n"));
    }
    let k = match estimate_doubling(phi, &ScanSpec::doubling()) {
        Estimate::Finite(k) => k,
        Estimate::Infinite => return Err(Error::NotDoubling("the Hölder check")),
    };
    let mut rep = InequalityReport::new("holder");
    rep.param("phi", phi_params(phi)).param("beta", beta).param("domain", ball.name()).param("resolution", resolution);
    let grid = ball_grid(ball, resolution)?;
    let c_chain = holder_chain_constant(beta, n, k);
    rep.metric("doubling_k", k).metric("c_chain", c_chain);

    let inside = grid.inside_cells();
    let stride = inside.len().div_ceil(HOLDER_MAX_CELLS).max(1);
    let chosen: Vec<u32> = inside.iter().copied().step_by(stride).collect();
    // phi^-1(d^{beta-n}) depends on the integer offset only
    let mut table: HashMap<(usize, usize), f64> = HashMap::new();
    let coords: Vec<[usize; 2]> = chosen.iter().map(|&c| grid.coords(c as usize)).collect();
    for a in 0..coords.len() {
        for b in a + 1..coords.len() {
            let key = (coords[a][0].abs_diff(coords[b][0]), coords[a][1].abs_diff(coords[b][1]));
            table.entry(key).or_insert_with(|| {
                let d = grid.h() * ((key.0 * key.0 + key.1 * key.1) as f64).sqrt();
                inverse(phi, d.powf(beta - n as f64))
            });
        }
    }
    let near_key = if stride == 1 { Some((1usize, 0usize)) } else { None };
    let mut near_max = 0.0f64;
    let cells = Arc::new(chosen.clone());
    for m in members {
        let full = m.sample_inside(&grid)?;
        let norm = luxemburg_seminorm(&full, phi, beta)?;
        let u = m.sample(&grid, &cells)?;
        let vals = u.values();
        let (worst, near) = (0..vals.len())
            .into_par_iter()
            .map(|a| {
                let mut w = 0.0f64;
                let mut nr = 0.0f64;
                for b in a + 1..vals.len() {
                    let key = (coords[a][0].abs_diff(coords[b][0]), coords[a][1].abs_diff(coords[b][1]));
                    let q = (vals[a] - vals[b]).abs() / table[&key];
                    w = w.max(q);
                    if Some(key) == near_key || Some((key.1, key.0)) == near_key {
                        nr = nr.max(q);
                    }
                }
                (w, nr)
            })
            .reduce(|| (0.0, 0.0), |x, y| (x.0.max(y.0), x.1.max(y.1)));
        if norm > 0.0 {
            near_max = near_max.max(near / norm);
        }
        rep.case(&m.label, resolution, worst, norm);
    }
    rep.metric("nearest_pair_ratio", near_max);
    Ok(rep.finish_bounded(c_chain, tolerance))
}

#[derive(Debug, Clone)]
enum TrialSet {
    Ball { x: Point, rho: f64 },
    Disks { x: Point, disks: Vec<(Point, f64)> },
    Scattered { x: Point, pts: Vec<Point> },
}

impl TrialSet {
    fn anchor(&self) -> Point {
        match self {
            TrialSet::Ball { x, .. } | TrialSet::Disks { x, .. } | TrialSet::Scattered { x, .. } => *x,
        }
    }

    fn label(&self, k: usize) -> String {
        let kind = match self {
            TrialSet::Ball { .. } => "ball",
            TrialSet::Disks { .. } => "disks",
            TrialSet::Scattered { .. } => "scattered",
        };
        format!("trial{k}_{kind}")
    }
}

fn random_in_ball(rng: &mut ChaCha8Rng, c: Point, r: f64, dim: usize) -> Point {
    loop {
        let p = [rng.random_range(-1.0..1.0), if dim == 1 { 0.0 } else { rng.random_range(-1.0..1.0) }];
        if p[0] * p[0] + p[1] * p[1] < 1.0 {
            return [c[0] + r * p[0], c[1] + r * p[1]];
        }
    }
}

fn make_trials(ball: &Domain, trials: usize, seed: u64) -> Vec<TrialSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = ball.bbox().center();
    let r = 0.5 * ball.diam();
    let dim = ball.dim();
    (0..trials)
        .map(|k| {
            let x = random_in_ball(&mut rng, c, r, dim);
            match k % 3 {
                0 => TrialSet::Ball {
                    x,
                    rho: r * rng.random_range(0.05..0.7),
                },
                1 => {
                    let m = rng.random_range(2..=5);
                    let mut disks: Vec<(Point, f64)> = (0..m)
                        .map(|j| {
                            let p = if j == 0 { x } else { random_in_ball(&mut rng, c, r, dim) };
                            (p, r * rng.random_range(0.05..0.35))
                        })
                        .collect();
                    // keep the total area below 0.45 |B|
                    let s: f64 = disks.iter().map(|d| (d.1 / r).powi(2)).sum();
                    if s > 0.45 {
                        let f = (0.45 / s).sqrt();
                        disks.iter_mut().for_each(|d| d.1 *= f);
                    }
                    TrialSet::Disks { x, disks }
                }
                _ => {
                    let m = rng.random_range(1..=40);
                    TrialSet::Scattered {
                        x,
                        pts: (0..m).map(|_| random_in_ball(&mut rng, c, r, dim)).collect(),
                    }
                }
            }
        })
        .collect()
}

/// `C_emp = min lhs |E|^{beta/n}` for `lhs = ∫_{B\E} |x - y|^{-n-beta} dy`, `x ∈ E`.
fn geometric_constant(
    ball: &Arc<Domain>,
    beta: f64,
    resolution: usize,
    trials: &[TrialSet],
    rep: &mut super::report::ReportBuilder,
) -> Result<f64> {
    let grid = ball_grid(ball, resolution)?;
    let n = ball.dim();
    let hn = grid.cell_measure();
    let inside = grid.inside_cells();
    let half = 0.5 * inside.len() as f64 * hn;
    let rows: Vec<Option<(f64, f64)>> = trials
        .par_iter()
        .map(|trial| {
            let cell = grid.locate(trial.anchor())?;
            let xc = grid.center(cell);
            let in_e = |y: Point, cy: usize| -> bool {
                match trial {
                    TrialSet::Ball { rho, .. } => dist(y, xc) <= *rho,
                    TrialSet::Disks { disks, .. } => {
                        cy == cell || disks.iter().enumerate().any(|(j, &(p, s))| dist(y, if j == 0 { xc } else { p }) <= s)
                    }
                    TrialSet::Scattered { pts, .. } => {
                        cy == cell || pts.iter().any(|&p| grid.locate(p) == Some(cy))
                    }
                }
            };
            let mut measure = 0usize;
            let mut acc = crate::sum::Neumaier::new();
            for &c in inside {
                let y = grid.center(c as usize);
                if in_e(y, c as usize) {
                    measure += 1;
                } else {
                    acc.add(hn / dist(xc, y).powf(n as f64 + beta));
                }
            }
            let m = measure as f64 * hn;
            if m >= half || measure == 0 {
                return None;
            }
            Some((acc.value(), m.powf(-beta / n as f64)))
        })
        .collect();
    let mut c_emp = f64::INFINITY;
    for (k, (trial, row)) in trials.iter().zip(rows).enumerate() {
        let Some((lhs, rhs)) = row else { continue };
        c_emp = c_emp.min(rep.case(&trial.label(k), resolution, lhs, rhs));
    }
    Ok(c_emp)
}

/// Empirical constant of the complement-integral lower bound, compared
/// across consecutive resolutions.
pub fn check_geometric(
    beta: f64,
    ball: &Arc<Domain>,
    resolutions: &[usize],
    trials: usize,
    seed: u64,
    tolerance: f64,
) -> Result<InequalityReport> {
    let n = ball.dim();
    if !(beta > 0.0 && beta < n as f64) {
        return Err(crate::error::invalid("beta", beta, "needs 0 < beta < n"));
    }
    if resolutions.is_empty() {
        return Err(Error::Empty("resolution list"));
    }
    let mut rep = InequalityReport::new("geometric");
    rep.param("beta", beta).param("domain", ball.name()).param("trials", trials).param("seed", seed);
    let set = make_trials(ball, trials, seed);
    let mut values = Vec::new();
    for &res in resolutions {
        let c = geometric_constant(ball, beta, res, &set, &mut rep)?;
        rep.metric(&format!("c_emp@{res}"), c);
        values.push(c);
    }
    let drift = max_drift(&values);
    rep.metric("drift", drift);
    let pass = values.iter().all(|&c| c > 0.0 && c.is_finite()) && drift <= tolerance;
    Ok(rep.finish_with(tolerance, Some(pass)))
}

/// Largest `|v_{k+1} / v_k - 1|` over consecutive values.
pub fn max_drift(values: &[f64]) -> f64 {
    values.windows(2).map(|w| (w[1] / w[0] - 1.0).abs()).fold(0.0, f64::max)
}

/// `inf_c ||u - c||_{psi} / ||u||` with `psi = phi^{n/(n-beta)}`, compared
/// across resolutions; truncations of the first member at 25/50/100% of
/// its sup norm are recorded on the finest grid.
pub fn check_embedding(
    phi: &YoungFunction,
    beta: f64,
    ball: &Arc<Domain>,
    resolutions: &[usize],
    members: &[Member],
    tolerance: f64,
) -> Result<InequalityReport> {
    let n = ball.dim() as f64;
    if !(beta > 0.0 && beta < n) {
        return Err(crate::error::invalid("beta", beta, "needs 0 < beta < n"));
    }
    if estimate_doubling(phi, &ScanSpec::doubling()).is_infinite() {
        return Err(Error::NotDoubling("the embedding check"));
    }
    let psi = power_compose(phi, n / (n - beta))?;
    let mut rep = InequalityReport::new("embedding");
    rep.param("phi", phi_params(phi)).param("psi", psi.to_string()).param("beta", beta).param("domain", ball.name());
    let mut constants = Vec::new();
    let mut finest = None;
    for &res in resolutions {
        let grid = ball_grid(ball, res)?;
        let mut c_emb = 0.0f64;
        for m in members {
            let u = m.sample_inside(&grid)?;
            if u.is_constant() {
                continue;
            }
            let (_, lhs) = inf_centered_norm(&u, &psi)?;
            let rhs = luxemburg_seminorm(&u, phi, beta)?;
            c_emb = c_emb.max(rep.case(&m.label, res, lhs, rhs));
        }
        rep.metric(&format!("c_emb@{res}"), c_emb);
        constants.push(c_emb);
        finest = Some(grid);
    }
    let drift = max_drift(&constants);
    rep.metric("drift", drift);

    let mut truncation_ok = true;
    if let (Some(grid), Some(first)) = (finest, members.first()) {
        let res = *resolutions.last().expect("nonempty");
        let u = first.sample_inside(&grid)?;
        if !u.is_constant() {
            let full = inf_centered_norm(&u, &psi)?.1 / luxemburg_seminorm(&u, phi, beta)?;
            let sup = u.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut gaps = Vec::new();
            for frac in [0.25, 0.5, 1.0] {
                let v = crate::norms::truncate(&u, frac * sup)?;
                if v.is_constant() {
                    continue;
                }
                let lhs = inf_centered_norm(&v, &psi)?.1;
                let rhs = luxemburg_seminorm(&v, phi, beta)?;
                let ratio = rep.case(&format!("{}_N{frac}", first.label), res, lhs, rhs);
                gaps.push((ratio - full).abs());
            }
            truncation_ok = gaps.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-12)
                && gaps.last().is_some_and(|&g| g <= 1e-9 * full.abs().max(1.0));
        }
    }
    rep.metric("truncation_consistent", if truncation_ok { 1.0 } else { 0.0 });
    let pass = drift <= tolerance && truncation_ok && constants.iter().all(|c| c.is_finite());
    Ok(rep.finish_with(tolerance, Some(pass)))
}

/// The two proof constants of the cutoff bound; the larger is used.
pub fn testfn_constant(beta: f64, n: usize, c_beta: f64) -> f64 {
    let nb = n as f64 / beta;
    let w = sphere_measure(n);
    let a = 4.0 * (4f64.powf(beta) / beta + 1.0) * nb * w * (beta + 1.0);
    let b = 2.0 * nb * (beta + 1.0) * w * c_beta;
    a.max(b)
}

/// `||u_{x,r,t}|| <= C / phi^-1((t-r)^beta / |B_Omega(x,t)|)` for each cutoff.
pub fn check_testfn_bound(
    phi: &YoungFunction,
    beta: f64,
    domain: &Arc<Domain>,
    resolution: usize,
    cutoffs: &[(Point, f64, f64)],
    tolerance: f64,
) -> Result<InequalityReport> {
    let c_beta = match estimate_c_beta(phi, beta, &ScanSpec::c_beta())? {
        Estimate::Finite(c) => c,
        Estimate::Infinite => return Err(Error::InfiniteCBeta("the cutoff bound")),
    };
    let n = domain.dim();
    let constant = testfn_constant(beta, n, c_beta);
    let mut rep = InequalityReport::new("testfn_bound");
    rep.param("phi", phi_params(phi)).param("beta", beta).param("domain", domain.name()).param("resolution", resolution);
    rep.metric("c_beta", c_beta).metric("constant", constant);
    let grid = Arc::new(Grid::over_domain(domain.clone(), resolution)?);
    for &(x, r, t) in cutoffs {
        let u = make_cutoff(&grid, x, r, t)?;
        let lhs = luxemburg_seminorm(&u, phi, beta)?;
        let ball = region_measure(&grid, |z| dist(z, x) < t);
        let rhs = constant / inverse(phi, (t - r).powf(beta) / ball);
        rep.case(u.name(), resolution, lhs, rhs);
    }
    Ok(rep.finish_bounded(1.0, tolerance))
}

/// `||Eu||_{box} / ||u||_{Omega}` over a family at several resolutions.
/// With `regular`, pass iff the largest ratio drifts less than `tolerance`
/// between consecutive resolutions; otherwise only report.
pub fn check_extension(
    domain: &Arc<Domain>,
    phi: &YoungFunction,
    beta: f64,
    resolutions: &[usize],
    members: &[Member],
    base: &ExtensionConfig,
    regular: bool,
    tolerance: f64,
) -> Result<InequalityReport> {
    let mut rep = InequalityReport::new("extension");
    rep.param("phi", phi_params(phi)).param("beta", beta).param("domain", domain.name());
    rep.param("reflect_scale", base.reflect_scale).param("max_enlargements", base.max_enlargements);
    let mut constants = Vec::new();
    for &res in resolutions {
        let op = ExtensionOperator::build(domain.clone(), &ExtensionConfig { resolution: res, ..base.clone() })?;
        let mut c_ext = 0.0f64;
        for m in members {
            let u = m.sample(op.grid(), op.domain_cells())?;
            if u.is_constant() {
                continue;
            }
            let eu = op.extend(&u)?;
            let lhs = luxemburg_seminorm(&eu, phi, beta)?;
            let rhs = luxemburg_seminorm(&u, phi, beta)?;
            c_ext = c_ext.max(rep.case(&m.label, res, lhs, rhs));
        }
        let s = op.summary();
        rep.metric(&format!("c_ext@{res}"), c_ext)
            .metric(&format!("gamma0@{res}"), s.gamma0_observed as f64)
            .metric(&format!("gamma1@{res}"), s.reflection.gamma1_observed)
            .metric(&format!("gamma2@{res}"), s.reflection.gamma2_observed as f64)
            .metric(&format!("theta@{res}"), s.theta_hat)
            .metric(&format!("uncovered@{res}"), s.virtual_cells as f64);
        constants.push(c_ext);
    }
    let drift = max_drift(&constants);
    let increasing = constants.windows(2).all(|w| w[1] > w[0]);
    rep.metric("drift", drift).metric("increasing", if increasing { 1.0 } else { 0.0 });
    let pass = regular.then(|| drift < tolerance && constants.iter().all(|c| c.is_finite() && *c > 0.0));
    Ok(rep.finish_with(tolerance, pass))
}

/// `exp(1 - 1/(1 - s^2))` in `s = |x - c| / rho`, zero for `s >= 1`.
pub fn smooth_bump(c: Point, rho: f64) -> impl Fn(Point) -> f64 + Send + Sync {
    move |x| {
        let s = dist(x, c) / rho;
        if s >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - s * s)).exp()
        }
    }
}

/// Seminorm of an interior bump across resolutions. Expected stable when
/// `C_beta < ∞` (every step within `tolerance`) and growing by more than 50%
/// per step otherwise.
pub fn check_nontriviality(
    phi: &YoungFunction,
    beta: f64,
    domain: &Arc<Domain>,
    resolutions: &[usize],
    tolerance: f64,
) -> Result<InequalityReport> {
    if resolutions.len() < 2 {
        return Err(Error::Precondition("nontriviality needs at least two resolutions".into()));
    }
    let c_beta = estimate_c_beta(phi, beta, &ScanSpec::c_beta())?;
    let mut rep = InequalityReport::new("nontriviality");
    rep.param("phi", phi_params(phi)).param("beta", beta).param("domain", domain.name());
    rep.metric("c_beta", c_beta.as_f64());
    let b = domain.bbox();
    let dim = domain.dim();
    let rho = 0.4 * 0.5 * (0..dim).map(|a| b.extent(a)).fold(f64::INFINITY, f64::min);
    let bump = smooth_bump(b.center(), rho);
    let mut values = Vec::new();
    for &res in resolutions {
        let grid = Arc::new(Grid::over_domain(domain.clone(), res)?);
        let u = SampledFunction::on_inside(grid, "bump", &bump);
        values.push(luxemburg_seminorm(&u, phi, beta)?);
    }
    let mut growth = Vec::new();
    for (k, w) in values.windows(2).enumerate() {
        let g = rep.case(&format!("bump@{}->{}", resolutions[k], resolutions[k + 1]), resolutions[k + 1], w[1], w[0]);
        growth.push(g);
    }
    for (&res, &v) in resolutions.iter().zip(&values) {
        rep.metric(&format!("seminorm@{res}"), v);
    }
    let pass = match c_beta {
        Estimate::Finite(_) => growth.iter().all(|g| (g - 1.0).abs() <= tolerance),
        Estimate::Infinite => growth.iter().all(|&g| g > 1.5),
    };
    rep.metric("expect_divergent", if c_beta.is_infinite() { 1.0 } else { 0.0 });
    Ok(rep.finish_with(tolerance, Some(pass)))
}

/// Exhaustive decomposition audit at each resolution.
pub fn check_whitney(domain: &Arc<Domain>, resolutions: &[usize], base: &ExtensionConfig) -> Result<InequalityReport> {
    let mut rep = InequalityReport::new("whitney");
    rep.param("domain", domain.name());
    let mut pass = true;
    let n = domain.dim() as u32;
    for &res in resolutions {
        let grid = Arc::new(crate::whitney::box_grid(domain.clone(), res)?);
        let d = crate::whitney::whitney_decompose(domain.clone(), grid, base.max_level)?;
        let a = d.audit();
        rep.case("distance_violations", res, a.distance_violations as f64, a.cubes as f64);
        rep.case("ratio_violations", res, a.ratio_violations as f64, a.cubes as f64);
        rep.case("overlapping_pairs", res, a.overlapping_pairs as f64, a.cubes as f64);
        rep.case("inside_hits", res, a.inside_hits as f64, a.cubes as f64);
        rep.case("gamma0", res, a.gamma0_observed as f64, 12f64.powi(n as i32));
        rep.metric(&format!("cubes@{res}"), a.cubes as f64)
            .metric(&format!("discarded@{res}"), d.discarded as f64)
            .metric(&format!("uncovered@{res}"), d.uncovered_cells as f64)
            .metric(&format!("min_neighbor_ratio@{res}"), a.min_neighbor_ratio)
            .metric(&format!("max_neighbor_ratio@{res}"), a.max_neighbor_ratio);
        pass &= a.passed() && a.gamma0_observed <= 12usize.pow(n);
    }
    Ok(rep.finish_with(0.0, Some(pass)))
}

/// Partition-of-unity sum at seeded covered points and the measured gradient
/// constant `L` across resolutions.
pub fn check_partition(
    domain: &Arc<Domain>,
    resolutions: &[usize],
    base: &ExtensionConfig,
    points: usize,
    seed: u64,
    tolerance: f64,
) -> Result<InequalityReport> {
    let mut rep = InequalityReport::new("partition");
    rep.param("domain", domain.name()).param("points", points).param("seed", seed);
    let mut ls = Vec::new();
    let mut worst_sum = 0.0f64;
    let mut worst_grad = 0.0f64;
    for &res in resolutions {
        let op = ExtensionOperator::build(domain.clone(), &ExtensionConfig { resolution: res, ..base.clone() })?;
        let pu = op.partition();
        let grid = op.grid();
        let b = grid.bbox();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::with_capacity(points);
        let mut guard = 0usize;
        while pts.len() < points && guard < 1000 * points.max(1) {
            guard += 1;
            let x = [
                rng.random_range(b.lo[0]..b.hi[0]),
                if grid.dim() == 1 { 0.0 } else { rng.random_range(b.lo[1]..b.hi[1]) },
            ];
            let covered = grid
                .locate(x)
                .and_then(|c| op.decomposition().owner_of(c))
                .is_some_and(|q| op.decomposition().cubes[q].scaled_contains(x, 1.0, grid.dim()));
            if covered {
                pts.push(x);
            }
        }
        let sum_err = pts
            .par_iter()
            .map(|&x| (pu.weights(x).iter().map(|w| w.1).sum::<f64>() - 1.0).abs())
            .reduce(|| 0.0, f64::max);
        let lip = op.lipschitz(&pts);
        let grad_excess = pts
            .par_iter()
            .map(|&x| pu.scaled_gradients(x).into_iter().map(|(_, g)| g / lip.l_measured).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max);
        rep.case("sum_error", res, sum_err, 1e-10);
        rep.case("scaled_gradient", res, grad_excess, 1.0 + 1e-3);
        rep.metric(&format!("l@{res}"), lip.l_measured)
            .metric(&format!("samples@{res}"), lip.samples as f64)
            .metric(&format!("points@{res}"), pts.len() as f64);
        worst_sum = worst_sum.max(sum_err);
        worst_grad = worst_grad.max(grad_excess);
        ls.push(lip.l_measured);
    }
    let drift = max_drift(&ls);
    rep.metric("l_drift", drift);
    let pass = worst_sum <= 1e-10 && worst_grad <= 1.0 + 1e-3 && drift <= tolerance;
    Ok(rep.finish_with(tolerance, Some(pass)))
}
