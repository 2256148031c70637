//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Runs as a plain binary (no libtest harness) so the verdict lines are
//! always printed by `cargo test`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use fracorlicz::experiment::{run_in, ExperimentConfig};
use fracorlicz::geometry::{dist, make_domain, Domain, Grid};
use fracorlicz::harness::{
    check_embedding, check_extension, check_geometric, check_holder, check_nontriviality, check_partition,
    check_poincare, members, CutoffSpec, FamilySpec, Member,
};
use fracorlicz::norms::{luxemburg_root, luxemburg_seminorm, seminorm_modular, SampledFunction};
use fracorlicz::whitney::{box_grid, whitney_decompose, ExtensionConfig, ExtensionOperator};
use fracorlicz::young::{
    estimate_c_beta, estimate_doubling, inverse, make_young, power, power_compose, power_log, ScanSpec,
    YoungFunction,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<(bool, String), String>;

fn domain(shape: &str) -> Arc<Domain> {
    Arc::new(make_domain(shape, &BTreeMap::new()).unwrap())
}

fn young(name: &str, kv: &[(&str, f64)]) -> YoungFunction {
    make_young(name, &kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()).unwrap()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

/// Direct `(2 sum_{i<j} h^{2n} |u_i - u_j|^p / |x_i - x_j|^{n+beta})^{1/p}`.
fn brute_power_seminorm(u: &SampledFunction, p: f64, beta: f64) -> f64 {
    let g = u.grid();
    let n = g.dim() as f64;
    let hn = g.cell_measure();
    let xs: Vec<_> = u.cells().iter().map(|&c| g.center(c as usize)).collect();
    let v = u.values();
    let s: f64 = (0..v.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in i + 1..v.len() {
                acc += (v[i] - v[j]).abs().powf(p) / dist(xs[i], xs[j]).powf(n + beta);
            }
            acc
        })
        .sum();
    (2.0 * hn * hn * s).powf(1.0 / p)
}

fn random_function(grid: &Arc<Grid>, seed: u64) -> SampledFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.random_range(-1.0..1.0),
                rng.random_range(-6.0..6.0),
                rng.random_range(-6.0..6.0),
                rng.random_range(0.0..6.3),
            )
        })
        .collect();
    let q = rng.random_range(-1.0..1.0);
    SampledFunction::on_inside(grid.clone(), &format!("r{seed}"), move |x| {
        q * x[0] * x[1] + terms.iter().map(|&(a, wx, wy, ph)| a * (wx * x[0] + wy * x[1] + ph).cos()).sum::<f64>()
    })
}

fn c1_power_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_root: f64 = 0.0;
    let mut timed = 0.0;
    for (n, p, beta) in [(1usize, 2.0, 1.0), (2, 2.0, 1.0), (2, 3.0, 2.0)] {
        let shape = if n == 1 { "interval" } else { "square" };
        let grid = Arc::new(Grid::over_domain(domain(shape), 64).map_err(err)?);
        let phi = power(p);
        for seed in 0..20u64 {
            let u = random_function(&grid, 1000 * n as u64 + seed);
            let t = Instant::now();
            let got = luxemburg_seminorm(&u, &phi, beta).map_err(err)?;
            timed += t.elapsed().as_secs_f64();
            let want = brute_power_seminorm(&u, p, beta);
            worst = worst.max(rel(got, want));
            if seed < 3 {
                let root = luxemburg_root(|l| seminorm_modular(&u, &phi, beta, l), 1.0).map_err(err)?;
                worst_root = worst_root.max(rel(root, want));
            }
        }
    }
    Ok((
        worst <= 1e-6 && worst_root <= 1e-6 && timed < 60.0,
        format!("max rel err {worst:.1e}, root path {worst_root:.1e}, seminorm time {timed:.1}s"),
    ))
}

fn c2_c_beta() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for (p, beta) in [(2.0, 1.0), (3.0, 1.0), (2.5, 0.5)] {
        let c = estimate_c_beta(&power(p), beta, &ScanSpec::c_beta()).map_err(err)?;
        let c = c.finite().ok_or(format!("t^{p}, beta {beta}: flagged infinite"))?;
        worst = worst.max(rel(c, 1.0 / (p - beta)));
    }
    let mut flags = true;
    for (p, beta) in [(1.0, 1.5), (2.0, 2.0), (1.5, 1.8)] {
        flags &= estimate_c_beta(&power(p), beta, &ScanSpec::c_beta()).map_err(err)?.is_infinite();
    }
    let secs = t.elapsed().as_secs_f64();
    Ok((worst <= 1e-3 && flags && secs < 5.0, format!("max rel err {worst:.1e}, p <= beta flagged: {flags}, {secs:.2}s")))
}

fn c3_doubling() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in [1.0, 1.5, 2.0, 3.0] {
        let k = estimate_doubling(&power(p), &ScanSpec::doubling()).finite().ok_or("power flagged non-doubling")?;
        worst = worst.max(rel(k, 2f64.powf(p)));
    }
    let pe = estimate_doubling(&young("power_exp", &[("p", 2.0)]), &ScanSpec::doubling());
    let emt = estimate_doubling(&young("exp_minus_taylor", &[]), &ScanSpec::doubling());
    Ok((
        worst <= 1e-6 && pe.is_infinite() && emt.is_infinite(),
        format!("max rel err {worst:.1e}, power_exp {pe}, exp_minus_taylor {emt}"),
    ))
}

fn c4_inverse_laws() -> Outcome {
    let doubling = [
        power(1.0),
        power(2.0),
        power(3.5),
        power_log(2.0, 1.0),
        young("power_max", &[("p", 1.5), ("delta", 0.5)]),
        power_compose(&power_log(1.0, 1.0), 2.0).map_err(err)?,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for phi in &doubling {
        let k = estimate_doubling(phi, &ScanSpec::doubling()).finite().ok_or(format!("{phi} not doubling"))?;
        for _ in 0..1000 {
            let x = 10f64.powf(rng.random_range(-4.0..4.0));
            let t = 10f64.powf(rng.random_range(-4.0..0.0));
            let base = inverse(phi, x);
            let a = inverse(phi, 2.0 * x) / (2.0 * base) - 1.0;
            let b = inverse(phi, t * x) / (t.powf(1.0 / (k - 1.0)) * base) - 1.0;
            worst = worst.max(a).max(b);
            if a > 1e-6 || b > 1e-6 {
                violations += 1;
            }
        }
    }
    Ok((violations == 0, format!("{} functions x 1000 samples, violations {violations}, worst excess {worst:.1e}", doubling.len())))
}

/// Distance from the closed cube to the unit disk or the unit square, both
/// exterior to the cube.
fn exact_cube_distance(shape: &str, c: [f64; 2], side: f64) -> f64 {
    let h = 0.5 * side;
    match shape {
        "disk" => {
            // nearest point of the cube to the origin, minus the radius
            let nx = 0f64.clamp(c[0] - h, c[0] + h);
            let ny = 0f64.clamp(c[1] - h, c[1] + h);
            nx.hypot(ny) - 1.0
        }
        _ => {
            let gap = |lo: f64, hi: f64| (lo - 1.0).max(0.0 - hi).max(0.0);
            gap(c[0] - h, c[0] + h).hypot(gap(c[1] - h, c[1] + h))
        }
    }
}

fn c5_whitney() -> Outcome {
    let t = Instant::now();
    let mut ok = true;
    let mut lines = Vec::new();
    for shape in ["disk", "square"] {
        let d = domain(shape);
        for res in [48, 96] {
            let grid = Arc::new(box_grid(d.clone(), res).map_err(err)?);
            let w = whitney_decompose(d.clone(), grid, None).map_err(err)?;
            let a = w.audit();
            let r2 = 2f64.sqrt();
            let bad = w
                .cubes
                .iter()
                .filter(|q| {
                    let dq = exact_cube_distance(shape, q.center, q.side);
                    !(dq >= r2 * q.side * (1.0 - 1e-12) && dq <= 4.0 * r2 * q.side * (1.0 + 1e-12))
                })
                .count();
            ok &= a.passed() && bad == 0 && a.gamma0_observed <= 144 && a.min_neighbor_ratio >= 0.25 && a.max_neighbor_ratio <= 4.0;
            lines.push(format!("{shape}@{res}: {} cubes, gamma0 {}", a.cubes, a.gamma0_observed));
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Ok((ok && secs < 120.0, format!("{}, {secs:.1}s", lines.join("; "))))
}

fn c6_partition() -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for shape in ["disk", "square"] {
        let rep = check_partition(&domain(shape), &[48, 96], &ExtensionConfig::default(), 10_000, 6, 0.10).map_err(err)?;
        ok &= rep.pass == Some(true);
        lines.push(format!(
            "{shape}: L {:.3}/{:.3} drift {:.3}",
            rep.metric("l@48").unwrap_or(f64::NAN),
            rep.metric("l@96").unwrap_or(f64::NAN),
            rep.metric("l_drift").unwrap_or(f64::NAN)
        ));
    }
    Ok((ok, lines.join("; ")))
}

fn c7_extension() -> Outcome {
    let d = domain("disk");
    let op = ExtensionOperator::build(d.clone(), &ExtensionConfig::default()).map_err(err)?;
    let u = op.sample("u", |x| x[0] * x[0] - 2.0 * x[1]);
    let v = op.sample("v", |x| (3.0 * x[1]).sin());
    let eu = op.extend(&u).map_err(err)?;
    let on_domain: BTreeMap<u32, f64> = eu.cells().iter().copied().zip(eu.values().iter().copied()).collect();
    let identity = u.cells().iter().zip(u.values()).all(|(c, v)| on_domain[c] == *v);
    let ec = op.extend(&op.sample("c", |_| 1.75)).map_err(err)?;
    let boundary = ec.values().iter().filter(|&&x| x == 0.0).count();
    let constant = ec.values().iter().all(|&x| x == 1.75 || x == 0.0) && boundary == op.summary().boundary_cells;
    let lin = op.extend(&u.combine(3.0, &v, -2.0).map_err(err)?).map_err(err)?;
    let sep = eu.combine(3.0, &op.extend(&v).map_err(err)?, -2.0).map_err(err)?;
    let lin_err = lin.values().iter().zip(sep.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let polys = members(&FamilySpec::Polynomials { max_degree: 3 }, &d).map_err(err)?;
    let disk = check_extension(&d, &power(2.0), 1.0, &[48, 96], &polys, &ExtensionConfig::default(), true, 0.5).map_err(err)?;

    let cusp = domain("cusp");
    let tips: Vec<Member> = members(
        &FamilySpec::Cutoffs {
            cases: [([4.0, 0.0], 1.0, 3.0), ([6.0, 0.0], 1.0, 3.0), ([7.0, 0.0], 2.0, 4.0)]
                .iter()
                .map(|&(x, r, t)| CutoffSpec { x, r, t, grid_units: true })
                .collect(),
        },
        &cusp,
    )
    .map_err(err)?;
    let cusp_cfg = ExtensionConfig {
        max_enlargements: 8,
        ..ExtensionConfig::default()
    };
    let tip = check_extension(&cusp, &power(2.0), 1.0, &[48, 96], &tips, &cusp_cfg, false, 0.5).map_err(err)?;
    let increasing = tip.metric("increasing") == Some(1.0);
    let ok = identity && constant && lin_err <= 1e-12 && disk.pass == Some(true) && increasing;
    Ok((
        ok,
        format!(
            "identity {identity}, constant {constant} ({boundary} boundary cells at 0), linear err {lin_err:.1e}; disk C_ext {:.3}->{:.3} drift {:.3}; cusp C_ext {:.3}->{:.3}",
            disk.metric("c_ext@48").unwrap_or(f64::NAN),
            disk.metric("c_ext@96").unwrap_or(f64::NAN),
            disk.metric("drift").unwrap_or(f64::NAN),
            tip.metric("c_ext@48").unwrap_or(f64::NAN),
            tip.metric("c_ext@96").unwrap_or(f64::NAN),
        ),
    ))
}

fn poincare_members(d: &Domain) -> Result<Vec<Member>, String> {
    let mut out = members(&FamilySpec::Polynomials { max_degree: 3 }, d).map_err(err)?;
    out.extend(members(&FamilySpec::Trig { count: 12, seed: 8, terms: 3 }, d).map_err(err)?);
    out.extend(members(&FamilySpec::RadialBumps { count: 4 }, d).map_err(err)?);
    Ok(out)
}

fn c8_poincare() -> Outcome {
    let t = Instant::now();
    let d = domain("disk");
    let ms = poincare_members(&d)?;
    let mut ok = true;
    let mut lines = Vec::new();
    for phi in [power(2.0), power_log(2.0, 1.0)] {
        let rep = check_poincare(&phi, 1.0, &d, 64, &ms, 0.02).map_err(err)?;
        ok &= rep.pass == Some(true);
        lines.push(format!("{phi}: max ratio {:.2e} over {}", rep.max_ratio, rep.case_count));
    }
    let secs = t.elapsed().as_secs_f64();
    Ok((ok && secs < 120.0, format!("{}, {secs:.1}s", lines.join("; "))))
}

fn c9_holder() -> Outcome {
    let d = domain("interval");
    let (beta, p) = (1.5, 2.0);
    let phi = power(p);
    let trig = members(&FamilySpec::Trig { count: 20, seed: 9, terms: 4 }, &d).map_err(err)?;
    let rep = check_holder(&phi, beta, &d, 1024, &trig, 0.0).map_err(err)?;

    // modulus phi^-1(d^{beta-n}) scales like d^{(beta-n)/p} = d^0.25
    let slope = (inverse(&phi, 1e-3f64.powf(beta - 1.0)).ln() - inverse(&phi, 1.0).ln()) / 1e-3f64.ln();
    // seminorm of u = x on (0,1): (2 / ((p-beta)(p-beta+1)))^{1/p}
    let grid = Arc::new(Grid::over_domain(d.clone(), 1024).map_err(err)?);
    let u = SampledFunction::on_inside(grid, "x", |x| x[0]);
    let got = luxemburg_seminorm(&u, &phi, beta).map_err(err)?;
    let want = (2.0 / ((p - beta) * (p - beta + 1.0))).powf(1.0 / p);
    let lin = check_holder(&phi, beta, &d, 1024, &[Member::formula("x", |x| x[0])], 0.0).map_err(err)?;
    let ok = rep.pass == Some(true) && rel(slope, 0.25) <= 0.05 && rel(got, want) <= 0.05 && lin.pass == Some(true);
    Ok((
        ok,
        format!(
            "trig max ratio {:.3e} <= C_chain {:.3e}; modulus exponent {slope:.4}; |x| seminorm {got:.4} vs {want:.4} ({:.1}%)",
            rep.max_ratio,
            rep.constant.unwrap_or(f64::NAN),
            100.0 * rel(got, want)
        ),
    ))
}

fn c10_geometric_embedding() -> Outcome {
    let d = domain("disk");
    let g = check_geometric(1.0, &d, &[48, 96], 500, 11, 0.30).map_err(err)?;
    let ms = poincare_members(&d)?;
    let e = check_embedding(&power(2.0), 1.0, &d, &[48, 96], &ms, 0.30).map_err(err)?;
    Ok((
        g.pass == Some(true) && e.pass == Some(true),
        format!(
            "C_emp {:.3}->{:.3} drift {:.3}; C_emb {:.3}->{:.3} drift {:.3}",
            g.metric("c_emp@48").unwrap_or(f64::NAN),
            g.metric("c_emp@96").unwrap_or(f64::NAN),
            g.metric("drift").unwrap_or(f64::NAN),
            e.metric("c_emb@48").unwrap_or(f64::NAN),
            e.metric("c_emb@96").unwrap_or(f64::NAN),
            e.metric("drift").unwrap_or(f64::NAN),
        ),
    ))
}

fn c11_nontriviality() -> Outcome {
    let stable = check_nontriviality(&power(2.0), 1.0, &domain("interval"), &[64, 256], 0.05).map_err(err)?;
    let divergent = check_nontriviality(&power(1.0), 1.5, &domain("disk"), &[24, 96], 0.05).map_err(err)?;
    let growth = divergent.max_ratio;
    Ok((
        stable.pass == Some(true) && divergent.pass == Some(true) && growth > 1.5,
        format!(
            "p=2 beta=1 (n=1) growth {:.4}; p=1 beta=1.5 (n=2) growth {growth:.3}",
            stable.max_ratio
        ),
    ))
}

const DETERMINISM: &str = r#"
[experiment]
name = "determinism"
seed = 12

[domain]
shape = "disk"

[young]
family = "power_log"
p = 2.0

[grid]
resolutions = [24, 48]

[family]
kinds = ["polynomials", "trig"]
trig_count = 6

[checks]
list = ["poincare", "geometric", "embedding", "extension", "whitney", "partition"]
beta = 1.0
trials = 200
points = 2000
"#;

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir).unwrap().flatten() {
        let p = e.path();
        if p.extension().is_some_and(|x| x == "csv") {
            out.insert(p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap());
        }
    }
    out
}

fn c12_determinism() -> Outcome {
    let root: PathBuf = std::env::temp_dir().join(format!("fracorlicz-acceptance-{}", std::process::id()));
    let mut runs = Vec::new();
    for threads in [1usize, 4, 3] {
        let mut cfg = ExperimentConfig::parse(DETERMINISM).map_err(err)?;
        cfg.experiment.threads = threads;
        let dir = root.join(format!("t{threads}"));
        run_in(&cfg, &dir).map_err(err)?;
        runs.push(csv_files(&dir));
    }
    let _ = fs::remove_dir_all(&root);
    let files = runs[0].len();
    let same = runs.iter().all(|r| r == &runs[0]) && files == 6;
    Ok((same, format!("{files} CSVs identical across 1, 4 and 3 threads: {same}")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("power-function oracle", c1_power_oracle),
        ("C_beta closed form", c2_c_beta),
        ("doubling constant", c3_doubling),
        ("inverse laws", c4_inverse_laws),
        ("Whitney invariants", c5_whitney),
        ("partition of unity", c6_partition),
        ("extension operator", c7_extension),
        ("Poincare inequality", c8_poincare),
        ("Holder bound", c9_holder),
        ("geometric + embedding", c10_geometric_embedding),
        ("nontriviality dichotomy", c11_nontriviality),
        ("determinism", c12_determinism),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (pass, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<24} {}  [{:.1}s] {detail}",
            k + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
