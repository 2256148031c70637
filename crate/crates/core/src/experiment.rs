//! Declarative experiment configs (TOML, flat sections) and the runner that
//! executes their checks and writes per-check CSV/JSON plus a manifest.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::geometry::{Domain, DomainSpec, SHAPES};
use crate::harness::{self, CutoffSpec, FamilySpec, InequalityReport, Member};
use crate::whitney::{ExtensionConfig, DEFAULT_REFLECT_SCALE, MAX_ENLARGEMENTS};
use crate::young::{YoungFunction, YoungSpec, FAMILIES};

/// Environment variable overriding the output root.
pub const OUTPUT_ENV: &str = "FRACORLICZ_OUT";

/// Check ids with their parameter signatures.
pub const CHECKS: [(&str, &str); 9] = [
    ("poincare", "(phi, beta, ball, resolution, family)"),
    ("holder", "(phi doubling, beta > n, ball, resolution, family)"),
    ("geometric", "(beta in (0,n), ball, resolutions, trials, seed)"),
    ("embedding", "(phi doubling, beta in (0,n), ball, resolutions, family)"),
    ("testfn_bound", "(phi, beta, domain, resolution, cutoffs)"),
    ("extension", "(domain, phi, beta, resolutions, family, regular)"),
    ("nontriviality", "(phi, beta, domain, resolutions)"),
    ("whitney", "(domain, resolutions)"),
    ("partition", "(domain, resolutions, points, seed)"),
];

/// Default relative tolerance per check id.
pub fn default_tolerance(check: &str) -> f64 {
    match check {
        "poincare" => 0.02,
        "testfn_bound" => 0.05,
        "geometric" | "embedding" => 0.30,
        "extension" => 0.50,
        "nontriviality" => 0.05,
        "partition" => 0.10,
        _ => 0.0,
    }
}

const FAMILY_KINDS: [&str; 4] = ["polynomials", "radial_bumps", "trig", "cutoffs"];

/// Invalid or unparsable config, with the offending key path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn config_error(path: impl Into<String>, message: impl ToString) -> ConfigError {
    ConfigError {
        path: path.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 means available parallelism.
    #[serde(default)]
    pub threads: usize,
    /// Output directory, relative to the output root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub resolutions: Vec<usize>,
    #[serde(default = "default_scale")]
    pub reflect_scale: f64,
    #[serde(default = "default_enlargements")]
    pub max_enlargements: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_level: Option<u32>,
}

fn default_scale() -> f64 {
    DEFAULT_REFLECT_SCALE
}

fn default_enlargements() -> u32 {
    MAX_ENLARGEMENTS
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            resolutions: vec![48],
            reflect_scale: DEFAULT_REFLECT_SCALE,
            max_enlargements: MAX_ENLARGEMENTS,
            max_level: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySection {
    pub kinds: Vec<String>,
    #[serde(default = "default_degree")]
    pub max_degree: u32,
    #[serde(default = "default_trig_count")]
    pub trig_count: usize,
    #[serde(default = "default_trig_terms")]
    pub trig_terms: usize,
    #[serde(default = "default_bump_count")]
    pub bump_count: usize,
    /// Rows `[x, y, r, t]`.
    #[serde(default)]
    pub cutoffs: Vec<[f64; 4]>,
    /// Cutoff rows are in multiples of the cell size.
    #[serde(default)]
    pub cutoffs_in_cells: bool,
    /// Sup-norm fractions at which every member is also truncated.
    #[serde(default)]
    pub truncate: Vec<f64>,
}

fn default_degree() -> u32 {
    3
}
fn default_trig_count() -> usize {
    20
}
fn default_trig_terms() -> usize {
    4
}
fn default_bump_count() -> usize {
    4
}

impl Default for FamilySection {
    fn default() -> Self {
        Self {
            kinds: vec!["polynomials".into()],
            max_degree: default_degree(),
            trig_count: default_trig_count(),
            trig_terms: default_trig_terms(),
            bump_count: default_bump_count(),
            cutoffs: Vec::new(),
            cutoffs_in_cells: false,
            truncate: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSection {
    pub list: Vec<String>,
    pub beta: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Whether the extension check asserts stability; defaults to true
    /// except on the cusp.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regular: Option<bool>,
}

fn default_trials() -> usize {
    500
}
fn default_points() -> usize {
    10_000
}

/// Input of the `norm` verb.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSection {
    /// CSV with `cell,x,y,value` rows, relative to the config file.
    pub input: String,
}

/// A complete experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub domain: DomainSpec,
    pub young: YoungSpec,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub family: FamilySection,
    pub checks: ChecksSection,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<NormSection>,
}

fn param_path(section: &str, e: &Error) -> String {
    match e {
        Error::InvalidParameter { param, .. } => format!("{section}.{param}"),
        Error::MissingParameter(param) => format!("{section}.{param}"),
        Error::UnknownName { .. } => format!("{section}.name"),
        _ => section.to_string(),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let path = e
                .span()
                .map(|s| {
                    let line = text[..s.start.min(text.len())].lines().count().max(1);
                    format!("line {line}")
                })
                .unwrap_or_else(|| "config".into());
            config_error(path, e.message())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| config_error(path.display().to_string(), e))?;
        Self::parse(&text)
    }

    /// Canonical TOML; parsing it returns an equal config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of [`Self::to_toml`], hex.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        let mut out = String::with_capacity(64);
        for b in digest {
            let _ = write!(out, "{b:02x}");
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !SHAPES.contains(&self.domain.shape.as_str()) {
            return Err(config_error("domain.shape", format!("unknown domain {:?}", self.domain.shape)));
        }
        if !FAMILIES.contains(&self.young.family.as_str()) {
            return Err(config_error("young.family", format!("unknown Young family {:?}", self.young.family)));
        }
        self.build_domain()?;
        self.build_young()?;
        if self.grid.resolutions.is_empty() {
            return Err(config_error("grid.resolutions", "at least one resolution is required"));
        }
        for (k, &r) in self.grid.resolutions.iter().enumerate() {
            if r < 4 {
                return Err(config_error(format!("grid.resolutions[{k}]"), "must be >= 4"));
            }
        }
        if !(self.grid.reflect_scale > 0.0) {
            return Err(config_error("grid.reflect_scale", "must be > 0"));
        }
        if !(self.checks.beta > 0.0 && self.checks.beta.is_finite()) {
            return Err(config_error("checks.beta", "must be a positive number"));
        }
        if self.checks.list.is_empty() && self.norm.is_none() {
            return Err(config_error("checks.list", "no checks listed"));
        }
        for (k, id) in self.checks.list.iter().enumerate() {
            if !CHECKS.iter().any(|c| c.0 == id) {
                return Err(config_error(format!("checks.list[{k}]"), format!("unknown check {id:?}")));
            }
            if self.checks.list[..k].contains(id) {
                return Err(config_error(format!("checks.list[{k}]"), format!("duplicate check {id:?}")));
            }
        }
        for (k, kind) in self.family.kinds.iter().enumerate() {
            if !FAMILY_KINDS.contains(&kind.as_str()) {
                return Err(config_error(format!("family.kinds[{k}]"), format!("unknown family {kind:?}")));
            }
        }
        for (k, row) in self.family.cutoffs.iter().enumerate() {
            if !(row[2] > 0.0 && row[3] > row[2]) {
                return Err(config_error(format!("family.cutoffs[{k}]"), "need 0 < r < t"));
            }
        }
        for (k, &f) in self.family.truncate.iter().enumerate() {
            if !(f > 0.0) {
                return Err(config_error(format!("family.truncate[{k}]"), "must be > 0"));
            }
        }
        for (key, &v) in &self.tolerances {
            if !CHECKS.iter().any(|c| c.0 == key) {
                return Err(config_error(format!("tolerances.{key}"), "unknown check"));
            }
            if !(v >= 0.0) {
                return Err(config_error(format!("tolerances.{key}"), "must be >= 0"));
            }
        }
        Ok(())
    }

    pub fn build_domain(&self) -> Result<Arc<Domain>, ConfigError> {
        self.domain
            .build()
            .map(Arc::new)
            .map_err(|e| config_error(param_path("domain", &e), e))
    }

    pub fn build_young(&self) -> Result<YoungFunction, ConfigError> {
        self.young.build().map_err(|e| config_error(param_path("young", &e), e))
    }

    pub fn tolerance(&self, check: &str) -> f64 {
        self.tolerances.get(check).copied().unwrap_or_else(|| default_tolerance(check))
    }

    pub fn extension_config(&self) -> ExtensionConfig {
        ExtensionConfig {
            resolution: *self.grid.resolutions.last().unwrap_or(&48),
            max_level: self.grid.max_level,
            reflect_scale: self.grid.reflect_scale,
            max_enlargements: self.grid.max_enlargements,
            ..ExtensionConfig::default()
        }
    }

    pub fn family_specs(&self) -> Vec<FamilySpec> {
        let f = &self.family;
        let mut out: Vec<FamilySpec> = f
            .kinds
            .iter()
            .map(|k| match k.as_str() {
                "polynomials" => FamilySpec::Polynomials { max_degree: f.max_degree },
                "radial_bumps" => FamilySpec::RadialBumps { count: f.bump_count },
                "trig" => FamilySpec::Trig {
                    count: f.trig_count,
                    seed: self.experiment.seed,
                    terms: f.trig_terms,
                },
                _ => FamilySpec::Cutoffs {
                    cases: f
                        .cutoffs
                        .iter()
                        .map(|r| CutoffSpec {
                            x: [r[0], r[1]],
                            r: r[2],
                            t: r[3],
                            grid_units: f.cutoffs_in_cells,
                        })
                        .collect(),
                },
            })
            .collect();
        if !f.truncate.is_empty() {
            out = out
                .into_iter()
                .map(|base| FamilySpec::Truncations {
                    base: Box::new(base),
                    fractions: f.truncate.clone(),
                })
                .collect();
        }
        out
    }

    pub fn members(&self, domain: &Domain) -> crate::Result<Vec<Member>> {
        let mut out = Vec::new();
        for spec in self.family_specs() {
            out.extend(harness::members(&spec, domain)?);
        }
        Ok(out)
    }

    /// `experiment.output` (default: the experiment name) under `root`.
    pub fn output_dir(&self, root: &Path) -> PathBuf {
        root.join(self.experiment.output.as_deref().unwrap_or(&self.experiment.name))
    }
}

/// Output root: `explicit` if given, else `$FRACORLICZ_OUT`, else `runs`.
pub fn output_root(explicit: Option<&Path>) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUTPUT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from),
    }
}

/// Run failure: a config that validated but could not be executed.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("check {check}: {source}")]
    Check { check: String, source: Error },
    #[error("io at {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("thread pool: {0}")]
    Pool(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub id: String,
    pub pass: Option<bool>,
    pub csv: String,
    pub json: String,
}

/// Enough to reproduce a run: the canonical config, its hash, seed,
/// threads and resolved tolerances.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub name: String,
    pub config_hash: String,
    pub seed: u64,
    pub threads: usize,
    pub versions: BTreeMap<String, String>,
    pub tolerances: BTreeMap<String, f64>,
    pub checks: Vec<ManifestEntry>,
    pub all_passed: bool,
    pub config: String,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub reports: Vec<InequalityReport>,
    pub manifest: Manifest,
}

impl RunOutcome {
    pub fn all_passed(&self) -> bool {
        self.manifest.all_passed
    }
}

/// Threads used for `requested` (0 = available parallelism).
pub fn resolve_threads(requested: usize) -> usize {
    if requested > 0 {
        requested
    } else {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    }
}

/// Run one check of `config`.
pub fn run_check(config: &ExperimentConfig, id: &str) -> Result<InequalityReport, RunError> {
    let domain = config.build_domain()?;
    let phi = config.build_young()?;
    let beta = config.checks.beta;
    let res = &config.grid.resolutions;
    let finest = *res.last().expect("validated");
    let tol = config.tolerance(id);
    let seed = config.experiment.seed;
    let wrap = |source: Error| RunError::Check {
        check: id.to_string(),
        source,
    };
    let members = || config.members(&domain).map_err(wrap);
    let ext = config.extension_config();
    let report = match id {
        "poincare" => harness::check_poincare(&phi, beta, &domain, finest, &members()?, tol),
        "holder" => harness::check_holder(&phi, beta, &domain, finest, &members()?, tol),
        "geometric" => harness::check_geometric(beta, &domain, res, config.checks.trials, seed, tol),
        "embedding" => harness::check_embedding(&phi, beta, &domain, res, &members()?, tol),
        "testfn_bound" => {
            let h = crate::geometry::Grid::over_domain(domain.clone(), finest).map_err(wrap)?.h();
            let cutoffs: Vec<_> = config
                .family
                .cutoffs
                .iter()
                .map(|r| {
                    CutoffSpec {
                        x: [r[0], r[1]],
                        r: r[2],
                        t: r[3],
                        grid_units: config.family.cutoffs_in_cells,
                    }
                    .resolve(h)
                })
                .collect();
            harness::check_testfn_bound(&phi, beta, &domain, finest, &cutoffs, tol)
        }
        "extension" => {
            let regular = config.checks.regular.unwrap_or(domain.name() != "cusp");
            harness::check_extension(&domain, &phi, beta, res, &members()?, &ext, regular, tol)
        }
        "nontriviality" => harness::check_nontriviality(&phi, beta, &domain, res, tol),
        "whitney" => harness::check_whitney(&domain, res, &ext),
        "partition" => harness::check_partition(&domain, res, &ext, config.checks.points, seed, tol),
        other => return Err(config_error("checks.list", format!("unknown check {other:?}")).into()),
    };
    report.map_err(wrap)
}

/// Execute every listed check in order inside a pool of the configured
/// size, writing `<id>.csv`, `<id>.json` and `manifest.json` to `dir`.
pub fn run_in(config: &ExperimentConfig, dir: &Path) -> Result<RunOutcome, RunError> {
    config.validate()?;
    let threads = resolve_threads(config.experiment.threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))?;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut reports = Vec::new();
    let mut entries = Vec::new();
    for id in &config.checks.list {
        let report = pool.install(|| run_check(config, id))?;
        let csv_name = format!("{id}.csv");
        let json_name = format!("{id}.json");
        let csv_path = dir.join(&csv_name);
        let json_path = dir.join(&json_name);
        let file = fs::File::create(&csv_path).map_err(io_err(&csv_path))?;
        report.write_csv(file).map_err(|source| RunError::Check {
            check: id.clone(),
            source,
        })?;
        let file = fs::File::create(&json_path).map_err(io_err(&json_path))?;
        report.write_json(file).map_err(|source| RunError::Check {
            check: id.clone(),
            source,
        })?;
        entries.push(ManifestEntry {
            id: id.clone(),
            pass: report.pass,
            csv: csv_name,
            json: json_name,
        });
        reports.push(report);
    }
    let manifest = Manifest {
        name: config.experiment.name.clone(),
        config_hash: config.hash(),
        seed: config.experiment.seed,
        threads,
        versions: BTreeMap::from([
            ("fracorlicz".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("format".to_string(), "1".to_string()),
        ]),
        tolerances: config.checks.list.iter().map(|id| (id.clone(), config.tolerance(id))).collect(),
        all_passed: reports.iter().all(InequalityReport::passed),
        checks: entries,
        config: config.to_toml(),
    };
    let path = dir.join("manifest.json");
    let file = fs::File::create(&path).map_err(io_err(&path))?;
    serde_json::to_writer_pretty(file, &manifest).map_err(|e| RunError::Io {
        path: path.display().to_string(),
        source: e.into(),
    })?;
    Ok(RunOutcome {
        dir: dir.to_path_buf(),
        reports,
        manifest,
    })
}

/// Built-in domains, Young families and checks.
pub fn catalog() -> String {
    let mut s = String::new();
    let _ = writeln!(s, "domains:");
    let domain_params = [
        ("interval", "a=0, b=1"),
        ("disk", "cx=0, cy=0, radius=1"),
        ("square", "x0=0, y0=0, side=1"),
        ("annulus", "cx=0, cy=0, r_in=0.5, r_out=1"),
        ("cusp", "s=2"),
        ("halfplane_truncated", "window=1"),
    ];
    for (name, params) in domain_params {
        let _ = writeln!(s, "  {name:<20} ({params})");
    }
    let _ = writeln!(s, "young families:");
    let young_params = [
        ("power", "t^p", "p"),
        ("power_log", "t^p ln(1+t)^alpha", "p, alpha=1"),
        ("power_max", "max(t^p, t^(p+delta))", "p, delta=1"),
        ("power_exp", "t^p exp(c t^alpha)", "p, c=1, alpha=1"),
        ("exp_minus_taylor", "exp(c t^alpha) - taylor_n", "c=1, alpha=1, n=2"),
    ];
    for (name, formula, params) in young_params {
        let _ = writeln!(s, "  {name:<20} {formula:<28} ({params})");
    }
    let _ = writeln!(s, "checks:");
    for (id, sig) in CHECKS {
        let _ = writeln!(s, "  {id:<20} {sig}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_errors_map_to_keys() {
        let e = crate::error::invalid("radius", -1.0, "must be > 0");
        assert_eq!(param_path("domain", &e), "domain.radius");
        assert_eq!(param_path("young", &Error::MissingParameter("p".into())), "young.p");
    }

    #[test]
    fn default_tolerances() {
        assert_eq!(default_tolerance("poincare"), 0.02);
        assert_eq!(default_tolerance("whitney"), 0.0);
        for (id, _) in CHECKS {
            assert!(default_tolerance(id) >= 0.0);
        }
    }

    #[test]
    fn threads_zero_means_all() {
        assert!(resolve_threads(0) >= 1);
        assert_eq!(resolve_threads(3), 3);
    }
}
