use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use fracorlicz::experiment::{self, ConfigError, ExperimentConfig, RunError};
use fracorlicz::geometry::Grid;
use fracorlicz::norms::{luxemburg_seminorm, orlicz_norm, SampledFunction};
use fracorlicz::whitney::ExtensionOperator;

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "fracorlicz", version, about = "Fractional Orlicz-Sobolev experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks listed in a config.
    Run {
        config: PathBuf,
        /// Output root (default: $FRACORLICZ_OUT, else ./runs).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the configured thread count.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print built-in domains, Young families and checks.
    List,
    /// Write the Whitney decomposition (CSV, SVG), reflected cubes and the
    /// extension of the first family member.
    WhitneyDump {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seminorm and Orlicz norm of a CSV-supplied function.
    Norm { config: PathBuf },
}

enum Failure {
    Config(ConfigError),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Config(c) => Failure::Config(c),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<fracorlicz::Error> for Failure {
    fn from(e: fracorlicz::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::Runtime(format!("{}: {e}", path.display()))
}

fn run(config: &Path, out: Option<&Path>, threads: Option<usize>) -> Result<bool, Failure> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(t) = threads {
        cfg.experiment.threads = t;
    }
    let dir = cfg.output_dir(&experiment::output_root(out));
    let outcome = experiment::run_in(&cfg, &dir)?;
    for r in &outcome.reports {
        let verdict = match r.pass {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "report",
        };
        println!("{:<14} {verdict:<6} max_ratio={:.6e} cases={} {:.2}s", r.id, r.max_ratio, r.case_count, r.runtime_s);
    }
    println!("wrote {}", outcome.dir.display());
    Ok(outcome.all_passed())
}

fn whitney_dump(config: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let cfg = ExperimentConfig::load(config)?;
    let domain = cfg.build_domain()?;
    let dir = cfg.output_dir(&experiment::output_root(out));
    fs::create_dir_all(&dir).map_err(io(&dir))?;
    let op = ExtensionOperator::build(domain.clone(), &cfg.extension_config())?;
    let d = op.decomposition();
    let path = dir.join("whitney.csv");
    d.write_csv(fs::File::create(&path).map_err(io(&path))?)?;
    if domain.dim() == 2 {
        let path = dir.join("whitney.svg");
        d.write_svg(fs::File::create(&path).map_err(io(&path))?)?;
    }
    let path = dir.join("reflected.csv");
    let mut text = String::from("cube,mode,anchor_x,anchor_y,measure,enlargements\n");
    for (q, r) in op.reflected().iter().enumerate() {
        let mode = match r.mode {
            fracorlicz::whitney::ReflectMode::Small => "small",
            fracorlicz::whitney::ReflectMode::Large => "large",
        };
        text.push_str(&format!("{q},{mode},{},{},{},{}\n", r.anchor[0], r.anchor[1], r.measure, r.enlargements));
    }
    fs::write(&path, text).map_err(io(&path))?;
    if let Some(member) = cfg.members(&domain)?.first() {
        let u = member.sample(op.grid(), op.domain_cells())?;
        let eu = op.extend(&u)?;
        let path = dir.join("extension.csv");
        eu.write_csv(fs::File::create(&path).map_err(io(&path))?)?;
    }
    let path = dir.join("summary.json");
    let json = serde_json::to_string_pretty(op.summary()).map_err(|e| Failure::Runtime(e.to_string()))?;
    fs::write(&path, json).map_err(io(&path))?;
    println!("wrote {}", dir.display());
    Ok(())
}

fn norm(config: &Path) -> Result<(), Failure> {
    let cfg = ExperimentConfig::load(config)?;
    let Some(section) = &cfg.norm else {
        return Err(Failure::Config(ConfigError {
            path: "norm.input".into(),
            message: "the norm verb needs a [norm] section".into(),
        }));
    };
    let input = config.parent().unwrap_or(Path::new(".")).join(&section.input);
    let domain = cfg.build_domain()?;
    let phi = cfg.build_young()?;
    let res = *cfg.grid.resolutions.last().expect("validated");
    let grid = Arc::new(Grid::over_domain(domain, res)?);
    let file = fs::File::open(&input).map_err(io(&input))?;
    let u = SampledFunction::read_csv(grid, file, &section.input)?;
    let semi = luxemburg_seminorm(&u, &phi, cfg.checks.beta)?;
    let orlicz = orlicz_norm(&u, &phi)?;
    println!(
        "{}",
        serde_json::json!({
            "input": section.input,
            "cells": u.len(),
            "phi": phi.to_string(),
            "beta": cfg.checks.beta,
            "seminorm": semi,
            "orlicz_norm": orlicz,
        })
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, out, threads } => run(config, out.as_deref(), *threads).map(|ok| if ok { 0 } else { EXIT_FAIL }),
        Command::List => {
            print!("{}", experiment::catalog());
            Ok(0)
        }
        Command::WhitneyDump { config, out } => whitney_dump(config, out.as_deref()).map(|_| 0),
        Command::Norm { config } => norm(config).map(|_| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
