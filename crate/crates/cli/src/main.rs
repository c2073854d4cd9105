//! `upsilon-lab`: run verification suites and work with configuration files.
//!
//! Exit codes: 0 on success (for `run`, every check passed), 1 when a check
//! failed, 2 on malformed input.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;

use upsilon_core::configuration::{sample_poisson, Region};
use upsilon_core::dynamics::{evolve, TrajectoryWriter};
use upsilon_core::functional::CatalogFunctional;
use upsilon_core::io::{config_to_csv, read_configuration, write_configuration};
use upsilon_core::rng::Stream;
use upsilon_core::runner::{run, write_reports, RunConfig};
use upsilon_core::space::{BasePoint, SpaceDescriptor};
use upsilon_core::transport::{d_upsilon, hopf_lax, HopfLaxOptions};
use upsilon_core::{Error, SpaceForm};

#[derive(Parser, Debug)]
#[command(name = "upsilon-lab", version, about = "Curvature checks on configuration spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Execute the checks of a TOML run file and write JSON-lines reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed of the run file.
        #[arg(long)]
        seed: Option<u64>,
        /// Report file; defaults to the run file's `output`, else stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Print the configuration distance between two files.
    Dist {
        file_a: PathBuf,
        file_b: PathBuf,
        /// Print the matching as JSON instead.
        #[arg(long)]
        json: bool,
    },
    /// Sample a Poisson configuration into a CSV or JSON file.
    Sample(SampleArgs),
    /// Run the heat semigroup from a configuration and dump trajectories as CSV.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated nondecreasing times.
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the Hopf–Lax semigroup of a catalog functional.
    Hopflax {
        #[arg(long)]
        config: PathBuf,
        /// Functional as JSON, e.g. '{"kind":"distance_sum","center":[0.0]}'.
        #[arg(long)]
        functional: String,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// Space descriptor as JSON, e.g. '{"kind":"euclidean","dim":2}'.
    #[arg(long)]
    space: String,
    /// Ball center in ambient coordinates (comma-separated); defaults to the origin.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    center: Option<Vec<f64>>,
    #[arg(long, conflicts_with_all = ["lo", "hi"])]
    radius: Option<f64>,
    /// Box corners (Euclidean only).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "hi")]
    lo: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "lo")]
    hi: Option<Vec<f64>>,
    #[arg(long)]
    intensity: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Checks,
    Input(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.into())
    }
}

fn parse_space(text: &str) -> anyhow::Result<SpaceForm> {
    let desc: SpaceDescriptor = serde_json::from_str(text).context("space descriptor")?;
    Ok(SpaceForm::try_from(desc)?)
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_run(config: &Path, seed: Option<u64>, out: Option<PathBuf>, jobs: usize) -> Result<(), Failure> {
    let text = fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let mut cfg = RunConfig::from_toml_str(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    log::info!("running {} checks with seed {}", cfg.checks.len(), cfg.seed);
    let reports = run(&cfg, jobs)?;
    let target = out.or_else(|| cfg.output.clone());
    let mut buf = Vec::new();
    write_reports(&mut buf, &reports)?;
    emit(target.as_deref(), std::str::from_utf8(&buf).map_err(|e| anyhow!(e))?)?;
    for r in &reports {
        log::info!(
            "{}: {} (margin {})",
            r.check_name,
            if r.passed { "pass" } else { "FAIL" },
            r.margin
        );
    }
    if reports.iter().all(|r| r.passed) {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn cmd_dist(a: &Path, b: &Path, json: bool) -> Result<(), Failure> {
    let ga = read_configuration(a).with_context(|| format!("reading {}", a.display()))?;
    let gb = read_configuration(b).with_context(|| format!("reading {}", b.display()))?;
    if json {
        let text = if ga.len() == gb.len() {
            serde_json::to_string(&upsilon_core::transport::optimal_matching(&ga, &gb)?).map_err(|e| anyhow!(e))?
        } else {
            r#"{"d2":"inf","pairs":[]}"#.to_string()
        };
        println!("{text}");
        return Ok(());
    }
    let d = d_upsilon(&ga, &gb)?;
    if d.is_finite() {
        println!("d2 = {}\nd = {}", d.squared(), d.distance());
    } else {
        println!("d2 = inf\nd = inf");
    }
    Ok(())
}

fn cmd_sample(args: &SampleArgs) -> Result<(), Failure> {
    let space = parse_space(&args.space)?;
    let region = match (&args.lo, &args.hi) {
        (Some(lo), Some(hi)) => Region::Box {
            lo: lo.clone(),
            hi: hi.clone(),
        },
        _ => {
            let center = match &args.center {
                Some(c) => BasePoint::new(c.clone()),
                None => space.origin(),
            };
            let radius = args
                .radius
                .ok_or_else(|| anyhow!("--radius or --lo/--hi is required"))?;
            Region::ball(center, radius)
        }
    };
    let mut rng = Stream::seed_from_u64(args.seed);
    let gamma = sample_poisson(&space, &region, args.intensity, &mut rng)?;
    match &args.out {
        Some(p) => write_configuration(p, &gamma)?,
        None => emit(None, &config_to_csv(&gamma)?)?,
    }
    Ok(())
}

fn cmd_evolve(config: &Path, times: &[f64], samples: usize, seed: u64, out: Option<&Path>) -> Result<(), Failure> {
    let gamma = read_configuration(config).with_context(|| format!("reading {}", config.display()))?;
    let mut rng = Stream::seed_from_u64(seed);
    let mut w = TrajectoryWriter::new(Vec::new(), gamma.space().ambient_dim())?;
    for id in 0..samples {
        let traj = evolve(&gamma, times, &mut rng)?;
        w.write(id, times, &traj)?;
    }
    let bytes = w.finish()?;
    emit(out, std::str::from_utf8(&bytes).map_err(|e| anyhow!(e))?)?;
    Ok(())
}

fn cmd_hopflax(config: &Path, functional: &str, t: f64, seed: u64) -> Result<(), Failure> {
    let gamma = read_configuration(config).with_context(|| format!("reading {}", config.display()))?;
    let f: CatalogFunctional = serde_json::from_str(functional).context("functional")?;
    f.validate(gamma.space())?;
    let opts = HopfLaxOptions {
        seed,
        ..HopfLaxOptions::default()
    };
    let r = hopf_lax(&f, &gamma, t, &opts)?;
    let out = serde_json::json!({
        "value": r.value,
        "converged": r.converged,
        "sweeps": r.sweeps,
        "minimizer": r.minimizer.coords(),
    });
    println!("{out}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            config,
            seed,
            out,
            jobs,
        } => cmd_run(config, *seed, out.clone(), *jobs),
        Command::Dist { file_a, file_b, json } => cmd_dist(file_a, file_b, *json),
        Command::Sample(args) => cmd_sample(args),
        Command::Evolve {
            config,
            times,
            samples,
            seed,
            out,
        } => cmd_evolve(config, times, *samples, *seed, out.as_deref()),
        Command::Hopflax {
            config,
            functional,
            t,
            seed,
        } => cmd_hopflax(config, functional, *t, *seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
