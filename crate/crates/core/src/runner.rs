//! Seeded execution of a list of checks described by a TOML run file.
//!
//! ```toml
//! seed = 7
//! output = "reports.jsonl"
//!
//! [space]
//! kind = "euclidean"
//! dim = 1
//!
//! [[checks]]
//! name = "quadruple"
//! configs = [{ points = [[0.0]] }, { points = [[1.0]] }, { points = [[2.0]] }, { points = [[3.0]] }]
//! ```
//!
//! Points are given in ambient coordinates. Check `j` draws everything it
//! needs from stream `j` of the master seed, so a run is reproducible
//! whatever the order or concurrency of execution.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::approximation::{check_appendix_convergence, write_convergence_csv, Pairing};
use crate::calculus::CylinderFunction;
use crate::configuration::{sample_poisson, sample_uniform, Configuration, Region};
use crate::error::{Error, Result};
use crate::functional::{CatalogFunctional, Functional};
use crate::rng::{child_seed, stream, Stream};
use crate::space::{BasePoint, SpaceForm};
use crate::transport::HopfLaxOptions;
use crate::verify::{
    check_bishop_gromov, check_bochner, check_contraction, check_gradient_estimate, check_heat_tail, check_hj,
    check_log_harnack, check_quadruple, CheckReport, ContractionEstimator,
};

/// Where a configuration in a run file comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ConfigSource {
    Points { points: Vec<Vec<f64>> },
    Poisson { region: Region, intensity: f64 },
    Uniform { region: Region, count: usize },
}

impl ConfigSource {
    pub fn realize(&self, space: &SpaceForm, rng: &mut Stream) -> Result<Configuration> {
        match self {
            ConfigSource::Points { points } => {
                Configuration::new(space.clone(), points.iter().cloned().map(BasePoint::new).collect())
            }
            ConfigSource::Poisson { region, intensity } => sample_poisson(space, region, *intensity, rng),
            ConfigSource::Uniform { region, count } => sample_uniform(space, region, *count, rng),
        }
    }
}

/// One entry of the `checks` list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    Quadruple {
        configs: [ConfigSource; 4],
        /// Defaults to the sectional curvature of the base space.
        #[serde(default)]
        k: Option<f64>,
    },
    Bochner {
        function: CylinderFunction,
        gamma: ConfigSource,
    },
    GradientEstimate {
        function: CylinderFunction,
        gamma: ConfigSource,
        t: f64,
        #[serde(default)]
        n_samples: Option<usize>,
    },
    Contraction {
        gamma: ConfigSource,
        sigma: ConfigSource,
        t: f64,
        #[serde(default)]
        n_samples: Option<usize>,
        #[serde(default = "coupled")]
        estimator: ContractionEstimator,
    },
    LogHarnack {
        functional: CatalogFunctional,
        gamma: ConfigSource,
        sigma: ConfigSource,
        t: f64,
        #[serde(default)]
        n_samples: Option<usize>,
    },
    HamiltonJacobi {
        functional: CatalogFunctional,
        gamma: ConfigSource,
        t_grid: Vec<f64>,
        #[serde(default)]
        bound: Option<f64>,
    },
    HeatTail {
        r: f64,
        t: f64,
        #[serde(default = "default_lambda")]
        lambda: f64,
        #[serde(default)]
        n_samples: Option<usize>,
    },
    BishopGromov {
        r_grid: Vec<f64>,
    },
    /// `Ŵ₂²(μ, μ_n) ≤ 1/n` for `μ = ν = δ_γ` along a grid of windows.
    AppendixConvergence {
        gamma: ConfigSource,
        n_grid: Vec<u64>,
        #[serde(default)]
        n_samples: Option<usize>,
        #[serde(default)]
        x0: Option<BasePoint>,
        #[serde(default)]
        csv: Option<PathBuf>,
    },
}

fn coupled() -> ContractionEstimator {
    ContractionEstimator::Coupled
}

fn default_lambda() -> f64 {
    0.45
}

impl CheckSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CheckSpec::Quadruple { .. } => "quadruple",
            CheckSpec::Bochner { .. } => "bochner",
            CheckSpec::GradientEstimate { .. } => "gradient_estimate",
            CheckSpec::Contraction { .. } => "contraction",
            CheckSpec::LogHarnack { .. } => "log_harnack",
            CheckSpec::HamiltonJacobi { .. } => "hamilton_jacobi",
            CheckSpec::HeatTail { .. } => "heat_tail",
            CheckSpec::BishopGromov { .. } => "bishop_gromov",
            CheckSpec::AppendixConvergence { .. } => "appendix_convergence",
        }
    }
}

/// Default Monte Carlo sample counts per check.
pub fn default_samples(check: &str) -> usize {
    match check {
        "gradient_estimate" | "log_harnack" => 100_000,
        "contraction" => 200,
        "heat_tail" => 1_000_000,
        "appendix_convergence" => 50,
        _ => 1,
    }
}

/// Default tolerances per check.
pub fn default_tolerance(check: &str) -> f64 {
    match check {
        "quadruple" => 1e-9,
        "bochner" => 1e-8,
        "hamilton_jacobi" => 1e-3,
        _ => 0.0,
    }
}

/// A parsed run file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub space: SpaceForm,
    pub seed: u64,
    #[serde(default)]
    pub samples: BTreeMap<String, usize>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
}

const KNOWN_CHECKS: [&str; 9] = [
    "quadruple",
    "bochner",
    "gradient_estimate",
    "contraction",
    "log_harnack",
    "hamilton_jacobi",
    "heat_tail",
    "bishop_gromov",
    "appendix_convergence",
];

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        for key in cfg.samples.keys().chain(cfg.tolerances.keys()) {
            if !KNOWN_CHECKS.contains(&key.as_str()) {
                return Err(Error::Parse(format!("unknown check name '{key}'")));
            }
        }
        if let Some((k, v)) = cfg.tolerances.iter().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::Parse(format!(
                "tolerance for '{k}' must be nonnegative, got {v}"
            )));
        }
        Ok(cfg)
    }

    fn samples_for(&self, check: &str, explicit: Option<usize>) -> usize {
        explicit
            .or_else(|| self.samples.get(check).copied())
            .unwrap_or_else(|| default_samples(check))
    }

    fn tolerance_for(&self, check: &str) -> f64 {
        self.tolerances
            .get(check)
            .copied()
            .unwrap_or_else(|| default_tolerance(check))
    }
}

/// Runs check `index` of the configuration.
pub fn run_check(cfg: &RunConfig, index: usize) -> Result<CheckReport> {
    let spec = &cfg.checks[index];
    let space = &cfg.space;
    let mut rng = stream(cfg.seed, index as u64);
    let name = spec.name();
    let tol = cfg.tolerance_for(name);
    let mut report = match spec {
        CheckSpec::Quadruple { configs, k } => {
            let g = configs
                .iter()
                .map(|c| c.realize(space, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            let k = k.unwrap_or_else(|| space.sec_lower());
            check_quadruple([&g[0], &g[1], &g[2], &g[3]], k, tol)?
        }
        CheckSpec::Bochner { function, gamma } => {
            function.validate(space)?;
            check_bochner(function, &gamma.realize(space, &mut rng)?, tol)
        }
        CheckSpec::GradientEstimate {
            function,
            gamma,
            t,
            n_samples,
        } => {
            function.validate(space)?;
            let g = gamma.realize(space, &mut rng)?;
            check_gradient_estimate(
                function,
                &g,
                *t,
                cfg.samples_for(name, *n_samples),
                child_seed(&mut rng),
            )?
        }
        CheckSpec::Contraction {
            gamma,
            sigma,
            t,
            n_samples,
            estimator,
        } => {
            let g = gamma.realize(space, &mut rng)?;
            let s = sigma.realize(space, &mut rng)?;
            check_contraction(
                &g,
                &s,
                *t,
                cfg.samples_for(name, *n_samples),
                *estimator,
                child_seed(&mut rng),
            )?
        }
        CheckSpec::LogHarnack {
            functional,
            gamma,
            sigma,
            t,
            n_samples,
        } => {
            functional.validate(space)?;
            let g = gamma.realize(space, &mut rng)?;
            let s = sigma.realize(space, &mut rng)?;
            let f: &dyn Functional = functional;
            check_log_harnack(f, &g, &s, *t, cfg.samples_for(name, *n_samples), child_seed(&mut rng))?
        }
        CheckSpec::HamiltonJacobi {
            functional,
            gamma,
            t_grid,
            bound,
        } => {
            functional.validate(space)?;
            let g = gamma.realize(space, &mut rng)?;
            let opts = HopfLaxOptions {
                tol: 1e-14,
                seed: child_seed(&mut rng),
                ..HopfLaxOptions::default()
            };
            check_hj(functional, &g, t_grid, bound.unwrap_or(tol), &opts)?
        }
        CheckSpec::HeatTail {
            r,
            t,
            lambda,
            n_samples,
        } => check_heat_tail(
            space,
            *r,
            *t,
            cfg.samples_for(name, *n_samples),
            *lambda,
            child_seed(&mut rng),
        )?,
        CheckSpec::BishopGromov { r_grid } => check_bishop_gromov(space, r_grid)?,
        CheckSpec::AppendixConvergence {
            gamma,
            n_grid,
            n_samples,
            x0,
            csv,
        } => {
            let g = gamma.realize(space, &mut rng)?;
            let mu = vec![g.clone(); cfg.samples_for(name, *n_samples).max(1)];
            let x0 = x0.clone().unwrap_or_else(|| space.origin());
            space.validate(&x0)?;
            let seed = child_seed(&mut rng);
            let start = std::time::Instant::now();
            let seq = check_appendix_convergence(&mu, &mu, n_grid, &x0, Pairing::Optimal, seed)?;
            if let Some(path) = csv {
                write_convergence_csv(std::fs::File::create(path)?, &seq)?;
            }
            // worst excess of Ŵ₂² over 1/n, with the error of that grid point
            let worst = seq
                .iter()
                .max_by(|a, b| (a.w2_squared - 1.0 / a.n as f64).total_cmp(&(b.w2_squared - 1.0 / b.n as f64)));
            let (stat, se) = worst.map_or((0.0, 0.0), |p| (p.w2_squared - 1.0 / p.n as f64, p.std_error_squared));
            let mut params = BTreeMap::new();
            params.insert("space".into(), json!(space.name()));
            params.insert("n_grid".into(), json!(n_grid));
            params.insert(
                "w2_squared".into(),
                json!(seq.iter().map(|p| p.w2_squared).collect::<Vec<_>>()),
            );
            params.insert("gamma".into(), json!(g.coords()));
            let mut r = CheckReport::new(name, params, stat, 0.0, tol, Some(se), seed);
            r.runtime_ms = start.elapsed().as_millis() as u64;
            r
        }
    };
    report.params.insert("check_index".into(), json!(index));
    Ok(report)
}

/// Runs every check (concurrently when `jobs > 1`) and returns the reports
/// in the order of the run file.
pub fn run(cfg: &RunConfig, jobs: usize) -> Result<Vec<CheckReport>> {
    let exec = || -> Result<Vec<CheckReport>> {
        (0..cfg.checks.len())
            .into_par_iter()
            .map(|i| run_check(cfg, i))
            .collect()
    };
    if jobs == 0 {
        return exec();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::domain(e.to_string()))?;
    pool.install(exec)
}

/// Writes reports as JSON lines, validating each one first.
pub fn write_reports<W: Write>(mut out: W, reports: &[CheckReport]) -> Result<()> {
    for r in reports {
        writeln!(out, "{}", r.to_json_line()?)?;
    }
    out.flush()?;
    Ok(())
}
