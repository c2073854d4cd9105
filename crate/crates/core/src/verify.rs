//! Curvature inequalities of the configuration space, evaluated on concrete
//! inputs. Each check returns a [`CheckReport`] comparing a statistic with
//! the bound it should not exceed.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::calculus::{gamma2_cylinder, gamma_cylinder, grad_cylinder, CylinderFunction};
use crate::configuration::Configuration;
use crate::dynamics::{coupled_heat_step, heat_step_config, labeled_cost};
use crate::error::{Error, Result};
use crate::functional::Functional;
use crate::io::ext_f64;
use crate::rng::{fill_normal, run_blocks, Stream};
use crate::space::{BasePoint, SpaceForm, SpaceKind};
use crate::stats::{mean_std_error, wilson_half_width, Welford};
use crate::transport::{d_upsilon, empirical_w2, hopf_lax, HopfLaxOptions};

pub const REPORT_SCHEMA: &str = "upsilon-lab/report/1";

/// Multiplier on the standard error in one-sided Monte Carlo acceptance.
pub const Z: f64 = 2.0;

/// Outcome of one inequality check.
///
/// `margin = bound − statistic`; the check passes iff
/// `margin ≥ −tolerance − Z·std_error`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub schema: String,
    pub check_name: String,
    pub params: BTreeMap<String, Value>,
    #[serde(with = "ext_f64")]
    pub statistic: f64,
    #[serde(with = "ext_f64")]
    pub bound: f64,
    #[serde(with = "ext_f64")]
    pub margin: f64,
    pub tolerance: f64,
    #[serde(with = "ext_f64::option")]
    pub std_error: Option<f64>,
    pub passed: bool,
    #[serde(default)]
    pub skipped: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
    pub seed: u64,
    pub runtime_ms: u64,
}

impl CheckReport {
    pub fn new(
        check_name: &str,
        params: BTreeMap<String, Value>,
        statistic: f64,
        bound: f64,
        tolerance: f64,
        std_error: Option<f64>,
        seed: u64,
    ) -> Self {
        let margin = bound - statistic;
        let mut r = CheckReport {
            schema: REPORT_SCHEMA.to_string(),
            check_name: check_name.to_string(),
            params,
            statistic,
            bound,
            margin,
            tolerance,
            std_error,
            passed: false,
            skipped: false,
            flags: Vec::new(),
            seed,
            runtime_ms: 0,
        };
        r.passed = r.pass_rule();
        r
    }

    /// A report for an input the check does not apply to (infinite distance).
    pub fn skip(check_name: &str, params: BTreeMap<String, Value>, seed: u64, reason: &str) -> Self {
        let mut r = CheckReport::new(check_name, params, f64::INFINITY, f64::INFINITY, 0.0, None, seed);
        r.margin = f64::NAN;
        r.passed = false;
        r.skipped = true;
        r.flags.push(reason.to_string());
        r
    }

    fn pass_rule(&self) -> bool {
        let slack = self.tolerance + self.std_error.map_or(0.0, |s| Z * s);
        self.margin >= -slack
    }

    /// Marks the report as failed with a reason.
    pub fn flag_failure(mut self, reason: &str) -> Self {
        self.passed = false;
        self.flags.push(reason.to_string());
        self
    }

    fn timed(mut self, start: Instant) -> Self {
        self.runtime_ms = start.elapsed().as_millis() as u64;
        self
    }

    /// Schema and internal-consistency check performed before every emission.
    pub fn validate(&self) -> Result<()> {
        if self.schema != REPORT_SCHEMA {
            return Err(Error::Parse(format!("unknown report schema {}", self.schema)));
        }
        if self.check_name.is_empty() {
            return Err(Error::Parse("report without a check name".into()));
        }
        if !(self.tolerance >= 0.0) || self.std_error.is_some_and(|s| !(s >= 0.0)) {
            return Err(Error::Parse("tolerance and std_error must be nonnegative".into()));
        }
        if self.skipped {
            if self.passed {
                return Err(Error::Parse("a skipped report cannot pass".into()));
            }
            return Ok(());
        }
        let expected = self.pass_rule() && self.flags.is_empty();
        if self.passed != expected {
            return Err(Error::Parse(format!(
                "passed={} contradicts margin {} with tolerance {} and std_error {:?}",
                self.passed, self.margin, self.tolerance, self.std_error
            )));
        }
        Ok(())
    }

    pub fn to_json_line(&self) -> Result<String> {
        self.validate()?;
        serde_json::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn params(pairs: &[(&str, Value)]) -> BTreeMap<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn config_json(g: &Configuration) -> Value {
    json!(g.coords())
}

/// Alexandrov quadruple comparison for `(γ₀; γ₁, γ₂, γ₃)` with the
/// effective bound `min{K, 0}`.
pub fn check_quadruple(gammas: [&Configuration; 4], k: f64, tolerance: f64) -> Result<CheckReport> {
    let start = Instant::now();
    let name = "quadruple";
    let k_eff = k.min(0.0);
    let p = params(&[
        ("space", json!(gammas[0].space().name())),
        ("k", json!(k)),
        ("k_effective", json!(k_eff)),
        ("sizes", json!(gammas.iter().map(|g| g.len()).collect::<Vec<_>>())),
    ]);
    let mut d = [[0.0f64; 4]; 4];
    for i in 0..4 {
        for j in (i + 1)..4 {
            let c = d_upsilon(gammas[i], gammas[j])?;
            if !c.is_finite() {
                return Ok(CheckReport::skip(name, p, 0, "infinite_distance").timed(start));
            }
            d[i][j] = c.distance();
            d[j][i] = d[i][j];
        }
    }
    let (lhs, rhs) = quadruple_sides(&d, k_eff);
    Ok(CheckReport::new(name, p, rhs, lhs, tolerance, None, 0).timed(start))
}

/// Sides `(larger, smaller)` of the comparison for a distance table.
pub fn quadruple_sides(d: &[[f64; 4]; 4], k: f64) -> (f64, f64) {
    if k == 0.0 {
        let lhs: f64 = (1..4).map(|i| d[0][i] * d[0][i]).sum();
        let rhs: f64 = (1..4)
            .flat_map(|i| (1..4).map(move |j| (i, j)))
            .map(|(i, j)| d[i][j] * d[i][j])
            .sum::<f64>()
            / 6.0;
        (lhs, rhs)
    } else if k < 0.0 {
        let l = (-k).sqrt();
        let lhs = (1..4).map(|i| (l * d[0][i]).cosh()).sum::<f64>().powi(2);
        let rhs: f64 = (1..4)
            .flat_map(|i| (1..4).map(move |j| (i, j)))
            .map(|(i, j)| (l * d[i][j]).cosh())
            .sum();
        (lhs, rhs)
    } else {
        // cos form: (Σ cos)² ≤ Σ cos, so the roles swap
        let l = k.sqrt();
        let lhs = (1..4).map(|i| (l * d[0][i]).cos()).sum::<f64>().powi(2);
        let rhs: f64 = (1..4)
            .flat_map(|i| (1..4).map(move |j| (i, j)))
            .map(|(i, j)| (l * d[i][j]).cos())
            .sum();
        (rhs, lhs)
    }
}

/// Bochner inequality `Γ₂^Υ(F) ≥ K Γ^Υ(F)` with `K` the Ricci lower bound.
pub fn check_bochner(f: &CylinderFunction, gamma: &Configuration, tolerance: f64) -> CheckReport {
    let start = Instant::now();
    let k = gamma.space().ric_lower();
    let g1 = gamma_cylinder(f, gamma);
    let g2 = gamma2_cylinder(f, gamma);
    let p = params(&[
        ("space", json!(gamma.space().name())),
        ("k", json!(k)),
        ("gamma", json!(g1)),
        ("gamma2", json!(g2)),
        ("n_points", json!(gamma.len())),
    ]);
    CheckReport::new("bochner", p, k * g1 - g2, 0.0, tolerance, None, 0).timed(start)
}

/// Per-sample gradient components of `F` at the heat-evolved configuration
/// and `Γ^Υ(F)` there; used by the gradient estimate.
fn gradient_samples(
    f: &CylinderFunction,
    gamma: &Configuration,
    t: f64,
    n_samples: usize,
    seed: u64,
    fd_step: f64,
) -> Result<(usize, Vec<f64>, Vec<f64>)> {
    let space = gamma.space().clone();
    let d = space.dim();
    let width = gamma.len() * d;
    let blocks = run_blocks(
        seed,
        n_samples,
        |rng: &mut Stream, len| -> Result<(Vec<f64>, Vec<f64>)> {
            let mut grads = Vec::with_capacity(len * width);
            let mut gammas = Vec::with_capacity(len);
            let mut noise = vec![0.0; space.heat_noise_len(t)];
            let frames: Vec<Vec<Vec<f64>>> = gamma.points().iter().map(|x| space.tangent_frame(x)).collect();
            for _ in 0..len {
                if space.kind() == SpaceKind::Euclidean {
                    // the heat semigroup commutes with gradients on ℝ^d
                    let x = heat_step_config(gamma, t, rng)?;
                    for g in grad_cylinder(f, &x) {
                        grads.extend(g);
                    }
                    gammas.push(gamma_cylinder(f, &x));
                    continue;
                }
                let noises: Vec<Vec<f64>> = (0..gamma.len())
                    .map(|_| {
                        fill_normal(rng, &mut noise);
                        noise.clone()
                    })
                    .collect();
                let endpoints: Vec<BasePoint> = gamma
                    .points()
                    .iter()
                    .zip(&frames)
                    .zip(&noises)
                    .map(|((x, fr), z)| space.heat_path(x, fr, t, z))
                    .collect();
                let evolved = Configuration::from_valid(space.clone(), endpoints);
                gammas.push(gamma_cylinder(f, &evolved));
                for (i, x) in gamma.points().iter().enumerate() {
                    for a in 0..d {
                        let mut side = [0.0; 2];
                        for (s, sign) in side.iter_mut().zip([1.0, -1.0]) {
                            let v: Vec<f64> = frames[i][a].iter().map(|c| sign * fd_step * c).collect();
                            let xp = space.exp(x, &v);
                            let mut fr: Vec<Vec<f64>> = frames[i].iter().map(|e| space.transport(x, &xp, e)).collect();
                            space.reorthonormalize(&xp, &mut fr);
                            let moved = evolved.with_point(i, space.heat_path(&xp, &fr, t, &noises[i]));
                            *s = f.eval(&moved);
                        }
                        grads.push((side[0] - side[1]) / (2.0 * fd_step));
                    }
                }
            }
            Ok((grads, gammas))
        },
    );
    let mut grads = Vec::with_capacity(n_samples * width);
    let mut gammas = Vec::with_capacity(n_samples);
    for b in blocks {
        let (g, h) = b?;
        grads.extend(g);
        gammas.extend(h);
    }
    Ok((width, grads, gammas))
}

/// Gradient estimate `Γ^Υ(T_t F) ≤ e^{−2Kt} T_t Γ^Υ(F)`.
///
/// Both sides use the same heat samples. The left side is the squared
/// Monte Carlo mean of the gradient with the `Var/n` bias removed; the
/// standard error comes from the linearized difference of the two sides.
pub fn check_gradient_estimate(
    f: &CylinderFunction,
    gamma: &Configuration,
    t: f64,
    n_samples: usize,
    seed: u64,
) -> Result<CheckReport> {
    let start = Instant::now();
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("heat time must be nonnegative, got {t}")));
    }
    if n_samples < 2 {
        return Err(Error::domain("gradient estimate needs at least two samples"));
    }
    let space = gamma.space();
    let k = space.ric_lower();
    let fd_step = 1e-4;
    let p = params(&[
        ("space", json!(space.name())),
        ("t", json!(t)),
        ("n_samples", json!(n_samples)),
        ("k", json!(k)),
        ("n_points", json!(gamma.len())),
        (
            "method",
            json!(if space.kind() == SpaceKind::Euclidean {
                "commuting_gradient"
            } else {
                "crn_finite_difference"
            }),
        ),
    ]);
    if t == 0.0 {
        let g = gamma_cylinder(f, gamma);
        return Ok(CheckReport::new("gradient_estimate", p, g, g, 0.0, Some(0.0), seed).timed(start));
    }
    let (width, grads, gammas) = gradient_samples(f, gamma, t, n_samples, seed, fd_step)?;
    let n = n_samples as f64;
    let factor = (-2.0 * k * t).exp();
    let mut means = vec![0.0; width];
    let mut vars = vec![0.0; width];
    for c in 0..width {
        let w: Welford = (0..n_samples).map(|s| grads[s * width + c]).collect();
        means[c] = w.mean();
        vars[c] = w.variance();
    }
    let lhs: f64 = means
        .iter()
        .zip(&vars)
        .map(|(m, v)| m * m - v / n)
        .sum::<f64>()
        .max(0.0);
    let rhs_w: Welford = gammas.iter().copied().collect();
    let rhs = factor * rhs_w.mean();
    let diffs: Vec<f64> = (0..n_samples)
        .map(|s| {
            let lin: f64 = (0..width).map(|c| means[c] * grads[s * width + c]).sum();
            factor * gammas[s] - 2.0 * lin
        })
        .collect();
    let se = mean_std_error(&diffs).1;
    Ok(CheckReport::new("gradient_estimate", p, lhs, rhs, 0.0, Some(se), seed).timed(start))
}

/// Estimator used for the contraction statistic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractionEstimator {
    /// L² cost of the synchronous coupling of the two kernels.
    Coupled,
    /// Empirical `W₂` between independent sample clouds.
    Independent,
}

/// Wasserstein contraction `W₂(p_t^Υ(γ,·), p_t^Υ(σ,·)) ≤ e^{−Kt} d_Υ(γ, σ)`.
pub fn check_contraction(
    gamma: &Configuration,
    sigma: &Configuration,
    t: f64,
    n_samples: usize,
    estimator: ContractionEstimator,
    seed: u64,
) -> Result<CheckReport> {
    let start = Instant::now();
    let name = "contraction";
    let k = gamma.space().ric_lower();
    let p = params(&[
        ("space", json!(gamma.space().name())),
        ("t", json!(t)),
        ("n_samples", json!(n_samples)),
        ("k", json!(k)),
        ("estimator", json!(estimator)),
        ("gamma", config_json(gamma)),
        ("sigma", config_json(sigma)),
    ]);
    if n_samples == 0 {
        return Err(Error::domain("contraction check needs at least one sample"));
    }
    let d = d_upsilon(gamma, sigma)?;
    if !d.is_finite() {
        return Ok(CheckReport::skip(name, p, seed, "infinite_distance").timed(start));
    }
    let bound = (-k * t).exp() * d.distance();
    let (statistic, se) = match estimator {
        ContractionEstimator::Coupled => {
            let blocks = run_blocks(seed, n_samples, |rng, len| -> Result<Vec<f64>> {
                (0..len)
                    .map(|_| coupled_heat_step(gamma, sigma, t, rng).map(|(a, b)| labeled_cost(&a, &b)))
                    .collect()
            });
            let mut costs = Vec::with_capacity(n_samples);
            for b in blocks {
                costs.extend(b?);
            }
            let (m, se2) = mean_std_error(&costs);
            let w = m.sqrt();
            (w, if w > 0.0 { se2 / (2.0 * w) } else { se2.sqrt() })
        }
        ContractionEstimator::Independent => {
            let draw = |sub: u64, g: &Configuration| -> Result<Vec<Configuration>> {
                let blocks = run_blocks(seed ^ sub, n_samples, |rng, len| -> Result<Vec<Configuration>> {
                    (0..len).map(|_| heat_step_config(g, t, rng)).collect()
                });
                let mut out = Vec::with_capacity(n_samples);
                for b in blocks {
                    out.extend(b?);
                }
                Ok(out)
            };
            let a = draw(0x5eed_0001, gamma)?;
            let b = draw(0x5eed_0002, sigma)?;
            let w = empirical_w2(&a, &b)?;
            (w.w2.distance(), w.std_error())
        }
    };
    Ok(CheckReport::new(name, p, statistic, bound, 1e-12 * (1.0 + bound), Some(se), seed).timed(start))
}

/// `c_K(t) = K / (2(1 − e^{−2Kt}))`, with limit `1/(4t)` at `K = 0`.
pub fn harnack_constant(k: f64, t: f64) -> f64 {
    let x = 2.0 * k * t;
    if x.abs() < 1e-12 {
        1.0 / (4.0 * t)
    } else {
        k / (2.0 * -(-x).exp_m1())
    }
}

/// Log-Harnack inequality
/// `T_t(log f)(γ) ≤ log T_t f(σ) + c_K(t) d_Υ²(γ, σ)`.
///
/// Both expectations use the synchronous coupling of the two kernels, so
/// for `γ = σ` the samples coincide and Jensen's inequality holds exactly.
pub fn check_log_harnack(
    f: &dyn Functional,
    gamma: &Configuration,
    sigma: &Configuration,
    t: f64,
    n_samples: usize,
    seed: u64,
) -> Result<CheckReport> {
    let start = Instant::now();
    let name = "log_harnack";
    let k = gamma.space().ric_lower();
    let mut p = params(&[
        ("space", json!(gamma.space().name())),
        ("t", json!(t)),
        ("n_samples", json!(n_samples)),
        ("k", json!(k)),
        ("gamma", config_json(gamma)),
        ("sigma", config_json(sigma)),
    ]);
    if !(t > 0.0) || n_samples < 2 {
        return Err(Error::domain("log-Harnack check needs t > 0 and at least two samples"));
    }
    let d = d_upsilon(gamma, sigma)?;
    if !d.is_finite() {
        return Ok(CheckReport::skip(name, p, seed, "infinite_distance").timed(start));
    }
    let blocks = run_blocks(seed, n_samples, |rng, len| -> Result<Vec<(f64, f64)>> {
        (0..len)
            .map(|_| coupled_heat_step(gamma, sigma, t, rng).map(|(x, y)| (f.eval(&x), f.eval(&y))))
            .collect()
    });
    let mut fx = Vec::with_capacity(n_samples);
    let mut fy = Vec::with_capacity(n_samples);
    for b in blocks {
        for (a, c) in b? {
            if !(a > 0.0 && c > 0.0) {
                return Err(Error::domain("log-Harnack functional must be positive"));
            }
            fx.push(a);
            fy.push(c);
        }
    }
    let log_fx: Vec<f64> = fx.iter().map(|v| v.ln()).collect();
    let (statistic, _) = mean_std_error(&log_fx);
    let (mean_fy, _) = mean_std_error(&fy);
    let c = harnack_constant(k, t);
    let bound = mean_fy.ln() + c * d.squared();
    let diffs: Vec<f64> = fy.iter().zip(&log_fx).map(|(y, lx)| y / mean_fy - lx).collect();
    let se = mean_std_error(&diffs).1;
    p.insert("c_k".into(), json!(c));
    p.insert("d2".into(), json!(d.squared()));
    Ok(CheckReport::new(name, p, statistic, bound, 0.0, Some(se), seed).timed(start))
}

/// Hamilton–Jacobi equation `∂_t Q_t f + ½|DQ_t f|² = 0` along a time grid,
/// with `|DQ_t f|(γ) = d_Υ(γ, η_t)/t` at the Hopf–Lax minimizer `η_t`.
pub fn check_hj(
    f: &dyn Functional,
    gamma: &Configuration,
    t_grid: &[f64],
    bound: f64,
    opts: &HopfLaxOptions,
) -> Result<CheckReport> {
    let start = Instant::now();
    if t_grid.len() < 3 || t_grid.windows(2).any(|w| !(w[1] > w[0])) || !(t_grid[0] > 0.0) {
        return Err(Error::domain(
            "t_grid must hold at least three increasing positive times",
        ));
    }
    let runs = t_grid
        .iter()
        .map(|&t| hopf_lax(f, gamma, t, opts))
        .collect::<Result<Vec<_>>>()?;
    let mut residual = 0.0f64;
    for j in 1..t_grid.len() - 1 {
        let dq = (runs[j + 1].value - runs[j - 1].value) / (t_grid[j + 1] - t_grid[j - 1]);
        let slope = d_upsilon(gamma, &runs[j].minimizer)?.distance() / t_grid[j];
        residual = residual.max((dq + 0.5 * slope * slope).abs());
    }
    let p = params(&[
        ("space", json!(gamma.space().name())),
        ("t_grid", json!(t_grid)),
        ("n_points", json!(gamma.len())),
        ("values", json!(runs.iter().map(|r| r.value).collect::<Vec<_>>())),
    ]);
    let mut report = CheckReport::new("hamilton_jacobi", p, residual, bound, 0.0, None, opts.seed);
    if runs.iter().any(|r| !r.converged) {
        report = report.flag_failure("hopf_lax_not_converged");
    }
    Ok(report.timed(start))
}

/// Heat tail `P[d(X_t, x) ≥ r] ≤ heat_tail_bound(r, t, λ)` at the origin.
///
/// The standard error is the Wilson half-width at `z = 1`.
pub fn check_heat_tail(
    space: &SpaceForm,
    r: f64,
    t: f64,
    n_samples: usize,
    lambda: f64,
    seed: u64,
) -> Result<CheckReport> {
    let start = Instant::now();
    if n_samples == 0 {
        return Err(Error::domain("heat tail check needs at least one sample"));
    }
    let bound = space.heat_tail_bound(r, t, lambda)?;
    let x = space.origin();
    let counts = run_blocks(seed, n_samples, |rng, len| -> Result<u64> {
        let mut hits = 0u64;
        for _ in 0..len {
            if space.dist(&space.heat_step(&x, t, rng)?, &x) >= r {
                hits += 1;
            }
        }
        Ok(hits)
    });
    let mut hits = 0u64;
    for c in counts {
        hits += c?;
    }
    let freq = hits as f64 / n_samples as f64;
    let se = wilson_half_width(hits, n_samples as u64, 1.0);
    let p = params(&[
        ("space", json!(space.name())),
        ("r", json!(r)),
        ("t", json!(t)),
        ("lambda", json!(lambda)),
        ("n_samples", json!(n_samples)),
        ("hits", json!(hits)),
    ]);
    Ok(CheckReport::new("heat_tail", p, freq, bound, 0.0, Some(se), seed).timed(start))
}

/// Exponent `c` in the volume growth bound `vol(B_r) ≤ vol(B_1) e^{cr}`.
pub fn volume_growth_exponent(space: &SpaceForm) -> f64 {
    match space.kind() {
        SpaceKind::Hyperbolic2 => 2.0,
        _ => space.dim() as f64,
    }
}

/// Volume growth `max_r vol(B_r)/(vol(B_1) e^{cr}) ≤ 1` on a radius grid in `[1, ∞)`.
pub fn check_bishop_gromov(space: &SpaceForm, r_grid: &[f64]) -> Result<CheckReport> {
    let start = Instant::now();
    if r_grid.is_empty() || r_grid.iter().any(|r| !(*r >= 1.0)) {
        return Err(Error::domain("radius grid must be nonempty with radii ≥ 1"));
    }
    let c = volume_growth_exponent(space);
    let cap = |r: f64| match space.kind() {
        SpaceKind::Sphere2 => r.min(std::f64::consts::PI * space.radius()),
        _ => r,
    };
    let v1 = space.ball_volume(cap(1.0))?;
    let mut worst = f64::NEG_INFINITY;
    for &r in r_grid {
        worst = worst.max(space.ball_volume(cap(r))? / (v1 * (c * r).exp()));
    }
    let p = params(&[
        ("space", json!(space.name())),
        ("c", json!(c)),
        ("r_grid", json!(r_grid)),
    ]);
    Ok(CheckReport::new("bishop_gromov", p, worst, 1.0, 0.0, None, 0).timed(start))
}
