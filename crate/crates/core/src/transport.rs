//! The configuration distance `d_Υ`, configuration geodesics, empirical
//! Wasserstein distances between samples of configurations, and the
//! Hopf–Lax inf-convolution.
//!
//! `d_Υ²(γ, ω)` is the minimal matching cost `Σ d²(x_i, y_σ(i))` over
//! permutations when `|γ| = |ω|`, and `+∞` otherwise. `W₂²` between
//! measures on configurations is `inf ∫ d_Υ² dq` over couplings, with no
//! factor one half.

use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment;
use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::functional::Functional;
use crate::io::ext_f64;
use crate::rng::{fill_normal, Stream};
use crate::space::BasePoint;

/// A squared cost that may be `+∞`; reports both the square and the root.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtendedCost {
    #[serde(with = "ext_f64")]
    d2: f64,
}

impl ExtendedCost {
    pub const INFINITE: ExtendedCost = ExtendedCost { d2: f64::INFINITY };

    pub fn finite(d2: f64) -> Self {
        debug_assert!(d2 >= 0.0 && d2.is_finite());
        ExtendedCost { d2 }
    }

    pub fn is_finite(&self) -> bool {
        self.d2.is_finite()
    }

    /// The squared value (`+∞` when infinite).
    pub fn squared(&self) -> f64 {
        self.d2
    }

    pub fn distance(&self) -> f64 {
        self.d2.sqrt()
    }
}

/// A bijective pairing `i → σ(i)` with its squared-distance cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    #[serde(rename = "d2")]
    pub squared_cost: f64,
    pub pairs: Vec<(usize, usize)>,
}

impl Matching {
    /// `σ` as a vector: `perm[i] = σ(i)`.
    pub fn permutation(&self) -> Vec<usize> {
        self.pairs.iter().map(|&(_, j)| j).collect()
    }
}

fn same_space(a: &Configuration, b: &Configuration) -> Result<()> {
    if a.space() != b.space() {
        Err(Error::SpaceMismatch)
    } else {
        Ok(())
    }
}

/// Row-major matrix of squared base distances `d²(x_i, y_j)`.
pub fn cost_matrix(gamma: &Configuration, omega: &Configuration) -> Vec<f64> {
    let s = gamma.space();
    gamma
        .points()
        .iter()
        .flat_map(|x| omega.points().iter().map(move |y| s.dist2(x, y)))
        .collect()
}

/// Optimal matching between equal-cardinality configurations. Among optimal
/// permutations the lexicographically smallest one is returned.
pub fn optimal_matching(gamma: &Configuration, omega: &Configuration) -> Result<Matching> {
    same_space(gamma, omega)?;
    let n = gamma.len();
    if n != omega.len() {
        return Err(Error::InfiniteDistance(n, omega.len()));
    }
    let cost = cost_matrix(gamma, omega);
    let a = assignment::solve_lexicographic(n, &cost)
        .ok_or_else(|| Error::domain("assignment solver found no finite matching"))?;
    Ok(Matching {
        squared_cost: a.cost,
        pairs: a.row_to_col.into_iter().enumerate().collect(),
    })
}

/// `d_Υ(γ, ω)`: `+∞` across cardinalities, else the optimal matching cost.
pub fn d_upsilon(gamma: &Configuration, omega: &Configuration) -> Result<ExtendedCost> {
    same_space(gamma, omega)?;
    if gamma.len() != omega.len() {
        return Ok(ExtendedCost::INFINITE);
    }
    Ok(ExtendedCost::finite(optimal_matching(gamma, omega)?.squared_cost))
}

/// `ω` relabeled so that its point `i` is matched to point `i` of `γ`.
pub fn align(gamma: &Configuration, omega: &Configuration) -> Result<(Matching, Configuration)> {
    let m = optimal_matching(gamma, omega)?;
    let pts = m.pairs.iter().map(|&(_, j)| omega.points()[j].clone()).collect();
    Ok((m, Configuration::new(omega.space().clone(), pts)?))
}

/// Point of the configuration geodesic from `γ` to `ω` at time `s`: every
/// matched pair moves along its base geodesic.
pub fn config_geodesic(gamma: &Configuration, omega: &Configuration, s: f64) -> Result<Configuration> {
    let (_, aligned) = align(gamma, omega)?;
    let space = gamma.space();
    let pts = gamma
        .points()
        .iter()
        .zip(aligned.points())
        .map(|(x, y)| space.geodesic_point(x, y, s))
        .collect::<Result<Vec<_>>>()?;
    Configuration::new(space.clone(), pts)
}

/// Empirical `W₂` between two equally sized samples with uniform weights.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmpiricalW2 {
    /// `W₂²` and `W₂`.
    pub w2: ExtendedCost,
    /// Outer assignment `a_i → b_j` (empty when infinite).
    pub pairs: Vec<(usize, usize)>,
    /// `d_Υ²` of each assigned pair.
    pub pair_costs: Vec<f64>,
}

impl EmpiricalW2 {
    /// Standard error of `Ŵ₂` from the spread of the matched costs (delta method).
    pub fn std_error(&self) -> f64 {
        let n = self.pair_costs.len();
        if n < 2 || !self.w2.is_finite() {
            return 0.0;
        }
        let se2 = crate::stats::mean_std_error(&self.pair_costs).1;
        let w = self.w2.distance();
        if w > 0.0 {
            se2 / (2.0 * w)
        } else {
            se2.sqrt()
        }
    }
}

/// Matrix of pairwise `d_Υ²` values, built in parallel, `+∞` across cardinalities.
pub fn pairwise_d2(a: &[Configuration], b: &[Configuration]) -> Result<Vec<f64>> {
    let rows: Vec<Result<Vec<f64>>> = a
        .par_iter()
        .map(|ga| b.iter().map(|gb| d_upsilon(ga, gb).map(|c| c.squared())).collect())
        .collect();
    let mut out = Vec::with_capacity(a.len() * b.len());
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

/// `Ŵ₂` between the empirical measures of two sample lists of equal size.
pub fn empirical_w2(samples_a: &[Configuration], samples_b: &[Configuration]) -> Result<EmpiricalW2> {
    let n = samples_a.len();
    if n == 0 {
        return Err(Error::domain("empirical W2 needs at least one sample"));
    }
    if samples_b.len() != n {
        return Err(Error::domain(format!(
            "sample counts differ ({n} vs {})",
            samples_b.len()
        )));
    }
    let cost = pairwise_d2(samples_a, samples_b)?;
    match assignment::solve(n, &cost) {
        None => Ok(EmpiricalW2 {
            w2: ExtendedCost::INFINITE,
            pairs: Vec::new(),
            pair_costs: Vec::new(),
        }),
        Some(a) => {
            let pair_costs: Vec<f64> = a.row_to_col.iter().enumerate().map(|(i, &j)| cost[i * n + j]).collect();
            Ok(EmpiricalW2 {
                w2: ExtendedCost::finite(a.cost / n as f64),
                pairs: a.row_to_col.into_iter().enumerate().collect(),
                pair_costs,
            })
        }
    }
}

/// Solver settings for [`hopf_lax`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HopfLaxOptions {
    /// Number of starts: `γ` itself plus Gaussian perturbations at scale `√t`.
    pub starts: usize,
    pub max_sweeps: usize,
    /// Stop when a sweep lowers the objective by less than `tol·(1 + |value|)`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for HopfLaxOptions {
    fn default() -> Self {
        HopfLaxOptions {
            starts: 8,
            max_sweeps: 500,
            tol: 1e-8,
            seed: 0,
        }
    }
}

/// Result of the Hopf–Lax minimization at one `(γ, t)`.
#[derive(Clone, Debug)]
pub struct HopfLax {
    pub value: f64,
    pub minimizer: Configuration,
    pub converged: bool,
    pub sweeps: usize,
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimization of `phi` on `[lo, hi]`.
fn golden_section(phi: &mut dyn FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut a = hi - GOLDEN * (hi - lo);
    let mut b = lo + GOLDEN * (hi - lo);
    let mut fa = phi(a);
    let mut fb = phi(b);
    while hi - lo > tol {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - GOLDEN * (hi - lo);
            fa = phi(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + GOLDEN * (hi - lo);
            fb = phi(b);
        }
    }
    if fa <= fb {
        (a, fa)
    } else {
        (b, fb)
    }
}

/// Hopf–Lax semigroup `Q_t f(γ) = inf_η f(η) + d_Υ²(γ, η)/(2t)` over the
/// cardinality fiber of `γ`, by multistart block-coordinate descent:
/// rematch, then minimize each point along its tangent directions.
pub fn hopf_lax(f: &dyn Functional, gamma: &Configuration, t: f64, opts: &HopfLaxOptions) -> Result<HopfLax> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("Hopf-Lax time must be positive, got {t}")));
    }
    let space = gamma.space().clone();
    let mut rng = Stream::seed_from_u64(opts.seed);
    let mut best: Option<HopfLax> = None;
    for start in 0..opts.starts.max(1) {
        let init = if start == 0 {
            gamma.clone()
        } else {
            let pts = gamma
                .points()
                .iter()
                .map(|x| {
                    let mut z = vec![0.0; space.dim()];
                    fill_normal(&mut rng, &mut z);
                    z.iter_mut().for_each(|c| *c *= t.sqrt());
                    let frame = space.tangent_frame(x);
                    space.exp(x, &space.combine(&frame, &z))
                })
                .collect();
            Configuration::from_valid(space.clone(), pts)
        };
        let run = descend(f, gamma, init, t, opts)?;
        if best.as_ref().is_none_or(|b| run.value < b.value) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one start"))
}

fn objective(f: &dyn Functional, gamma: &Configuration, eta: &Configuration, t: f64) -> Result<f64> {
    Ok(f.eval(eta) + d_upsilon(gamma, eta)?.squared() / (2.0 * t))
}

fn descend(
    f: &dyn Functional,
    gamma: &Configuration,
    mut eta: Configuration,
    t: f64,
    opts: &HopfLaxOptions,
) -> Result<HopfLax> {
    let space = gamma.space().clone();
    let n = gamma.len();
    let mut value = objective(f, gamma, &eta, t)?;
    let mut converged = n == 0;
    let mut sweeps = 0;
    while !converged && sweeps < opts.max_sweeps {
        sweeps += 1;
        // targets[i] is the point of γ matched to η_i
        let m = optimal_matching(&eta, gamma)?;
        let targets: Vec<BasePoint> = m.pairs.iter().map(|&(_, j)| gamma.points()[j].clone()).collect();
        for (i, target) in targets.iter().enumerate() {
            let frame = space.tangent_frame(&eta.points()[i]);
            for e in &frame {
                let y0 = eta.points()[i].clone();
                let reach = space.dist(&y0, target) + 3.0 * t.sqrt();
                let mut phi = |s: f64| {
                    let y = space.exp(&y0, &e.iter().map(|c| c * s).collect::<Vec<_>>());
                    let trial = eta.with_point(i, y.clone());
                    f.eval(&trial) + space.dist2(&y, target) / (2.0 * t)
                };
                let here = phi(0.0);
                let (s, v) = golden_section(&mut phi, -reach, reach, 1e-10 * (1.0 + reach));
                if v < here {
                    let y = space.exp(&y0, &e.iter().map(|c| c * s).collect::<Vec<_>>());
                    eta = eta.with_point(i, y);
                }
            }
        }
        let next = objective(f, gamma, &eta, t)?;
        if value - next < opts.tol * (1.0 + next.abs()) {
            converged = true;
        }
        value = next.min(value);
    }
    Ok(HopfLax {
        value,
        minimizer: eta,
        converged,
        sweeps,
    })
}
