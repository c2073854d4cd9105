//! Approximation of a measure on configurations by measures of finite
//! entropy: swap in the points of a second configuration outside a ball,
//! then smear the points inside the ball over small balls of radius
//! `α = 1/(2√(n·k))`.

use std::io::Write;

use log::warn;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::configuration::{Configuration, Region};
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::space::{unit_ball_volume, BasePoint, SpaceForm, SpaceKind};
use crate::transport::{empirical_w2, optimal_matching};

fn ball_parts(space: &SpaceForm, ball: &Region) -> Result<(BasePoint, f64)> {
    ball.check(space)?;
    match ball {
        Region::Ball { center, radius } => Ok((center.clone(), *radius)),
        Region::Box { .. } => Err(Error::domain("the approximation window must be a ball")),
    }
}

/// The map `ξ`: along the optimal matching of `γ` and `ω`, keep the point of
/// `γ` for pairs with both ends in `B` and the point of `ω` otherwise.
pub fn xi_construction(gamma: &Configuration, omega: &Configuration, ball: &Region) -> Result<Configuration> {
    let space = gamma.space();
    ball_parts(space, ball)?;
    let m = optimal_matching(gamma, omega)?;
    let pts = m
        .pairs
        .iter()
        .map(|&(i, j)| {
            let (x, y) = (&gamma.points()[i], &omega.points()[j]);
            if ball.contains(space, x) && ball.contains(space, y) {
                x.clone()
            } else {
                y.clone()
            }
        })
        .collect();
    Ok(Configuration::from_valid(space.clone(), pts))
}

/// `α = 1/(2√(n·k))`.
pub fn smear_radius(n: u64, k: usize) -> f64 {
    1.0 / (2.0 * ((n as f64) * (k as f64)).sqrt())
}

/// The inward shift `χ`: a point within `α` of the boundary of `B(x₀, R)`
/// moves distance `α` along the geodesic towards `x₀` (to `x₀` itself when
/// it is closer than `α`), so that `B(χ(x), α) ⊂ B`.
pub fn inward_shift(space: &SpaceForm, x0: &BasePoint, radius: f64, alpha: f64, x: &BasePoint) -> Result<BasePoint> {
    let d = space.dist(x0, x);
    if d <= radius - alpha {
        return Ok(x.clone());
    }
    if d <= alpha {
        return Ok(x0.clone());
    }
    space.geodesic_point(x, x0, alpha / d)
}

/// Replaces every point of `ξ` inside the ball by a uniform draw on
/// `B(χ(x), α)`. Returns `ξ` unchanged and no `α` when the ball is empty.
pub fn smear_alpha<R: Rng + ?Sized>(
    xi: &Configuration,
    ball: &Region,
    n: u64,
    rng: &mut R,
) -> Result<(Configuration, Option<f64>)> {
    if n == 0 {
        return Err(Error::domain("smearing index n must be positive"));
    }
    let space = xi.space();
    let (x0, radius) = ball_parts(space, ball)?;
    let k = xi.points().iter().filter(|p| ball.contains(space, p)).count();
    if k == 0 {
        return Ok((xi.clone(), None));
    }
    let alpha = smear_radius(n, k);
    let pts = xi
        .points()
        .iter()
        .map(|p| {
            if ball.contains(space, p) {
                let chi = inward_shift(space, &x0, radius, alpha, p)?;
                Ok(space.sample_ball(&chi, alpha, rng))
            } else {
                Ok(p.clone())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((Configuration::from_valid(space.clone(), pts), Some(alpha)))
}

/// Constant `κ` with `m(B(x, r)) ≥ κ r^N` for `r ≤ 1/2`.
pub fn small_ball_constant(space: &SpaceForm) -> f64 {
    match space.kind() {
        SpaceKind::Euclidean => unit_ball_volume(space.dim()),
        // 1 − cos s ≥ 2s²/π² on [0, π]
        SpaceKind::Sphere2 => 4.0 / std::f64::consts::PI,
        // cosh s − 1 ≥ s²/2
        SpaceKind::Hyperbolic2 => std::f64::consts::PI,
    }
}

/// Relative entropy of the smeared law inside the window and its envelope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmearEntropy {
    /// Number of points of `ξ` in the window.
    pub k: usize,
    pub alpha: Option<f64>,
    /// `Σ_x log(m(B)/m(B(χ(x), α)))`.
    pub value: f64,
    /// `C`, such that `value ≤ C·k·max(log k + log n, log 2)`.
    pub constant: f64,
    pub envelope: f64,
}

/// Entropy of the product of uniform laws on `B(χ(x_i), α)` against the
/// normalized volume on `B`, with the closed-form envelope.
pub fn entropy_smear_bound(xi: &Configuration, ball: &Region, n: u64) -> Result<SmearEntropy> {
    if n == 0 {
        return Err(Error::domain("smearing index n must be positive"));
    }
    let space = xi.space();
    ball_parts(space, ball)?;
    let k = xi.points().iter().filter(|p| ball.contains(space, p)).count();
    let m_b = ball.volume(space)?;
    let dim = space.dim() as f64;
    let kappa = small_ball_constant(space);
    let ln2 = std::f64::consts::LN_2;
    let constant = dim / 2.0 + ((m_b / kappa).ln() + dim * ln2).max(0.0) / ln2;
    if k == 0 {
        return Ok(SmearEntropy {
            k,
            alpha: None,
            value: 0.0,
            constant,
            envelope: 0.0,
        });
    }
    let alpha = smear_radius(n, k);
    // all small balls have the same volume on a space form
    let per_point = (m_b / space.ball_volume(alpha)?).ln();
    let value = k as f64 * per_point;
    let envelope = constant * k as f64 * ((k as f64).ln() + (n as f64).ln()).max(ln2);
    Ok(SmearEntropy {
        k,
        alpha: Some(alpha),
        value,
        constant,
        envelope,
    })
}

/// How the samples of `μ` and `ν` are paired into a coupling.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Optimal assignment between the two sample clouds.
    #[default]
    Optimal,
    /// Sample `i` of `μ` with sample `i` of `ν`.
    Index,
}

/// One point of the convergence sequence `Ŵ₂(μ, μ_n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub n: u64,
    pub w2: f64,
    pub w2_squared: f64,
    /// Standard error of `Ŵ₂`.
    pub std_error: f64,
    /// Standard error of `Ŵ₂²`.
    pub std_error_squared: f64,
    pub pairs_used: usize,
}

/// Builds `μ_n` from paired samples by `ξ` on `B(x₀, n)` followed by
/// smearing, and estimates `W₂(μ, μ_n)` for every `n` in the grid.
pub fn check_appendix_convergence(
    mu_samples: &[Configuration],
    nu_samples: &[Configuration],
    n_grid: &[u64],
    x0: &BasePoint,
    pairing: Pairing,
    seed: u64,
) -> Result<Vec<ConvergencePoint>> {
    if mu_samples.is_empty() || mu_samples.len() != nu_samples.len() {
        return Err(Error::domain("need equally many nonempty samples of both measures"));
    }
    if n_grid.contains(&0) {
        return Err(Error::domain("window sizes must be positive"));
    }
    let pairs: Vec<(usize, usize)> = match pairing {
        Pairing::Index => (0..mu_samples.len()).map(|i| (i, i)).collect(),
        Pairing::Optimal => {
            let w = empirical_w2(mu_samples, nu_samples)?;
            if w.w2.is_finite() {
                w.pairs
            } else {
                warn!("no finite coupling between the sample clouds, pairing by index");
                (0..mu_samples.len()).map(|i| (i, i)).collect()
            }
        }
    };
    let usable: Vec<(usize, usize)> = pairs
        .into_iter()
        .filter(|&(i, j)| {
            let ok = mu_samples[i].len() == nu_samples[j].len();
            if !ok {
                warn!("skipping sample pair ({i}, {j}) with different cardinalities");
            }
            ok
        })
        .collect();
    if usable.is_empty() {
        return Err(Error::domain("no sample pair with matching cardinalities"));
    }
    let base: Vec<Configuration> = usable.iter().map(|&(i, _)| mu_samples[i].clone()).collect();
    n_grid
        .par_iter()
        .enumerate()
        .map(|(idx, &n)| {
            let ball = Region::ball(x0.clone(), n as f64);
            let mut rng = stream(seed, idx as u64);
            let approx = usable
                .iter()
                .map(|&(i, j)| {
                    let xi = xi_construction(&mu_samples[i], &nu_samples[j], &ball)?;
                    Ok(smear_alpha(&xi, &ball, n, &mut rng)?.0)
                })
                .collect::<Result<Vec<_>>>()?;
            let w = empirical_w2(&base, &approx)?;
            let (_, se2) = crate::stats::mean_std_error(&w.pair_costs);
            Ok(ConvergencePoint {
                n,
                w2: w.w2.distance(),
                w2_squared: w.w2.squared(),
                std_error: w.std_error(),
                std_error_squared: se2,
                pairs_used: usable.len(),
            })
        })
        .collect()
}

/// Writes the sequence as CSV rows `n,w2_estimate,std_error`.
pub fn write_convergence_csv<W: Write>(out: W, points: &[ConvergencePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "w2_estimate", "std_error"])
        .map_err(|e| Error::Io(e.to_string()))?;
    for p in points {
        w.write_record([p.n.to_string(), format!("{:?}", p.w2), format!("{:?}", p.std_error)])
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
