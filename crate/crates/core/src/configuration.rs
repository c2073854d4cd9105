//! Finite point configurations inside explicit windows.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{BasePoint, SpaceForm, SpaceKind};

/// A finite configuration `γ = Σ δ_{x_i}` on a space form.
///
/// Point order is bookkeeping only; equality of configurations in the
/// mathematical sense is multiset equality, see [`Configuration::same_multiset`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    space: SpaceForm,
    points: Vec<BasePoint>,
}

impl Configuration {
    /// Builds a configuration, validating every point.
    pub fn new(space: SpaceForm, points: Vec<BasePoint>) -> Result<Self> {
        for p in &points {
            space.validate(p)?;
        }
        Ok(Configuration { space, points })
    }

    /// Builds a configuration from intrinsic coordinates (see [`SpaceForm::point`]).
    pub fn from_intrinsic(space: SpaceForm, coords: &[Vec<f64>]) -> Result<Self> {
        let points = coords.iter().map(|c| space.point(c)).collect::<Result<Vec<_>>>()?;
        Configuration::new(space, points)
    }

    pub fn empty(space: SpaceForm) -> Self {
        Configuration {
            space,
            points: Vec::new(),
        }
    }

    /// Skips validation; for points produced by the space's own maps.
    pub(crate) fn from_valid(space: SpaceForm, points: Vec<BasePoint>) -> Self {
        Configuration { space, points }
    }

    pub fn space(&self) -> &SpaceForm {
        &self.space
    }

    pub fn points(&self) -> &[BasePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same configuration with point `i` replaced.
    pub fn with_point(&self, i: usize, p: BasePoint) -> Self {
        let mut points = self.points.clone();
        points[i] = p;
        Configuration {
            space: self.space.clone(),
            points,
        }
    }

    /// Multiset sum `γ + γ'`.
    pub fn union(&self, other: &Configuration) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        let mut points = self.points.clone();
        points.extend(other.points.iter().cloned());
        Ok(Configuration {
            space: self.space.clone(),
            points,
        })
    }

    /// Multiset equality up to 1e-12 per matched point.
    pub fn same_multiset(&self, other: &Configuration) -> bool {
        if self.space != other.space || self.len() != other.len() {
            return false;
        }
        match crate::transport::optimal_matching(self, other) {
            Ok(m) => m
                .pairs
                .iter()
                .all(|&(i, j)| self.space.dist(&self.points[i], &other.points[j]) <= 1e-12),
            Err(_) => false,
        }
    }

    /// Ambient coordinates of every point, in order.
    pub fn coords(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.coords().to_vec()).collect()
    }
}

/// A closed window in the base space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Region {
    /// Closed metric ball.
    Ball { center: BasePoint, radius: f64 },
    /// Axis-aligned closed box, Euclidean spaces only.
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Region {
    pub fn ball(center: BasePoint, radius: f64) -> Self {
        Region::Ball { center, radius }
    }

    pub(crate) fn check(&self, space: &SpaceForm) -> Result<()> {
        match self {
            Region::Ball { center, radius } => {
                space.validate(center)?;
                if !(*radius >= 0.0 && radius.is_finite()) {
                    return Err(Error::domain(format!(
                        "ball radius must be finite and nonnegative, got {radius}"
                    )));
                }
                Ok(())
            }
            Region::Box { lo, hi } => {
                if space.kind() != SpaceKind::Euclidean {
                    return Err(Error::domain("box regions exist only in euclidean space"));
                }
                if lo.len() != space.dim() || hi.len() != space.dim() {
                    return Err(Error::domain("box corner has the wrong dimension"));
                }
                if lo
                    .iter()
                    .zip(hi)
                    .any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite())
                {
                    return Err(Error::domain("box corners must be finite with lo <= hi"));
                }
                Ok(())
            }
        }
    }

    /// Riemannian volume of the region.
    pub fn volume(&self, space: &SpaceForm) -> Result<f64> {
        self.check(space)?;
        match self {
            Region::Ball { radius, .. } => space.ball_volume(*radius),
            Region::Box { lo, hi } => Ok(lo.iter().zip(hi).map(|(a, b)| b - a).product()),
        }
    }

    /// Closed membership test.
    pub fn contains(&self, space: &SpaceForm, p: &BasePoint) -> bool {
        match self {
            Region::Ball { center, radius } => space.dist(center, p) <= *radius,
            Region::Box { lo, hi } => p
                .coords()
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(x, (a, b))| *a <= *x && *x <= *b),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, space: &SpaceForm, rng: &mut R) -> BasePoint {
        match self {
            Region::Ball { center, radius } => space.sample_ball(center, *radius, rng),
            Region::Box { lo, hi } => BasePoint::new(
                lo.iter()
                    .zip(hi)
                    .map(|(a, b)| a + (b - a) * rng.random::<f64>())
                    .collect(),
            ),
        }
    }
}

/// Poisson point process with constant intensity on a region: the count is
/// Poisson(intensity·vol) and positions are i.i.d. uniform given the count.
pub fn sample_poisson<R: Rng + ?Sized>(
    space: &SpaceForm,
    region: &Region,
    intensity: f64,
    rng: &mut R,
) -> Result<Configuration> {
    if !(intensity > 0.0 && intensity.is_finite()) {
        return Err(Error::domain(format!("intensity must be positive, got {intensity}")));
    }
    let vol = region.volume(space)?;
    let mean = intensity * vol;
    if !mean.is_finite() {
        return Err(Error::domain("region has infinite volume"));
    }
    if mean == 0.0 {
        return Ok(Configuration::empty(space.clone()));
    }
    let count: f64 = Poisson::new(mean)
        .map_err(|e| Error::domain(e.to_string()))?
        .sample(rng);
    let points = (0..count as usize).map(|_| region.sample(space, rng)).collect();
    Ok(Configuration::from_valid(space.clone(), points))
}

/// Exactly `count` i.i.d. uniform points in the region.
pub fn sample_uniform<R: Rng + ?Sized>(
    space: &SpaceForm,
    region: &Region,
    count: usize,
    rng: &mut R,
) -> Result<Configuration> {
    region.check(space)?;
    let points = (0..count).map(|_| region.sample(space, rng)).collect();
    Ok(Configuration::from_valid(space.clone(), points))
}

/// The points of `gamma` inside the closed region.
pub fn restrict(gamma: &Configuration, region: &Region) -> Configuration {
    partition(gamma, region).0
}

/// Splits `gamma` into the parts inside and outside the region.
pub fn partition(gamma: &Configuration, region: &Region) -> (Configuration, Configuration) {
    let space = gamma.space();
    let (inside, outside): (Vec<_>, Vec<_>) = gamma.points().iter().cloned().partition(|p| region.contains(space, p));
    (
        Configuration::from_valid(space.clone(), inside),
        Configuration::from_valid(space.clone(), outside),
    )
}

/// Number of points in the closed ball `B(center, r)`.
pub fn count_ball(gamma: &Configuration, center: &BasePoint, r: f64) -> usize {
    let space = gamma.space();
    gamma.points().iter().filter(|p| space.dist(center, p) <= r).count()
}

/// Smallest `C` with `γ(B_r) ≤ C·e^{αr}` for every integer `r` in `[1, r_max]`.
///
/// Finite configurations always admit such a `C`; the value is a growth
/// diagnostic, never a gate.
pub fn good_config_witness(gamma: &Configuration, center: &BasePoint, alpha: f64, r_max: u32) -> f64 {
    if alpha < 1.0 {
        log::warn!("good-configuration exponent alpha = {alpha} is below 1");
    }
    (1..=r_max)
        .map(|r| {
            let r = r as f64;
            count_ball(gamma, center, r) as f64 * (-alpha * r).exp()
        })
        .fold(0.0, f64::max)
}
