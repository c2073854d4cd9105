//! Real functionals on configurations.

use serde::{Deserialize, Serialize};

use crate::calculus::CylinderFunction;
use crate::configuration::Configuration;
use crate::error::Result;
use crate::space::{BasePoint, SpaceForm};

/// A real-valued functional `F: Υ → ℝ`.
pub trait Functional: Sync {
    fn eval(&self, gamma: &Configuration) -> f64;
}

impl<F> Functional for F
where
    F: Fn(&Configuration) -> f64 + Sync,
{
    fn eval(&self, gamma: &Configuration) -> f64 {
        self(gamma)
    }
}

/// Functionals that can be named in run configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CatalogFunctional {
    Constant {
        value: f64,
    },
    /// `Σ_{y∈η} w·d(y, center)`.
    DistanceSum {
        center: BasePoint,
        #[serde(default = "one")]
        weight: f64,
    },
    Cylinder {
        function: CylinderFunction,
    },
    /// `exp(F)` for a cylinder function `F`; positive and bounded away from
    /// zero when `F` is bounded.
    ExpCylinder {
        function: CylinderFunction,
    },
}

fn one() -> f64 {
    1.0
}

impl CatalogFunctional {
    pub fn validate(&self, space: &SpaceForm) -> Result<()> {
        match self {
            CatalogFunctional::Constant { .. } => Ok(()),
            CatalogFunctional::DistanceSum { center, .. } => space.validate(center),
            CatalogFunctional::Cylinder { function } | CatalogFunctional::ExpCylinder { function } => {
                function.validate(space)
            }
        }
    }

    /// Lipschitz constant with respect to `d_Υ` on the fiber of `n`-point
    /// configurations, when one is known in closed form.
    pub fn lipschitz(&self, n: usize) -> Option<f64> {
        match self {
            CatalogFunctional::Constant { .. } => Some(0.0),
            // |Σ w d(x_i,c) − Σ w d(y_σi,c)| ≤ |w| Σ d(x_i,y_σi) ≤ |w| √n d_Υ
            CatalogFunctional::DistanceSum { weight, .. } => Some(weight.abs() * (n as f64).sqrt()),
            _ => None,
        }
    }
}

impl Functional for CatalogFunctional {
    fn eval(&self, gamma: &Configuration) -> f64 {
        match self {
            CatalogFunctional::Constant { value } => *value,
            CatalogFunctional::DistanceSum { center, weight } => {
                let s = gamma.space();
                weight * gamma.points().iter().map(|y| s.dist(y, center)).sum::<f64>()
            }
            CatalogFunctional::Cylinder { function } => function.eval(gamma),
            CatalogFunctional::ExpCylinder { function } => function.eval(gamma).exp(),
        }
    }
}
