//! Geometry of finite point configurations over constant-curvature spaces.
//!
//! The crate provides the configuration distance `d_Υ` (an optimal matching
//! cost), Poisson sampling, the independent-particle heat semigroup,
//! cylinder-function Gamma calculus, and a set of checks that evaluate the
//! curvature inequalities of the configuration space on concrete inputs.

// `!(x >= 0.0)` is the idiom used throughout to reject NaN along with negatives
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approximation;
pub mod assignment;
pub mod calculus;
pub mod configuration;
pub mod dynamics;
pub mod error;
pub mod functional;
pub mod io;
pub mod rng;
pub mod runner;
pub mod space;
pub mod stats;
pub mod transport;
pub mod verify;

pub use configuration::{Configuration, Region};
pub use error::{Error, Result};
pub use space::{BasePoint, SpaceForm, SpaceKind};
pub use transport::{ExtendedCost, Matching};
