//! Adaptive maximization of lattice-submodular utilities over items with
//! random states and state-dependent costs, under a knapsack budget and a
//! downward-closed outer constraint.
//!
//! Every type is generic over a [`Scalar`] (`f64` or `f32`). The aliases at
//! the crate root fix the scalar to `f64`; the generic forms live in their
//! modules.

pub mod crs;
pub mod direction;
pub mod error;
pub mod extension;
pub mod greedy;
pub mod lattice;
pub mod model;
pub mod oracle;
pub mod outer;
pub mod policy;
pub mod report;
pub mod scalar;
pub mod seed;
pub mod simplex;
pub mod stats;

pub use crate::crs::{CrsKind, Mapping, StartTimeAssignment};
pub use crate::error::{Error, Result};
pub use crate::lattice::{
    check_lattice_submodular, check_monotone, join, meet, CheckOutcome, StateVector, Utility,
};
pub use crate::model::{Realization, Violation};
pub use crate::outer::OuterConstraint;
pub use crate::scalar::Scalar;

pub type Instance = model::Instance<f64>;
pub type ItemModel = model::ItemModel<f64>;
pub type Problem = model::Problem<f64>;
pub type UtilityFamily = lattice::UtilityFamily<f64>;
pub type Estimate = stats::Estimate<f64>;
pub type LinearProgram = simplex::LinearProgram<f64>;
pub type P1Layout = direction::P1Layout<f64>;
pub type TimeIndexedSolution = greedy::TimeIndexedSolution<f64>;
pub type CertifiedSolution = greedy::CertifiedSolution<f64>;
pub type CertificationReport = greedy::CertificationReport<f64>;
pub type GreedyConfig = greedy::GreedyConfig<f64>;
pub type BalancedCrs = crs::BalancedCrs<f64>;
pub type PolicyTrace = policy::PolicyTrace<f64>;
pub type PolicyTree = oracle::PolicyTree<f64>;

pub type Instance32 = model::Instance<f32>;
pub type Problem32 = model::Problem<f32>;
pub type TimeIndexedSolution32 = greedy::TimeIndexedSolution<f32>;
