//! Symmetric mixed-strategy equilibria of rank-order contests with endogenous
//! entry, their quality and budget statistics, reward-design experiments and
//! an agent-level simulator.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar for common use.
//!
//! ```
//! use contest_entry::{CostModelF64, EquilibriumF64, RewardVectorF64, SolverConfig};
//!
//! let a = RewardVectorF64::validate(vec![1.0, 0.0]).unwrap();
//! let c: CostModelF64 = "linear:c0=0.25,slope=1".parse().unwrap();
//! let sol = EquilibriumF64::solve(&a, &c, &SolverConfig::default()).unwrap();
//! assert!((sol.p() - 0.75).abs() < 1e-12);
//! assert!((sol.cdf(0.3).unwrap() - 0.4).abs() < 1e-12);
//! ```

pub mod cost;
pub mod design;
pub mod equilibrium;
pub mod error;
pub mod mechanism;
pub mod metrics;
pub mod montecarlo;
pub mod numerics;
pub mod scalar;
pub mod streams;
pub mod verify;

pub use cost::{CostFamily, CostModel, HazardClass};
pub use design::DesignConfig;
pub use equilibrium::{EquilibriumSolution, Regime, SolverConfig};
pub use error::{Error, MechanismViolation, Result};
pub use mechanism::{AttentionCaps, RewardVector};
pub use metrics::ContestMetrics;
pub use numerics::QuadratureConfig;
pub use scalar::Scalar;

pub type CostModelF64 = CostModel<f64>;
pub type RewardVectorF64 = RewardVector<f64>;
pub type AttentionCapsF64 = AttentionCaps<f64>;
pub type EquilibriumF64 = EquilibriumSolution<f64>;
pub type MetricsF64 = ContestMetrics<f64>;

pub type CostModelF32 = CostModel<f32>;
pub type RewardVectorF32 = RewardVector<f32>;
pub type AttentionCapsF32 = AttentionCaps<f32>;
pub type EquilibriumF32 = EquilibriumSolution<f32>;
pub type MetricsF32 = ContestMetrics<f32>;
