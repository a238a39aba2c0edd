//! Online resource allocation with stochastic resource consumption.
//!
//! Requests arrive one per period; each carries a reward vector and a size
//! that is a deterministic weight vector times a scalar random draw. This
//! crate provides the fluid LP upper bound on the hindsight optimum, the
//! adaptive threshold policies that re-solve that bound every period, exact
//! hindsight oracles for tiny instances, and a seeded Monte Carlo harness
//! for measuring regret.

// `!(x > 0.0)` is used on purpose so that NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity_split;
pub mod distributions;
pub mod error;
pub mod fit;
pub mod instance_file;
pub mod model;
pub mod policies;
pub mod prophet;
pub mod quadrature;
pub mod roots;
pub mod sim;
pub mod thresholds;
pub mod verify;

pub use capacity_split::{evaluate_g, solve_split, supergradient_g, CapacitySplit};
pub use distributions::{verify_regularity, Family, RegularityCertificate, SizeDistribution};
pub use error::{Error, Result};
pub use fit::{least_squares, LinearFit};
pub use model::{Instance, RequestClass};
pub use policies::{Action, Decision, PolicyKind, PolicyState};
pub use prophet::{hindsight_bruteforce, hindsight_sorted_greedy, lp_upper_bound, pooled_upper_bound, HindsightResult};
pub use roots::Threshold;
pub use sim::{estimate_regret, generate_path, run_policy, sweep_horizons, RegretReport, SamplePath, SweepResult};
pub use thresholds::{reward_permutation, solve_class_thresholds, solve_pooled_threshold, ThresholdVector};
