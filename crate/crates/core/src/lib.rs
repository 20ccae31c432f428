//! Continuous Thiele rules (CTR) for distribution aggregation.
//!
//! Agents report ideal distributions of a unit budget over `m` alternatives.
//! An agent's satisfaction with an allocation `x` is the overlap
//! `Σ_j min(x^i_j, x_j)`, i.e. one minus half the ℓ1 distance between the
//! two distributions. A CTR picks the allocation maximizing
//! `Σ_i f(satisfaction_i)` for an increasing, strictly concave `f`; the
//! Nash product rule is the `f = ln` member.
//!
//! The crate is `no_std` (it needs `alloc`) and contains:
//!
//! - [`profile`]: profiles, allocations and overlap satisfaction.
//! - [`utility`]: the concave utility family and its inequality aversion.
//! - [`support`]: support sets and marginal contributions.
//! - [`solver`]: the CTR solver with its marginal-rate certificate, plus the
//!   utilitarian and egalitarian reference solvers.
//! - [`axioms`]: allocation-level and rule-level axiom checks.
//! - [`bounds`]: closed-form welfare/fairness guarantees and the harness
//!   that compares them with measured losses.
//! - [`oracle`]: brute-force grid search on (scaled) simplices.
#![cfg_attr(not(test), no_std)]
// `!(a > b)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod axioms;
pub mod bounds;
mod error;
mod math;
pub mod oracle;
pub mod profile;
pub mod solver;
pub mod support;
pub mod utility;

pub use error::{Error, Result};
pub use profile::{satisfaction, satisfaction_vector, Allocation, Profile, SatisfactionVector};
pub use solver::{solve_ctr, solve_egalitarian, solve_utilitarian, SolveReport, SolverOptions};
pub use support::{marginal_contribution, support_sets, Direction, SupportSets};
pub use utility::{IavBound, UtilityFunction, UtilityKind};
