//! Hitting probabilities under taboo for finite continuous-time Markov chains.
//!
//! For a chain with generator `A`, a start `x`, a target `y` and a taboo set
//! `H`, the central quantity is `_H F_xy(∞)`: the probability that the chain
//! reaches `y` after leaving `x` without visiting `H` in between. The crate
//! computes it by several independent routes and cross-checks them:
//!
//! * [`green`]: taboo Green functions `_H P_xy(∞)` (expected occupation
//!   times) and the ordinary Green function of transient representations;
//! * [`hitting`]: Green-ratio formulas and the first-step linear system;
//! * [`reduction`]: growing a taboo set one state at a time;
//! * [`mc`]: seeded trajectory simulation and value iteration.
//!
//! ```
//! use taboo::{Generator, HittingQuery, hitting_prob_taboo_green};
//!
//! let gen: Generator = "states: 0 1 2\nconservative: true\n\
//!     rate: 0 1 0.5\nrate: 0 2 0.5\nrate: 1 0 0.5\n\
//!     rate: 1 2 0.5\nrate: 2 0 0.5\nrate: 2 1 0.5\n".parse()?;
//! let q = HittingQuery::from_labels(gen.states(), "0", "1", &["2"])?;
//! let r = hitting_prob_taboo_green(&gen, &q)?;
//! assert!((r.value - 0.5).abs() < 1e-15);
//! # Ok::<(), taboo::Error>(())
//! ```

// `!(a > b)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod chain;
pub mod cli;
mod error;
pub mod green;
pub mod hitting;
pub mod lattice;
pub mod linalg;
pub mod mc;
pub mod reduction;

pub use chain::{
    embedded_chain, exit_time_cdf, parse_chain, restrict, validate, Generator, HittingQuery,
    JumpKernel, StateSpace, TabooSet, ValidationReport,
};
pub use error::{Error, Result};
pub use green::{
    green_function, is_recurrent, taboo_green, GreenResult, TabooGreen, TabooGreenMatrix,
};
pub use hitting::{
    first_step_solve, hitting_prob_base, hitting_prob_first_step, hitting_prob_taboo_green,
    hitting_probability, singleton_taboo_transient, HittingResult, Method,
};
pub use lattice::{build_birth_death, build_complete_graph, build_lattice_walk, LatticeSpec};
pub use mc::{
    estimate_hitting, estimate_hitting_after_exit, simulate_trajectory, value_iteration_hitting,
    Estimate, TrajectorySample,
};
pub use reduction::{
    add_taboo, reduce_to_singleton, remove_start_taboo, HittingValues, ReductionStep,
};
