//! Drift filtering for a multivariate Ornstein-Uhlenbeck drift observed
//! through stock returns and discrete unbiased expert opinions, analysis of
//! the resulting conditional covariance matrices, and evaluation of the
//! log-utility optimal portfolio.
//!
//! The library is organized around the four information regimes an investor
//! may be in — returns only (`R`), expert opinions only (`E`), both (`C`),
//! full drift observation (`F`) — and provides:
//!
//! * [`model`] — market model, drift moments, path simulation;
//! * [`filters`] — conditional means and covariances per regime, with
//!   Bayesian updates at information dates;
//! * [`riccati`] — long-run covariance (algebraic Riccati equation) and the
//!   no-observation Lyapunov flow;
//! * [`asymptotics`] — many-experts decay, infinite-horizon limit cycles,
//!   periodic counterexample construction;
//! * [`portfolio`] — optimal strategy, value function, efficiency, wealth
//!   simulation;
//! * [`cli`] — configuration loading and experiment orchestration backing the
//!   `driftfilter` binary.
//!
//! The `book/` directory of the repository contains a guide with worked
//! examples; its code snippets compile and run as part of `cargo test`.

pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod filters;
pub mod matops;
pub mod model;
pub mod portfolio;
pub mod riccati;

#[cfg(test)]
pub(crate) mod testdata;

pub use error::{Error, Result};

// Keep the guide's code samples honest: every fenced Rust block in the book
// chapters is compiled and executed as a doc-test of this module tree.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/market-model.md")]
    mod market_model {}
    #[doc = include_str!("../../../book/src/filtering.md")]
    mod filtering {}
    #[doc = include_str!("../../../book/src/steady-state.md")]
    mod steady_state {}
    #[doc = include_str!("../../../book/src/long-run-cycles.md")]
    mod long_run_cycles {}
    #[doc = include_str!("../../../book/src/portfolio.md")]
    mod portfolio {}
}
