//! Monte Carlo and exact-series tools for heavy-tailed branching random walks
//! in the large-deviation regime.
//!
//! A Galton–Watson tree with regularly varying displacements is simulated
//! generation by generation; extreme events at scale `γ_n ≫ μ^(n/α)` are
//! estimated both naively and with a single-big-jump importance sampler, and
//! compared with limit constants evaluated from pgf iterates.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod displacement;
pub mod enumerate;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod functional;
pub mod limits;
pub mod offspring;
pub mod quadrature;
pub mod rng;
pub mod scaling;
pub mod sim;
pub mod stats;

mod spec;

pub use displacement::{DisplacementModel, Family};
pub use enumerate::enumerate_exact;
pub use estimators::{estimate_naive, estimate_sbj};
pub use error::{Error, Result};
pub use exec::Executor;
pub use limits::{KbConfig, LimitValue, SeriesOptions};
pub use functional::{EventSpec, HlsFunctional, TestFunction};
pub use offspring::{GwDerived, OffspringLaw};
pub use rng::{Lane, SeedSplitter};
pub use scaling::{GammaSpec, ScalingScheme};
pub use sim::{point_measure, simulate, simulate_surviving, ExceedanceSketch, Realization, SimConfig};
pub use stats::{Estimate, Method};
