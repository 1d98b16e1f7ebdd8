//! Beta Laguerre processes in the high-temperature regime `beta N = 2c`.
//!
//! The crate simulates the N-particle system, solves the limiting moment
//! hierarchy in exact rational arithmetic, builds the limit measure
//! `nu_{alpha,c}` from its Jacobi operator, and checks the finite-size and
//! long-time convergence picture numerically.
//!
//! | module | contents |
//! |---|---|
//! | [`model`] | parameters, ensemble states, initial data, moment traces |
//! | [`sde`] | direct and radial Euler schemes, martingale residuals |
//! | [`hierarchy`] | exact exponential-polynomial moments, bounds, Hankel tests |
//! | [`spectrum`] | self-convolutive moments, Jacobi quadrature, resolvent, moment inversion |
//! | [`experiment`] | Monte Carlo verification runs and reports |
//! | [`output`] | CSV/JSON emission |
//! | [`cli`] | the `bll` command line |
//!
//! Runnable examples live in `examples/`; `cargo run --release --example exact_moments`
//! is a good starting point.

pub mod cli;
pub mod config;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod hierarchy;
pub mod model;
pub mod noise;
pub mod output;
pub mod sde;
pub mod spectrum;

pub use error::{Error, Result};
pub use hierarchy::{solve_hierarchy, ExpPolynomial, MomentHierarchy, MomentSequence};
pub use model::{EnsembleState, InitialCondition, ModelParams, MomentTrace};
pub use sde::{simulate_path, Scheme, SchemeConfig};
pub use spectrum::{DiscreteMeasure, JacobiOperator};
