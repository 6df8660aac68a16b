//! Numerical laboratory for the Bayes observables of singular learning theory.
//!
//! The crate computes the Bayes and Gibbs generalization and training losses,
//! the functional variances and WAIC from tempered posteriors, and checks
//! them against the asymptotic learning-curve laws for three closed-form
//! models: a regular Gaussian location model, a singular product model and
//! a nonrenormalizable unrealizable model.
//!
//! Module map:
//! - [`model`]: true distributions, model families, loss geometry, theory cards.
//! - [`posterior`]: random-walk Metropolis and the deterministic grid oracle.
//! - [`observables`]: the six observables and WAIC.
//! - [`harness`]: replicated experiments, aggregation and estimators.
//! - [`cli`]: command-line front end and file formats.
// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod harness;
pub mod model;
pub mod numeric;
pub mod observables;
pub mod posterior;
pub mod seed;

pub use error::{Error, Result};
pub use model::{Dataset, FisherPair, ModelId, ModelSpec, ParamPoint, SamplePoint, TheoryCard};
pub use observables::ObservableSet;
pub use posterior::{McmcSettings, Posterior, PosteriorDraws, QuadratureGrid};
