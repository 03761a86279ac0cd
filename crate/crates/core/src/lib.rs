//! Variational Bayes latent-class phenotyping.
//!
//! The crate is organised around a three-stage procedure:
//!
//! 1. a CAVI Gaussian mixture ([`gmm`]) with a Dirichlet mixing prior and
//!    Normal–Wishart component priors discovers a latent disease class,
//!    seeded by one of the initializers in [`init`];
//! 2. a mean-field Bayesian linear regression ([`regression::linreg`])
//!    estimates the biomarker shift associated with the latent class;
//! 3. a variational logistic regression ([`regression::logit`]) turns each
//!    binary clinical indicator into a (sensitivity, specificity) pair.
//!
//! [`pipeline::run_model`] wires the stages together, [`data_io`] handles
//! cohorts and result files, and [`plot`] renders scatter/ellipse figures.
//!
//! Row-wise work (responsibilities, neighbourhood queries, k-means
//! assignment) runs on rayon when the default `parallel` feature is on.
//! All reductions are performed sequentially in row order, so results are
//! bit-identical with and without the feature.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod data_io;
pub mod datasets;
pub mod diagnostics;
pub mod error;
pub mod gmm;
pub mod init;
pub mod linalg;
pub mod par;
pub mod pipeline;
pub mod plot;
pub mod regression;
pub mod special;

pub use error::{Error, Result};

#[cfg(test)]
mod testutil;
