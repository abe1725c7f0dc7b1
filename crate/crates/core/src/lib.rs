//! Faecal egg count reduction analysis.
//!
//! Two routes to anthelmintic efficacy from paired pre/post treatment egg
//! counts:
//!
//! * [`classical`]: the standard FECRT estimate with approximate and paired
//!   bootstrap intervals and the WAAVP resistance rule.
//! * [`mcmc`] + [`posterior`]: a hierarchical model that keeps the
//!   sub-sampling of the counting slide, Poisson egg counts and gamma
//!   between-animal variation, fitted with a tailored Gibbs /
//!   Metropolis–Hastings sampler.
//!
//! [`simulation`] compares the two on synthetic flocks and [`io`] handles
//! input tables, run configuration and output documents.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod distributions;
pub mod error;
pub mod io;
pub mod mcmc;
pub mod posterior;
pub mod rng;
pub mod simulation;

pub use error::{Error, Result};
