//! Global parametric transfer functions from snapshots of parametric LTI
//! systems.
//!
//! Snapshots `G(pᵢ) = [A(pᵢ) B(pᵢ); C(pᵢ) D(pᵢ)]` are interpolated in the
//! parameter with the univariate Loewner framework for matrix data. The
//! interpolant `Ĝ(p)` is lifted to a bivariate transfer function
//! `Ĥ(s, p) = F_u(Ĝ(p), s⁻¹ I)` by an upper linear fractional transformation.
//!
//! * [`models`] - parametric models, snapshots and built-in examples
//! * [`loewner`] - Loewner pencil, truncation and the realization
//! * [`evaluate`] - condition-switched evaluation of `Ĥ(s, p)` and error grids
//! * [`rankbounds`] - rank bounds for polynomial parameter dependence
//! * [`cli`] - command-line front end and file formats

pub mod cli;
pub mod error;
pub mod evaluate;
pub mod loewner;
pub mod models;
pub mod numkit;
pub mod rankbounds;

pub use error::{Error, Result};
pub use faer::c64;
