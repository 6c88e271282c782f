//! Conditional-mean multiplicative operator models (CMEMs) for count time series.
//!
//! A CMEM writes each count as `X_t = M_t ⊙ ε_t`, where `M_t` is a deterministic
//! conditional mean following an INGARCH(p,q) recursion, `ε_t` is an i.i.d. count
//! innovation with mean one and variance `σ²`, and `⊙` is an integer-valued
//! multiplicative operator (compounding or binomial).
//!
//! The crate is organised as
//! - [`operators`]: multiplicative operators and innovation laws,
//! - [`model`]: the INGARCH mean recursion, simulation and moment engine,
//! - [`estimation`]: quasi-maximum likelihood and two-stage weighted least squares,
//! - [`diagnostics`]: residual-based adequacy statistics,
//! - [`simstudy`]: Monte-Carlo study runner,
//! - [`io`]: count series ingestion.

pub mod diagnostics;
pub mod error;
pub mod estimation;
pub mod io;
pub mod model;
pub mod operators;
mod optim;
pub mod rng;
pub mod series;
pub mod simstudy;

pub use error::{CmemError, Result};
pub use model::{MeanSpec, ModelSpec, ParamVector, Response};
pub use operators::{InnovationSpec, OperatorSpec};
pub use series::CountSeries;
