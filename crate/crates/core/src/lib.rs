//! Explicit averaging error bounds, hyperbolicity certificates and blow-up
//! criteria for the rapidly forced planar equation
//! `z' = z̄ (1 + |z|² exp(iκt))`, cross-validated against high-accuracy
//! numerical integration.

pub mod averaging;
pub mod error;
pub mod hyperbolicity;
pub mod integrator;
pub mod orbits;
pub mod output;
pub mod planar;
pub mod verify;

pub use error::{Error, Result};
