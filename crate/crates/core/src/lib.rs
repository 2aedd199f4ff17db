//! ε-strong simulation of fractional Brownian motion and fBM-driven SDEs.

pub mod bench;
pub mod epsilon;
pub mod error;
pub mod gaussian;
pub mod io;
pub mod mlmc;
pub mod rng;
pub mod sde;
pub mod tune;

pub use error::{Error, Result};
