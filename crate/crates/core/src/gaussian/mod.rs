//! Exact Gaussian machinery for fBM on finite sets of times.

mod bridge;
mod circulant;
mod cov;
mod grid;
mod mvn;

pub use bridge::{bridge_refine, Bridge};
pub use circulant::{circulant_fbm_grid, CirculantSampler, MAX_CIRCULANT_LEVEL};
pub use cov::{fbm_cov, FbmCovariance};
pub use grid::DyadicSampler;
pub use mvn::{conditional_gaussian, factorize, sample_mvn, Factor, GridGaussian};

/// Above this many points dense factorization gives way to circulant embedding.
pub const DENSE_LIMIT: usize = 1 << 13;

/// Exact sample of fBM on `i/2^n`, `i = 0..=2^n` (index 0 holds `B(0) = 0`).
pub fn sample_dyadic(level: u32, h: f64, rng: &mut crate::rng::RngStream) -> crate::Result<Vec<f64>> {
    Ok(DyadicSampler::new(level, h)?.sample(rng))
}
