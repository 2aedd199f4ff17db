use std::rc::Rc;

use super::circulant::{cached, CirculantSampler};
use super::mvn::{factorize, sample_with, Factor, GridGaussian};
use super::DENSE_LIMIT;
use crate::rng::RngStream;
use crate::Result;

enum Engine {
    Dense(GridGaussian, Factor),
    Circulant(Rc<CirculantSampler>, Option<Vec<f64>>),
}

/// Repeated exact draws of fBM on `D_n`, reusing one factorization.
///
/// The circulant engine hands out both halves of each transform, so draws
/// are consumed in pairs from the stream.
pub struct DyadicSampler {
    level: u32,
    engine: Engine,
}

impl DyadicSampler {
    pub fn new(level: u32, h: f64) -> Result<Self> {
        let n = 1usize << level;
        let dense = || -> Result<Engine> {
            let pts: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
            let g = GridGaussian::fbm(&pts, h)?;
            let f = factorize(&g.cov)?;
            Ok(Engine::Dense(g, f))
        };
        let engine = if n <= 64 {
            dense()?
        } else {
            match cached(n, h) {
                Ok(s) => Engine::Circulant(s, None),
                Err(crate::Error::EmbeddingFailure { .. }) if n <= DENSE_LIMIT => dense()?,
                Err(e) => return Err(e),
            }
        };
        Ok(Self { level, engine })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Values on `i/2^n`, `i = 0..=2^n`, with a leading `B(0) = 0`.
    pub fn sample(&mut self, rng: &mut RngStream) -> Vec<f64> {
        let tail = match &mut self.engine {
            Engine::Dense(g, f) => sample_with(g, f, rng),
            Engine::Circulant(s, spare) => match spare.take() {
                Some(v) => v,
                None => {
                    let (a, b) = s.sample_pair(rng);
                    *spare = Some(b);
                    a
                }
            },
        };
        let mut out = Vec::with_capacity(tail.len() + 1);
        out.push(0.0);
        out.extend(tail);
        out
    }
}
