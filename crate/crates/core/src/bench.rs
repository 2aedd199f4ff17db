//! Wall-clock cost of refinement, for checking complexity trends.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::gaussian::{sample_mvn, Bridge, GridGaussian};
use crate::rng::RngStream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchMode {
    /// Conditional bridge from `{0, 1}` to all of `D_n`.
    Bridge,
    /// Fresh dense Cholesky of the `2^n × 2^n` covariance.
    Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub level: u32,
    pub points: u64,
    /// Fastest of the repetitions.
    pub seconds: f64,
    pub reps: u32,
}

/// Times one refinement per level and repetition; the minimum is kept.
pub fn bench_refinement(
    levels: &[u32],
    h: f64,
    mode: BenchMode,
    reps: u32,
    rng: &mut RngStream,
) -> Result<Vec<BenchRow>> {
    if reps == 0 {
        return Err(Error::domain("need at least one repetition"));
    }
    let mut rows = Vec::with_capacity(levels.len());
    for &level in levels {
        let n = 1usize << level;
        let times: Vec<f64> = (1..n).map(|i| i as f64 / n as f64).collect();
        let mut best = f64::INFINITY;
        for _ in 0..reps {
            let end = rng.normal();
            let t = Instant::now();
            match mode {
                BenchMode::Bridge => {
                    let b = Bridge::new(&[0.0, 1.0], &[0.0, end], &times, h)?;
                    std::hint::black_box(b.sample(rng));
                }
                BenchMode::Dense => {
                    let mut all = times.clone();
                    all.push(1.0);
                    std::hint::black_box(sample_mvn(&GridGaussian::fbm(&all, h)?, rng)?);
                }
            }
            best = best.min(t.elapsed().as_secs_f64());
        }
        rows.push(BenchRow {
            level,
            points: n as u64,
            seconds: best,
            reps,
        });
    }
    Ok(rows)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
