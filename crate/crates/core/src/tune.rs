//! Levels per `(ρ, δ)` cell: truncation level, starting level and the
//! empirical last-breaker level.

use serde::{Deserialize, Serialize};

use crate::epsilon::{slrb, starting_level, truncation_level, DyadicPath, RecordParams};
use crate::gaussian::DyadicSampler;
use crate::rng::RngStream;
use crate::Result;

/// Forward simulation looks for breakers on `D_1 … D_FORWARD_LEVEL`.
pub const FORWARD_LEVEL: u32 = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LastBreakerMethod {
    Search,
    Forward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneCell {
    pub rho: f64,
    pub delta: f64,
    /// `N(ε)` assuming the last breaker is below it.
    pub n_eps: u32,
    pub n_star: u32,
    pub mean_n: f64,
    pub reps: u32,
    pub method: LastBreakerMethod,
    /// Some forward run still broke a record at `FORWARD_LEVEL`, so `mean_n` is a lower bound.
    pub censored: bool,
}

impl TuneCell {
    pub fn mean_label(&self) -> String {
        if self.censored {
            format!("{}+", FORWARD_LEVEL)
        } else {
            format!("{:.2}", self.mean_n)
        }
    }
}

/// One grid cell. The search reports `max(N, N*)`, which is the last breaker
/// only when `N* = 1`; otherwise the last breaker is read off an exact sample
/// on `D_15`, floored at level 1 like the search.
pub fn tune_cell(h: f64, eps: f64, rho: f64, delta: f64, reps: u32, rng: &RngStream) -> Result<TuneCell> {
    let p = RecordParams::new(h, delta, rho)?;
    let n_eps = truncation_level(eps, 0, &p)?;
    let n_star = starting_level(&p);
    let method = if n_star == 1 {
        LastBreakerMethod::Search
    } else {
        LastBreakerMethod::Forward
    };
    let mut total = 0u64;
    let mut censored = false;
    let mut sampler = match method {
        LastBreakerMethod::Forward => Some(DyadicSampler::new(FORWARD_LEVEL, h)?),
        LastBreakerMethod::Search => None,
    };
    for i in 0..reps {
        let mut r = rng.substream(i as u64);
        let n = match sampler.as_mut() {
            None => slrb(&p, &mut r)?.0.n(),
            Some(s) => {
                let path = DyadicPath {
                    hurst: h,
                    level: FORWARD_LEVEL,
                    values: s.sample(&mut r),
                };
                let last = path.last_breaker(&p).unwrap_or(1).max(1);
                censored |= last == FORWARD_LEVEL;
                last
            }
        };
        total += n as u64;
    }
    Ok(TuneCell {
        rho,
        delta,
        n_eps,
        n_star,
        mean_n: total as f64 / reps.max(1) as f64,
        reps,
        method,
        censored,
    })
}
