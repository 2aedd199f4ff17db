//! The level proposal `g_n`, its normalizer `Z_n`, the starting level and
//! the tilting parameter.

use std::f64::consts::LN_2;

use super::RecordParams;
use crate::rng::RngStream;
use crate::{Error, Result};

/// `log(2^{n+m} exp{−ρ²/8·2^{2(n+m)δ}})`.
pub fn log_term(n: u32, m: u32, p: &RecordParams) -> f64 {
    let l = (n + m) as f64;
    l * LN_2 - p.rho * p.rho / 8.0 * (2.0 * l * p.delta).exp2()
}

/// Log terms for `m = 1, 2, …` until they are negligible past the peak,
/// plus a bound on the remaining tail relative to `exp(max)`.
fn terms(n: u32, p: &RecordParams) -> (Vec<f64>, f64, f64) {
    let mut lt: Vec<f64> = Vec::new();
    let mut max = f64::NEG_INFINITY;
    let mut m = 1;
    loop {
        let t = log_term(n, m, p);
        max = max.max(t);
        let falling = lt.last().is_some_and(|&prev| t < prev);
        lt.push(t);
        if falling && t < max + (1e-18f64).ln() {
            let q = (t - lt[lt.len() - 2]).exp();
            let tail = (t - max).exp() * q / (1.0 - q);
            return (lt, max, tail);
        }
        m += 1;
    }
}

/// `ln Z_n`, summed in log space.
pub fn log_z(n: u32, p: &RecordParams) -> f64 {
    let (lt, max, tail) = terms(n, p);
    max + (lt.iter().map(|t| (t - max).exp()).sum::<f64>() + tail).ln()
}

/// `Z_n = Σ_{m≥1} 2^{n+m} exp{−ρ²/8·2^{2(n+m)δ}}`.
pub fn z_n(n: u32, p: &RecordParams) -> f64 {
    log_z(n, p).exp()
}

/// `N*(ρ,δ)`: the smallest `n ≥ 1` with `Z_n ≤ 1`.
pub fn starting_level(p: &RecordParams) -> u32 {
    let mut n = 1;
    while log_z(n, p) > 0.0 {
        n += 1;
    }
    n
}

/// `θ⁺_n(m) = ρ/2·2^{(n+m)(H+δ)}`; the downward parameter is its negation.
pub fn tilt_parameter(n: u32, m: u32, p: &RecordParams) -> f64 {
    p.rho / 2.0 * ((n + m) as f64 * (p.hurst + p.delta)).exp2()
}

/// `K(ν) = sup{n ≥ 1 : 4√n > ν·2^{δn}}`, or 0 when the set is empty.
pub fn k_of_nu(nu: f64, delta: f64) -> Result<u32> {
    if !(nu > 0.0 && delta > 0.0) {
        return Err(Error::domain("nu and delta must be positive"));
    }
    // √n / 2^{δn} decreases once n > 1/(2δ ln 2)
    let turn = (1.0 / (2.0 * delta * LN_2)).ceil() as u64;
    let mut last = 0;
    let mut n: u64 = 1;
    loop {
        let x = n as f64;
        if 4.0 * x.sqrt() > nu * (delta * x).exp2() {
            last = n;
        } else if n > turn {
            break;
        }
        n += 1;
    }
    Ok(last as u32)
}

/// The distribution `g_n(m)` on `m = 1..=len`.
#[derive(Debug, Clone)]
pub struct LevelProposal {
    pub n: u32,
    pub log_z: f64,
    pub probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl LevelProposal {
    pub fn new(n: u32, p: &RecordParams) -> Self {
        let log_z = log_z(n, p);
        let (lt, _, _) = terms(n, p);
        let mut probs = Vec::new();
        let mut cdf = Vec::new();
        let mut acc = 0.0;
        for t in lt {
            let g = (t - log_z).exp();
            acc += g;
            probs.push(g);
            cdf.push(acc);
            if acc >= 1.0 - 1e-15 {
                break;
            }
        }
        let rest = 1.0 - acc;
        *probs.last_mut().unwrap() += rest;
        *cdf.last_mut().unwrap() = 1.0;
        Self { n, log_z, probs, cdf }
    }

    /// `g_n(m)`, zero past the truncated support.
    pub fn prob(&self, m: u32) -> f64 {
        if m == 0 {
            return 0.0;
        }
        self.probs.get(m as usize - 1).copied().unwrap_or(0.0)
    }

    pub fn sample(&self, rng: &mut RngStream) -> u32 {
        let u = rng.uniform();
        self.cdf.partition_point(|&c| c <= u) as u32 + 1
    }
}

pub fn sample_g(n: u32, p: &RecordParams, rng: &mut RngStream) -> u32 {
    LevelProposal::new(n, p).sample(rng)
}
