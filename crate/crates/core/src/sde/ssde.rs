//! ε-strong solutions of SDEs driven by fBM with `H > 1/2`.

use serde::Serialize;

use super::constants::{euler_constants, euler_level, EulerConstants};
use super::euler::euler_solve;
use super::field::VectorFieldSpec;
use crate::epsilon::{
    fbm_holder_certificate, k_of_nu, refine_block, slrb, uniform_error_bound, DyadicPath, EpsilonCertificate,
    HolderCertificate, RecordParams,
};
use crate::rng::RngStream;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct SdeResult {
    /// Euler states on `D_level`, piecewise constant in between.
    pub states: Vec<Vec<f64>>,
    pub level: u32,
    pub n_y: u32,
    pub eps: f64,
    /// `G·Δ_level^{2α−1}`, at most `eps`.
    pub guarantee: f64,
    pub constants: EulerConstants,
    pub drivers: Vec<EpsilonCertificate>,
}

impl SdeResult {
    pub fn times(&self) -> Vec<f64> {
        let n = 1usize << self.level;
        (0..=n).map(|i| i as f64 / n as f64).collect()
    }
}

fn check(field: &VectorFieldSpec, p: &RecordParams, alpha: f64, eps: f64) -> Result<()> {
    field.validate()?;
    p.validate()?;
    if !(p.hurst > 0.5) {
        return Err(Error::domain(format!("H={} must exceed 1/2", p.hurst)));
    }
    if !(alpha > 0.5 && alpha < p.hurst) {
        return Err(Error::domain(format!("alpha={alpha} must lie in (1/2, H)")));
    }
    if !(p.delta < p.hurst - alpha) {
        return Err(Error::domain(format!(
            "delta={} must be below H-alpha={}",
            p.delta,
            p.hurst - alpha
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::domain("eps must be positive"));
    }
    Ok(())
}

/// Solves to within `eps` in sup norm; returns the solution and the drivers.
pub fn ssde(
    eps: f64,
    field: &VectorFieldSpec,
    y0: &[f64],
    p: &RecordParams,
    alpha: f64,
    rng: &mut RngStream,
) -> Result<(SdeResult, Vec<DyadicPath>)> {
    check(field, p, alpha, eps)?;
    let k_nu = k_of_nu(p.nu, p.delta)?;
    let mut searched = Vec::with_capacity(field.noise_dim);
    // the time component contributes Hölder constant 1
    let mut c_alpha = 1.0f64;
    for i in 0..field.noise_dim {
        let mut r = rng.substream(i as u64);
        let (ledger, path) = slrb(p, &mut r)?;
        let bound = fbm_holder_certificate(&path, &ledger, alpha, p)?;
        c_alpha = c_alpha.max(bound);
        searched.push((ledger, path, bound, r));
    }
    let constants = euler_constants(&field.bounds, field.dim, field.h(), c_alpha, alpha)?;
    let n_y = euler_level(constants.g, eps, alpha)?;
    let level = searched.iter().map(|(_, b, _, _)| b.level).max().unwrap_or(0).max(n_y);

    let mut drivers = Vec::with_capacity(searched.len());
    let mut certs = Vec::with_capacity(searched.len());
    for (ledger, path, bound, mut r) in searched {
        let (fine, retries) = refine_block(&path, level, p, &mut r)?;
        certs.push(EpsilonCertificate {
            eps: uniform_error_bound(level, p),
            last_breaker: ledger.n(),
            starting_level: ledger.starting_level,
            search_level: ledger.level,
            n_eps: level,
            sup_bound: uniform_error_bound(level, p),
            holder: Some(HolderCertificate { alpha, bound }),
            k_nu,
            params: *p,
            stream: r.id(),
            refinement_retries: retries,
        });
        drivers.push(fine);
    }
    let states = euler_solve(field, &drivers, y0)?;
    let guarantee = constants.g * 2f64.powf(-(level as f64) * (2.0 * alpha - 1.0));
    Ok((
        SdeResult {
            states,
            level,
            n_y,
            eps,
            guarantee,
            constants,
            drivers: certs,
        },
        drivers,
    ))
}
