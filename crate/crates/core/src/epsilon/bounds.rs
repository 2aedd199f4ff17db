//! Sup-norm and Hölder error bounds.

use super::{BreakerLedger, DyadicPath, RecordParams};
use crate::{Error, Result};

/// `ρ·2^{−(H−δ)(n+1)}/(1−2^{−(H−δ)})`.
pub fn uniform_error_bound(n: u32, p: &RecordParams) -> f64 {
    let a = p.gap();
    p.rho * (-a * (n + 1) as f64).exp2() / (1.0 - (-a).exp2())
}

/// Smallest level whose uniform bound is within `eps`, floored at `n_last`.
pub fn truncation_level(eps: f64, n_last: u32, p: &RecordParams) -> Result<u32> {
    if !(eps > 0.0) {
        return Err(Error::domain(format!("eps {eps} must be positive")));
    }
    let a = p.gap();
    let x = (p.rho / (eps * (1.0 - (-a).exp2()))).log2() / a;
    let lvl = x.ceil().max(0.0) as u32;
    Ok(lvl.max(n_last))
}

/// `ρ·2^{2−α}·2^{−(H−α−δ)(n+1)}/(1−2^{−(H−α−δ)})`, `+∞` at `δ = H−α`.
pub fn holder_error_bound(n: u32, alpha: f64, p: &RecordParams) -> Result<f64> {
    if !(p.hurst > 0.5) {
        return Err(Error::domain("Hölder bound needs H > 1/2"));
    }
    if !(alpha > 0.5 && alpha < p.hurst) {
        return Err(Error::domain(format!("alpha {alpha} not in (1/2, H)")));
    }
    let e = p.hurst - alpha - p.delta;
    if e < -1e-12 {
        return Err(Error::domain(format!("delta {} exceeds H - alpha", p.delta)));
    }
    if e <= 1e-12 {
        return Ok(f64::INFINITY);
    }
    let den = 1.0 - (-e).exp2();
    Ok(p.rho * (2.0 - alpha).exp2() * (-e * (n + 1) as f64).exp2() / den)
}

/// Upper bound on the α-Hölder seminorm of the piecewise-linear path.
///
/// The grid term is the largest quotient over breakpoint pairs; the slope
/// term `2κΔ^{1−α}` covers pairs inside or straddling a segment.
pub fn holder_norm_dyadic(path: &DyadicPath, alpha: f64) -> f64 {
    let v = &path.values;
    let n = v.len() - 1;
    let dt = path.spacing();
    let kappa = v.windows(2).fold(0.0f64, |k, w| k.max((w[1] - w[0]).abs())) / dt;
    // 1/(lag·Δ)^α for every lag
    let inv: Vec<f64> = (0..=n).map(|l| (l as f64 * dt).powf(-alpha)).collect();
    let mut grid = 0.0f64;
    for i in 0..n {
        let vi = v[i];
        for (j, w) in inv.iter().enumerate().take(n - i + 1).skip(1) {
            grid = grid.max((v[i + j] - vi).abs() * w);
        }
    }
    grid.max(2.0 * kappa * dt.powf(1.0 - alpha))
}

/// `‖B‖_α ≤ ‖B_N‖_α + ρ2^{2−α}2^{−(H−α−δ)(N+1)}/(1−2^{−(H−α−δ)})`.
pub fn fbm_holder_certificate(path: &DyadicPath, ledger: &BreakerLedger, alpha: f64, p: &RecordParams) -> Result<f64> {
    if !ledger.finalized {
        return Err(Error::domain("ledger not finalized"));
    }
    let n = ledger.n();
    let coarse = path.restrict(n.min(path.level))?;
    Ok(holder_norm_dyadic(&coarse, alpha) + holder_error_bound(n, alpha, p)?)
}
