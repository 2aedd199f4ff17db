//! The explicit Euler error constant `G` and its ingredients.

use serde::{Deserialize, Serialize};

use super::field::FieldBounds;
use crate::{Error, Result};

const K_TERMS: u64 = 1_000_000;
/// Stored prefix of the Γ/Υ sequences; the recursion itself always runs to `k*`.
const KEEP: usize = 1024;

/// `1 + Σ_{n≥1} n^{-s}`, summed directly to 10⁶ with the integral tail `N^{1-s}/(s-1)`.
pub fn k_series(s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::domain(format!("series exponent {s} must exceed 1")));
    }
    // small terms first
    let direct: f64 = (1..=K_TERMS).rev().map(|n| (n as f64).powf(-s)).sum();
    Ok(1.0 + direct + (K_TERMS as f64).powf(1.0 - s) / (s - 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerConstants {
    pub c_alpha: f64,
    pub alpha: f64,
    pub d: usize,
    pub h: usize,
    pub k: f64,
    pub g1_star: f64,
    pub g2_star: f64,
    pub l: f64,
    pub omega: f64,
    pub g1: f64,
    pub g2: f64,
    pub zeta: f64,
    pub upsilon_rate: f64,
    pub k_star: u64,
    /// First terms of Γ_k and Υ_k, k = 1, 2, …
    pub gamma_seq: Vec<f64>,
    pub upsilon_seq: Vec<f64>,
    pub upsilon_final: f64,
    pub g: f64,
}

/// Constants for a `d`-dimensional state driven by `x = (t, B¹, …, B^{h-1})`
/// with `|x(t)-x(s)| ≤ c_alpha |t-s|^α`.
pub fn euler_constants(b: &FieldBounds, d: usize, h: usize, c_alpha: f64, alpha: f64) -> Result<EulerConstants> {
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha={alpha} must lie in (1/2, 1)")));
    }
    if !(c_alpha > 0.0 && c_alpha.is_finite()) {
        return Err(Error::domain(format!("Hölder constant {c_alpha} must be positive")));
    }
    if d == 0 || h < 2 {
        return Err(Error::domain("need d ≥ 1 and at least one driving component"));
    }
    if ![b.f, b.grad_f, b.hess_f].iter().all(|x| x.is_finite() && *x >= 0.0) {
        return Err(Error::domain("field bounds must be finite and non-negative"));
    }
    let (df, hf) = (d as f64, h as f64);
    let c = c_alpha;
    let k = k_series(2.0 * alpha)?;
    let (f, f1, f2) = (b.f, b.grad_f, b.hess_f);

    let g1_star = 2.0 * hf * (2.0 * df * hf * c * k * f1).powf(1.0 / alpha).ceil().powf(1.0 - alpha) * f * c;
    let g2_star = df * hf * k * f1 * c * g1_star;

    let mut out = EulerConstants {
        c_alpha,
        alpha,
        d,
        h,
        k,
        g1_star,
        g2_star,
        l: 0.0,
        omega: 0.0,
        g1: 0.0,
        g2: 0.0,
        zeta: 0.0,
        upsilon_rate: 0.0,
        k_star: 0,
        gamma_seq: Vec::new(),
        upsilon_seq: Vec::new(),
        upsilon_final: 0.0,
        g: g1_star,
    };
    if f == 0.0 || f1 == 0.0 {
        // ω and L are 0/0 here; a constant or frozen-coefficient solution
        return Ok(out);
    }

    let hfc = hf * f * c;
    let l = 4.0 / (1.0 - 2f64.powf(1.0 - 2.0 * alpha)) * (hf * c).powi(2) * f1 * f;
    let omega = (hfc / l).powf(1.0 / alpha);
    let g1 = (l + hfc) * (1.0 + 1.0 / omega);
    let g2 = ((2.0 * omega.powf(-alpha) + omega.powf(-1.0 - alpha)) * (l + hfc)).max(l);
    let zeta = hf * k * c * (df * f1 + df * df * f2 * (g1_star + g1));
    let ups = c * (df * df * hf * k * f2 * (g1_star + g1) + df * f1);

    let k_star_f = (4.0 * zeta).powf(1.0 / alpha).ceil();
    if !(k_star_f < 1e12) {
        return Err(Error::domain(format!(
            "recursion length (4ζ)^(1/α) = {k_star_f} is out of reach"
        )));
    }
    let k_star = (k_star_f as u64).max(1);
    let mut gamma = 2.0 * g2_star;
    let mut upsilon = gamma / (4.0 * zeta);
    let (mut gs, mut us) = (vec![gamma], vec![upsilon]);
    for _ in 1..k_star {
        gamma = 2.0 * (g2_star + ups * upsilon);
        upsilon += gamma / (4.0 * zeta);
        if !upsilon.is_finite() {
            break;
        }
        if gs.len() < KEEP {
            gs.push(gamma);
            us.push(upsilon);
        }
    }
    out.l = l;
    out.omega = omega;
    out.g1 = g1;
    out.g2 = g2;
    out.zeta = zeta;
    out.upsilon_rate = ups;
    out.k_star = k_star;
    out.gamma_seq = gs;
    out.upsilon_seq = us;
    out.upsilon_final = upsilon;
    out.g = upsilon + g1_star;
    Ok(out)
}

/// `N_Y = ⌈log2(G/ε)/(2α-1)⌉`, at least 0.
pub fn euler_level(g: f64, eps: f64, alpha: f64) -> Result<u32> {
    if !(eps > 0.0) {
        return Err(Error::domain("eps must be positive"));
    }
    if g == 0.0 {
        return Ok(0);
    }
    let n = ((g / eps).log2() / (2.0 * alpha - 1.0)).ceil();
    if !(n < 60.0) {
        return Err(Error::domain(format!("Euler level {n} is out of reach (G = {g:e})")));
    }
    Ok(n.max(0.0) as u32)
}
