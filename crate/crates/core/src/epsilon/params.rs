use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Record-breaker parameters. The threshold at level `k` is `ρ·2^{−(H−δ)k}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordParams {
    pub hurst: f64,
    pub delta: f64,
    pub rho: f64,
    pub nu: f64,
    pub nu_star: f64,
}

impl RecordParams {
    /// Splits `ρ` evenly: `ν = ν* = ρ/4`.
    pub fn new(hurst: f64, delta: f64, rho: f64) -> Result<Self> {
        Self::with_nu(hurst, delta, rho / 4.0, rho / 4.0)
    }

    /// `ρ = 2(ν + ν*)`.
    pub fn with_nu(hurst: f64, delta: f64, nu: f64, nu_star: f64) -> Result<Self> {
        let p = Self {
            hurst,
            delta,
            rho: 2.0 * (nu + nu_star),
            nu,
            nu_star,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return Err(Error::domain(format!("Hurst index {} not in (0,1)", self.hurst)));
        }
        if !(self.delta > 0.0 && self.delta < self.hurst) {
            return Err(Error::domain(format!("delta {} not in (0,H)", self.delta)));
        }
        if !(self.nu > 0.0 && self.nu_star > 0.0 && self.nu.is_finite() && self.nu_star.is_finite()) {
            return Err(Error::domain("nu and nu* must be positive"));
        }
        if (self.rho - 2.0 * (self.nu + self.nu_star)).abs() > 1e-12 * self.rho {
            return Err(Error::domain("rho must equal 2(nu + nu*)"));
        }
        Ok(())
    }

    /// `H − δ`.
    pub fn gap(&self) -> f64 {
        self.hurst - self.delta
    }

    /// `ℓ_k = 2^{−(H−δ)k}`.
    pub fn ell(&self, k: u32) -> f64 {
        (-(self.gap()) * k as f64).exp2()
    }

    pub fn threshold(&self, k: u32) -> f64 {
        self.rho * self.ell(k)
    }
}
