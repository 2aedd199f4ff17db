//! Functionals of the fBM path whose mean MLMC estimates.

use serde::{Deserialize, Serialize};

use crate::epsilon::{DyadicPath, RecordParams};
use crate::sde::{euler_constants, euler_solve, VectorFieldSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathFunctional {
    /// `sup_t |B(t)|`
    SupNorm,
    /// `∫₀¹ B(t) dt` of the piecewise-linear path
    TimeAverage,
    /// `B(1)`
    Endpoint,
    /// `B(1)²`, not Lipschitz but exact on every grid
    EndpointSquared,
}

impl PathFunctional {
    /// Values on an equispaced grid over [0, 1].
    pub fn eval(&self, v: &[f64]) -> f64 {
        match self {
            Self::SupNorm => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            Self::TimeAverage => {
                let n = (v.len() - 1) as f64;
                v.windows(2).map(|w| w[0] + w[1]).sum::<f64>() / (2.0 * n)
            }
            Self::Endpoint => *v.last().unwrap(),
            Self::EndpointSquared => v.last().unwrap().powi(2),
        }
    }

    /// Sup-norm Lipschitz constant, if any.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            Self::EndpointSquared => None,
            _ => Some(1.0),
        }
    }

    /// Depends on the path only through `B(1)`, which every level samples exactly.
    pub fn endpoint_only(&self) -> bool {
        matches!(self, Self::Endpoint | Self::EndpointSquared)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionalSpec {
    /// Case I: a closed-form functional of the path.
    Path { g: PathFunctional },
    /// Case II: one component of the Euler solution at `t = 1`. `c_alpha` is the
    /// Hölder constant assumed when planning.
    SdeTerminal {
        field: VectorFieldSpec,
        y0: Vec<f64>,
        alpha: f64,
        c_alpha: f64,
        component: usize,
    },
}

impl FunctionalSpec {
    pub fn validate(&self, p: &RecordParams) -> Result<()> {
        p.validate()?;
        if let Self::SdeTerminal {
            field,
            y0,
            alpha,
            c_alpha,
            component,
        } = self
        {
            field.validate()?;
            if y0.len() != field.dim || *component >= field.dim {
                return Err(Error::domain("y0 and component must match the field dimension"));
            }
            if !(p.hurst > 0.5 && *alpha > 0.5 && *alpha < p.hurst) {
                return Err(Error::domain(format!("need 1/2 < alpha={alpha} < H={}", p.hurst)));
            }
            if !(*c_alpha >= 1.0 && c_alpha.is_finite()) {
                return Err(Error::domain("c_alpha must be a finite number at least 1"));
            }
        }
        Ok(())
    }

    pub fn noise_dim(&self) -> usize {
        match self {
            Self::Path { .. } => 1,
            Self::SdeTerminal { field, .. } => field.noise_dim,
        }
    }

    /// Rate `r` with bias `O(Δ^r)` and variance `O(Δ^{2r})`.
    pub fn rate(&self, p: &RecordParams) -> f64 {
        match self {
            Self::Path { .. } => p.gap(),
            Self::SdeTerminal { alpha, .. } => 2.0 * alpha - 1.0,
        }
    }

    /// Euler constant `G` at the planning Hölder constant; `None` for Case I.
    pub fn euler_g(&self) -> Result<Option<f64>> {
        match self {
            Self::Path { .. } => Ok(None),
            Self::SdeTerminal {
                field, alpha, c_alpha, ..
            } => Ok(Some(
                euler_constants(&field.bounds, field.dim, field.h(), *c_alpha, *alpha)?.g,
            )),
        }
    }

    /// `g` on drivers at a common level.
    pub fn eval(&self, drivers: &[DyadicPath]) -> Result<f64> {
        match self {
            Self::Path { g } => Ok(g.eval(&drivers[0].values)),
            Self::SdeTerminal {
                field, y0, component, ..
            } => {
                let y = euler_solve(field, drivers, y0)?;
                Ok(y.last().unwrap()[*component])
            }
        }
    }
}
