//! Top level and replication counts from explicit bias and variance bounds.

use serde::{Deserialize, Serialize};

use super::functional::FunctionalSpec;
use crate::epsilon::{uniform_error_bound, RecordParams};
use crate::{Error, Result};

const MAX_TOP: u32 = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlmcPlan {
    pub eps: f64,
    /// Top level `K`.
    pub top: u32,
    /// `r_k`, `k = 0..=K`.
    pub reps: Vec<u64>,
    pub c2: f64,
    /// Bound on `|E[g(B_K)] − E[g(B)]|`, at most `eps/√2`.
    pub bias_bound: f64,
    /// Bound on `V(D_k)` used for allocation.
    pub variance_bounds: Vec<f64>,
    pub rate: f64,
}

impl MlmcPlan {
    /// `Σ_k bound(V(D_k))/r_k`, at most `eps²/2`.
    pub fn variance_budget(&self) -> f64 {
        self.variance_bounds
            .iter()
            .zip(&self.reps)
            .map(|(v, &r)| v / r as f64)
            .sum()
    }
}

fn bias(spec: &FunctionalSpec, g: Option<f64>, k: u32, p: &RecordParams) -> f64 {
    match (spec, g) {
        (FunctionalSpec::Path { g }, _) if g.endpoint_only() => 0.0,
        (FunctionalSpec::Path { g }, _) => g.lipschitz().unwrap() * uniform_error_bound(k, p),
        (_, Some(g)) => g * (-(k as f64) * spec.rate(p)).exp2(),
        _ => unreachable!(),
    }
}

fn variance(spec: &FunctionalSpec, g: Option<f64>, k: u32, p: &RecordParams) -> f64 {
    let r = spec.rate(p);
    match spec {
        // the level-0 path is t·B(1): Gaussian Poincaré gives L², and V(B(1)²) = 2
        FunctionalSpec::Path { g } if k == 0 => g.lipschitz().map_or(2.0, |l| l * l),
        FunctionalSpec::Path { g } if g.endpoint_only() => 0.0,
        FunctionalSpec::Path { g } => {
            let l = g.lipschitz().unwrap();
            (2.0 * l * p.rho / (1.0 - (-r).exp2())).powi(2) * (-2.0 * r * k as f64).exp2()
        }
        FunctionalSpec::SdeTerminal { field, .. } if k == 0 => field.noise_dim as f64 * field.bounds.f.powi(2),
        FunctionalSpec::SdeTerminal { .. } => 4.0 * g.unwrap() * (-2.0 * r * k as f64).exp2(),
    }
}

/// `K` is the smallest level whose bias bound is within `eps/√2`; `r_k = ⌈C₂Δ_k^{2r}ε⁻²log(1/ε)⌉`
/// with `C₂` chosen so the variance bounds sum to `eps²/2`.
pub fn allocate(eps: f64, spec: &FunctionalSpec, p: &RecordParams) -> Result<MlmcPlan> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::domain(format!("eps {eps} must be positive")));
    }
    spec.validate(p)?;
    let g = spec.euler_g()?;
    let target = eps / 2f64.sqrt();
    let top = (0..=MAX_TOP)
        .find(|&k| bias(spec, g, k, p) <= target)
        .ok_or_else(|| Error::domain(format!("no level up to {MAX_TOP} reaches bias {target}")))?;
    let rate = spec.rate(p);
    let log = (1.0 / eps).ln().max(1.0);
    let w: Vec<f64> = (0..=top)
        .map(|k| (-2.0 * rate * k as f64).exp2() * log / (eps * eps))
        .collect();
    let variance_bounds: Vec<f64> = (0..=top).map(|k| variance(spec, g, k, p)).collect();
    let c2 = 2.0 / (eps * eps) * variance_bounds.iter().zip(&w).map(|(v, w)| v / w).sum::<f64>();
    let reps = w.iter().map(|w| (c2 * w).ceil().max(1.0) as u64).collect();
    Ok(MlmcPlan {
        eps,
        top,
        reps,
        c2,
        bias_bound: bias(spec, g, top, p),
        variance_bounds,
        rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlmc::PathFunctional;

    fn sup() -> FunctionalSpec {
        FunctionalSpec::Path {
            g: PathFunctional::SupNorm,
        }
    }

    #[test]
    fn top_level_is_first_below_bias_target() {
        let p = RecordParams::new(0.8, 0.1, 5.0).unwrap();
        let plan = allocate(0.05, &sup(), &p).unwrap();
        let f = |k: u32| 5.0 * 2f64.powf(-0.7 * (k + 1) as f64) / (1.0 - 2f64.powf(-0.7));
        let t = 0.05 / 2f64.sqrt();
        assert!(f(plan.top) <= t && f(plan.top - 1) > t);
        assert_eq!(plan.top, 12);
    }

    #[test]
    fn budget_and_shape() {
        let p = RecordParams::new(0.8, 0.1, 5.0).unwrap();
        for eps in [0.2, 0.1, 0.05, 0.025] {
            let plan = allocate(eps, &sup(), &p).unwrap();
            assert!(plan.variance_budget() <= eps * eps / 2.0 * (1.0 + 1e-12));
            assert!(plan.bias_bound <= eps / 2f64.sqrt());
            assert!(plan.reps.iter().all(|&r| r >= 1));
            assert!(plan.reps.windows(2).all(|w| w[1] <= w[0]));
            let half = allocate(eps / 2.0, &sup(), &p).unwrap();
            assert!(half.top - plan.top <= (1.0 / p.gap()).ceil() as u32);
        }
    }

    #[test]
    fn endpoint_needs_no_levels() {
        let p = RecordParams::new(0.8, 0.1, 5.0).unwrap();
        let plan = allocate(
            0.1,
            &FunctionalSpec::Path {
                g: PathFunctional::EndpointSquared,
            },
            &p,
        )
        .unwrap();
        assert_eq!(plan.top, 0);
        assert_eq!(plan.reps, vec![400]);
        assert!(allocate(0.0, &sup(), &p).is_err());
    }
}
