//! Vector fields `f = [μ; σ]` with declared smoothness bounds.

use serde::{Deserialize, Serialize};

use crate::rng::RngStream;
use crate::{Error, Result};

/// `c · Π_k y_k^{p_k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
}

/// A sum of monomials in the state.
pub type Polynomial = Vec<Monomial>;

/// Declared bounds: max absolute entry of `f`, of its gradients and Hessians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldBounds {
    pub f: f64,
    pub grad_f: f64,
    pub hess_f: f64,
}

/// Drift `μ: R^d → R^d` and diffusion `σ: R^d → R^{d×d′}` as polynomials,
/// valid on the box `|y_i| ≤ domain_radius` where the bounds are claimed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorFieldSpec {
    pub dim: usize,
    pub noise_dim: usize,
    pub drift: Vec<Polynomial>,
    /// Row-major `d × d′`.
    pub diffusion: Vec<Vec<Polynomial>>,
    pub bounds: FieldBounds,
    pub domain_radius: f64,
}

fn eval_poly(p: &Polynomial, y: &[f64]) -> f64 {
    p.iter()
        .map(|m| m.coef * m.powers.iter().zip(y).map(|(&e, &x)| x.powi(e as i32)).product::<f64>())
        .sum()
}

/// `∂/∂y_k` of a polynomial.
fn diff(p: &Polynomial, k: usize) -> Polynomial {
    p.iter()
        .filter(|m| m.powers.get(k).copied().unwrap_or(0) > 0)
        .map(|m| {
            let mut powers = m.powers.clone();
            let e = powers[k];
            powers[k] -= 1;
            Monomial {
                coef: m.coef * e as f64,
                powers,
            }
        })
        .collect()
}

impl VectorFieldSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        let v: Self = serde_json::from_str(s)?;
        v.validate()?;
        Ok(v)
    }

    /// `h = d′ + 1`.
    pub fn h(&self) -> usize {
        self.noise_dim + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.noise_dim == 0 {
            return Err(Error::domain("field dimensions must be positive"));
        }
        if self.drift.len() != self.dim
            || self.diffusion.len() != self.dim
            || self.diffusion.iter().any(|r| r.len() != self.noise_dim)
        {
            return Err(Error::domain("drift must have d entries and diffusion d x d' entries"));
        }
        for m in self.entries().flat_map(|p| p.iter()) {
            if m.powers.len() != self.dim || !m.coef.is_finite() {
                return Err(Error::domain("each monomial needs d powers and a finite coefficient"));
            }
        }
        let b = self.bounds;
        if ![b.f, b.grad_f, b.hess_f].iter().all(|x| x.is_finite() && *x >= 0.0) {
            return Err(Error::domain("field bounds must be finite and non-negative"));
        }
        if !(self.domain_radius > 0.0) {
            return Err(Error::domain("domain radius must be positive"));
        }
        Ok(())
    }

    /// Every entry `f_ij` of `f = [μ; σ]`.
    fn entries(&self) -> impl Iterator<Item = &Polynomial> {
        self.drift.iter().chain(self.diffusion.iter().flatten())
    }

    pub fn drift_at(&self, y: &[f64], out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(&self.drift) {
            *o = eval_poly(p, y);
        }
    }

    /// Row-major `d × d′`.
    pub fn diffusion_at(&self, y: &[f64], out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(self.diffusion.iter().flatten()) {
            *o = eval_poly(p, y);
        }
    }

    /// Checks the declared bounds at `samples` random states in the domain box.
    pub fn spot_check(&self, samples: usize, rng: &mut RngStream) -> Result<()> {
        let grads: Vec<Vec<Polynomial>> = self
            .entries()
            .map(|p| (0..self.dim).map(|k| diff(p, k)).collect())
            .collect();
        let hess: Vec<Vec<Polynomial>> = grads
            .iter()
            .flatten()
            .map(|g| (0..self.dim).map(|k| diff(g, k)).collect())
            .collect();
        let r = self.domain_radius;
        let mut y = vec![0.0; self.dim];
        for _ in 0..samples {
            for x in y.iter_mut() {
                *x = r * (2.0 * rng.uniform() - 1.0);
            }
            let fmax = self.entries().map(|p| eval_poly(p, &y).abs()).fold(0.0, f64::max);
            let gmax = grads
                .iter()
                .flatten()
                .map(|p| eval_poly(p, &y).abs())
                .fold(0.0, f64::max);
            let hmax = hess
                .iter()
                .flatten()
                .map(|p| eval_poly(p, &y).abs())
                .fold(0.0, f64::max);
            let b = self.bounds;
            for (name, got, claimed) in [
                ("|f|", fmax, b.f),
                ("|grad f|", gmax, b.grad_f),
                ("|hess f|", hmax, b.hess_f),
            ] {
                if got > claimed * (1.0 + 1e-3) + 1e-12 {
                    return Err(Error::domain(format!(
                        "{name} bound {claimed} violated: {got} at {y:?}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn linear(a: f64, r: f64) -> VectorFieldSpec {
        VectorFieldSpec {
            dim: 1,
            noise_dim: 1,
            drift: vec![vec![]],
            diffusion: vec![vec![vec![Monomial {
                coef: a,
                powers: vec![1],
            }]]],
            bounds: FieldBounds {
                f: a * r,
                grad_f: a,
                hess_f: 0.0,
            },
            domain_radius: r,
        }
    }

    #[test]
    fn evaluates_and_checks() {
        let f = linear(0.5, 2.0);
        let mut o = [0.0];
        f.diffusion_at(&[1.5], &mut o);
        assert_eq!(o[0], 0.75);
        f.spot_check(1000, &mut RngStream::new(1, 0)).unwrap();
        let mut bad = f.clone();
        bad.bounds.f = 0.5;
        assert!(bad.spot_check(1000, &mut RngStream::new(1, 0)).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let f = linear(0.1, 3.0);
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(VectorFieldSpec::from_json(&s).unwrap(), f);
        assert!(VectorFieldSpec::from_json(r#"{"dim":1}"#).is_err());
    }

    #[test]
    fn quadratic_derivatives() {
        // y² + 3y: gradient 2y + 3, hessian 2
        let p = vec![
            Monomial {
                coef: 1.0,
                powers: vec![2],
            },
            Monomial {
                coef: 3.0,
                powers: vec![1],
            },
        ];
        let g = diff(&p, 0);
        assert_eq!(eval_poly(&g, &[2.0]), 7.0);
        assert_eq!(eval_poly(&diff(&g, 0), &[5.0]), 2.0);
    }
}
