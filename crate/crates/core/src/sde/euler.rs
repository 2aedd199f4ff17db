//! Euler scheme for `dY = μ(Y)dt + σ(Y)dB` on a dyadic grid.

use super::field::VectorFieldSpec;
use crate::epsilon::DyadicPath;
use crate::{Error, Result};

/// States `y_0, …, y_{2^n}` on `D_n`; all drivers must share the level `n`.
/// Leaving the declared domain box is an error, since the field bounds stop applying there.
pub fn euler_solve(field: &VectorFieldSpec, drivers: &[DyadicPath], y0: &[f64]) -> Result<Vec<Vec<f64>>> {
    field.validate()?;
    let (d, dp) = (field.dim, field.noise_dim);
    if drivers.len() != dp || y0.len() != d {
        return Err(Error::domain(format!(
            "need {dp} drivers and a {d}-dimensional start, got {} and {}",
            drivers.len(),
            y0.len()
        )));
    }
    let level = drivers[0].level;
    if drivers.iter().any(|b| b.level != level) {
        return Err(Error::domain("drivers must share a common level"));
    }
    let r = field.domain_radius;
    let check = |step: usize, y: &[f64]| -> Result<()> {
        for &v in y {
            if !v.is_finite() {
                return Err(Error::Overflow { step });
            }
            if v.abs() > r {
                return Err(Error::OutsideDomain {
                    step,
                    value: v,
                    radius: r,
                });
            }
        }
        Ok(())
    };
    check(0, y0)?;
    let n = 1usize << level;
    let dt = 1.0 / n as f64;
    let mut out = Vec::with_capacity(n + 1);
    out.push(y0.to_vec());
    let (mut mu, mut sigma, mut db) = (vec![0.0; d], vec![0.0; d * dp], vec![0.0; dp]);
    let mut y = y0.to_vec();
    for k in 0..n {
        field.drift_at(&y, &mut mu);
        field.diffusion_at(&y, &mut sigma);
        for (j, b) in drivers.iter().enumerate() {
            db[j] = b.values[k + 1] - b.values[k];
        }
        for i in 0..d {
            let noise: f64 = sigma[i * dp..(i + 1) * dp].iter().zip(&db).map(|(s, b)| s * b).sum();
            y[i] += mu[i] * dt + noise;
        }
        check(k + 1, &y)?;
        out.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::sample_dyadic;
    use crate::rng::RngStream;
    use crate::sde::field::{FieldBounds, Monomial};

    fn field(drift: Vec<Monomial>, diff: Vec<Monomial>, r: f64) -> VectorFieldSpec {
        VectorFieldSpec {
            dim: 1,
            noise_dim: 1,
            drift: vec![drift],
            diffusion: vec![vec![diff]],
            bounds: FieldBounds {
                f: 1.0,
                grad_f: 1.0,
                hess_f: 1.0,
            },
            domain_radius: r,
        }
    }

    fn driver(level: u32, h: f64, seed: u64) -> DyadicPath {
        let v = sample_dyadic(level, h, &mut RngStream::new(seed, 0)).unwrap();
        DyadicPath::new(h, level, v).unwrap()
    }

    #[test]
    fn zero_field_is_constant() {
        let f = field(vec![], vec![], 10.0);
        let y = euler_solve(&f, &[driver(5, 0.7, 1)], &[1.25]).unwrap();
        assert_eq!(y.len(), 33);
        assert!(y.iter().all(|s| s[0] == 1.25));
    }

    #[test]
    fn additive_noise_is_exact() {
        let f = field(
            vec![],
            vec![Monomial {
                coef: 1.0,
                powers: vec![0],
            }],
            100.0,
        );
        let b = driver(8, 0.8, 2);
        let y = euler_solve(&f, std::slice::from_ref(&b), &[0.5]).unwrap();
        for (s, v) in y.iter().zip(&b.values) {
            assert!((s[0] - 0.5 - v).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_in_initial_value() {
        let f = field(
            vec![Monomial {
                coef: -0.3,
                powers: vec![1],
            }],
            vec![Monomial {
                coef: 0.2,
                powers: vec![1],
            }],
            1e6,
        );
        let b = [driver(7, 0.75, 3)];
        let y1 = euler_solve(&f, &b, &[1.0]).unwrap();
        let y3 = euler_solve(&f, &b, &[3.0]).unwrap();
        for (a, c) in y1.iter().zip(&y3) {
            assert!((3.0 * a[0] - c[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn young_linear_error_shrinks() {
        // Oracle: y0·exp(a·B) solves dY = aY dB for the piecewise-linear driver.
        let (a, h) = (0.5, 0.8);
        let f = field(
            vec![],
            vec![Monomial {
                coef: a,
                powers: vec![1],
            }],
            1e6,
        );
        let levels: Vec<u32> = (6..=12).collect();
        let mut err = vec![0.0; levels.len()];
        for s in 0..50 {
            let fine = driver(12, h, 100 + s);
            for (e, &n) in err.iter_mut().zip(&levels) {
                let b = fine.restrict(n).unwrap();
                let y = euler_solve(&f, std::slice::from_ref(&b), &[1.0]).unwrap();
                let sup = y
                    .iter()
                    .zip(&b.values)
                    .map(|(s, v)| (s[0] - (a * v).exp()).abs())
                    .fold(0.0, f64::max);
                *e += sup / 50.0;
            }
        }
        let xs: Vec<f64> = levels.iter().map(|&n| -(n as f64) * 2f64.ln()).collect();
        let ys: Vec<f64> = err.iter().map(|e| e.ln()).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / 7.0, ys.iter().sum::<f64>() / 7.0);
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!(slope >= 2.0 * 0.75 - 1.0 - 0.3, "slope {slope}, errors {err:?}");
        for w in err.windows(2) {
            assert!(w[1] <= w[0] * 1.01, "{err:?}");
        }
    }

    #[test]
    fn domain_and_overflow_errors() {
        let f = field(
            vec![Monomial {
                coef: 1.0,
                powers: vec![0],
            }],
            vec![],
            1.2,
        );
        let e = euler_solve(&f, &[driver(4, 0.7, 5)], &[0.5]).unwrap_err();
        assert!(matches!(e, Error::OutsideDomain { step: 12, .. }), "{e:?}");
        let g = field(
            vec![Monomial {
                coef: 1e300,
                powers: vec![2],
            }],
            vec![],
            f64::INFINITY,
        );
        let e = euler_solve(&g, &[driver(4, 0.7, 5)], &[1e10]).unwrap_err();
        assert!(matches!(e, Error::Overflow { step: 1 }), "{e:?}");
    }
}
