//! Conditional moments given `B_n` and the bounded-conditional-expectation check.

use nalgebra::{DMatrix, DVector};

use super::{DyadicPath, RecordParams};
use crate::gaussian::{factorize, Factor, FbmCovariance};
use crate::{Error, Result};

/// Conditional law of fBM given its values on the nonzero points of `D_n`.
/// `Σ_n` is factored once; means are inner products with `w = Σ_n⁻¹ B_n`.
pub struct Conditioner {
    kernel: FbmCovariance,
    times: Vec<f64>,
    factor: Factor,
    w: DVector<f64>,
}

impl Conditioner {
    pub fn new(path: &DyadicPath) -> Result<Self> {
        let kernel = FbmCovariance::new(path.hurst)?;
        let times: Vec<f64> = (1..path.len()).map(|i| path.time(i)).collect();
        let factor = factorize(&kernel.matrix(&times))?;
        if factor.active.len() != times.len() {
            return Err(Error::IllConditioned {
                dim: times.len(),
                jitter: factor.jitter,
            });
        }
        let w = factor.solve(&DVector::from_column_slice(&path.values[1..]));
        Ok(Self {
            kernel,
            times,
            factor,
            w,
        })
    }

    /// `γ_n = max_i |(Σ_n⁻¹ B_n)_i|`.
    pub fn gamma(&self) -> f64 {
        self.w.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    fn cross(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(self.times.len(), self.times.iter().map(|&s| self.kernel.r(t, s)))
    }

    /// `E[B(t) | B_n]`.
    pub fn mean(&self, t: f64) -> f64 {
        self.times
            .iter()
            .zip(self.w.iter())
            .map(|(&s, &w)| self.kernel.r(t, s) * w)
            .sum()
    }

    /// Conditional covariance matrix of `B` at `pts`.
    pub fn cov(&self, pts: &[f64]) -> DMatrix<f64> {
        let k = pts.len();
        let cross = DMatrix::from_columns(&pts.iter().map(|&t| self.cross(t)).collect::<Vec<_>>());
        let solved = self.factor.chol.solve(&cross);
        let mut out = self.kernel.matrix(pts);
        out -= cross.transpose() * solved;
        for i in 0..k {
            for j in 0..i {
                let a = 0.5 * (out[(i, j)] + out[(j, i)]);
                out[(i, j)] = a;
                out[(j, i)] = a;
            }
        }
        out
    }

    /// `μ_n(m,k)` for `k = 1..=2^{n+m−1}`.
    pub fn midpoint_means(&self, n: u32, m: u32) -> Vec<f64> {
        let l = n + m;
        let size = 1usize << l;
        let c: Vec<f64> = if self.times.len() == 1 << n {
            // known points sit on the fine grid: one power table serves every covariance
            let stride = 1usize << m;
            let two_h = 2.0 * self.kernel.hurst();
            let pw: Vec<f64> = (0..=size).map(|k| (k as f64 / size as f64).powf(two_h)).collect();
            let total: f64 = self.w.sum();
            let base: f64 = self.w.iter().enumerate().map(|(i, w)| w * pw[(i + 1) * stride]).sum();
            (0..=size)
                .map(|j| {
                    let s: f64 = self
                        .w
                        .iter()
                        .enumerate()
                        .map(|(i, w)| w * pw[j.abs_diff((i + 1) * stride)])
                        .sum();
                    0.5 * (total * pw[j] + base - s)
                })
                .collect()
        } else {
            (0..=size).map(|i| self.mean(i as f64 / size as f64)).collect()
        };
        (1..=size / 2)
            .map(|k| 0.5 * c[2 * k - 2] - c[2 * k - 1] + 0.5 * c[2 * k])
            .collect()
    }
}

/// Outcome of the BCE check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BceReport {
    pub passed: bool,
    pub gamma: f64,
    pub max_level_offset: u32,
}

/// `M_n = max{1, ⌈(H−δ)⁻¹·log2((2^{n+1}+2)γ_n/ρ) − n⌉}`.
pub fn max_checking_offset(n: u32, gamma: f64, p: &RecordParams) -> u32 {
    let x = (((n + 1) as f64).exp2() + 2.0) * gamma / p.rho;
    if x <= 0.0 {
        return 1;
    }
    let v = (x.log2() / p.gap() - n as f64).ceil();
    if v < 1.0 {
        1
    } else {
        v as u32
    }
}

/// Offsets beyond this would materialize more than 2^26 conditional means.
const MAX_CHECK_LEVEL: u32 = 26;

pub fn bce_check_with(cond: &Conditioner, n: u32, p: &RecordParams) -> Result<BceReport> {
    let gamma = cond.gamma();
    let mn = max_checking_offset(n, gamma, p);
    if n + mn > MAX_CHECK_LEVEL {
        return Err(Error::domain(format!(
            "BCE check needs level {} (gamma {gamma:e}); parameters too extreme",
            n + mn
        )));
    }
    for m in 1..=mn {
        let bound = p.rho / 2.0 * p.ell(n + m);
        if cond.midpoint_means(n, m).iter().any(|mu| mu.abs() >= bound) {
            return Ok(BceReport {
                passed: false,
                gamma,
                max_level_offset: mn,
            });
        }
    }
    Ok(BceReport {
        passed: true,
        gamma,
        max_level_offset: mn,
    })
}

pub fn bce_check(path: &DyadicPath, p: &RecordParams) -> Result<bool> {
    Ok(bce_check_with(&Conditioner::new(path)?, path.level, p)?.passed)
}
