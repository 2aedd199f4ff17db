use crate::{Error, Result};

pub(crate) fn check_hurst(h: f64) -> Result<()> {
    if h > 0.0 && h < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("Hurst index {h} not in (0,1)")))
    }
}

/// `r(s,t) = ½(s^{2H} + t^{2H} − |s−t|^{2H})`.
pub fn fbm_cov(s: f64, t: f64, h: f64) -> Result<f64> {
    check_hurst(h)?;
    if !(s >= 0.0 && t >= 0.0) {
        return Err(Error::domain(format!("negative time in r({s},{t})")));
    }
    Ok(cov_unchecked(s, t, 2.0 * h))
}

#[inline]
pub(crate) fn cov_unchecked(s: f64, t: f64, two_h: f64) -> f64 {
    0.5 * (s.powf(two_h) + t.powf(two_h) - (s - t).abs().powf(two_h))
}

/// The fBM covariance kernel for a fixed Hurst index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbmCovariance {
    h: f64,
}

impl FbmCovariance {
    pub fn new(h: f64) -> Result<Self> {
        check_hurst(h)?;
        Ok(Self { h })
    }

    pub fn hurst(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn r(&self, s: f64, t: f64) -> f64 {
        cov_unchecked(s, t, 2.0 * self.h)
    }

    pub fn matrix(&self, times: &[f64]) -> nalgebra::DMatrix<f64> {
        let n = times.len();
        let two_h = 2.0 * self.h;
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = cov_unchecked(times[i], times[j], two_h);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }
}
