use std::cell::{OnceCell, RefCell};
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::cov::check_hurst;
use crate::rng::RngStream;
use crate::{Error, Result};

pub const MAX_CIRCULANT_LEVEL: u32 = 24;

/// Davies–Harte sampler for fBM on the grid `i/N`, `i = 1..=N`.
pub struct CirculantSampler {
    n: usize,
    scale: f64,
    sqrt_eig: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    // (i/N)^{2H}, i = 0..=N
    powers: Vec<f64>,
    toeplitz: OnceCell<PowerToeplitz>,
}

/// Spectrum of the circulant embedding of `[(|i−j|/N)^{2H}]_{i,j=0..=N}`.
struct PowerToeplitz {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    spectrum: Vec<Complex64>,
}

/// Autocovariance of unit-spaced fractional Gaussian noise.
fn fgn_acov(k: usize, two_h: f64) -> f64 {
    let k = k as f64;
    0.5 * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
}

impl CirculantSampler {
    pub fn new(n_points: usize, h: f64) -> Result<Self> {
        check_hurst(h)?;
        if n_points == 0 || !n_points.is_power_of_two() {
            return Err(Error::domain(format!("{n_points} is not a power of two")));
        }
        if n_points.trailing_zeros() > MAX_CIRCULANT_LEVEL {
            return Err(Error::domain(format!(
                "circulant level {} exceeds {MAX_CIRCULANT_LEVEL}",
                n_points.trailing_zeros()
            )));
        }
        let n = n_points;
        let m = 2 * n;
        let two_h = 2.0 * h;
        let mut row: Vec<Complex64> = (0..m)
            .map(|j| Complex64::new(fgn_acov(if j <= n { j } else { m - j }, two_h), 0.0))
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut row);
        let mut sqrt_eig = Vec::with_capacity(m);
        for (index, z) in row.iter().enumerate() {
            let ev = z.re;
            if ev < -1e-9 {
                return Err(Error::EmbeddingFailure { index, eigenvalue: ev });
            }
            sqrt_eig.push((ev.max(0.0) / m as f64).sqrt());
        }
        let powers = (0..=n).map(|i| (i as f64 / n as f64).powf(two_h)).collect();
        Ok(Self {
            n,
            scale: (n as f64).powf(-h),
            sqrt_eig,
            fft,
            powers,
            toeplitz: OnceCell::new(),
        })
    }

    /// `r(i/N, j/N)` by table lookup.
    #[inline]
    pub fn cov_index(&self, i: usize, j: usize) -> f64 {
        0.5 * (self.powers[i] + self.powers[j] - self.powers[i.abs_diff(j)])
    }

    /// `(i/N)^{2H}`.
    #[inline]
    pub fn power(&self, i: usize) -> f64 {
        self.powers[i]
    }

    /// `Σ_j (|i−j|/N)^{2H}·a_j` for `i = 0..=N`, by FFT.
    pub fn power_toeplitz(&self, a: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(a.len(), n + 1);
        let t = self.toeplitz.get_or_init(|| {
            let m = 4 * n;
            let mut planner = FftPlanner::new();
            let forward = planner.plan_fft_forward(m);
            let inverse = planner.plan_fft_inverse(m);
            let mut spectrum = vec![Complex64::new(0.0, 0.0); m];
            for d in 0..=n {
                spectrum[d].re = self.powers[d];
                if d > 0 {
                    spectrum[m - d].re = self.powers[d];
                }
            }
            forward.process(&mut spectrum);
            PowerToeplitz {
                forward,
                inverse,
                spectrum,
            }
        });
        let m = t.spectrum.len();
        let mut buf: Vec<Complex64> = (0..m)
            .map(|i| Complex64::new(a.get(i).copied().unwrap_or(0.0), 0.0))
            .collect();
        t.forward.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&t.spectrum) {
            *b *= s;
        }
        t.inverse.process(&mut buf);
        buf[..=n].iter().map(|z| z.re / m as f64).collect()
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Two independent paths from one transform.
    pub fn sample_pair(&self, rng: &mut RngStream) -> (Vec<f64>, Vec<f64>) {
        let mut w: Vec<Complex64> = self
            .sqrt_eig
            .iter()
            .map(|&s| {
                let a = rng.normal();
                let b = rng.normal();
                Complex64::new(s * a, s * b)
            })
            .collect();
        self.fft.process(&mut w);
        let (mut x, mut y) = (Vec::with_capacity(self.n), Vec::with_capacity(self.n));
        let (mut sx, mut sy) = (0.0, 0.0);
        for z in &w[..self.n] {
            sx += z.re * self.scale;
            sy += z.im * self.scale;
            x.push(sx);
            y.push(sy);
        }
        (x, y)
    }

    pub fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        self.sample_pair(rng).0
    }
}

thread_local! {
    static CACHE: RefCell<HashMap<(u64, usize), Rc<CirculantSampler>>> = RefCell::new(HashMap::new());
}

pub(crate) fn cached(n_points: usize, h: f64) -> Result<Rc<CirculantSampler>> {
    let key = (h.to_bits(), n_points);
    if let Some(s) = CACHE.with(|c| c.borrow().get(&key).cloned()) {
        return Ok(s);
    }
    let s = Rc::new(CirculantSampler::new(n_points, h)?);
    CACHE.with(|c| {
        let mut c = c.borrow_mut();
        if c.len() > 32 {
            c.clear();
        }
        c.insert(key, s.clone());
    });
    Ok(s)
}

/// Exact sample of `(B(1/N), …, B(1))` with `N = n_points`.
pub fn circulant_fbm_grid(n_points: usize, h: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
    Ok(cached(n_points, h)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn brownian_increments_are_standard() {
        let mut rng = RngStream::new(11, 0);
        let n = 1 << 10;
        let mut z = Vec::new();
        while z.len() < 100_000 {
            let p = circulant_fbm_grid(n, 0.5, &mut rng).unwrap();
            let mut prev = 0.0;
            for v in p {
                z.push((v - prev) * (n as f64).sqrt());
                prev = v;
            }
        }
        z.sort_by(f64::total_cmp);
        let nd = Normal::new(0.0, 1.0).unwrap();
        let m = z.len() as f64;
        let d = z
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = nd.cdf(x);
                (c - i as f64 / m).abs().max(((i + 1) as f64 / m - c).abs())
            })
            .fold(0.0, f64::max);
        // 1% critical value of the one-sample KS statistic.
        assert!(d < 1.628 / m.sqrt(), "D={d}");
    }

    #[test]
    fn covariance_matches_kernel() {
        let mut rng = RngStream::new(12, 0);
        let s = CirculantSampler::new(16, 0.8).unwrap();
        let reps = 100_000;
        let mut acc = vec![0.0; 256];
        for _ in 0..reps {
            let (a, b) = s.sample_pair(&mut rng);
            for p in [&a, &b] {
                for i in 0..16 {
                    for j in 0..16 {
                        acc[i * 16 + j] += p[i] * p[j];
                    }
                }
            }
        }
        for i in 0..16 {
            for j in 0..16 {
                let (ti, tj) = ((i + 1) as f64 / 16.0, (j + 1) as f64 / 16.0);
                let want = super::super::fbm_cov(ti, tj, 0.8).unwrap();
                let got = acc[i * 16 + j] / (2 * reps) as f64;
                assert!((got - want).abs() < 0.02, "({i},{j}) {got} vs {want}");
            }
        }
    }

    #[test]
    fn single_point_is_standard_normal() {
        let mut rng = RngStream::new(13, 0);
        let n = 50_000;
        let v: f64 = (0..n)
            .map(|_| circulant_fbm_grid(1, 0.3, &mut rng).unwrap()[0].powi(2))
            .sum::<f64>()
            / n as f64;
        assert!((v - 1.0).abs() < 5.0 * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn eigenvalues_nonnegative_across_hurst() {
        for hi in 1..=19 {
            let h = hi as f64 / 20.0;
            for k in [0, 3, 10, 14] {
                CirculantSampler::new(1 << k, h).unwrap();
            }
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(CirculantSampler::new(12, 0.5).is_err());
        assert!(CirculantSampler::new(1 << 25, 0.5).is_err());
    }

    #[test]
    fn power_toeplitz_matches_direct_sum() {
        let s = CirculantSampler::new(64, 0.7).unwrap();
        let mut rng = RngStream::new(5, 0);
        let a: Vec<f64> = (0..=64).map(|_| rng.normal()).collect();
        let fast = s.power_toeplitz(&a);
        for (i, f) in fast.iter().enumerate() {
            let direct: f64 = a.iter().enumerate().map(|(j, x)| s.power(i.abs_diff(j)) * x).sum();
            assert!((f - direct).abs() < 1e-12, "{i}: {f} vs {direct}");
        }
    }

    #[test]
    fn deterministic() {
        let a = circulant_fbm_grid(64, 0.7, &mut RngStream::new(4, 4)).unwrap();
        let b = circulant_fbm_grid(64, 0.7, &mut RngStream::new(4, 4)).unwrap();
        assert_eq!(a, b);
    }
}
