use serde::{Deserialize, Serialize};

use super::RecordParams;
use crate::{Error, Result};

/// fBM values on `i/2^level`, `i = 0..=2^level`, read as a piecewise-linear path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicPath {
    pub hurst: f64,
    pub level: u32,
    pub values: Vec<f64>,
}

impl DyadicPath {
    pub fn new(hurst: f64, level: u32, values: Vec<f64>) -> Result<Self> {
        if values.len() != (1usize << level) + 1 {
            return Err(Error::domain(format!(
                "level {level} needs {} values, got {}",
                (1usize << level) + 1,
                values.len()
            )));
        }
        if values[0] != 0.0 {
            return Err(Error::domain("path must start at 0"));
        }
        Ok(Self { hurst, level, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    /// Every `2^{level−k}`-th value.
    pub fn restrict(&self, k: u32) -> Result<DyadicPath> {
        if k > self.level {
            return Err(Error::domain(format!("cannot restrict level {} to {k}", self.level)));
        }
        let s = 1usize << (self.level - k);
        Ok(DyadicPath {
            hurst: self.hurst,
            level: k,
            values: self.values.iter().step_by(s).copied().collect(),
        })
    }

    /// Piecewise-linear interpolation at `t ∈ [0,1]`.
    pub fn eval(&self, t: f64) -> f64 {
        let n = (self.len() - 1) as f64;
        let x = (t.clamp(0.0, 1.0)) * n;
        let i = (x.floor() as usize).min(self.len() - 2);
        let w = x - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// Midpoint displacements `a^k_j − b^k_j` at level `k`.
    pub fn displacements(&self, k: u32) -> Result<Vec<f64>> {
        if k == 0 || k > self.level {
            return Err(Error::domain(format!("level {k} outside 1..={}", self.level)));
        }
        let s = 1usize << (self.level - k);
        let v = &self.values;
        Ok((0..1usize << (k - 1))
            .map(|j| v[(2 * j + 1) * s] - 0.5 * (v[2 * j * s] + v[(2 * j + 2) * s]))
            .collect())
    }

    /// `max_j |a^k_j − b^k_j| = ‖B_k − B_{k−1}‖_∞`.
    pub fn midpoint_deviation(&self, k: u32) -> Result<f64> {
        Ok(self.displacements(k)?.iter().fold(0.0, |m, d| m.max(d.abs())))
    }

    pub fn breakers_at(&self, k: u32, p: &RecordParams) -> Result<usize> {
        let thr = p.threshold(k);
        Ok(self.displacements(k)?.iter().filter(|d| d.abs() >= thr).count())
    }

    /// Highest level `≤ self.level` carrying a record-breaker.
    pub fn last_breaker(&self, p: &RecordParams) -> Option<u32> {
        (1..=self.level)
            .rev()
            .find(|&k| is_record_broken(self, k, p).unwrap_or(false))
    }
}

pub fn midpoint_deviation(path: &DyadicPath, k: u32) -> Result<f64> {
    path.midpoint_deviation(k)
}

/// True iff the deviation at level `k` reaches `ρ·ℓ_k`; the boundary counts.
pub fn is_record_broken(path: &DyadicPath, k: u32, p: &RecordParams) -> Result<bool> {
    Ok(path.midpoint_deviation(k)? >= p.threshold(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn random_path(level: u32, seed: u64) -> DyadicPath {
        let mut rng = RngStream::new(seed, 0);
        let mut v = vec![0.0; (1 << level) + 1];
        for x in v.iter_mut().skip(1) {
            *x = rng.normal();
        }
        DyadicPath::new(0.7, level, v).unwrap()
    }

    #[test]
    fn linear_path_has_no_deviation() {
        let v: Vec<f64> = (0..=16).map(|i| i as f64 / 16.0).collect();
        let p = DyadicPath::new(0.6, 4, v).unwrap();
        for k in 1..=4 {
            assert!(p.midpoint_deviation(k).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn single_midpoint() {
        let p = DyadicPath::new(0.6, 1, vec![0.0, 0.7, -0.4]).unwrap();
        assert!((p.midpoint_deviation(1).unwrap() - (0.7f64 + 0.2).abs()).abs() < 1e-15);
    }

    #[test]
    fn deviation_matches_dense_sup() {
        let p = random_path(4, 3);
        let q = p.restrict(3).unwrap();
        for k in 1..=4 {
            let a = p.restrict(k).unwrap();
            let b = p.restrict(k - 1).unwrap();
            let sup = (0..=10_000)
                .map(|i| {
                    let t = i as f64 / 10_000.0;
                    (a.eval(t) - b.eval(t)).abs()
                })
                .fold(0.0, f64::max);
            assert!((sup - p.midpoint_deviation(k).unwrap()).abs() < 1e-12);
        }
        assert_eq!(q.values.len(), 9);
    }

    #[test]
    fn breaker_boundary() {
        let p = RecordParams::new(0.8, 0.1, 5.0).unwrap();
        let zero = DyadicPath::new(0.8, 3, vec![0.0; 9]).unwrap();
        for k in 1..=3 {
            assert!(!is_record_broken(&zero, k, &p).unwrap());
        }
        let thr = p.threshold(1);
        let edge = DyadicPath::new(0.8, 1, vec![0.0, thr, 0.0]).unwrap();
        assert!(is_record_broken(&edge, 1, &p).unwrap());
        // threshold 5·2^{−2.1} = 1.16629…
        assert!((p.threshold(3) - 1.166_291_239).abs() < 1e-8);
        let mut v = vec![0.0; 9];
        v[1] = 0.9;
        let q = DyadicPath::new(0.8, 3, v).unwrap();
        assert!(!is_record_broken(&q, 3, &p).unwrap());
    }

    #[test]
    fn restriction_roundtrip() {
        let p = random_path(5, 8);
        let r = p.restrict(2).unwrap();
        assert_eq!(
            r.values,
            vec![p.values[0], p.values[8], p.values[16], p.values[24], p.values[32]]
        );
        assert!(p.restrict(6).is_err());
        assert!(p.midpoint_deviation(0).is_err());
    }
}
