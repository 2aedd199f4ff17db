//! Exponential change of measure proposing the next record-breaker.

use nalgebra::{DMatrix, DVector};

use super::bce::Conditioner;
use super::measure::{tilt_parameter, LevelProposal};
use super::{DyadicPath, RecordParams};
use crate::gaussian::{factorize, Bridge};
use crate::rng::RngStream;
use crate::{Error, Result};

/// `β = (½, −1, ½)`.
pub const BETA: [f64; 3] = [0.5, -1.0, 0.5];

/// The proposed breaker location and its tilted triple `α_n(m,k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltedProposal {
    pub m: u32,
    pub k: u64,
    pub up: bool,
    pub triple: [f64; 3],
}

impl TiltedProposal {
    pub fn statistic(&self) -> f64 {
        BETA.iter().zip(&self.triple).map(|(b, a)| b * a).sum()
    }
}

#[derive(Debug, Clone)]
pub struct EcmOutcome {
    pub accepted: bool,
    pub proposal: TiltedProposal,
    /// `Θ·1{correct-sign breaker}`.
    pub weight: f64,
    /// Breakers at level `n+m`; zero when the path was not completed.
    pub breakers: usize,
    /// The path on `D_{n+m}` when accepted.
    pub path: Option<DyadicPath>,
}

/// Conditional law of `α_n(m,k)` given `B_n`, its β-projection and the tilted draw.
struct Triple {
    times: [f64; 3],
    mean: [f64; 3],
    cov: DMatrix<f64>,
    free: Vec<usize>,
}

impl Triple {
    fn new(path: &DyadicPath, cond: &Conditioner, m: u32, k: u64) -> Self {
        let n = path.level;
        let size = 1u64 << (n + m);
        let stride = 1u64 << m;
        let idx = [2 * k - 2, 2 * k - 1, 2 * k];
        let times = idx.map(|i| i as f64 / size as f64);
        let mut mean = [0.0; 3];
        let mut free = Vec::new();
        for (j, &i) in idx.iter().enumerate() {
            if i % stride == 0 {
                mean[j] = path.values[(i / stride) as usize];
            } else {
                free.push(j);
                mean[j] = cond.mean(times[j]);
            }
        }
        let ft: Vec<f64> = free.iter().map(|&j| times[j]).collect();
        let fc = cond.cov(&ft);
        let mut cov = DMatrix::zeros(3, 3);
        for (a, &i) in free.iter().enumerate() {
            for (b, &j) in free.iter().enumerate() {
                cov[(i, j)] = fc[(a, b)];
            }
        }
        Self { times, mean, cov, free }
    }

    fn mu(&self) -> f64 {
        BETA.iter().zip(&self.mean).map(|(b, a)| b * a).sum()
    }

    fn var(&self) -> f64 {
        let b = DVector::from_column_slice(&BETA);
        (b.transpose() * &self.cov * &b)[(0, 0)]
    }

    /// Draw from `N(mean + θΣβ, Σ)`.
    fn sample_tilted(&self, theta: f64, rng: &mut RngStream) -> Result<[f64; 3]> {
        let b = DVector::from_column_slice(&BETA);
        let shift = &self.cov * b * theta;
        let mut out = self.mean;
        for j in 0..3 {
            out[j] += shift[j];
        }
        let sub = self.cov.select_rows(&self.free).select_columns(&self.free);
        let f = factorize(&sub)?;
        let l = f.lower();
        let mut z = vec![0.0; f.active.len()];
        rng.fill_normal(&mut z);
        for (r, &a) in f.active.iter().enumerate() {
            let mut acc = 0.0;
            for (c, zc) in z.iter().enumerate().take(r + 1) {
                acc += l[(r, c)] * zc;
            }
            out[self.free[a]] += acc;
        }
        Ok(out)
    }
}

/// One run of the change-of-measure sampler at offset `m`.
///
/// The uniform is drawn before the remaining points are filled: since the
/// proposed position is itself a breaker whenever the sign event holds,
/// `R ≥ 1` and `U ≥ Θ` already decides rejection.
pub fn ecm(
    path: &DyadicPath,
    cond: &Conditioner,
    proposal: &LevelProposal,
    m: u32,
    p: &RecordParams,
    rng: &mut RngStream,
) -> Result<EcmOutcome> {
    let n = path.level;
    let l = n + m;
    let k = rng.range_inclusive(1, 1u64 << (l - 1));
    let up = rng.coin();
    let tri = Triple::new(path, cond, m, k);
    let theta = if up { 1.0 } else { -1.0 } * tilt_parameter(n, m, p);
    let triple = tri.sample_tilted(theta, rng)?;
    let prop = TiltedProposal { m, k, up, triple };
    let s = prop.statistic();
    let thr = p.threshold(l);
    let sign_event = if up { s >= thr } else { s <= -thr };

    let (mu, var) = (tri.mu(), tri.var());
    let log_g = super::measure::log_term(n, m, p) - proposal.log_z;
    let log_theta = -log_g + l as f64 * std::f64::consts::LN_2 - theta * s + theta * mu + 0.5 * theta * theta * var;
    let weight = if sign_event { log_theta.exp() } else { 0.0 };
    if weight > 1.0 + 1e-9 {
        return Err(Error::LikelihoodRatio {
            ratio: weight,
            level: n,
            offset: m,
        });
    }
    let u = rng.uniform();
    let reject = EcmOutcome {
        accepted: false,
        proposal: prop,
        weight,
        breakers: 0,
        path: None,
    };
    if u >= weight {
        return Ok(reject);
    }

    let size = 1usize << l;
    let stride = 1usize << m;
    let mut known_t: Vec<f64> = path.times();
    let mut known_v = path.values.clone();
    let mut fixed = vec![false; size + 1];
    for i in 0..path.len() {
        fixed[i * stride] = true;
    }
    for &j in &tri.free {
        known_t.push(tri.times[j]);
        known_v.push(triple[j]);
        fixed[(2 * k - 2) as usize + j] = true;
    }
    let new_idx: Vec<usize> = (0..=size).filter(|&i| !fixed[i]).collect();
    let new_t: Vec<f64> = new_idx.iter().map(|&i| i as f64 / size as f64).collect();
    let fill = Bridge::new(&known_t, &known_v, &new_t, path.hurst)?.sample(rng);

    let mut values = vec![0.0; size + 1];
    for i in 0..path.len() {
        values[i * stride] = path.values[i];
    }
    for &j in &tri.free {
        values[(2 * k - 2) as usize + j] = triple[j];
    }
    for (&i, v) in new_idx.iter().zip(fill) {
        values[i] = v;
    }
    let full = DyadicPath::new(path.hurst, l, values)?;
    let r = full.breakers_at(l, p)?;
    let mut clean = true;
    for j in n + 1..l {
        if full.breakers_at(j, p)? > 0 {
            clean = false;
            break;
        }
    }
    let accepted = clean && r > 0 && u < weight / r as f64;
    Ok(EcmOutcome {
        accepted,
        proposal: prop,
        weight,
        breakers: r,
        path: accepted.then_some(full),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epsilon::measure::starting_level;
    use crate::gaussian::sample_dyadic;

    #[test]
    fn weight_bounded_in_valid_regime() {
        let mut rng = RngStream::new(21, 0);
        let mut count = 0;
        for &(h, rho, delta) in &[(0.8, 5.0, 0.1), (0.6, 5.0, 0.2), (0.5, 6.0, 0.2), (0.3, 5.0, 0.2)] {
            let p = RecordParams::new(h, delta, rho).unwrap();
            let n = starting_level(&p);
            let g = LevelProposal::new(n, &p);
            let mut done = 0;
            while done < 2500 {
                let b = DyadicPath::new(h, n, sample_dyadic(n, h, &mut rng).unwrap()).unwrap();
                let c = Conditioner::new(&b).unwrap();
                if !super::super::bce::bce_check_with(&c, n, &p).unwrap().passed {
                    continue;
                }
                for _ in 0..50 {
                    let m = g.sample(&mut rng);
                    let o = ecm(&b, &c, &g, m, &p, &mut rng).unwrap();
                    assert!(o.weight <= 1.0 + 1e-9);
                    if let Some(full) = o.path {
                        for j in n + 1..n + m {
                            assert_eq!(full.breakers_at(j, &p).unwrap(), 0);
                        }
                        assert!(full.breakers_at(n + m, &p).unwrap() > 0);
                        assert_eq!(full.restrict(n).unwrap(), b);
                    }
                    done += 1;
                    count += 1;
                }
            }
        }
        assert_eq!(count, 10_000);
    }

    #[test]
    fn tilted_triple_centres_on_threshold() {
        // Under the tilt the statistic has mean μ + θβᵀΣβ.
        let p = RecordParams::new(0.8, 0.1, 5.0).unwrap();
        let b = DyadicPath::new(0.8, 1, vec![0.0, 0.3, 0.5]).unwrap();
        let c = Conditioner::new(&b).unwrap();
        let tri = Triple::new(&b, &c, 2, 3);
        let theta = tilt_parameter(1, 2, &p);
        let mut rng = RngStream::new(3, 3);
        let n = 20_000;
        let mean = (0..n)
            .map(|_| {
                let t = tri.sample_tilted(theta, &mut rng).unwrap();
                BETA.iter().zip(&t).map(|(a, b)| a * b).sum::<f64>()
            })
            .sum::<f64>()
            / n as f64;
        let want = tri.mu() + theta * tri.var();
        assert!((mean - want).abs() < 5.0 * tri.var().sqrt() / (n as f64).sqrt());
    }
}
