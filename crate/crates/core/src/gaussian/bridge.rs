use std::cell::RefCell;
use std::collections::HashSet;
use std::rc::Rc;

use super::circulant::{cached, CirculantSampler, MAX_CIRCULANT_LEVEL};
use super::cov::{check_hurst, cov_unchecked};
use super::mvn::{factorize, sample_with, Factor, GridGaussian};
use crate::rng::RngStream;
use crate::{Error, Result};

enum Unconditional {
    Circulant {
        sampler: Rc<CirculantSampler>,
        // grid index per union point, 0 meaning t = 0
        index: Vec<usize>,
    },
    Dense {
        g: GridGaussian,
        f: Factor,
    },
}

/// Smallest `L` with every time on the grid `i/2^L`, if any.
fn dyadic_level(times: &[f64]) -> Option<u32> {
    let mut level = 0;
    for &t in times {
        if !(0.0..=1.0).contains(&t) {
            return None;
        }
        let mut l = level;
        while l <= MAX_CIRCULANT_LEVEL && (t * (1u64 << l) as f64).fract() != 0.0 {
            l += 1;
        }
        if l > MAX_CIRCULANT_LEVEL {
            return None;
        }
        level = level.max(l);
    }
    Some(level)
}

/// Reusable conditional sampler of fBM at `new_times` given fixed values
/// at `known_times`.
///
/// An unconditional draw on all times is corrected by the rank-one bridge
/// recursion over the known points. The recursion's pivots `r_{k−1}(t_k,t_k)`
/// and multipliers form an `LDLᵀ` factor of the known-point covariance,
/// so each draw costs one triangular pass plus one inner product per new
/// point.
pub struct Bridge {
    h: f64,
    known: Vec<f64>,
    values: Vec<f64>,
    new_times: Vec<f64>,
    factor: Rc<Ldl>,
    uncond: Unconditional,
}

struct Ldl {
    // unit lower-triangular multipliers, row-major K×K
    lower: Vec<f64>,
    pivots: Vec<f64>,
}

fn ldl(known: &[f64], h: f64) -> Result<Ldl> {
    let two_h = 2.0 * h;
    let k = known.len();
    // lower triangle of r_p(t_i, t_j), updated in place
    let mut c = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            c[i * k + j] = cov_unchecked(known[i], known[j], two_h);
        }
    }
    let mut lower = vec![0.0; k * k];
    let mut pivots = vec![0.0; k];
    for p in 0..k {
        let piv = c[p * k + p];
        if piv < 1e-14 {
            return Err(Error::DegenerateConditioning {
                time: known[p],
                variance: piv,
            });
        }
        pivots[p] = piv;
        lower[p * k + p] = 1.0;
        let col: Vec<f64> = (0..k).map(|j| if j > p { c[j * k + p] } else { 0.0 }).collect();
        for i in p + 1..k {
            let f = col[i] / piv;
            lower[i * k + p] = f;
            if f != 0.0 {
                for (x, y) in c[i * k + p + 1..=i * k + i].iter_mut().zip(&col[p + 1..=i]) {
                    *x -= f * y;
                }
            }
        }
    }
    Ok(Ldl { lower, pivots })
}

/// Above this many known points the correction goes through an FFT.
const FFT_MIN_KNOWN: usize = 64;

/// Known sets at least this large keep their factor for the next call.
const CACHE_MIN_KNOWN: usize = 256;

// (H bits, known times, factor)
type LdlEntry = (u64, Vec<f64>, Rc<Ldl>);

thread_local! {
    static LDL_CACHE: RefCell<Vec<LdlEntry>> = const { RefCell::new(Vec::new()) };
}

fn ldl_cached(known: &[f64], h: f64) -> Result<Rc<Ldl>> {
    if known.len() < CACHE_MIN_KNOWN {
        return Ok(Rc::new(ldl(known, h)?));
    }
    let key = h.to_bits();
    let hit = LDL_CACHE.with(|c| {
        c.borrow()
            .iter()
            .find(|(hk, t, _)| *hk == key && t == known)
            .map(|e| e.2.clone())
    });
    if let Some(f) = hit {
        return Ok(f);
    }
    let f = Rc::new(ldl(known, h)?);
    LDL_CACHE.with(|c| {
        let mut c = c.borrow_mut();
        if c.len() >= 2 {
            c.remove(0);
        }
        c.push((key, known.to_vec(), f.clone()));
    });
    Ok(f)
}

impl Bridge {
    pub fn new(known_times: &[f64], known_values: &[f64], new_times: &[f64], h: f64) -> Result<Self> {
        check_hurst(h)?;
        if known_times.len() != known_values.len() {
            return Err(Error::domain("known times and values differ in length"));
        }
        let mut seen = HashSet::new();
        for &t in known_times {
            if !(t >= 0.0) || !seen.insert(t.to_bits()) {
                return Err(Error::domain(format!("known time {t} repeated or negative")));
            }
        }
        for &t in new_times {
            if !(t >= 0.0) || seen.contains(&t.to_bits()) {
                return Err(Error::domain(format!("new time {t} negative or already known")));
            }
        }
        let (known, values): (Vec<f64>, Vec<f64>) = known_times
            .iter()
            .zip(known_values)
            .filter(|(&t, _)| t > 0.0)
            .map(|(&t, &v)| (t, v))
            .unzip();

        let factor = ldl_cached(&known, h)?;

        let union: Vec<f64> = new_times.iter().chain(known.iter()).copied().collect();
        let u = union.len();
        let uncond = match dyadic_level(&union) {
            Some(l) if u > 64 && ((1u64 << l) as f64) * (l as f64 + 1.0) < (u as f64).powi(3) / 8.0 => {
                let n = 1usize << l;
                match cached(n, h) {
                    Ok(sampler) => Unconditional::Circulant {
                        sampler,
                        index: union.iter().map(|&t| (t * n as f64).round() as usize).collect(),
                    },
                    Err(Error::EmbeddingFailure { .. }) => dense(&union, h)?,
                    Err(e) => return Err(e),
                }
            }
            _ => dense(&union, h)?,
        };
        Ok(Self {
            h,
            known,
            values,
            new_times: new_times.to_vec(),
            factor,
            uncond,
        })
    }

    /// Values at the new times, in the order they were given.
    pub fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        let m = self.new_times.len();
        let k = self.known.len();
        let x = match &self.uncond {
            Unconditional::Dense { g, f } => sample_with(g, f, rng),
            Unconditional::Circulant { sampler, index } => {
                let path = sampler.sample(rng);
                index.iter().map(|&i| if i == 0 { 0.0 } else { path[i - 1] }).collect()
            }
        };
        if k == 0 {
            return x;
        }
        // e_p = X^{p−1}_{t_p} − y_p, the residual at the time of pivot p
        let mut e: Vec<f64> = (0..k).map(|i| x[m + i] - self.values[i]).collect();
        for i in 0..k {
            let row = &self.factor.lower[i * k..i * k + i];
            let s: f64 = row.iter().zip(&e[..i]).map(|(a, b)| a * b).sum();
            e[i] -= s;
        }
        for i in 0..k {
            e[i] /= self.factor.pivots[i];
        }
        for i in (0..k).rev() {
            let mut s = e[i];
            for j in i + 1..k {
                s -= self.factor.lower[j * k + i] * e[j];
            }
            e[i] = s;
        }
        if let Unconditional::Circulant { sampler, index } = &self.uncond {
            // an FFT of length 4N costs roughly 32·4N·log2(4N) against m·k for the direct sum
            let len = 4.0 * sampler.len() as f64;
            let fft = k > FFT_MIN_KNOWN && (m * k) as f64 > 32.0 * len * len.log2();
            let corr = grid_correction(sampler, &index[..m], &index[m..], &e, fft);
            return x.iter().zip(corr).map(|(a, c)| a - c).collect();
        }
        let two_h = 2.0 * self.h;
        self.new_times
            .iter()
            .enumerate()
            .map(|(p, &t)| {
                let corr: f64 = self
                    .known
                    .iter()
                    .zip(&e)
                    .map(|(&s, &w)| cov_unchecked(t, s, two_h) * w)
                    .sum();
                x[p] - corr
            })
            .collect()
    }
}

/// `Σ_j r(t_i, s_j)·w_j` for grid indices `new` and `known`.
fn grid_correction(sampler: &CirculantSampler, new: &[usize], known: &[usize], w: &[f64], fft: bool) -> Vec<f64> {
    if !fft {
        return new
            .iter()
            .map(|&i| known.iter().zip(w).map(|(&j, &w)| sampler.cov_index(i, j) * w).sum())
            .collect();
    }
    // r(i,j) = ½(p_i + p_j − p_{|i−j|}); the last term is a Toeplitz product
    let mut a = vec![0.0; sampler.len() + 1];
    for (&j, &w) in known.iter().zip(w) {
        a[j] += w;
    }
    let total: f64 = w.iter().sum();
    let base: f64 = known.iter().zip(w).map(|(&j, &w)| sampler.power(j) * w).sum();
    let conv = sampler.power_toeplitz(&a);
    new.iter()
        .map(|&i| 0.5 * (sampler.power(i) * total + base - conv[i]))
        .collect()
}

fn dense(times: &[f64], h: f64) -> Result<Unconditional> {
    let g = GridGaussian::fbm(times, h)?;
    let f = factorize(&g.cov)?;
    Ok(Unconditional::Dense { g, f })
}

/// Samples fBM at `new_times` conditional on `B(known_times) = known_values`.
pub fn bridge_refine(
    known_times: &[f64],
    known_values: &[f64],
    new_times: &[f64],
    h: f64,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    Ok(Bridge::new(known_times, known_values, new_times, h)?.sample(rng))
}
