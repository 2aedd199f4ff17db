use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::cov::FbmCovariance;
use crate::rng::RngStream;
use crate::{Error, Result};

/// A Gaussian vector indexed by points in time.
#[derive(Debug, Clone, PartialEq)]
pub struct GridGaussian {
    pub points: Vec<f64>,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GridGaussian {
    pub fn new(points: Vec<f64>, mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = points.len();
        if mean.len() != n || cov.nrows() != n || cov.ncols() != n {
            return Err(Error::domain(format!(
                "dimension mismatch: {n} points, mean {}, cov {}x{}",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        for i in 0..n {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-10 {
                    return Err(Error::domain(format!("covariance not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self { points, mean, cov })
    }

    /// Centered fBM on the given times.
    pub fn fbm(points: &[f64], h: f64) -> Result<Self> {
        let k = FbmCovariance::new(h)?;
        if points.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::domain("negative time"));
        }
        Ok(Self {
            points: points.to_vec(),
            mean: DVector::zeros(points.len()),
            cov: k.matrix(points),
        })
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }
}

/// Cholesky factor of the non-degenerate block of a covariance matrix.
///
/// Coordinates with zero variance (such as `B(0)`) are held fixed at their
/// mean and never enter a factorization.
#[derive(Debug, Clone)]
pub struct Factor {
    pub active: Vec<usize>,
    pub chol: Cholesky<f64, Dyn>,
    pub jitter: f64,
}

impl Factor {
    /// Solves `Σ_AA x = b` on the active block.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn lower(&self) -> DMatrix<f64> {
        self.chol.l()
    }
}

fn degenerate_cutoff(cov: &DMatrix<f64>) -> f64 {
    let maxd = cov.diagonal().iter().fold(0.0f64, |a, &b| a.max(b));
    1e-14 * maxd
}

/// Factorizes `cov` with jitter repair: `1e-12·trace` added to the diagonal
/// and doubled at most three times before giving up.
pub fn factorize(cov: &DMatrix<f64>) -> Result<Factor> {
    let cut = degenerate_cutoff(cov);
    let active: Vec<usize> = (0..cov.nrows()).filter(|&i| cov[(i, i)] > cut).collect();
    let sub = cov.select_rows(&active).select_columns(&active);
    if let Some(chol) = Cholesky::new(sub.clone()) {
        return Ok(Factor {
            active,
            chol,
            jitter: 0.0,
        });
    }
    let mut jitter = 1e-12 * sub.trace();
    for _ in 0..4 {
        let mut m = sub.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(m) {
            return Ok(Factor { active, chol, jitter });
        }
        jitter *= 2.0;
    }
    Err(Error::IllConditioned {
        dim: sub.nrows(),
        jitter: jitter / 2.0,
    })
}

/// One draw from `N(mean, cov)`.
pub fn sample_mvn(g: &GridGaussian, rng: &mut RngStream) -> Result<Vec<f64>> {
    let f = factorize(&g.cov)?;
    Ok(sample_with(g, &f, rng))
}

pub(crate) fn sample_with(g: &GridGaussian, f: &Factor, rng: &mut RngStream) -> Vec<f64> {
    let mut z = DVector::zeros(f.active.len());
    rng.fill_normal(z.as_mut_slice());
    let l = f.chol.l_dirty();
    let mut out: Vec<f64> = g.mean.iter().copied().collect();
    for (r, &i) in f.active.iter().enumerate() {
        let mut acc = 0.0;
        for c in 0..=r {
            acc += l[(r, c)] * z[c];
        }
        out[i] += acc;
    }
    out
}

/// Law of the unobserved coordinates of `joint` given the observed ones.
pub fn conditional_gaussian(joint: &GridGaussian, observed: &[usize], values: &[f64]) -> Result<GridGaussian> {
    let n = joint.dim();
    if observed.len() != values.len() {
        return Err(Error::domain("observed indices and values differ in length"));
    }
    let mut seen = vec![false; n];
    for &i in observed {
        if i >= n || seen[i] {
            return Err(Error::domain(format!("bad observed index {i}")));
        }
        seen[i] = true;
    }
    if observed.is_empty() {
        return Ok(joint.clone());
    }
    let free: Vec<usize> = (0..n).filter(|&i| !seen[i]).collect();
    let cut = degenerate_cutoff(&joint.cov);
    let (obs, vals): (Vec<usize>, Vec<f64>) = observed
        .iter()
        .zip(values)
        .filter(|(&i, _)| joint.cov[(i, i)] > cut)
        .map(|(&i, &v)| (i, v))
        .unzip();

    let points: Vec<f64> = free.iter().map(|&i| joint.points[i]).collect();
    let mut mean = DVector::from_iterator(free.len(), free.iter().map(|&i| joint.mean[i]));
    let mut cov = joint.cov.select_rows(&free).select_columns(&free);
    if obs.is_empty() {
        return Ok(GridGaussian { points, mean, cov });
    }
    let s22 = joint.cov.select_rows(&obs).select_columns(&obs);
    let f = factorize(&s22)?;
    if f.active.len() != obs.len() {
        return Err(Error::IllConditioned {
            dim: obs.len(),
            jitter: f.jitter,
        });
    }
    let s12 = joint.cov.select_rows(&free).select_columns(&obs);
    let resid = DVector::from_iterator(obs.len(), obs.iter().zip(&vals).map(|(&i, &v)| v - joint.mean[i]));
    mean += &s12 * f.solve(&resid);
    // K = Σ22⁻¹ Σ21
    let k = f.chol.solve(&s12.transpose());
    cov -= &s12 * k;
    let m = cov.nrows();
    for i in 0..m {
        for j in 0..i {
            let a = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            cov[(i, j)] = a;
            cov[(j, i)] = a;
        }
    }
    Ok(GridGaussian { points, mean, cov })
}
