//! ε-strong paths: last-breaker search followed by refinement to the
//! truncation level.

use serde::{Deserialize, Serialize};

use super::bounds::{fbm_holder_certificate, truncation_level, uniform_error_bound};
use super::measure::k_of_nu;
use super::search::slrb;
use super::{BreakerLedger, DyadicPath, RecordParams};
use crate::gaussian::{Bridge, MAX_CIRCULANT_LEVEL};
use crate::rng::{RngStream, StreamId};
use crate::{Error, Result};

pub const RETRY_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderCertificate {
    pub alpha: f64,
    pub bound: f64,
}

/// What a finished path guarantees: `‖B − B_{N_eps}‖_∞ ≤ sup_bound ≤ eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonCertificate {
    pub eps: f64,
    /// Last-breaker level `N`.
    pub last_breaker: u32,
    pub starting_level: u32,
    /// Level reached by the search, before refinement.
    pub search_level: u32,
    pub n_eps: u32,
    pub sup_bound: f64,
    pub holder: Option<HolderCertificate>,
    pub k_nu: u32,
    pub params: RecordParams,
    pub stream: StreamId,
    pub refinement_retries: u64,
}

/// Refines `path` to level `to`, rejecting any block with a record-breaker at
/// levels `path.level+1..=to`. Returns the new path and the number of rejections.
pub fn refine_block(path: &DyadicPath, to: u32, p: &RecordParams, rng: &mut RngStream) -> Result<(DyadicPath, u64)> {
    if to <= path.level {
        return Ok((path.clone(), 0));
    }
    if to > MAX_CIRCULANT_LEVEL {
        return Err(Error::domain(format!(
            "refinement to level {to} is out of reach (limit {MAX_CIRCULANT_LEVEL})"
        )));
    }
    let size = 1usize << to;
    let stride = 1usize << (to - path.level);
    let new_idx: Vec<usize> = (0..=size).filter(|i| i % stride != 0).collect();
    let new_t: Vec<f64> = new_idx.iter().map(|&i| i as f64 / size as f64).collect();
    let bridge = Bridge::new(&path.times(), &path.values, &new_t, path.hurst)?;
    let mut values = vec![0.0; size + 1];
    for (i, v) in path.values.iter().enumerate() {
        values[i * stride] = *v;
    }
    let mut fine = DyadicPath {
        hurst: path.hurst,
        level: to,
        values,
    };
    for retries in 0..RETRY_CAP {
        for (&i, v) in new_idx.iter().zip(bridge.sample(rng)) {
            fine.values[i] = v;
        }
        let mut clean = true;
        for k in path.level + 1..=to {
            if fine.breakers_at(k, p)? > 0 {
                clean = false;
                break;
            }
        }
        if clean {
            return Ok((fine, retries));
        }
    }
    Err(Error::RetryCap(RETRY_CAP))
}

/// Simulates a path within `eps` of fBM in sup norm, path by path.
pub fn sfbm(eps: f64, p: &RecordParams, rng: &mut RngStream) -> Result<(DyadicPath, EpsilonCertificate)> {
    p.validate()?;
    if !(eps > 0.0) {
        return Err(Error::domain(format!("eps {eps} must be positive")));
    }
    let (ledger, path) = slrb(p, rng)?;
    finish(eps, &ledger, path, p, rng)
}

/// Refines a finished search to the truncation level for `eps`.
pub fn finish(
    eps: f64,
    ledger: &BreakerLedger,
    path: DyadicPath,
    p: &RecordParams,
    rng: &mut RngStream,
) -> Result<(DyadicPath, EpsilonCertificate)> {
    let n_eps = truncation_level(eps, ledger.n(), p)?.max(path.level);
    let (fine, retries) = refine_block(&path, n_eps, p, rng)?;
    let cert = EpsilonCertificate {
        eps,
        last_breaker: ledger.n(),
        starting_level: ledger.starting_level,
        search_level: ledger.level,
        n_eps,
        sup_bound: uniform_error_bound(n_eps, p),
        holder: None,
        k_nu: k_of_nu(p.nu, p.delta)?,
        params: *p,
        stream: rng.id(),
        refinement_retries: retries,
    };
    Ok((fine, cert))
}

/// Extends the same realization so that its bound drops to `eps_new`.
pub fn refine_tolerance(
    path: &DyadicPath,
    cert: &EpsilonCertificate,
    eps_new: f64,
    rng: &mut RngStream,
) -> Result<(DyadicPath, EpsilonCertificate)> {
    let p = cert.params;
    let n_new = truncation_level(eps_new, cert.last_breaker, &p)?.max(cert.n_eps);
    if n_new == cert.n_eps {
        let mut c = cert.clone();
        c.eps = eps_new;
        return Ok((path.clone(), c));
    }
    let (fine, retries) = refine_block(path, n_new, &p, rng)?;
    let mut c = cert.clone();
    c.eps = eps_new;
    c.n_eps = n_new;
    c.sup_bound = uniform_error_bound(n_new, &p);
    c.refinement_retries += retries;
    Ok((fine, c))
}

/// Attaches an α-Hölder bound computed from the path restricted to `N`.
pub fn with_holder(
    path: &DyadicPath,
    ledger: &BreakerLedger,
    mut cert: EpsilonCertificate,
    alpha: f64,
) -> Result<EpsilonCertificate> {
    let bound = fbm_holder_certificate(path, ledger, alpha, &cert.params)?;
    cert.holder = Some(HolderCertificate { alpha, bound });
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certificate_meets_tolerance() {
        let p = RecordParams::new(0.8, 0.1, 5.0).unwrap();
        for s in 0..20 {
            let mut rng = RngStream::new(s, 1);
            let (path, cert) = sfbm(0.1, &p, &mut rng).unwrap();
            assert!(cert.sup_bound <= 0.1);
            assert_eq!(path.level, cert.n_eps);
            if cert.last_breaker <= 11 && cert.search_level <= 11 {
                assert_eq!(cert.n_eps, 11);
            }
        }
    }

    #[test]
    fn tolerance_chain_keeps_coarse_values() {
        let p = RecordParams::new(0.8, 0.1, 5.0).unwrap();
        let mut rng = RngStream::new(3, 0);
        let (a, ca) = sfbm(0.1, &p, &mut rng).unwrap();
        let (same, cs) = refine_tolerance(&a, &ca, ca.eps, &mut rng).unwrap();
        assert_eq!(same, a);
        assert_eq!(cs.n_eps, ca.n_eps);
        let (b, cb) = refine_tolerance(&a, &ca, 0.01, &mut rng).unwrap();
        assert_eq!(b.restrict(a.level).unwrap(), a);
        assert!(cb.sup_bound <= 0.01);
        if cb.last_breaker <= 15 {
            assert_eq!(cb.n_eps, 15);
        }
    }

    #[test]
    fn unreachable_level_is_an_error() {
        let p = RecordParams::new(0.45, 0.2, 5.0).unwrap();
        let e = sfbm(0.1, &p, &mut RngStream::new(0, 0)).unwrap_err();
        assert!(matches!(e, Error::Domain(_)), "{e:?}");
    }

    #[test]
    fn rejects_bad_eps() {
        let p = RecordParams::new(0.8, 0.1, 5.0).unwrap();
        assert!(sfbm(0.0, &p, &mut RngStream::new(0, 0)).is_err());
    }
}
