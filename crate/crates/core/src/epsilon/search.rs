//! Sequential search for the last record-breaker.

use serde::{Deserialize, Serialize};

use super::bce::{bce_check_with, Conditioner};
use super::ecm::ecm;
use super::measure::{starting_level, LevelProposal};
use super::{is_record_broken, DyadicPath, RecordParams};
use crate::gaussian::{sample_dyadic, Bridge};
use crate::rng::RngStream;
use crate::Result;

/// Record-breaker levels found by the search.
///
/// `last_breaker` is the last-breaker level `N` (the starting level when no
/// breaker was found past it); `level` is the level the path was simulated
/// to, which can exceed `N` when refinements were needed for the BCE check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakerLedger {
    pub starting_level: u32,
    pub breaker_levels: Vec<u32>,
    pub last_breaker: Option<u32>,
    pub level: u32,
    pub finalized: bool,
    /// Refinements made while waiting for the BCE condition.
    pub bce_refinements: u32,
}

impl BreakerLedger {
    pub fn new(starting_level: u32) -> Self {
        Self {
            starting_level,
            breaker_levels: Vec::new(),
            last_breaker: None,
            level: starting_level,
            finalized: false,
            bce_refinements: 0,
        }
    }

    fn record(&mut self, k: u32) {
        if self.breaker_levels.last().is_none_or(|&l| k > l) {
            self.breaker_levels.push(k);
        }
        self.last_breaker = Some(k);
    }

    /// `N`: the last breaker found, or the starting level if none.
    pub fn n(&self) -> u32 {
        self.breaker_levels
            .last()
            .copied()
            .unwrap_or(0)
            .max(self.starting_level)
    }
}

#[derive(Debug, Clone)]
pub struct SnrbOutcome {
    pub found: bool,
    pub path: DyadicPath,
    pub refinements: u32,
}

/// Adds level `n+1` under the nominal conditional law.
pub fn refine_one_level(path: &DyadicPath, rng: &mut RngStream) -> Result<DyadicPath> {
    let size = path.len() - 1;
    let fine = 2 * size;
    let new_t: Vec<f64> = (0..size).map(|j| (2 * j + 1) as f64 / fine as f64).collect();
    let mid = Bridge::new(&path.times(), &path.values, &new_t, path.hurst)?.sample(rng);
    let mut v = Vec::with_capacity(fine + 1);
    for j in 0..size {
        v.push(path.values[j]);
        v.push(mid[j]);
    }
    v.push(path.values[size]);
    DyadicPath::new(path.hurst, path.level + 1, v)
}

/// Simulates the next record-breaker, or reports that there is none.
pub fn snrb(path: &DyadicPath, p: &RecordParams, rng: &mut RngStream) -> Result<SnrbOutcome> {
    let mut cur = path.clone();
    let mut refinements = 0;
    let cond = loop {
        let cond = Conditioner::new(&cur)?;
        if bce_check_with(&cond, cur.level, p)?.passed {
            break cond;
        }
        cur = refine_one_level(&cur, rng)?;
        refinements += 1;
        if is_record_broken(&cur, cur.level, p)? {
            return Ok(SnrbOutcome {
                found: true,
                path: cur,
                refinements,
            });
        }
    };
    let g = LevelProposal::new(cur.level, p);
    let m = g.sample(rng);
    let out = ecm(&cur, &cond, &g, m, p, rng)?;
    Ok(match out.path {
        Some(next) => SnrbOutcome {
            found: true,
            path: next,
            refinements,
        },
        None => SnrbOutcome {
            found: false,
            path: cur,
            refinements,
        },
    })
}

/// Seeds an exact sample at the starting level and iterates [`snrb`].
pub fn slrb(p: &RecordParams, rng: &mut RngStream) -> Result<(BreakerLedger, DyadicPath)> {
    let n0 = starting_level(p);
    let mut ledger = BreakerLedger::new(n0);
    let mut path = DyadicPath::new(p.hurst, n0, sample_dyadic(n0, p.hurst, rng)?)?;
    loop {
        let out = snrb(&path, p, rng)?;
        ledger.bce_refinements += out.refinements;
        path = out.path;
        if !out.found {
            break;
        }
        ledger.record(path.level);
    }
    ledger.level = path.level;
    ledger.finalized = true;
    Ok((ledger, path))
}
