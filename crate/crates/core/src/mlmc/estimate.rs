//! The MLMC estimator with deterministic, chunked replication streams.

use serde::{Deserialize, Serialize};

use super::functional::FunctionalSpec;
use super::plan::MlmcPlan;
use crate::epsilon::{refine_block, slrb, DyadicPath, RecordParams};
use crate::gaussian::DyadicSampler;
use crate::rng::RngStream;
use crate::Result;

/// Replications per independent stream; results do not depend on `jobs`.
const CHUNK: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMode {
    /// Exact draws on `D_k` directly.
    Nominal,
    /// Each replication runs the record-breaker search and refines with the
    /// no-breaker rule, so every path carries a certificate.
    Certified,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: u32,
    pub reps: u64,
    pub mean: f64,
    pub variance: f64,
    /// Grid points simulated for the level differences.
    pub cost: u64,
    /// Grid points spent in record-breaker searches (certified mode).
    pub search_cost: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlmcEstimate {
    pub value: f64,
    pub std_error: f64,
    pub levels: Vec<LevelStats>,
    pub total_cost: u64,
    pub search_cost: u64,
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
    cost: u64,
    search: u64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, o: &Moments) {
        if o.n == 0 {
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * self.n as f64 * o.n as f64 / n as f64;
        self.n = n;
        self.cost += o.cost;
        self.search += o.search;
    }
}

fn coarsen(path: &DyadicPath) -> DyadicPath {
    DyadicPath {
        hurst: path.hurst,
        level: path.level - 1,
        values: path.values.iter().step_by(2).copied().collect(),
    }
}

/// One draw of `D_k`, with the grid points used for the paths and for searches.
pub fn level_difference(
    spec: &FunctionalSpec,
    k: u32,
    p: &RecordParams,
    mode: SamplerMode,
    rng: &mut RngStream,
) -> Result<(f64, u64)> {
    let mut samplers = (0..spec.noise_dim())
        .map(|_| DyadicSampler::new(k, p.hurst))
        .collect::<Result<Vec<_>>>()?;
    let (d, _, search) = draw(spec, k, p, mode, &mut samplers, rng)?;
    Ok((d, search))
}

fn draw(
    spec: &FunctionalSpec,
    k: u32,
    p: &RecordParams,
    mode: SamplerMode,
    samplers: &mut [DyadicSampler],
    rng: &mut RngStream,
) -> Result<(f64, u64, u64)> {
    let mut drivers = Vec::with_capacity(samplers.len());
    let mut search = 0u64;
    for s in samplers.iter_mut() {
        let path = match mode {
            SamplerMode::Nominal => DyadicPath {
                hurst: p.hurst,
                level: k,
                values: s.sample(rng),
            },
            SamplerMode::Certified => {
                let (_, found) = slrb(p, rng)?;
                search += 1 << found.level;
                if found.level >= k {
                    found.restrict(k)?
                } else {
                    refine_block(&found, k, p, rng)?.0
                }
            }
        };
        drivers.push(path);
    }
    let fine = spec.eval(&drivers)?;
    let d = if k == 0 {
        fine
    } else {
        let coarse: Vec<DyadicPath> = drivers.iter().map(coarsen).collect();
        fine - spec.eval(&coarse)?
    };
    Ok((d, drivers.len() as u64 * (1 << k), search))
}

fn run_chunk(
    spec: &FunctionalSpec,
    k: u32,
    reps: u64,
    p: &RecordParams,
    mode: SamplerMode,
    mut rng: RngStream,
) -> Result<Moments> {
    let mut samplers = (0..spec.noise_dim())
        .map(|_| DyadicSampler::new(k, p.hurst))
        .collect::<Result<Vec<_>>>()?;
    let mut m = Moments::default();
    for _ in 0..reps {
        let (d, cost, search) = draw(spec, k, p, mode, &mut samplers, &mut rng)?;
        m.push(d);
        m.cost += cost;
        m.search += search;
    }
    Ok(m)
}

/// `α̂_K = Σ_k (1/r_k) Σ_i D_k(i)`. Level `k`, chunk `c` draws from
/// `rng.substream(k).substream(c)`, so `jobs` only changes wall time.
pub fn estimate(
    plan: &MlmcPlan,
    spec: &FunctionalSpec,
    p: &RecordParams,
    mode: SamplerMode,
    jobs: usize,
    rng: &RngStream,
) -> Result<MlmcEstimate> {
    spec.validate(p)?;
    let mut tasks = Vec::new();
    for (k, &r) in plan.reps.iter().enumerate() {
        let mut c = 0;
        while c * CHUNK < r {
            tasks.push((k as u32, c, CHUNK.min(r - c * CHUNK)));
            c += 1;
        }
    }
    let run = |&(k, c, n): &(u32, u64, u64)| run_chunk(spec, k, n, p, mode, rng.substream(k as u64).substream(c));
    let results: Vec<Result<Moments>> = if jobs <= 1 {
        tasks.iter().map(run).collect()
    } else {
        let mut out: Vec<Option<Result<Moments>>> = (0..tasks.len()).map(|_| None).collect();
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..jobs)
                .map(|j| {
                    let tasks = &tasks;
                    let run = &run;
                    s.spawn(move || {
                        (j..tasks.len())
                            .step_by(jobs)
                            .map(|i| (i, run(&tasks[i])))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                for (i, r) in h.join().expect("worker panicked") {
                    out[i] = Some(r);
                }
            }
        });
        out.into_iter().map(|r| r.unwrap()).collect()
    };

    let mut per_level = vec![Moments::default(); plan.reps.len()];
    for ((k, _, _), m) in tasks.iter().zip(results) {
        per_level[*k as usize].merge(&m?);
    }
    let mut value = 0.0;
    let mut var = 0.0;
    let mut levels = Vec::with_capacity(per_level.len());
    for (k, m) in per_level.iter().enumerate() {
        let v = if m.n > 1 { m.m2 / (m.n - 1) as f64 } else { 0.0 };
        value += m.mean;
        var += v / m.n as f64;
        levels.push(LevelStats {
            level: k as u32,
            reps: m.n,
            mean: m.mean,
            variance: v,
            cost: m.cost,
            search_cost: m.search,
        });
    }
    Ok(MlmcEstimate {
        value,
        std_error: var.sqrt(),
        total_cost: levels.iter().map(|l| l.cost).sum(),
        search_cost: levels.iter().map(|l| l.search_cost).sum(),
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlmc::{allocate, PathFunctional};

    fn path(g: PathFunctional) -> FunctionalSpec {
        FunctionalSpec::Path { g }
    }

    #[test]
    fn endpoint_differences_vanish() {
        let p = RecordParams::new(0.8, 0.1, 5.0).unwrap();
        let mut rng = RngStream::new(1, 0);
        for k in 1..6 {
            let (d, _) =
                level_difference(&path(PathFunctional::Endpoint), k, &p, SamplerMode::Nominal, &mut rng).unwrap();
            assert_eq!(d, 0.0);
        }
    }

    #[test]
    fn second_moment_of_endpoint() {
        let p = RecordParams::new(0.8, 0.1, 5.0).unwrap();
        let spec = path(PathFunctional::EndpointSquared);
        let plan = allocate(0.1, &spec, &p).unwrap();
        let e = estimate(&plan, &spec, &p, SamplerMode::Nominal, 1, &RngStream::new(3, 0)).unwrap();
        assert!((e.value - 1.0).abs() < 3.0 * e.std_error, "{e:?}");
        let e = estimate(
            &plan,
            &path(PathFunctional::Endpoint),
            &p,
            SamplerMode::Nominal,
            1,
            &RngStream::new(4, 0),
        )
        .unwrap();
        assert!(e.value.abs() < 3.0 * e.std_error);
    }

    #[test]
    fn jobs_do_not_change_the_result() {
        let p = RecordParams::new(0.8, 0.1, 5.0).unwrap();
        let spec = path(PathFunctional::SupNorm);
        let plan = allocate(0.3, &spec, &p).unwrap();
        let rng = RngStream::new(5, 0);
        let a = estimate(&plan, &spec, &p, SamplerMode::Nominal, 1, &rng).unwrap();
        let b = estimate(&plan, &spec, &p, SamplerMode::Nominal, 3, &rng).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn coupling_is_tight() {
        let mut rng = RngStream::new(6, 0);
        for k in 1..=8 {
            let mut s = DyadicSampler::new(k, 0.8).unwrap();
            for _ in 0..200 {
                let v = s.sample(&mut rng);
                let fine = DyadicPath {
                    hurst: 0.8,
                    level: k,
                    values: v,
                };
                let dev = fine.midpoint_deviation(k).unwrap();
                for g in [PathFunctional::SupNorm, PathFunctional::TimeAverage] {
                    let d = g.eval(&fine.values) - g.eval(&coarsen(&fine).values);
                    assert!(d.abs() <= dev + 1e-12);
                }
            }
        }
    }

    #[test]
    fn certified_mode_agrees_in_law() {
        let p = RecordParams::new(0.8, 0.1, 5.0).unwrap();
        let spec = path(PathFunctional::SupNorm);
        let n = 3000;
        let moments = |mode, seed| {
            let mut r = RngStream::new(seed, 0);
            let mut s = vec![DyadicSampler::new(3, 0.8).unwrap()];
            let xs: Vec<f64> = (0..n)
                .map(|_| draw(&spec, 3, &p, mode, &mut s, &mut r).unwrap().0)
                .collect();
            let m = xs.iter().sum::<f64>() / n as f64;
            let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            (m, v / n as f64)
        };
        let (a, va) = moments(SamplerMode::Nominal, 7);
        let (b, vb) = moments(SamplerMode::Certified, 8);
        assert!((a - b).abs() < 4.0 * (va + vb).sqrt(), "{a} vs {b}");
    }
}
