use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use epsfbm::bench::{bench_refinement, loglog_slope, BenchMode};
use epsfbm::epsilon::{finish, sfbm, slrb, with_holder, RecordParams};
use epsfbm::io::{write_csv, Body, FbmRecord, Manifest, MlmcRecord, SdeRecord};
use epsfbm::mlmc::{allocate, estimate, FunctionalSpec, PathFunctional, SamplerMode};
use epsfbm::rng::RngStream;
use epsfbm::sde::{ssde, VectorFieldSpec};
use epsfbm::tune::tune_cell;

#[derive(Parser)]
#[command(
    name = "epsfbm",
    version,
    about = "ε-strong simulation of fractional Brownian motion"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Record {
    #[arg(long)]
    hurst: f64,
    #[arg(long, default_value_t = 5.0)]
    rho: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Overrides --rho together with --nustar: ρ = 2(ν + ν*)
    #[arg(long, requires = "nustar")]
    nu: Option<f64>,
    #[arg(long, requires = "nu")]
    nustar: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Record {
    fn params(&self) -> Result<RecordParams, Fail> {
        Ok(match (self.nu, self.nustar) {
            (Some(nu), Some(ns)) => RecordParams::with_nu(self.hurst, self.delta, nu, ns)?,
            _ => RecordParams::new(self.hurst, self.delta, self.rho)?,
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate one fBM path within --eps in sup norm.
    Fbm {
        #[command(flatten)]
        rec: Record,
        #[arg(long)]
        eps: f64,
        /// Also certify an α-Hölder bound (needs H > 1/2).
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value = "epsfbm-out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Solve an fBM-driven SDE within --eps.
    Sde {
        #[command(flatten)]
        rec: Record,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        alpha: f64,
        /// Field specification (JSON).
        #[arg(long)]
        field: PathBuf,
        /// Initial state, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        y0: Vec<f64>,
        #[arg(long, default_value = "epsfbm-out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Multilevel Monte Carlo estimate of E[g(B)].
    Mlmc {
        #[command(flatten)]
        rec: Record,
        #[arg(long)]
        eps: f64,
        /// sup_norm, time_average, endpoint, endpoint_squared, or a JSON file.
        #[arg(long)]
        functional: String,
        /// Run the record-breaker search for every replication.
        #[arg(long)]
        certified: bool,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Report file; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// N(ε), N*(ρ,δ) and the mean last-breaker level over a (ρ,δ) grid.
    Tune {
        #[arg(long)]
        hurst: f64,
        #[arg(long)]
        eps: f64,
        /// ρ values x δ values, e.g. 1,2.5,5x0.1,0.2
        #[arg(long, default_value = "1,2.5,5x0.1,0.2")]
        grid: String,
        #[arg(long, default_value_t = 100)]
        reps: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time refinement to each level and fit the log-log slope.
    Bench {
        #[arg(long)]
        hurst: f64,
        /// Inclusive range, e.g. 10-18
        #[arg(long, default_value = "10-18")]
        levels: String,
        #[arg(long, value_enum, default_value = "bridge")]
        mode: ModeArg,
        #[arg(long, default_value_t = 5)]
        reps: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Bridge,
    Dense,
}

enum Fail {
    Usage(String),
    Numerical(String),
}

impl From<epsfbm::Error> for Fail {
    fn from(e: epsfbm::Error) -> Self {
        if e.is_usage() {
            Fail::Usage(e.to_string())
        } else {
            Fail::Numerical(e.to_string())
        }
    }
}

fn write_file(path: &Path, content: &[u8]) -> Result<(), Fail> {
    fs::write(path, content).map_err(|e| Fail::Numerical(format!("writing {}: {e}", path.display())))
}

fn out_dir(out: &Path) -> Result<(), Fail> {
    fs::create_dir_all(out).map_err(|e| Fail::Usage(format!("creating {}: {e}", out.display())))
}

fn emit_path(out: &Path, format: Format, header: Vec<String>, rows: Vec<Vec<f64>>) -> Result<String, Fail> {
    let name = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&mut buf, &header, rows)?;
            write_file(&out.join("path.csv"), &buf)?;
            "path.csv"
        }
        Format::Json => {
            let cols: serde_json::Map<String, serde_json::Value> = header
                .iter()
                .enumerate()
                .map(|(j, h)| (h.clone(), rows.iter().map(|r| r[j]).collect::<Vec<f64>>().into()))
                .collect();
            write_file(&out.join("path.json"), serde_json::to_string(&cols).unwrap().as_bytes())?;
            "path.json"
        }
    };
    Ok(name.to_string())
}

fn write_manifest(out: &Path, m: &Manifest) -> Result<(), Fail> {
    m.revalidate()?;
    write_file(&out.join("manifest.json"), m.to_json()?.as_bytes())
}

fn functional(arg: &str) -> Result<FunctionalSpec, Fail> {
    let g = match arg {
        "sup_norm" => PathFunctional::SupNorm,
        "time_average" => PathFunctional::TimeAverage,
        "endpoint" => PathFunctional::Endpoint,
        "endpoint_squared" => PathFunctional::EndpointSquared,
        file => {
            let s = fs::read_to_string(file).map_err(|e| Fail::Usage(format!("reading {file}: {e}")))?;
            return serde_json::from_str(&s).map_err(|e| Fail::Usage(format!("{file}: {e}")));
        }
    };
    Ok(FunctionalSpec::Path { g })
}

fn parse_list(s: &str) -> Result<Vec<f64>, Fail> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Fail::Usage(format!("bad number {x:?} in grid")))
        })
        .collect()
}

fn run(cli: Cli) -> Result<(), Fail> {
    match cli.cmd {
        Cmd::Fbm {
            rec,
            eps,
            alpha,
            out,
            format,
        } => {
            let p = rec.params()?;
            if let Some(a) = alpha {
                epsfbm::epsilon::holder_error_bound(1, a, &p)?;
            }
            if !(eps > 0.0) {
                return Err(Fail::Usage(format!("--eps {eps} must be positive")));
            }
            let mut rng = RngStream::new(rec.seed, 0);
            let (path, cert) = match alpha {
                None => sfbm(eps, &p, &mut rng)?,
                Some(a) => {
                    let (ledger, found) = slrb(&p, &mut rng)?;
                    let (path, cert) = finish(eps, &ledger, found, &p, &mut rng)?;
                    let cert = with_holder(&path, &ledger, cert, a)?;
                    (path, cert)
                }
            };
            out_dir(&out)?;
            let rows = path
                .times()
                .into_iter()
                .zip(path.values.iter().copied())
                .map(|(t, v)| vec![t, v])
                .collect();
            let file = emit_path(&out, format, vec!["time".into(), "value".into()], rows)?;
            println!(
                "N={} N_eps={} sup_bound={:e}",
                cert.last_breaker, cert.n_eps, cert.sup_bound
            );
            write_manifest(
                &out,
                &Manifest::new(
                    rec.seed,
                    Body::Fbm(FbmRecord {
                        certificate: cert,
                        path_file: Some(file),
                    }),
                ),
            )
        }
        Cmd::Sde {
            rec,
            eps,
            alpha,
            field,
            y0,
            out,
            format,
        } => {
            let p = rec.params()?;
            let text =
                fs::read_to_string(&field).map_err(|e| Fail::Usage(format!("reading {}: {e}", field.display())))?;
            let spec = VectorFieldSpec::from_json(&text)?;
            spec.spot_check(1000, &mut RngStream::new(rec.seed, 1))?;
            let mut rng = RngStream::new(rec.seed, 0);
            let (res, _) = ssde(eps, &spec, &y0, &p, alpha, &mut rng)?;
            out_dir(&out)?;
            let mut header = vec!["time".to_string()];
            header.extend((1..=spec.dim).map(|i| format!("y{i}")));
            let rows = res
                .times()
                .into_iter()
                .zip(&res.states)
                .map(|(t, y)| std::iter::once(t).chain(y.iter().copied()).collect())
                .collect();
            let file = emit_path(&out, format, header, rows)?;
            println!(
                "G={:e} N_Y={} level={} guarantee={:e}",
                res.constants.g, res.n_y, res.level, res.guarantee
            );
            let body = Body::Sde(SdeRecord {
                eps,
                alpha,
                y0,
                field: spec,
                params: p,
                level: res.level,
                n_y: res.n_y,
                guarantee: res.guarantee,
                g: res.constants.g,
                constants: res.constants,
                drivers: res.drivers,
                path_file: Some(file),
            });
            write_manifest(&out, &Manifest::new(rec.seed, body))
        }
        Cmd::Mlmc {
            rec,
            eps,
            functional: f,
            certified,
            jobs,
            out,
        } => {
            let p = rec.params()?;
            let spec = functional(&f)?;
            let plan = allocate(eps, &spec, &p)?;
            let mode = if certified {
                SamplerMode::Certified
            } else {
                SamplerMode::Nominal
            };
            let est = estimate(&plan, &spec, &p, mode, jobs.max(1), &RngStream::new(rec.seed, 0))?;
            let m = Manifest::new(
                rec.seed,
                Body::Mlmc(MlmcRecord {
                    functional: spec,
                    params: p,
                    mode,
                    plan,
                    estimate: est,
                }),
            );
            m.revalidate()?;
            let json = m.to_json()?;
            match out {
                Some(path) => {
                    write_file(&path, json.as_bytes())?;
                    if let Body::Mlmc(r) = &m.body {
                        println!(
                            "estimate={} se={} cost={}",
                            r.estimate.value, r.estimate.std_error, r.estimate.total_cost
                        );
                    }
                }
                None => println!("{json}"),
            }
            Ok(())
        }
        Cmd::Tune {
            hurst,
            eps,
            grid,
            reps,
            seed,
            jobs,
            format,
            out,
        } => {
            let (rhos, deltas) = grid
                .split_once('x')
                .ok_or_else(|| Fail::Usage("grid must look like 1,2.5,5x0.1,0.2".into()))?;
            let (rhos, deltas) = (parse_list(rhos)?, parse_list(deltas)?);
            let cells: Vec<(f64, f64)> = deltas.iter().flat_map(|&d| rhos.iter().map(move |&r| (r, d))).collect();
            for &(r, d) in &cells {
                RecordParams::new(hurst, d, r)?;
            }
            let root = RngStream::new(seed, 0);
            let run_cell = |i: usize| tune_cell(hurst, eps, cells[i].0, cells[i].1, reps, &root.substream(i as u64));
            let jobs = jobs.max(1);
            let mut results: Vec<Option<epsfbm::Result<_>>> = (0..cells.len()).map(|_| None).collect();
            std::thread::scope(|s| {
                let hs: Vec<_> = (0..jobs)
                    .map(|j| {
                        let run_cell = &run_cell;
                        let n = cells.len();
                        s.spawn(move || (j..n).step_by(jobs).map(|i| (i, run_cell(i))).collect::<Vec<_>>())
                    })
                    .collect();
                for h in hs {
                    for (i, r) in h.join().expect("worker panicked") {
                        results[i] = Some(r);
                    }
                }
            });
            let cells = results
                .into_iter()
                .map(|r| r.unwrap())
                .collect::<epsfbm::Result<Vec<_>>>()?;
            let text = match format {
                Format::Json => serde_json::to_string_pretty(&cells).unwrap(),
                Format::Csv => {
                    let mut s = String::from("rho,delta,n_eps,n_star,mean_n,method\n");
                    for c in &cells {
                        let method = serde_json::to_value(c.method).unwrap();
                        s += &format!(
                            "{},{},{},{},{},{}\n",
                            c.rho,
                            c.delta,
                            c.n_eps,
                            c.n_star,
                            c.mean_label(),
                            method.as_str().unwrap()
                        );
                    }
                    s
                }
            };
            match out {
                Some(path) => write_file(&path, text.as_bytes()),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Cmd::Bench {
            hurst,
            levels,
            mode,
            reps,
            seed,
            format,
        } => {
            let (a, b) = levels
                .split_once('-')
                .ok_or_else(|| Fail::Usage("levels must look like 10-18".into()))?;
            let parse = |x: &str| {
                x.trim()
                    .parse::<u32>()
                    .map_err(|_| Fail::Usage(format!("bad level {x:?}")))
            };
            let (a, b) = (parse(a)?, parse(b)?);
            if a > b || b > epsfbm::gaussian::MAX_CIRCULANT_LEVEL {
                return Err(Fail::Usage(format!("level range {a}-{b} is empty or too deep")));
            }
            let lv: Vec<u32> = (a..=b).collect();
            let mode = match mode {
                ModeArg::Bridge => BenchMode::Bridge,
                ModeArg::Dense => BenchMode::Dense,
            };
            let rows = bench_refinement(&lv, hurst, mode, reps, &mut RngStream::new(seed, 0))?;
            let pts: Vec<f64> = rows.iter().map(|r| r.points as f64).collect();
            let work: Vec<f64> = match mode {
                BenchMode::Bridge => pts.iter().map(|n| n * n.log2().max(1.0)).collect(),
                BenchMode::Dense => pts.clone(),
            };
            let secs: Vec<f64> = rows.iter().map(|r| r.seconds).collect();
            let slope = if rows.len() > 1 {
                loglog_slope(&work, &secs)
            } else {
                f64::NAN
            };
            match format {
                Format::Json => println!("{}", serde_json::json!({ "rows": rows, "slope": slope })),
                Format::Csv => {
                    println!("level,points,seconds");
                    for r in &rows {
                        println!("{},{},{:e}", r.level, r.points, r.seconds);
                    }
                    println!("# slope {slope:.3}");
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Fail::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(3)
        }
    }
}
