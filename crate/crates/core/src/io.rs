//! CSV output and versioned JSON manifests that can be re-checked later.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::epsilon::{truncation_level, uniform_error_bound, EpsilonCertificate, RecordParams};
use crate::mlmc::{allocate, FunctionalSpec, MlmcEstimate, MlmcPlan, SamplerMode};
use crate::sde::{euler_constants, euler_level, EulerConstants, VectorFieldSpec};
use crate::{Error, Result};

pub const SCHEMA: &str = "epsfbm/1";

/// Header plus rows, every number with 17 significant digits.
pub fn write_csv<W: Write>(mut w: W, header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    writeln!(w, "{}", header.join(","))?;
    let mut line = String::new();
    for row in rows {
        line.clear();
        for (i, x) in row.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&format!("{x:.16e}"));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .unwrap_or_default()
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|x| {
                    x.parse::<f64>()
                        .map_err(|e| Error::domain(format!("bad number {x:?}: {e}")))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FbmRecord {
    pub certificate: EpsilonCertificate,
    pub path_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdeRecord {
    pub eps: f64,
    pub alpha: f64,
    pub y0: Vec<f64>,
    pub field: VectorFieldSpec,
    pub params: RecordParams,
    pub level: u32,
    pub n_y: u32,
    pub guarantee: f64,
    pub g: f64,
    pub constants: EulerConstants,
    pub drivers: Vec<EpsilonCertificate>,
    pub path_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlmcRecord {
    pub functional: FunctionalSpec,
    pub params: RecordParams,
    pub mode: SamplerMode,
    pub plan: MlmcPlan,
    pub estimate: MlmcEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Body {
    Fbm(FbmRecord),
    Sde(SdeRecord),
    Mlmc(MlmcRecord),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub seed: u64,
    #[serde(flatten)]
    pub body: Body,
}

fn close(what: &str, stored: f64, fresh: f64) -> Result<()> {
    if (stored - fresh).abs() <= 1e-12 * fresh.abs().max(1.0) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{what}: stored {stored:e}, recomputed {fresh:e}"
        )))
    }
}

fn check_certificate(c: &EpsilonCertificate) -> Result<()> {
    c.params.validate()?;
    close("sup_bound", c.sup_bound, uniform_error_bound(c.n_eps, &c.params))?;
    if c.n_eps < c.last_breaker || c.sup_bound > c.eps * (1.0 + 1e-12) {
        return Err(Error::domain("certificate level does not meet its tolerance"));
    }
    Ok(())
}

impl Manifest {
    pub fn new(seed: u64, body: Body) -> Self {
        Self {
            schema: SCHEMA.into(),
            seed,
            body,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        if m.schema != SCHEMA {
            return Err(Error::domain(format!("unknown schema {:?}", m.schema)));
        }
        Ok(m)
    }

    /// Recomputes every bound from the stored parameters.
    pub fn revalidate(&self) -> Result<()> {
        match &self.body {
            Body::Fbm(r) => {
                let c = &r.certificate;
                check_certificate(c)?;
                if c.n_eps < truncation_level(c.eps, c.last_breaker, &c.params)? {
                    return Err(Error::domain("certificate level below the truncation level"));
                }
                Ok(())
            }
            Body::Sde(r) => {
                let c = &r.constants;
                let fresh = euler_constants(&r.field.bounds, r.field.dim, r.field.h(), c.c_alpha, r.alpha)?;
                close("G", r.g, fresh.g)?;
                close("constants.G", c.g, fresh.g)?;
                if r.n_y != euler_level(fresh.g, r.eps, r.alpha)? || r.level < r.n_y {
                    return Err(Error::domain("Euler level inconsistent with G"));
                }
                close(
                    "guarantee",
                    r.guarantee,
                    fresh.g * (-(r.level as f64) * (2.0 * r.alpha - 1.0)).exp2(),
                )?;
                for d in &r.drivers {
                    check_certificate(d)?;
                    let h = d.holder.ok_or_else(|| Error::domain("driver lacks a Hölder bound"))?;
                    if h.bound > c.c_alpha {
                        return Err(Error::domain("driver Hölder bound exceeds C_alpha"));
                    }
                }
                Ok(())
            }
            Body::Mlmc(r) => {
                let fresh = allocate(r.plan.eps, &r.functional, &r.params)?;
                if fresh.top != r.plan.top || fresh.reps != r.plan.reps {
                    return Err(Error::domain("MLMC plan does not match its parameters"));
                }
                close("bias_bound", r.plan.bias_bound, fresh.bias_bound)?;
                close("c2", r.plan.c2, fresh.c2)
            }
        }
    }
}
