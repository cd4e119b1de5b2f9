//! Parameter sweeps over squeezing `r` or `C_Z` angle `φ`.
//!
//! Output is CSV with the fixed header [`CSV_HEADER`]. `residual` is the
//! largest entry of `S − S_target` for the program's extracted channel
//! (forced-zero outcomes); `nullifier_variance` is the largest BSL nullifier
//! variance at the point's `r`. Points are independent and run in parallel.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::compile::{compile_program, Program, ProgramStep, StepKind};
use crate::error::{Error, Result};
use crate::lattice::{build_bsl, LatticeSpec};
use crate::protocol::extract_logical_channel;
use crate::verify::nullifier_variances;

pub const CSV_HEADER: &str = "param,value,residual,nullifier_variance";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    R,
    Phi,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::R => "r",
            SweepParam::Phi => "phi",
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "r" => Ok(SweepParam::R),
            "phi" => Ok(SweepParam::Phi),
            _ => Err(Error::InvalidParameter(format!("sweep parameter must be r or phi, got {s:?}"))),
        }
    }
}

/// `start:stop:count` (inclusive, evenly spaced) or a comma list.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let bad = |what: &str| Error::InvalidParameter(format!("bad range {s:?}: {what}"));
    let values: Vec<f64> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:count"));
        }
        let a: f64 = parts[0].trim().parse().map_err(|_| bad("start"))?;
        let b: f64 = parts[1].trim().parse().map_err(|_| bad("stop"))?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad("count"))?;
        match n {
            0 => Vec::new(),
            1 => vec![a],
            _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
        }
    } else {
        s.split(',')
            .filter(|x| !x.trim().is_empty())
            .map(|x| x.trim().parse().map_err(|_| bad(x)))
            .collect::<Result<_>>()?
    };
    if values.is_empty() {
        return Err(bad("empty"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(bad("non-finite value"));
    }
    Ok(values)
}

/// Two wires joined by one `C_Z(2 cot φ)`.
pub fn default_program(phi: f64) -> Program {
    Program {
        wires: 2,
        steps: vec![ProgramStep {
            kind: StepKind::Cz,
            wire: 0,
            params: BTreeMap::from([("phi".to_string(), phi)]),
        }],
    }
}

fn with_phi(program: &Program, phi: f64) -> Program {
    let mut p = program.clone();
    for st in p.steps.iter_mut().filter(|s| s.kind == StepKind::Cz) {
        st.params.remove("g");
        st.params.insert("phi".into(), phi);
    }
    p
}

/// Channel error of a program on a lattice just large enough for it.
pub fn program_channel_error(program: &Program, r: f64) -> Result<f64> {
    let target = program
        .target()?
        .ok_or_else(|| Error::InvalidParameter("program reads out a wire; nothing to sweep".into()))?;
    let compiled = compile_program(program)?;
    let spec = LatticeSpec::new(program.min_freq_pairs(), compiled.schedule.steps.len() + 2, r);
    let ch = extract_logical_channel(&build_bsl(&spec)?, &compiled.schedule)?;
    Ok(ch.error_to(&target))
}

pub fn max_nullifier_variance(r: f64) -> Result<f64> {
    Ok(nullifier_variances(&LatticeSpec::new(4, 4, r))?.into_iter().fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub param: SweepParam,
    pub value: f64,
    pub residual: f64,
    pub nullifier_variance: f64,
}

pub struct SweepConfig {
    pub param: SweepParam,
    pub values: Vec<f64>,
    /// Program to sweep; defaults to a single `C_Z`.
    pub program: Option<Program>,
    /// `r` used for φ sweeps.
    pub r: f64,
    /// `φ` used for `r` sweeps of the default program.
    pub phi: f64,
}

fn point(cfg: &SweepConfig, value: f64) -> Result<SweepRow> {
    let (r, phi) = match cfg.param {
        SweepParam::R => (value, cfg.phi),
        SweepParam::Phi => (cfg.r, value),
    };
    let program = match (&cfg.program, cfg.param) {
        (Some(p), SweepParam::Phi) => with_phi(p, phi),
        (Some(p), SweepParam::R) => p.clone(),
        (None, _) => default_program(phi),
    };
    Ok(SweepRow {
        param: cfg.param,
        value,
        residual: program_channel_error(&program, r)?,
        nullifier_variance: max_nullifier_variance(r)?,
    })
}

/// Evaluate every point, in parallel, preserving input order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.values.is_empty() {
        return Err(Error::InvalidParameter("empty sweep range".into()));
    }
    let results: Vec<Result<SweepRow>> = std::thread::scope(|s| {
        let handles: Vec<_> = cfg.values.iter().map(|&v| s.spawn(move || point(cfg, v))).collect();
        handles.into_iter().map(|h| h.join().expect("sweep point panicked")).collect()
    });
    results.into_iter().collect()
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{},{:e},{:e}\n", r.param, r.value, r.residual, r.nullifier_variance));
    }
    out
}
