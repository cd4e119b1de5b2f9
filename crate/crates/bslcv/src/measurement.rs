//! Homodyne measurement with exact Gaussian conditioning.
//!
//! `p(θ) = sinθ·q + cosθ·p` is measured by applying `R(θ − π/2)` to the mode,
//! which maps `p(θ)` onto `q`, and then measuring `q`. The returned outcome is
//! the eigenvalue of `p(θ)`.
//!
//! A `q` measurement deletes the mode's row and column from `Z`. The mean is
//! conditioned with the Schur complement of the covariance, which only needs
//! the column `Σ[:, q_j] = ½ (U⁻¹e_j, V U⁻¹e_j)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::gates::rotation;
use crate::gaussian::{CMat, GraphState, RVec, C64};
use crate::lattice::{Lattice, ModeLabel, Pol};

/// One line of a measurement transcript.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub mode: String,
    pub theta: f64,
    pub outcome: f64,
    pub forced: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Where outcomes come from: all zero, a fixed list, or a seeded sampler.
#[derive(Clone, Debug)]
pub enum OutcomeSource {
    Zero,
    Forced { values: Vec<f64>, next: usize },
    Sampled { rng: ChaCha8Rng, seed: u64 },
}

impl OutcomeSource {
    pub fn zero() -> Self {
        OutcomeSource::Zero
    }

    pub fn forced(values: Vec<f64>) -> Self {
        OutcomeSource::Forced { values, next: 0 }
    }

    pub fn seeded(seed: u64) -> Self {
        OutcomeSource::Sampled { rng: ChaCha8Rng::seed_from_u64(seed), seed }
    }

    pub fn is_forced(&self) -> bool {
        !matches!(self, OutcomeSource::Sampled { .. })
    }

    fn seed(&self) -> Option<u64> {
        match self {
            OutcomeSource::Sampled { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    /// Next outcome for a `q` measurement with the given marginal.
    fn draw(&mut self, marginal: impl FnOnce() -> Result<(f64, f64)>) -> Result<f64> {
        match self {
            OutcomeSource::Zero => Ok(0.0),
            OutcomeSource::Forced { values, next } => {
                let v = values.get(*next).copied().ok_or_else(|| {
                    Error::InvalidParameter(format!("forced outcome list exhausted after {next} values"))
                })?;
                *next += 1;
                Ok(v)
            }
            OutcomeSource::Sampled { rng, .. } => {
                let (mean, var) = marginal()?;
                let normal = Normal::new(mean, var.sqrt())
                    .map_err(|e| Error::InvalidState(format!("bad marginal: {e}")))?;
                Ok(normal.sample(rng))
            }
        }
    }
}

/// Mean and variance of `q_mode`.
pub fn q_marginal(state: &GraphState, mode: usize) -> Result<(f64, f64)> {
    let x = u_column(state, mode)?;
    if !(x[mode] > 0.0) {
        return Err(Error::InvalidState(format!("U not positive definite (q variance {})", 0.5 * x[mode])));
    }
    Ok((state.mean[mode], 0.5 * x[mode]))
}

/// `U^{-1} e_mode`. LU rather than Cholesky: near infinite squeezing `U`
/// spans many orders of magnitude and rounding can cost it definiteness.
/// Conditioning only uses the ratios `x_i / x_mode`, which survive that.
fn u_column(state: &GraphState, mode: usize) -> Result<RVec> {
    let n = state.num_modes();
    let mut e = RVec::zeros(n);
    e[mode] = 1.0;
    let x = state
        .u()
        .lu()
        .solve(&e)
        .ok_or_else(|| Error::InvalidState("U singular".into()))?;
    Ok(x)
}

fn delete_mode(z: &CMat, mode: usize) -> CMat {
    z.clone().remove_row(mode).remove_column(mode)
}

fn delete_mean(mean: &RVec, n: usize, mode: usize) -> RVec {
    mean.clone().remove_row(n + mode).remove_row(mode)
}

/// Condition on `q_mode = outcome` and remove the mode.
pub fn condition_q(state: &GraphState, mode: usize, outcome: f64) -> Result<GraphState> {
    let n = state.num_modes();
    if mode >= n {
        return Err(Error::InvalidParameter(format!("mode {mode} out of range ({n} modes)")));
    }
    let z = delete_mode(&state.z, mode);
    if outcome == 0.0 && state.mean.iter().all(|&x| x == 0.0) {
        return Ok(GraphState { z, mean: RVec::zeros(2 * (n - 1)) });
    }
    let x = u_column(state, mode)?;
    let col_p = state.v() * &x;
    // Σ[:, q_j] = ½ (x, V x); the ½ cancels against Σ_jj = ½ x_j
    let gain = (outcome - state.mean[mode]) / x[mode];
    let mut mean = state.mean.clone();
    for i in 0..n {
        mean[i] += x[i] * gain;
        mean[n + i] += col_p[i] * gain;
    }
    Ok(GraphState { z, mean: delete_mean(&mean, n, mode) })
}

/// Independent route through the wavefunction's linear term:
/// `b_r ← b_r + m Z_rj`, then `q̄ = −U⁻¹ Im b`, `p̄ = Re b + V q̄`.
pub fn condition_q_linear_term(state: &GraphState, mode: usize, outcome: f64) -> Result<GraphState> {
    let b = state.linear_term();
    let zcol = state.z.column(mode).into_owned();
    let b = (b + zcol * C64::new(outcome, 0.0)).remove_row(mode);
    let z = delete_mode(&state.z, mode);
    let mean = GraphState::mean_from_linear_term(&z, &b)?;
    Ok(GraphState { z, mean })
}

/// Full-covariance Schur-complement conditioning (reference path).
pub fn condition_q_covariance(state: &GraphState, mode: usize, outcome: f64) -> Result<GraphState> {
    let n = state.num_modes();
    let cov = state.to_covariance()?;
    let keep: Vec<usize> = (0..2 * n).filter(|&i| i != n + mode).collect();
    let sig = cov.sigma.select_rows(&keep).select_columns(&keep);
    let mu = cov.mean.select_rows(&keep);
    let j = mode;
    let rest: Vec<usize> = (0..2 * n - 1).filter(|&i| i != j).collect();
    let sjj = sig[(j, j)];
    let col = sig.column(j).select_rows(&rest);
    let sr = sig.select_rows(&rest).select_columns(&rest) - &col * col.transpose() / sjj;
    let mr = mu.select_rows(&rest) + &col * ((outcome - mu[j]) / sjj);
    crate::gaussian::CovarianceState { sigma: sr, mean: mr }.to_graph()
}

/// Measure `q` on a mode; returns the outcome and the reduced state.
pub fn measure_q(state: &GraphState, mode: usize, source: &mut OutcomeSource) -> Result<(f64, GraphState)> {
    let m = source.draw(|| q_marginal(state, mode))?;
    Ok((m, condition_q(state, mode, m)?))
}

/// Bring `p(θ)` of a mode onto its `q` quadrature.
pub fn rotate_for_homodyne(state: &GraphState, mode: usize, theta: f64) -> Result<GraphState> {
    state.apply_gaussian(&rotation(theta - FRAC_PI_2), &[mode])
}

/// Measure `p(θ) = sinθ q + cosθ p`.
pub fn measure_homodyne(
    state: &GraphState,
    mode: usize,
    theta: f64,
    source: &mut OutcomeSource,
) -> Result<(f64, GraphState)> {
    let rotated = rotate_for_homodyne(state, mode, theta)?;
    measure_q(&rotated, mode, source)
}

/// Measure a labelled lattice mode in place.
pub fn measure_label(
    lat: &mut Lattice,
    label: &ModeLabel,
    theta: f64,
    source: &mut OutcomeSource,
) -> Result<MeasurementRecord> {
    let idx = lat.index_of(label).ok_or_else(|| Error::MissingMode(label.to_string()))?;
    let (outcome, state) = measure_homodyne(&lat.state, idx, theta, source)?;
    lat.state = state;
    lat.labels.remove(idx);
    Ok(MeasurementRecord {
        mode: label.to_string(),
        theta,
        outcome,
        forced: source.is_forced(),
        seed: source.seed(),
    })
}

/// Homodyne `p(θ_Z)`, `p(θ_Y)` on the two physical modes of a macronode (Z first).
pub fn measure_macronode(
    lat: &mut Lattice,
    time_bin: usize,
    m: usize,
    theta_z: f64,
    theta_y: f64,
    source: &mut OutcomeSource,
) -> Result<[MeasurementRecord; 2]> {
    lat.macronode(time_bin, m)?;
    let z = measure_label(lat, &ModeLabel::from_macronode(time_bin, m as i64, Pol::Z), theta_z, source)?;
    let y = measure_label(lat, &ModeLabel::from_macronode(time_bin, m as i64, Pol::Y), theta_y, source)?;
    Ok([z, y])
}

/// Angles assigned to one control macronode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlAngles {
    pub time_bin: usize,
    pub m: usize,
    pub theta_z: f64,
    pub theta_y: f64,
}

/// Measure the listed control macronodes with zero outcomes.
pub fn premeasure_controls(lat: &Lattice, controls: &[ControlAngles]) -> Result<Lattice> {
    for c in controls {
        for th in [c.theta_z, c.theta_y] {
            if th.sin().abs() < 1e-9 {
                return Err(Error::SingularAngle { theta: th });
            }
        }
        if c.m % 2 == 1 {
            return Err(Error::InvalidParameter(format!("row {} is a wire row, not a control row", c.m)));
        }
    }
    let mut out = lat.clone();
    let mut src = OutcomeSource::zero();
    for c in controls {
        measure_macronode(&mut out, c.time_bin, c.m, c.theta_z, c.theta_y, &mut src)?;
    }
    Ok(out)
}

fn cot(x: f64) -> f64 {
    x.cos() / x.sin()
}

/// `f_i = ¼(cot θ_iZ − cot θ_iY)`.
pub fn edge_f(i: (f64, f64)) -> f64 {
    0.25 * (cot(i.0) - cot(i.1))
}

/// `h_ij = ¼(−cot θ_iZ − cot θ_iY − cot θ_jZ − cot θ_jY)`.
pub fn edge_h(i: (f64, f64), j: (f64, f64)) -> f64 {
    0.25 * (-cot(i.0) - cot(i.1) - cot(j.0) - cot(j.1))
}

/// `g_ij = ¼(cot θ_iZ + cot θ_iY − cot θ_jZ − cot θ_jY)`.
pub fn edge_g(i: (f64, f64), j: (f64, f64)) -> f64 {
    0.25 * (cot(i.0) + cot(i.1) - cot(j.0) - cot(j.1))
}

/// Write transcript records as JSON lines.
pub fn transcript_jsonl(records: &[MeasurementRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("plain data serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_transcript(s: &str) -> Result<Vec<MeasurementRecord>> {
    s.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}
