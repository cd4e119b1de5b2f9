//! Symplectic representations of the gate set, outcome displacements and the
//! finite-squeezing noise map.
//!
//! Heisenberg convention: a gate `U` is stored as `S` with `U† x U = S x`.
//! The beamsplitter `B_ij = exp[-i pi/4 (q_i p_j - q_j p_i)]` therefore maps
//! `q_i -> (q_i - q_j)/sqrt2` and `q_j -> (q_i + q_j)/sqrt2`, and likewise for `p`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use crate::error::{Error, Result};
use crate::gaussian::{CMat, GraphState, RMat, Symplectic, C64};

/// Below this `|sin(θj − θk)|` a V-gate or displacement is refused.
pub const DEGENERATE_SIN: f64 = 1e-9;

pub fn rotation(theta: f64) -> Symplectic {
    let (s, c) = theta.sin_cos();
    Symplectic { s: RMat::from_row_slice(2, 2, &[c, -s, s, c]) }
}

/// `S(s)`: `q -> s q`, `p -> p / s` for any real `s != 0`.
pub fn squeeze(s: f64) -> Result<Symplectic> {
    if s == 0.0 || !s.is_finite() {
        return Err(Error::InvalidParameter(format!("squeeze factor must be finite and nonzero, got {s}")));
    }
    Ok(Symplectic { s: RMat::from_row_slice(2, 2, &[s, 0.0, 0.0, 1.0 / s]) })
}

/// `B_ij` on the ordered pair `(i, j)`.
pub fn beamsplitter() -> Symplectic {
    let h = FRAC_1_SQRT_2;
    let o = RMat::from_row_slice(2, 2, &[h, -h, h, h]);
    Symplectic::from_blocks(&o, &RMat::zeros(2, 2), &RMat::zeros(2, 2), &o)
}

/// `C_Z(g) = exp(i g q_i q_j)`: `p_i -> p_i + g q_j`, `p_j -> p_j + g q_i`.
pub fn cz(g: f64) -> Symplectic {
    let c = RMat::from_row_slice(2, 2, &[0.0, g, g, 0.0]);
    Symplectic::from_blocks(&RMat::identity(2, 2), &RMat::zeros(2, 2), &c, &RMat::identity(2, 2))
}

/// `R(a) ⊗ R(b)`.
pub fn rotation_pair(a: f64, b: f64) -> Symplectic {
    rotation(a).direct_sum(&rotation(b))
}

pub fn squeeze_pair(a: f64, b: f64) -> Result<Symplectic> {
    Ok(squeeze(a)?.direct_sum(&squeeze(b)?))
}

/// `V(θj, θk) = R(θ+) S(tan θ−) R(θ+)`, `θ± = (θj ± θk)/2`.
pub fn v_gate(theta_j: f64, theta_k: f64) -> Result<Symplectic> {
    let sin = (theta_j - theta_k).sin();
    if sin.abs() < DEGENERATE_SIN {
        return Err(Error::DegenerateAngles { sin });
    }
    let tp = 0.5 * (theta_j + theta_k);
    let tm = 0.5 * (theta_j - theta_k);
    let r = rotation(tp);
    Ok(r.then_after(&squeeze(tm.tan())?).then_after(&r))
}

/// Outcome-dependent displacement `α` of one teleportation step.
pub fn displacement_from_outcomes(m_j: f64, m_k: f64, theta_j: f64, theta_k: f64) -> Result<C64> {
    let sin = (theta_j - theta_k).sin();
    if sin.abs() < DEGENERATE_SIN {
        return Err(Error::DegenerateAngles { sin });
    }
    let i = C64::i();
    let num = -i * C64::from_polar(1.0, theta_k) * m_j - i * C64::from_polar(1.0, theta_j) * m_k;
    Ok(num / sin)
}

/// Mean shift `(√2 Re α, √2 Im α)` of `D(α) = exp(α a† − α* a)`.
pub fn displacement_shift(alpha: C64) -> (f64, f64) {
    (SQRT_2 * alpha.re, SQRT_2 * alpha.im)
}

pub fn apply_displacement(state: &GraphState, mode: usize, alpha: C64) -> Result<GraphState> {
    let n = state.num_modes();
    if mode >= n {
        return Err(Error::InvalidParameter(format!("mode {mode} out of range")));
    }
    let (dq, dp) = displacement_shift(alpha);
    let mut out = state.clone();
    out.mean[mode] += dq;
    out.mean[n + mode] += dp;
    Ok(out)
}

/// Multiply the wavefunction by `exp(-κ q_m² / 2)`: `Z_mm += iκ`, linear term unchanged.
pub fn damp_q(state: &GraphState, mode: usize, kappa: f64) -> Result<GraphState> {
    let b = state.linear_term();
    let mut z = state.z.clone();
    z[(mode, mode)] += C64::new(0.0, kappa);
    let mean = GraphState::mean_from_linear_term(&z, &b)?;
    Ok(GraphState { z, mean })
}

/// Multiply by `exp(-κ p_m² / 2)`, computed as `R(-π/2) exp(-κ q²/2) R(π/2)`.
pub fn damp_p(state: &GraphState, mode: usize, kappa: f64) -> Result<GraphState> {
    let half = std::f64::consts::FRAC_PI_2;
    let s = state.apply_gaussian(&rotation(half), &[mode])?;
    let s = damp_q(&s, mode, kappa)?;
    s.apply_gaussian(&rotation(-half), &[mode])
}

/// Closed form of the p-damping on the graph alone:
/// `Z − Z e eᵀ Z / (Z_mm + i/κ)`.
pub fn damp_p_graph(z: &CMat, mode: usize, kappa: f64) -> CMat {
    let col = z.column(mode).into_owned();
    let denom = z[(mode, mode)] + C64::new(0.0, 1.0 / kappa);
    z - (&col * col.transpose()) / denom
}

/// `t = tanh 2r` and `ε = sech 2r`.
pub fn squeezing_factors(r: f64) -> (f64, f64) {
    ((2.0 * r).tanh(), 1.0 / (2.0 * r).cosh())
}

/// `N(r) = e^{−εq²/2} e^{−εp²/(2t²)} S(1/t)` on one mode.
pub fn apply_noise_map(state: &GraphState, mode: usize, r: f64) -> Result<GraphState> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("noise map needs r > 0, got {r}")));
    }
    let (t, eps) = squeezing_factors(r);
    let s = state.apply_gaussian(&squeeze(1.0 / t)?, &[mode])?;
    let s = damp_p(&s, mode, eps / (t * t))?;
    damp_q(&s, mode, eps)
}

/// `N(r) D(α) V(θj, θk)` with `α` from the outcomes.
pub fn noisy_v_map(
    state: &GraphState,
    mode: usize,
    r: f64,
    m_j: f64,
    m_k: f64,
    theta_j: f64,
    theta_k: f64,
) -> Result<GraphState> {
    let v = v_gate(theta_j, theta_k)?;
    let alpha = displacement_from_outcomes(m_j, m_k, theta_j, theta_k)?;
    let s = state.apply_gaussian(&v, &[mode])?;
    let s = apply_displacement(&s, mode, alpha)?;
    apply_noise_map(&s, mode, r)
}

/// Two-mode cluster state `iε I + t σx` (the CV cluster form of a TMS pair).
pub fn tms_cluster(r: f64) -> GraphState {
    let (t, eps) = squeezing_factors(r);
    let mut s = GraphState::vacuum(2);
    s.z = CMat::from_row_slice(2, 2, &[C64::new(0.0, eps), C64::new(t, 0.0), C64::new(t, 0.0), C64::new(0.0, eps)]);
    s
}

/// Two-mode squeezing symplectic `B (S(e^r) ⊕ S(e^-r))`; on vacuum it yields
/// the H-graph `i[[cosh 2r, −sinh 2r], [−sinh 2r, cosh 2r]]`.
pub fn two_mode_squeezer(r: f64) -> Symplectic {
    let sq = squeeze_pair(r.exp(), (-r).exp()).expect("positive factors");
    beamsplitter().then_after(&sq)
}

/// Alternative graph `K = (I + iZ)(I − iZ)^{-1}`.
pub fn k_graph(z: &CMat) -> Result<CMat> {
    let n = z.nrows();
    let id = CMat::identity(n, n);
    let i = C64::i();
    let num = &id + z * i;
    let den = &id - z * i;
    // K = num · den⁻¹, solved as (den⁻ᵀ numᵀ)ᵀ
    let lu = den.transpose().lu();
    lu.solve(&num.transpose())
        .map(|m| m.transpose())
        .ok_or(Error::IllConditioned { what: "I - iZ", cond: f64::INFINITY })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GateSpec {
    pub kind: String,
    pub modes: Vec<usize>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl GateSpec {
    fn param(&self, name: &str) -> Result<f64> {
        self.params
            .get(name)
            .copied()
            .ok_or_else(|| Error::InvalidParameter(format!("gate '{}' needs param '{name}'", self.kind)))
    }

    fn expect_modes(&self, k: usize) -> Result<()> {
        if self.modes.len() != k {
            return Err(Error::InvalidParameter(format!(
                "gate '{}' acts on {k} modes, got {}",
                self.kind,
                self.modes.len()
            )));
        }
        if k == 2 && self.modes[0] == self.modes[1] {
            return Err(Error::InvalidParameter(format!("gate '{}' needs distinct modes", self.kind)));
        }
        Ok(())
    }

    /// Symplectic for every kind except `displacement`, which has none.
    pub fn symplectic(&self) -> Result<Symplectic> {
        match self.kind.as_str() {
            "rotation" => {
                self.expect_modes(1)?;
                Ok(rotation(self.param("theta")?))
            }
            "squeeze" => {
                self.expect_modes(1)?;
                squeeze(self.param("s")?)
            }
            "beamsplitter" => {
                self.expect_modes(2)?;
                Ok(beamsplitter())
            }
            "cz" => {
                self.expect_modes(2)?;
                Ok(cz(self.param("g")?))
            }
            "v_gate" => {
                self.expect_modes(1)?;
                v_gate(self.param("theta_j")?, self.param("theta_k")?)
            }
            "displacement" => Err(Error::InvalidParameter("displacement has no symplectic part".into())),
            other => Err(Error::InvalidParameter(format!("unknown gate kind '{other}'"))),
        }
    }

    pub fn apply(&self, state: &GraphState) -> Result<GraphState> {
        if self.kind == "displacement" {
            self.expect_modes(1)?;
            let alpha = C64::new(self.param("re")?, self.param("im")?);
            return apply_displacement(state, self.modes[0], alpha);
        }
        state.apply_gaussian(&self.symplectic()?, &self.modes)
    }
}

/// Mean response of a symplectic acting on a vector (convenience for tests).
pub fn act(s: &Symplectic, x: &[f64]) -> Vec<f64> {
    (&s.s * DVector::from_row_slice(x)).iter().copied().collect()
}
