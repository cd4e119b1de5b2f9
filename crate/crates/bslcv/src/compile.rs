//! Logical programs and their compilation to measurement angles.
//!
//! A program acts on `k` wires (wire `i` on lattice row `2i + 3`). Single-mode
//! gates become two wire steps found by a seeded multi-start
//! Levenberg–Marquardt search; `C_Z` becomes one two-mode step whose local
//! rotations are carried as a pending correction on each wire and folded
//! into that wire's next gate (or undone at the end).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};
use crate::gates::{cz, rotation, squeeze, v_gate};
use crate::gaussian::{max_abs, GraphState, GraphStateJson, RMat, RVec, Symplectic};
use crate::lattice::Lattice;
use crate::measurement::{transcript_jsonl, OutcomeSource};
use crate::protocol::{
    control_sign, cz_angles, cz_target, run_schedule, two_mode_rows, wire_row, AngleSchedule, RunOutput, Sign,
    StepAngles,
};

const DECOMPOSE_TOL: f64 = 1e-8;
const DECOMPOSE_STARTS: usize = 96;
const DECOMPOSE_SEED: u64 = 0x5eed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Single,
    Cz,
    Readout,
    Identity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgramStep {
    #[serde(rename = "type")]
    pub kind: StepKind,
    #[serde(default)]
    pub wire: usize,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub wires: usize,
    pub steps: Vec<ProgramStep>,
}

impl Program {
    pub fn from_json(s: &str) -> Result<Self> {
        let p: Program = serde_json::from_str(s)?;
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        if self.wires == 0 {
            return Err(Error::InvalidParameter("program has no wires".into()));
        }
        for (i, st) in self.steps.iter().enumerate() {
            let span = if st.kind == StepKind::Cz { 2 } else { 1 };
            if st.kind != StepKind::Identity && st.wire + span > self.wires {
                return Err(Error::InvalidParameter(format!("step {i}: wire {} out of range", st.wire)));
            }
        }
        Ok(())
    }

    /// Lattice rows the program needs: `2k + 2` frequency pairs.
    pub fn min_freq_pairs(&self) -> usize {
        2 * self.wires + 2
    }

    /// Ideal `2k`-mode symplectic, or `None` if the program reads out.
    pub fn target(&self) -> Result<Option<Symplectic>> {
        let k = self.wires;
        let mut total = Symplectic::identity(k);
        for st in &self.steps {
            let g = match st.kind {
                StepKind::Readout => return Ok(None),
                StepKind::Identity => continue,
                StepKind::Single => single_gate(&st.params)?.embed(&[st.wire], k),
                StepKind::Cz => cz(cz_strength(&st.params)?).embed(&[st.wire, st.wire + 1], k),
            };
            total = g.then_after(&total);
        }
        Ok(Some(total))
    }
}

fn param(params: &BTreeMap<String, f64>, key: &str) -> Option<f64> {
    params.get(key).copied()
}

/// Single-mode target from step parameters: `theta` (rotation), `s`
/// (squeeze), `a b c d` (matrix), or `theta_z theta_y` (one V-gate).
pub fn single_gate(params: &BTreeMap<String, f64>) -> Result<Symplectic> {
    if let (Some(a), Some(b), Some(c), Some(d)) =
        (param(params, "a"), param(params, "b"), param(params, "c"), param(params, "d"))
    {
        return Symplectic::new(RMat::from_row_slice(2, 2, &[a, b, c, d]));
    }
    if let (Some(j), Some(k)) = (param(params, "theta_z"), param(params, "theta_y")) {
        return v_gate(j, k);
    }
    if let Some(s) = param(params, "s") {
        return squeeze(s);
    }
    if let Some(t) = param(params, "theta") {
        return Ok(rotation(t));
    }
    Err(Error::InvalidParameter(format!("single gate needs theta, s, a..d or theta_z/theta_y; got {:?}", params.keys())))
}

/// `C_Z` strength from `g` or `phi` (`g = 2 cot φ`).
pub fn cz_strength(params: &BTreeMap<String, f64>) -> Result<f64> {
    if let Some(g) = param(params, "g") {
        return Ok(g);
    }
    if let Some(phi) = param(params, "phi") {
        if !(phi > 0.0 && phi < std::f64::consts::PI) {
            return Err(Error::InvalidParameter(format!("phi must lie in (0, π), got {phi}")));
        }
        return Ok(2.0 / phi.tan());
    }
    Err(Error::InvalidParameter("cz needs g or phi".into()))
}

fn cz_phi(params: &BTreeMap<String, f64>) -> Result<f64> {
    match param(params, "phi") {
        Some(phi) => {
            cz_strength(params)?;
            Ok(phi)
        }
        None => Ok(2f64.atan2(cz_strength(params)?)),
    }
}

fn pair_residual(x: &[f64; 4], target: &RMat) -> Option<[f64; 4]> {
    let v1 = v_gate(x[0], x[1]).ok()?;
    let v2 = v_gate(x[2], x[3]).ok()?;
    let m = v2.then_after(&v1).s;
    Some([
        m[(0, 0)] - target[(0, 0)],
        m[(0, 1)] - target[(0, 1)],
        m[(1, 0)] - target[(1, 0)],
        m[(1, 1)] - target[(1, 1)],
    ])
}

fn norm(r: &[f64; 4]) -> f64 {
    r.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn levenberg_marquardt(mut x: [f64; 4], target: &RMat) -> Option<([f64; 4], f64)> {
    let mut r = pair_residual(&x, target)?;
    let mut lambda = 1e-3;
    for _ in 0..300 {
        let f = norm(&r);
        if f < 1e-14 {
            break;
        }
        let h = 1e-7;
        let mut jac = nalgebra::Matrix4::<f64>::zeros();
        for c in 0..4 {
            let mut xp = x;
            xp[c] += h;
            let rp = pair_residual(&xp, target)?;
            for i in 0..4 {
                jac[(i, c)] = (rp[i] - r[i]) / h;
            }
        }
        let rv = nalgebra::Vector4::from(r);
        let jtj = jac.transpose() * jac;
        let g = jac.transpose() * rv;
        let mut improved = false;
        for _ in 0..20 {
            let a = jtj + nalgebra::Matrix4::from_diagonal(&(jtj.diagonal() * lambda + nalgebra::Vector4::repeat(1e-12)));
            let Some(step) = a.lu().solve(&(-g)) else { break };
            let xn = [x[0] + step[0], x[1] + step[1], x[2] + step[2], x[3] + step[3]];
            if let Some(rn) = pair_residual(&xn, target) {
                if norm(&rn) < f {
                    x = xn;
                    r = rn;
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Some((x, norm(&r)))
}

/// `|ln |tan θ−||`: zero for the unsqueezed `S(±1)`.
fn squeezing_cost(a: f64, b: f64) -> f64 {
    ((a - b) / 2.0).tan().abs().ln().abs()
}

/// Angles `[(θ1j, θ1k), (θ2j, θ2k)]` with `V(θ2) V(θ1) = target`.
///
/// Among converged starts the one with the least total intermediate
/// squeezing `Σ |ln |tan θ−||` wins.
pub fn decompose_two_v(target: &Symplectic) -> Result<[(f64, f64); 2]> {
    if target.modes() != 1 {
        return Err(Error::Dimension { expected: 1, found: target.modes() });
    }
    let det = target.s.determinant();
    if (det - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("target determinant {det} is not 1")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(DECOMPOSE_SEED);
    let half = std::f64::consts::FRAC_PI_2;
    let mut best: Option<([f64; 4], f64)> = None;
    let mut best_residual = f64::INFINITY;
    for _ in 0..DECOMPOSE_STARTS {
        let x0 = [(); 4].map(|_| rng.random_range(-half..half));
        let Some((x, res)) = levenberg_marquardt(x0, &target.s) else { continue };
        best_residual = best_residual.min(res);
        if res >= DECOMPOSE_TOL {
            continue;
        }
        let cost = squeezing_cost(x[0], x[1]) + squeezing_cost(x[2], x[3]);
        if best.map(|(_, c)| cost < c - 1e-12).unwrap_or(true) {
            best = Some((x, cost));
        }
    }
    let (x, _) = best.ok_or(Error::Unsatisfiable { residual: best_residual })?;
    Ok([(x[0], x[1]), (x[2], x[3])])
}

/// Physical `(θ_Z, θ_Y)` for a wire row that should apply `V(θj, θk)`.
pub fn row_angles(row: usize, v: (f64, f64)) -> (f64, f64) {
    match control_sign(row + 1) {
        Sign::Minus => v,
        Sign::Plus => (v.1, v.0),
    }
}

/// `V(π/4, −π/4) = 1`.
pub const IDENTITY_V: (f64, f64) = (FRAC_PI_4, -FRAC_PI_4);

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompiledProgram {
    pub schedule: AngleSchedule,
    /// Program step that produced each lattice step.
    pub origin: Vec<usize>,
}

struct Compiler<'a> {
    program: &'a Program,
    pending: Vec<Symplectic>,
    live: Vec<bool>,
    steps: Vec<StepAngles>,
    origin: Vec<usize>,
}

impl Compiler<'_> {
    fn emit(&mut self, origin: usize, mut rows: BTreeMap<usize, (f64, f64)>) {
        for k in 0..self.program.wires {
            let row = wire_row(k);
            if self.live[k] && !rows.contains_key(&row) {
                rows.insert(row, row_angles(row, IDENTITY_V));
            }
        }
        self.steps.push(StepAngles { rows });
        self.origin.push(origin);
    }

    /// Two steps per wire in `gates`, run side by side.
    fn emit_pairs(&mut self, origin: usize, gates: &[(usize, Symplectic)]) -> Result<()> {
        let mut first = BTreeMap::new();
        let mut second = BTreeMap::new();
        for (k, g) in gates {
            if max_abs(&(&g.s - RMat::identity(2, 2))) < 1e-14 {
                continue;
            }
            let [v1, v2] = decompose_two_v(g)?;
            let row = wire_row(*k);
            first.insert(row, row_angles(row, v1));
            second.insert(row, row_angles(row, v2));
        }
        if !first.is_empty() {
            self.emit(origin, first);
            self.emit(origin, second);
        }
        Ok(())
    }

    fn flush(&mut self, origin: usize, wires: &[usize]) -> Result<()> {
        let gates: Vec<(usize, Symplectic)> =
            wires.iter().map(|&k| (k, self.pending[k].inverse())).collect();
        self.emit_pairs(origin, &gates)?;
        for &k in wires {
            self.pending[k] = Symplectic::identity(1);
        }
        Ok(())
    }

    fn check_live(&self, i: usize, k: usize) -> Result<()> {
        if self.live[k] {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("step {i}: wire {k} was already read out")))
        }
    }
}

pub fn compile_program(program: &Program) -> Result<CompiledProgram> {
    program.check()?;
    let k = program.wires;
    let mut c = Compiler {
        program,
        pending: vec![Symplectic::identity(1); k],
        live: vec![true; k],
        steps: Vec::new(),
        origin: Vec::new(),
    };
    for (i, st) in program.steps.iter().enumerate() {
        match st.kind {
            StepKind::Identity => c.emit(i, BTreeMap::new()),
            StepKind::Single => {
                c.check_live(i, st.wire)?;
                let g = single_gate(&st.params)?;
                let pending_trivial = max_abs(&(&c.pending[st.wire].s - RMat::identity(2, 2))) < 1e-14;
                if let (Some(j), Some(kk), true) =
                    (param(&st.params, "theta_z"), param(&st.params, "theta_y"), pending_trivial)
                {
                    let row = wire_row(st.wire);
                    c.emit(i, [(row, row_angles(row, (j, kk)))].into_iter().collect());
                } else {
                    let x = g.then_after(&c.pending[st.wire].inverse());
                    c.emit_pairs(i, &[(st.wire, x)])?;
                    c.pending[st.wire] = Symplectic::identity(1);
                }
            }
            StepKind::Cz => {
                let (a, b) = (st.wire, st.wire + 1);
                c.check_live(i, a)?;
                c.check_live(i, b)?;
                c.flush(i, &[a, b])?;
                let phi = cz_phi(&st.params)?;
                let row = wire_row(a);
                let middle = control_sign(row + 1);
                let rows = two_mode_rows(row, &cz_angles(phi, middle)?)?;
                c.emit(i, rows);
                // the step applies (Ra ⊗ Rb) C_Z; Ra, Rb stay pending
                let t = cz_target(phi, middle);
                let local = t.then_after(&cz(2.0 / phi.tan()).inverse());
                c.pending[a] = Symplectic { s: local.s.select_rows(&[0, 2]).select_columns(&[0, 2]) };
                c.pending[b] = Symplectic { s: local.s.select_rows(&[1, 3]).select_columns(&[1, 3]) };
            }
            StepKind::Readout => {
                c.check_live(i, st.wire)?;
                c.flush(i, &[st.wire])?;
                let theta = param(&st.params, "theta").unwrap_or(0.0);
                c.emit(i, [(wire_row(st.wire), (theta, theta))].into_iter().collect());
                c.live[st.wire] = false;
            }
        }
    }
    let live: Vec<usize> = (0..k).filter(|&w| c.live[w]).collect();
    c.flush(program.steps.len(), &live)?;
    Ok(CompiledProgram {
        schedule: AngleSchedule { wires: (0..k).map(wire_row).collect(), steps: c.steps },
        origin: c.origin,
    })
}

/// Result of running a compiled program.
#[derive(Clone, Debug)]
pub struct ProgramRun {
    pub compiled: CompiledProgram,
    pub run: RunOutput,
    /// Output mean minus the forced-zero output mean for the same input:
    /// the displacement accumulated from the outcomes.
    pub displacement: RVec,
}

impl ProgramRun {
    pub fn transcript(&self) -> String {
        transcript_jsonl(&self.run.records)
    }

    pub fn report_json(&self) -> serde_json::Value {
        serde_json::json!({
            "lattice_steps": self.compiled.schedule.steps.len(),
            "live_wires": self.run.live_wires,
            "readouts": self.run.readouts,
            "output": GraphStateJson::from(&self.run.output),
            "displacement": self.displacement.iter().copied().collect::<Vec<_>>(),
            "leak": self.run.leak,
        })
    }
}

/// Compile, then run on `base` with `input` (one mode per wire).
pub fn run_program(
    base: &Lattice,
    program: &Program,
    input: &GraphState,
    source: &mut OutcomeSource,
) -> Result<ProgramRun> {
    if base.spec.freq_pairs < program.min_freq_pairs() {
        return Err(Error::LatticeExhausted(format!(
            "{} wires need {} frequency pairs, lattice has {}",
            program.wires,
            program.min_freq_pairs(),
            base.spec.freq_pairs
        )));
    }
    let compiled = compile_program(program)?;
    let run = run_schedule(base, &compiled.schedule, input, source)?;
    let displacement = if source.is_forced() && run.records.iter().all(|r| r.outcome == 0.0) {
        RVec::zeros(run.output.mean.len())
    } else {
        let zero = run_schedule(base, &compiled.schedule, input, &mut OutcomeSource::zero())?;
        &run.output.mean - &zero.output.mean
    };
    Ok(ProgramRun { compiled, run, displacement })
}
