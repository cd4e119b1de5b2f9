//! Measurement-based computation on the BSL.
//!
//! Wires live on odd macronode rows and controls on even rows. Logical
//! modes of a macronode are `+ = (Z + Y)/√2` (held in the Z slot) and
//! `− = (Z − Y)/√2` (Y slot). A wire step at time bin `t` measures the wire
//! macronode `(t, w)` and the controls `(t, w ± 1)`; the encoded mode lands
//! alone in the `+` slot of `(t + 1, w)`.
//!
//! Control rows carry alternating signs: row `c` is `+` when `c ≡ 2 (mod 4)`
//! and `−` when `c ≡ 0 (mod 4)`, measured at `±π/4` on both modes. Program
//! wire `k` sits on row `2k + 3`, so the rows it touches never wrap.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, FRAC_PI_8};

use crate::error::{Error, Result};
use crate::gates::{beamsplitter, cz, noisy_v_map, rotation_pair, tms_cluster};
use crate::gaussian::{max_abs, GraphState, RMat, RVec, Symplectic};
use crate::lattice::{Lattice, ModeLabel, Pol};
use crate::measurement::{condition_q, measure_homodyne, measure_macronode, MeasurementRecord, OutcomeSource};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// Sign of an even (control) row.
pub fn control_sign(row: usize) -> Sign {
    if row % 4 == 2 {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

/// Homodyne angle of a pass-through control row.
pub fn control_angle(row: usize) -> f64 {
    control_sign(row).value() * FRAC_PI_4
}

/// Lattice row of program wire `k`.
pub fn wire_row(k: usize) -> usize {
    2 * k + 3
}

/// `L ⊕ L` with `L = [[1, 1], [1, −1]]/√2` acting on `(Z, Y)`; self-inverse.
pub fn logical_frame() -> Symplectic {
    let h = FRAC_1_SQRT_2;
    let l = RMat::from_row_slice(2, 2, &[h, h, h, -h]);
    Symplectic::from_blocks(&l, &RMat::zeros(2, 2), &RMat::zeros(2, 2), &l)
}

/// Switch a macronode between physical and logical frames.
pub fn to_logical(lat: &mut Lattice, time_bin: usize, m: usize) -> Result<()> {
    let (z, y) = lat.macronode(time_bin, m)?;
    lat.state = lat.state.apply_gaussian(&logical_frame(), &[z, y])?;
    Ok(())
}

fn canonical_order(lat: &mut Lattice) {
    let mut order: Vec<usize> = (0..lat.labels.len()).collect();
    order.sort_by_key(|&i| (lat.labels[i].time_bin, lat.labels[i].m(), lat.labels[i].pol));
    lat.state = lat.state.permute(&order);
    lat.labels = order.iter().map(|&i| lat.labels[i]).collect();
}

/// Place a `k`-mode input into the `+` logical modes of `k` macronodes.
///
/// Each `+` mode is removed by a zero-outcome `q` measurement and replaced
/// by the corresponding input mode; lattice edges of the `−` modes are kept.
pub fn encode_inputs(lat: &mut Lattice, slots: &[(usize, usize)], input: &GraphState) -> Result<()> {
    if input.num_modes() != slots.len() {
        return Err(Error::Dimension { expected: slots.len(), found: input.num_modes() });
    }
    for &(t, m) in slots {
        to_logical(lat, t, m)?;
    }
    let mut plus = Vec::with_capacity(slots.len());
    for &(t, m) in slots {
        let label = ModeLabel::from_macronode(t, m as i64, Pol::Z);
        let idx = lat.index_of(&label).ok_or_else(|| Error::MissingMode(label.to_string()))?;
        lat.state = condition_q(&lat.state, idx, 0.0)?;
        lat.labels.remove(idx);
        plus.push(label);
    }
    lat.state = lat.state.tensor(input);
    lat.labels.extend(plus);
    canonical_order(lat);
    for &(t, m) in slots {
        to_logical(lat, t, m)?;
    }
    Ok(())
}

pub fn encode_input(lat: &mut Lattice, time_bin: usize, m: usize, input: &GraphState) -> Result<()> {
    encode_inputs(lat, &[(time_bin, m)], input)
}

/// Reduced state of the `+` modes of the given macronodes, and the largest
/// coupling between those modes and the rest of the lattice.
pub fn read_outputs(lat: &Lattice, slots: &[(usize, usize)]) -> Result<(GraphState, f64)> {
    let mut l = lat.clone();
    for &(t, m) in slots {
        to_logical(&mut l, t, m)?;
    }
    let idx: Vec<usize> = slots
        .iter()
        .map(|&(t, m)| l.find(t, m, Pol::Z))
        .collect::<Result<_>>()?;
    let mut leak: f64 = 0.0;
    for &i in &idx {
        for j in 0..l.num_modes() {
            if !idx.contains(&j) {
                leak = leak.max(l.state.z[(i, j)].norm());
            }
        }
    }
    Ok((l.state.select(&idx), leak))
}

/// Angles for every measured row of one time step.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepAngles {
    /// Row -> `(θ_Z, θ_Y)`. Wire rows must be present; control rows
    /// default to their pass-through angle.
    pub rows: BTreeMap<usize, (f64, f64)>,
}

/// A measurement schedule: the wire rows and, per time step, the angles.
/// Step `s` runs on time bin `s`; inputs enter at bin 0.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AngleSchedule {
    pub wires: Vec<usize>,
    pub steps: Vec<StepAngles>,
}

impl AngleSchedule {
    pub fn validate(&self, lat: &Lattice) -> Result<()> {
        let spec = &lat.spec;
        for &w in &self.wires {
            if w % 2 == 0 {
                return Err(Error::InvalidParameter(format!("wire row {w} is even")));
            }
            if w < 3 || w + 1 > spec.freq_pairs {
                return Err(Error::LatticeExhausted(format!(
                    "wire row {w} needs rows {}..={} within 1..={}",
                    w - 1,
                    w + 1,
                    spec.freq_pairs
                )));
            }
        }
        if self.steps.len() + 1 > spec.time_bins {
            return Err(Error::LatticeExhausted(format!(
                "{} steps need {} time bins, lattice has {}",
                self.steps.len(),
                self.steps.len() + 1,
                spec.time_bins
            )));
        }
        Ok(())
    }

}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Readout {
    pub wire: usize,
    pub step: usize,
    pub theta: f64,
    /// `(m_Z + m_Y)/√2`: the `p(θ)` value of the encoded mode.
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub records: Vec<MeasurementRecord>,
    pub readouts: Vec<Readout>,
    pub lattice: Lattice,
    /// Indices into `schedule.wires` still carrying a mode at the end.
    pub live_wires: Vec<usize>,
    /// Joint state of the live wires' output modes.
    pub output: GraphState,
    /// Largest coupling of the outputs to the rest of the lattice.
    pub leak: f64,
}

fn is_readout(angles: (f64, f64)) -> bool {
    (angles.0 - angles.1).sin().abs() < crate::gates::DEGENERATE_SIN
}

/// Encode `input` (one mode per wire) at bin 0 and run the schedule.
pub fn run_schedule(
    base: &Lattice,
    schedule: &AngleSchedule,
    input: &GraphState,
    source: &mut OutcomeSource,
) -> Result<RunOutput> {
    schedule.validate(base)?;
    let mut lat = base.clone();
    let slots: Vec<(usize, usize)> = schedule.wires.iter().map(|&w| (0, w)).collect();
    encode_inputs(&mut lat, &slots, input)?;
    let mut live: Vec<usize> = (0..schedule.wires.len()).collect();
    let mut records = Vec::new();
    let mut readouts = Vec::new();
    for (t, step) in schedule.steps.iter().enumerate() {
        let mut controls = BTreeSet::new();
        let mut ended = Vec::new();
        for &k in &live {
            let w = schedule.wires[k];
            let angles = *step
                .rows
                .get(&w)
                .ok_or_else(|| Error::InvalidParameter(format!("step {t} has no angles for wire row {w}")))?;
            let rec = measure_macronode(&mut lat, t, w, angles.0, angles.1, source)?;
            if is_readout(angles) {
                readouts.push(Readout {
                    wire: k,
                    step: t,
                    theta: angles.0,
                    value: FRAC_1_SQRT_2 * (rec[0].outcome + rec[1].outcome),
                });
                ended.push(k);
            }
            records.extend(rec);
            controls.insert(w - 1);
            controls.insert(w + 1);
        }
        for c in controls {
            let angles = step.rows.get(&c).copied().unwrap_or((control_angle(c), control_angle(c)));
            records.extend(measure_macronode(&mut lat, t, c, angles.0, angles.1, source)?);
        }
        live.retain(|k| !ended.contains(k));
    }
    let tf = schedule.steps.len();
    let slots: Vec<(usize, usize)> = live.iter().map(|&k| (tf, schedule.wires[k])).collect();
    let (output, leak) = if slots.is_empty() {
        (GraphState::vacuum(0), 0.0)
    } else {
        read_outputs(&lat, &slots)?
    };
    Ok(RunOutput { records, readouts, lattice: lat, live_wires: live, output, leak })
}

/// Single-wire step on row `w` at bin `t` with pass-through controls.
pub fn wire_step(
    lat: &mut Lattice,
    time_bin: usize,
    w: usize,
    theta_z: f64,
    theta_y: f64,
    source: &mut OutcomeSource,
) -> Result<Vec<MeasurementRecord>> {
    if w % 2 == 0 {
        return Err(Error::InvalidParameter(format!("row {w} is a control row")));
    }
    let spec = lat.spec.clone();
    let (above, below) = (spec.above(w), spec.below(w));
    if control_sign(above) == control_sign(below) {
        return Err(Error::InvalidParameter(format!("controls around row {w} do not alternate")));
    }
    let mut out = Vec::new();
    out.extend(measure_macronode(lat, time_bin, w, theta_z, theta_y, source)?);
    for c in [above, below] {
        let a = control_angle(c);
        out.extend(measure_macronode(lat, time_bin, c, a, a, source)?);
    }
    Ok(out)
}

/// Expected single-mode map of a wire step from the gate-level formulas:
/// `N D(α_c) V(θ_above, θ_below) N D(α_w) V(θ_Z, θ_Y)`.
///
/// `outcomes` are in measurement order `(w_Z, w_Y, above_Z, above_Y, below_Z, below_Y)`.
pub fn wire_step_prediction(
    input: &GraphState,
    r: f64,
    theta_z: f64,
    theta_y: f64,
    below: Sign,
    outcomes: [f64; 6],
) -> Result<GraphState> {
    let [wz, wy, az, ay, bz, by] = outcomes;
    let s = noisy_v_map(input, 0, r, wz, wy, theta_z, theta_y)?;
    let th_above = below.flip().value() * FRAC_PI_4;
    let th_below = below.value() * FRAC_PI_4;
    let mj = FRAC_1_SQRT_2 * (az + ay);
    let mk = -FRAC_1_SQRT_2 * (bz - by);
    noisy_v_map(&s, 0, r, mj, mk, th_above, th_below)
}

/// Logical gate implemented by one wire step (ideal, no noise).
pub fn wire_step_gate(theta_z: f64, theta_y: f64, below: Sign) -> Result<Symplectic> {
    match below {
        Sign::Minus => crate::gates::v_gate(theta_z, theta_y),
        Sign::Plus => crate::gates::v_gate(theta_y, theta_z),
    }
}

/// Angle vector for a C_Z step given the sign of the middle control row.
///
/// Order: rows `w−1, w, w+1, w+2, w+3`, each as `(θ_Z, θ_Y)`.
pub fn cz_angles(phi: f64, middle: Sign) -> Result<[f64; 10]> {
    if !(phi > 0.0 && phi < std::f64::consts::PI) {
        return Err(Error::InvalidParameter(format!("phi must lie in (0, π), got {phi}")));
    }
    let s = middle.flip().value();
    let q = FRAC_PI_4;
    let e = FRAC_PI_8;
    let base = [q, q, -e, 3.0 * e, q + s * phi, q - s * phi, -e, 3.0 * e, q, q];
    Ok(base.map(|x| s * x))
}

/// `[R(∓3π/4) ⊗ R(±π/4)] C_Z(2 cot φ)`, upper signs for a `−` middle row.
pub fn cz_target(phi: f64, middle: Sign) -> Symplectic {
    let s = middle.flip().value();
    let g = 2.0 / phi.tan();
    rotation_pair(-s * 3.0 * FRAC_PI_4, s * FRAC_PI_4).then_after(&cz(g))
}

/// Insert a two-mode step on upper wire row `w` into a step's angle map.
pub fn two_mode_rows(w: usize, angles: &[f64; 10]) -> Result<BTreeMap<usize, (f64, f64)>> {
    if w % 2 == 0 || w < 3 {
        return Err(Error::InvalidParameter(format!("row {w} cannot host the upper wire")));
    }
    let outer_ok = |row: usize, a: f64, b: f64| {
        let want = control_angle(row);
        (a - want).abs() < 1e-12 && (b - want).abs() < 1e-12
    };
    if !outer_ok(w - 1, angles[0], angles[1]) || !outer_ok(w + 3, angles[8], angles[9]) {
        return Err(Error::InvalidParameter(
            "outer control rows must be measured at their pass-through angle".into(),
        ));
    }
    let mut rows = BTreeMap::new();
    for k in 0..5 {
        rows.insert(w - 1 + k, (angles[2 * k], angles[2 * k + 1]));
    }
    Ok(rows)
}

/// Two-mode step on wire rows `w` and `w + 2` at bin `t`.
pub fn two_mode_step(
    lat: &mut Lattice,
    time_bin: usize,
    w: usize,
    angles: &[f64; 10],
    source: &mut OutcomeSource,
) -> Result<Vec<MeasurementRecord>> {
    let rows = two_mode_rows(w, angles)?;
    let mut out = Vec::new();
    for (row, (a, b)) in rows {
        out.extend(measure_macronode(lat, time_bin, row, a, b, source)?);
    }
    Ok(out)
}

/// Effective operation on `k` encoded modes.
#[derive(Clone, Debug)]
pub struct LogicalChannel {
    /// Mean-response matrix, `2k × 2k`, (q…, p…) ordering.
    pub s: RMat,
    /// Output mean for zero input mean.
    pub d: RVec,
    /// `Σ_out − S Σ_in Sᵀ` for vacuum input.
    pub noise: RMat,
    /// `max |S Ω Sᵀ − Ω|`.
    pub symplectic_residual: f64,
    /// Largest coupling of the outputs to the rest of the lattice.
    pub leak: f64,
}

impl LogicalChannel {
    pub fn modes(&self) -> usize {
        self.s.nrows() / 2
    }

    /// Largest entry of `S − target`.
    pub fn error_to(&self, target: &Symplectic) -> f64 {
        max_abs(&(&self.s - &target.s))
    }

    pub fn report_json(&self) -> serde_json::Value {
        let rows = |m: &RMat| -> Vec<f64> {
            let mut v = Vec::with_capacity(m.len());
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    v.push(m[(i, j)]);
                }
            }
            v
        };
        serde_json::json!({
            "modes": self.modes(),
            "S": rows(&self.s),
            "d": self.d.iter().copied().collect::<Vec<_>>(),
            "noise": rows(&self.noise),
            "residuals": {
                "symplectic": self.symplectic_residual,
                "leak": self.leak,
            }
        })
    }
}

/// Probe a `k`-mode map with vacuum inputs displaced along each basis vector.
pub fn probe_channel(
    k: usize,
    mut run: impl FnMut(&GraphState) -> Result<(GraphState, f64)>,
) -> Result<LogicalChannel> {
    let vac = GraphState::vacuum(k);
    let (zero_out, leak0) = run(&vac)?;
    if zero_out.num_modes() != k {
        return Err(Error::Dimension { expected: k, found: zero_out.num_modes() });
    }
    let d = zero_out.mean.clone();
    let mut s = RMat::zeros(2 * k, 2 * k);
    let mut leak = leak0;
    for col in 0..2 * k {
        let mut input = vac.clone();
        input.mean[col] = 1.0;
        let (out, l) = run(&input)?;
        leak = leak.max(l);
        s.set_column(col, &(&out.mean - &d));
    }
    let sigma_out = zero_out.covariance_unchecked()?.sigma;
    let noise = sigma_out - &s * s.transpose() * 0.5;
    let sym = Symplectic { s: s.clone() };
    Ok(LogicalChannel { symplectic_residual: sym.symplectic_residual(), s, d, noise, leak })
}

/// Channel of a schedule on a lattice with forced-zero outcomes.
pub fn extract_logical_channel(base: &Lattice, schedule: &AngleSchedule) -> Result<LogicalChannel> {
    extract_logical_channel_with(base, schedule, &[])
}

/// As [`extract_logical_channel`], with the listed outcomes used for `d`
/// (missing outcomes are zero). `S` does not depend on the outcomes.
pub fn extract_logical_channel_with(
    base: &Lattice,
    schedule: &AngleSchedule,
    outcomes: &[f64],
) -> Result<LogicalChannel> {
    let k = schedule.wires.len();
    let probe = |input: &GraphState, values: Vec<f64>| -> Result<(GraphState, f64)> {
        let out = run_schedule(base, schedule, input, &mut OutcomeSource::forced(values))?;
        if out.live_wires.len() != k {
            return Err(Error::InvalidParameter("schedule reads out a wire; no channel to extract".into()));
        }
        Ok((out.output, out.leak))
    };
    let total = count_measurements(base, schedule);
    let mut zeros = vec![0.0; total];
    for (z, o) in zeros.iter_mut().zip(outcomes) {
        *z = *o;
    }
    let mut ch = probe_channel(k, |inp| probe(inp, vec![0.0; total]))?;
    if outcomes.iter().any(|&x| x != 0.0) {
        let (out, _) = probe(&GraphState::vacuum(k), zeros)?;
        ch.d = out.mean;
    }
    Ok(ch)
}

/// Number of homodyne measurements a schedule performs.
pub fn count_measurements(base: &Lattice, schedule: &AngleSchedule) -> usize {
    let _ = base;
    let mut live: Vec<usize> = (0..schedule.wires.len()).collect();
    let mut total = 0;
    for step in &schedule.steps {
        let mut controls = BTreeSet::new();
        let mut ended = Vec::new();
        for &k in &live {
            let w = schedule.wires[k];
            total += 2;
            if step.rows.get(&w).map(|&a| is_readout(a)).unwrap_or(false) {
                ended.push(k);
            }
            controls.insert(w - 1);
            controls.insert(w + 1);
        }
        total += 2 * controls.len();
        live.retain(|k| !ended.contains(k));
    }
    total
}

/// Dual-rail teleportation of `mode` through a fresh two-mode cluster pair.
///
/// `B(mode, a)` with the pair's first mode `a`, then `p(θ_j)` on `mode` and
/// `p(θ_k)` on `a`; the pair's second mode takes the place of `mode`.
pub fn teleport(
    state: &GraphState,
    mode: usize,
    theta_j: f64,
    theta_k: f64,
    r: f64,
    source: &mut OutcomeSource,
) -> Result<(GraphState, [f64; 2])> {
    let n = state.num_modes();
    let s = state.tensor(&tms_cluster(r));
    let s = s.apply_gaussian(&beamsplitter(), &[mode, n])?;
    let (mj, s) = measure_homodyne(&s, mode, theta_j, source)?;
    let (mk, s) = measure_homodyne(&s, n - 1, theta_k, source)?;
    // the output sits last; move it back to `mode`
    let mut order: Vec<usize> = (0..n - 1).collect();
    order.insert(mode, n - 1);
    Ok((s.permute(&order), [mj, mk]))
}

/// The resource of the beamsplitter-rearranged two-mode step: two dual-rail
/// teleports, `B(a, b)`, two more teleports, `B(a, b)`.
///
/// `angles` use the ten-angle layout of [`cz_angles`].
pub fn rearranged_two_mode_circuit(
    input: &GraphState,
    angles: &[f64; 10],
    r: f64,
    source: &mut OutcomeSource,
) -> Result<GraphState> {
    if input.num_modes() != 2 {
        return Err(Error::Dimension { expected: 2, found: input.num_modes() });
    }
    let (s, _) = teleport(input, 0, angles[2], angles[3], r, source)?;
    let (s, _) = teleport(&s, 1, angles[6], angles[7], r, source)?;
    let s = s.apply_gaussian(&beamsplitter(), &[0, 1])?;
    let (s, _) = teleport(&s, 0, angles[0], angles[4], r, source)?;
    let (s, _) = teleport(&s, 1, angles[5], angles[8], r, source)?;
    s.apply_gaussian(&beamsplitter(), &[0, 1])
}

/// Ideal two-mode gate `B [V(θ1, θ3Z) ⊗ V(θ3Y, θ5)] B [V(θ2Z, θ2Y) ⊗ V(θ4Z, θ4Y)]`.
pub fn two_mode_gate(angles: &[f64; 10]) -> Result<Symplectic> {
    use crate::gates::v_gate;
    let first = v_gate(angles[2], angles[3])?.direct_sum(&v_gate(angles[6], angles[7])?);
    let second = v_gate(angles[0], angles[4])?.direct_sum(&v_gate(angles[5], angles[8])?);
    let b = beamsplitter();
    Ok(b.then_after(&second).then_after(&b).then_after(&first))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{graph_distance, C64};
    use crate::lattice::{build_bsl, LatticeSpec};
    use std::f64::consts::PI;

    #[test]
    fn control_signs_alternate() {
        assert_eq!(control_sign(2), Sign::Plus);
        assert_eq!(control_sign(4), Sign::Minus);
        assert_eq!(control_sign(6), Sign::Plus);
        assert_eq!(wire_row(0), 3);
    }

    #[test]
    fn logical_frame_is_involutive_symplectic() {
        let l = logical_frame();
        assert!(l.is_symplectic(1e-15));
        assert!(max_abs(&(l.then_after(&l).s - RMat::identity(4, 4))) < 1e-15);
    }

    #[test]
    fn encode_vacuum_keeps_state_up_to_local_basis() {
        let spec = LatticeSpec::new(6, 3, 0.8);
        let base = build_bsl(&spec).unwrap();
        let mut l = base.clone();
        encode_input(&mut l, 0, 3, &GraphState::vacuum(1)).unwrap();
        assert_eq!(l.labels, base.labels);
        assert!(l.state.validate().is_empty());
        // the + mode is now isolated
        let (out, leak) = read_outputs(&l, &[(0, 3)]).unwrap();
        assert!(leak < 1e-15);
        assert!(graph_distance(&out, &GraphState::vacuum(1)).unwrap() < 1e-15);
    }

    #[test]
    fn encoded_mean_spreads_symmetrically() {
        let spec = LatticeSpec::new(6, 3, 0.8);
        let mut l = build_bsl(&spec).unwrap();
        let mut input = GraphState::vacuum(1);
        input.mean[0] = 1.0;
        encode_input(&mut l, 0, 3, &input).unwrap();
        let n = l.num_modes();
        let (z, y) = l.macronode(0, 3).unwrap();
        assert!((l.state.mean[z] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((l.state.mean[y] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(l.state.mean[n + z].abs() < 1e-15);
    }

    #[test]
    fn readout_reports_input_p() {
        // q-squeezed input: p has variance e^{2}/2; read out p on + only
        let spec = LatticeSpec::new(6, 3, 1.0);
        let base = build_bsl(&spec).unwrap();
        let mut input = GraphState::vacuum(1);
        input.z[(0, 0)] = C64::new(0.0, 1f64.exp());
        let sched = AngleSchedule {
            wires: vec![3],
            steps: vec![StepAngles { rows: [(3, (0.0, 0.0))].into_iter().collect() }],
        };
        let mut src = OutcomeSource::seeded(11);
        let mut acc = 0.0;
        let trials = 400;
        for _ in 0..trials {
            let out = run_schedule(&base, &sched, &input, &mut src).unwrap();
            assert!(out.live_wires.is_empty());
            acc += out.readouts[0].value.powi(2);
        }
        let var = acc / trials as f64;
        let want = 0.5 * 1f64.exp();
        assert!((var - want).abs() < 0.25, "{var} vs {want}");
    }

    #[test]
    fn wire_step_matches_prediction_with_outcomes() {
        let r = 0.7;
        let spec = LatticeSpec::new(8, 3, r);
        let base = build_bsl(&spec).unwrap();
        let mut input = GraphState::vacuum(1);
        input.z[(0, 0)] = C64::new(0.3, 0.7);
        input.mean = RVec::from_vec(vec![0.4, -0.2]);
        let outs = [0.3, -1.1, 0.6, 0.25, -0.45, 0.9];
        for (w, below) in [(3, Sign::Minus), (5, Sign::Plus)] {
            let (tz, ty) = (0.3, 1.4);
            let mut l = base.clone();
            encode_input(&mut l, 0, w, &input).unwrap();
            wire_step(&mut l, 0, w, tz, ty, &mut OutcomeSource::forced(outs.to_vec())).unwrap();
            let (out, leak) = read_outputs(&l, &[(1, w)]).unwrap();
            assert!(leak < 1e-12);
            let want = wire_step_prediction(&input, r, tz, ty, below, outs).unwrap();
            assert!(graph_distance(&out, &want).unwrap() < 1e-9, "row {w}: {:?} vs {:?}", out, want);
        }
    }

    #[test]
    fn cz_angle_vectors() {
        let a = cz_angles(PI / 4.0, Sign::Minus).unwrap();
        assert!((a[4] - (FRAC_PI_4 + PI / 4.0)).abs() < 1e-15);
        assert!((2.0 / (PI / 4.0).tan() - 2.0).abs() < 1e-12);
        let b = cz_angles(PI / 2.0, Sign::Plus).unwrap();
        assert!((b[0] + FRAC_PI_4).abs() < 1e-15);
        assert!(cz_angles(0.0, Sign::Plus).is_err());
        // φ = π/2 leaves only local rotations
        let t = cz_target(PI / 2.0, Sign::Minus);
        assert!(max_abs(&(t.s - rotation_pair(-3.0 * FRAC_PI_4, FRAC_PI_4).s)) < 1e-12);
    }

    #[test]
    fn ideal_two_mode_gate_at_cz_angles() {
        for middle in [Sign::Minus, Sign::Plus] {
            for phi in [PI / 6.0, PI / 3.0, 2.0] {
                let g = two_mode_gate(&cz_angles(phi, middle).unwrap()).unwrap();
                assert!(max_abs(&(g.s - cz_target(phi, middle).s)) < 1e-10);
            }
        }
    }

    #[test]
    fn two_mode_rows_checks_outer_controls() {
        let mut a = cz_angles(1.0, Sign::Minus).unwrap();
        assert!(two_mode_rows(3, &a).is_ok());
        a[0] = 0.1;
        assert!(two_mode_rows(3, &a).is_err());
    }

    fn cz_schedule(w: usize, phi: f64) -> (AngleSchedule, Sign) {
        let middle = control_sign(w + 1);
        let rows = two_mode_rows(w, &cz_angles(phi, middle).unwrap()).unwrap();
        (AngleSchedule { wires: vec![w, w + 2], steps: vec![StepAngles { rows }] }, middle)
    }

    #[test]
    fn lattice_cz_converges_for_both_middle_signs() {
        for w in [3, 5] {
            let mut errs = Vec::new();
            for r in [2.0, 5.0, 10.0] {
                let base = build_bsl(&LatticeSpec::new(8, 3, r)).unwrap();
                let (sched, middle) = cz_schedule(w, PI / 3.0);
                let ch = extract_logical_channel(&base, &sched).map_err(|e| format!("{w} {r}: {e}")).unwrap();
                assert!(ch.leak < 1e-12);
                errs.push(ch.error_to(&cz_target(PI / 3.0, middle)));
            }
            assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
            assert!(errs[2] < 1e-6, "{errs:?}");
        }
    }

    #[test]
    fn rearranged_circuit_reproduces_lattice_step() {
        let r = 2.0;
        let base = build_bsl(&LatticeSpec::new(8, 3, r)).unwrap();
        let (c4, c8) = (control_angle(4), control_angle(8));
        let angles = [c4, c4, 0.3, -0.9, 1.1, 0.2, -0.4, 0.5, c8, c8];
        let rows = two_mode_rows(5, &angles).unwrap();
        let sched = AngleSchedule { wires: vec![5, 7], steps: vec![StepAngles { rows }] };
        let lattice = extract_logical_channel(&base, &sched).unwrap();
        let circuit = probe_channel(2, |inp| {
            Ok((rearranged_two_mode_circuit(inp, &angles, r, &mut OutcomeSource::zero())?, 0.0))
        })
        .unwrap();
        assert!(max_abs(&(&lattice.s - &circuit.s)) < 1e-9);
        assert!(max_abs(&(&lattice.noise - &circuit.noise)) < 1e-9);
    }
}
