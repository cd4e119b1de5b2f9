//! Numerical verification suites.
//!
//! Each suite returns a report of named checks with residuals. A check
//! passes when its residual is at most its tolerance; structural checks
//! (monotonicity, edge-set equality) are encoded as residuals with a fixed
//! bound that tolerance overrides do not touch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gates::{
    apply_noise_map, beamsplitter, cz, noisy_v_map, rotation, rotation_pair, squeeze, squeeze_pair,
    squeezing_factors, tms_cluster, v_gate,
};
use crate::gaussian::{graph_distance, max_abs, GraphState, RMat, RVec, Symplectic, C64};
use crate::lattice::{
    build_bsl, build_bsl_physical_order, build_stages, ideal_bsl_adjacency, stage_weights, Lattice, LatticeSpec, Pol,
    STAGE_COEFFICIENTS,
};
use crate::measurement::{condition_q, edge_f, edge_g, edge_h, premeasure_controls, ControlAngles, OutcomeSource};
use crate::protocol::{
    control_angle, control_sign, cz_angles, cz_target, encode_input, extract_logical_channel, probe_channel,
    read_outputs, rearranged_two_mode_circuit, to_logical, two_mode_gate, two_mode_rows, wire_step,
    wire_step_prediction, AngleSchedule, StepAngles,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    GraphCalculus,
    BslWeights,
    VGate,
    Cz,
    EdgeWeights,
    AppendixC,
    AppendixD,
    Noise,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::GraphCalculus,
        Suite::BslWeights,
        Suite::VGate,
        Suite::Cz,
        Suite::EdgeWeights,
        Suite::AppendixC,
        Suite::AppendixD,
        Suite::Noise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::GraphCalculus => "graph-calculus",
            Suite::BslWeights => "bsl-weights",
            Suite::VGate => "v-gate",
            Suite::Cz => "cz",
            Suite::EdgeWeights => "edge-weights-9-11",
            Suite::AppendixC => "appendix-c",
            Suite::AppendixD => "appendix-d",
            Suite::Noise => "noise",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip)]
    fixed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Check { name: name.into(), residual, tolerance, pass: residual <= tolerance, fixed: false }
    }

    /// A check whose bound is structural and ignores tolerance overrides.
    pub fn fixed(name: impl Into<String>, residual: f64, bound: f64) -> Self {
        Check { fixed: true, ..Check::new(name, residual, bound) }
    }

    /// Strictly decreasing sequence: residual is the largest ratio of
    /// consecutive values, bound 1 (exclusive).
    pub fn decreasing(name: impl Into<String>, values: &[f64]) -> Self {
        let worst = values.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
        let mut c = Check::fixed(name, worst, 1.0);
        c.pass = values.windows(2).all(|w| w[1] < w[0]);
        c
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl SuiteReport {
    fn new(suite: Suite, checks: Vec<Check>, tolerance: Option<f64>) -> Self {
        let checks: Vec<Check> = checks
            .into_iter()
            .map(|c| match tolerance {
                Some(t) if !c.fixed => Check::new(c.name, c.residual, t),
                _ => c,
            })
            .collect();
        let pass = checks.iter().all(|c| c.pass);
        SuiteReport { suite: suite.name().into(), checks, pass }
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().filter(|c| !c.fixed).map(|c| c.residual).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct VerifyOptions {
    /// Squeezing override; suites that scan several `r` use only this one.
    pub r: Option<f64>,
    /// Tolerance override for every non-structural check.
    pub tolerance: Option<f64>,
}

pub fn run_suite(suite: Suite, opts: VerifyOptions) -> Result<SuiteReport> {
    let rs = |default: &[f64]| opts.r.map(|r| vec![r]).unwrap_or_else(|| default.to_vec());
    let checks = match suite {
        Suite::GraphCalculus => graph_calculus_checks(200, 8, 1)?,
        Suite::BslWeights => bsl_weight_checks(opts.r.unwrap_or(1.0))?,
        Suite::VGate => v_gate_checks(&rs(&[0.5, 1.0, 2.0]), 50)?,
        Suite::Cz => cz_checks(&rs(&[5.0, 10.0, 15.0]))?,
        Suite::EdgeWeights => edge_weight_checks(opts.r.unwrap_or(15.0), 20)?,
        Suite::AppendixC => appendix_c_checks(&rs(&[0.3, 1.0, 3.0]))?,
        Suite::AppendixD => appendix_d_checks(50, opts.r.unwrap_or(2.0))?,
        Suite::Noise => noise_checks(&rs(&[0.2, 0.5, 1.0, 2.0, 4.0]))?,
    };
    Ok(SuiteReport::new(suite, checks, opts.tolerance))
}

fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0xb51_0000 + tag)
}

/// Random composite of rotations, squeezers and beamsplitters.
pub fn random_composite(rng: &mut ChaCha8Rng, n: usize, gates: usize) -> Vec<(Symplectic, Vec<usize>)> {
    let mut out = Vec::with_capacity(gates);
    for _ in 0..gates {
        let kind = if n < 2 { rng.random_range(0..2) } else { rng.random_range(0..3) };
        let i = rng.random_range(0..n);
        match kind {
            0 => out.push((rotation(rng.random_range(-PI..PI)), vec![i])),
            1 => out.push((squeeze(rng.random_range(0.4..2.5)).expect("nonzero"), vec![i])),
            _ => {
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                out.push((beamsplitter(), vec![i, j]));
            }
        }
    }
    out
}

/// Largest graph distance between the `Z` update and covariance
/// conjugation over `trials` random composites on up to `max_modes` modes.
pub fn graph_calculus_residual(trials: usize, max_modes: usize, seed: u64) -> Result<f64> {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = rng.random_range(1..=max_modes);
        // random pure starting state with a mean
        let mut state = GraphState::vacuum(n);
        for (s, m) in random_composite(&mut rng, n, 2 * n) {
            state = state.apply_gaussian(&s, &m)?;
        }
        for x in state.mean.iter_mut() {
            *x = rng.random_range(-1.0..1.0);
        }
        let mut cov = state.to_covariance()?;
        for (s, m) in random_composite(&mut rng, n, 12) {
            state = state.apply_gaussian(&s, &m)?;
            cov = cov.transform(&s.embed(&m, n));
        }
        worst = worst.max(graph_distance(&state, &cov.to_graph()?)?);
    }
    Ok(worst)
}

fn graph_calculus_checks(trials: usize, max_modes: usize, seed: u64) -> Result<Vec<Check>> {
    let start = std::time::Instant::now();
    let res = graph_calculus_residual(trials, max_modes, seed)?;
    let secs = start.elapsed().as_secs_f64();
    Ok(vec![
        Check::new(format!("{trials} random R/S/B composites vs covariance conjugation"), res, 1e-9),
        Check::fixed("runtime seconds", secs, 10.0),
    ])
}

/// Per-stage deviation of off-diagonal weights from `𝒞 tanh 2r` and of
/// self-loops from `i sech 2r`.
pub fn stage_residuals(spec: &LatticeSpec, coefficients: &[f64; 4]) -> Result<Vec<(f64, f64)>> {
    let stages = build_stages(spec)?;
    Ok(stages
        .iter()
        .zip(coefficients)
        .map(|(l, c)| {
            let w = stage_weights(l);
            let coeff = (w.min_coeff - c).abs().max((w.max_coeff - c).abs()) * squeezing_factors(spec.r).0;
            (coeff, w.self_loop_residual.max(w.off_diagonal_imag))
        })
        .collect())
}

/// Reduce the BSL by `q` measurements of every Y mode; return the edge-set
/// mismatch count and the largest weight error against the square lattice.
pub fn square_lattice_residual(spec: &LatticeSpec) -> Result<(usize, f64)> {
    let lat = build_bsl(spec)?;
    let mut state = lat.state.clone();
    let mut labels = lat.labels.clone();
    let mut i = 0;
    while i < labels.len() {
        if labels[i].pol == Pol::Y {
            state = condition_q(&state, i, 0.0)?;
            labels.remove(i);
        } else {
            i += 1;
        }
    }
    let (t, eps) = squeezing_factors(spec.r);
    let w = STAGE_COEFFICIENTS[3] * t;
    let period = 2 * spec.time_bins as i64;
    let coord = |k: usize| {
        let m = labels[k].m() as i64;
        let c = 2 * labels[k].time_bin as i64 - (m % 2);
        (c, m)
    };
    let wrap = |d: i64, p: i64| {
        let d = d.rem_euclid(p);
        d.min(p - d)
    };
    let mut mismatches = 0;
    let mut err: f64 = 0.0;
    for a in 0..labels.len() {
        err = err.max((state.z[(a, a)] - C64::new(0.0, eps)).norm());
        for b in a + 1..labels.len() {
            let (ca, ma) = coord(a);
            let (cb, mb) = coord(b);
            let edge = wrap(ca - cb, period) == 1 && wrap(ma - mb, spec.freq_pairs as i64) == 1;
            let z = state.z[(a, b)];
            let present = z.norm() > 1e-9;
            if present != edge {
                mismatches += 1;
            }
            err = err.max(if edge { (z.re.abs() - w).abs() + z.im.abs() } else { z.norm() });
        }
    }
    Ok((mismatches, err))
}

fn bsl_weight_checks(r: f64) -> Result<Vec<Check>> {
    let spec = LatticeSpec::new(6, 6, r);
    let mut checks = Vec::new();
    for (k, (coeff, loops)) in stage_residuals(&spec, &STAGE_COEFFICIENTS)?.into_iter().enumerate() {
        let stage = ["a", "b", "c", "d"][k];
        checks.push(Check::new(
            format!("stage ({stage}) off-diagonal |Z| = {:.6} tanh 2r", STAGE_COEFFICIENTS[k]),
            coeff,
            1e-10,
        ));
        checks.push(Check::new(format!("stage ({stage}) self-loops = i sech 2r"), loops, 1e-10));
    }
    let lat = build_bsl(&spec)?;
    let ideal = ideal_bsl_adjacency(&spec);
    checks.push(Check::new("final graph = i sech 2r I + tanh 2r A", lat.adjacency_residual(&ideal, 1.0), 1e-10));
    let phys = build_bsl_physical_order(&spec)?;
    checks.push(Check::new("phase delays last gives the same state", graph_distance(&lat.state, &phys.state)?, 1e-10));
    let a2 = &ideal * &ideal - RMat::identity(ideal.nrows(), ideal.nrows());
    checks.push(Check::new("A^2 = I", max_abs(&a2), 1e-12));
    let sq = LatticeSpec::new(6, 4, r);
    let (mism, werr) = square_lattice_residual(&sq)?;
    checks.push(Check::fixed("square-lattice edge set mismatches", mism as f64, 0.0));
    checks.push(Check::new("square-lattice weights", werr, 1e-9));
    Ok(checks)
}

fn random_angle_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    loop {
        let a = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
        let b = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
        if (a - b).sin().abs() > 0.15 {
            return (a, b);
        }
    }
}

fn probe_input() -> GraphState {
    let mut s = GraphState::vacuum(1);
    s.z[(0, 0)] = C64::new(0.4, 1.3);
    s.mean = RVec::from_vec(vec![0.3, -0.7]);
    s
}

/// Largest distance between forced-zero wire steps and the gate-level
/// prediction over `pairs` random angle pairs on rows 3 and 5.
pub fn v_gate_law_residual(r: f64, pairs: usize, seed: u64) -> Result<f64> {
    let mut rng = rng(seed);
    let base = build_bsl(&LatticeSpec::new(8, 3, r))?;
    let input = probe_input();
    let mut worst: f64 = 0.0;
    for k in 0..pairs {
        let w = if k % 2 == 0 { 3 } else { 5 };
        let (a, b) = random_angle_pair(&mut rng);
        let mut lat = base.clone();
        encode_input(&mut lat, 0, w, &input)?;
        wire_step(&mut lat, 0, w, a, b, &mut OutcomeSource::zero())?;
        let (out, _) = read_outputs(&lat, &[(1, w)])?;
        let want = wire_step_prediction(&input, r, a, b, control_sign(w + 1), [0.0; 6])?;
        worst = worst.max(graph_distance(&out, &want)?);
    }
    Ok(worst)
}

fn v_gate_checks(rs: &[f64], pairs: usize) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (i, &r) in rs.iter().enumerate() {
        checks.push(Check::new(format!("wire step = N D V prediction, r = {r}"), v_gate_law_residual(r, pairs, 10 + i as u64)?, 1e-9));
    }
    let minus = v_gate(-FRAC_PI_4, FRAC_PI_4)?;
    let plus = v_gate(FRAC_PI_4, -FRAC_PI_4)?;
    checks.push(Check::new("V(-π/4, π/4) = S(-1)", max_abs(&(minus.s - squeeze(-1.0)?.s)), 1e-12));
    checks.push(Check::new("V(π/4, -π/4) = S(1)", max_abs(&(plus.s - squeeze(1.0)?.s)), 1e-12));
    let mut rng = rng(19);
    let mut swap: f64 = 0.0;
    for _ in 0..pairs {
        let (a, b) = random_angle_pair(&mut rng);
        let lhs = squeeze(-1.0)?.then_after(&v_gate(a, b)?);
        swap = swap.max(max_abs(&(lhs.s - v_gate(b, a)?.s)));
    }
    checks.push(Check::new("S(-1) V(a, b) = V(b, a)", swap, 1e-12));
    Ok(checks)
}

/// Channel error of the lattice `C_Z` step on wires `w`, `w + 2`.
pub fn cz_channel_error(r: f64, phi: f64, w: usize) -> Result<f64> {
    let base = build_bsl(&LatticeSpec::new(8, 3, r))?;
    let middle = control_sign(w + 1);
    let rows = two_mode_rows(w, &cz_angles(phi, middle)?)?;
    let sched = AngleSchedule { wires: vec![w, w + 2], steps: vec![StepAngles { rows }] };
    Ok(extract_logical_channel(&base, &sched)?.error_to(&cz_target(phi, middle)))
}

fn cz_checks(rs: &[f64]) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (w, label) in [(3, "middle row -"), (5, "middle row +")] {
        for phi in [PI / 6.0, PI / 4.0, PI / 3.0] {
            let errs: Vec<f64> = rs.iter().map(|&r| cz_channel_error(r, phi, w)).collect::<Result<_>>()?;
            let last = *errs.last().expect("nonempty r list");
            checks.push(Check::new(
                format!("C_Z channel error, φ = {phi:.4}, {label}, r = {}", rs[rs.len() - 1]),
                last,
                1e-5,
            ));
            if errs.len() > 1 {
                checks.push(Check::decreasing(format!("C_Z error decreasing in r, φ = {phi:.4}, {label}"), &errs));
            }
        }
    }
    Ok(checks)
}

/// Largest deviation of post-premeasurement edge weights from the closed
/// forms `f`, `g`, `h` for controls on rows 2, 4, 6 with the given angles.
pub fn premeasured_edge_residual(r: f64, angles: &[(f64, f64); 3]) -> Result<f64> {
    let spec = LatticeSpec::new(8, 3, r);
    let t0 = 1;
    let controls: Vec<ControlAngles> = [2, 4, 6]
        .iter()
        .zip(angles)
        .map(|(&m, &(z, y))| ControlAngles { time_bin: t0, m, theta_z: z, theta_y: y })
        .collect();
    let mut lat = premeasure_controls(&build_bsl(&spec)?, &controls)?;
    for w in [3, 5] {
        to_logical(&mut lat, t0, w)?;
        to_logical(&mut lat, t0 + 1, w)?;
    }
    let minus = |l: &Lattice, w| l.find(t0, w, Pol::Y);
    let plus = |l: &Lattice, w| l.find(t0 + 1, w, Pol::Z);
    let re = |i: usize, j: usize| lat.state.z[(i, j)].re;
    let mut worst: f64 = 0.0;
    for (w, above, below) in [(3, angles[0], angles[1]), (5, angles[1], angles[2])] {
        let (wm, wp) = (minus(&lat, w)?, plus(&lat, w)?);
        let h = edge_h(above, below);
        worst = worst.max((re(wm, wm) - h).abs());
        worst = worst.max((re(wp, wp) - h).abs());
        worst = worst.max((re(wm, wp) - edge_g(below, above)).abs());
    }
    let f = edge_f(angles[1]);
    let (am, ap, bm, bp) = (minus(&lat, 3)?, plus(&lat, 3)?, minus(&lat, 5)?, plus(&lat, 5)?);
    for (i, j, want) in [(am, bm, f), (am, bp, f), (bm, ap, -f), (ap, bp, -f)] {
        worst = worst.max((re(i, j) - want).abs());
    }
    Ok(worst)
}

fn random_control_angles(rng: &mut ChaCha8Rng) -> [(f64, f64); 3] {
    let mut one = || loop {
        let x = rng.random_range(-PI..PI);
        if x.sin().abs() > 0.2 {
            return x;
        }
    };
    [(one(), one()), (one(), one()), (one(), one())]
}

fn edge_weight_checks(r: f64, assignments: usize) -> Result<Vec<Check>> {
    let mut rng = rng(6);
    let mut worst: f64 = 0.0;
    for _ in 0..assignments {
        worst = worst.max(premeasured_edge_residual(r, &random_control_angles(&mut rng))?);
    }
    Ok(vec![Check::new(format!("premeasured f, g, h edge weights at r = {r}, {assignments} assignments"), worst, 1e-5)])
}

fn appendix_c_checks(rs: &[f64]) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let b = beamsplitter();
    for &r in rs {
        // modes (i, j, k, l) = (0, 1, 2, 3); pairs (i, j) and (k, l)
        let pair = tms_cluster(r).tensor(&tms_cluster(r));
        let both = pair.apply_gaussian(&b, &[0, 2])?.apply_gaussian(&b, &[1, 3])?;
        checks.push(Check::new(format!("B_ik B_jl leaves the state invariant, r = {r}"), graph_distance(&both, &pair)?, 1e-12));
        let ik = pair.apply_gaussian(&b, &[0, 2])?;
        let lj = pair.apply_gaussian(&b, &[3, 1])?;
        checks.push(Check::new(format!("B_ik alone = B_lj alone, r = {r}"), graph_distance(&ik, &lj)?, 1e-12));
    }
    Ok(checks)
}

/// `B R(φ/2, −φ/2) S(tan φ/2, tan φ/2) R(φ/2, −φ/2) B` and
/// `R(π, 0) C_Z(2 cot φ) R(−π/2, −π/2)`.
pub fn bloch_messiah_sides(phi: f64) -> Result<(Symplectic, Symplectic)> {
    let b = beamsplitter();
    let r = rotation_pair(phi / 2.0, -phi / 2.0);
    let s = squeeze_pair((phi / 2.0).tan(), (phi / 2.0).tan())?;
    let lhs = b.then_after(&r).then_after(&s).then_after(&r).then_after(&b);
    let rhs = rotation_pair(PI, 0.0)
        .then_after(&cz(2.0 / phi.tan()))
        .then_after(&rotation_pair(-FRAC_PI_2, -FRAC_PI_2));
    Ok((lhs, rhs))
}

/// Channel difference between the lattice two-mode step on rows 5, 7 and
/// the rearranged teleportation circuit, for random wire/middle angles.
pub fn rearrangement_residual(r: f64, seed: u64) -> Result<f64> {
    let mut rng = rng(seed);
    let base = build_bsl(&LatticeSpec::new(8, 3, r))?;
    let (c4, c8) = (control_angle(4), control_angle(8));
    let mut inner = [0.0; 6];
    loop {
        for x in inner.iter_mut() {
            *x = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
        }
        let ok = [(inner[0], inner[1]), (inner[2], inner[3]), (inner[4], inner[5])]
            .iter()
            .all(|(a, b)| (a - b).sin().abs() > 0.15)
            && (c4 - inner[2]).sin().abs() > 0.15
            && (inner[3] - c8).sin().abs() > 0.15;
        if ok {
            break;
        }
    }
    let angles = [c4, c4, inner[0], inner[1], inner[2], inner[3], inner[4], inner[5], c8, c8];
    let rows = two_mode_rows(5, &angles)?;
    let sched = AngleSchedule { wires: vec![5, 7], steps: vec![StepAngles { rows }] };
    let lattice = extract_logical_channel(&base, &sched)?;
    let circuit = probe_channel(2, |inp| {
        Ok((rearranged_two_mode_circuit(inp, &angles, r, &mut OutcomeSource::zero())?, 0.0))
    })?;
    Ok(max_abs(&(&lattice.s - &circuit.s)).max(max_abs(&(&lattice.noise - &circuit.noise))))
}

fn appendix_d_checks(samples: usize, r: f64) -> Result<Vec<Check>> {
    let mut rng = rng(8);
    let b = beamsplitter();
    let (mut commute, mut bm, mut gate): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..samples {
        let theta = rng.random_range(-PI..PI);
        let rr = rotation_pair(theta, theta);
        commute = commute.max(max_abs(&(b.then_after(&rr).s - rr.then_after(&b).s)));
        let phi = rng.random_range(0.05..PI - 0.05);
        let (lhs, rhs) = bloch_messiah_sides(phi)?;
        bm = bm.max(max_abs(&(lhs.s - rhs.s)));
        for middle in [crate::protocol::Sign::Minus, crate::protocol::Sign::Plus] {
            let g = two_mode_gate(&cz_angles(phi, middle)?)?;
            gate = gate.max(max_abs(&(g.s - cz_target(phi, middle).s)));
        }
    }
    Ok(vec![
        Check::new(format!("B R(θ,θ) = R(θ,θ) B, {samples} samples"), commute, 1e-12),
        Check::new(format!("Bloch-Messiah identity, {samples} φ"), bm, 1e-10),
        Check::new(format!("two-mode gate at C_Z angles = rotated C_Z, {samples} φ"), gate, 1e-10),
        Check::new(format!("lattice step = rearranged circuit, r = {r}"), rearrangement_residual(r, 81)?, 1e-9),
    ])
}

/// Variances of the nullifiers `p_i − tanh 2r Σ_j A_ij q_j` of the BSL.
pub fn nullifier_variances(spec: &LatticeSpec) -> Result<Vec<f64>> {
    let lat = build_bsl(spec)?;
    let a = ideal_bsl_adjacency(spec);
    let (t, _) = squeezing_factors(spec.r);
    let sigma = lat.state.covariance_unchecked()?.sigma;
    let n = lat.num_modes();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut c = RVec::zeros(2 * n);
        for j in 0..n {
            c[j] = -t * a[(i, j)];
        }
        c[n + i] = 1.0;
        out.push(c.dot(&(&sigma * &c)));
    }
    Ok(out)
}

fn noise_checks(rs: &[f64]) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let input = probe_input();
    checks.push(Check::new(
        "N(r = 20) is the identity",
        graph_distance(&apply_noise_map(&input, 0, 20.0)?, &input)?,
        1e-8,
    ));
    let v = v_gate(0.3, -0.9)?;
    checks.push(Check::new(
        "noisy V map at r = 20 is the V-gate",
        graph_distance(&noisy_v_map(&input, 0, 20.0, 0.0, 0.0, 0.3, -0.9)?, &input.apply_gaussian(&v, &[0])?)?,
        1e-8,
    ));
    let mut maxima = Vec::new();
    for &r in rs {
        let vars = nullifier_variances(&LatticeSpec::new(4, 4, r))?;
        let (_, eps) = squeezing_factors(r);
        let hi = vars.iter().copied().fold(f64::MIN, f64::max);
        let lo = vars.iter().copied().fold(f64::MAX, f64::min);
        checks.push(Check::new(format!("nullifier variances equal ε/2, r = {r}"), (hi - 0.5 * eps).abs().max((lo - 0.5 * eps).abs()), 1e-10));
        maxima.push(hi);
    }
    if maxima.len() > 1 {
        checks.push(Check::decreasing("nullifier variance decreasing in r", &maxima));
    }
    let last = *maxima.last().expect("nonempty r list");
    checks.push(Check::fixed(format!("nullifier variance at r = {}", rs[rs.len() - 1]), last, 1e-3));
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn tolerance_override_applies_to_numeric_checks_only() {
        let checks = vec![Check::new("a", 1e-13, 1e-9), Check::decreasing("b", &[3.0, 2.0])];
        let rep = SuiteReport::new(Suite::Noise, checks, Some(0.0));
        assert!(!rep.checks[0].pass);
        assert!(rep.checks[1].pass);
        assert!(!rep.pass);
    }

    #[test]
    fn decreasing_check_is_strict() {
        assert!(!Check::decreasing("x", &[1.0, 1.0]).pass);
        assert!(Check::decreasing("x", &[1.0, 0.5, 0.1]).pass);
    }

    #[test]
    fn appendix_identities_hold() {
        let rep = run_suite(Suite::AppendixC, VerifyOptions::default()).unwrap();
        assert!(rep.pass, "{rep:?}");
        let (l, r) = bloch_messiah_sides(1.1).unwrap();
        assert!(max_abs(&(l.s - r.s)) < 1e-10);
    }

    #[test]
    fn premeasured_edges_at_high_squeezing() {
        let res = premeasured_edge_residual(15.0, &[(0.7, -1.1), (2.0, 0.4), (-0.6, 1.3)]).unwrap();
        assert!(res < 1e-5, "{res}");
    }

    #[test]
    fn square_lattice_reduction() {
        let (mism, err) = square_lattice_residual(&LatticeSpec::new(6, 4, 0.9)).unwrap();
        assert_eq!(mism, 0);
        assert!(err < 1e-9);
    }

    #[test]
    fn nullifiers_shrink() {
        let a = nullifier_variances(&LatticeSpec::new(4, 3, 0.5)).unwrap();
        let b = nullifier_variances(&LatticeSpec::new(4, 3, 2.0)).unwrap();
        assert!(b.iter().fold(0.0f64, |m, &x| m.max(x)) < a.iter().fold(f64::MAX, |m, &x| m.min(x)));
    }
}
