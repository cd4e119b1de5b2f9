use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, PI};

use bslcv::compile::decompose_two_v;
use bslcv::gates::{beamsplitter, cz, rotation, rotation_pair, squeeze, tms_cluster, v_gate};
use bslcv::gaussian::{max_abs, RVec, C64};
use bslcv::lattice::{build_bsl, build_stages, Lattice, LatticeSpec, ModeLabel};
use bslcv::measurement::{measure_label, q_marginal, OutcomeSource};
use bslcv::protocol::{
    encode_input, extract_logical_channel, read_outputs, rearranged_two_mode_circuit, run_schedule, two_mode_rows,
    wire_step, wire_step_prediction, control_sign, AngleSchedule, StepAngles,
};
use bslcv::verify::{bloch_messiah_sides, premeasured_edge_residual, random_composite, rearrangement_residual};
use bslcv::{graph_distance, GraphState, Symplectic};

fn random_state(seed: u64, n: usize) -> GraphState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = GraphState::vacuum(n);
    for (g, m) in random_composite(&mut rng, n, 3 * n) {
        s = s.apply_gaussian(&g, &m).unwrap();
    }
    for (i, x) in s.mean.iter_mut().enumerate() {
        *x = ((seed.wrapping_mul(31).wrapping_add(i as u64 * 17)) % 200) as f64 / 100.0 - 1.0;
    }
    s
}

fn random_symplectic(seed: u64, n: usize) -> Symplectic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = Symplectic::identity(n);
    for (g, m) in random_composite(&mut rng, n, 8) {
        total = g.embed(&m, n).then_after(&total);
    }
    total
}

fn angle() -> impl Strategy<Value = f64> {
    -FRAC_PI_2..FRAC_PI_2
}

fn angle_pair() -> impl Strategy<Value = (f64, f64)> {
    (angle(), angle()).prop_filter("non-degenerate", |(a, b)| (a - b).sin().abs() > 0.15)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gaussian_update_keeps_state_valid(seed in any::<u64>(), n in 1usize..6) {
        let s = random_state(seed, n).apply_full(&random_symplectic(seed ^ 1, n)).unwrap();
        prop_assert!(s.validate().is_empty());
    }

    #[test]
    fn gaussian_updates_compose(seed in any::<u64>(), n in 1usize..6) {
        let s = random_state(seed, n);
        let (s1, s2) = (random_symplectic(seed ^ 2, n), random_symplectic(seed ^ 3, n));
        let stepwise = s.apply_full(&s1).unwrap().apply_full(&s2).unwrap();
        let joint = s.apply_full(&s2.then_after(&s1)).unwrap();
        prop_assert!(graph_distance(&stepwise, &joint).unwrap() < 1e-10);
    }

    #[test]
    fn covariance_round_trip(seed in any::<u64>(), n in 1usize..6) {
        let s = random_state(seed, n);
        let cov = s.to_covariance().unwrap();
        prop_assert!(graph_distance(&cov.to_graph().unwrap(), &s).unwrap() < 1e-9);
        let again = cov.to_graph().unwrap().to_covariance().unwrap();
        prop_assert!(max_abs(&(again.sigma - &cov.sigma)) < 1e-9);
    }

    #[test]
    fn wigner_is_positive(seed in any::<u64>(), n in 1usize..4, x in prop::collection::vec(-2.0..2.0f64, 6)) {
        let s = random_state(seed, n);
        let point = RVec::from_iterator(2 * n, x.into_iter().take(2 * n));
        prop_assert!(s.wigner_at(&point).unwrap() > 0.0);
    }

    #[test]
    fn mean_transforms_linearly(seed in any::<u64>(), n in 1usize..6) {
        let s = random_state(seed, n);
        let t = random_symplectic(seed ^ 4, n);
        let out = s.apply_full(&t).unwrap();
        prop_assert!((out.mean - &t.s * &s.mean).amax() < 1e-12);
    }

    #[test]
    fn gates_are_symplectic(th in -PI..PI, sq in 0.05..20.0f64, g in -5.0..5.0f64, (a, b) in angle_pair()) {
        for s in [rotation(th), squeeze(sq).unwrap(), beamsplitter(), cz(g), v_gate(a, b).unwrap()] {
            prop_assert!(s.symplectic_residual() < 1e-12);
        }
    }

    #[test]
    fn minus_identity_swaps_v_angles((a, b) in angle_pair()) {
        let lhs = squeeze(-1.0).unwrap().then_after(&v_gate(a, b).unwrap());
        prop_assert!(max_abs(&(lhs.s - v_gate(b, a).unwrap().s)) < 1e-12);
    }

    #[test]
    fn double_tms_beamsplitter_symmetry(r in 0.05..4.0f64) {
        let b = beamsplitter();
        let pair = tms_cluster(r).tensor(&tms_cluster(r));
        let both = pair.apply_gaussian(&b, &[0, 2]).unwrap().apply_gaussian(&b, &[1, 3]).unwrap();
        prop_assert!(graph_distance(&both, &pair).unwrap() < 1e-12);
        let ik = pair.apply_gaussian(&b, &[0, 2]).unwrap();
        let lj = pair.apply_gaussian(&b, &[3, 1]).unwrap();
        prop_assert!(graph_distance(&ik, &lj).unwrap() < 1e-12);
    }

    #[test]
    fn beamsplitter_commutes_with_equal_rotations(th in -PI..PI) {
        let (b, r) = (beamsplitter(), rotation_pair(th, th));
        prop_assert!(max_abs(&(b.then_after(&r).s - r.then_after(&b).s)) < 1e-12);
    }

    #[test]
    fn bloch_messiah_identity(phi in 0.01..PI - 0.01) {
        let (l, r) = bloch_messiah_sides(phi).unwrap();
        prop_assert!(max_abs(&(l.s - r.s)) < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn two_v_decomposition_exists(th1 in -PI..PI, th2 in -PI..PI, s in 0.2..5.0f64) {
        let target = rotation(th2).then_after(&squeeze(s).unwrap()).then_after(&rotation(th1));
        let [v1, v2] = decompose_two_v(&target).unwrap();
        let m = v_gate(v2.0, v2.1).unwrap().then_after(&v_gate(v1.0, v1.1).unwrap());
        prop_assert!(max_abs(&(m.s - &target.s)) < 1e-6);
    }

    #[test]
    fn stages_are_valid(half in 1usize..4, t in 3usize..5, r in 0.1..3.0f64) {
        for l in build_stages(&LatticeSpec::new(2 * half, t, r)).unwrap() {
            prop_assert!(l.state.validate().is_empty());
        }
    }

    #[test]
    fn measurement_order_does_not_matter(seed in any::<u64>(), r in 0.2..2.0f64, perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle()) {
        let base = displaced_lattice(seed, r);
        let labels: Vec<ModeLabel> = base.labels[..6].to_vec();
        let thetas: Vec<f64> = (0..6).map(|i| 0.3 + 0.2 * i as f64).collect();
        let run = |order: &[usize]| {
            let mut l = base.clone();
            for &i in order {
                measure_label(&mut l, &labels[i], thetas[i], &mut OutcomeSource::zero()).unwrap();
            }
            l.state
        };
        let a = run(&[0, 1, 2, 3, 4, 5]);
        let b = run(&perm);
        prop_assert!(graph_distance(&a, &b).unwrap() < 1e-10);
    }

    #[test]
    fn conditional_states_stay_valid(seed in any::<u64>(), r in 0.2..2.0f64) {
        let mut l = displaced_lattice(seed, r);
        let mut src = OutcomeSource::seeded(seed);
        for k in 0..8 {
            let label = l.labels[0];
            measure_label(&mut l, &label, 0.1 * k as f64, &mut src).unwrap();
            prop_assert!(l.state.validate().is_empty());
        }
    }

    #[test]
    fn wire_step_law_with_outcomes(r in 0.3..2.0f64, (a, b) in angle_pair(), outs in prop::collection::vec(-2.0..2.0f64, 6), upper in any::<bool>()) {
        let w = if upper { 3 } else { 5 };
        let base = build_bsl(&LatticeSpec::new(8, 3, r)).unwrap();
        let mut input = GraphState::vacuum(1);
        input.z[(0, 0)] = C64::new(-0.2, 0.8);
        input.mean = RVec::from_vec(vec![0.1, 0.6]);
        let mut l = base.clone();
        encode_input(&mut l, 0, w, &input).unwrap();
        wire_step(&mut l, 0, w, a, b, &mut OutcomeSource::forced(outs.clone())).unwrap();
        let (out, _) = read_outputs(&l, &[(1, w)]).unwrap();
        let want = wire_step_prediction(&input, r, a, b, control_sign(w + 1), outs.try_into().unwrap()).unwrap();
        prop_assert!(graph_distance(&out, &want).unwrap() < 1e-9);
    }

    #[test]
    fn control_sign_swaps_wire_angles(r in 0.3..3.0f64, (a, b) in angle_pair()) {
        let base = build_bsl(&LatticeSpec::new(8, 3, r)).unwrap();
        let one = |w: usize, angles: (f64, f64)| {
            let sched = AngleSchedule { wires: vec![w], steps: vec![StepAngles { rows: [(w, angles)].into() }] };
            extract_logical_channel(&base, &sched).unwrap()
        };
        let minus_below = one(3, (a, b));
        let plus_below = one(5, (b, a));
        prop_assert!(max_abs(&(&minus_below.s - &plus_below.s)) < 1e-9);
        prop_assert!(max_abs(&(&minus_below.noise - &plus_below.noise)) < 1e-9);
    }

    #[test]
    fn displacement_is_linear_in_outcomes(outs in prop::collection::vec(-3.0..3.0f64, 6), (a, b) in angle_pair()) {
        let base = build_bsl(&LatticeSpec::new(6, 3, 0.9)).unwrap();
        let sched = AngleSchedule { wires: vec![3], steps: vec![StepAngles { rows: [(3, (a, b))].into() }] };
        let input = GraphState::vacuum(1);
        let mean_for = |v: Vec<f64>| run_schedule(&base, &sched, &input, &mut OutcomeSource::forced(v)).unwrap().output.mean;
        let zero = mean_for(vec![0.0; 6]);
        let total = mean_for(outs.clone()) - &zero;
        let mut sum = RVec::zeros(2);
        for (i, &m) in outs.iter().enumerate() {
            let mut e = vec![0.0; 6];
            e[i] = 1.0;
            sum += (mean_for(e) - &zero) * m;
        }
        prop_assert!((total - sum).amax() < 1e-9);
    }

    #[test]
    fn rearranged_circuit_matches_lattice(seed in any::<u64>(), r in 0.5..3.0f64) {
        prop_assert!(rearrangement_residual(r, seed).unwrap() < 1e-9);
    }
}

fn displaced_lattice(seed: u64, r: f64) -> Lattice {
    let mut l = build_bsl(&LatticeSpec::new(4, 3, r)).unwrap();
    let n = l.num_modes();
    for i in 0..2 * n {
        l.state.mean[i] = (((seed >> (i % 60)) & 7) as f64 - 3.5) * 0.2;
    }
    l
}

#[test]
fn vacuum_limit() {
    let l = build_bsl(&LatticeSpec::new(4, 3, 1e-9)).unwrap();
    assert!(graph_distance(&l.state, &GraphState::vacuum(l.num_modes())).unwrap() < 1e-6);
}

#[test]
fn sampled_outcomes_follow_the_marginal() {
    let mut s = GraphState::vacuum(3);
    s = s.apply_gaussian(&squeeze(1.7).unwrap(), &[0]).unwrap();
    s = s.apply_gaussian(&beamsplitter(), &[0, 1]).unwrap();
    s = s.apply_gaussian(&rotation(0.6), &[0]).unwrap();
    s.mean[0] = 0.4;
    let (mu, var) = q_marginal(&s, 0).unwrap();
    let mut src = OutcomeSource::seeded(99);
    let n = 100_000;
    let xs: Vec<f64> = (0..n)
        .map(|_| bslcv::measurement::measure_q(&s, 0, &mut src).unwrap().0)
        .collect();
    let m = xs.iter().sum::<f64>() / n as f64;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se_mean = (var / n as f64).sqrt();
    let se_var = var * (2.0 / (n - 1) as f64).sqrt();
    assert!((m - mu).abs() < 3.0 * se_mean, "{m} vs {mu}");
    assert!((v - var).abs() < 3.0 * se_var, "{v} vs {var}");
}

#[test]
fn premeasured_edges_converge() {
    let angles = [(0.7, -1.1), (2.0, 0.4), (-0.6, 1.3)];
    let errs: Vec<f64> = [2.0, 4.0, 8.0].iter().map(|&r| premeasured_edge_residual(r, &angles).unwrap()).collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
}

fn two_mode_off_block(r: f64, middle: (f64, f64)) -> f64 {
    let base = build_bsl(&LatticeSpec::new(8, 3, r)).unwrap();
    let (c2, c6) = (bslcv::protocol::control_angle(2), bslcv::protocol::control_angle(6));
    let angles = [c2, c2, 0.3, -0.9, middle.0, middle.1, -0.4, 0.8, c6, c6];
    let rows = two_mode_rows(3, &angles).unwrap();
    let sched = AngleSchedule { wires: vec![3, 5], steps: vec![StepAngles { rows }] };
    let s = extract_logical_channel(&base, &sched).unwrap().s;
    // (q_a, q_b, p_a, p_b): off-blocks couple a with b
    [(0, 1), (0, 3), (2, 1), (2, 3), (1, 0), (1, 2), (3, 0), (3, 2)]
        .iter()
        .map(|&(i, j)| s[(i, j)].abs())
        .fold(0.0, f64::max)
}

#[test]
fn equal_middle_angles_factorize_the_two_mode_step() {
    for r in [2.0, 5.0, 10.0, 15.0] {
        let off = two_mode_off_block(r, (0.5, 0.5));
        assert!(off < 1e-6, "r={r}: {off}");
    }
    assert!(two_mode_off_block(5.0, (0.5, -0.3)) > 1e-2);
}

#[test]
fn rearranged_circuit_runs_on_products() {
    let out = rearranged_two_mode_circuit(
        &GraphState::vacuum(2),
        &[0.7, 0.7, 0.3, -0.9, 0.5, 0.1, -0.4, 0.8, -0.7, -0.7],
        1.0,
        &mut OutcomeSource::zero(),
    )
    .unwrap();
    assert!(out.validate().is_empty());
}
