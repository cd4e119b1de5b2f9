//! Encode a squeezed input and read it out: the sum of the two macronode
//! outcomes samples p(θ) of the input.

use bslcv::gaussian::C64;
use bslcv::lattice::{build_bsl, LatticeSpec};
use bslcv::measurement::OutcomeSource;
use bslcv::protocol::{run_schedule, AngleSchedule, StepAngles};
use bslcv::{GraphState, Result};

fn main() -> Result<()> {
    let base = build_bsl(&LatticeSpec::new(6, 3, 1.0))?;
    let mut input = GraphState::vacuum(1);
    input.z[(0, 0)] = C64::new(0.0, 4.0); // Var q = 1/8, Var p = 2
    let mut source = OutcomeSource::seeded(5);
    for theta in [0.0, std::f64::consts::FRAC_PI_2] {
        let schedule = AngleSchedule { wires: vec![3], steps: vec![StepAngles { rows: [(3, (theta, theta))].into() }] };
        let n = 2000;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += run_schedule(&base, &schedule, &input, &mut source)?.readouts[0].value.powi(2);
        }
        println!("theta = {theta:.3}: sample variance {:.3}", acc / n as f64);
    }
    println!("expected: 2.000 (p), 0.125 (q)");
    Ok(())
}
