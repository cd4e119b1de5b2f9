//! Compile a small program, run it with sampled outcomes, and extract the
//! logical channel.

use bslcv::compile::{compile_program, run_program, Program};
use bslcv::lattice::{build_bsl, LatticeSpec};
use bslcv::measurement::OutcomeSource;
use bslcv::protocol::extract_logical_channel;
use bslcv::{GraphState, Result};

const PROGRAM: &str = r#"{"wires": 2, "steps": [
    {"type": "single", "wire": 0, "params": {"s": 1.5}},
    {"type": "cz", "wire": 0, "params": {"phi": 1.0}},
    {"type": "single", "wire": 1, "params": {"theta": 0.4}}
]}"#;

fn main() -> Result<()> {
    let program = Program::from_json(PROGRAM)?;
    let compiled = compile_program(&program)?;
    for (i, step) in compiled.schedule.steps.iter().enumerate() {
        println!("step {i} (from op {}): {:?}", compiled.origin[i], step.rows);
    }
    let spec = LatticeSpec::new(program.min_freq_pairs(), compiled.schedule.steps.len() + 1, 10.0);
    let lat = build_bsl(&spec)?;

    let run = run_program(&lat, &program, &GraphState::vacuum(2), &mut OutcomeSource::seeded(42))?;
    println!("{} measurements; accumulated displacement {:?}", run.run.records.len(), run.displacement.as_slice());

    let ch = extract_logical_channel(&lat, &compiled.schedule)?;
    let target = program.target()?.expect("no readout");
    println!("channel error {:.2e}", ch.error_to(&target));
    println!("{}", serde_json::to_string_pretty(&ch.report_json())?);
    Ok(())
}
