//! One wire step: teleport an encoded mode through a macronode and compare
//! with the gate-level prediction N D(α) V.

use bslcv::gaussian::{RVec, C64};
use bslcv::lattice::{build_bsl, LatticeSpec};
use bslcv::measurement::OutcomeSource;
use bslcv::protocol::{control_sign, encode_input, read_outputs, wire_step, wire_step_gate, wire_step_prediction};
use bslcv::{graph_distance, GraphState, Result};

fn main() -> Result<()> {
    let r = 1.2;
    let w = 3;
    let (theta_z, theta_y) = (0.4, -0.8);
    let base = build_bsl(&LatticeSpec::new(6, 3, r))?;

    let mut input = GraphState::vacuum(1);
    input.z[(0, 0)] = C64::new(0.2, 0.9);
    input.mean = RVec::from_vec(vec![0.5, 0.1]);

    let mut lat = base.clone();
    encode_input(&mut lat, 0, w, &input)?;
    let records = wire_step(&mut lat, 0, w, theta_z, theta_y, &mut OutcomeSource::seeded(3))?;
    let (out, leak) = read_outputs(&lat, &[(1, w)])?;

    let outcomes: [f64; 6] = std::array::from_fn(|i| records[i].outcome);
    let want = wire_step_prediction(&input, r, theta_z, theta_y, control_sign(w + 1), outcomes)?;
    for rec in &records {
        println!("{} at {:+.3}: {:+.4}", rec.mode, rec.theta, rec.outcome);
    }
    println!("ideal gate:\n{}", wire_step_gate(theta_z, theta_y, control_sign(w + 1))?.s);
    println!("output Z = {:.6}, mean = {:?}", out.z[(0, 0)], out.mean.as_slice());
    println!("distance to prediction {:.2e}, leak {:.2e}", graph_distance(&out, &want)?, leak);
    Ok(())
}
