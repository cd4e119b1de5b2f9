//! Gaussian pure states as complex graphs: gates, covariance round trip,
//! Wigner function.

use bslcv::gates::{beamsplitter, rotation, squeeze};
use bslcv::gaussian::RVec;
use bslcv::{graph_distance, GraphState, Result};

fn main() -> Result<()> {
    let mut state = GraphState::vacuum(2);
    state = state.apply_gaussian(&squeeze(2.0)?, &[0])?;
    state = state.apply_gaussian(&rotation(0.3), &[1])?;
    state = state.apply_gaussian(&beamsplitter(), &[0, 1])?;
    println!("Z =\n{}", state.z);

    let cov = state.to_covariance()?;
    println!("sigma =\n{}", cov.sigma);
    let back = cov.to_graph()?;
    println!("round trip distance {:.2e}", graph_distance(&state, &back)?);

    let w0 = state.wigner_at(&RVec::zeros(4))?;
    println!("W(0) = {w0:.6}  (pure state: 1/pi^2 = {:.6})", 1.0 / std::f64::consts::PI.powi(2));
    println!("{}", state.to_json());
    Ok(())
}
