//! Premeasure control macronodes and read off the induced edge weights.

use bslcv::measurement::{edge_f, edge_g, edge_h};
use bslcv::verify::premeasured_edge_residual;
use bslcv::Result;

fn main() -> Result<()> {
    let angles = [(0.7, -1.1), (2.0, 0.4), (-0.6, 1.3)];
    println!("h(2,4) = {:+.6}", edge_h(angles[0], angles[1]));
    println!("g(4,2) = {:+.6}", edge_g(angles[1], angles[0]));
    println!("f(4)   = {:+.6}", edge_f(angles[1]));
    for r in [2.0, 5.0, 10.0, 15.0] {
        println!("r = {r:>4}: largest deviation {:.2e}", premeasured_edge_residual(r, &angles)?);
    }
    // equal angles on the shared control cut the wires apart
    let cut = [(0.7, -1.1), (0.9, 0.9), (-0.6, 1.3)];
    println!("f with equal angles = {}", edge_f(cut[1]));
    Ok(())
}
