//! Build the bilayer square lattice stage by stage and check its graph.
//!
//! cargo run --example build_lattice -- 6 4 1.0

use bslcv::lattice::{build_stages, ideal_bsl_adjacency, stage_weights, LatticeSpec, STAGE_COEFFICIENTS};
use bslcv::verify::square_lattice_residual;
use bslcv::Result;

fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let freq_pairs = args.first().and_then(|s| s.parse().ok()).unwrap_or(6);
    let time_bins = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let r = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let spec = LatticeSpec::new(freq_pairs, time_bins, r);
    spec.check()?;

    let stages = build_stages(&spec)?;
    for (name, (l, stated)) in ["a", "b", "c", "d"].iter().zip(stages.iter().zip(STAGE_COEFFICIENTS)) {
        let w = stage_weights(l);
        println!(
            "({name}) |Z|/tanh2r = {:.6}..{:.6}  stated {:.6}  degree {}",
            w.min_coeff, w.max_coeff, stated, w.max_degree
        );
    }
    let bsl = &stages[3];
    let a = ideal_bsl_adjacency(&spec);
    println!("modes {}  adjacency residual {:.2e}", bsl.num_modes(), bsl.adjacency_residual(&a, 1.0));

    let (mismatches, err) = square_lattice_residual(&spec)?;
    println!("after q-measuring every Y mode: {mismatches} edge mismatches, weight error {err:.2e}");

    // first lines of the DOT export
    for line in bsl.to_dot().lines().take(5) {
        println!("{line}");
    }
    Ok(())
}
