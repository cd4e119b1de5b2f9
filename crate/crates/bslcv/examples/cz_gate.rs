//! Two-mode C_Z step on the lattice and its convergence with squeezing.

use bslcv::lattice::{build_bsl, LatticeSpec};
use bslcv::protocol::{control_sign, cz_angles, cz_target, extract_logical_channel, two_mode_rows, AngleSchedule, StepAngles};
use bslcv::Result;

fn main() -> Result<()> {
    let phi = std::f64::consts::FRAC_PI_3;
    let w = 3;
    let middle = control_sign(w + 1);
    let angles = cz_angles(phi, middle)?;
    println!("angles (Z, Y) per row {}..{}: {:?}", w - 1, w + 3, angles);
    let schedule = AngleSchedule { wires: vec![w, w + 2], steps: vec![StepAngles { rows: two_mode_rows(w, &angles)? }] };
    let target = cz_target(phi, middle);
    println!("target:\n{}", target.s);
    for r in [2.0, 5.0, 10.0, 15.0] {
        let ch = extract_logical_channel(&build_bsl(&LatticeSpec::new(6, 3, r))?, &schedule)?;
        println!("r = {r:>4}: |S - target| = {:.2e}, noise = {:.2e}", ch.error_to(&target), bslcv::gaussian::max_abs(&ch.noise));
    }
    Ok(())
}
