//! Sweep squeezing for the default C_Z program and write CSV to stdout.

use bslcv::sweep::{parse_range, run_sweep, to_csv, SweepConfig, SweepParam};
use bslcv::Result;

fn main() -> Result<()> {
    let cfg = SweepConfig {
        param: SweepParam::R,
        values: parse_range("0.5:6:12")?,
        program: None,
        r: 10.0,
        phi: std::f64::consts::FRAC_PI_4,
    };
    print!("{}", to_csv(&run_sweep(&cfg)?));
    Ok(())
}
