//! Run every verification suite and print one line per check.

use bslcv::verify::{run_suite, Suite, VerifyOptions};
use bslcv::Result;

fn main() -> Result<()> {
    for suite in Suite::ALL {
        let report = run_suite(suite, VerifyOptions::default())?;
        println!("[{}] {}", suite, if report.pass { "pass" } else { "FAIL" });
        for c in &report.checks {
            println!("  {:4} {:<60} {:.2e}", if c.pass { "ok" } else { "FAIL" }, c.name, c.residual);
        }
    }
    Ok(())
}
