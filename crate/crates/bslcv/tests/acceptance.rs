//! One PASS/FAIL line per acceptance criterion. Fails if any criterion fails.

use std::time::Instant;

use bslcv::lattice::{build_bsl, LatticeSpec};
use bslcv::measurement::{measure_label, OutcomeSource};
use bslcv::verify::{cz_channel_error, run_suite, square_lattice_residual, Check, Suite, VerifyOptions};

struct Line {
    id: usize,
    what: &'static str,
    checks: Vec<Check>,
    note: Option<String>,
}

impl Line {
    fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn print(&self) {
        println!("{} criterion {:>2}: {}", if self.pass() { "PASS" } else { "FAIL" }, self.id, self.what);
        if let Some(n) = &self.note {
            println!("       {n}");
        }
        for c in self.checks.iter().filter(|c| !c.pass) {
            println!("       {}: residual {:.3e} > {:.1e}", c.name, c.residual, c.tolerance);
        }
    }
}

fn suite(suite: Suite) -> Vec<Check> {
    run_suite(suite, VerifyOptions::default()).unwrap().checks
}

fn suite_filtered(s: Suite, keep: impl Fn(&str) -> bool) -> Vec<Check> {
    suite(s).into_iter().filter(|c| keep(&c.name)).collect()
}

fn square_lattice() -> Vec<Check> {
    let (mism, err) = square_lattice_residual(&LatticeSpec::new(6, 6, 1.0)).unwrap();
    vec![
        Check::fixed("edge-set mismatches", mism as f64, 0.0),
        Check::new("weights", err, 1e-9),
    ]
}

fn cz() -> Vec<Check> {
    let mut checks = suite(Suite::Cz);
    // the other control sign reaches the mirrored target
    let errs: Vec<f64> = [5.0, 10.0, 15.0].iter().map(|&r| cz_channel_error(r, std::f64::consts::FRAC_PI_4, 5).unwrap()).collect();
    checks.push(Check::decreasing("lower wire pair decreasing", &errs));
    checks.push(Check::new("lower wire pair at r = 15", errs[2], 1e-5));
    checks
}

fn scale() -> (Vec<Check>, String) {
    let start = Instant::now();
    let mut lat = build_bsl(&LatticeSpec::new(20, 10, 1.0)).unwrap();
    let modes = lat.num_modes();
    let mut src = OutcomeSource::zero();
    while let Some(&label) = lat.labels.first() {
        measure_label(&mut lat, &label, 0.0, &mut src).unwrap();
    }
    let secs = start.elapsed().as_secs_f64();
    (vec![Check::fixed("seconds", secs, 60.0)], format!("{modes} modes built and measured in {secs:.2} s"))
}

fn line(id: usize, what: &'static str, checks: Vec<Check>) -> Line {
    Line { id, what, checks, note: None }
}

#[test]
fn acceptance() {
    let lines = vec![
        line(1, "graph calculus vs covariance conjugation", suite(Suite::GraphCalculus)),
        line(2, "pipeline stage weights and self-loops", suite_filtered(Suite::BslWeights, |n| n.starts_with("stage"))),
        line(3, "square-lattice reduction", square_lattice()),
        line(4, "V-gate law", suite(Suite::VGate)),
        line(5, "C_Z construction", cz()),
        line(6, "control premeasurement edge weights", suite(Suite::EdgeWeights)),
        line(7, "double two-mode-squeezer beamsplitter identities", suite(Suite::AppendixC)),
        line(8, "commutation, Bloch-Messiah and rearranged circuit", suite(Suite::AppendixD)),
        line(9, "nullifier scaling", suite(Suite::Noise)),
        {
            let (checks, note) = scale();
            Line { note: Some(note), ..line(10, "20 x 10 build and forced-zero sweep", checks) }
        },
    ];
    for l in &lines {
        assert!(!l.checks.is_empty(), "criterion {} has no checks", l.id);
        l.print();
    }
    let failed: Vec<usize> = lines.iter().filter(|l| !l.pass()).map(|l| l.id).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
