use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bslcv::compile::{run_program, Program};
use bslcv::lattice::{build_stages, stage_weights, Lattice, LatticeSpec, STAGE_COEFFICIENTS};
use bslcv::measurement::OutcomeSource;
use bslcv::protocol::extract_logical_channel;
use bslcv::sweep::{parse_range, run_sweep, to_csv, SweepConfig, SweepParam};
use bslcv::verify::{run_suite, Suite, VerifyOptions};
use bslcv::{Error, GraphState, Result};

const EXIT_VERIFY: u8 = 4;

#[derive(Parser)]
#[command(name = "bslcv", version, about = "BSL cluster-state simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a lattice from a spec JSON and write its state JSON.
    Build {
        spec: PathBuf,
        out: PathBuf,
        /// Also write a DOT graph (default: OUT with a .dot extension).
        #[arg(long, num_args = 0..=1)]
        export_dot: Option<Option<PathBuf>>,
    },
    /// Run a program on a lattice state file.
    Run {
        state: PathBuf,
        program: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use zero for every outcome instead of sampling.
        #[arg(long)]
        forced_zero: bool,
        /// Input state JSON, one mode per wire (default: vacuum).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Directory for transcript.jsonl, final_state.json and report.json.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Also extract the program's logical channel.
        #[arg(long)]
        channel: bool,
    },
    /// Run a verification suite and print its JSON report.
    Verify {
        suite: String,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Sweep r or phi and write CSV.
    Sweep {
        /// r or phi
        param: String,
        /// start:stop:count or a comma list
        range: String,
        #[arg(long)]
        program: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Squeezing for phi sweeps.
        #[arg(long, default_value_t = 10.0)]
        r: f64,
        /// C_Z angle for r sweeps of the default program.
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
        phi: f64,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))
}

fn build(spec: &Path, out: &Path, dot: Option<Option<PathBuf>>) -> Result<()> {
    let spec: LatticeSpec = serde_json::from_str(&read(spec)?)?;
    spec.check()?;
    let stages = build_stages(&spec)?;
    for (k, l) in stages.iter().enumerate() {
        let w = stage_weights(l);
        eprintln!(
            "stage ({}): |Z|/tanh2r in [{:.6}, {:.6}] (stated {:.6}), max degree {}, self-loop residual {:.1e}",
            ["a", "b", "c", "d"][k],
            w.min_coeff,
            w.max_coeff,
            STAGE_COEFFICIENTS[k],
            w.max_degree,
            w.self_loop_residual
        );
    }
    let lat = &stages[3];
    fs::write(out, lat.to_json())?;
    eprintln!("wrote {} modes to {}", lat.num_modes(), out.display());
    if let Some(dot) = dot {
        let path = dot.unwrap_or_else(|| out.with_extension("dot"));
        fs::write(&path, lat.to_dot())?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run(
    state: &Path,
    program: &Path,
    seed: u64,
    forced_zero: bool,
    input: Option<PathBuf>,
    out_dir: &Path,
    channel: bool,
) -> Result<()> {
    let lat = Lattice::from_json(&read(state)?)?;
    let program = Program::from_json(&read(program)?)?;
    let input = match input {
        Some(p) => GraphState::from_json(&read(&p)?)?,
        None => GraphState::vacuum(program.wires),
    };
    let mut source = if forced_zero { OutcomeSource::zero() } else { OutcomeSource::seeded(seed) };
    let result = run_program(&lat, &program, &input, &mut source)?;
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("transcript.jsonl"), result.transcript())?;
    fs::write(out_dir.join("final_state.json"), result.run.lattice.to_json())?;
    let mut report = result.report_json();
    if channel {
        let ch = extract_logical_channel(&lat, &result.compiled.schedule)?;
        report["channel"] = ch.report_json();
        if let Some(target) = program.target()? {
            report["channel"]["target_error"] = ch.error_to(&target).into();
        }
    }
    let text = serde_json::to_string_pretty(&report)?;
    fs::write(out_dir.join("report.json"), &text)?;
    println!("{text}");
    eprintln!(
        "{} measurements over {} time steps; outputs in {}",
        result.run.records.len(),
        result.compiled.schedule.steps.len(),
        out_dir.display()
    );
    Ok(())
}

fn verify(suite: &str, r: Option<f64>, tolerance: Option<f64>) -> Result<bool> {
    let suite: Suite = suite.parse()?;
    let report = run_suite(suite, VerifyOptions { r, tolerance })?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    for c in &report.checks {
        eprintln!("{} {} (residual {:.3e}, tolerance {:.1e})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.residual, c.tolerance);
    }
    Ok(report.pass)
}

fn sweep(param: &str, range: &str, program: Option<PathBuf>, out: Option<PathBuf>, r: f64, phi: f64) -> Result<()> {
    let cfg = SweepConfig {
        param: param.parse::<SweepParam>()?,
        values: parse_range(range)?,
        program: program.map(|p| read(&p).and_then(|s| Program::from_json(&s))).transpose()?,
        r,
        phi,
    };
    let csv = to_csv(&run_sweep(&cfg)?);
    match out {
        Some(p) => fs::write(p, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Build { spec, out, export_dot } => build(&spec, &out, export_dot).map(|_| true),
        Cmd::Run { state, program, seed, forced_zero, input, out_dir, channel } => {
            run(&state, &program, seed, forced_zero, input, &out_dir, channel).map(|_| true)
        }
        Cmd::Verify { suite, r, tolerance } => verify(&suite, r, tolerance),
        Cmd::Sweep { param, range, program, out, r, phi } => sweep(&param, &range, program, out, r, phi).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VERIFY),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
