//! Scenario-driven front end: mode spectra, response sweeps, reduced states
//! and the exact-evolution equivalence check, all emitted as CSV/JSON.
//!
//! Exit codes: 0 success, 2 solver failure, 3 two-path consistency failure,
//! 4 equivalence failure, 64 usage or scenario-schema error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;

use locfield::oracle::verify_equivalence;
use locfield::perturbation::{ReducedState, ResponseEngine};
use locfield::scenario::{fmt_f64, write_atomic, Scenario};
use locfield::LocfieldError;

const EXIT_SOLVER: u8 = 2;
const EXIT_CONSISTENCY: u8 = 3;
const EXIT_EQUIVALENCE: u8 = 4;
const EXIT_USAGE: u8 = 64;

/// Localized-field detector toolkit.
///
/// All physical quantities in the scenario file are dimensionless, expressed
/// in units of the switching timescale T (lengths and times in T, energies
/// and frequencies in 1/T, lambda in 1/T^2). The default output directory
/// can be set with the LOCFIELD_OUT environment variable.
#[derive(Parser)]
#[command(name = "locfield", version, about, verbatim_doc_comment)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// scenario TOML file
    #[arg(long)]
    scenario: PathBuf,
    /// output directory (default: scenario [output].dir, then $LOCFIELD_OUT)
    #[arg(long)]
    out: Option<String>,
    /// worker threads for sweeps (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// override the relative quadrature tolerance
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the confined-mode spectrum; write modes.json and profiles.csv
    Modes(Common),
    /// Sweep the detector response over the scenario gaps; write response.csv
    Response(Common),
    /// Compute the reduced state and its operator-route twin; write state.json
    State(Common),
    /// Run the exact-evolution equivalence check; write verify.json
    Verify(Common),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version are not usage errors
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (common, run): (&Common, fn(&Scenario, &Common) -> Result<u8, LocfieldError>) =
        match &cli.command {
            Command::Modes(c) => (c, cmd_modes),
            Command::Response(c) => (c, cmd_response),
            Command::State(c) => (c, cmd_state),
            Command::Verify(c) => (c, cmd_verify),
        };
    if let Some(n) = common.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let scenario = match Scenario::load(&common.scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("locfield: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(&scenario, common) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("locfield: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &LocfieldError) -> u8 {
    match e {
        LocfieldError::Scenario(_) | LocfieldError::InvalidParameter(_) => EXIT_USAGE,
        LocfieldError::Consistency { .. } => EXIT_CONSISTENCY,
        _ => EXIT_SOLVER,
    }
}

fn apply_tolerance(scenario: &Scenario, common: &Common) -> Scenario {
    let mut s = scenario.clone();
    if let Some(tol) = common.tolerance {
        s.quad.rel_tol = Some(tol);
    }
    s
}

fn cmd_modes(scenario: &Scenario, common: &Common) -> Result<u8, LocfieldError> {
    let basis = scenario.build_basis()?;
    let dir = scenario.output_dir(common.out.as_deref());

    write_atomic(&dir.join("modes.json"), &(basis.spectrum_json() + "\n"))?;

    // per-mode profile factor along the first axis (or the 1D profile)
    let mut csv = String::from("index,x,phi\n");
    for mode in &basis.modes {
        let samples = 101usize;
        let (lo, hi) = profile_range(mode);
        for i in 0..samples {
            let x = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
            let value = mode
                .axis_eval(0, x)
                .unwrap_or_else(|| mode.eval(std::slice::from_ref(&x)));
            csv.push_str(&format!("{},{},{}\n", mode.index, fmt_f64(x), fmt_f64(value)));
        }
    }
    write_atomic(&dir.join("profiles.csv"), &csv)?;

    for mode in basis.modes.iter().take(5) {
        println!("{}  {:.6}", mode.index, mode.omega);
    }
    Ok(0)
}

fn profile_range(mode: &locfield::spectrum::Mode) -> (f64, f64) {
    use locfield::spectrum::ModeProfile;
    match &mode.profile {
        ModeProfile::BoxSine { d, .. } => (0.0, *d),
        ModeProfile::HermiteGauss { ell, n, center } => {
            let reach = 6.0 * ell * (2.0 * n[0] as f64 + 1.0).sqrt();
            (center[0] - reach, center[0] + reach)
        }
        ModeProfile::Sampled1D { grid, .. } => (grid[0], grid[grid.len() - 1]),
    }
}

fn cmd_response(scenario: &Scenario, common: &Common) -> Result<u8, LocfieldError> {
    let scenario = apply_tolerance(scenario, common);
    if scenario.sweep.gaps.is_empty() {
        return Err(LocfieldError::Scenario(
            "response sweep needs a non-empty [sweep].gaps list".into(),
        ));
    }
    let t_scale = scenario.build_window()?.timescale();
    let ell = scenario.length_scale();
    let dir = scenario.output_dir(common.out.as_deref());

    let mut csv = String::from("Omega,T,ell,lambda,P,err_P,Re_C20,Im_C20,path_delta\n");
    let mut failures: Vec<String> = Vec::new();
    let mut engine: Option<ResponseEngine> = None;
    for &lambda in &scenario.lambdas {
        let cfg = scenario.coupling_config(lambda)?;
        // the smeared kernel is independent of lambda and gap: build once
        let eng = match &engine {
            Some(prev) => ResponseEngine::with_kernel(&cfg, (*prev.kernel).clone())?,
            None => ResponseEngine::new(&cfg)?,
        };
        for (gap, point) in scenario
            .sweep
            .gaps
            .iter()
            .zip(eng.response_curve(&scenario.sweep.gaps))
        {
            match point {
                Ok(p) => {
                    csv.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{}\n",
                        fmt_f64(p.gap),
                        fmt_f64(t_scale),
                        fmt_f64(ell),
                        fmt_f64(lambda),
                        fmt_f64(p.p),
                        fmt_f64(p.err),
                        fmt_f64(p.c20.re),
                        fmt_f64(p.c20.im),
                        fmt_f64(p.path_delta),
                    ));
                }
                Err(e) => failures.push(format!("lambda={lambda} Omega={gap}: {e}")),
            }
        }
        engine = Some(eng);
    }
    write_atomic(&dir.join("response.csv"), &csv)?;
    if failures.is_empty() {
        Ok(0)
    } else {
        for row in &failures {
            eprintln!("locfield: consistency failure at {row}");
        }
        Ok(EXIT_CONSISTENCY)
    }
}

fn matrix_json(state: &ReducedState) -> serde_json::Value {
    let grab = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
        (0..state.dim)
            .map(|i| (0..state.dim).map(|j| f(&state.rho[(i, j)])).collect())
            .collect()
    };
    json!({
        "dim": state.dim,
        "order": state.order,
        "re": grab(|z| z.re),
        "im": grab(|z| z.im),
        "positivity_ok": state.positivity_ok,
    })
}

fn cmd_state(scenario: &Scenario, common: &Common) -> Result<u8, LocfieldError> {
    let scenario = apply_tolerance(scenario, common);
    let dir = scenario.output_dir(common.out.as_deref());
    let mut entries = Vec::new();
    let mut engine: Option<ResponseEngine> = None;
    for &lambda in &scenario.lambdas {
        let cfg = scenario.coupling_config(lambda)?;
        let gap = cfg.smearing.gap;
        let eng = match &engine {
            Some(prev) => ResponseEngine::with_kernel(&cfg, (*prev.kernel).clone())?,
            None => ResponseEngine::new(&cfg)?,
        };
        let direct = eng.reduced_state(gap)?;
        let udw = eng.udw_reduced_state(gap)?;
        entries.push(json!({
            "lambda": lambda,
            "Omega": gap,
            "reduced_state": matrix_json(&direct),
            "udw_reduced_state": matrix_json(&udw),
            "frobenius_distance": direct.frobenius_distance(&udw),
        }));
        engine = Some(eng);
    }
    let doc = serde_json::to_string_pretty(&json!({ "states": entries }))
        .expect("state serialization");
    write_atomic(&dir.join("state.json"), &(doc + "\n"))?;
    Ok(0)
}

fn cmd_verify(scenario: &Scenario, common: &Common) -> Result<u8, LocfieldError> {
    if scenario.lambdas.len() < 2 {
        return Err(LocfieldError::Scenario(
            "equivalence verification needs at least 2 lambda values".into(),
        ));
    }
    let dir = scenario.output_dir(common.out.as_deref());
    let eq = scenario.equivalence_scenario()?;
    let report = verify_equivalence(&eq, &scenario.lambdas)?;
    let doc = serde_json::to_string_pretty(&json!({
        "lambdas": report.lambdas,
        "deltas": report.deltas,
        "exponent": report.exponent,
        "symplectic_drift": report.symplectic_drift,
        "purity_drift": report.purity_drift,
        "truncation_capture": report.truncation_capture,
        "pass": report.pass,
    }))
    .expect("report serialization");
    write_atomic(&dir.join("verify.json"), &(doc + "\n"))?;
    println!(
        "equivalence exponent {:.4} (deltas {:?}) -> {}",
        report.exponent,
        report.deltas,
        if report.pass { "pass" } else { "FAIL" }
    );
    if report.pass {
        Ok(0)
    } else {
        Ok(EXIT_EQUIVALENCE)
    }
}
