//! Detector response of the ground mode of a tight quadratic trap: sweep
//! the gap and print the excitation probability computed twice, once from
//! the time-domain smeared kernel and once from the momentum-space
//! representation. The two columns must agree to the path tolerance.

use locfield::kernel::FieldSpec;
use locfield::perturbation::{CouplingConfig, QuadControls, ResponseEngine};
use locfield::smearing::{build_lambda, gaussian_window};
use locfield::spectrum::quadratic_modes;

fn main() -> locfield::Result<()> {
    let basis = quadratic_modes(0.2, 0.0, 1)?;
    let cfg = CouplingConfig {
        lambda: 0.01,
        smearing: build_lambda(gaussian_window(1.0)?, &basis.modes[0]),
        field: FieldSpec::new(0.0, 1e-5)?,
        quad: QuadControls::default(),
    };
    let engine = ResponseEngine::new(&cfg)?;

    let gaps: Vec<f64> = (1..=12).map(|i| 0.25 * i as f64).collect();
    println!("{:>6}  {:>13}  {:>13}  {:>10}", "Omega", "P (direct)", "P (momentum)", "delta");
    for &gap in &gaps {
        let p = engine.probability(gap)?;
        println!(
            "{:6.2}  {:13.6e}  {:13.6e}  {:10.2e}",
            gap, p.p_direct, p.p_independent, p.path_delta
        );
    }
    Ok(())
}
