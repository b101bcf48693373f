//! Second-order reduced state of the accessible mode, computed twice: from
//! the closed-form matrix elements (excitation probability on the diagonal,
//! 0-2 coherence off it) and from the time-ordered Dyson expansion of a
//! gapped two-level-style detector coupled through the same smeared kernel.
//! The two density matrices must agree at order lambda^2.

use locfield::kernel::FieldSpec;
use locfield::perturbation::{CouplingConfig, QuadControls, ResponseEngine};
use locfield::smearing::{build_lambda, gaussian_window};
use locfield::spectrum::quadratic_modes;

fn main() -> locfield::Result<()> {
    let basis = quadratic_modes(0.2, 0.0, 1)?;
    let mut smearing = build_lambda(gaussian_window(1.0)?, &basis.modes[0]);
    // probe the detector at a gap of 2/T rather than the bare mode frequency
    smearing.gamma = 2.0 / smearing.gap;
    smearing.gap = 2.0;
    let cfg = CouplingConfig {
        lambda: 0.01,
        smearing,
        field: FieldSpec::new(0.0, 1e-5)?,
        quad: QuadControls::default(),
    };
    let engine = ResponseEngine::new(&cfg)?;

    let direct = engine.reduced_state(2.0)?;
    let dyson = engine.udw_reduced_state(2.0)?;

    let show = |name: &str, s: &locfield::perturbation::ReducedState| {
        println!("{name} (order {}):", s.order);
        for i in 0..s.dim {
            let row: Vec<String> = (0..s.dim)
                .map(|j| format!("{:+.3e}{:+.3e}i", s.rho[(i, j)].re, s.rho[(i, j)].im))
                .collect();
            println!("  [{}]", row.join(", "));
        }
        println!(
            "  trace {:.12}, hermiticity {:.2e}, eigenvalues {:?}",
            s.trace().re,
            s.hermiticity_deviation(),
            s.eigenvalues().iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>()
        );
    };
    show("matrix-element route", &direct);
    show("Dyson-expansion route", &dyson);
    println!("Frobenius distance {:.3e}", direct.frobenius_distance(&dyson));
    Ok(())
}
