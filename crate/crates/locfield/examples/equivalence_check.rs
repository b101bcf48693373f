//! The headline check in miniature: one quadratically-confined probe mode
//! inside an 8T Dirichlet box with 8 field modes, evolved exactly as a
//! Gaussian state and compared against the second-order reduced state.
//! Halving the coupling must shrink the distance by about 16x (a lambda^4
//! residual), which is what makes the detector picture trustworthy.

use locfield::oracle::{verify_equivalence, EquivalenceScenario};
use locfield::smearing::gaussian_window;
use locfield::spectrum::{box_modes, quadratic_modes_at};

fn main() -> locfield::Result<()> {
    let scenario = EquivalenceScenario {
        probe_basis: quadratic_modes_at(0.4, 0.0, 1, [4.0; 3])?,
        field_basis: box_modes(8.0, 0.0, 2)?,
        box_d: 8.0,
        window: gaussian_window(1.0)?,
        accessible: 0,
        steps: 16000,
    };
    let lambdas = [0.2, 0.1, 0.05];
    let report = verify_equivalence(&scenario, &lambdas)?;

    println!("{:>8}  {:>12}", "lambda", "delta");
    for (l, d) in report.lambdas.iter().zip(&report.deltas) {
        println!("{l:8.3}  {d:12.4e}");
    }
    println!("fitted scaling exponent {:.3} (theory: 4)", report.exponent);
    println!(
        "symplectic drift {:.1e}, purity drift {:.1e}, Fock capture {:.9}",
        report.symplectic_drift, report.purity_drift, report.truncation_capture
    );
    println!("equivalence {}", if report.pass { "holds" } else { "FAILS" });
    Ok(())
}
