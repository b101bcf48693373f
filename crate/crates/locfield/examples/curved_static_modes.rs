//! Confined modes on a static curved 1D background: a spatially varying
//! lapse redshifts the local oscillation frequency, and the induced volume
//! element enters the Klein-Gordon normalization. With lapse and metric set
//! to 1 the solver reduces to the flat finite-difference path, which is the
//! sanity check printed at the end.

use locfield::spectrum::{check_orthonormality, solve_modes_fd, static_curved_modes_1d};

fn main() -> locfield::Result<()> {
    let n = 1024;
    let (lo, hi) = (-10.0, 10.0);
    let grid: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    // quadratic confinement 2V = x^2, mild gravitational-well lapse
    let values: Vec<f64> = grid.iter().map(|x| 0.5 * x * x).collect();
    let lapse: Vec<f64> = grid.iter().map(|x| 1.0 - 0.05 / (1.0 + 0.2 * x * x)).collect();
    let metric = vec![1.0; n];

    let curved = static_curved_modes_1d(
        grid.clone(),
        lapse,
        metric,
        values.clone(),
        0.0,
        4,
    )?;
    println!("curved background (central redshift 5%):");
    for mode in &curved.modes {
        println!("  {}  omega = {:.6}", mode.index, mode.omega);
    }
    let report = check_orthonormality(&curved, 1e-4);
    println!("  weighted orthonormality deviation {:.2e}", report.max_deviation);

    let flat = solve_modes_fd(grid, values, 0.0, 4)?;
    println!("flat background, same potential:");
    for (c, f) in curved.modes.iter().zip(&flat.modes) {
        println!(
            "  {}  curved {:.6}  flat {:.6}  shift {:+.4}",
            c.index,
            c.omega,
            f.omega,
            c.omega - f.omega
        );
    }
    Ok(())
}
