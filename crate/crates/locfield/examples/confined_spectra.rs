//! Mode spectra of the three built-in confinements: a Dirichlet box, a
//! quadratic trap, and a tabulated 1D potential solved by finite
//! differences. Prints the lowest frequencies and the Klein-Gordon
//! normalization check for each basis.

use locfield::spectrum::{box_modes, check_orthonormality, quadratic_modes, solve_modes_fd};

fn main() -> locfield::Result<()> {
    // massless field in a unit box: omega = pi sqrt(n1^2 + n2^2 + n3^2)
    let boxed = box_modes(1.0, 0.0, 2)?;
    println!("box d=1, lowest modes:");
    for mode in boxed.modes.iter().take(4) {
        println!("  {}  omega = {:.6}", mode.index, mode.omega);
    }
    let report = check_orthonormality(&boxed, 1e-8);
    println!("  orthonormality deviation {:.2e}\n", report.max_deviation);

    // quadratic trap of width ell = 1: omega = sqrt(2 (n1+n2+n3) + 3)
    let trapped = quadratic_modes(1.0, 0.0, 2)?;
    println!("quadratic ell=1, lowest modes:");
    for mode in trapped.modes.iter().take(4) {
        println!("  {}  omega = {:.6}", mode.index, mode.omega);
    }
    let report = check_orthonormality(&trapped, 1e-8);
    println!("  orthonormality deviation {:.2e}\n", report.max_deviation);

    // the same trap in 1D, solved numerically from potential samples
    // 2V = x^2 / ell^4 (ell = 1): expect omega = sqrt(1), sqrt(3), sqrt(5)
    let n = 1024;
    let (lo, hi) = (-12.0, 12.0);
    let grid: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let values: Vec<f64> = grid.iter().map(|x| 0.5 * x * x).collect();
    let solved = solve_modes_fd(grid, values, 0.0, 3)?;
    println!("tabulated 1D quadratic, finite differences:");
    for (mode, exact) in solved.modes.iter().zip([1.0f64, 3.0, 5.0]) {
        println!(
            "  {}  omega = {:.6}  (exact {:.6}, rel err {:.1e})",
            mode.index,
            mode.omega,
            exact.sqrt(),
            (mode.omega - exact.sqrt()).abs() / exact.sqrt()
        );
    }
    Ok(())
}
