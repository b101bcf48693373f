//! Symmetric tridiagonal eigensolver: Sturm-sequence bisection for the
//! lowest eigenvalues and inverse iteration for the eigenvectors.

/// Number of eigenvalues of the symmetric tridiagonal matrix (diag, off)
/// strictly below `lambda`, from the sign count of the LDL^T pivots.
fn sturm_count(diag: &[f64], off: &[f64], lambda: f64) -> usize {
    let n = diag.len();
    let mut count = 0;
    let mut d = diag[0] - lambda;
    if d < 0.0 {
        count += 1;
    }
    for i in 1..n {
        if d == 0.0 {
            d = 1e-300;
        }
        d = diag[i] - lambda - off[i - 1] * off[i - 1] / d;
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Lowest `count` eigenvalues by bisection, ascending.
pub fn lowest_eigenvalues(diag: &[f64], off: &[f64], count: usize) -> Vec<f64> {
    let n = diag.len();
    assert!(count <= n);
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 }
            + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    (0..count)
        .map(|k| {
            let (mut a, mut b) = (lo, hi);
            while b - a > 1e-14 * (1.0 + a.abs().max(b.abs())) {
                let mid = 0.5 * (a + b);
                if sturm_count(diag, off, mid) > k {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// Solve (T - shift I) x = rhs with partial pivoting; T tridiagonal.
fn shifted_solve(diag: &[f64], off: &[f64], shift: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    // band storage: sub, main, sup1, sup2 (fill-in from pivoting)
    let mut a = vec![0.0; n]; // subdiagonal entries a[i] = T[i, i-1]
    let mut b: Vec<f64> = diag.iter().map(|&d| d - shift).collect();
    let mut c = vec![0.0; n]; // superdiagonal c[i] = T[i, i+1]
    let mut e = vec![0.0; n]; // second superdiagonal fill-in
    for i in 1..n {
        a[i] = off[i - 1];
        c[i - 1] = off[i - 1];
    }
    let mut x = rhs.to_vec();
    for i in 0..n - 1 {
        if a[i + 1].abs() > b[i].abs() {
            // swap rows i and i+1 (columns i, i+1, i+2 of each)
            let (r1b, r1c, r1e) = (b[i], c[i], e[i]);
            let (r2a, r2b, r2c) = (a[i + 1], b[i + 1], c[i + 1]);
            b[i] = r2a;
            c[i] = r2b;
            e[i] = r2c;
            a[i + 1] = r1b;
            b[i + 1] = r1c;
            c[i + 1] = r1e;
            x.swap(i, i + 1);
        }
        let pivot = if b[i] == 0.0 { 1e-300 } else { b[i] };
        let m = a[i + 1] / pivot;
        b[i + 1] -= m * c[i];
        if i + 2 < n {
            c[i + 1] -= m * e[i];
        }
        x[i + 1] -= m * x[i];
        a[i + 1] = 0.0;
    }
    // back substitution on the upper-triangular band (b, c, e)
    for i in (0..n).rev() {
        let mut s = x[i];
        if i + 1 < n {
            s -= c[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= e[i] * x[i + 2];
        }
        let pivot = if b[i] == 0.0 { 1e-300 } else { b[i] };
        x[i] = s / pivot;
    }
    x
}

/// Eigenvector for an isolated eigenvalue by inverse iteration.
pub fn eigenvector(diag: &[f64], off: &[f64], eigenvalue: f64) -> Vec<f64> {
    let n = diag.len();
    // deterministic quasi-random start vector
    let mut v: Vec<f64> = (0..n)
        .map(|i| (i as f64 * 0.754_877_666 + 0.3).fract() - 0.5)
        .collect();
    for _ in 0..4 {
        let w = shifted_solve(diag, off, eigenvalue + 1e-12 * (1.0 + eigenvalue.abs()), &v);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.iter().map(|x| x / norm).collect();
    }
    // fix overall sign: make the first substantial component positive
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-3) {
        if *first < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn free_particle_box_eigenvalues() {
        // -u'' on (0,1), Dirichlet: eigenvalues (pi k)^2
        let n = 600;
        let h = 1.0 / (n as f64 + 1.0);
        let diag = vec![2.0 / (h * h); n];
        let off = vec![-1.0 / (h * h); n - 1];
        let evs = lowest_eigenvalues(&diag, &off, 3);
        for (k, ev) in evs.iter().enumerate() {
            let exact = (std::f64::consts::PI * (k as f64 + 1.0)).powi(2);
            assert!((ev - exact).abs() / exact < 1e-4, "k={k} ev={ev} exact={exact}");
        }
    }

    #[test]
    fn eigenvector_satisfies_residual() {
        let n = 200;
        let h = 1.0 / (n as f64 + 1.0);
        let diag = vec![2.0 / (h * h); n];
        let off = vec![-1.0 / (h * h); n - 1];
        let ev = lowest_eigenvalues(&diag, &off, 1)[0];
        let v = eigenvector(&diag, &off, ev);
        let mut residual = 0.0f64;
        for i in 0..n {
            let mut t = diag[i] * v[i] - ev * v[i];
            if i > 0 {
                t += off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                t += off[i] * v[i + 1];
            }
            residual += t * t;
        }
        assert_abs_diff_eq!(residual.sqrt() / ev, 0.0, epsilon = 1e-8);
    }
}
