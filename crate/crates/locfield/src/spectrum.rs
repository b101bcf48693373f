//! Mode bases of a scalar field confined by an external potential: analytic
//! box and quadratic-well spectra, plus finite-difference solvers for
//! tabulated 1D potentials and static 1D curved backgrounds.
//!
//! Every basis is normalized on constant-time surfaces so that
//! `integral |Phi_n|^2 dV = 1/(2 omega_n)`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{LocfieldError, Result};
use crate::quad::GaussRule;
use crate::special::{hermite_function, laguerre};
use crate::tridiag;

/// Confining potential behind a mode basis.
#[derive(Debug, Clone)]
pub struct Potential {
    pub kind: PotentialKind,
    pub mass: f64,
}

#[derive(Debug, Clone)]
pub enum PotentialKind {
    /// V = 0 inside `[0, d]^3`, hard Dirichlet walls on the boundary.
    DirichletBox { d: f64 },
    /// V(x) = |x - center|^2 / (2 l^4).
    Quadratic { ell: f64, center: [f64; 3] },
    /// 1D potential sampled on a uniform grid, Dirichlet ends.
    Tabulated1D { grid: Arc<Vec<f64>>, values: Vec<f64> },
    /// 1D static background: lapse, spatial metric and potential samples.
    StaticCurved1D {
        grid: Arc<Vec<f64>>,
        lapse: Vec<f64>,
        metric: Vec<f64>,
        values: Vec<f64>,
    },
}

/// Multi-index of a mode: per-axis quantum numbers for separable 3D bases,
/// a single level number for 1D solver output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ModeIndex {
    Axes([usize; 3]),
    Level(usize),
}

impl std::fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModeIndex::Axes([a, b, c]) => write!(f, "({a},{b},{c})"),
            ModeIndex::Level(n) => write!(f, "{n}"),
        }
    }
}

/// Spatial profile of a single mode, without the overall `(2 omega)^{-1/2}`.
#[derive(Debug, Clone)]
pub enum ModeProfile {
    /// Product of `sqrt(2/d) sin(n pi x / d)` factors, supported on `[0,d]^3`.
    BoxSine { d: f64, n: [usize; 3] },
    /// Product of normalized Hermite-Gaussians `psi_n((x-c)/l)/sqrt(l)`.
    HermiteGauss { ell: f64, n: [usize; 3], center: [f64; 3] },
    /// 1D profile sampled on a grid (includes the boundary zeros); `weight`
    /// holds the volume-element samples `sqrt(h)/beta` used in the norm.
    Sampled1D {
        grid: Arc<Vec<f64>>,
        values: Vec<f64>,
        weight: Arc<Vec<f64>>,
    },
}

#[derive(Debug, Clone)]
pub struct Mode {
    pub index: ModeIndex,
    pub omega: f64,
    pub profile: ModeProfile,
}

impl Mode {
    /// `(2 omega)^{-1/2}`, the KG normalization prefactor of the profile.
    pub fn kg_prefactor(&self) -> f64 {
        1.0 / (2.0 * self.omega).sqrt()
    }

    pub fn dim(&self) -> usize {
        match self.profile {
            ModeProfile::Sampled1D { .. } => 1,
            _ => 3,
        }
    }

    /// Full normalized profile `Phi_n` at a point (3-vector or 1-vector).
    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.profile {
            ModeProfile::BoxSine { .. } | ModeProfile::HermiteGauss { .. } => {
                assert_eq!(x.len(), 3);
                self.kg_prefactor()
                    * (0..3).map(|a| self.axis_eval(a, x[a]).unwrap()).product::<f64>()
            }
            ModeProfile::Sampled1D { grid, values, .. } => {
                assert_eq!(x.len(), 1);
                interp_linear(grid, values, x[0])
            }
        }
    }

    /// Unit-normalized 1D factor `f_{n_a}` along one axis (separable bases).
    pub fn axis_eval(&self, axis: usize, x: f64) -> Option<f64> {
        match &self.profile {
            ModeProfile::BoxSine { d, n } => Some(box_axis(*d, n[axis], x)),
            ModeProfile::HermiteGauss { ell, n, center } => {
                let u = (x - center[axis]) / ell;
                Some(hermite_function(n[axis], u) / ell.sqrt())
            }
            ModeProfile::Sampled1D { .. } => None,
        }
    }

    /// Closed-form autocorrelation of the unit-normalized axis factor,
    /// `A(s) = integral f(x) f(x+s) dx` (even in s).
    pub fn axis_autocorrelation(&self, axis: usize, s: f64) -> Option<f64> {
        let s = s.abs();
        match &self.profile {
            ModeProfile::BoxSine { d, n } => {
                if s >= *d {
                    return Some(0.0);
                }
                let a = n[axis] as f64 * std::f64::consts::PI / d;
                Some(((d - s) * (a * s).cos() + (a * s).sin() / a) / d)
            }
            ModeProfile::HermiteGauss { ell, n, .. } => {
                let v = s / ell;
                Some((-0.25 * v * v).exp() * laguerre(n[axis], 0.5 * v * v))
            }
            ModeProfile::Sampled1D { .. } => None,
        }
    }

    /// Fourier transform of the unit-normalized axis factor,
    /// `integral f(x) e^{-i k x} dx`.
    pub fn axis_fourier(&self, axis: usize, kappa: f64) -> Option<Complex64> {
        match &self.profile {
            ModeProfile::BoxSine { d, n } => {
                let a = n[axis] as f64 * std::f64::consts::PI / d;
                if (a * a - kappa * kappa).abs() < 1e-6 * a * a {
                    // near-resonant wavenumber: integrate directly
                    let rule = GaussRule::new(64);
                    let nn = n[axis];
                    let dd = *d;
                    return Some(rule.integrate_complex(0.0, dd, |x| {
                        box_axis(dd, nn, x) * Complex64::new(0.0, -kappa * x).exp()
                    }));
                }
                let phase = Complex64::new(0.0, -kappa * d).exp();
                let sign = if n[axis] % 2 == 0 { 1.0 } else { -1.0 };
                Some(
                    (2.0 / d).sqrt() * a * (Complex64::ONE - sign * phase)
                        / (a * a - kappa * kappa),
                )
            }
            ModeProfile::HermiteGauss { ell, n, center } => {
                let amp = (2.0 * std::f64::consts::PI * ell).sqrt()
                    * hermite_function(n[axis], kappa * ell);
                let rot = Complex64::new(0.0, -1.0).powu(n[axis] as u32);
                let phase = Complex64::new(0.0, -kappa * center[axis]).exp();
                Some(amp * rot * phase)
            }
            ModeProfile::Sampled1D { .. } => None,
        }
    }

    /// `|Phi|^2`-weighted mean position of the mode.
    pub fn center(&self) -> Vec<f64> {
        match &self.profile {
            ModeProfile::BoxSine { d, .. } => vec![0.5 * d; 3],
            ModeProfile::HermiteGauss { center, .. } => center.to_vec(),
            ModeProfile::Sampled1D { grid, values, weight } => {
                let mut num = 0.0;
                let mut den = 0.0;
                for i in 0..grid.len() - 1 {
                    let h = grid[i + 1] - grid[i];
                    let f0 = weight[i] * values[i] * values[i];
                    let f1 = weight[i + 1] * values[i + 1] * values[i + 1];
                    num += 0.5 * h * (grid[i] * f0 + grid[i + 1] * f1);
                    den += 0.5 * h * (f0 + f1);
                }
                vec![num / den]
            }
        }
    }
}

fn box_axis(d: f64, n: usize, x: f64) -> f64 {
    if x <= 0.0 || x >= d {
        0.0
    } else {
        (2.0 / d).sqrt() * (n as f64 * std::f64::consts::PI * x / d).sin()
    }
}

fn interp_linear(grid: &[f64], values: &[f64], x: f64) -> f64 {
    if x <= grid[0] || x >= grid[grid.len() - 1] {
        return 0.0;
    }
    let i = grid.partition_point(|&g| g <= x) - 1;
    let t = (x - grid[i]) / (grid[i + 1] - grid[i]);
    values[i] * (1.0 - t) + values[i + 1] * t
}

/// An ordered set of modes over one potential, ascending in frequency.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    pub potential: Potential,
    pub modes: Vec<Mode>,
}

impl ModeBasis {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.omega).collect()
    }

    pub fn mode(&self, index: ModeIndex) -> Option<&Mode> {
        self.modes.iter().find(|m| m.index == index)
    }

    /// Spectrum (indices and frequencies) as a JSON string.
    pub fn spectrum_json(&self) -> String {
        #[derive(Serialize)]
        struct Row {
            index: ModeIndex,
            omega: f64,
        }
        let rows: Vec<Row> = self
            .modes
            .iter()
            .map(|m| Row { index: m.index, omega: m.omega })
            .collect();
        serde_json::to_string_pretty(&rows).expect("spectrum serialization")
    }
}

fn sort_modes(modes: &mut [Mode]) {
    modes.sort_by(|a, b| a.omega.total_cmp(&b.omega).then(a.index.cmp(&b.index)));
}

/// Dirichlet-box basis on `[0,d]^3` with per-axis indices `1..=n_max`.
pub fn box_modes(d: f64, m: f64, n_max: usize) -> Result<ModeBasis> {
    if !(d > 0.0) {
        return Err(LocfieldError::InvalidParameter(format!("box side d={d} must be positive")));
    }
    if m < 0.0 {
        return Err(LocfieldError::InvalidParameter(format!("mass m={m} must be non-negative")));
    }
    if n_max == 0 {
        return Err(LocfieldError::InvalidParameter("n_max must be at least 1".into()));
    }
    let mut modes = Vec::new();
    for nx in 1..=n_max {
        for ny in 1..=n_max {
            for nz in 1..=n_max {
                let k2 = (std::f64::consts::PI / d).powi(2)
                    * ((nx * nx + ny * ny + nz * nz) as f64);
                let omega = (m * m + k2).sqrt();
                modes.push(Mode {
                    index: ModeIndex::Axes([nx, ny, nz]),
                    omega,
                    profile: ModeProfile::BoxSine { d, n: [nx, ny, nz] },
                });
            }
        }
    }
    sort_modes(&mut modes);
    Ok(ModeBasis {
        potential: Potential { kind: PotentialKind::DirichletBox { d }, mass: m },
        modes,
    })
}

/// Quadratic-well basis with per-axis indices `0..n_max`, centered at `center`.
pub fn quadratic_modes_at(d_ell: f64, m: f64, n_max: usize, center: [f64; 3]) -> Result<ModeBasis> {
    let ell = d_ell;
    if !(ell > 0.0) {
        return Err(LocfieldError::InvalidParameter(format!(
            "length scale ell={ell} must be positive"
        )));
    }
    if m < 0.0 {
        return Err(LocfieldError::InvalidParameter(format!("mass m={m} must be non-negative")));
    }
    if n_max == 0 {
        return Err(LocfieldError::InvalidParameter("n_max must be at least 1".into()));
    }
    let mut modes = Vec::new();
    for nx in 0..n_max {
        for ny in 0..n_max {
            for nz in 0..n_max {
                let level = (nx + ny + nz) as f64 + 1.5;
                let omega = (m * m + 2.0 * level / (ell * ell)).sqrt();
                modes.push(Mode {
                    index: ModeIndex::Axes([nx, ny, nz]),
                    omega,
                    profile: ModeProfile::HermiteGauss { ell, n: [nx, ny, nz], center },
                });
            }
        }
    }
    sort_modes(&mut modes);
    Ok(ModeBasis {
        potential: Potential { kind: PotentialKind::Quadratic { ell, center }, mass: m },
        modes,
    })
}

/// Quadratic-well basis centered at the origin.
pub fn quadratic_modes(ell: f64, m: f64, n_max: usize) -> Result<ModeBasis> {
    quadratic_modes_at(ell, m, n_max, [0.0; 3])
}

fn validate_uniform_grid(grid: &[f64]) -> Result<f64> {
    if grid.len() < 64 {
        return Err(LocfieldError::InvalidParameter(format!(
            "grid needs at least 64 points, got {}",
            grid.len()
        )));
    }
    let h = grid[1] - grid[0];
    if !(h > 0.0) {
        return Err(LocfieldError::InvalidParameter("grid must be strictly increasing".into()));
    }
    for i in 1..grid.len() {
        let step = grid[i] - grid[i - 1];
        if !(step > 0.0) {
            return Err(LocfieldError::InvalidParameter("grid must be strictly increasing".into()));
        }
        if (step - h).abs() > 1e-8 * h {
            return Err(LocfieldError::InvalidParameter(
                "grid spacing must be uniform for the finite-difference solver".into(),
            ));
        }
    }
    Ok(h)
}

/// Lowest eigenpairs of `-(p phi')' + c phi = omega^2 w phi` with Dirichlet
/// ends on a uniform grid; returns `(omega, phi-on-full-grid)` pairs with
/// `integral w |phi|^2 dx = 1/(2 omega)`.
fn sturm_liouville_modes(
    grid: &Arc<Vec<f64>>,
    p: &[f64],
    w: &[f64],
    c: &[f64],
    count: usize,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let n_full = grid.len();
    let n = n_full - 2;
    let h = grid[1] - grid[0];
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n - 1];
    for i in 0..n {
        let g = i + 1; // full-grid index
        let p_lo = 0.5 * (p[g - 1] + p[g]);
        let p_hi = 0.5 * (p[g] + p[g + 1]);
        diag[i] = ((p_lo + p_hi) / (h * h) + c[g]) / w[g];
    }
    for i in 0..n - 1 {
        let g = i + 1;
        let p_hi = 0.5 * (p[g] + p[g + 1]);
        off[i] = -p_hi / (h * h) / (w[g] * w[g + 1]).sqrt();
    }
    let evs = tridiag::lowest_eigenvalues(&diag, &off, count);
    let mut out = Vec::with_capacity(count);
    for &ev in &evs {
        if ev <= 0.0 {
            return Err(LocfieldError::Confinement(format!(
                "eigenvalue omega^2 = {ev:.6e} is not positive"
            )));
        }
        let omega = ev.sqrt();
        let psi = tridiag::eigenvector(&diag, &off, ev);
        let mut phi = vec![0.0; n_full];
        for i in 0..n {
            phi[i + 1] = psi[i] / w[i + 1].sqrt();
        }
        // trapezoid norm with the volume-element weight
        let mut norm2 = 0.0;
        for i in 0..n_full - 1 {
            norm2 += 0.5
                * h
                * (w[i] * phi[i] * phi[i] + w[i + 1] * phi[i + 1] * phi[i + 1]);
        }
        let scale = 1.0 / (2.0 * omega * norm2).sqrt();
        for v in phi.iter_mut() {
            *v *= scale;
        }
        out.push((omega, phi));
    }
    Ok(out)
}

/// Lowest `count` modes of `-d^2/dx^2 + m^2 + 2V(x)` on a uniform 1D grid
/// with Dirichlet ends.
pub fn solve_modes_fd(grid: Vec<f64>, values: Vec<f64>, m: f64, count: usize) -> Result<ModeBasis> {
    if count == 0 {
        return Err(LocfieldError::InvalidParameter("count must be at least 1".into()));
    }
    if values.len() != grid.len() {
        return Err(LocfieldError::InvalidParameter(
            "potential samples must match the grid length".into(),
        ));
    }
    validate_uniform_grid(&grid)?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(LocfieldError::Confinement("potential contains non-finite samples".into()));
    }
    let reliable = grid.len() / 8;
    if count > reliable {
        return Err(LocfieldError::Resolution {
            requested: count,
            reliable,
            grid_points: grid.len(),
        });
    }
    let grid = Arc::new(grid);
    let n = grid.len();
    let p = vec![1.0; n];
    let w = Arc::new(vec![1.0; n]);
    let c: Vec<f64> = values.iter().map(|&v| m * m + 2.0 * v).collect();
    let pairs = sturm_liouville_modes(&grid, &p, &w, &c, count)?;
    // when the tabulated potential rises toward the ends, trust only the
    // eigenvalues below the endpoint barrier; a flat tabulation is confined
    // by the Dirichlet walls alone
    let v_min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let barrier = values[0].min(values[n - 1]);
    if barrier > v_min + 1e-12 * (1.0 + v_min.abs()) {
        let barrier_e2 = m * m + 2.0 * barrier;
        if let Some((omega, _)) = pairs.iter().find(|(o, _)| o * o > barrier_e2) {
            return Err(LocfieldError::Confinement(format!(
                "eigenvalue omega^2 = {:.6e} exceeds the endpoint barrier {:.6e}; \
                 the tabulation does not confine all requested modes",
                omega * omega,
                barrier_e2
            )));
        }
    }
    let modes = pairs
        .into_iter()
        .enumerate()
        .map(|(k, (omega, phi))| Mode {
            index: ModeIndex::Level(k),
            omega,
            profile: ModeProfile::Sampled1D {
                grid: grid.clone(),
                values: phi,
                weight: w.clone(),
            },
        })
        .collect();
    Ok(ModeBasis {
        potential: Potential { kind: PotentialKind::Tabulated1D { grid, values }, mass: m },
        modes,
    })
}

/// Lowest `count` modes on a static 1D background with lapse `beta(x)` and
/// spatial metric `h(x)`: solves
/// `(beta/sqrt(h)) d/dx (beta sqrt(h) h^{xx} dPhi/dx) + (omega^2 - beta^2 (m^2 + 2V)) Phi = 0`
/// and normalizes with the induced volume element,
/// `integral (sqrt(h)/beta) |Phi|^2 dx = 1/(2 omega)`.
pub fn static_curved_modes_1d(
    grid: Vec<f64>,
    lapse: Vec<f64>,
    metric: Vec<f64>,
    values: Vec<f64>,
    m: f64,
    count: usize,
) -> Result<ModeBasis> {
    if count == 0 {
        return Err(LocfieldError::InvalidParameter("count must be at least 1".into()));
    }
    let n = grid.len();
    if lapse.len() != n || metric.len() != n || values.len() != n {
        return Err(LocfieldError::InvalidParameter(
            "lapse, metric and potential samples must match the grid length".into(),
        ));
    }
    validate_uniform_grid(&grid)?;
    if lapse.iter().any(|&b| !(b > 0.0)) {
        return Err(LocfieldError::InvalidGeometry("lapse must be positive everywhere".into()));
    }
    if metric.iter().any(|&h| !(h > 0.0)) {
        return Err(LocfieldError::InvalidGeometry(
            "spatial metric must be positive everywhere".into(),
        ));
    }
    let reliable = n / 8;
    if count > reliable {
        return Err(LocfieldError::Resolution { requested: count, reliable, grid_points: n });
    }
    let grid = Arc::new(grid);
    // Sturm-Liouville data: p = beta/sqrt(h), w = sqrt(h)/beta,
    // c = w beta^2 (m^2 + 2V) = beta sqrt(h) (m^2 + 2V)
    let p: Vec<f64> = (0..n).map(|i| lapse[i] / metric[i].sqrt()).collect();
    let w: Vec<f64> = (0..n).map(|i| metric[i].sqrt() / lapse[i]).collect();
    let c: Vec<f64> = (0..n)
        .map(|i| lapse[i] * metric[i].sqrt() * (m * m + 2.0 * values[i]))
        .collect();
    let w = Arc::new(w);
    let pairs = sturm_liouville_modes(&grid, &p, &w, &c, count)?;
    let modes = pairs
        .into_iter()
        .enumerate()
        .map(|(k, (omega, phi))| Mode {
            index: ModeIndex::Level(k),
            omega,
            profile: ModeProfile::Sampled1D {
                grid: grid.clone(),
                values: phi,
                weight: w.clone(),
            },
        })
        .collect();
    Ok(ModeBasis {
        potential: Potential {
            kind: PotentialKind::StaticCurved1D { grid, lapse, metric, values },
            mass: m,
        },
        modes,
    })
}

/// Orthonormality diagnostic of a basis against the KG normalization target.
#[derive(Debug, Clone, Copy)]
pub struct OrthoReport {
    pub max_deviation: f64,
    pub pass: bool,
}

/// Max over mode pairs of `|<Phi_n, Phi_m> - delta_nm / (2 omega_n)|`, with
/// inner products evaluated by composite quadrature (separable bases) or the
/// weighted trapezoid rule (sampled 1D bases).
pub fn check_orthonormality(basis: &ModeBasis, tol: f64) -> OrthoReport {
    assert!(!basis.is_empty());
    let n = basis.len();
    let mut max_dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let a = &basis.modes[i];
            let b = &basis.modes[j];
            let inner = inner_product(a, b);
            let target = if i == j { 1.0 / (2.0 * a.omega) } else { 0.0 };
            max_dev = max_dev.max((inner - target).abs());
        }
    }
    OrthoReport { max_deviation: max_dev, pass: max_dev < tol }
}

fn inner_product(a: &Mode, b: &Mode) -> f64 {
    match (&a.profile, &b.profile) {
        (ModeProfile::Sampled1D { grid, values: va, weight }, ModeProfile::Sampled1D { values: vb, .. }) => {
            let mut acc = 0.0;
            for i in 0..grid.len() - 1 {
                let h = grid[i + 1] - grid[i];
                acc += 0.5
                    * h
                    * (weight[i] * va[i] * vb[i] + weight[i + 1] * va[i + 1] * vb[i + 1]);
            }
            acc
        }
        _ => {
            let product: f64 = (0..3).map(|axis| axis_overlap(a, b, axis)).product();
            a.kg_prefactor() * b.kg_prefactor() * product
        }
    }
}

/// Quadrature overlap of two unit-normalized axis factors (possibly from
/// different separable bases).
pub fn axis_overlap(a: &Mode, b: &Mode, axis: usize) -> f64 {
    let (lo, hi) = match (axis_support(a, axis), axis_support(b, axis)) {
        ((a0, a1), (b0, b1)) => (a0.max(b0), a1.min(b1)),
    };
    if hi <= lo {
        return 0.0;
    }
    let rule = GaussRule::new(32);
    let panels = 12;
    let step = (hi - lo) / panels as f64;
    (0..panels)
        .map(|k| {
            let x0 = lo + k as f64 * step;
            rule.integrate(x0, x0 + step, |x| {
                a.axis_eval(axis, x).unwrap() * b.axis_eval(axis, x).unwrap()
            })
        })
        .sum()
}

fn axis_support(m: &Mode, axis: usize) -> (f64, f64) {
    match &m.profile {
        ModeProfile::BoxSine { d, .. } => (0.0, *d),
        ModeProfile::HermiteGauss { ell, n, center } => {
            // classical turning point plus a wide Gaussian tail margin
            let spread = ell * (2.0 * (n[axis] as f64) + 1.0).sqrt();
            (center[axis] - spread - 12.0 * ell, center[axis] + spread + 12.0 * ell)
        }
        ModeProfile::Sampled1D { grid, .. } => (grid[0], grid[grid.len() - 1]),
    }
}
