//! Exact-evolution oracle: a truncated "toy universe" of probe modes and
//! box-field modes, all bilinearly coupled through the switching window, is
//! evolved non-perturbatively as a Gaussian state. Tracing down to the
//! accessible mode gives an exact reduced state whose distance to the
//! perturbative `reduced_state` must scale as lambda^4.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{LocfieldError, Result};
use crate::kernel::FieldSpec;
use crate::perturbation::{QuadControls, ReducedState, ResponseEngine, SmearedKernel};
use crate::smearing::{Smearing, Window};
use crate::spectrum::{axis_overlap, Mode, ModeBasis, ModeProfile};

/// Probe modes and field modes with their bilinear window-switched coupling.
#[derive(Debug, Clone)]
pub struct ToyUniverse {
    pub probe_omegas: Vec<f64>,
    pub field_omegas: Vec<f64>,
    /// overlap matrix O_{nk} = int Phi_n phi_k (KG-normalized profiles)
    pub overlap: DMatrix<f64>,
    pub lambda: f64,
    pub window: Window,
    /// index of the accessible probe mode
    pub accessible: usize,
}

impl ToyUniverse {
    pub fn modes(&self) -> usize {
        self.probe_omegas.len() + self.field_omegas.len()
    }

    /// Coupling matrix g_{nk}(t) = lambda * zeta(t) * O_{nk}.
    pub fn coupling_at(&self, t: f64) -> DMatrix<f64> {
        let s = self.lambda * self.window.eval(t);
        self.overlap.map(|o| s * o)
    }

    /// Copy with every probe row except the accessible one decoupled; the
    /// toy then reduces to a single oscillator linearly coupled to the field.
    pub fn isolate_accessible(&self) -> ToyUniverse {
        let mut toy = self.clone();
        for n in 0..toy.probe_omegas.len() {
            if n != toy.accessible {
                for k in 0..toy.field_omegas.len() {
                    toy.overlap[(n, k)] = 0.0;
                }
            }
        }
        toy
    }

    /// Hamiltonian matrix M(t) of H = (1/2) R^T M R in the quadrature
    /// ordering (x_1..x_M, p_1..p_M); the interaction is
    /// 2 lambda zeta(t) O_{nk} x_n X_k.
    fn hamiltonian_matrix(&self, t: f64) -> DMatrix<f64> {
        let np = self.probe_omegas.len();
        let nf = self.field_omegas.len();
        let m = np + nf;
        let mut h = DMatrix::<f64>::zeros(2 * m, 2 * m);
        for (j, &w) in self.probe_omegas.iter().chain(&self.field_omegas).enumerate() {
            h[(j, j)] = w;
            h[(m + j, m + j)] = w;
        }
        let g = self.coupling_at(t);
        for n in 0..np {
            for k in 0..nf {
                h[(n, np + k)] += 2.0 * g[(n, k)];
                h[(np + k, n)] += 2.0 * g[(n, k)];
            }
        }
        h
    }
}

/// Extent of a separable mode along one axis, beyond which the profile is
/// negligible.
fn axis_extent(mode: &Mode, axis: usize) -> (f64, f64) {
    match &mode.profile {
        ModeProfile::BoxSine { d, .. } => (0.0, *d),
        ModeProfile::HermiteGauss { ell, n, center } => {
            let reach = ell * (10.0 + 2.0 * (n[axis] as f64).sqrt())
                * (2.0 * n[axis] as f64 + 1.0).sqrt().max(1.0);
            (center[axis] - reach, center[axis] + reach)
        }
        ModeProfile::Sampled1D { grid, .. } => (grid[0], grid[grid.len() - 1]),
    }
}

/// Couple every probe mode to every mode of a Dirichlet-box field through
/// the switching window.
pub fn build_toy(
    probe_basis: &ModeBasis,
    field_basis: &ModeBasis,
    box_d: f64,
    window: Window,
    lambda: f64,
    accessible: usize,
) -> Result<ToyUniverse> {
    if accessible >= probe_basis.len() {
        return Err(LocfieldError::InvalidParameter(format!(
            "accessible index {accessible} out of range for {} probe modes",
            probe_basis.len()
        )));
    }
    for mode in &probe_basis.modes {
        for axis in 0..3 {
            let (lo, hi) = axis_extent(mode, axis);
            if lo < 0.0 || hi > box_d {
                return Err(LocfieldError::InvalidGeometry(format!(
                    "probe mode {} extends to [{lo}, {hi}] on axis {axis}, \
                     outside the field box [0, {box_d}]",
                    mode.index
                )));
            }
        }
    }
    let np = probe_basis.len();
    let nf = field_basis.len();
    let mut overlap = DMatrix::<f64>::zeros(np, nf);
    for (n, pm) in probe_basis.modes.iter().enumerate() {
        for (k, fm) in field_basis.modes.iter().enumerate() {
            overlap[(n, k)] = pm.kg_prefactor()
                * fm.kg_prefactor()
                * (0..3).map(|a| axis_overlap(pm, fm, a)).product::<f64>();
        }
    }
    Ok(ToyUniverse {
        probe_omegas: probe_basis.modes.iter().map(|m| m.omega).collect(),
        field_omegas: field_basis.modes.iter().map(|m| m.omega).collect(),
        overlap,
        lambda,
        window,
        accessible,
    })
}

/// Zero-mean Gaussian state of M modes in the (x.., p..) quadrature ordering;
/// vacuum covariance is I/2.
#[derive(Debug, Clone)]
pub struct GaussianState {
    pub covariance: DMatrix<f64>,
    pub modes: usize,
}

impl GaussianState {
    pub fn vacuum(modes: usize) -> Self {
        GaussianState {
            covariance: DMatrix::<f64>::identity(2 * modes, 2 * modes).scale(0.5),
            modes,
        }
    }

    /// Smallest symplectic eigenvalue; the uncertainty relation demands 1/2.
    /// With sigma = L L^T, the matrix i L^T Omega L is Hermitian with
    /// eigenvalues +-nu_k, so a symmetric eigensolver suffices (the
    /// nonsymmetric spectrum of Omega sigma is badly conditioned when the
    /// nu_k are degenerate, e.g. in the vacuum).
    pub fn min_symplectic_eigenvalue(&self) -> f64 {
        let m = self.modes;
        let mut omega = DMatrix::<f64>::zeros(2 * m, 2 * m);
        for j in 0..m {
            omega[(j, m + j)] = 1.0;
            omega[(m + j, j)] = -1.0;
        }
        let sym = (&self.covariance + self.covariance.transpose()) * 0.5;
        let chol = match sym.cholesky() {
            Some(c) => c,
            // not positive definite: the uncertainty relation is violated
            None => return 0.0,
        };
        let l = chol.l();
        let anti = l.transpose() * omega * &l;
        let herm = anti.map(|v| Complex64::new(0.0, v));
        herm.symmetric_eigen()
            .eigenvalues
            .iter()
            .map(|v| v.abs())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn symmetry_deviation(&self) -> f64 {
        (&self.covariance - self.covariance.transpose()).norm()
    }
}

/// Integrator diagnostics accumulated over an exact evolution.
#[derive(Debug, Clone, Copy)]
pub struct EvolveDiagnostics {
    /// ||S^T Omega S - Omega|| of the full-span propagator
    pub symplectic_drift: f64,
    /// relative drift of ln det(covariance) (purity invariant)
    pub purity_drift: f64,
}

/// Evolve the covariance through the switched bilinear Hamiltonian with a
/// classic 4th-order Runge-Kutta scheme; the propagator is evolved alongside
/// so symplecticity can be certified.
pub fn evolve_exact(
    toy: &ToyUniverse,
    initial: &GaussianState,
    t_span: (f64, f64),
    steps: usize,
) -> Result<(GaussianState, EvolveDiagnostics)> {
    let m = toy.modes();
    if initial.modes != m {
        return Err(LocfieldError::InvalidParameter(format!(
            "state has {} modes, toy has {m}",
            initial.modes
        )));
    }
    let span = t_span.1 - t_span.0;
    if !(span > 0.0) {
        return Err(LocfieldError::InvalidParameter(
            "evolution span must be positive".into(),
        ));
    }
    let w_max = toy
        .probe_omegas
        .iter()
        .chain(&toy.field_omegas)
        .cloned()
        .fold(0.0, f64::max);
    let needed = (40.0 * w_max * span / (2.0 * std::f64::consts::PI)).ceil() as usize;
    if steps < needed {
        return Err(LocfieldError::InvalidParameter(format!(
            "{steps} steps insufficient for the stiffest frequency; need at least {needed}"
        )));
    }

    // dsigma/dt = A sigma + A sigma^T with A = Omega_sympl M(t)
    let half = m;
    let a_of = |t: f64| -> DMatrix<f64> {
        let h = toy.hamiltonian_matrix(t);
        let mut a = DMatrix::<f64>::zeros(2 * m, 2 * m);
        // Omega = [[0, I], [-I, 0]] acting on the (x.., p..) blocks
        for r in 0..half {
            for c in 0..2 * m {
                a[(r, c)] = h[(half + r, c)];
                a[(half + r, c)] = -h[(r, c)];
            }
        }
        a
    };
    let h = span / steps as f64;
    let mut sigma = initial.covariance.clone();
    let mut prop = DMatrix::<f64>::identity(2 * m, 2 * m);
    let sigma_dot = |a: &DMatrix<f64>, s: &DMatrix<f64>| a * s + s * a.transpose();
    for i in 0..steps {
        let t = t_span.0 + i as f64 * h;
        let a1 = a_of(t);
        let a2 = a_of(t + 0.5 * h);
        let a4 = a_of(t + h);

        let k1 = sigma_dot(&a1, &sigma);
        let k2 = sigma_dot(&a2, &(&sigma + &k1 * (0.5 * h)));
        let k3 = sigma_dot(&a2, &(&sigma + &k2 * (0.5 * h)));
        let k4 = sigma_dot(&a4, &(&sigma + &k3 * h));
        sigma += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);

        let p1 = &a1 * &prop;
        let p2 = &a2 * &(&prop + &p1 * (0.5 * h));
        let p3 = &a2 * &(&prop + &p2 * (0.5 * h));
        let p4 = &a4 * &(&prop + &p3 * h);
        sigma = (sigma.transpose() + &sigma) * 0.5;
        prop += (p1 + p2 * 2.0 + p3 * 2.0 + p4) * (h / 6.0);
    }

    let mut omega = DMatrix::<f64>::zeros(2 * m, 2 * m);
    for j in 0..m {
        omega[(j, m + j)] = 1.0;
        omega[(m + j, j)] = -1.0;
    }
    let symplectic_drift = (prop.transpose() * &omega * &prop - &omega).norm();
    let logdet = |s: &DMatrix<f64>| s.clone().lu().determinant().abs().ln();
    let purity_drift =
        (logdet(&sigma) - logdet(&initial.covariance)).abs() / (2.0 * m as f64);

    let state = GaussianState { covariance: sigma, modes: m };
    let nu_min = state.min_symplectic_eigenvalue();
    if nu_min < 0.5 - 1e-6 {
        return Err(LocfieldError::Integrator(format!(
            "uncertainty relation violated: min symplectic eigenvalue {nu_min}"
        )));
    }
    Ok((state, EvolveDiagnostics { symplectic_drift, purity_drift }))
}

/// Rotate every mode back by its free-evolution angle so the covariance is
/// expressed in the interaction picture with phase reference t = 0.
pub fn into_interaction_picture(
    state: &GaussianState,
    omegas: &[f64],
    t_final: f64,
) -> GaussianState {
    let m = state.modes;
    assert_eq!(omegas.len(), m);
    let mut s = DMatrix::<f64>::zeros(2 * m, 2 * m);
    for (j, &w) in omegas.iter().enumerate() {
        let (c, sn) = ((w * t_final).cos(), (w * t_final).sin());
        s[(j, j)] = c;
        s[(j, m + j)] = -sn;
        s[(m + j, j)] = sn;
        s[(m + j, m + j)] = c;
    }
    GaussianState {
        covariance: &s * &state.covariance * s.transpose(),
        modes: m,
    }
}

/// Matrix exponential by scaling-and-squaring with a Taylor kernel.
fn expm(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = m.nrows();
    let norm = m.norm();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as usize
    } else {
        0
    };
    let scaled = m.map(|v| v / Complex64::new((1u64 << squarings) as f64, 0.0));
    let mut result = DMatrix::<Complex64>::identity(n, n);
    let mut term = DMatrix::<Complex64>::identity(n, n);
    for k in 1..=24 {
        term = &term * &scaled;
        term.apply(|v| *v /= Complex64::new(k as f64, 0.0));
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Fock density matrix of one mode of a Gaussian state, truncated to `dim`
/// levels via the rotated squeezed-thermal decomposition of its 2x2
/// covariance block. Returns the state and the trace captured by the
/// truncation (a capture below 1 - 1e-6 is a truncation warning for the
/// caller; below 0.99 it is an error).
pub fn trace_to_mode_with_capture(
    state: &GaussianState,
    index: usize,
    dim: usize,
) -> Result<(ReducedState, f64)> {
    let m = state.modes;
    if index >= m {
        return Err(LocfieldError::InvalidParameter(format!(
            "mode index {index} out of range for {m} modes"
        )));
    }
    let sxx = state.covariance[(index, index)];
    let spp = state.covariance[(m + index, m + index)];
    let sxp = 0.5 * (state.covariance[(index, m + index)] + state.covariance[(m + index, index)]);

    // Williamson data of the 2x2 block: sigma = nu R(theta) diag(e^{2r}, e^{-2r}) R(theta)^T
    let det = sxx * spp - sxp * sxp;
    let nu = det.max(0.0).sqrt().max(0.5);
    let tr = sxx + spp;
    let disc = ((0.5 * (sxx - spp)).powi(2) + sxp * sxp).sqrt();
    let e1 = 0.5 * tr + disc;
    let e2 = (0.5 * tr - disc).max(1e-300);
    let r = 0.25 * (e1 / e2).ln();
    let theta = if disc < 1e-15 {
        0.0
    } else {
        0.5 * (2.0 * sxp).atan2(sxx - spp)
    };
    let n_bar = (nu - 0.5).max(0.0);

    // working Fock space comfortably above the truncation
    let work = (dim + 10).max(14);
    let mut a_op = DMatrix::<Complex64>::zeros(work, work);
    for i in 1..work {
        a_op[(i - 1, i)] = Complex64::new((i as f64).sqrt(), 0.0);
    }
    let adag = a_op.adjoint();
    // rho_th with mean occupation n_bar
    let mut rho = DMatrix::<Complex64>::zeros(work, work);
    let q = n_bar / (1.0 + n_bar);
    for i in 0..work {
        rho[(i, i)] = Complex64::new(q.powi(i as i32) / (1.0 + n_bar), 0.0);
    }
    // squeeze: exp(r (a'^2 - a^2) / 2) stretches x by e^r
    let gen = (&adag * &adag - &a_op * &a_op).map(|v| v * Complex64::new(0.5 * r, 0.0));
    let u_sq = expm(&gen);
    rho = &u_sq * rho * u_sq.adjoint();
    // rotate the stretched axis onto the covariance eigenvector
    let mut u_rot = DMatrix::<Complex64>::zeros(work, work);
    for i in 0..work {
        u_rot[(i, i)] = Complex64::new(0.0, theta * i as f64).exp();
    }
    rho = &u_rot * rho * u_rot.adjoint();

    let mut out = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            out[(i, j)] = rho[(i, j)];
        }
    }
    let capture = (0..dim).map(|i| out[(i, i)].re).sum::<f64>();
    if capture < 0.99 {
        return Err(LocfieldError::Integrator(format!(
            "Fock truncation at dim {dim} captures only {capture} of the trace"
        )));
    }
    let reduced = ReducedState { dim, rho: out, order: "exact", positivity_ok: true };
    Ok((reduced, capture))
}

/// Fock density matrix of one mode of a Gaussian state (3-level truncation).
pub fn trace_to_mode(state: &GaussianState, index: usize) -> Result<ReducedState> {
    trace_to_mode_with_capture(state, index, 3).map(|(s, _)| s)
}

/// Scenario for the equivalence verification.
#[derive(Debug, Clone)]
pub struct EquivalenceScenario {
    pub probe_basis: ModeBasis,
    pub field_basis: ModeBasis,
    pub box_d: f64,
    pub window: Window,
    pub accessible: usize,
    pub steps: usize,
}

/// Per-lambda distance and the fitted scaling exponent.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub lambdas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub exponent: f64,
    pub symplectic_drift: f64,
    pub purity_drift: f64,
    pub truncation_capture: f64,
    pub pass: bool,
}

/// For each lambda, evolve the toy exactly, trace down to the accessible
/// mode, and measure the Frobenius distance to the perturbative
/// reduced_state; the distance must scale as lambda^4 (exponent >= 3.5).
pub fn verify_equivalence(
    scenario: &EquivalenceScenario,
    lambdas: &[f64],
) -> Result<EquivalenceReport> {
    if lambdas.len() < 2 {
        return Err(LocfieldError::InvalidParameter(
            "equivalence fit needs at least two coupling values".into(),
        ));
    }
    let accessible_mode = scenario.probe_basis.modes[scenario.accessible].clone();
    let (t0, t1) = scenario.window.support();
    // tiny regulator: the toy has no i-epsilon, so the perturbative side
    // must be effectively unregulated
    let epsilon = 1e-12;
    let kernel =
        SmearedKernel::discrete(&accessible_mode, &scenario.field_basis, epsilon)?;

    // each lambda is an independent evolution; run them in parallel
    use rayon::prelude::*;
    let per_lambda: Vec<Result<(f64, EvolveDiagnostics, f64)>> = lambdas
        .par_iter()
        .map(|&lambda| {
            let toy = build_toy(
            &scenario.probe_basis,
            &scenario.field_basis,
            scenario.box_d,
                scenario.window,
                lambda,
                scenario.accessible,
            )?;
            let vac = GaussianState::vacuum(toy.modes());
            let (evolved, diag) = evolve_exact(&toy, &vac, (t0, t1), scenario.steps)?;
            let omegas: Vec<f64> = toy
                .probe_omegas
                .iter()
                .chain(&toy.field_omegas)
                .cloned()
                .collect();
            let interaction = into_interaction_picture(&evolved, &omegas, t1);
            let (exact, capture) =
                trace_to_mode_with_capture(&interaction, toy.accessible, 3)?;

            let smearing = Smearing {
                window: scenario.window,
                gap: accessible_mode.omega,
                center: accessible_mode.center(),
                mode: accessible_mode.clone(),
                gamma: 1.0,
            };
            let cfg = crate::perturbation::CouplingConfig {
                lambda,
                smearing,
                field: FieldSpec::new(0.0, epsilon)?,
                quad: QuadControls::default(),
            };
            let engine = ResponseEngine::with_kernel(&cfg, kernel.clone())?;
            let perturbative = engine.reduced_state(accessible_mode.omega)?;
            Ok((exact.frobenius_distance(&perturbative), diag, capture))
        })
        .collect();

    let mut deltas = Vec::with_capacity(lambdas.len());
    let mut worst_sympl = 0.0f64;
    let mut worst_purity = 0.0f64;
    let mut worst_capture = 1.0f64;
    for item in per_lambda {
        let (delta, diag, capture) = item?;
        deltas.push(delta);
        worst_sympl = worst_sympl.max(diag.symplectic_drift);
        worst_purity = worst_purity.max(diag.purity_drift);
        worst_capture = worst_capture.min(capture);
    }

    // least-squares fit of ln delta = exponent * ln lambda + const
    let n = lambdas.len() as f64;
    let xs: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let ys: Vec<f64> = deltas.iter().map(|d| d.max(1e-300).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let exponent = num / den;

    let pass = exponent >= 3.5 && deltas[0] < 1e-3;
    Ok(EquivalenceReport {
        lambdas: lambdas.to_vec(),
        deltas,
        exponent,
        symplectic_drift: worst_sympl,
        purity_drift: worst_purity,
        truncation_capture: worst_capture,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smearing::gaussian_window;
    use crate::spectrum::{box_modes, quadratic_modes_at};
    use approx::assert_abs_diff_eq;

    fn small_toy(lambda: f64) -> ToyUniverse {
        let probe = quadratic_modes_at(0.4, 0.0, 1, [4.0; 3]).unwrap();
        let field = box_modes(8.0, 0.0, 2).unwrap();
        let win = gaussian_window(1.0).unwrap();
        build_toy(&probe, &field, 8.0, win, lambda, 0).unwrap()
    }

    #[test]
    fn build_toy_couplings() {
        let toy = small_toy(0.1);
        assert_eq!(toy.probe_omegas.len(), 1);
        assert_eq!(toy.field_omegas.len(), 8);
        // lambda = 0 removes every coupling
        let free = small_toy(0.0);
        assert_abs_diff_eq!(free.coupling_at(0.3).norm(), 0.0, epsilon = 1e-300);
        // coupling is linear in the window value
        let g1 = toy.coupling_at(0.0);
        let g2 = toy.coupling_at(1.0);
        let ratio = toy.window.eval(1.0) / toy.window.eval(0.0);
        assert_abs_diff_eq!((g2 - g1.map(|v| ratio * v)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn self_overlap_is_kg_diagonal() {
        // probe basis = field basis: overlap matrix is diag(1/(2 omega))
        let field = box_modes(1.0, 0.0, 2).unwrap();
        let win = gaussian_window(1.0).unwrap();
        let toy = build_toy(&field, &field, 1.0, win, 0.1, 0).unwrap();
        for n in 0..8 {
            for k in 0..8 {
                let expect = if n == k { 1.0 / (2.0 * field.modes[n].omega) } else { 0.0 };
                assert_abs_diff_eq!(toy.overlap[(n, k)], expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn probe_outside_box_rejected() {
        let probe = quadratic_modes_at(0.4, 0.0, 1, [0.5, 4.0, 4.0]).unwrap();
        let field = box_modes(8.0, 0.0, 1).unwrap();
        let win = gaussian_window(1.0).unwrap();
        assert!(matches!(
            build_toy(&probe, &field, 8.0, win, 0.1, 0),
            Err(LocfieldError::InvalidGeometry(_))
        ));
    }

    #[test]
    fn free_evolution_preserves_vacuum() {
        let toy = small_toy(0.0);
        let vac = GaussianState::vacuum(toy.modes());
        let (out, diag) = evolve_exact(&toy, &vac, (-4.0, 4.0), 4000).unwrap();
        assert!((out.covariance.clone() - &vac.covariance).norm() < 1e-10);
        assert!(diag.symplectic_drift < 1e-10);
        assert!(diag.purity_drift < 1e-10);
    }

    #[test]
    fn energy_conserved_under_constant_switching() {
        // a huge window width makes zeta constant to ~1e-12 over the span
        let probe = quadratic_modes_at(0.4, 0.0, 1, [4.0; 3]).unwrap();
        let field = box_modes(8.0, 0.0, 2).unwrap();
        let win = gaussian_window(1e4).unwrap();
        let toy = build_toy(&probe, &field, 8.0, win, 0.3, 0).unwrap();
        let vac = GaussianState::vacuum(toy.modes());
        let (out, _) = evolve_exact(&toy, &vac, (0.0, 3.0), 4000).unwrap();
        let energy = |s: &GaussianState, t: f64| {
            0.5 * (toy.hamiltonian_matrix(t) * &s.covariance).trace()
        };
        let e0 = energy(&vac, 0.0);
        let e1 = energy(&out, 3.0);
        assert!((e1 - e0).abs() < 1e-8 * e0.abs(), "e0={e0} e1={e1}");
    }

    #[test]
    fn integrator_is_fourth_order() {
        let toy = small_toy(0.3);
        let vac = GaussianState::vacuum(toy.modes());
        let span = (-4.0, 4.0);
        let reference = evolve_exact(&toy, &vac, span, 20480).unwrap().0;
        let coarse = evolve_exact(&toy, &vac, span, 1024).unwrap().0;
        let fine = evolve_exact(&toy, &vac, span, 2048).unwrap().0;
        let e_coarse = (&coarse.covariance - &reference.covariance).norm();
        let e_fine = (&fine.covariance - &reference.covariance).norm();
        let ratio = e_coarse / e_fine;
        assert!(
            (11.0..22.0).contains(&ratio),
            "convergence ratio {ratio} (coarse {e_coarse}, fine {e_fine})"
        );
    }

    #[test]
    fn step_count_preconditions() {
        let toy = small_toy(0.1);
        let vac = GaussianState::vacuum(toy.modes());
        assert!(evolve_exact(&toy, &vac, (-4.0, 4.0), 10).is_err());
        assert!(evolve_exact(&toy, &vac, (4.0, -4.0), 4000).is_err());
    }

    #[test]
    fn vacuum_traces_to_ground_state() {
        let state = GaussianState::vacuum(3);
        let rho = trace_to_mode(&state, 1).unwrap();
        assert_abs_diff_eq!(rho.rho[(0, 0)].re, 1.0, epsilon = 1e-12);
        assert!(rho.rho[(1, 1)].norm() < 1e-12);
        assert!(rho.rho[(2, 0)].norm() < 1e-12);
    }

    #[test]
    fn thermal_block_matches_fock_expansion() {
        // covariance (1/2 + p) I is thermal with mean occupation p
        let p = 1e-3;
        let mut state = GaussianState::vacuum(1);
        state.covariance[(0, 0)] = 0.5 + p;
        state.covariance[(1, 1)] = 0.5 + p;
        let rho = trace_to_mode(&state, 0).unwrap();
        assert!((rho.rho[(0, 0)].re - (1.0 - p)).abs() < 2.0 * p * p);
        assert!((rho.rho[(1, 1)].re - p).abs() < 2.0 * p * p);
        assert!(rho.rho[(2, 2)].re < 2.0 * p * p);
    }

    #[test]
    fn squeezed_thermal_reconstruction_reproduces_covariance() {
        // build an arbitrary one-mode covariance, reconstruct the Fock
        // matrix on a large truncation, and recompute the moments
        let (nu, r, theta): (f64, f64, f64) = (0.57, 0.21, 0.8);
        let (c, s) = (theta.cos(), theta.sin());
        let (e1, e2) = (nu * (2.0 * r).exp(), nu * (-2.0 * r).exp());
        let mut state = GaussianState::vacuum(1);
        state.covariance[(0, 0)] = c * c * e1 + s * s * e2;
        state.covariance[(1, 1)] = s * s * e1 + c * c * e2;
        state.covariance[(0, 1)] = c * s * (e1 - e2);
        state.covariance[(1, 0)] = c * s * (e1 - e2);

        let dim = 24;
        let (rho, _) = trace_to_mode_with_capture(&state, 0, dim).unwrap();
        let mut a_op = DMatrix::<Complex64>::zeros(dim, dim);
        for i in 1..dim {
            a_op[(i - 1, i)] = Complex64::new((i as f64).sqrt(), 0.0);
        }
        let adag = a_op.adjoint();
        let isq2 = Complex64::new(0.0, 1.0) / Complex64::new(2.0f64.sqrt(), 0.0);
        let x_op = (&a_op + &adag).map(|v| v / Complex64::new(2.0f64.sqrt(), 0.0));
        let p_op = (&adag - &a_op).map(|v| v * isq2);
        let moment = |op: &DMatrix<Complex64>| (&rho.rho * op).trace().re;
        let xx = moment(&(&x_op * &x_op));
        let pp = moment(&(&p_op * &p_op));
        let xp = moment(&(&(&x_op * &p_op + &p_op * &x_op) * Complex64::new(0.5, 0.0)));
        assert_abs_diff_eq!(xx, state.covariance[(0, 0)], epsilon = 1e-8);
        assert_abs_diff_eq!(pp, state.covariance[(1, 1)], epsilon = 1e-8);
        assert_abs_diff_eq!(xp, state.covariance[(0, 1)], epsilon = 1e-8);
    }

    fn small_scenario() -> EquivalenceScenario {
        EquivalenceScenario {
            probe_basis: quadratic_modes_at(0.4, 0.0, 1, [4.0; 3]).unwrap(),
            field_basis: box_modes(8.0, 0.0, 2).unwrap(),
            box_d: 8.0,
            window: gaussian_window(1.0).unwrap(),
            accessible: 0,
            steps: 16000,
        }
    }

    #[test]
    fn equivalence_scaling_single_probe() {
        let report =
            verify_equivalence(&small_scenario(), &[0.2, 0.1, 0.05]).unwrap();
        assert!(
            report.exponent >= 3.5,
            "exponent {} deltas {:?}",
            report.exponent,
            report.deltas
        );
        assert!(report.deltas[0] < 1e-3, "delta {:?}", report.deltas);
        assert!(report.pass);
        assert!(report.symplectic_drift < 1e-10);
        assert!(report.purity_drift < 1e-8);
        assert!(report.truncation_capture > 1.0 - 1e-6);
        // halving lambda shrinks the residual by about 16x
        let shrink = report.deltas[0] / report.deltas[1];
        assert!(
            (12.8..19.2).contains(&shrink),
            "shrink {shrink} deltas {:?}",
            report.deltas
        );
    }

    #[test]
    fn fock_evolution_cross_checks_covariance_oracle() {
        // 1 probe + 2 field modes, Fock cutoff 4 quanta per mode: evolve the
        // pure state with dense matrices and compare the traced probe state
        let probe = quadratic_modes_at(0.4, 0.0, 1, [4.0; 3]).unwrap();
        let field_full = box_modes(8.0, 0.0, 2).unwrap();
        let field = ModeBasis {
            potential: field_full.potential.clone(),
            modes: field_full.modes[0..2].to_vec(),
        };
        let win = gaussian_window(1.0).unwrap();
        let lambda = 0.15;
        let toy = build_toy(&probe, &field, 8.0, win, lambda, 0).unwrap();

        let cut = 4;
        let dim = cut * cut * cut;
        let omegas = [toy.probe_omegas[0], toy.field_omegas[0], toy.field_omegas[1]];
        let mut lowering = Vec::new();
        for m in 0..3 {
            let mut op = DMatrix::<Complex64>::zeros(dim, dim);
            for i in 0..dim {
                let idx = [i / (cut * cut), (i / cut) % cut, i % cut];
                if idx[m] > 0 {
                    let mut j = idx;
                    j[m] -= 1;
                    let col = j[0] * cut * cut + j[1] * cut + j[2];
                    op[(col, i)] = Complex64::new((idx[m] as f64).sqrt(), 0.0);
                }
            }
            lowering.push(op);
        }
        // precompute the free part and the two coupling products once;
        // per step only the scalar switching factor changes
        let mut h_free = DMatrix::<Complex64>::zeros(dim, dim);
        for m in 0..3 {
            h_free += (lowering[m].adjoint() * &lowering[m])
                .map(|v| v * Complex64::new(omegas[m], 0.0));
        }
        let x_probe = (&lowering[0] + lowering[0].adjoint())
            .map(|v| v / Complex64::new(2.0f64.sqrt(), 0.0));
        let xx: Vec<DMatrix<Complex64>> = (0..2)
            .map(|k| {
                let x_field = (&lowering[k + 1] + lowering[k + 1].adjoint())
                    .map(|v| v / Complex64::new(2.0f64.sqrt(), 0.0));
                &x_probe * x_field
            })
            .collect();
        let h_at = |t: f64| {
            let mut h = h_free.clone();
            let g = toy.coupling_at(t);
            for k in 0..2 {
                h += xx[k].map(|v| v * Complex64::new(2.0 * g[(0, k)], 0.0));
            }
            h
        };
        let mut psi = nalgebra::DVector::<Complex64>::zeros(dim);
        psi[0] = Complex64::ONE;
        let (t0, t1) = (-4.0f64, 4.0f64);
        let steps = 6000;
        let h_step = (t1 - t0) / steps as f64;
        let mi = Complex64::new(0.0, -1.0);
        for i in 0..steps {
            let t = t0 + i as f64 * h_step;
            let h1 = h_at(t);
            let h2 = h_at(t + 0.5 * h_step);
            let h4 = h_at(t + h_step);
            let k1 = (&h1 * &psi).map(|v| mi * v);
            let k2 = (&h2 * (&psi + &k1 * Complex64::new(0.5 * h_step, 0.0))).map(|v| mi * v);
            let k3 = (&h2 * (&psi + &k2 * Complex64::new(0.5 * h_step, 0.0))).map(|v| mi * v);
            let k4 = (&h4 * (&psi + &k3 * Complex64::new(h_step, 0.0))).map(|v| mi * v);
            psi += (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4)
                * Complex64::new(h_step / 6.0, 0.0);
        }
        // interaction picture on the probe factor, then partial trace
        let mut rho_probe = DMatrix::<Complex64>::zeros(3, 3);
        for a in 0..3usize {
            for b in 0..3usize {
                let mut acc = Complex64::ZERO;
                for f1 in 0..cut {
                    for f2 in 0..cut {
                        let ia = a * cut * cut + f1 * cut + f2;
                        let ib = b * cut * cut + f1 * cut + f2;
                        acc += psi[ia] * psi[ib].conj();
                    }
                }
                let phase = Complex64::new(0.0, omegas[0] * t1 * (a as f64 - b as f64)).exp();
                rho_probe[(a, b)] = phase * acc;
            }
        }

        let vac = GaussianState::vacuum(3);
        let (evolved, _) = evolve_exact(&toy, &vac, (t0, t1), 16000).unwrap();
        let rotated = into_interaction_picture(&evolved, &omegas, t1);
        let gaussian = trace_to_mode(&rotated, 0).unwrap();
        let diff = (&gaussian.rho - &rho_probe).norm();
        assert!(diff < 5e-5, "fock vs covariance oracle distance {diff}");
    }

    #[test]
    fn field_cap_tail_is_bounded() {
        // enlarging the field truncation 8 -> 27 modes moves the
        // perturbative P by less than the kernel tail bound
        use crate::kernel::boxfield_tail_bound;
        let probe = quadratic_modes_at(0.4, 0.0, 1, [4.0; 3]).unwrap();
        let accessible = probe.modes[0].clone();
        let win = gaussian_window(1.0).unwrap();
        let t_width = 1.0f64;
        let p_at = |cap: usize| {
            let field = box_modes(8.0, 0.0, cap).unwrap();
            let kernel = SmearedKernel::discrete(&accessible, &field, 1e-12).unwrap();
            let smearing = Smearing {
                window: win,
                gap: accessible.omega,
                center: accessible.center(),
                mode: accessible.clone(),
                gamma: 1.0,
            };
            let cfg = crate::perturbation::CouplingConfig {
                lambda: 0.1,
                smearing,
                field: FieldSpec::new(0.0, 1e-12).unwrap(),
                quad: QuadControls::default(),
            };
            let engine = ResponseEngine::with_kernel(&cfg, kernel).unwrap();
            engine.probability(accessible.omega).unwrap().p
        };
        let p8 = p_at(2);
        let p27 = p_at(3);
        // Gaussian window decay: |zeta~(nu + Omega)|^2 <= 2 T^2 e^{-nu eps'}
        // with eps' = nu_min T^2 / pi for every tail frequency
        let nu_min = std::f64::consts::PI * 3.0 / 8.0;
        let eps_eff = nu_min * t_width * t_width / std::f64::consts::PI;
        let accessible_norm = 1.0 / (2.0 * accessible.omega);
        let bound = 0.1f64.powi(2)
            * 2.0
            * t_width
            * t_width
            * accessible_norm
            * (8.0f64 / 2.0).powi(3)
            * boxfield_tail_bound(8.0, 0.0, 2, eps_eff);
        assert!(
            (p27 - p8).abs() <= bound,
            "delta {} exceeds tail bound {bound}",
            (p27 - p8).abs()
        );
    }
}
