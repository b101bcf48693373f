//! Second-order reduced state of the accessible mode: excitation
//! probability and |2><0| coherence from the smeared Wightman kernel, with
//! two independent evaluation paths (spacetime double integral vs
//! momentum-space reduction), the harmonic-oscillator detector state from
//! the operator-ordered Dyson expansion, and the numerical cancellation of
//! the traced-out-mode term.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{LocfieldError, Result};
use crate::kernel::FieldSpec;
use crate::quad::{adaptive_complex, adaptive_real, GaussRule};
use crate::smearing::{Smearing, Window};
use crate::special::PiecewiseChebyshev;
use crate::spectrum::{axis_overlap, Mode, ModeBasis, ModeProfile};

/// Quadrature controls for the response integrals.
#[derive(Debug, Clone, Copy)]
pub struct QuadControls {
    /// absolute tolerance floor for the 1D adaptive integrals, relative to
    /// the kernel scale
    pub abs_tol: f64,
    /// relative tolerance for the 1D adaptive integrals
    pub rel_tol: f64,
    /// relative agreement demanded of the two probability paths; the
    /// consistency error fires at 10x this value
    pub path_tol: f64,
    /// Chebyshev degree per piece for the radial autocorrelation fit
    pub kernel_degree: usize,
    /// cap on the Chebyshev degree per piece for the time-kernel fit
    pub time_degree_cap: usize,
    /// Gauss order in cos(theta) for angular averages
    pub angular_mu: usize,
    /// trapezoid points in phi for angular averages
    pub angular_phi: usize,
}

impl Default for QuadControls {
    fn default() -> Self {
        QuadControls {
            abs_tol: 1e-13,
            rel_tol: 1e-10,
            path_tol: 1e-7,
            kernel_degree: 200,
            time_degree_cap: 2400,
            angular_mu: 48,
            angular_phi: 96,
        }
    }
}

/// Coupling of the accessible mode to the ambient field.
#[derive(Debug, Clone)]
pub struct CouplingConfig {
    /// coupling strength lambda (units energy^2)
    pub lambda: f64,
    pub smearing: Smearing,
    pub field: FieldSpec,
    pub quad: QuadControls,
}

impl CouplingConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(LocfieldError::InvalidParameter(format!(
                "coupling lambda={} must be finite and non-negative",
                self.lambda
            )));
        }
        let t_scale = self.smearing.window.timescale();
        if self.field.epsilon > t_scale / 100.0 {
            return Err(LocfieldError::InvalidParameter(format!(
                "regulator epsilon={} must be at most T/100 = {}",
                self.field.epsilon,
                t_scale / 100.0
            )));
        }
        Ok(())
    }
}

/// Spatially smeared Wightman kernel of the accessible mode,
/// `F(u) = int dV dV' W(u; x - x') Phi_N(x) Phi_N(x')`, with
/// `F(-u) = conj(F(u))`.
#[derive(Debug, Clone)]
pub enum SmearedKernel {
    /// Chebyshev fit of F over `[0, span]` for the continuum vacuum field.
    Continuum {
        f_re: PiecewiseChebyshev,
        f_im: PiecewiseChebyshev,
        span: f64,
        /// highest material oscillation frequency in F
        freq_hint: f64,
        /// max |F| over the fit, used to scale absolute tolerances
        scale: f64,
    },
    /// Exact discrete-mode kernel `sum_k w_k e^{-i nu_k u} e^{-nu_k eps}`
    /// (field confined to a box, weights from mode overlaps).
    Discrete {
        weights: Vec<f64>,
        freqs: Vec<f64>,
        epsilon: f64,
        freq_hint: f64,
        scale: f64,
    },
}

fn mode_length_scale(mode: &Mode) -> f64 {
    match &mode.profile {
        ModeProfile::BoxSine { d, n } => {
            let n_max = *n.iter().max().unwrap() as f64;
            d / (n_max + 1.0)
        }
        ModeProfile::HermiteGauss { ell, n, .. } => {
            let n_max = *n.iter().max().unwrap() as f64;
            ell / (2.0 * n_max + 1.0).sqrt()
        }
        ModeProfile::Sampled1D { grid, .. } => grid[grid.len() - 1] - grid[0],
    }
}

/// Radial breakpoints where the angular-averaged autocorrelation can kink.
fn radial_breaks(mode: &Mode, r_max: f64) -> Vec<f64> {
    let mut breaks = vec![0.0];
    if let ModeProfile::BoxSine { d, .. } = &mode.profile {
        for b in [*d, d * 2.0f64.sqrt(), d * 3.0f64.sqrt()] {
            if b < r_max {
                breaks.push(b);
            }
        }
    }
    breaks.push(r_max);
    breaks
}

/// Support radius of the autocorrelation of a separable mode.
fn autocorr_radius(mode: &Mode) -> f64 {
    match &mode.profile {
        ModeProfile::BoxSine { d, .. } => 3.0f64.sqrt() * d,
        ModeProfile::HermiteGauss { ell, n, .. } => {
            let n_max = *n.iter().max().unwrap() as f64;
            // Gaussian factor e^{-s^2/4 l^2}: negligible beyond ~16 l even
            // with the Laguerre polynomial growth
            3.0f64.sqrt() * ell * (16.0 + 2.0 * n_max.sqrt())
        }
        ModeProfile::Sampled1D { .. } => unreachable!("continuum kernel needs a 3D mode"),
    }
}

impl SmearedKernel {
    /// Build the continuum kernel for a separable mode coupled to the
    /// massless Minkowski vacuum. The spatial double integral is reduced to
    /// the angular-averaged autocorrelation `c(r)` (closed-form per-axis
    /// autocorrelations), and the lightcone singularity of the radial
    /// integral is removed by linear-order subtraction.
    pub fn continuum(
        mode: &Mode,
        field: &FieldSpec,
        span: f64,
        quad: &QuadControls,
    ) -> Result<Self> {
        if mode.dim() != 3 {
            return Err(LocfieldError::InvalidParameter(
                "the continuum response kernel needs a separable 3D mode".into(),
            ));
        }
        if field.mass != 0.0 {
            return Err(LocfieldError::InvalidParameter(
                "the direct spacetime path is implemented for the massless field; \
                 use the momentum path for massive fields"
                    .into(),
            ));
        }
        let eps = field.epsilon;
        let r_max = autocorr_radius(mode);
        let kg2 = mode.kg_prefactor() * mode.kg_prefactor();

        // angular-averaged autocorrelation c(r) = (1/4pi) int dOmega C(r n)
        let mu_rule = GaussRule::new(quad.angular_mu);
        let n_phi = quad.angular_phi;
        let cbar = |r: f64| -> f64 {
            let mut acc = 0.0;
            for (mu, wmu) in mu_rule.points(-1.0, 1.0) {
                let sint = (1.0 - mu * mu).max(0.0).sqrt();
                for j in 0..n_phi {
                    let phi = 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64;
                    let u = [r * sint * phi.cos(), r * sint * phi.sin(), r * mu];
                    let c: f64 = (0..3)
                        .map(|a| mode.axis_autocorrelation(a, u[a]).unwrap())
                        .product();
                    acc += wmu * c;
                }
            }
            kg2 * acc / (2.0 * n_phi as f64)
        };
        let g_breaks = radial_breaks(mode, r_max);
        let cbar_fit = PiecewiseChebyshev::fit(&g_breaks, quad.kernel_degree, cbar);
        let g = |r: f64| r * r * cbar_fit.eval(r);
        let g_scale = (0..64)
            .map(|i| g(r_max * i as f64 / 63.0).abs())
            .fold(0.0f64, f64::max);
        let c_int =
            adaptive_real(|r| cbar_fit.eval(r), 0.0, r_max, 1e-15 * g_scale, 1e-13, 4000).value;

        // F(u) = (1/pi) int_0^R g(r) / (r^2 - z^2) dr,  z = u - i eps
        let u_lo = 1e-3 * r_max;
        let f_of_u = |u: f64| -> Complex64 {
            let z = Complex64::new(u, -eps);
            let tol = quad.abs_tol * g_scale.max(1e-300);
            let r_cplx = Complex64::new(r_max, 0.0);
            if u <= u_lo {
                // g = r^2 cbar: split off int cbar dr, leaving a z^2-weighted
                // remainder whose pole term has a closed-form antiderivative
                let j = ((r_cplx - z).ln() - (-z).ln() - (r_cplx + z).ln() + z.ln())
                    / (2.0 * z);
                let c_u = cbar_fit.eval(u);
                let i_smooth = adaptive_complex(
                    |r| {
                        Complex64::new(cbar_fit.eval(r) - c_u, 0.0)
                            / (Complex64::new(r * r, 0.0) - z * z)
                    },
                    0.0,
                    r_max,
                    tol,
                    quad.rel_tol,
                    4000,
                )
                .value;
                (Complex64::new(c_int, 0.0) + z * z * (i_smooth + c_u * j))
                    / std::f64::consts::PI
            } else if u < r_max * (1.0 - 1e-12) {
                // subtract the pole at r = u to linear order
                let h = 1e-6 * r_max;
                let g_t = g(u);
                let g_p = (g((u + h).min(r_max)) - g((u - h).max(0.0))) / (2.0 * h);
                let i0 = (r_cplx - z).ln() - (-z).ln();
                let i1 = r_cplx + (z - u) * i0;
                let smooth = adaptive_complex(
                    |r| {
                        let num = g(r) - g_t - g_p * (r - u);
                        num / (Complex64::new(r, 0.0) - z)
                    },
                    0.0,
                    r_max,
                    tol,
                    quad.rel_tol,
                    4000,
                )
                .value;
                let near = smooth + g_t * i0 + g_p * i1;
                let far = adaptive_complex(
                    |r| Complex64::new(g(r), 0.0) / (Complex64::new(r, 0.0) + z),
                    0.0,
                    r_max,
                    tol,
                    quad.rel_tol,
                    4000,
                )
                .value;
                (near - far) / (2.0 * z * std::f64::consts::PI)
            } else {
                // pole outside the radial domain
                adaptive_complex(
                    |r| Complex64::new(g(r), 0.0) / (Complex64::new(r * r, 0.0) - z * z),
                    0.0,
                    r_max,
                    tol,
                    quad.rel_tol,
                    8000,
                )
                .value
                    / std::f64::consts::PI
            }
        };

        let freq_hint = field.mass + 6.0 / mode_length_scale(mode);
        let degree = ((3.0 * span * freq_hint / std::f64::consts::PI) as usize)
            .clamp(192, quad.time_degree_cap);
        let mut t_breaks: Vec<f64> = vec![0.0];
        for &b in &g_breaks {
            if b > 1e-12 && b < span {
                t_breaks.push(b);
            }
        }
        t_breaks.push(span);
        let f_re = PiecewiseChebyshev::fit(&t_breaks, degree, |u| f_of_u(u).re);
        let f_im = PiecewiseChebyshev::fit(&t_breaks, degree, |u| f_of_u(u).im);
        let scale = (0..128)
            .map(|i| {
                let u = span * i as f64 / 127.0;
                Complex64::new(f_re.eval(u), f_im.eval(u)).norm()
            })
            .fold(0.0f64, f64::max);
        Ok(SmearedKernel::Continuum { f_re, f_im, span, freq_hint, scale })
    }

    /// Exact kernel for a probe mode coupled to a field confined to a box:
    /// `F(u) = sum_k O_k^2 e^{-i nu_k u}` with `O_k = int Phi_N phi_k`.
    pub fn discrete(probe: &Mode, field_basis: &ModeBasis, epsilon: f64) -> Result<Self> {
        if probe.dim() != 3 {
            return Err(LocfieldError::InvalidParameter(
                "the discrete kernel needs a separable 3D probe mode".into(),
            ));
        }
        let mut weights = Vec::with_capacity(field_basis.len());
        let mut freqs = Vec::with_capacity(field_basis.len());
        for fm in &field_basis.modes {
            let overlap: f64 = (0..3).map(|a| axis_overlap(probe, fm, a)).product::<f64>()
                * probe.kg_prefactor()
                * fm.kg_prefactor();
            weights.push(overlap * overlap);
            freqs.push(fm.omega);
        }
        let freq_hint = freqs.iter().cloned().fold(0.0, f64::max);
        let scale = weights.iter().sum::<f64>();
        Ok(SmearedKernel::Discrete { weights, freqs, epsilon, freq_hint, scale })
    }

    pub fn eval(&self, u: f64) -> Complex64 {
        match self {
            SmearedKernel::Continuum { f_re, f_im, span, .. } => {
                let a = u.abs().min(*span);
                let v = Complex64::new(f_re.eval(a), f_im.eval(a));
                if u < 0.0 {
                    v.conj()
                } else {
                    v
                }
            }
            SmearedKernel::Discrete { weights, freqs, epsilon, .. } => weights
                .iter()
                .zip(freqs)
                .map(|(&w, &nu)| {
                    w * (-nu * epsilon).exp() * Complex64::new(0.0, -nu * u).exp()
                })
                .sum(),
        }
    }

    pub fn freq_hint(&self) -> f64 {
        match self {
            SmearedKernel::Continuum { freq_hint, .. } => *freq_hint,
            SmearedKernel::Discrete { freq_hint, .. } => *freq_hint,
        }
    }

    pub fn scale(&self) -> f64 {
        match self {
            SmearedKernel::Continuum { scale, .. } => *scale,
            SmearedKernel::Discrete { scale, .. } => *scale,
        }
    }
}

/// `int dv e^{i f v} zeta(v + u/2) zeta(v - u/2)`: closed form for the
/// Gaussian window, adaptive quadrature otherwise.
fn window_pair_overlap(win: &Window, u: f64, f: f64) -> Complex64 {
    match *win {
        Window::GaussianTime { t_width } => {
            let pi = std::f64::consts::PI;
            let val = t_width
                * (-pi * u * u / (4.0 * t_width * t_width)).exp()
                * (-f * f * t_width * t_width / (4.0 * pi)).exp();
            Complex64::new(val, 0.0)
        }
        Window::CompactTime { t0, t1 } => {
            let lo = t0 + 0.5 * u.abs();
            let hi = t1 - 0.5 * u.abs();
            if hi <= lo {
                return Complex64::ZERO;
            }
            adaptive_complex(
                |v| {
                    Complex64::new(win.eval(v + 0.5 * u) * win.eval(v - 0.5 * u), 0.0)
                        * Complex64::new(0.0, f * v).exp()
                },
                lo,
                hi,
                1e-14,
                1e-11,
                2000,
            )
            .value
        }
    }
}

/// Frequency beyond which the window's Fourier transform is negligible.
fn window_freq_cutoff(win: &Window) -> f64 {
    match *win {
        Window::GaussianTime { t_width } => 15.0 / t_width,
        // the bump transform decays sub-exponentially; generous cutoff
        Window::CompactTime { t0, t1 } => 300.0 / (t1 - t0),
    }
}

/// Excitation probability with diagnostics from both evaluation paths.
#[derive(Debug, Clone, Copy)]
pub struct Probability {
    pub p: f64,
    pub err: f64,
    pub p_direct: f64,
    pub p_independent: f64,
    pub path_delta: f64,
    /// false when lambda^2 * (response scale) exceeds the perturbative guard
    pub perturbative_ok: bool,
}

/// One point of a response sweep.
#[derive(Debug, Clone, Copy)]
pub struct ResponsePoint {
    pub gap: f64,
    pub p: f64,
    pub err: f64,
    pub c20: Complex64,
    pub path_delta: f64,
}

/// Truncated Fock density matrix of the accessible mode at order lambda^2.
#[derive(Debug, Clone)]
pub struct ReducedState {
    pub dim: usize,
    pub rho: DMatrix<Complex64>,
    /// perturbative order tag
    pub order: &'static str,
    /// false when an eigenvalue dips below -10x the quadrature tolerance
    pub positivity_ok: bool,
}

impl ReducedState {
    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.rho[(i, i)]).sum()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let adj = self.rho.adjoint();
        (&self.rho - adj).norm()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = self.rho.clone().symmetric_eigen();
        let mut evs: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        evs.sort_by(f64::total_cmp);
        evs
    }

    pub fn frobenius_distance(&self, other: &ReducedState) -> f64 {
        assert_eq!(self.dim, other.dim);
        (&self.rho - &other.rho).norm()
    }
}

/// Precomputed response machinery: the smeared kernel is built once and
/// shared across gap values and threads.
#[derive(Debug, Clone)]
pub struct ResponseEngine {
    pub lambda: f64,
    pub smearing: Smearing,
    pub field: FieldSpec,
    pub quad: QuadControls,
    pub kernel: Arc<SmearedKernel>,
}

impl ResponseEngine {
    /// Build the engine with the continuum vacuum kernel.
    pub fn new(cfg: &CouplingConfig) -> Result<Self> {
        cfg.validate()?;
        let (lo, hi) = cfg.smearing.window.support();
        let kernel =
            SmearedKernel::continuum(&cfg.smearing.mode, &cfg.field, hi - lo, &cfg.quad)?;
        Ok(ResponseEngine {
            lambda: cfg.lambda,
            smearing: cfg.smearing.clone(),
            field: cfg.field,
            quad: cfg.quad,
            kernel: Arc::new(kernel),
        })
    }

    /// Build the engine around an externally supplied kernel (e.g. the
    /// discrete box-field kernel used for the exact-evolution comparison).
    pub fn with_kernel(cfg: &CouplingConfig, kernel: SmearedKernel) -> Result<Self> {
        cfg.validate()?;
        Ok(ResponseEngine {
            lambda: cfg.lambda,
            smearing: cfg.smearing.clone(),
            field: cfg.field,
            quad: cfg.quad,
            kernel: Arc::new(kernel),
        })
    }

    fn u_span(&self) -> f64 {
        let (lo, hi) = self.smearing.window.support();
        hi - lo
    }

    /// Direct path: `P = lambda^2 * 2 Re int_0^U e^{-i gap u} F(u) G(u) du`
    /// after folding the double time integral onto the difference variable.
    fn p_direct(&self, gap: f64) -> (f64, f64) {
        let span = self.u_span();
        let scale = self.kernel.scale() * self.smearing.window.timescale();
        let q = adaptive_complex(
            |u| {
                Complex64::new(0.0, -gap * u).exp()
                    * self.kernel.eval(u)
                    * window_pair_overlap(&self.smearing.window, u, 0.0)
            },
            0.0,
            span,
            self.quad.abs_tol * scale.max(1e-300),
            self.quad.rel_tol,
            20_000,
        );
        let l2 = self.lambda * self.lambda;
        (l2 * 2.0 * q.value.re, l2 * 2.0 * q.error)
    }

    /// Independent path: momentum-space reduction for the continuum kernel,
    /// exact spectral sum for the discrete kernel.
    fn p_independent(&self, gap: f64) -> (f64, f64) {
        let l2 = self.lambda * self.lambda;
        match self.kernel.as_ref() {
            SmearedKernel::Discrete { weights, freqs, epsilon, .. } => {
                let p: f64 = weights
                    .iter()
                    .zip(freqs)
                    .map(|(&w, &nu)| {
                        w * (-nu * epsilon).exp()
                            * self.smearing.window.fourier(nu + gap).norm_sqr()
                    })
                    .sum();
                (l2 * p, l2 * 1e-14 * p.abs())
            }
            SmearedKernel::Continuum { .. } => {
                let mode = &self.smearing.mode;
                let m = self.field.mass;
                let eps = self.field.epsilon;
                let w_cut = gap.abs() + window_freq_cutoff(&self.smearing.window) + m;
                let k_max = (w_cut * w_cut - m * m).max(1.0).sqrt();
                let mu_rule = GaussRule::new(self.quad.angular_mu);
                let n_phi = self.quad.angular_phi;
                let kg2 = mode.kg_prefactor() * mode.kg_prefactor();
                // solid-angle integral of |Phi~(k n)|^2
                let ang = |k: f64| -> f64 {
                    let mut acc = 0.0;
                    for (mu, wmu) in mu_rule.points(-1.0, 1.0) {
                        let sint = (1.0 - mu * mu).max(0.0).sqrt();
                        for j in 0..n_phi {
                            let phi =
                                2.0 * std::f64::consts::PI * j as f64 / n_phi as f64;
                            let kv = [k * sint * phi.cos(), k * sint * phi.sin(), k * mu];
                            let ft: Complex64 = (0..3)
                                .map(|a| mode.axis_fourier(a, kv[a]).unwrap())
                                .product();
                            acc += wmu * ft.norm_sqr();
                        }
                    }
                    kg2 * acc * 2.0 * std::f64::consts::PI / n_phi as f64
                };
                let norm = 1.0 / (2.0 * std::f64::consts::PI).powi(3);
                let q = adaptive_real(
                    |k| {
                        let omega = (k * k + m * m).sqrt();
                        let zf = self.smearing.window.fourier(omega + gap).norm_sqr();
                        norm * k * k / (2.0 * omega) * ang(k) * zf * (-omega * eps).exp()
                    },
                    0.0,
                    k_max,
                    self.quad.abs_tol,
                    self.quad.rel_tol,
                    4000,
                );
                (l2 * q.value, l2 * q.error)
            }
        }
    }

    /// Excitation probability cross-checked between both paths.
    pub fn probability(&self, gap: f64) -> Result<Probability> {
        let (p_direct, err_d) = self.p_direct(gap);
        let (p_indep, err_i) = self.p_independent(gap);
        let delta = (p_direct - p_indep).abs();
        let allowed = 10.0 * self.quad.path_tol * p_direct.abs().max(p_indep.abs())
            + 10.0 * (err_d + err_i)
            + 1e-30;
        if delta > allowed {
            return Err(LocfieldError::Consistency {
                direct: p_direct,
                momentum: p_indep,
                allowed,
            });
        }
        let p = p_indep; // the spectral representation is the tighter path
        let err = err_d + err_i;
        let t = self.smearing.window.timescale();
        let response_scale = p / (self.lambda * self.lambda * t * t).max(1e-300);
        let perturbative_ok = self.lambda * self.lambda * response_scale * t * t < 0.1;
        Ok(Probability {
            p,
            err,
            p_direct,
            p_independent: p_indep,
            path_delta: delta,
            perturbative_ok,
        })
    }

    /// `rho_20 = -sqrt(2) lambda^2 int_{t>t'} zeta zeta' e^{i gap (t+t')} F(t-t')`,
    /// evaluated on the triangular domain via difference/mean coordinates.
    pub fn coherence(&self, gap: f64) -> Result<Complex64> {
        let span = self.u_span();
        let scale = self.kernel.scale() * self.smearing.window.timescale();
        let q = adaptive_complex(
            |u| self.kernel.eval(u) * window_pair_overlap(&self.smearing.window, u, 2.0 * gap),
            0.0,
            span,
            self.quad.abs_tol * scale.max(1e-300),
            self.quad.rel_tol,
            20_000,
        );
        Ok(-(2.0f64).sqrt() * self.lambda * self.lambda * q.value)
    }

    /// Independently computed `rho_02` from the mirrored time-ordered term,
    /// using a literal theta function on a tensor-product grid (diagonal
    /// nodes carry weight 1/2).
    pub fn coherence_mirrored(&self, gap: f64) -> Result<Complex64> {
        let (lo, hi) = self.smearing.window.support();
        let grid = composite_grid(lo, hi, 200);
        let zeta: Vec<f64> =
            grid.iter().map(|&(t, _)| self.smearing.window.eval(t)).collect();
        let mut acc = Complex64::ZERO;
        for (i, &(t, wt)) in grid.iter().enumerate() {
            for (j, &(tp, wtp)) in grid.iter().enumerate() {
                let theta = if j > i {
                    1.0
                } else if j == i {
                    0.5
                } else {
                    0.0
                };
                if theta == 0.0 {
                    continue;
                }
                acc += theta
                    * wt
                    * wtp
                    * zeta[i]
                    * zeta[j]
                    * Complex64::new(0.0, -gap * (t + tp)).exp()
                    * self.kernel.eval(t - tp);
            }
        }
        Ok(-(2.0f64).sqrt() * self.lambda * self.lambda * acc)
    }

    /// Reduced state of the accessible mode at order lambda^2 in the
    /// three-level truncation: diag(1 - P, P, 0) plus the |2><0| coherence.
    pub fn reduced_state(&self, gap: f64) -> Result<ReducedState> {
        let prob = self.probability(gap)?;
        let c20 = self.coherence(gap)?;
        let mut rho = DMatrix::<Complex64>::zeros(3, 3);
        rho[(0, 0)] = Complex64::new(1.0 - prob.p, 0.0);
        rho[(1, 1)] = Complex64::new(prob.p, 0.0);
        rho[(2, 0)] = c20;
        rho[(0, 2)] = c20.conj();
        let mut state = ReducedState { dim: 3, rho, order: "lambda^2", positivity_ok: true };
        // a state truncated at order lambda^2 carries an intrinsic negative
        // eigenvalue of order (lambda^2)^2; allow it alongside the
        // quadrature tolerance
        let second = prob.p.hypot(c20.norm());
        let tol = 10.0 * (prob.err + self.quad.abs_tol).max(1e-14) + second * second;
        state.positivity_ok = state.eigenvalues().iter().all(|&e| e > -tol);
        Ok(state)
    }

    /// Harmonic-oscillator detector state from the operator-ordered Dyson
    /// expansion: the monopole `m(t) = e^{-i gap t} a + e^{i gap t} a^dag`
    /// is represented on a working Fock space one level above the
    /// truncation and the three Dyson terms are integrated as matrices.
    pub fn udw_reduced_state(&self, gap: f64) -> Result<ReducedState> {
        let dim = 3;
        let work = dim + 1;
        let mut a_op = DMatrix::<Complex64>::zeros(work, work);
        for i in 1..work {
            a_op[(i - 1, i)] = Complex64::new((i as f64).sqrt(), 0.0);
        }
        let adag = a_op.adjoint();
        let m_at = |t: f64| -> DMatrix<Complex64> {
            let down = Complex64::new(0.0, -gap * t).exp();
            a_op.map(|v| v * down) + adag.map(|v| v * down.conj())
        };
        let mut rho0 = DMatrix::<Complex64>::zeros(work, work);
        rho0[(0, 0)] = Complex64::ONE;

        let (lo, hi) = self.smearing.window.support();
        let span = hi - lo;
        let freq = gap.abs() + self.kernel.freq_hint();
        let panels = ((1.3 * span * freq / std::f64::consts::PI) as usize).clamp(24, 400);
        let u_grid = composite_grid(0.0, span, panels);

        let mut term11 = DMatrix::<Complex64>::zeros(work, work);
        let mut tri = DMatrix::<Complex64>::zeros(work, work);
        for &(u, wu) in &u_grid {
            let v_lo = lo + 0.5 * u;
            let v_hi = hi - 0.5 * u;
            if v_hi <= v_lo {
                continue;
            }
            let v_panels = ((1.3 * (v_hi - v_lo) * freq / std::f64::consts::PI) as usize)
                .clamp(24, 400);
            let f_u = self.kernel.eval(u);
            for &(v, wv) in &composite_grid(v_lo, v_hi, v_panels) {
                let t_late = v + 0.5 * u;
                let t_early = v - 0.5 * u;
                let zz = self.smearing.window.eval(t_late) * self.smearing.window.eval(t_early);
                if zz == 0.0 {
                    continue;
                }
                let w = wu * wv * zz;
                let m_late = m_at(t_late);
                let m_early = m_at(t_early);
                // first Dyson term M(t')rho0 M(t) with W(t - t'), both
                // orientations of the time difference
                term11 += (&m_early * &rho0 * &m_late).map(|x| w * f_u * x)
                    + (&m_late * &rho0 * &m_early).map(|x| w * f_u.conj() * x);
                // time-ordered term over t > t'
                tri += (&m_late * &m_early * &rho0).map(|x| w * f_u * x);
            }
        }
        let l2 = Complex64::new(self.lambda * self.lambda, 0.0);
        let delta = term11 - &tri - tri.adjoint();
        let full = rho0 + delta.map(|x| l2 * x);
        // truncate the working level and restore exact unit trace
        let mut rho = DMatrix::<Complex64>::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                rho[(i, j)] = full[(i, j)];
            }
        }
        let tr = (0..dim).map(|i| rho[(i, i)].re).sum::<f64>();
        let rho = rho.map(|x| x / Complex64::new(tr, 0.0));
        let mut state = ReducedState { dim, rho, order: "lambda^2", positivity_ok: true };
        // allow the intrinsic (lambda^2)^2 negativity of the truncation
        let mut second2 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let base = if i == 0 && j == 0 { 1.0 } else { 0.0 };
                second2 += (state.rho[(i, j)] - Complex64::new(base, 0.0)).norm_sqr();
            }
        }
        let tol = 10.0 * self.quad.path_tol.max(1e-12) + second2;
        state.positivity_ok = state.eigenvalues().iter().all(|&e| e > -tol);
        Ok(state)
    }

    /// Sweep over gap values; points are evaluated concurrently, failures
    /// are recorded per point and the sweep continues.
    pub fn response_curve(&self, gaps: &[f64]) -> Vec<Result<ResponsePoint>> {
        gaps.par_iter()
            .map(|&gap| {
                let prob = self.probability(gap)?;
                let c20 = self.coherence(gap)?;
                Ok(ResponsePoint {
                    gap,
                    p: prob.p,
                    err: prob.err,
                    c20,
                    path_delta: prob.path_delta,
                })
            })
            .collect()
    }

    /// Magnitude of the would-be contribution of traced-out modes relative
    /// to its unsigned size, with the step function evaluated numerically
    /// on a tensor grid: `|I_full - I_upper - I_lower| / |I_full|` where the
    /// three integrals share every node and the diagonal carries weight 1/2
    /// in each ordered part. The identity theta(u) + theta(-u) = 1 then
    /// forces cancellation to rounding.
    pub fn spurious_term_residual(&self, other_modes: &[Mode]) -> Result<f64> {
        if other_modes
            .iter()
            .any(|m| m.index == self.smearing.mode.index && m.omega == self.smearing.mode.omega)
        {
            return Err(LocfieldError::InvalidParameter(
                "traced modes must be disjoint from the accessible mode".into(),
            ));
        }
        let (lo, hi) = self.smearing.window.support();
        let grid = composite_grid(lo, hi, 25); // 200 nodes per axis
        let zeta: Vec<f64> =
            grid.iter().map(|&(t, _)| self.smearing.window.eval(t)).collect();
        let mut worst = 0.0f64;
        for mode in other_modes {
            let omega = mode.omega;
            let mut full = Complex64::ZERO;
            let mut upper = Complex64::ZERO;
            let mut lower = Complex64::ZERO;
            let mut term_scale = 0.0f64;
            for (i, &(t, wt)) in grid.iter().enumerate() {
                for (j, &(tp, wtp)) in grid.iter().enumerate() {
                    let val = wt
                        * wtp
                        * zeta[i]
                        * zeta[j]
                        * Complex64::new(0.0, -omega * (t - tp)).exp()
                        * self.kernel.eval(t - tp);
                    full += val;
                    term_scale += val.norm();
                    if i > j {
                        upper += val;
                    } else if i == j {
                        upper += 0.5 * val;
                        lower += 0.5 * val;
                    } else {
                        lower += val;
                    }
                }
            }
            worst = worst.max((full - upper - lower).norm() / term_scale.max(1e-300));
        }
        Ok(worst)
    }
}

/// Composite Gauss-Legendre grid: `panels` panels of an 8-point rule.
fn composite_grid(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let rule = GaussRule::new(8);
    let step = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * 8);
    for i in 0..panels {
        let x0 = a + i as f64 * step;
        out.extend(rule.points(x0, x0 + step));
    }
    out
}

/// Excitation probability of the accessible mode (both paths cross-checked).
pub fn excitation_probability(cfg: &CouplingConfig) -> Result<Probability> {
    ResponseEngine::new(cfg)?.probability(cfg.smearing.gap)
}

/// |2><0| coherence amplitude of the reduced state.
pub fn coherence_02(cfg: &CouplingConfig) -> Result<Complex64> {
    ResponseEngine::new(cfg)?.coherence(cfg.smearing.gap)
}

/// O(lambda^2) reduced state of the accessible mode.
pub fn reduced_state(cfg: &CouplingConfig) -> Result<ReducedState> {
    ResponseEngine::new(cfg)?.reduced_state(cfg.smearing.gap)
}

/// Harmonic-oscillator detector state from the operator-ordered expansion.
pub fn udw_reduced_state(cfg: &CouplingConfig) -> Result<ReducedState> {
    ResponseEngine::new(cfg)?.udw_reduced_state(cfg.smearing.gap)
}

/// Numerical check that the traced-out-mode term cancels.
pub fn spurious_term_residual(cfg: &CouplingConfig, other_modes: &[Mode]) -> Result<f64> {
    ResponseEngine::new(cfg)?.spurious_term_residual(other_modes)
}

/// Response sweep over a list of gaps.
pub fn response_curve(cfg: &CouplingConfig, gaps: &[f64]) -> Result<Vec<Result<ResponsePoint>>> {
    Ok(ResponseEngine::new(cfg)?.response_curve(gaps))
}
