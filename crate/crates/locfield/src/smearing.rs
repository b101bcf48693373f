//! Spacetime smearing data for the interaction: switching windows in time,
//! the smearing `Lambda^-(t,x) = zeta(t) e^{-i omega_N t} Phi_N(x)` built
//! from the accessible mode, and spatial Fourier transforms of the profile.

use num_complex::Complex64;

use crate::error::{LocfieldError, Result};
use crate::quad::adaptive_complex;
use crate::spectrum::{Mode, ModeProfile};

/// Dimensionless switching window in time (spatial factor is 1).
#[derive(Debug, Clone, Copy)]
pub enum Window {
    /// `zeta(t) = exp(-pi t^2 / (2 T^2))`, effectively supported in |t| <~ 3T.
    GaussianTime { t_width: f64 },
    /// Smooth bump supported on `(t0, t1)`, equal to 1 at the midpoint.
    CompactTime { t0: f64, t1: f64 },
}

/// Gaussian window of width `T`.
pub fn gaussian_window(t_width: f64) -> Result<Window> {
    if !(t_width > 0.0) {
        return Err(LocfieldError::InvalidParameter(format!(
            "window width T={t_width} must be positive"
        )));
    }
    Ok(Window::GaussianTime { t_width })
}

/// Smooth compactly supported window on `(t0, t1)`.
pub fn compact_window(t0: f64, t1: f64) -> Result<Window> {
    if !(t1 > t0) {
        return Err(LocfieldError::InvalidParameter(format!(
            "switching interval ({t0}, {t1}) must have t1 > t0"
        )));
    }
    Ok(Window::CompactTime { t0, t1 })
}

impl Window {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Window::GaussianTime { t_width } => {
                (-std::f64::consts::PI * t * t / (2.0 * t_width * t_width)).exp()
            }
            Window::CompactTime { t0, t1 } => {
                let u = (2.0 * t - t0 - t1) / (t1 - t0);
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - u * u)).exp()
                }
            }
        }
    }

    /// Characteristic duration (the `T` of all reported T-units).
    pub fn timescale(&self) -> f64 {
        match *self {
            Window::GaussianTime { t_width } => t_width,
            Window::CompactTime { t0, t1 } => 0.5 * (t1 - t0),
        }
    }

    /// Interval outside which the window is negligible (< ~1e-11).
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Window::GaussianTime { t_width } => (-4.0 * t_width, 4.0 * t_width),
            Window::CompactTime { t0, t1 } => (t0, t1),
        }
    }

    /// Fourier transform `zeta~(w) = integral zeta(t) e^{-i w t} dt`; closed
    /// Gaussian form, quadrature for the compact bump.
    pub fn fourier(&self, w: f64) -> Complex64 {
        match *self {
            Window::GaussianTime { t_width } => {
                let val = t_width
                    * std::f64::consts::SQRT_2
                    * (-w * w * t_width * t_width / (2.0 * std::f64::consts::PI)).exp();
                Complex64::new(val, 0.0)
            }
            Window::CompactTime { .. } => {
                let (a, b) = self.support();
                adaptive_complex(
                    |t| Complex64::new(self.eval(t), 0.0) * Complex64::new(0.0, -w * t).exp(),
                    a,
                    b,
                    1e-13,
                    1e-12,
                    2000,
                )
                .value
            }
        }
    }
}

/// Smearing of the accessible mode `N`: window, mode, energy gap and the
/// redshift factor relating the gap to the mode frequency.
#[derive(Debug, Clone)]
pub struct Smearing {
    pub window: Window,
    pub mode: Mode,
    pub gap: f64,
    pub center: Vec<f64>,
    pub gamma: f64,
}

/// Build the smearing `Lambda^- = zeta(t) e^{-i omega_N t} Phi_N(x)` for the
/// flat static case (gamma = 1).
pub fn build_lambda(window: Window, mode: &Mode) -> Smearing {
    build_lambda_redshifted(window, mode, 1.0)
}

/// Same with a constant redshift factor: the gap is `gamma * omega_N`.
pub fn build_lambda_redshifted(window: Window, mode: &Mode, gamma: f64) -> Smearing {
    Smearing {
        window,
        gap: gamma * mode.omega,
        center: mode.center(),
        mode: mode.clone(),
        gamma,
    }
}

impl Smearing {
    /// `Lambda^-(t, x) = zeta(t) e^{-i gap t} Phi_N(x)`.
    pub fn lambda_minus(&self, t: f64, x: &[f64]) -> Complex64 {
        Complex64::new(0.0, -self.gap * t).exp() * self.static_part(t, x)
    }

    /// `Lambda^+ = conj(Lambda^-)`.
    pub fn lambda_plus(&self, t: f64, x: &[f64]) -> Complex64 {
        self.lambda_minus(t, x).conj()
    }

    /// Static split `Lambda(t, x) = zeta(t) Phi_N(x)`, so that
    /// `Lambda^- = e^{-i gap t} Lambda`.
    pub fn static_part(&self, t: f64, x: &[f64]) -> f64 {
        self.window.eval(t) * self.mode.eval(x)
    }

    /// Spatial Fourier transform of the full mode profile,
    /// `Phi~_N(k) = integral Phi_N(x) e^{-i k.x} d^n x`.
    pub fn spatial_fourier(&self, k: &[f64]) -> Complex64 {
        spatial_fourier(&self.mode, k)
    }
}

/// `Phi~_N(k)` for any mode: closed per-axis transforms for the separable
/// bases, trapezoid quadrature for sampled 1D profiles.
pub fn spatial_fourier(mode: &Mode, k: &[f64]) -> Complex64 {
    match &mode.profile {
        ModeProfile::Sampled1D { grid, values, .. } => {
            assert_eq!(k.len(), 1);
            let mut acc = Complex64::ZERO;
            for i in 0..grid.len() - 1 {
                let h = grid[i + 1] - grid[i];
                let f0 = values[i] * Complex64::new(0.0, -k[0] * grid[i]).exp();
                let f1 = values[i + 1] * Complex64::new(0.0, -k[0] * grid[i + 1]).exp();
                acc += 0.5 * h * (f0 + f1);
            }
            acc
        }
        _ => {
            assert_eq!(k.len(), 3);
            let product: Complex64 =
                (0..3).map(|a| mode.axis_fourier(a, k[a]).unwrap()).product();
            mode.kg_prefactor() * product
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{adaptive_real, GaussRule};
    use crate::spectrum::{box_modes, quadratic_modes, ModeIndex};
    use approx::assert_abs_diff_eq;

    #[test]
    fn gaussian_window_values_and_norm() {
        let t_width = 0.8;
        let win = gaussian_window(t_width).unwrap();
        assert_abs_diff_eq!(win.eval(0.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            win.eval(3.0 * t_width),
            (-4.5 * std::f64::consts::PI).exp(),
            epsilon = 1e-18
        );
        let sq = adaptive_real(|t| win.eval(t).powi(2), -8.0, 8.0, 1e-13, 1e-13, 500);
        assert_abs_diff_eq!(sq.value, t_width, epsilon = 1e-11);
        assert!(gaussian_window(0.0).is_err());
    }

    #[test]
    fn gaussian_window_fourier_matches_quadrature() {
        let win = gaussian_window(1.3).unwrap();
        for w in [0.0, 0.7, 3.0] {
            let q = adaptive_complex(
                |t| Complex64::new(win.eval(t), 0.0) * Complex64::new(0.0, -w * t).exp(),
                -12.0,
                12.0,
                1e-13,
                1e-13,
                500,
            );
            let closed = win.fourier(w);
            assert_abs_diff_eq!(closed.re, q.value.re, epsilon = 1e-10);
            assert_abs_diff_eq!(closed.im, q.value.im, epsilon = 1e-10);
        }
    }

    #[test]
    fn compact_window_support_and_smoothness() {
        let win = compact_window(-1.0, 3.0).unwrap();
        assert_abs_diff_eq!(win.eval(1.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(win.eval(-1.0), 0.0, epsilon = 1e-300);
        assert_abs_diff_eq!(win.eval(3.0001), 0.0, epsilon = 1e-300);
        // window rises continuously near the edge
        assert!(win.eval(-0.999) < 1e-100);
        assert!(compact_window(1.0, 1.0).is_err());
    }

    #[test]
    fn lambda_structure() {
        let basis = box_modes(1.0, 0.0, 1).unwrap();
        let mode = &basis.modes[0];
        let win = gaussian_window(1.0).unwrap();
        let sm = build_lambda(win, mode);
        assert_abs_diff_eq!(sm.gap, mode.omega, epsilon = 1e-15);

        let x = [0.3, 0.6, 0.4];
        // at t=0 the phase and window are both 1
        let lm0 = sm.lambda_minus(0.0, &x);
        assert_abs_diff_eq!(lm0.re, mode.eval(&x), epsilon = 1e-15);
        assert_abs_diff_eq!(lm0.im, 0.0, epsilon = 1e-15);

        for t in [-1.2, 0.4, 2.0] {
            let lm = sm.lambda_minus(t, &x);
            let lp = sm.lambda_plus(t, &x);
            assert_abs_diff_eq!(lp.re, lm.re, epsilon = 1e-15);
            assert_abs_diff_eq!(lp.im, -lm.im, epsilon = 1e-15);
            // modulus carries only the window and profile
            assert_abs_diff_eq!(
                lm.norm(),
                (sm.window.eval(t) * mode.eval(&x)).abs(),
                epsilon = 1e-15
            );
            // static split reassembly
            let re = Complex64::new(0.0, -sm.gap * t).exp() * sm.static_part(t, &x);
            assert_abs_diff_eq!((re - lm).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn lambda_spacetime_norm() {
        // integral dt d^3x |Lambda^-|^2 = (integral zeta^2 dt) / (2 omega)
        let basis = box_modes(1.0, 0.0, 1).unwrap();
        let mode = &basis.modes[0];
        let t_width = 0.7;
        let sm = build_lambda(gaussian_window(t_width).unwrap(), mode);
        let rule = GaussRule::new(48);
        let axis: f64 = rule.integrate(0.0, 1.0, |x| mode.axis_eval(0, x).unwrap().powi(2));
        let space = mode.kg_prefactor().powi(2) * axis.powi(3);
        let time = adaptive_real(|t| sm.window.eval(t).powi(2), -6.0, 6.0, 1e-13, 1e-13, 500);
        assert_abs_diff_eq!(
            time.value * space,
            t_width / (2.0 * mode.omega),
            epsilon = 1e-10
        );
    }

    #[test]
    fn spatial_fourier_quadratic_ground_is_gaussian() {
        let ell = 0.8;
        let basis = quadratic_modes(ell, 0.0, 1).unwrap();
        let mode = &basis.modes[0];
        let at = |k: f64| spatial_fourier(mode, &[k, 0.0, 0.0]).norm();
        // |Phi~(k)| proportional to exp(-k^2 ell^2 / 2): check the width
        let ratio = (at(1.0 / ell) / at(0.0)).ln();
        assert_abs_diff_eq!(ratio, -0.5, epsilon = 1e-12);
    }

    #[test]
    fn spatial_fourier_reality_and_parity() {
        let basis = box_modes(1.0, 0.0, 2).unwrap();
        let mode = basis.mode(ModeIndex::Axes([2, 1, 1])).unwrap();
        let k = [1.3, -0.4, 2.2];
        let neg: Vec<f64> = k.iter().map(|v| -v).collect();
        let f = spatial_fourier(mode, &k);
        let g = spatial_fourier(mode, &neg);
        assert_abs_diff_eq!(f.re, g.re, epsilon = 1e-12);
        assert_abs_diff_eq!(f.im, -g.im, epsilon = 1e-12);
        // even sine index integrates to zero at k=0
        assert_abs_diff_eq!(
            spatial_fourier(mode, &[0.0; 3]).norm(),
            0.0,
            epsilon = 1e-13
        );
    }

    #[test]
    fn parseval_per_axis() {
        // (1/2pi) integral |f~(k)|^2 dk = 1 for each unit-normalized axis factor
        let boxed = box_modes(1.0, 0.0, 2).unwrap();
        let mode = boxed.mode(ModeIndex::Axes([2, 1, 1])).unwrap();
        let q = adaptive_real(
            |k| mode.axis_fourier(0, k).unwrap().norm_sqr(),
            -600.0,
            600.0,
            1e-10,
            1e-8,
            20000,
        );
        let val = q.value / (2.0 * std::f64::consts::PI);
        assert!((val - 1.0).abs() < 1e-6, "box axis Parseval {val}");

        let quad = quadratic_modes(0.8, 0.0, 3).unwrap();
        let mode = quad.mode(ModeIndex::Axes([2, 0, 0])).unwrap();
        let q = adaptive_real(
            |k| mode.axis_fourier(0, k).unwrap().norm_sqr(),
            -40.0,
            40.0,
            1e-12,
            1e-10,
            5000,
        );
        let val = q.value / (2.0 * std::f64::consts::PI);
        assert!((val - 1.0).abs() < 1e-8, "hermite axis Parseval {val}");
    }
}
