//! Two-point functions of the free scalar field in 3+1 Minkowski vacuum:
//! the Wightman function (closed massless form and massive radial
//! quadrature), its momentum-space density, the field commutator, and a
//! truncated mode-sum kernel for a Dirichlet-box field.

use num_complex::Complex64;

use crate::error::{LocfieldError, Result};
use crate::quad::GaussRule;
use crate::spectrum::box_modes;

/// Free Klein-Gordon field in the Minkowski vacuum with an i-epsilon
/// regulator on the time difference.
#[derive(Debug, Clone, Copy)]
pub struct FieldSpec {
    pub mass: f64,
    pub epsilon: f64,
}

impl FieldSpec {
    pub fn new(mass: f64, epsilon: f64) -> Result<Self> {
        if mass < 0.0 {
            return Err(LocfieldError::InvalidParameter(format!(
                "mass m={mass} must be non-negative"
            )));
        }
        if !(epsilon > 0.0) {
            return Err(LocfieldError::InvalidParameter(format!(
                "regulator epsilon={epsilon} must be positive"
            )));
        }
        Ok(FieldSpec { mass, epsilon })
    }
}

/// A point of flat spacetime in the static frame.
#[derive(Debug, Clone, Copy)]
pub struct Event {
    pub t: f64,
    pub x: [f64; 3],
}

impl Event {
    pub fn new(t: f64, x: [f64; 3]) -> Self {
        Event { t, x }
    }
}

fn separation(a: Event, b: Event) -> (f64, f64) {
    let dt = a.t - b.t;
    let r = ((a.x[0] - b.x[0]).powi(2)
        + (a.x[1] - b.x[1]).powi(2)
        + (a.x[2] - b.x[2]).powi(2))
    .sqrt();
    (dt, r)
}

const FOUR_PI_SQ: f64 = 4.0 * std::f64::consts::PI * std::f64::consts::PI;

/// Massless vacuum Wightman function,
/// `W = 1/(4 pi^2) * 1/(r^2 - (dt - i eps)^2)`.
fn massless_closed(dt: f64, r: f64, epsilon: f64) -> Complex64 {
    let tau = Complex64::new(dt, -epsilon);
    1.0 / (FOUR_PI_SQ * (Complex64::new(r * r, 0.0) - tau * tau))
}

/// Radial momentum integral for the massive (or massless) Wightman function:
/// `W = 1/(4 pi^2 r) int_0^inf dk (k/omega_k) sin(k r) e^{-i omega_k (dt - i eps)}`,
/// with the `r -> 0` limit `1/(4 pi^2) int dk (k^2/omega_k) e^{-...}`.
fn radial_quadrature(mass: f64, dt: f64, r: f64, epsilon: f64) -> Result<Complex64> {
    // the regulator suppresses the tail by e^{-omega eps}
    let k_max = mass + 30.0 / epsilon;
    // half-period panels of the oscillation in k
    let osc = r + dt.abs() + epsilon;
    let panel = (std::f64::consts::PI / osc).min(k_max / 16.0);
    let n_panels = (k_max / panel).ceil() as usize;
    if n_panels > 400_000 {
        return Err(LocfieldError::Integrator(format!(
            "radial quadrature needs {n_panels} panels; increase epsilon or smear first"
        )));
    }
    let rule = GaussRule::new(16);
    let mut acc = Complex64::ZERO;
    for i in 0..n_panels {
        let a = i as f64 * panel;
        let b = (a + panel).min(k_max);
        acc += rule.integrate_complex(a, b, |k| {
            let omega = (k * k + mass * mass).sqrt();
            let damp = Complex64::new(0.0, -omega * dt).exp() * (-omega * epsilon).exp();
            let radial = if r < 1e-12 { k * k } else { k * (k * r).sin() / r };
            radial / omega * damp
        });
    }
    Ok(acc / FOUR_PI_SQ)
}

/// Vacuum Wightman function `W(a, b)` of the free field.
pub fn wightman_vacuum(spec: FieldSpec, a: Event, b: Event) -> Result<Complex64> {
    let (dt, r) = separation(a, b);
    if spec.mass == 0.0 {
        Ok(massless_closed(dt, r, spec.epsilon))
    } else {
        radial_quadrature(spec.mass, dt, r, spec.epsilon)
    }
}

/// The massless radial-quadrature path, exposed for cross-checking the
/// closed form against the mode-sum representation.
pub fn wightman_radial(spec: FieldSpec, a: Event, b: Event) -> Result<Complex64> {
    let (dt, r) = separation(a, b);
    radial_quadrature(spec.mass, dt, r, spec.epsilon)
}

/// Momentum-space density `1/((2 pi)^3 2 omega_k)` of the vacuum kernel.
pub fn momentum_density(spec: FieldSpec, k: f64) -> Result<f64> {
    if k < 0.0 {
        return Err(LocfieldError::InvalidParameter(format!(
            "wavenumber k={k} must be non-negative"
        )));
    }
    let omega = (k * k + spec.mass * spec.mass).sqrt();
    Ok(1.0 / ((2.0 * std::f64::consts::PI).powi(3) * 2.0 * omega))
}

/// Field commutator `[phi(a), phi(b)] = W(a,b) - W(b,a) = 2i Im W(a,b)`.
pub fn commutator(spec: FieldSpec, a: Event, b: Event) -> Result<Complex64> {
    let w_ab = wightman_vacuum(spec, a, b)?;
    let w_ba = wightman_vacuum(spec, b, a)?;
    Ok(w_ab - w_ba)
}

/// Truncated mode-sum Wightman function of a field confined to `[0,d]^3`
/// with Dirichlet walls: `sum_n e^{-i omega_n dt} Phi_n(x_a) Phi_n(x_b)`,
/// summed over per-axis indices up to `n_cap`.
pub fn boxfield_wightman(
    d: f64,
    m: f64,
    n_cap: usize,
    a: Event,
    b: Event,
) -> Result<Complex64> {
    boxfield_wightman_reg(d, m, n_cap, a, b, 0.0)
}

/// Same mode sum with a damping regulator `e^{-omega_n eps}` per term,
/// which makes the sum absolutely convergent with a computable tail bound.
pub fn boxfield_wightman_reg(
    d: f64,
    m: f64,
    n_cap: usize,
    a: Event,
    b: Event,
    epsilon: f64,
) -> Result<Complex64> {
    for ev in [a, b] {
        if ev.x.iter().any(|&c| c < 0.0 || c > d) {
            return Err(LocfieldError::Domain(format!(
                "event at ({}, {}, {}) lies outside the box [0,{d}]^3",
                ev.x[0], ev.x[1], ev.x[2]
            )));
        }
    }
    let basis = box_modes(d, m, n_cap)?;
    let dt = a.t - b.t;
    let mut acc = Complex64::ZERO;
    for mode in &basis.modes {
        let phase = Complex64::new(0.0, -mode.omega * dt).exp();
        let damp = (-mode.omega * epsilon).exp();
        acc += phase * damp * mode.eval(&a.x) * mode.eval(&b.x);
    }
    Ok(acc)
}

/// Upper bound on the truncated tail of the regulated box mode sum: every
/// dropped term is bounded by `(2/d)^3 e^{-omega eps} / (2 omega)` and the
/// shell frequencies grow linearly, so the geometric-tail majorant applies.
pub fn boxfield_tail_bound(d: f64, m: f64, n_cap: usize, epsilon: f64) -> f64 {
    assert!(epsilon > 0.0);
    let amp = (2.0 / d).powi(3);
    let omega_shell =
        |s: usize| (m * m + (std::f64::consts::PI / d).powi(2) * (s * s) as f64).sqrt();
    // shells s > n_cap by the max per-axis index; shell s has < 3(s+1)^2 modes
    let mut bound = 0.0;
    let mut s = n_cap + 1;
    loop {
        let omega = omega_shell(s);
        let term = 3.0 * ((s + 1) * (s + 1)) as f64 * amp * (-omega * epsilon).exp()
            / (2.0 * omega);
        bound += term;
        if term < 1e-16 * bound.max(1e-300) || s > n_cap + 100_000 {
            break;
        }
        s += 1;
    }
    bound
}
