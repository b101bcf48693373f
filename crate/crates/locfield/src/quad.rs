//! Quadrature machinery: fixed Gauss-Legendre rules on intervals and an
//! adaptive Gauss-Kronrod (G7, K15) integrator for real and complex
//! integrands, in the QUADPACK style.

use num_complex::Complex64;

use crate::special::gauss_legendre;

/// Positive abscissae of the 15-point Kronrod rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_813,
    0.949_107_912_342_759,
    0.864_864_423_359_769,
    0.741_531_185_599_394,
    0.586_087_235_467_691,
    0.405_845_151_377_397,
    0.207_784_955_007_898,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529,
    0.063_092_092_629_979,
    0.104_790_010_322_250,
    0.140_653_259_715_525,
    0.169_004_726_639_267,
    0.190_350_578_064_785,
    0.204_432_940_075_298,
    0.209_482_141_084_728,
];

/// Weights of the embedded 7-point Gauss rule (odd Kronrod abscissae).
const WG: [f64; 4] = [
    0.129_484_966_168_870,
    0.279_705_391_489_277,
    0.381_830_050_505_119,
    0.417_959_183_673_469,
];

/// Result of an adaptive integration: value and error estimate.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature<T> {
    pub value: T,
    pub error: f64,
}

fn qk15_complex(f: &mut impl FnMut(f64) -> Complex64, a: f64, b: f64) -> (Complex64, f64) {
    let half = 0.5 * (b - a);
    let center = 0.5 * (a + b);
    let mut kronrod = Complex64::ZERO;
    let mut gauss = Complex64::ZERO;
    for (j, &x) in XGK.iter().enumerate() {
        let fsum = if x == 0.0 {
            f(center)
        } else {
            f(center - half * x) + f(center + half * x)
        };
        kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).norm();
    (value, err)
}

/// Adaptive Gauss-Kronrod integration of a complex integrand on [a, b].
///
/// Bisects the interval with the largest error estimate until the summed
/// error drops below `abs_tol + rel_tol * |I|` or `max_intervals` is hit.
pub fn adaptive_complex(
    mut f: impl FnMut(f64) -> Complex64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Quadrature<Complex64> {
    let (v, e) = qk15_complex(&mut f, a, b);
    let mut segs: Vec<(f64, f64, Complex64, f64)> = vec![(a, b, v, e)];
    loop {
        let total: Complex64 = segs.iter().map(|s| s.2).sum();
        let err: f64 = segs.iter().map(|s| s.3).sum();
        if err <= abs_tol + rel_tol * total.norm() || segs.len() >= max_intervals {
            return Quadrature { value: total, error: err };
        }
        let worst = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        let (sa, sb, _, _) = segs.swap_remove(worst);
        let mid = 0.5 * (sa + sb);
        let (v1, e1) = qk15_complex(&mut f, sa, mid);
        let (v2, e2) = qk15_complex(&mut f, mid, sb);
        segs.push((sa, mid, v1, e1));
        segs.push((mid, sb, v2, e2));
    }
}

/// Adaptive integration of a real integrand on [a, b].
pub fn adaptive_real(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Quadrature<f64> {
    let q = adaptive_complex(
        |x| Complex64::new(f(x), 0.0),
        a,
        b,
        abs_tol,
        rel_tol,
        max_intervals,
    );
    Quadrature { value: q.value.re, error: q.error }
}

/// A fixed Gauss-Legendre rule mapped onto an arbitrary interval.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        GaussRule { nodes, weights }
    }

    pub fn points(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let center = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (center + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.points(a, b).map(|(x, w)| w * f(x)).sum()
    }

    pub fn integrate_complex(
        &self,
        a: f64,
        b: f64,
        mut f: impl FnMut(f64) -> Complex64,
    ) -> Complex64 {
        self.points(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn adaptive_handles_oscillatory_integrand() {
        // int_0^10 cos(25 x) dx = sin(250)/25
        let q = adaptive_real(|x| (25.0 * x).cos(), 0.0, 10.0, 1e-12, 1e-12, 2000);
        assert_abs_diff_eq!(q.value, (250.0f64).sin() / 25.0, epsilon = 1e-10);
    }

    #[test]
    fn adaptive_complex_phase_integral() {
        // int_{-inf}^{inf} e^{-x^2} e^{i w x} dx = sqrt(pi) e^{-w^2/4}
        let w = 3.0;
        let q = adaptive_complex(
            |x| Complex64::new(0.0, w * x).exp() * (-x * x).exp(),
            -10.0,
            10.0,
            1e-13,
            1e-13,
            2000,
        );
        let expect = std::f64::consts::PI.sqrt() * (-w * w / 4.0).exp();
        assert_abs_diff_eq!(q.value.re, expect, epsilon = 1e-11);
        assert_abs_diff_eq!(q.value.im, 0.0, epsilon = 1e-11);
    }

    #[test]
    fn gauss_rule_mapped_interval() {
        let rule = GaussRule::new(24);
        let v = rule.integrate(1.0, 4.0, |x| x.ln());
        assert_abs_diff_eq!(v, 4.0 * 4.0f64.ln() - 4.0 - (1.0f64.ln() - 1.0), epsilon = 1e-12);
    }
}
