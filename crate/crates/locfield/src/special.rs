//! Special-function evaluations used by the mode bases and quadrature rules:
//! Legendre nodes, stable Hermite-Gaussian functions and Laguerre polynomials.

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
///
/// Newton iteration on P_n starting from the Chebyshev-like initial guess;
/// converges to machine precision in a handful of steps for any practical n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // initial guess for the i-th positive root
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// P_n(x) and P_n'(x) via the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Normalized Hermite function psi_n(u) = H_n(u) e^{-u^2/2} / sqrt(2^n n! sqrt(pi)).
///
/// The recurrence runs on the normalized functions themselves,
/// psi_n = u sqrt(2/n) psi_{n-1} - sqrt((n-1)/n) psi_{n-2},
/// so no factorials or 2^n prefactors ever appear and the evaluation
/// stays in range for arbitrarily large n.
pub fn hermite_function(n: usize, u: f64) -> f64 {
    let psi0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * u * u).exp();
    if n == 0 {
        return psi0;
    }
    let mut prev = psi0;
    let mut cur = std::f64::consts::SQRT_2 * u * psi0;
    for k in 2..=n {
        let kf = k as f64;
        let next = u * (2.0 / kf).sqrt() * cur - ((kf - 1.0) / kf).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Laguerre polynomial L_n(x) by the standard recurrence.
pub fn laguerre(n: usize, x: f64) -> f64 {
    let mut l0 = 1.0;
    if n == 0 {
        return l0;
    }
    let mut l1 = 1.0 - x;
    for k in 1..n {
        let kf = k as f64;
        let l2 = ((2.0 * kf + 1.0 - x) * l1 - kf * l0) / (kf + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

/// Chebyshev interpolant of a smooth function on [a, b].
///
/// Built from samples at the Chebyshev points of the second kind and
/// evaluated with the Clenshaw recurrence on the coefficient expansion.
#[derive(Debug, Clone)]
pub struct Chebyshev {
    a: f64,
    b: f64,
    coeffs: Vec<f64>,
}

impl Chebyshev {
    pub fn fit(a: f64, b: f64, degree: usize, f: impl Fn(f64) -> f64) -> Self {
        let n = degree;
        assert!(n >= 1 && b > a);
        let samples: Vec<f64> = (0..=n)
            .map(|j| {
                let x = (std::f64::consts::PI * j as f64 / n as f64).cos();
                f(0.5 * (a + b) + 0.5 * (b - a) * x)
            })
            .collect();
        // discrete cosine transform of the second-kind point samples
        let mut coeffs = vec![0.0; n + 1];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let mut acc = 0.5 * (samples[0] + if k % 2 == 0 { samples[n] } else { -samples[n] });
            for (j, s) in samples.iter().enumerate().take(n).skip(1) {
                acc += s * (std::f64::consts::PI * (k * j) as f64 / n as f64).cos();
            }
            *c = 2.0 * acc / n as f64;
        }
        coeffs[0] *= 0.5;
        coeffs[n] *= 0.5;
        Chebyshev { a, b, coeffs }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - self.a - self.b) / (self.b - self.a);
        let mut sum = 0.0;
        let mut tkm1 = 0.0;
        let mut tk = 0.0;
        for (k, &c) in self.coeffs.iter().enumerate() {
            let tnext = match k {
                0 => 1.0,
                1 => t,
                _ => 2.0 * t * tk - tkm1,
            };
            sum += c * tnext;
            tkm1 = tk;
            tk = tnext;
        }
        sum
    }
}

/// Piecewise Chebyshev interpolant over a sorted list of breakpoints;
/// keeps spectral accuracy for functions with isolated kinks at the breaks.
#[derive(Debug, Clone)]
pub struct PiecewiseChebyshev {
    breaks: Vec<f64>,
    pieces: Vec<Chebyshev>,
}

impl PiecewiseChebyshev {
    pub fn fit(breaks: &[f64], degree: usize, f: impl Fn(f64) -> f64) -> Self {
        assert!(breaks.len() >= 2);
        let pieces = breaks
            .windows(2)
            .map(|w| Chebyshev::fit(w[0], w[1], degree, &f))
            .collect();
        PiecewiseChebyshev { breaks: breaks.to_vec(), pieces }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.pieces.len();
        let i = match self.breaks[1..n].partition_point(|&b| b <= x) {
            i if i >= n => n - 1,
            i => i,
        };
        self.pieces[i].eval(x)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.breaks[0], self.breaks[self.breaks.len() - 1])
    }
}
