//! Tensor-product quadrature on `Π = (0, 2πR) × (-1, 1)`.
//!
//! The longitudinal direction uses the equispaced trapezoidal rule and the
//! transverse direction Gauss–Legendre. Integrands built from the twisted
//! basis satisfy `g(s + 2πR, u) = g(s, -u)` rather than plain periodicity.
//! Because the Gauss–Legendre nodes are mirrored exactly, the transverse sum
//! `G(s) = Σ w_j g(s, u_j)` is genuinely `2πR`-periodic and the trapezoidal
//! rule converges spectrally in `s`.

use crate::error::{Error, Result};
use crate::geometry::StripParams;

const NEWTON_MAX_ITER: usize = 100;

/// Nodes and weights of the `order`-point Gauss–Legendre rule on (-1, 1),
/// nodes ascending.
pub fn gauss_legendre(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if order == 0 {
        return Err(Error::input("Gauss-Legendre order must be >= 1"));
    }
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi's initial guess for the i-th largest root
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let (p, d) = legendre_with_derivative(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 * x.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::numerical(format!(
                "Newton iteration for Gauss-Legendre root {i} of order {n} did not converge"
            )));
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // mirror so that the rule is exactly symmetric
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// `P_n(x)` and `P_n'(x)` from the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor grid: periodic trapezoid in `s`, Gauss–Legendre in `u`.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub s_nodes: Vec<f64>,
    pub s_weights: Vec<f64>,
    pub u_nodes: Vec<f64>,
    pub u_weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn new(p: &StripParams, ms: usize, mu: usize) -> Result<Self> {
        if ms == 0 {
            return Err(Error::input("longitudinal quadrature needs at least one node"));
        }
        let len = p.length();
        let h = len / ms as f64;
        let s_nodes = (0..ms).map(|i| i as f64 * h).collect();
        let (u_nodes, u_weights) = gauss_legendre(mu)?;
        Ok(Self {
            s_nodes,
            s_weights: vec![h; ms],
            u_nodes,
            u_weights,
        })
    }

    /// Default orders for integrands whose basis content reaches longitudinal
    /// harmonic `max_harmonic` and transverse index `max_transverse`.
    pub fn default_orders(max_harmonic: usize, max_transverse: usize) -> (usize, usize) {
        (4 * max_harmonic + 32, 2 * max_transverse + 16)
    }

    pub fn ms(&self) -> usize {
        self.s_nodes.len()
    }

    pub fn mu(&self) -> usize {
        self.u_nodes.len()
    }
}

/// `Σ_i Σ_j w_i w_j f(s_i, u_j)` in a fixed summation order.
pub fn integrate_2d(grid: &QuadratureGrid, f: impl Fn(f64, f64) -> f64) -> Result<f64> {
    let mut total = 0.0;
    for (&s, &ws) in grid.s_nodes.iter().zip(&grid.s_weights) {
        let mut row = 0.0;
        for (&u, &wu) in grid.u_nodes.iter().zip(&grid.u_weights) {
            let v = f(s, u);
            if !v.is_finite() {
                return Err(Error::input(format!("integrand is {v} at node (s={s}, u={u})")));
            }
            row += wu * v;
        }
        total += ws * row;
    }
    Ok(total)
}
