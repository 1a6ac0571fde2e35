//! Closed-form geometry of the Möbius strip built along a circle.
//!
//! The strip is the ruled surface
//!
//! ```text
//! L(s, t) = ( [R - t cos(s/2R)] cos(s/R),
//!             [R - t cos(s/2R)] sin(s/R),
//!             -t sin(s/2R) )
//! ```
//!
//! with `s ∈ [0, 2πR)` and `t ∈ (-a, a)`. Its metric is `diag(f², 1)` with
//! the Jacobian
//!
//! ```text
//! f(s, t) = sqrt( [1 - (t/R) cos(s/2R)]² + (t/2R)² ).
//! ```
//!
//! Every function here is a closed form in `s` and is valid for any real `s`.
//! The formulas are `4πR`-periodic and satisfy `f(s + 2πR, t) = f(s, -t)`,
//! so evaluating past the seam already lands on the identified point.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-width `a` and centre-circle radius `R` of the strip.
///
/// `a < R` is needed for an embedded (non self-intersecting) strip but is not
/// enforced; everything works for the immersed surface as well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripParams {
    pub a: f64,
    pub r: f64,
}

impl StripParams {
    pub fn new(a: f64, r: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::input(format!("half-width a must be positive, got {a}")));
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::input(format!("radius R must be positive, got {r}")));
        }
        Ok(Self { a, r })
    }

    /// Radius from the length `2πR` of the centre circle.
    pub fn from_circumference(a: f64, circumference: f64) -> Result<Self> {
        Self::new(a, circumference / (2.0 * PI))
    }

    /// Length of the longitudinal period `2πR`.
    pub fn length(&self) -> f64 {
        2.0 * PI * self.r
    }

    /// Lowest transverse energy `E₁ = (π / 2a)²`.
    pub fn e1(&self) -> f64 {
        let k = PI / (2.0 * self.a);
        k * k
    }

    pub fn is_embedded(&self) -> bool {
        self.a < self.r
    }

    /// Upper end of the uniform bound on `f²` over `|t| ≤ a`.
    pub fn f2_upper_bound(&self) -> f64 {
        let x = self.a / self.r;
        (1.0 + x).powi(2) + (0.5 * x).powi(2)
    }
}

/// Lower end of the uniform bound on `f²`, valid for every `a` and `R`.
pub const F2_LOWER_BOUND: f64 = 0.2;

/// A point of the parameter rectangle `[0, 2πR) × (-a, a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub s: f64,
    pub t: f64,
}

impl SurfacePoint {
    pub fn new(p: &StripParams, s: f64, t: f64) -> Result<Self> {
        if !(0.0..p.length()).contains(&s) || t.abs() >= p.a {
            return Err(Error::input(format!(
                "({s}, {t}) lies outside [0, {}) x (-{a}, {a})",
                p.length(),
                a = p.a
            )));
        }
        Ok(Self { s, t })
    }

    pub fn embed(&self, p: &StripParams) -> [f64; 3] {
        embed(p, self.s, self.t)
    }
}

/// The embedding `L(s, t)` into three-space.
pub fn embed(p: &StripParams, s: f64, t: f64) -> [f64; 3] {
    let r = p.r;
    let (sh, ch) = (s / (2.0 * r)).sin_cos();
    let (sf, cf) = (s / r).sin_cos();
    let rho = r - t * ch;
    [rho * cf, rho * sf, -t * sh]
}

/// `f²` and its partial derivatives, the building block for everything else.
#[derive(Debug, Clone, Copy)]
struct SquaredJacobian {
    f2: f64,
    ds: f64,
    dss: f64,
    dt: f64,
    dtt: f64,
}

fn squared_jacobian(p: &StripParams, s: f64, t: f64) -> SquaredJacobian {
    let r = p.r;
    let (sh, ch) = (s / (2.0 * r)).sin_cos();
    let g = 1.0 - t / r * ch;
    let h = t / (2.0 * r);
    // dg/ds and d²g/ds²
    let gs = t * sh / (2.0 * r * r);
    let gss = t * ch / (4.0 * r * r * r);
    SquaredJacobian {
        f2: g * g + h * h,
        ds: 2.0 * g * gs,
        dss: 2.0 * gs * gs + 2.0 * g * gss,
        dt: -2.0 * g * ch / r + t / (2.0 * r * r),
        dtt: 2.0 * ch * ch / (r * r) + 1.0 / (2.0 * r * r),
    }
}

/// Metric Jacobian `f(s, t)`.
pub fn jacobian_f(p: &StripParams, s: f64, t: f64) -> f64 {
    squared_jacobian(p, s, t).f2.sqrt()
}

/// `f` together with its first and second partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianDerivatives {
    pub f: f64,
    /// ∂f/∂s
    pub ds: f64,
    /// ∂f/∂t
    pub dt: f64,
    /// ∂²f/∂s²
    pub dss: f64,
    /// ∂²f/∂t²
    pub dtt: f64,
}

/// Analytic derivatives of `f`, obtained from those of `f²` via
/// `f' = (f²)' / 2f` and `f'' = ((f²)'' - 2 f'²) / 2f`.
pub fn jacobian_f_derivatives(p: &StripParams, s: f64, t: f64) -> JacobianDerivatives {
    let q = squared_jacobian(p, s, t);
    let f = q.f2.sqrt();
    let ds = q.ds / (2.0 * f);
    let dt = q.dt / (2.0 * f);
    JacobianDerivatives {
        f,
        ds,
        dt,
        dss: (q.dss - 2.0 * ds * ds) / (2.0 * f),
        dtt: (q.dtt - 2.0 * dt * dt) / (2.0 * f),
    }
}

/// Geometric potential `V_a(s, u)` of the operator on the rescaled rectangle,
/// with `f_a(s, u) = f(s, a u)`.
///
/// Since `∂_u f_a = a ∂_t f`, the `1/a²` factors cancel and the potential is
/// evaluated from the derivatives of `f` at `t = a u`.
pub fn potential_va(p: &StripParams, s: f64, u: f64) -> f64 {
    let d = jacobian_f_derivatives(p, s, p.a * u);
    potential_from_derivatives(&d)
}

pub(crate) fn potential_from_derivatives(d: &JacobianDerivatives) -> f64 {
    let f = d.f;
    let f2 = f * f;
    -1.25 * d.ds * d.ds / (f2 * f2) + 0.5 * d.dss / (f2 * f) - 0.25 * d.dt * d.dt / f2
        + 0.5 * d.dtt / f
}

/// Effective potential `V_eff(s) = -cos(s/R) / 8R²`; independent of `t`.
pub fn potential_veff(p: &StripParams, s: f64) -> f64 {
    -(s / p.r).cos() / (8.0 * p.r * p.r)
}

/// Gauss curvature on the centre circle and the geodesic curvature of the
/// circle as a curve on the surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curvatures {
    /// `K(s, 0) = -∂²_t f / f` at `t = 0`.
    pub gauss_on_axis: f64,
    /// `κ_g(s) = cos(s/2R) / R`; flips sign across the seam.
    pub geodesic: f64,
}

pub fn curvatures(p: &StripParams, s: f64) -> Curvatures {
    let d = jacobian_f_derivatives(p, s, 0.0);
    Curvatures {
        gauss_on_axis: -d.dtt / d.f,
        geodesic: (s / (2.0 * p.r)).cos() / p.r,
    }
}

/// `-κ_g²/4 - K/2`, which equals `V_eff` for this surface.
pub fn fermi_potential(c: &Curvatures) -> f64 {
    -0.25 * c.geodesic * c.geodesic - 0.5 * c.gauss_on_axis
}
