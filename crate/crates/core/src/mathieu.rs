//! Integral-order Mathieu functions `ce_m(η, q)`, `se_m(η, q)` and their
//! characteristic values `a_m(q)`, `b_m(q)`.
//!
//! Each of the four symmetry classes reduces to a symmetric tridiagonal
//! eigenproblem for the Fourier coefficients. Functions are normalised so
//! that `∫_{-π}^{π} ce_m² = ∫_{-π}^{π} se_m² = π`, and the coefficient of the
//! `m`-th harmonic is positive, so `ce_m(η, 0) = cos(mη)` and
//! `se_m(η, 0) = sin(mη)` (with `ce_0(η, 0) = 1/√2`).

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::linalg::{eig_tridiagonal, eig_tridiagonal_full, TridiagonalSymmetric};

pub const DEFAULT_TRUNCATION: usize = 64;
const MAX_TRUNCATION: usize = 8192;
/// Allowed change of a characteristic value when the truncation doubles.
pub const STABILITY_TOLERANCE: f64 = 1e-13;
const COEFFICIENT_CUTOFF: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MathieuKind {
    Ce,
    Se,
}

impl std::fmt::Display for MathieuKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MathieuKind::Ce => "ce",
            MathieuKind::Se => "se",
        })
    }
}

/// Parity class of the Fourier expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryClass {
    /// `ce_{2k}`: cos(2kη), k ≥ 0
    CeEven,
    /// `ce_{2k+1}`: cos((2k+1)η)
    CeOdd,
    /// `se_{2k+1}`: sin((2k+1)η)
    SeOdd,
    /// `se_{2k+2}`: sin((2k+2)η)
    SeEven,
}

impl SymmetryClass {
    pub const ALL: [SymmetryClass; 4] = [
        SymmetryClass::CeEven,
        SymmetryClass::CeOdd,
        SymmetryClass::SeOdd,
        SymmetryClass::SeEven,
    ];

    /// Class of `(kind, m)` and the position of `m` inside it.
    pub fn of(kind: MathieuKind, m: u32) -> Result<(Self, usize)> {
        match (kind, m % 2) {
            (MathieuKind::Ce, 0) => Ok((SymmetryClass::CeEven, (m / 2) as usize)),
            (MathieuKind::Ce, _) => Ok((SymmetryClass::CeOdd, (m / 2) as usize)),
            (MathieuKind::Se, _) if m == 0 => Err(Error::input("se_m requires m >= 1")),
            (MathieuKind::Se, 1) => Ok((SymmetryClass::SeOdd, (m / 2) as usize)),
            (MathieuKind::Se, _) => Ok((SymmetryClass::SeEven, (m / 2 - 1) as usize)),
        }
    }

    pub fn kind(self) -> MathieuKind {
        match self {
            SymmetryClass::CeEven | SymmetryClass::CeOdd => MathieuKind::Ce,
            SymmetryClass::SeOdd | SymmetryClass::SeEven => MathieuKind::Se,
        }
    }

    /// Harmonic carried by the first Fourier coefficient; later ones step by 2.
    pub fn first_harmonic(self) -> u32 {
        match self {
            SymmetryClass::CeEven => 0,
            SymmetryClass::CeOdd | SymmetryClass::SeOdd => 1,
            SymmetryClass::SeEven => 2,
        }
    }

    /// Order `m` of the `index`-th function in the class.
    pub fn order_at(self, index: usize) -> u32 {
        self.first_harmonic() + 2 * index as u32
    }
}

/// Symmetric tridiagonal recurrence matrix of a class, truncated to `order`.
///
/// For the even cosine class the matrix acts on `(√2·A_0, A_2, A_4, …)`.
pub fn recurrence_matrix(class: SymmetryClass, q: f64, order: usize) -> Result<TridiagonalSymmetric> {
    if order == 0 {
        return Err(Error::input("recurrence truncation must be >= 1"));
    }
    let h0 = class.first_harmonic() as f64;
    let mut diag: Vec<f64> = (0..order)
        .map(|k| {
            let h = h0 + 2.0 * k as f64;
            h * h
        })
        .collect();
    match class {
        SymmetryClass::CeOdd => diag[0] += q,
        SymmetryClass::SeOdd => diag[0] -= q,
        _ => {}
    }
    let mut off = vec![q; order - 1];
    if class == SymmetryClass::CeEven && order > 1 {
        off[0] = SQRT_2 * q;
    }
    TridiagonalSymmetric::new(diag, off)
}

/// Builder used to produce recurrence matrices; swapped out in fault-injection tests.
pub type RecurrenceBuilder = dyn Fn(SymmetryClass, f64, usize) -> Result<TridiagonalSymmetric> + Sync;

fn check_q(q: f64) -> Result<()> {
    if q.is_finite() {
        Ok(())
    } else {
        Err(Error::input(format!("Mathieu parameter q must be finite, got {q}")))
    }
}

fn initial_truncation(count: usize) -> usize {
    DEFAULT_TRUNCATION.max(2 * count + 16)
}

/// Lowest `count` eigenvalues of a class, truncation doubled until stable.
/// Returns the values and the truncation that produced them.
fn stable_class_values(
    class: SymmetryClass,
    q: f64,
    count: usize,
    build: &RecurrenceBuilder,
) -> Result<(Vec<f64>, usize)> {
    let mut order = initial_truncation(count);
    let mut prev = eig_tridiagonal(&build(class, q, order)?, count)?;
    loop {
        let next_order = order * 2;
        if next_order > MAX_TRUNCATION {
            return Err(Error::numerical(format!(
                "Mathieu characteristic values for {class:?} at q={q} not stable up to truncation {MAX_TRUNCATION}"
            )));
        }
        let next = eig_tridiagonal(&build(class, q, next_order)?, count)?;
        let stable = prev
            .iter()
            .zip(&next)
            .all(|(x, y)| (x - y).abs() < STABILITY_TOLERANCE * x.abs().max(1.0));
        if stable {
            return Ok((prev, order));
        }
        prev = next;
        order = next_order;
    }
}

/// A characteristic value together with the Fourier coefficients of its function.
#[derive(Debug, Clone, PartialEq)]
pub struct MathieuChar {
    pub kind: MathieuKind,
    pub order: u32,
    pub q: f64,
    pub value: f64,
    /// Coefficient `k` multiplies harmonic `first_harmonic + 2k`; empty when only
    /// the value was requested.
    pub fourier: Vec<f64>,
    pub first_harmonic: u32,
}

impl MathieuChar {
    pub fn harmonic(&self, k: usize) -> u32 {
        self.first_harmonic + 2 * k as u32
    }

    /// Value, first and second derivative at `eta`.
    pub fn eval_with_derivatives(&self, eta: f64) -> (f64, f64, f64) {
        let (mut y, mut dy, mut d2y) = (0.0, 0.0, 0.0);
        for (k, &c) in self.fourier.iter().enumerate() {
            let h = self.harmonic(k) as f64;
            let (sn, cs) = (h * eta).sin_cos();
            match self.kind {
                MathieuKind::Ce => {
                    y += c * cs;
                    dy -= c * h * sn;
                    d2y -= c * h * h * cs;
                }
                MathieuKind::Se => {
                    y += c * sn;
                    dy += c * h * cs;
                    d2y -= c * h * h * sn;
                }
            }
        }
        (y, dy, d2y)
    }

    pub fn eval(&self, eta: f64) -> f64 {
        self.eval_with_derivatives(eta).0
    }
}

/// `a_0..a_max_order` and `b_1..b_max_order` at parameter `q`, values only,
/// ordered `a_0, a_1, b_1, a_2, b_2, …`.
pub fn char_values(q: f64, max_order: u32) -> Result<Vec<MathieuChar>> {
    char_values_with(q, max_order, &recurrence_matrix)
}

/// As [`char_values`] with a caller-supplied recurrence builder.
pub fn char_values_with(q: f64, max_order: u32, build: &RecurrenceBuilder) -> Result<Vec<MathieuChar>> {
    check_q(q)?;
    let mut per_class = Vec::with_capacity(4);
    for class in SymmetryClass::ALL {
        let count = (0..)
            .take_while(|&i| class.order_at(i) <= max_order)
            .count();
        let values = if count == 0 {
            Vec::new()
        } else {
            stable_class_values(class, q, count, build)?.0
        };
        per_class.push((class, values));
    }
    let mut out = Vec::new();
    for m in 0..=max_order {
        for kind in [MathieuKind::Ce, MathieuKind::Se] {
            if kind == MathieuKind::Se && m == 0 {
                continue;
            }
            let (class, idx) = SymmetryClass::of(kind, m)?;
            let values = &per_class.iter().find(|(c, _)| *c == class).expect("all classes").1;
            out.push(MathieuChar {
                kind,
                order: m,
                q,
                value: values[idx],
                fourier: Vec::new(),
                first_harmonic: class.first_harmonic(),
            });
        }
    }
    Ok(out)
}

/// Characteristic value `a_m(q)` (ce) or `b_m(q)` (se).
pub fn characteristic_value(kind: MathieuKind, m: u32, q: f64) -> Result<f64> {
    check_q(q)?;
    let (class, idx) = SymmetryClass::of(kind, m)?;
    Ok(stable_class_values(class, q, idx + 1, &recurrence_matrix)?.0[idx])
}

/// Characteristic value and normalised Fourier coefficients of `ce_m` or `se_m`.
pub fn fourier_coefficients(kind: MathieuKind, m: u32, q: f64) -> Result<MathieuChar> {
    check_q(q)?;
    let (class, idx) = SymmetryClass::of(kind, m)?;
    let (values, order) = stable_class_values(class, q, idx + 1, &recurrence_matrix)?;
    let t = recurrence_matrix(class, q, order)?;
    let dec = eig_tridiagonal_full(&t, true)?;
    let mut v = dec
        .eigenvectors
        .expect("vectors requested")
        .swap_remove(idx);
    // unit eigenvector of the symmetric form already carries the π normalisation
    if class == SymmetryClass::CeEven {
        v[0] /= SQRT_2;
    }
    if v[idx] < 0.0 {
        v.iter_mut().for_each(|c| *c = -*c);
    }
    while v.len() > idx + 1 && v.last().is_some_and(|c| c.abs() < COEFFICIENT_CUTOFF) {
        v.pop();
    }
    Ok(MathieuChar {
        kind,
        order: m,
        q,
        value: values[idx],
        fourier: v,
        first_harmonic: class.first_harmonic(),
    })
}

/// Pointwise value of `ce_m(η, q)` or `se_m(η, q)`.
pub fn eval(kind: MathieuKind, m: u32, q: f64, eta: f64) -> Result<f64> {
    Ok(fourier_coefficients(kind, m, q)?.eval(eta))
}
