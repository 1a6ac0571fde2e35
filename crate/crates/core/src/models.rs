//! Closed-form spectra and eigenfunctions of the flat and effective models on
//! the rescaled rectangle `Π = (0, 2πR) × (-1, 1)`.
//!
//! Fake modes are labelled by a signed longitudinal index: `m > 0` is the
//! cosine `(πR)^{-1/2} cos(ms/2R)`, `m < 0` the sine `(πR)^{-1/2} sin(|m|s/2R)`
//! and `m = 0` the constant `(2πR)^{-1/2}`. Transverse factors are
//! `cos(nπu/2)` for odd `n` and `sin(nπu/2)` for even `n`. Only `m + n` odd
//! survives the twisted seam condition `ψ(0, u) = ψ(2πR, -u)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::StripParams;
use crate::mathieu::{char_values, fourier_coefficients, MathieuChar, MathieuKind};

/// Mathieu parameter of the effective potential `-cos(s/R)/8R²`.
pub const EFFECTIVE_Q: f64 = -0.25;
/// Relative tolerance below which eigenvalues are merged into one entry.
pub const MERGE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Fake,
    EffCe,
    EffSe,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Fake => "fake",
            Family::EffCe => "eff_ce",
            Family::EffSe => "eff_se",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    pub family: Family,
    pub m: i32,
    pub n: u32,
}

impl ModeIndex {
    pub fn new(family: Family, m: i32, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("transverse index n must be >= 1"));
        }
        match family {
            Family::EffCe if m < 0 => return Err(Error::input(format!("ce mode needs m >= 0, got {m}"))),
            Family::EffSe if m < 1 => return Err(Error::input(format!("se mode needs m >= 1, got {m}"))),
            _ => {}
        }
        if (m.unsigned_abs() + n).is_multiple_of(2) {
            return Err(Error::input(format!(
                "mode (m={m}, n={n}) violates the parity rule: m + n must be odd"
            )));
        }
        Ok(Self { family, m, n })
    }

    pub fn fake(m: i32, n: u32) -> Result<Self> {
        Self::new(Family::Fake, m, n)
    }
}

impl std::fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}({},{})", self.family, self.m, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Fake,
    Effective,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEntry {
    pub value: f64,
    pub modes: Vec<ModeIndex>,
}

impl SpectrumEntry {
    pub fn multiplicity(&self) -> usize {
        self.modes.len()
    }
}

/// Ascending eigenvalues with merged degeneracies.
///
/// The final entry is kept whole, so the entries may hold more than `count`
/// eigenvalues; [`Spectrum::values`] returns exactly `count`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub params: StripParams,
    pub model: Model,
    pub count: usize,
    pub entries: Vec<SpectrumEntry>,
}

impl Spectrum {
    /// The `count` smallest eigenvalues repeated according to multiplicity.
    pub fn values(&self) -> Vec<f64> {
        self.labelled().into_iter().map(|(v, _)| v).collect()
    }

    /// The `count` smallest eigenvalues with one mode label each.
    pub fn labelled(&self) -> Vec<(f64, ModeIndex)> {
        self.entries
            .iter()
            .flat_map(|e| e.modes.iter().map(move |&md| (e.value, md)))
            .take(self.count)
            .collect()
    }
}

fn transverse_energy(p: &StripParams, n: u32) -> f64 {
    let k = n as f64 * PI / (2.0 * p.a);
    k * k
}

/// Eigenvalue `(m/2R)² + (nπ/2a)²` of a fake mode.
pub fn fake_eigenvalue(p: &StripParams, mode: &ModeIndex) -> f64 {
    let l = mode.m as f64 / (2.0 * p.r);
    l * l + transverse_energy(p, mode.n)
}

fn check_count(count: usize) -> Result<()> {
    if count == 0 {
        Err(Error::input("count must be >= 1"))
    } else {
        Ok(())
    }
}

/// Sorts candidates, merges near-coincident values and keeps whole entries
/// until `count` eigenvalues are covered.
fn collect_entries(mut cands: Vec<(f64, ModeIndex)>, count: usize) -> Vec<SpectrumEntry> {
    cands.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut entries: Vec<SpectrumEntry> = Vec::new();
    for (v, md) in cands {
        match entries.last_mut() {
            Some(e) if (v - e.value).abs() <= MERGE_TOLERANCE * e.value.abs().max(1.0) => e.modes.push(md),
            _ => {
                if entries.iter().map(SpectrumEntry::multiplicity).sum::<usize>() >= count {
                    break;
                }
                entries.push(SpectrumEntry {
                    value: v,
                    modes: vec![md],
                })
            }
        }
    }
    for e in &mut entries {
        e.modes.sort();
    }
    entries
}

/// The `count` smallest fake eigenvalues.
pub fn fake_spectrum(p: &StripParams, count: usize) -> Result<Spectrum> {
    check_count(count)?;
    // the 2k+1 modes (m even, |m| <= 2k, n = 1) bound the count-th value
    let k = (count / 2) as f64;
    let bound = (2.0 * k / (2.0 * p.r)).powi(2) + p.e1();
    let cap = bound * (1.0 + 10.0 * MERGE_TOLERANCE);
    let m_max = (2.0 * p.r * (cap - p.e1()).max(0.0).sqrt()).floor() as i32;
    let n_max = (2.0 * p.a / PI * cap.sqrt()).floor() as u32;
    let mut cands = Vec::new();
    for n in 1..=n_max {
        for m in -m_max..=m_max {
            if let Ok(md) = ModeIndex::fake(m, n) {
                let v = fake_eigenvalue(p, &md);
                if v <= cap {
                    cands.push((v, md));
                }
            }
        }
    }
    Ok(Spectrum {
        params: *p,
        model: Model::Fake,
        count,
        entries: collect_entries(cands, count),
    })
}

/// The `count` smallest eigenvalues `c_m(-1/4)/4R² + (nπ/2a)²` of the
/// effective model, `c_m` running over `a_m` (ce) and `b_m` (se).
pub fn effective_spectrum(p: &StripParams, count: usize) -> Result<Spectrum> {
    effective_spectrum_at(p, count, EFFECTIVE_Q)
}

fn effective_spectrum_at(p: &StripParams, count: usize, q: f64) -> Result<Spectrum> {
    check_count(count)?;
    let scale = 1.0 / (4.0 * p.r * p.r);
    let k = (count / 2) as u32;
    // 2k+1 candidates: ce_0, ce_2, se_2, …, ce_2k, se_2k, all with n = 1
    let seed = char_values(q, 2 * k)?;
    let bound = seed
        .iter()
        .filter(|c| c.order % 2 == 0)
        .map(|c| c.value * scale)
        .fold(f64::NEG_INFINITY, f64::max)
        + p.e1();
    let cap = bound + 10.0 * MERGE_TOLERANCE * bound.abs().max(1.0);
    // every characteristic value of order m is at least m² - 2|q|
    let floor = 2.0 * q.abs();
    let m_max = ((cap - p.e1()) / scale + floor).max(0.0).sqrt().floor() as u32;
    let n_max = (2.0 * p.a / PI * (cap + floor * scale).max(0.0).sqrt()).floor() as u32;
    let chars = char_values(q, m_max)?;
    let mut cands = Vec::new();
    for c in &chars {
        for n in 1..=n_max {
            let family = match c.kind {
                MathieuKind::Ce => Family::EffCe,
                MathieuKind::Se => Family::EffSe,
            };
            if let Ok(md) = ModeIndex::new(family, c.order as i32, n) {
                let v = c.value * scale + transverse_energy(p, n);
                if v <= cap {
                    cands.push((v, md));
                }
            }
        }
    }
    Ok(Spectrum {
        params: *p,
        model: Model::Effective,
        count,
        entries: collect_entries(cands, count),
    })
}

/// Longitudinal trigonometric type of a real fake mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    Constant,
    Cos,
    Sin,
}

/// Real eigenfunction of the flat model, unit norm on Π.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FakeMode {
    pub mode: ModeIndex,
    pub trig: Trig,
    /// Longitudinal wavenumber `|m|/2R`.
    pub k: f64,
    /// Transverse wavenumber `nπ/2`.
    pub kappa: f64,
    amplitude: f64,
}

impl FakeMode {
    /// `(X, X', X'')` at `s`.
    pub fn longitudinal(&self, s: f64) -> (f64, f64, f64) {
        let (a, k) = (self.amplitude, self.k);
        match self.trig {
            Trig::Constant => (a, 0.0, 0.0),
            Trig::Cos => {
                let (sn, cs) = (k * s).sin_cos();
                (a * cs, -a * k * sn, -a * k * k * cs)
            }
            Trig::Sin => {
                let (sn, cs) = (k * s).sin_cos();
                (a * sn, a * k * cs, -a * k * k * sn)
            }
        }
    }

    /// `Y(u)`; its second derivative is `-kappa² Y`.
    pub fn transverse(&self, u: f64) -> f64 {
        transverse_factor(self.mode.n, u)
    }

    pub fn eval(&self, s: f64, u: f64) -> f64 {
        self.longitudinal(s).0 * self.transverse(u)
    }
}

/// `cos(nπu/2)` for odd `n`, `sin(nπu/2)` for even `n`.
pub fn transverse_factor(n: u32, u: f64) -> f64 {
    let x = n as f64 * PI * u / 2.0;
    if n % 2 == 1 {
        x.cos()
    } else {
        x.sin()
    }
}

pub fn fake_eigenfunction(mode: ModeIndex, p: &StripParams) -> Result<FakeMode> {
    if mode.family != Family::Fake {
        return Err(Error::input(format!("{mode} is not a fake mode")));
    }
    let mode = ModeIndex::fake(mode.m, mode.n)?;
    let (trig, amplitude) = match mode.m.signum() {
        0 => (Trig::Constant, (2.0 * PI * p.r).powf(-0.5)),
        1 => (Trig::Cos, (PI * p.r).powf(-0.5)),
        _ => (Trig::Sin, (PI * p.r).powf(-0.5)),
    };
    Ok(FakeMode {
        mode,
        trig,
        k: mode.m.unsigned_abs() as f64 / (2.0 * p.r),
        kappa: mode.n as f64 * PI / 2.0,
        amplitude,
    })
}

/// The first `size` real fake modes in basis order: ascending eigenvalue,
/// then `|m|`, cosine before sine, then `n`.
pub fn fake_basis(p: &StripParams, size: usize) -> Result<Vec<FakeMode>> {
    let spec = fake_spectrum(p, size)?;
    let mut out = Vec::with_capacity(size);
    for e in &spec.entries {
        let mut modes = e.modes.clone();
        modes.sort_by_key(|md| (md.m.unsigned_abs(), md.m < 0, md.n));
        for md in modes {
            out.push(fake_eigenfunction(md, p)?);
        }
    }
    out.truncate(size);
    Ok(out)
}

/// Effective eigenfunction `(πR)^{-1/2} ce_m(s/2R) Y_n(u)` (or with `se_m`),
/// unit norm on Π.
#[derive(Debug, Clone)]
pub struct EffectiveMode {
    pub mode: ModeIndex,
    pub mathieu: MathieuChar,
    pub r: f64,
    /// `a_m(-1/4)/4R²` (or `b_m`): the longitudinal eigenvalue.
    pub nu: f64,
    pub value: f64,
}

impl EffectiveMode {
    /// Longitudinal factor and its first two derivatives in `s`.
    pub fn longitudinal(&self, s: f64) -> (f64, f64, f64) {
        let amp = (PI * self.r).powf(-0.5);
        let c = 1.0 / (2.0 * self.r);
        let (y, dy, d2y) = self.mathieu.eval_with_derivatives(s * c);
        (amp * y, amp * c * dy, amp * c * c * d2y)
    }

    pub fn eval(&self, s: f64, u: f64) -> f64 {
        self.longitudinal(s).0 * transverse_factor(self.mode.n, u)
    }

    /// Coefficients in the fake basis, as `(fake mode, coefficient)` pairs.
    ///
    /// The harmonics of `ce_m(s/2R)` and `se_m(s/2R)` are exactly the real fake
    /// longitudinal factors, so this is the Fourier series itself.
    pub fn fake_expansion(&self) -> Vec<(ModeIndex, f64)> {
        let mut out = Vec::with_capacity(self.mathieu.fourier.len());
        for (k, &c) in self.mathieu.fourier.iter().enumerate() {
            let h = self.mathieu.harmonic(k) as i32;
            let (m, coef) = match self.mathieu.kind {
                // (πR)^{-1/2}·A_0 is √2·A_0 times the constant mode's amplitude
                MathieuKind::Ce if h == 0 => (0, c * std::f64::consts::SQRT_2),
                MathieuKind::Ce => (h, c),
                MathieuKind::Se => (-h, c),
            };
            out.push((
                ModeIndex {
                    family: Family::Fake,
                    m,
                    n: self.mode.n,
                },
                coef,
            ));
        }
        out
    }
}

pub fn effective_eigenfunction(mode: ModeIndex, p: &StripParams) -> Result<EffectiveMode> {
    let mode = ModeIndex::new(mode.family, mode.m, mode.n)?;
    let kind = match mode.family {
        Family::EffCe => MathieuKind::Ce,
        Family::EffSe => MathieuKind::Se,
        Family::Fake => return Err(Error::input(format!("{mode} is not an effective mode"))),
    };
    let mathieu = fourier_coefficients(kind, mode.m as u32, EFFECTIVE_Q)?;
    let nu = mathieu.value / (4.0 * p.r * p.r);
    Ok(EffectiveMode {
        mode,
        value: nu + transverse_energy(p, mode.n),
        nu,
        mathieu,
        r: p.r,
    })
}
