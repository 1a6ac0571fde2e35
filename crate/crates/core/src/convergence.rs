//! Thin-strip studies: how fast the curved-strip spectrum approaches the
//! effective one as the half-width `a` shrinks.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::galerkin::{effective_in_basis, solve, GalerkinConfig, GeometryMode};
use crate::geometry::StripParams;
use crate::linalg::{dot, eig_dense_symmetric, SymmetricMatrix};

/// Largest half-width accepted by the sweeps.
pub const MAX_HALF_WIDTH: f64 = 1.5;
/// Effective eigenvalues closer than this (times `max(1, λ)`) form one cluster.
pub const CLUSTER_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Eigenvalue,
    Eigenvector,
}

/// `steps` equispaced points from `a_min` to `a_max` inclusive.
pub fn uniform_grid(a_min: f64, a_max: f64, steps: usize) -> Result<Vec<f64>> {
    grid(a_min, a_max, steps, |t| a_min + t * (a_max - a_min))
}

/// `steps` log-equispaced points from `a_min` to `a_max` inclusive.
pub fn geometric_grid(a_min: f64, a_max: f64, steps: usize) -> Result<Vec<f64>> {
    grid(a_min, a_max, steps, |t| a_min * (a_max / a_min).powf(t))
}

fn grid(a_min: f64, a_max: f64, steps: usize, at: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    if !(a_min > 0.0 && a_max.is_finite() && a_min <= a_max) {
        return Err(Error::input(format!("invalid half-width range [{a_min}, {a_max}]")));
    }
    match steps {
        0 => Err(Error::input("grid needs at least one point")),
        1 => Ok(vec![a_min]),
        _ => {
            let mut g: Vec<f64> = (0..steps).map(|i| at(i as f64 / (steps - 1) as f64)).collect();
            g[steps - 1] = a_max;
            Ok(g)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub r: f64,
    pub a_grid: Vec<f64>,
    /// Number of eigenvalues compared at each half-width.
    pub k: usize,
    pub n_basis: usize,
    pub geometry: GeometryMode,
}

impl SweepConfig {
    pub fn new(r: f64, a_grid: Vec<f64>, k: usize, n_basis: usize) -> Self {
        Self {
            r,
            a_grid,
            k,
            n_basis,
            geometry: GeometryMode::True,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.n_basis {
            return Err(Error::input(format!(
                "need 1 <= K <= N, got K={} N={}",
                self.k, self.n_basis
            )));
        }
        if self.a_grid.is_empty() {
            return Err(Error::input("half-width grid is empty"));
        }
        if !self.a_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::input("half-width grid must be strictly ascending"));
        }
        if !self.a_grid.iter().all(|&a| a > 0.0 && a <= MAX_HALF_WIDTH) {
            return Err(Error::input(format!("half-widths must lie in (0, {MAX_HALF_WIDTH}]")));
        }
        StripParams::new(self.a_grid[0], self.r)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub a: f64,
    /// First `K` effective eigenvalues.
    pub effective: Vec<f64>,
    /// First `K` Galerkin eigenvalues.
    pub galerkin: Vec<f64>,
    /// `|λ_eff - λ̃| / a²` per index.
    pub eigenvalue_ratios: Vec<f64>,
    /// Eigenvector (or cluster subspace) distances, eigenvector sweeps only.
    pub distances: Option<Vec<f64>>,
}

impl SweepPoint {
    pub fn eigenvalue_difference(&self, n: usize) -> f64 {
        (self.effective[n] - self.galerkin[n]).abs()
    }

    /// The plotted ratio: eigenvalue difference or eigenvector distance over `a²`.
    pub fn ratio(&self, kind: SweepKind, n: usize) -> f64 {
        match kind {
            SweepKind::Eigenvalue => self.eigenvalue_ratios[n],
            SweepKind::Eigenvector => self.distances.as_ref().expect("eigenvector sweep")[n] / (self.a * self.a),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub kind: SweepKind,
    pub config: SweepConfig,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn a_grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.a).collect()
    }

    /// Quantity whose rate is fitted: eigenvalue difference or vector distance.
    pub fn difference(&self, n: usize) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| match self.kind {
                SweepKind::Eigenvalue => p.eigenvalue_difference(n),
                SweepKind::Eigenvector => p.distances.as_ref().expect("eigenvector sweep")[n],
            })
            .collect()
    }
}

impl SweepResult {
    /// Largest spread of ratio curves inside one effective cluster, over all
    /// half-widths; zero when no cluster has more than one member.
    pub fn cluster_ratio_spread(&self) -> f64 {
        let mut worst = 0.0f64;
        for p in &self.points {
            for range in clusters(&p.effective) {
                let r: Vec<f64> = range.map(|n| p.ratio(self.kind, n)).collect();
                let hi = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lo = r.iter().cloned().fold(f64::INFINITY, f64::min);
                worst = worst.max(hi - lo);
            }
        }
        worst
    }
}

/// Index ranges of consecutive values within the cluster tolerance.
pub fn clusters(values: &[f64]) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len()
            || (values[i] - values[i - 1]).abs() > CLUSTER_TOLERANCE * values[i - 1].abs().max(1.0)
        {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// Chordal distance `2 sin(θ/2)` for the largest principal angle `θ` between
/// the spans of two equally sized orthonormal families, i.e.
/// `√(2 - 2σ_min(EᵀG))`. For single vectors this is `‖g ∓ e‖` with the sign
/// chosen to align them. `sin θ` is taken from the projection residual
/// `(I - EEᵀ)G`, which stays accurate for tiny angles.
pub fn subspace_distance(e: &[&[f64]], g: &[&[f64]]) -> Result<f64> {
    if e.len() != g.len() || e.is_empty() {
        return Err(Error::input("subspace families must be non-empty and of equal size"));
    }
    let k = e.len();
    let residuals: Vec<Vec<f64>> = g
        .iter()
        .map(|gj| {
            let mut r = gj.to_vec();
            for ei in e {
                let c = dot(ei, gj);
                r.iter_mut().zip(ei.iter()).for_each(|(x, y)| *x -= c * y);
            }
            r
        })
        .collect();
    let gram = SymmetricMatrix::from_lower_fn(k, |i, j| dot(&residuals[i], &residuals[j]));
    let sin2 = eig_dense_symmetric(&gram, false)?.eigenvalues[k - 1].max(0.0);
    let theta = sin2.sqrt().min(1.0).asin();
    Ok(2.0 * (theta / 2.0).sin())
}

fn sweep_point(cfg: &SweepConfig, a: f64, vectors: bool) -> Result<SweepPoint> {
    let p = StripParams::new(a, cfg.r)?;
    let gcfg = GalerkinConfig::new(p, cfg.n_basis).with_geometry(cfg.geometry);
    let sol = solve(&gcfg)?;
    let expansions = effective_in_basis(&sol.discretisation, cfg.k)?;
    let effective: Vec<f64> = expansions.iter().map(|e| e.value).collect();
    let galerkin = sol.eigenvalues[..cfg.k].to_vec();
    let eigenvalue_ratios = effective
        .iter()
        .zip(&galerkin)
        .map(|(x, y)| (x - y).abs() / (a * a))
        .collect();
    let distances = if vectors {
        let mut d = vec![0.0; cfg.k];
        for range in clusters(&effective) {
            let e: Vec<&[f64]> = range.clone().map(|i| expansions[i].coefficients.as_slice()).collect();
            let g: Vec<&[f64]> = range.clone().map(|i| sol.vectors[i].as_slice()).collect();
            let dist = subspace_distance(&e, &g)?;
            d[range].iter_mut().for_each(|x| *x = dist);
        }
        Some(d)
    } else {
        None
    };
    Ok(SweepPoint {
        a,
        effective,
        galerkin,
        eigenvalue_ratios,
        distances,
    })
}

fn sweep(cfg: &SweepConfig, kind: SweepKind) -> Result<SweepResult> {
    cfg.validate()?;
    let points = cfg
        .a_grid
        .par_iter()
        .map(|&a| sweep_point(cfg, a, kind == SweepKind::Eigenvector))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        kind,
        config: cfg.clone(),
        points,
    })
}

/// Eigenvalue differences between the effective and curved models.
pub fn eigenvalue_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    sweep(cfg, SweepKind::Eigenvalue)
}

/// Eigenvalue differences plus eigenvector distances.
pub fn eigenvector_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    sweep(cfg, SweepKind::Eigenvector)
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::input("slope fit needs equally many abscissae and ordinates"));
    }
    if x.len() < 4 {
        return Err(Error::input(format!("slope fit needs at least 4 points, got {}", x.len())));
    }
    if x.iter().chain(y).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::numerical("slope fit needs positive finite data"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::input("slope fit needs distinct abscissae"));
    }
    Ok(sxy / sxx)
}

/// Convergence rate of index `n` (zero-based) over the half-widths in `window`.
pub fn fit_rate(sweep: &SweepResult, n: usize, window: (f64, f64)) -> Result<f64> {
    if n >= sweep.config.k {
        return Err(Error::input(format!("index {n} outside the {} swept eigenvalues", sweep.config.k)));
    }
    let diff = sweep.difference(n);
    let (x, y): (Vec<f64>, Vec<f64>) = sweep
        .points
        .iter()
        .zip(diff)
        .filter(|(p, _)| p.a >= window.0 && p.a <= window.1)
        .map(|(p, d)| (p.a, d))
        .unzip();
    fit_slope(&x, &y)
}
