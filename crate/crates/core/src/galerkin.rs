//! Rayleigh–Ritz projection of the curved-strip operator
//!
//! `L = -∂_s f_a^{-2} ∂_s - a^{-2} ∂_u² + V_a`
//!
//! onto the span of the first `N` real flat eigenfunctions. The transverse
//! kinetic term is diagonal in this basis and inserted exactly; the other two
//! terms are integrated with the tensor grid. For each pair of transverse
//! indices the `u`-sums are precomputed as kernels in `s`, so an entry costs
//! one pass over the longitudinal nodes.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{jacobian_f_derivatives, potential_from_derivatives, potential_veff, StripParams};
use crate::linalg::{eig_dense_symmetric, SymmetricMatrix};
use crate::models::{effective_eigenfunction, effective_spectrum, fake_basis, FakeMode, ModeIndex};
use crate::quadrature::QuadratureGrid;

/// Norm fraction an expansion may lose before the basis is declared too small.
pub const CAPACITY_TOLERANCE: f64 = 1e-6;

/// Which operator is projected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryMode {
    /// The curved strip: Jacobian `f_a` and potential `V_a`.
    True,
    /// `f_a ≡ 1` with the effective potential `-cos(s/R)/8R²`.
    FlatWithVeff,
    /// `f_a ≡ 1`, no potential.
    FlatPlain,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GalerkinConfig {
    pub params: StripParams,
    pub n_basis: usize,
    /// Longitudinal and transverse quadrature orders; defaults follow the basis.
    pub ms: Option<usize>,
    pub mu: Option<usize>,
    pub geometry: GeometryMode,
}

impl GalerkinConfig {
    pub fn new(params: StripParams, n_basis: usize) -> Self {
        Self {
            params,
            n_basis,
            ms: None,
            mu: None,
            geometry: GeometryMode::True,
        }
    }

    pub fn with_geometry(mut self, geometry: GeometryMode) -> Self {
        self.geometry = geometry;
        self
    }

    pub fn with_quadrature(mut self, ms: usize, mu: usize) -> Self {
        self.ms = Some(ms);
        self.mu = Some(mu);
        self
    }
}

/// Operator coefficients at one quadrature node.
#[derive(Debug, Clone, Copy)]
struct NodeCoefficients {
    inv_f2: f64,
    /// `∂_s(f_a^{-2}) = -2 f_s / f³`
    d_inv_f2: f64,
    v: f64,
}

fn node_coefficients(p: &StripParams, geometry: GeometryMode, s: f64, u: f64) -> NodeCoefficients {
    match geometry {
        GeometryMode::True => {
            let d = jacobian_f_derivatives(p, s, p.a * u);
            NodeCoefficients {
                inv_f2: 1.0 / (d.f * d.f),
                d_inv_f2: -2.0 * d.ds / (d.f * d.f * d.f),
                v: potential_from_derivatives(&d),
            }
        }
        GeometryMode::FlatWithVeff => NodeCoefficients {
            inv_f2: 1.0,
            d_inv_f2: 0.0,
            v: potential_veff(p, s),
        },
        GeometryMode::FlatPlain => NodeCoefficients {
            inv_f2: 1.0,
            d_inv_f2: 0.0,
            v: 0.0,
        },
    }
}

/// Basis, grid and tabulated values shared by assembly and residuals.
#[derive(Debug, Clone)]
pub struct Discretisation {
    pub config: GalerkinConfig,
    pub basis: Vec<FakeMode>,
    pub grid: QuadratureGrid,
    max_n: usize,
    /// `coef[i * mu + l]`
    coef: Vec<NodeCoefficients>,
    /// `y[n-1][l]`
    y: Vec<Vec<f64>>,
    /// `x[j][i] = (X, X', X'')`
    x: Vec<Vec<(f64, f64, f64)>>,
    /// `kin[(n-1) * max_n + (n'-1)][i]` and `pot[…][i]`
    kin: Vec<Vec<f64>>,
    pot: Vec<Vec<f64>>,
}

impl Discretisation {
    pub fn new(config: &GalerkinConfig) -> Result<Self> {
        if config.n_basis == 0 {
            return Err(Error::input("basis size N must be >= 1"));
        }
        let p = config.params;
        let basis = fake_basis(&p, config.n_basis)?;
        let max_h = basis.iter().map(|b| b.mode.m.unsigned_abs()).max().unwrap_or(0) as usize;
        let max_n = basis.iter().map(|b| b.mode.n).max().unwrap_or(1) as usize;
        let (ms_default, mu_default) = QuadratureGrid::default_orders(max_h, max_n);
        let grid = QuadratureGrid::new(&p, config.ms.unwrap_or(ms_default), config.mu.unwrap_or(mu_default))?;
        let (ms, mu) = (grid.ms(), grid.mu());

        let mut coef = Vec::with_capacity(ms * mu);
        for &s in &grid.s_nodes {
            for &u in &grid.u_nodes {
                let c = node_coefficients(&p, config.geometry, s, u);
                if !(c.inv_f2.is_finite() && c.d_inv_f2.is_finite() && c.v.is_finite()) {
                    return Err(Error::input(format!("operator coefficients not finite at node (s={s}, u={u})")));
                }
                coef.push(c);
            }
        }
        let y: Vec<Vec<f64>> = (1..=max_n as u32)
            .map(|n| grid.u_nodes.iter().map(|&u| crate::models::transverse_factor(n, u)).collect())
            .collect();
        let x = basis
            .iter()
            .map(|b| grid.s_nodes.iter().map(|&s| b.longitudinal(s)).collect())
            .collect();

        let mut kin = vec![Vec::new(); max_n * max_n];
        let mut pot = vec![Vec::new(); max_n * max_n];
        for n1 in 0..max_n {
            for n2 in 0..max_n {
                let mut k = vec![0.0; ms];
                let mut v = vec![0.0; ms];
                for i in 0..ms {
                    let (mut sk, mut sv) = (0.0, 0.0);
                    for l in 0..mu {
                        let w = grid.u_weights[l] * y[n1][l] * y[n2][l];
                        let c = &coef[i * mu + l];
                        sk += w * c.inv_f2;
                        sv += w * c.v;
                    }
                    k[i] = sk;
                    v[i] = sv;
                }
                kin[n1 * max_n + n2] = k;
                pot[n1 * max_n + n2] = v;
            }
        }
        Ok(Self {
            config: *config,
            basis,
            grid,
            max_n,
            coef,
            y,
            x,
            kin,
            pot,
        })
    }

    pub fn order(&self) -> usize {
        self.basis.len()
    }

    /// Matrix entry `(Ψ_j, L Ψ_k)`.
    pub fn entry(&self, j: usize, k: usize) -> f64 {
        let (bj, bk) = (&self.basis[j], &self.basis[k]);
        let idx = (bj.mode.n as usize - 1) * self.max_n + (bk.mode.n as usize - 1);
        let (kin, pot) = (&self.kin[idx], &self.pot[idx]);
        let (xj, xk) = (&self.x[j], &self.x[k]);
        let mut total = 0.0;
        for i in 0..self.grid.ms() {
            total += self.grid.s_weights[i] * (xj[i].1 * xk[i].1 * kin[i] + xj[i].0 * xk[i].0 * pot[i]);
        }
        if j == k {
            let a = self.config.params.a;
            total += (bj.kappa / a).powi(2);
        }
        total
    }

    pub fn assemble(&self) -> SymmetricMatrix {
        let n = self.order();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| (0..=i).map(|j| self.entry(i, j)).collect())
            .collect();
        SymmetricMatrix::from_lower_rows(rows).expect("rows have triangular shape")
    }

    /// `(L - λ) Σ_j c_j Ψ_j` at every grid node, row-major in `(s, u)`.
    fn residual_field(&self, c: &[f64], lambda: f64) -> Vec<f64> {
        let (ms, mu) = (self.grid.ms(), self.grid.mu());
        let a2 = self.config.params.a.powi(2);
        let mut out = vec![0.0; ms * mu];
        for (j, b) in self.basis.iter().enumerate() {
            if c[j] == 0.0 {
                continue;
            }
            let y = &self.y[b.mode.n as usize - 1];
            let kt = b.kappa * b.kappa / a2;
            for i in 0..ms {
                let (x, dx, d2x) = self.x[j][i];
                for l in 0..mu {
                    let nc = &self.coef[i * mu + l];
                    let lx = -nc.inv_f2 * d2x - nc.d_inv_f2 * dx + (kt + nc.v - lambda) * x;
                    out[i * mu + l] += c[j] * lx * y[l];
                }
            }
        }
        out
    }

    /// `‖(L - λ) Σ c_j Ψ_j‖` over Π, with `L` applied in strong form.
    pub fn residual_norm(&self, c: &[f64], lambda: f64) -> f64 {
        let field = self.residual_field(c, lambda);
        let mu = self.grid.mu();
        let mut total = 0.0;
        for i in 0..self.grid.ms() {
            let mut row = 0.0;
            for l in 0..mu {
                row += self.grid.u_weights[l] * field[i * mu + l].powi(2);
            }
            total += self.grid.s_weights[i] * row;
        }
        total.sqrt()
    }

    /// Position of a fake mode in the basis.
    pub fn position(&self, mode: &ModeIndex) -> Option<usize> {
        self.basis.iter().position(|b| b.mode == *mode)
    }
}

#[derive(Debug, Clone)]
pub struct GalerkinSolution {
    pub config: GalerkinConfig,
    pub discretisation: Discretisation,
    pub matrix: SymmetricMatrix,
    pub eigenvalues: Vec<f64>,
    /// `vectors[k]` holds the basis coefficients of the `k`-th eigenfunction.
    pub vectors: Vec<Vec<f64>>,
}

impl GalerkinSolution {
    pub fn basis(&self) -> &[FakeMode] {
        &self.discretisation.basis
    }

    /// Value of the `k`-th (zero-based) approximate eigenfunction.
    pub fn eval(&self, k: usize, s: f64, u: f64) -> f64 {
        self.vectors[k]
            .iter()
            .zip(self.basis())
            .map(|(c, b)| c * b.eval(s, u))
            .sum()
    }
}

pub fn assemble(config: &GalerkinConfig) -> Result<SymmetricMatrix> {
    Ok(Discretisation::new(config)?.assemble())
}

pub fn solve(config: &GalerkinConfig) -> Result<GalerkinSolution> {
    let disc = Discretisation::new(config)?;
    let matrix = disc.assemble();
    let dec = eig_dense_symmetric(&matrix, true)?;
    Ok(GalerkinSolution {
        config: *config,
        discretisation: disc,
        matrix,
        eigenvalues: dec.eigenvalues,
        vectors: dec.eigenvectors.expect("vectors requested"),
    })
}

/// Residual `‖L f̃_k - λ̃_k f̃_k‖` of the `k`-th (zero-based) eigenpair.
pub fn residual_norm(solution: &GalerkinSolution, k: usize) -> Result<f64> {
    if k >= solution.eigenvalues.len() {
        return Err(Error::input(format!(
            "eigenpair {k} requested from a basis of size {}",
            solution.eigenvalues.len()
        )));
    }
    Ok(solution
        .discretisation
        .residual_norm(&solution.vectors[k], solution.eigenvalues[k]))
}

/// An effective eigenfunction written in the Galerkin basis.
#[derive(Debug, Clone)]
pub struct EffectiveExpansion {
    pub mode: ModeIndex,
    pub value: f64,
    pub coefficients: Vec<f64>,
    /// `1 - ‖projection‖²`
    pub truncation: f64,
}

/// Expansions of the first `count` effective eigenfunctions in the basis of
/// `disc`, in ascending eigenvalue order. Each carries its own mode's exact
/// eigenvalue, also inside entries the spectrum merged.
pub fn effective_in_basis(disc: &Discretisation, count: usize) -> Result<Vec<EffectiveExpansion>> {
    let p = disc.config.params;
    let spec = effective_spectrum(&p, count)?;
    let mut out = Vec::with_capacity(count);
    for (_, mode) in spec.labelled() {
        let f = effective_eigenfunction(mode, &p)?;
        let mut coefficients = vec![0.0; disc.order()];
        let mut captured = 0.0;
        let mut total = 0.0;
        for (fm, c) in f.fake_expansion() {
            total += c * c;
            if let Some(j) = disc.position(&fm) {
                coefficients[j] = c;
                captured += c * c;
            }
        }
        let truncation = (1.0 - captured / total).max(0.0);
        if truncation > CAPACITY_TOLERANCE {
            return Err(Error::Capacity {
                mode: mode.to_string(),
                basis: disc.order(),
                captured: 1.0 - truncation,
            });
        }
        out.push(EffectiveExpansion {
            mode,
            value: f.value,
            coefficients,
            truncation,
        });
    }
    out.sort_by(|x, y| x.value.total_cmp(&y.value));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, norm};
    use crate::models::{fake_eigenvalue, Family};
    use std::f64::consts::PI;

    fn table_params() -> StripParams {
        StripParams::from_circumference(0.75, 13.2).unwrap()
    }

    #[test]
    fn flat_plain_is_diagonal() {
        let p = table_params();
        let cfg = GalerkinConfig::new(p, 60).with_geometry(GeometryMode::FlatPlain);
        let disc = Discretisation::new(&cfg).unwrap();
        let m = disc.assemble();
        for i in 0..m.order() {
            let want = fake_eigenvalue(&p, &disc.basis[i].mode);
            assert!((m.get(i, i) - want).abs() < 1e-12 * want);
            for j in 0..i {
                assert!(m.get(i, j).abs() < 1e-12, "({i},{j}) = {}", m.get(i, j));
            }
        }
        let sol = solve(&cfg).unwrap();
        for k in 0..sol.eigenvalues.len() {
            assert!(residual_norm(&sol, k).unwrap() < 1e-10);
        }
        assert!(residual_norm(&sol, 60).is_err());
    }

    #[test]
    fn flat_with_effective_potential_matches_mathieu() {
        let p = table_params();
        let cfg = GalerkinConfig::new(p, 120).with_geometry(GeometryMode::FlatWithVeff);
        let sol = solve(&cfg).unwrap();
        let eff = effective_spectrum(&p, 20).unwrap().values();
        for (got, want) in sol.eigenvalues.iter().zip(&eff) {
            assert!((got - want).abs() < 1e-9 * want, "{got} vs {want}");
        }
    }

    #[test]
    fn flat_with_effective_potential_coupling_pattern() {
        let p = table_params();
        let cfg = GalerkinConfig::new(p, 40).with_geometry(GeometryMode::FlatWithVeff);
        let disc = Discretisation::new(&cfg).unwrap();
        let m = disc.assemble();
        for i in 0..m.order() {
            for j in 0..i {
                let (a, b) = (disc.basis[i].mode, disc.basis[j].mode);
                let same_trig = a.m.signum() * b.m.signum() >= 0;
                let coupled = a.n == b.n && same_trig && (a.m.abs() - b.m.abs()).abs() == 2;
                if !coupled {
                    assert!(m.get(i, j).abs() < 1e-13, "{a} {b}");
                }
            }
        }
    }

    #[test]
    fn reference_ground_state() {
        let sol = solve(&GalerkinConfig::new(table_params(), 82)).unwrap();
        let want = 4.387440201465426;
        assert!((sol.eigenvalues[0] - want).abs() < 1e-6 * want, "{}", sol.eigenvalues[0]);
        let r = residual_norm(&sol, 0).unwrap();
        assert!(r > 0.0011360336639659758 / 10.0 && r < 0.0011360336639659758 * 10.0, "{r}");
        for k in 0..20 {
            assert!(residual_norm(&sol, k).unwrap() <= 0.25);
        }
        // near-degenerate pair splitting
        assert!(sol.eigenvalues[2] - sol.eigenvalues[1] < 2e-3);
    }

    #[test]
    fn rayleigh_ritz_monotone_in_basis_size() {
        let p = table_params();
        let grid = (4 * 40 + 32, 2 * 8 + 16);
        let solve_n = |n| {
            solve(&GalerkinConfig::new(p, n).with_quadrature(grid.0, grid.1))
                .unwrap()
                .eigenvalues
        };
        let (e20, e41, e82) = (solve_n(20), solve_n(41), solve_n(82));
        for j in 0..20 {
            assert!(e41[j] <= e20[j] + 1e-12);
            assert!(e82[j] <= e41[j] + 1e-12);
        }
    }

    #[test]
    fn eigenvectors_orthonormal_and_rayleigh() {
        let sol = solve(&GalerkinConfig::new(table_params(), 50)).unwrap();
        for (i, v) in sol.vectors.iter().enumerate() {
            assert!((norm(v) - 1.0).abs() < 1e-10);
            for w in &sol.vectors[..i] {
                assert!(dot(v, w).abs() < 1e-10);
            }
            let rq = sol.matrix.rayleigh_quotient(v);
            assert!((rq - sol.eigenvalues[i]).abs() < 1e-11 * sol.eigenvalues[i].abs());
        }
    }

    #[test]
    fn entry_symmetry() {
        let disc = Discretisation::new(&GalerkinConfig::new(table_params(), 30)).unwrap();
        for i in 0..30 {
            for j in 0..i {
                assert!((disc.entry(i, j) - disc.entry(j, i)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn basis_permutation_leaves_spectrum() {
        let sol = solve(&GalerkinConfig::new(table_params(), 40)).unwrap();
        let perm: Vec<usize> = (0..40).map(|i| (i * 17 + 5) % 40).collect();
        let permuted = eig_dense_symmetric(&sol.matrix.permuted(&perm), false).unwrap();
        for (x, y) in permuted.eigenvalues.iter().zip(&sol.eigenvalues) {
            assert!((x - y).abs() < 1e-11 * y.abs());
        }
    }

    #[test]
    fn reconstructed_eigenfunctions_respect_seam() {
        let p = table_params();
        let sol = solve(&GalerkinConfig::new(p, 40)).unwrap();
        for k in 0..5 {
            for i in 0..20 {
                let u = -1.0 + i as f64 / 10.0;
                assert!((sol.eval(k, 0.0, u) - sol.eval(k, p.length(), -u)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn effective_expansion_in_basis() {
        let p = StripParams::new(0.5, 18.0 / (2.0 * PI)).unwrap();
        let cfg = GalerkinConfig::new(p, 72).with_geometry(GeometryMode::FlatWithVeff);
        let disc = Discretisation::new(&cfg).unwrap();
        let matrix = disc.assemble();
        let exps = effective_in_basis(&disc, 5).unwrap();
        let ground = &exps[0];
        assert_eq!(ground.mode, ModeIndex::new(Family::EffCe, 0, 1).unwrap());
        let dominant = (0..disc.order())
            .max_by(|&i, &j| ground.coefficients[i].abs().total_cmp(&ground.coefficients[j].abs()))
            .unwrap();
        assert_eq!(disc.basis[dominant].mode, ModeIndex::fake(0, 1).unwrap());
        for (j, b) in disc.basis.iter().enumerate() {
            if b.mode.n != 1 {
                assert_eq!(ground.coefficients[j], 0.0);
            }
        }
        for e in &exps {
            assert!(e.truncation < 1e-12);
            assert!((norm(&e.coefficients) - 1.0).abs() < 1e-12);
            let rq = matrix.rayleigh_quotient(&e.coefficients);
            assert!((rq - e.value).abs() < 1e-9 * e.value, "{rq} vs {}", e.value);
        }
    }

    #[test]
    fn small_basis_reports_capacity() {
        let p = StripParams::new(0.5, 18.0 / (2.0 * PI)).unwrap();
        let disc = Discretisation::new(&GalerkinConfig::new(p, 3)).unwrap();
        assert!(matches!(effective_in_basis(&disc, 3), Err(Error::Capacity { .. })));
    }
}
