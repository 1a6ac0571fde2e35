//! Dense symmetric and symmetric tridiagonal eigensolvers.
//!
//! Householder reduction to tridiagonal form followed by the QL algorithm with
//! shifts, in the EISPACK `tred2`/`tql2` arrangement. Both solvers share the
//! same QL kernel. The QL sweep works upward from the top-left corner, which
//! keeps small eigenvalues accurate for matrices graded with large entries at
//! the bottom (the Mathieu recurrence matrices are of this type).

use crate::error::{Error, Result};

/// Sweep cap per eigenvalue. Hitting it is reported, never truncated silently.
pub const MAX_SWEEPS: usize = 60;

/// Real symmetric matrix stored as its packed lower triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    order: usize,
    lower: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(order: usize) -> Self {
        Self {
            order,
            lower: vec![0.0; order * (order + 1) / 2],
        }
    }

    /// Builds the matrix from a function evaluated on the lower triangle
    /// `j <= i` only.
    pub fn from_lower_fn(order: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Self {
        let mut lower = Vec::with_capacity(order * (order + 1) / 2);
        for i in 0..order {
            for j in 0..=i {
                lower.push(entry(i, j));
            }
        }
        Self { order, lower }
    }

    /// Builds from packed rows: `rows[i]` holds entries `(i, 0..=i)`.
    pub fn from_lower_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let order = rows.len();
        let mut lower = Vec::with_capacity(order * (order + 1) / 2);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != i + 1 {
                return Err(Error::input(format!(
                    "row {i} of a packed lower triangle must have {} entries",
                    i + 1
                )));
            }
            lower.extend(row);
        }
        Ok(Self { order, lower })
    }

    /// Symmetrises a dense row-major matrix by reading its lower triangle.
    pub fn from_dense(order: usize, dense: &[f64]) -> Result<Self> {
        if dense.len() != order * order {
            return Err(Error::input("dense matrix has the wrong number of entries"));
        }
        Ok(Self::from_lower_fn(order, |i, j| dense[i * order + j]))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    fn index(i: usize, j: usize) -> usize {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        i * (i + 1) / 2 + j
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower[Self::index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.lower[Self::index(i, j)] = value;
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.order;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.get(i, j);
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.order {
            for j in 0..=i {
                let v = self.get(i, j);
                sum += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        sum.sqrt()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.order)
            .map(|i| (0..self.order).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// Rayleigh quotient `xᵀAx / xᵀx`.
    pub fn rayleigh_quotient(&self, x: &[f64]) -> f64 {
        let ax = self.mul_vec(x);
        dot(x, &ax) / dot(x, x)
    }

    /// `P A Pᵀ` for the permutation sending index `i` to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut out = Self::zeros(self.order);
        for i in 0..self.order {
            for j in 0..=i {
                out.set(perm[i], perm[j], self.get(i, j));
            }
        }
        out
    }

    fn check_finite(&self) -> Result<()> {
        match self.lower.iter().position(|v| !v.is_finite()) {
            Some(k) => Err(Error::input(format!(
                "non-finite entry at packed position {k} of a matrix of order {}",
                self.order
            ))),
            None => Ok(()),
        }
    }
}

/// Symmetric tridiagonal matrix given by its diagonal and off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSymmetric {
    diagonal: Vec<f64>,
    offdiagonal: Vec<f64>,
}

impl TridiagonalSymmetric {
    pub fn new(diagonal: Vec<f64>, offdiagonal: Vec<f64>) -> Result<Self> {
        if diagonal.is_empty() {
            return Err(Error::input("tridiagonal matrix must have order >= 1"));
        }
        if offdiagonal.len() + 1 != diagonal.len() {
            return Err(Error::input(format!(
                "off-diagonal length {} does not match order {}",
                offdiagonal.len(),
                diagonal.len()
            )));
        }
        if diagonal.iter().chain(&offdiagonal).any(|v| !v.is_finite()) {
            return Err(Error::input("tridiagonal matrix has a non-finite entry"));
        }
        Ok(Self {
            diagonal,
            offdiagonal,
        })
    }

    pub fn order(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn offdiagonal(&self) -> &[f64] {
        &self.offdiagonal
    }

    pub fn to_symmetric(&self) -> SymmetricMatrix {
        SymmetricMatrix::from_lower_fn(self.order(), |i, j| {
            if i == j {
                self.diagonal[i]
            } else if i == j + 1 {
                self.offdiagonal[j]
            } else {
                0.0
            }
        })
    }
}

/// Eigenvalues in ascending order with optional orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[k]` belongs to `eigenvalues[k]`.
    pub eigenvectors: Option<Vec<Vec<f64>>>,
}

/// Full spectrum of a dense symmetric matrix.
pub fn eig_dense_symmetric(a: &SymmetricMatrix, want_vectors: bool) -> Result<EigenDecomposition> {
    a.check_finite()?;
    let n = a.order();
    if n == 0 {
        return Err(Error::input("matrix must have order >= 1"));
    }
    let mut v = a.to_dense();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    householder_tridiagonalize(n, &mut v, &mut d, &mut e);
    // tred2 leaves the sub-diagonal in e[1..]; the QL kernel expects e[0..n-1].
    e.rotate_left(1);
    e[n - 1] = 0.0;
    let vectors = if want_vectors { Some(v.as_mut_slice()) } else { None };
    ql_implicit(n, &mut d, &mut e, vectors)?;
    Ok(sorted(n, d, want_vectors.then_some(v)))
}

/// The `count` smallest eigenvalues of a symmetric tridiagonal matrix.
pub fn eig_tridiagonal(t: &TridiagonalSymmetric, count: usize) -> Result<Vec<f64>> {
    if count > t.order() {
        return Err(Error::input(format!(
            "requested {count} eigenvalues of a matrix of order {}",
            t.order()
        )));
    }
    let mut all = eig_tridiagonal_full(t, false)?.eigenvalues;
    all.truncate(count);
    Ok(all)
}

/// Full spectrum of a symmetric tridiagonal matrix, optionally with vectors.
pub fn eig_tridiagonal_full(t: &TridiagonalSymmetric, want_vectors: bool) -> Result<EigenDecomposition> {
    let n = t.order();
    let mut d = t.diagonal.clone();
    let mut e = t.offdiagonal.clone();
    e.push(0.0);
    let mut v = if want_vectors {
        let mut id = vec![0.0; n * n];
        for i in 0..n {
            id[i * n + i] = 1.0;
        }
        Some(id)
    } else {
        None
    };
    ql_implicit(n, &mut d, &mut e, v.as_deref_mut())?;
    Ok(sorted(n, d, v))
}

fn sorted(n: usize, d: Vec<f64>, v: Option<Vec<f64>>) -> EigenDecomposition {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let eigenvalues = perm.iter().map(|&i| d[i]).collect();
    let eigenvectors = v.map(|v| {
        perm.iter()
            .map(|&k| (0..n).map(|row| v[row * n + k]).collect())
            .collect()
    });
    EigenDecomposition {
        eigenvalues,
        eigenvectors,
    }
}

/// Householder reduction of the dense row-major symmetric `v` (overwritten by
/// the accumulated orthogonal transform). On exit `d` is the diagonal and
/// `e[1..]` the sub-diagonal.
fn householder_tridiagonalize(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let idx = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for x in &d[..i] {
            scale += x.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
                v[idx(j, i)] = 0.0;
            }
        } else {
            for x in &mut d[..i] {
                *x /= scale;
                h += *x * *x;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[idx(k, j)] * d[k];
                    e[k] += v[idx(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[idx(n - 1, i)] = v[idx(i, i)];
        v[idx(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[idx(k, i + 1)] * v[idx(k, j)];
                }
                for k in 0..=i {
                    v[idx(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[idx(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
        v[idx(n - 1, j)] = 0.0;
    }
    v[idx(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// QL iteration on the tridiagonal `(d, e)` with `e[i]` coupling `i, i+1`.
/// Rotations are accumulated into the columns of `v` when given.
fn ql_implicit(n: usize, d: &mut [f64], e: &mut [f64], mut v: Option<&mut [f64]>) -> Result<()> {
    let eps = f64::EPSILON;
    let mut shift = 0.0;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_SWEEPS {
                    return Err(Error::NoConvergence { order: n });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                shift += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(v) = v.as_deref_mut() {
                        for k in 0..n {
                            let vk = k * n;
                            let hk = v[vk + i + 1];
                            v[vk + i + 1] = s * v[vk + i] + c * hk;
                            v[vk + i] = c * v[vk + i] - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += shift;
        e[l] = 0.0;
    }
    Ok(())
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_symmetric(n: usize, seed: u64) -> SymmetricMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SymmetricMatrix::from_lower_fn(n, |_, _| rng.gen_range(-1.0..1.0))
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    fn determinant(n: usize, mut m: Vec<f64>) -> f64 {
        let mut det = 1.0;
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| m[i * n + c].abs().total_cmp(&m[j * n + c].abs())).unwrap();
            if p != c {
                for k in 0..n {
                    m.swap(p * n + k, c * n + k);
                }
                det = -det;
            }
            let piv = m[c * n + c];
            det *= piv;
            for r in (c + 1)..n {
                let f = m[r * n + c] / piv;
                for k in c..n {
                    m[r * n + k] -= f * m[c * n + k];
                }
            }
        }
        det
    }

    #[test]
    fn diagonal_matrix() {
        let mut a = SymmetricMatrix::zeros(3);
        a.set(0, 0, 3.0);
        a.set(1, 1, 1.0);
        a.set(2, 2, 2.0);
        let eig = eig_dense_symmetric(&a, true).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn swap_matrix() {
        let mut a = SymmetricMatrix::zeros(2);
        a.set(1, 0, 1.0);
        let eig = eig_dense_symmetric(&a, true).unwrap();
        assert!((eig.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-15);
        let v = eig.eigenvectors.unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v[0][0].abs() - h).abs() < 1e-15 && (v[0][0] + v[0][1]).abs() < 1e-15);
        assert!((v[1][0].abs() - h).abs() < 1e-15 && (v[1][0] - v[1][1]).abs() < 1e-15);
    }

    #[test]
    fn order_one() {
        let a = SymmetricMatrix::from_lower_fn(1, |_, _| -4.5);
        let eig = eig_dense_symmetric(&a, true).unwrap();
        assert_eq!(eig.eigenvalues, vec![-4.5]);
        assert_eq!(eig.eigenvectors.unwrap(), vec![vec![1.0]]);
    }

    #[test]
    fn non_finite_rejected() {
        let mut a = SymmetricMatrix::zeros(3);
        a.set(2, 1, f64::NAN);
        assert!(matches!(eig_dense_symmetric(&a, false), Err(Error::Input(_))));
        assert!(TridiagonalSymmetric::new(vec![1.0, f64::INFINITY], vec![0.0]).is_err());
        assert!(TridiagonalSymmetric::new(vec![1.0, 2.0], vec![]).is_err());
    }

    #[test]
    fn trace_and_reconstruction() {
        let a = random_symmetric(20, 1);
        let eig = eig_dense_symmetric(&a, true).unwrap();
        let sum: f64 = eig.eigenvalues.iter().sum();
        assert!((sum - a.trace()).abs() <= 1e-10 * a.trace().abs().max(1.0));
        let v = eig.eigenvectors.as_ref().unwrap();
        let n = 20;
        let mut resid = 0.0;
        for i in 0..n {
            for j in 0..n {
                let r: f64 = (0..n).map(|k| v[k][i] * eig.eigenvalues[k] * v[k][j]).sum();
                resid += (a.get(i, j) - r).powi(2);
            }
        }
        assert!(resid.sqrt() <= 1e-10 * a.frobenius_norm());
    }

    #[test]
    fn orthonormal_vectors_and_residuals() {
        let a = random_symmetric(40, 2);
        let eig = eig_dense_symmetric(&a, true).unwrap();
        let v = eig.eigenvectors.unwrap();
        let norm_a = a.frobenius_norm();
        for i in 0..40 {
            for j in 0..40 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(&v[i], &v[j]) - want).abs() < 1e-10);
            }
            let av = a.mul_vec(&v[i]);
            let r: Vec<f64> = av.iter().zip(&v[i]).map(|(x, y)| x - eig.eigenvalues[i] * y).collect();
            assert!(norm(&r) <= 1e-9 * norm_a);
        }
        assert!(eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn determinant_identity() {
        for seed in 0..5 {
            let a = random_symmetric(6, 10 + seed);
            let eig = eig_dense_symmetric(&a, false).unwrap();
            let prod: f64 = eig.eigenvalues.iter().product();
            let det = determinant(6, a.to_dense());
            assert!((prod - det).abs() <= 1e-9 * det.abs().max(1e-3));
        }
    }

    #[test]
    fn tridiagonal_decoupled() {
        let t = TridiagonalSymmetric::new(vec![0.0, 4.0, 16.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(eig_tridiagonal(&t, 3).unwrap(), vec![0.0, 4.0, 16.0]);
        assert!(eig_tridiagonal(&t, 4).is_err());
    }

    #[test]
    fn discrete_laplacian() {
        let n = 50;
        let t = TridiagonalSymmetric::new(vec![2.0; n], vec![-1.0; n - 1]).unwrap();
        let got = eig_tridiagonal(&t, n).unwrap();
        for (k, g) in got.iter().enumerate() {
            let want = 2.0 - 2.0 * ((k + 1) as f64 * PI / (n as f64 + 1.0)).cos();
            assert!((g - want).abs() <= 1e-13 * want.max(1e-2), "{k}: {g} vs {want}");
        }
    }

    #[test]
    fn tridiagonal_agrees_with_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 30;
        let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let off: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t = TridiagonalSymmetric::new(diag, off).unwrap();
        let a = eig_tridiagonal(&t, n).unwrap();
        let b = eig_dense_symmetric(&t.to_symmetric(), false).unwrap().eigenvalues;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        let full = eig_tridiagonal_full(&t, true).unwrap();
        let sym = t.to_symmetric();
        for (lam, v) in full.eigenvalues.iter().zip(full.eigenvectors.unwrap()) {
            assert!((sym.rayleigh_quotient(&v) - lam).abs() < 1e-12);
        }
    }

    #[test]
    fn graded_small_eigenvalue_is_accurate() {
        // diag grows like k², tiny coupling: smallest eigenvalue ~ -q²/2 ... keep relative accuracy
        let n = 64;
        let q = 1e-3;
        let diag: Vec<f64> = (0..n).map(|k| (2 * k) as f64 * (2 * k) as f64).collect();
        let mut off = vec![q; n - 1];
        off[0] = std::f64::consts::SQRT_2 * q;
        let t = TridiagonalSymmetric::new(diag, off).unwrap();
        let got = eig_tridiagonal(&t, 1).unwrap()[0];
        // series a_0(q) = -q²/2 + 7q⁴/128 - ...
        let want = -q * q / 2.0 + 7.0 * q.powi(4) / 128.0;
        assert!((got - want).abs() <= 1e-12 * want.abs(), "{got} vs {want}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn permutation_similarity_invariance(seed in 0u64..1000, n in 2usize..16) {
            let a = random_symmetric(n, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                let j = rng.gen_range(0..=i);
                perm.swap(i, j);
            }
            let x = eig_dense_symmetric(&a, false).unwrap().eigenvalues;
            let y = eig_dense_symmetric(&a.permuted(&perm), false).unwrap().eigenvalues;
            for (p, q) in x.iter().zip(&y) {
                prop_assert!((p - q).abs() < 1e-11);
            }
        }
    }
}
