//! Elementary symmetric functions of real spectra and symmetric matrices.
//!
//! `S_k` is evaluated from the coefficients of `prod (x + lambda_i)`, built
//! one factor at a time, so the cost is `O(N k)` regardless of how many
//! `k`-subsets there are.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest ambient dimension accepted by [`ConeSpec`]; keeps `C(n, m) <= 252`.
pub const MAX_DIM: usize = 10;

/// A finite, non-empty vector of real eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum(Vec<f64>);

impl Spectrum {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Argument("spectrum must have at least one entry".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!("spectrum entry {i} is not finite")));
        }
        Ok(Spectrum(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Copy sorted in descending order.
    pub fn sorted_desc(&self) -> Spectrum {
        let mut v = self.0.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        Spectrum(v)
    }

    pub fn scaled(&self, c: f64) -> Spectrum {
        Spectrum(self.0.iter().map(|v| v * c).collect())
    }
}

impl std::ops::Index<usize> for Spectrum {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A real symmetric matrix; symmetry is exact as stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Argument(format!(
                "matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("matrix has non-finite entries".into()));
        }
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                if m[(i, j)] != m[(j, i)] {
                    return Err(Error::Argument(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(SymMatrix(m))
    }

    /// Builds from an arbitrary square matrix by averaging with its transpose.
    pub fn symmetrized(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Argument("matrix must be square".into()));
        }
        let t = m.transpose();
        SymMatrix::new((m + t) * 0.5)
    }

    pub fn from_row_major(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Argument(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        SymMatrix::new(DMatrix::from_row_slice(n, n, data))
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix(DMatrix::zeros(n, n))
    }

    pub fn diagonal(d: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_row_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.0[(i, j)] == 0.0))
    }

    /// Frobenius inner product `sum_ij a_ij b_ij`.
    pub fn frobenius_dot(&self, other: &SymMatrix) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn eigenvalues(&self) -> Result<Spectrum> {
        Ok(self.eigen()?.0)
    }

    /// Eigenvalues and orthonormal eigenvectors (as columns).
    pub fn eigen(&self) -> Result<(Spectrum, DMatrix<f64>)> {
        let eig = SymmetricEigen::try_new(self.0.clone(), f64::EPSILON, 0)
            .ok_or_else(|| Error::Numeric("symmetric eigen-decomposition did not converge".into()))?;
        let values = Spectrum::new(eig.eigenvalues.iter().copied().collect())
            .map_err(|_| Error::Numeric("eigen-decomposition produced non-finite values".into()))?;
        Ok((values, eig.eigenvectors))
    }
}

/// Binomial coefficient, exact in integers.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// `(n, m, k)`: ambient dimension, sum order and symmetric-function degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub n: usize,
    pub m: usize,
    pub k: usize,
}

impl ConeSpec {
    pub fn new(n: usize, m: usize, k: usize) -> Result<Self> {
        if n > MAX_DIM {
            return Err(Error::Config(format!("n = {n} exceeds the supported maximum {MAX_DIM}")));
        }
        if m < 2 || m + 1 > n {
            return Err(Error::Argument(format!("m = {m} must satisfy 2 <= m <= n - 1 (n = {n})")));
        }
        let c = binomial(n, m) as usize;
        if k < 1 || k > c {
            return Err(Error::Range { k, max: c });
        }
        Ok(ConeSpec { n, m, k })
    }

    /// `C(n, m)`, the size of the lifted matrix.
    pub fn lifted_dim(&self) -> usize {
        binomial(self.n, self.m) as usize
    }
}

/// All of `S_0, ..., S_kmax` of `values` by the prefix-polynomial recurrence.
/// Entries beyond `values.len()` are zero.
pub fn sym_prefix(values: &[f64], kmax: usize) -> Vec<f64> {
    let mut e = vec![0.0; kmax + 1];
    e[0] = 1.0;
    for (i, &v) in values.iter().enumerate() {
        let top = (i + 1).min(kmax);
        for j in (1..=top).rev() {
            e[j] += v * e[j - 1];
        }
    }
    e
}

pub fn elementary_sym(lambda: &Spectrum, k: usize) -> Result<f64> {
    if k > lambda.len() {
        return Err(Error::Range { k, max: lambda.len() });
    }
    Ok(sym_prefix(lambda.as_slice(), k)[k])
}

fn check_drop(n: usize, drop: &[usize]) -> Result<()> {
    if drop.is_empty() || drop.len() > 2 {
        return Err(Error::Argument("drop set must hold one or two indices".into()));
    }
    if let Some(&i) = drop.iter().find(|&&i| i >= n) {
        return Err(Error::Argument(format!("index {i} out of range for length {n}")));
    }
    if drop.len() == 2 && drop[0] == drop[1] {
        return Err(Error::Argument(format!("duplicate index {}", drop[0])));
    }
    Ok(())
}

/// `S_k(lambda | drop)`: the symmetric function with the dropped entries set
/// to zero. Indices are 0-based.
pub fn sym_deleted(lambda: &Spectrum, k: usize, drop: &[usize]) -> Result<f64> {
    check_drop(lambda.len(), drop)?;
    if k > lambda.len() {
        return Err(Error::Range { k, max: lambda.len() });
    }
    Ok(sym_deleted_unchecked(lambda.as_slice(), k, drop))
}

pub(crate) fn sym_deleted_unchecked(values: &[f64], k: usize, drop: &[usize]) -> f64 {
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    let mut seen = 0usize;
    for (i, &v) in values.iter().enumerate() {
        if drop.contains(&i) {
            continue;
        }
        seen += 1;
        for j in (1..=seen.min(k)).rev() {
            e[j] += v * e[j - 1];
        }
    }
    e[k]
}

/// `S_{k-1}(lambda | i)` for every `i`, i.e. the gradient of `S_k`.
pub fn sym_gradient(values: &[f64], k: usize) -> Vec<f64> {
    if k == 0 {
        return vec![0.0; values.len()];
    }
    (0..values.len())
        .map(|i| sym_deleted_unchecked(values, k - 1, &[i]))
        .collect()
}

/// `S_k` of a symmetric matrix (sum of principal `k x k` minors).
pub fn matrix_sym(a: &SymMatrix, k: usize) -> Result<f64> {
    elementary_sym(&a.eigenvalues()?, k)
}

/// Mixed symmetric function `S_{k,l}(A, B)` with `k - l` factors from `A` and
/// `l` from `B`.
///
/// `t -> S_k(A + tB)` is a polynomial of degree `k` whose `t^l` coefficient is
/// `C(k, l) S_{k,l}(A, B)`; it is sampled at `k + 1` Chebyshev points and
/// interpolated.
pub fn mixed_sym(a: &SymMatrix, b: &SymMatrix, k: usize, l: usize) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Argument(format!(
            "size mismatch: {}x{} vs {}x{}",
            a.dim(),
            a.dim(),
            b.dim(),
            b.dim()
        )));
    }
    let n = a.dim();
    if k > n {
        return Err(Error::Range { k, max: n });
    }
    if l > k {
        return Err(Error::Range { k: l, max: k });
    }
    if l == 0 {
        return matrix_sym(a, k);
    }
    if l == k {
        return matrix_sym(b, k);
    }
    let bnorm = b.as_matrix().norm();
    if bnorm == 0.0 {
        return Ok(0.0);
    }
    let anorm = a.as_matrix().norm();
    let s = if anorm > 0.0 { anorm / bnorm } else { 1.0 };

    let nodes: Vec<f64> = (0..=k)
        .map(|j| ((2 * j + 1) as f64 * std::f64::consts::PI / (2 * (k + 1)) as f64).cos())
        .collect();
    let mut vander = DMatrix::zeros(k + 1, k + 1);
    let mut samples = DVector::zeros(k + 1);
    for (row, &t) in nodes.iter().enumerate() {
        let mut p = 1.0;
        for col in 0..=k {
            vander[(row, col)] = p;
            p *= t;
        }
        let m = a.as_matrix() + b.as_matrix() * (t * s);
        samples[row] = elementary_sym(&SymMatrix::symmetrized(m)?.eigenvalues()?, k)?;
    }
    let coeffs = vander
        .lu()
        .solve(&samples)
        .ok_or_else(|| Error::Numeric("interpolation system is singular".into()))?;
    Ok(coeffs[l] / s.powi(l as i32) / binomial(k, l) as f64)
}

/// Newton transform `T_{k-1}(W) = sum_j (-1)^j S_{k-1-j}(W) W^j`, i.e. the
/// gradient of `S_k` with respect to the entries of `W` (`T_0 = I`,
/// `T_j = S_j(W) I - W T_{j-1}`).
///
/// Evaluated as `Q diag(S_{k-1}(lambda|i)) Q^T`: the matrix recurrence loses
/// about four digits to cancellation once eigenvalues differ in scale.
pub fn newton_transform(w: &SymMatrix, k: usize) -> Result<SymMatrix> {
    let n = w.dim();
    if k < 1 || k > n {
        return Err(Error::Range { k, max: n });
    }
    if w.is_diagonal() {
        let d: Vec<f64> = (0..n).map(|i| w.get(i, i)).collect();
        return Ok(SymMatrix::diagonal(&sym_gradient(&d, k)));
    }
    let (lambda, q) = w.eigen()?;
    let g = sym_gradient(lambda.as_slice(), k);
    let t = &q * DMatrix::from_diagonal(&DVector::from_vec(g)) * q.transpose();
    SymMatrix::symmetrized(t)
}

/// Result of a cone-membership test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeMembership {
    pub inside: bool,
    /// `min_{1 <= i <= k} S_i`, signed.
    pub margin: f64,
}

/// Membership in the open Garding cone `Gamma_k`.
pub fn gamma_member(lambda: &Spectrum, k: usize) -> Result<ConeMembership> {
    gamma_member_with_slack(lambda, k, 0.0)
}

/// As [`gamma_member`], but every `S_i` must exceed `slack` rather than zero.
pub fn gamma_member_with_slack(lambda: &Spectrum, k: usize, slack: f64) -> Result<ConeMembership> {
    if k < 1 || k > lambda.len() {
        return Err(Error::Range { k, max: lambda.len() });
    }
    Ok(cone_margin(lambda.as_slice(), k, slack))
}

pub(crate) fn cone_margin(values: &[f64], k: usize, slack: f64) -> ConeMembership {
    let s = sym_prefix(values, k);
    let margin = s[1..=k].iter().copied().fold(f64::INFINITY, f64::min);
    ConeMembership {
        inside: s[1..=k].iter().all(|&v| v > slack),
        margin,
    }
}

/// Largest `k` for which `values` lies in `Gamma_k`, or 0 if none.
pub fn largest_cone_degree(values: &[f64]) -> usize {
    let s = sym_prefix(values, values.len());
    s[1..].iter().take_while(|&&v| v > 0.0).count()
}
