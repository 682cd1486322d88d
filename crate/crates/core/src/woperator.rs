//! The lifted matrix `W` of a Hessian on the `m`-th exterior power.
//!
//! Rows and columns of `W` are labelled by strictly increasing `m`-tuples of
//! coordinate indices in dictionary order. Its eigenvalues are the `m`-fold
//! sums of the Hessian's eigenvalues.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::symfun::{
    binomial, cone_margin, sym_deleted_unchecked, sym_prefix, ConeMembership, ConeSpec, Spectrum,
    SymMatrix,
};

/// All strictly increasing `m`-tuples of `0..n` in dictionary order.
///
/// Tuples hold 0-based coordinate indices; [`MultiIndexTable::ordinal`]
/// returns the 1-based dictionary number.
#[derive(Debug, Clone)]
pub struct MultiIndexTable {
    n: usize,
    m: usize,
    tuples: Vec<Vec<usize>>,
    lookup: HashMap<Vec<usize>, usize>,
}

impl MultiIndexTable {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if m < 2 || m + 1 > n {
            return Err(Error::Argument(format!("m = {m} must satisfy 2 <= m <= n - 1 (n = {n})")));
        }
        Ok(Self::build(n, m))
    }

    /// No range check on `m`; used for curvature vectors where `m = n` is allowed.
    pub(crate) fn build(n: usize, m: usize) -> Self {
        let tuples = combinations(n, m);
        let lookup = tuples.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        MultiIndexTable { n, m, tuples, lookup }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    /// 0-based row of `W` for a sorted tuple.
    pub fn position(&self, tuple: &[usize]) -> Option<usize> {
        self.lookup.get(tuple).copied()
    }

    /// 1-based dictionary number.
    pub fn ordinal(&self, tuple: &[usize]) -> Option<usize> {
        self.position(tuple).map(|p| p + 1)
    }

    /// `m`-subset sums of `values` in table order.
    pub fn subset_sums(&self, values: &[f64]) -> Vec<f64> {
        self.tuples
            .iter()
            .map(|t| t.iter().map(|&i| values[i]).sum())
            .collect()
    }
}

fn combinations(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(n, m) as usize);
    if m > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..m).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..m).rev().find(|&i| cur[i] < n - m + i) else {
            break;
        };
        cur[i] += 1;
        for j in (i + 1)..m {
            cur[j] = cur[j - 1] + 1;
        }
    }
    out
}

/// One term of the lift: `W[row][col] += sign * H[i][j]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LiftEntry {
    pub row: usize,
    pub col: usize,
    pub i: usize,
    pub j: usize,
    pub sign: i8,
}

/// Sparse linear map from `n x n` Hessians to `W`, with its adjoint.
#[derive(Debug, Clone)]
pub struct LiftOperator {
    table: MultiIndexTable,
    entries: Vec<LiftEntry>,
}

impl LiftOperator {
    pub fn new(table: MultiIndexTable) -> Self {
        let n = table.n;
        let mut entries = Vec::new();
        for (row, alpha) in table.tuples.iter().enumerate() {
            for (slot, &ai) in alpha.iter().enumerate() {
                entries.push(LiftEntry { row, col: row, i: ai, j: ai, sign: 1 });
                for j in (0..n).filter(|j| !alpha.contains(j)) {
                    let mut beta: Vec<usize> = alpha.iter().copied().filter(|&a| a != ai).collect();
                    let q = beta.partition_point(|&b| b < j);
                    beta.insert(q, j);
                    let col = table.lookup[&beta];
                    let sign = if slot.abs_diff(q) % 2 == 0 { 1 } else { -1 };
                    entries.push(LiftEntry { row, col, i: ai, j, sign });
                }
            }
        }
        LiftOperator { table, entries }
    }

    pub fn table(&self) -> &MultiIndexTable {
        &self.table
    }

    pub fn entries(&self) -> &[LiftEntry] {
        &self.entries
    }

    pub fn apply(&self, h: &SymMatrix) -> Result<SymMatrix> {
        if h.dim() != self.table.n {
            return Err(Error::Argument(format!(
                "Hessian is {}x{}, table expects n = {}",
                h.dim(),
                h.dim(),
                self.table.n
            )));
        }
        let c = self.table.len();
        let mut w = DMatrix::zeros(c, c);
        for e in &self.entries {
            w[(e.row, e.col)] += f64::from(e.sign) * h.get(e.i, e.j);
        }
        SymMatrix::new(w)
    }

    /// Adjoint map: `F[i][j] = sum over entries (.., i, j, sign) of sign * G[row][col]`.
    pub fn adjoint(&self, g: &SymMatrix) -> Result<SymMatrix> {
        if g.dim() != self.table.len() {
            return Err(Error::Argument("gradient size does not match the table".into()));
        }
        let n = self.table.n;
        let mut f = DMatrix::zeros(n, n);
        for e in &self.entries {
            f[(e.i, e.j)] += f64::from(e.sign) * g.get(e.row, e.col);
        }
        SymMatrix::symmetrized(f)
    }
}

/// `W` together with the `(n, m)` it was lifted for.
#[derive(Debug, Clone, PartialEq)]
pub struct WMatrix {
    pub data: SymMatrix,
    pub n: usize,
    pub m: usize,
}

pub fn build_table(n: usize, m: usize) -> Result<MultiIndexTable> {
    MultiIndexTable::new(n, m)
}

pub fn build_w(h: &SymMatrix, table: &MultiIndexTable) -> Result<WMatrix> {
    let data = LiftOperator::new(table.clone()).apply(h)?;
    Ok(WMatrix { data, n: table.n, m: table.m })
}

/// Spectrum of `W` without forming it: diagonalise `H` once and take all
/// `m`-subset sums of its eigenvalues.
pub fn w_spectrum_fast(h: &SymMatrix, m: usize) -> Result<Spectrum> {
    let mu = h.eigenvalues()?;
    let table = MultiIndexTable::build(h.dim(), m);
    if table.is_empty() {
        return Err(Error::Argument(format!("m = {m} exceeds dimension {}", h.dim())));
    }
    Spectrum::new(table.subset_sums(mu.as_slice()))
}

fn check_dim(h: &SymMatrix, spec: &ConeSpec) -> Result<()> {
    if h.dim() != spec.n {
        return Err(Error::Argument(format!("Hessian is {0}x{0}, spec has n = {1}", h.dim(), spec.n)));
    }
    Ok(())
}

/// k-admissibility of a Hessian: the `m`-sum spectrum lies in `Gamma_k`.
pub fn admissible(h: &SymMatrix, spec: &ConeSpec) -> Result<ConeMembership> {
    check_dim(h, spec)?;
    let lambda = w_spectrum_fast(h, spec.m)?;
    Ok(cone_margin(lambda.as_slice(), spec.k, 0.0))
}

pub fn s_k_of_hessian(h: &SymMatrix, spec: &ConeSpec) -> Result<f64> {
    check_dim(h, spec)?;
    let lambda = w_spectrum_fast(h, spec.m)?;
    Ok(sym_prefix(lambda.as_slice(), spec.k)[spec.k])
}

/// `F^{ij} = dS_k(W(H))/dH_ij` and its trace.
#[derive(Debug, Clone, PartialEq)]
pub struct FDerivative {
    pub f: SymMatrix,
    pub trace: f64,
}

/// Everything the solver needs at one Hessian, from a single eigen-decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct PointEval {
    pub s_k: f64,
    pub margin: f64,
    pub admissible: bool,
    /// Row-major `n x n` derivative matrix `F^{ij}`.
    pub f: Vec<f64>,
    pub trace: f64,
}

pub fn point_eval(h: &SymMatrix, spec: &ConeSpec, table: &MultiIndexTable) -> Result<PointEval> {
    check_dim(h, spec)?;
    let n = spec.n;
    let (mu, q) = h.eigen()?;
    let lambda = table.subset_sums(mu.as_slice());
    let cone = cone_margin(&lambda, spec.k, 0.0);
    let s_k = sym_prefix(&lambda, spec.k)[spec.k];

    let mut g = vec![0.0; n];
    for (a, tuple) in table.tuples().iter().enumerate() {
        let d = sym_deleted_unchecked(&lambda, spec.k - 1, &[a]);
        for &i in tuple {
            g[i] += d;
        }
    }
    let trace = g.iter().sum();
    let mut f = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v: f64 = (0..n).map(|p| q[(i, p)] * g[p] * q[(j, p)]).sum();
            f[i * n + j] = v;
            f[j * n + i] = v;
        }
    }
    Ok(PointEval { s_k, margin: cone.margin, admissible: cone.inside, f, trace })
}

/// `F^{ij}` in the eigenbasis of `H`: for diagonal `H`,
/// `F^{ii} = sum over tuples containing i of S_{k-1}(lambda | tuple)`.
pub fn f_ij(h: &SymMatrix, spec: &ConeSpec) -> Result<FDerivative> {
    let table = MultiIndexTable::new(spec.n, spec.m)?;
    let p = point_eval(h, spec, &table)?;
    Ok(FDerivative { f: SymMatrix::from_row_major(spec.n, &p.f)?, trace: p.trace })
}

/// `F^{ij}` as the adjoint lift of the Newton transform of `W`.
pub fn f_ij_adjoint(h: &SymMatrix, spec: &ConeSpec, lift: &LiftOperator) -> Result<FDerivative> {
    check_dim(h, spec)?;
    let w = lift.apply(h)?;
    let g = crate::symfun::newton_transform(&w, spec.k)?;
    let f = lift.adjoint(&g)?;
    let trace = (0..spec.n).map(|i| f.get(i, i)).sum();
    Ok(FDerivative { f, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symfun::elementary_sym;

    #[test]
    fn table_examples() {
        let t = build_table(3, 2).unwrap();
        assert_eq!(t.tuples(), &[vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(t.ordinal(&[0, 1]), Some(1));
        let t = build_table(4, 2).unwrap();
        assert_eq!(t.len(), 6);
        assert_eq!(t.tuples()[5], vec![2, 3]);
        assert_eq!(build_table(5, 3).unwrap().len(), 10);
        assert!(build_table(3, 3).is_err());
        assert!(build_table(3, 1).is_err());
    }

    #[test]
    fn build_w_examples() {
        let t = build_table(3, 2).unwrap();
        let w = build_w(&SymMatrix::identity(3), &t).unwrap();
        assert_eq!(w.data, SymMatrix::diagonal(&[2.0, 2.0, 2.0]));
        let w = build_w(&SymMatrix::diagonal(&[1.0, 2.0, 3.0]), &t).unwrap();
        assert_eq!(w.data, SymMatrix::diagonal(&[3.0, 4.0, 5.0]));
        assert!(build_w(&SymMatrix::identity(4), &t).is_err());
    }

    #[test]
    fn lift_entry_counts() {
        // each tuple has m diagonal terms and m (n - m) single-swap terms
        let lift = LiftOperator::new(build_table(5, 2).unwrap());
        assert_eq!(lift.entries().len(), 10 * (2 + 2 * 3));
        // single-swap pairs: no entry between tuples differing in two places
        let t = lift.table();
        for e in lift.entries() {
            let a = &t.tuples()[e.row];
            let b = &t.tuples()[e.col];
            let shared = a.iter().filter(|x| b.contains(x)).count();
            assert!(shared >= t.m() - 1);
        }
    }

    #[test]
    fn fast_spectrum_examples() {
        let s = w_spectrum_fast(&SymMatrix::zeros(4), 2).unwrap();
        assert_eq!(s.len(), 6);
        assert!(s.as_slice().iter().all(|&v| v.abs() < 1e-15));
        let mut s = w_spectrum_fast(&SymMatrix::diagonal(&[1.0, 1.0, -1.0]), 2).unwrap().into_vec();
        s.sort_by(f64::total_cmp);
        for (a, b) in s.iter().zip([0.0, 0.0, 2.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn admissible_examples() {
        for (n, m) in [(3, 2), (4, 2), (4, 3), (5, 2)] {
            for k in 1..=binomial(n, m) as usize {
                let spec = ConeSpec::new(n, m, k).unwrap();
                assert!(admissible(&SymMatrix::identity(n), &spec).unwrap().inside);
            }
        }
        let h = SymMatrix::diagonal(&[1.0, 1.0, -1.0]);
        assert!(!admissible(&h, &ConeSpec::new(3, 2, 2).unwrap()).unwrap().inside);
        assert!(admissible(&h, &ConeSpec::new(3, 2, 1).unwrap()).unwrap().inside);
    }

    #[test]
    fn f_ij_identity_example() {
        let spec = ConeSpec::new(3, 2, 2).unwrap();
        let h = SymMatrix::identity(3);
        let d = f_ij(&h, &spec).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 8.0 } else { 0.0 };
                assert!((d.f.get(i, j) - e).abs() < 1e-12);
            }
        }
        assert!((d.trace - 24.0).abs() < 1e-12);
        assert!((d.f.frobenius_dot(&h) - 2.0 * 12.0).abs() < 1e-12);
        let lift = LiftOperator::new(build_table(3, 2).unwrap());
        let a = f_ij_adjoint(&h, &spec, &lift).unwrap();
        assert!((a.trace - 24.0).abs() < 1e-12);
    }

    #[test]
    fn s_k_examples() {
        let spec = ConeSpec::new(3, 2, 2).unwrap();
        assert!((s_k_of_hessian(&SymMatrix::identity(3), &spec).unwrap() - 12.0).abs() < 1e-12);
        assert_eq!(s_k_of_hessian(&SymMatrix::zeros(3), &spec).unwrap(), 0.0);
        for (n, m) in [(4, 2), (5, 2), (5, 3), (6, 3)] {
            let c = binomial(n, m) as usize;
            for k in 1..=c {
                let spec = ConeSpec::new(n, m, k).unwrap();
                let expect = binomial(c, k) as f64 * (m as f64).powi(k as i32);
                let got = s_k_of_hessian(&SymMatrix::identity(n), &spec).unwrap();
                assert!((got - expect).abs() <= 1e-12 * expect, "{n} {m} {k}");
                let direct = elementary_sym(&Spectrum::new(vec![m as f64; c]).unwrap(), k).unwrap();
                assert!((got - direct).abs() <= 1e-12 * expect);
            }
        }
    }
}
