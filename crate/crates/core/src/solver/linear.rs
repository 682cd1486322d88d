use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};

/// Row-compressed sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl SparseMatrix {
    /// Rows must be given in order; duplicate columns within a row are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *vals.last_mut().expect("entry") += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseMatrix { n, row_ptr, cols, vals }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |e| (self.cols[e], self.vals[e]))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(c, v)| v * x[c]).sum()).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).find(|e| e.0 == i).map_or(0.0, |e| e.1)).collect()
    }
}

/// Linear solver choice for Newton steps.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum LinearSolver {
    /// Sparse LU below `direct_limit` unknowns, restarted GMRES above.
    Auto { direct_limit: usize },
    Direct,
    Gmres { restart: usize, tol: f64, max_iter: usize },
}

impl Default for LinearSolver {
    fn default() -> Self {
        LinearSolver::Auto { direct_limit: 100_000 }
    }
}

impl LinearSolver {
    pub fn solve(&self, a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
        match *self {
            LinearSolver::Auto { direct_limit } => {
                if a.n < direct_limit {
                    direct_solve(a, b)
                } else {
                    gmres(a, b, 50, 1e-12, 20_000)
                }
            }
            LinearSolver::Direct => direct_solve(a, b),
            LinearSolver::Gmres { restart, tol, max_iter } => gmres(a, b, restart, tol, max_iter),
        }
    }
}

fn direct_solve(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let mut trip = Vec::with_capacity(a.nnz());
    for i in 0..a.n {
        for (c, v) in a.row(i) {
            trip.push(Triplet::new(i, c, v));
        }
    }
    let m = SparseColMat::<usize, f64>::try_new_from_triplets(a.n, a.n, &trip)
        .map_err(|e| Error::Numeric(format!("sparse assembly failed: {e:?}")))?;
    let lu = m.sp_lu().map_err(|e| Error::Numeric(format!("sparse LU failed: {e:?}")))?;
    let mut rhs = Mat::<f64>::from_fn(a.n, 1, |i, _| b[i]);
    lu.solve_in_place(rhs.as_mut());
    let x: Vec<f64> = (0..a.n).map(|i| rhs[(i, 0)]).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("sparse LU produced non-finite values (singular Jacobian?)".into()));
    }
    Ok(x)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Restarted GMRES with Jacobi (diagonal) right preconditioning.
pub fn gmres(a: &SparseMatrix, b: &[f64], restart: usize, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = a.n;
    let dinv: Vec<f64> = a.diagonal().iter().map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect();
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let restart = restart.max(1);
    let mut iters = 0;
    loop {
        let ax = a.matvec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = dot(&r, &r).sqrt();
        if beta <= tol * bnorm {
            return Ok(x);
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let mut cs = vec![0.0; restart];
        let mut sn = vec![0.0; restart];
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut used = 0;
        for j in 0..restart {
            iters += 1;
            let z: Vec<f64> = v[j].iter().zip(&dinv).map(|(vi, di)| vi * di).collect();
            let mut w = a.matvec(&z);
            for i in 0..=j {
                h[i][j] = dot(&w, &v[i]);
                for (wk, vk) in w.iter_mut().zip(&v[i]) {
                    *wk -= h[i][j] * vk;
                }
            }
            h[j + 1][j] = dot(&w, &w).sqrt();
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let denom = (h[j][j] * h[j][j] + h[j + 1][j] * h[j + 1][j]).sqrt();
            if denom == 0.0 {
                used = j;
                break;
            }
            cs[j] = h[j][j] / denom;
            sn[j] = h[j + 1][j] / denom;
            let hj1 = h[j + 1][j];
            h[j][j] = cs[j] * h[j][j] + sn[j] * hj1;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            let hnorm = hj1;
            if g[j + 1].abs() <= tol * bnorm || iters >= max_iter {
                break;
            }
            v.push(w.iter().map(|wi| wi / hnorm).collect());
        }
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let s: f64 = ((i + 1)..used).map(|l| h[i][l] * y[l]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (i, yi) in y.iter().enumerate() {
            for (xk, (vk, dk)) in x.iter_mut().zip(v[i].iter().zip(&dinv)) {
                *xk += yi * vk * dk;
            }
        }
        if iters >= max_iter {
            let ax = a.matvec(&x);
            let res = b.iter().zip(&ax).map(|(bi, ai)| (bi - ai).powi(2)).sum::<f64>().sqrt();
            if res <= tol * bnorm * 10.0 {
                return Ok(x);
            }
            return Err(Error::Numeric(format!("GMRES reached {max_iter} iterations (residual {res:e})")));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson_1d(n: usize) -> SparseMatrix {
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, 2.5)];
                if i > 0 {
                    r.push((i - 1, -1.0));
                }
                if i + 1 < n {
                    r.push((i + 1, -1.2));
                }
                r
            })
            .collect();
        SparseMatrix::from_rows(rows)
    }

    #[test]
    fn direct_and_gmres_agree() {
        let a = poisson_1d(60);
        let b: Vec<f64> = (0..60).map(|i| (i as f64 * 0.3).sin()).collect();
        let x1 = LinearSolver::Direct.solve(&a, &b).unwrap();
        let x2 = gmres(&a, &b, 20, 1e-13, 5000).unwrap();
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).abs() < 1e-9);
        }
        let r = a.matvec(&x1);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicates_are_summed() {
        let a = SparseMatrix::from_rows(vec![vec![(0, 1.0), (0, 2.0)], vec![(1, 1.0)]]);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.diagonal(), vec![3.0, 1.0]);
    }
}
