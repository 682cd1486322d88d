use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::continuation::{continuation_solve, ContinuationConfig};
use super::{ProblemSpec, Source};
use crate::error::{Error, Result};
use crate::geometry::{C0Report, DomainGeometry, DomainKind};
use crate::symfun::{ConeSpec, SymMatrix};
use crate::woperator::s_k_of_hessian;

/// Closed-form solution used to manufacture `f` and `b`.
pub trait ExactSolution: Send + Sync {
    fn name(&self) -> String;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn hessian(&self, x: &[f64]) -> SymMatrix;
}

/// `|x|^2 / 2`.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticBowl;

impl ExactSolution for QuadraticBowl {
    fn name(&self) -> String {
        "bowl".into()
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().map(|v| v * v).sum::<f64>()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn hessian(&self, x: &[f64]) -> SymMatrix {
        SymMatrix::identity(x.len())
    }
}

/// `r^2 / 2 + c r^4`.
#[derive(Debug, Clone, Copy)]
pub struct RadialQuartic {
    pub c: f64,
}

impl ExactSolution for RadialQuartic {
    fn name(&self) -> String {
        format!("quartic({})", self.c)
    }
    fn value(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        0.5 * r2 + self.c * r2 * r2
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        x.iter().map(|v| (1.0 + 4.0 * self.c * r2) * v).collect()
    }
    fn hessian(&self, x: &[f64]) -> SymMatrix {
        let n = x.len();
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = 8.0 * self.c * x[i] * x[j] + if i == j { 1.0 + 4.0 * self.c * r2 } else { 0.0 };
                m[i * n + j] = v;
                m[j * n + i] = v;
            }
        }
        SymMatrix::from_row_major(n, &m).expect("symmetric")
    }
}

/// `|x|^2 / 2 + amp * prod cos(pi x_i / 2)`.
#[derive(Debug, Clone, Copy)]
pub struct BoxCosine {
    pub amp: f64,
}

impl ExactSolution for BoxCosine {
    fn name(&self) -> String {
        format!("box-cosine({})", self.amp)
    }
    fn value(&self, x: &[f64]) -> f64 {
        let p: f64 = x.iter().map(|v| (0.5 * std::f64::consts::PI * v).cos()).product();
        0.5 * x.iter().map(|v| v * v).sum::<f64>() + self.amp * p
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let w = 0.5 * std::f64::consts::PI;
        (0..x.len())
            .map(|i| {
                let rest: f64 = (0..x.len()).filter(|&j| j != i).map(|j| (w * x[j]).cos()).product();
                x[i] - self.amp * w * (w * x[i]).sin() * rest
            })
            .collect()
    }
    fn hessian(&self, x: &[f64]) -> SymMatrix {
        let n = x.len();
        let w = 0.5 * std::f64::consts::PI;
        let c: Vec<f64> = x.iter().map(|v| (w * v).cos()).collect();
        let s: Vec<f64> = x.iter().map(|v| (w * v).sin()).collect();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let rest: f64 = (0..n).filter(|&l| l != i && l != j).map(|l| c[l]).product();
                let v = if i == j {
                    1.0 - self.amp * w * w * c[i] * rest
                } else {
                    self.amp * w * w * s[i] * s[j] * rest
                };
                m[i * n + j] = v;
                m[j * n + i] = v;
            }
        }
        SymMatrix::from_row_major(n, &m).expect("symmetric")
    }
}

/// Outward normal the discretisation uses at a boundary point: the radial
/// direction for balls, the normalised sum of active face normals for boxes.
fn discrete_normal(geom: &DomainGeometry, x: &[f64]) -> Vec<f64> {
    match &geom.kind {
        DomainKind::Box { half_widths } => {
            let mut nu: Vec<f64> = x
                .iter()
                .zip(half_widths)
                .map(|(&xi, &w)| {
                    if xi >= w * (1.0 - 1e-12) {
                        1.0
                    } else if xi <= -w * (1.0 - 1e-12) {
                        -1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            let len = nu.iter().map(|v| v * v).sum::<f64>().sqrt();
            nu.iter_mut().for_each(|v| *v /= len.max(1.0));
            nu
        }
        DomainKind::Ball { center, .. } => {
            let rel: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
            let len = rel.iter().map(|v| v * v).sum::<f64>().sqrt();
            rel.iter().map(|v| v / len).collect()
        }
        DomainKind::Radial { .. } => {
            let len = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter().map(|v| v / len).collect()
        }
    }
}

/// Problem whose exact solution is `exact`, with constant Robin coefficient `a`.
pub fn manufactured_problem(
    exact: Arc<dyn ExactSolution>,
    cone: ConeSpec,
    geom: DomainGeometry,
    a: f64,
) -> Result<ProblemSpec> {
    let ef = exact.clone();
    let f = move |x: &[f64]| s_k_of_hessian(&ef.hessian(x), &cone).unwrap_or(f64::NAN);
    let eb = exact;
    let g2 = geom.clone();
    let b = move |x: &[f64]| {
        let nu = discrete_normal(&g2, x);
        let grad = eb.gradient(x);
        grad.iter().zip(&nu).map(|(g, v)| g * v).sum::<f64>() + a * eb.value(x)
    };
    ProblemSpec::new(cone, Source::X(Arc::new(f)), Arc::new(move |_: &[f64]| a), Arc::new(b), geom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub cells: usize,
    pub h: f64,
    pub nodes: usize,
    pub linf: f64,
    pub l2: f64,
    pub newton_iters: usize,
    pub steps: usize,
    pub seconds: f64,
    /// Smallest cone margin over every accepted Newton iterate.
    pub min_margin: f64,
    pub c0: C0Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub solution: String,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log e` against `log h`.
    pub order_linf: f64,
    pub order_l2: f64,
    pub pairwise_linf: Vec<f64>,
    pub pairwise_l2: Vec<f64>,
}

fn ls_slope(h: &[f64], e: &[f64]) -> f64 {
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Solves on each mesh and measures nodal errors against `exact`.
/// The `l2` error is the root-mean-square over nodes.
pub fn manufactured_suite(
    exact: Arc<dyn ExactSolution>,
    cone: ConeSpec,
    geom: DomainGeometry,
    a: f64,
    meshes: &[usize],
    cfg: &ContinuationConfig,
) -> Result<ConvergenceReport> {
    if meshes.len() < 2 {
        return Err(Error::Argument("convergence study needs at least two meshes".into()));
    }
    let problem = manufactured_problem(exact.clone(), cone, geom, a)?;
    let mut rows = Vec::with_capacity(meshes.len());
    for &cells in meshes {
        let start = Instant::now();
        let st = continuation_solve(&problem, &ContinuationConfig { cells, ..*cfg })?;
        let seconds = start.elapsed().as_secs_f64();
        let grid = &st.u.grid;
        let errs: Vec<f64> =
            grid.coords.iter().zip(&st.u.values).map(|(x, u)| (u - exact.value(x)).abs()).collect();
        rows.push(ConvergenceRow {
            cells,
            h: grid.spacing,
            nodes: grid.len(),
            linf: errs.iter().copied().fold(0.0, f64::max),
            l2: (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt(),
            newton_iters: st.total_newton_iters,
            steps: st.accepted_steps(),
            seconds,
            min_margin: st.min_margin,
            c0: st.c0,
        });
    }
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let linf: Vec<f64> = rows.iter().map(|r| r.linf).collect();
    let l2: Vec<f64> = rows.iter().map(|r| r.l2).collect();
    let pair = |e: &[f64]| (1..e.len()).map(|i| (e[i - 1] / e[i]).ln() / (h[i - 1] / h[i]).ln()).collect();
    Ok(ConvergenceReport {
        solution: exact.name(),
        order_linf: ls_slope(&h, &linf),
        order_l2: ls_slope(&h, &l2),
        pairwise_linf: pair(&linf),
        pairwise_l2: pair(&l2),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_hessian(e: &dyn ExactSolution, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let eps = 1e-5;
        let mut out = vec![0.0; n * n];
        for j in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += eps;
            xm[j] -= eps;
            let (gp, gm) = (e.gradient(&xp), e.gradient(&xm));
            for i in 0..n {
                out[i * n + j] = (gp[i] - gm[i]) / (2.0 * eps);
            }
        }
        out
    }

    #[test]
    fn exact_derivatives_are_consistent() {
        let x = [0.3, -0.4, 0.55];
        let sols: [&dyn ExactSolution; 3] = [&QuadraticBowl, &RadialQuartic { c: 0.1 }, &BoxCosine { amp: 0.05 }];
        for e in sols {
            let fd = fd_hessian(e, &x);
            let h = e.hessian(&x);
            for i in 0..3 {
                for j in 0..3 {
                    assert!((fd[i * 3 + j] - h.get(i, j)).abs() < 1e-8, "{}", e.name());
                }
                let mut xp = x;
                let mut xm = x;
                xp[i] += 1e-6;
                xm[i] -= 1e-6;
                let g = (e.value(&xp) - e.value(&xm)) / 2e-6;
                assert!((g - e.gradient(&x)[i]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn ls_slope_of_power_law() {
        let h = [0.1, 0.05, 0.025];
        let e: Vec<f64> = h.iter().map(|v| 3.0 * v * v).collect();
        assert!((ls_slope(&h, &e) - 2.0).abs() < 1e-12);
    }
}
