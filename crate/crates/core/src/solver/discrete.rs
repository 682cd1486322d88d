#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::grid::{Grid, GridField, GridKind, NodeRole};
use super::linear::SparseMatrix;
use super::{t0_rhs, ProblemSpec};
use crate::error::{Error, Result};
use crate::symfun::SymMatrix;
use crate::woperator::{point_eval, MultiIndexTable};

/// Homotopy data at parameter `t` for the current iterate. Entries that do
/// not apply to a node (interior `b_t`, boundary `rhs`) are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyData {
    pub rhs: Vec<f64>,
    pub rhs_du: Vec<f64>,
    pub a: Vec<f64>,
    pub b_t: Vec<f64>,
}

pub fn homotopy_data(problem: &ProblemSpec, field: &GridField, t: f64) -> Result<HomotopyData> {
    let grid = &field.grid;
    let c0 = t0_rhs(&problem.cone);
    let n = grid.len();
    let mut data = HomotopyData { rhs: vec![0.0; n], rhs_du: vec![0.0; n], a: vec![0.0; n], b_t: vec![0.0; n] };
    for p in 0..n {
        let x = &grid.coords[p];
        let u = field.values[p];
        match &grid.roles[p] {
            NodeRole::Boundary { normal, .. } => {
                let a = (problem.a)(x);
                if !(a > 0.0) {
                    return Err(Error::Validation(format!(
                        "boundary coefficient a must be positive; a = {a} at node {p}"
                    )));
                }
                let xn: f64 = x.iter().zip(normal).map(|(xi, ni)| xi * ni).sum();
                let r2: f64 = x.iter().map(|v| v * v).sum();
                data.a[p] = a;
                data.b_t[p] = t * (problem.b)(x) + (1.0 - t) * (xn + 0.5 * a * r2);
            }
            _ => {
                let f = problem.f.value(x, u);
                if !(f > 0.0) {
                    return Err(Error::Validation(format!(
                        "source f must be positive for the cone equation; f = {f} at node {p}"
                    )));
                }
                let du = problem.f.du(x, u);
                if du > 0.0 {
                    return Err(Error::Validation(format!("f must be non-increasing in u; f_u = {du} at node {p}")));
                }
                data.rhs[p] = t * f + (1.0 - t) * c0;
                data.rhs_du[p] = t * du;
            }
        }
    }
    Ok(data)
}

/// Residual, admissibility and (optionally) Jacobian of one iterate.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub residual: Vec<f64>,
    /// Cone margin per node; `None` on boundary nodes.
    pub margins: Vec<Option<f64>>,
    /// Smallest cone margin over non-boundary nodes.
    pub min_margin: f64,
    pub worst_node: usize,
    pub jacobian: Option<SparseMatrix>,
}

impl Evaluation {
    pub fn norm_inf(&self) -> f64 {
        self.residual.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn norm_2(&self) -> f64 {
        self.residual.iter().map(|r| r * r).sum::<f64>().sqrt()
    }
}

struct NodeOut {
    res: f64,
    margin: f64,
    row: Vec<(usize, f64)>,
}

/// Hessian stencil at a non-boundary node: `(H, dH_ij/du_q as (q, i, j, c))`.
fn hessian_stencil(grid: &Grid, u: &[f64], p: usize) -> (SymMatrix, Vec<(usize, usize, usize, f64)>) {
    let n = grid.dim;
    let h = grid.spacing;
    let h2 = h * h;
    match grid.kind {
        GridKind::Radial => {
            if p == 0 {
                let lap = 2.0 * (u[1] - u[0]) / h2;
                let mut st = Vec::with_capacity(2 * n);
                for i in 0..n {
                    st.push((1, i, i, 2.0 / h2));
                    st.push((0, i, i, -2.0 / h2));
                }
                (SymMatrix::diagonal(&vec![lap; n]), st)
            } else {
                let r = grid.coords[p][0];
                let urr = (u[p + 1] - 2.0 * u[p] + u[p - 1]) / h2;
                let ur = (u[p + 1] - u[p - 1]) / (2.0 * h * r);
                let mut d = vec![ur; n];
                d[0] = urr;
                let mut st = vec![(p + 1, 0, 0, 1.0 / h2), (p, 0, 0, -2.0 / h2), (p - 1, 0, 0, 1.0 / h2)];
                for i in 1..n {
                    st.push((p + 1, i, i, 1.0 / (2.0 * h * r)));
                    st.push((p - 1, i, i, -1.0 / (2.0 * h * r)));
                }
                (SymMatrix::diagonal(&d), st)
            }
        }
        GridKind::Lattice => {
            let s = grid.strides();
            let mut m = vec![0.0; n * n];
            let mut st = Vec::with_capacity(3 * n + 2 * n * n);
            for d in 0..n {
                let (pp, pm) = (p + s[d], p - s[d]);
                m[d * n + d] = (u[pp] - 2.0 * u[p] + u[pm]) / h2;
                st.push((pp, d, d, 1.0 / h2));
                st.push((p, d, d, -2.0 / h2));
                st.push((pm, d, d, 1.0 / h2));
                for e in (d + 1)..n {
                    let q = 1.0 / (4.0 * h2);
                    let (a, b, c, dd) = (pp + s[e], pp - s[e], pm + s[e], pm - s[e]);
                    let v = (u[a] - u[b] - u[c] + u[dd]) * q;
                    m[d * n + e] = v;
                    m[e * n + d] = v;
                    st.push((a, d, e, q));
                    st.push((b, d, e, -q));
                    st.push((c, d, e, -q));
                    st.push((dd, d, e, q));
                }
            }
            (SymMatrix::from_row_major(n, &m).expect("symmetric stencil"), st)
        }
    }
}

fn node_eval(
    problem: &ProblemSpec,
    table: &MultiIndexTable,
    field: &GridField,
    data: &HomotopyData,
    p: usize,
    with_jacobian: bool,
) -> Result<NodeOut> {
    let grid = &field.grid;
    let u = &field.values;
    if let NodeRole::Boundary { line, step, .. } = &grid.roles[p] {
        let [p0, p1, p2] = *line;
        let s = *step;
        let res = (3.0 * u[p0] - 4.0 * u[p1] + u[p2]) / (2.0 * s) + data.a[p] * u[p0] - data.b_t[p];
        let row = if with_jacobian {
            vec![(p0, 3.0 / (2.0 * s) + data.a[p]), (p1, -4.0 / (2.0 * s)), (p2, 1.0 / (2.0 * s))]
        } else {
            Vec::new()
        };
        return Ok(NodeOut { res, margin: f64::INFINITY, row });
    }
    let n = grid.dim;
    let (hess, stencil) = hessian_stencil(grid, u, p);
    let pe = point_eval(&hess, &problem.cone, table)?;
    let res = pe.s_k - data.rhs[p];
    let mut row = Vec::new();
    if with_jacobian {
        row.reserve(stencil.len() + 1);
        for (q, i, j, c) in stencil {
            let w = if i == j { pe.f[i * n + i] } else { 2.0 * pe.f[i * n + j] };
            row.push((q, w * c));
        }
        row.push((p, -data.rhs_du[p]));
    }
    Ok(NodeOut { res, margin: pe.margin, row })
}

/// Evaluates the discrete operator at homotopy parameter `t`.
pub fn evaluate(problem: &ProblemSpec, field: &GridField, t: f64, with_jacobian: bool) -> Result<Evaluation> {
    let table = MultiIndexTable::new(problem.cone.n, problem.cone.m)?;
    if field.grid.dim != problem.cone.n {
        return Err(Error::Argument(format!("grid dimension {} does not match n = {}", field.grid.dim, problem.cone.n)));
    }
    let data = homotopy_data(problem, field, t)?;
    #[cfg(feature = "parallel")]
    let nodes = (0..field.grid.len()).into_par_iter();
    #[cfg(not(feature = "parallel"))]
    let nodes = 0..field.grid.len();
    let outs: Vec<NodeOut> = nodes
        .map(|p| node_eval(problem, &table, field, &data, p, with_jacobian))
        .collect::<Result<_>>()?;
    let (worst_node, min_margin) =
        outs.iter().enumerate().fold((0, f64::INFINITY), |acc, (p, o)| if o.margin < acc.1 { (p, o.margin) } else { acc });
    let residual = outs.iter().map(|o| o.res).collect();
    let margins = outs.iter().map(|o| o.margin.is_finite().then_some(o.margin)).collect();
    let jacobian = with_jacobian.then(|| SparseMatrix::from_rows(outs.into_iter().map(|o| o.row).collect()));
    Ok(Evaluation { residual, margins, min_margin, worst_node, jacobian })
}

fn admissible_eval(problem: &ProblemSpec, field: &GridField, t: f64, with_jacobian: bool) -> Result<Evaluation> {
    let ev = evaluate(problem, field, t, with_jacobian)?;
    if !(ev.min_margin > 0.0) {
        return Err(Error::Inadmissible { node: ev.worst_node, margin: ev.min_margin });
    }
    Ok(ev)
}

/// Residual rows; every non-boundary node must be admissible.
pub fn residual(problem: &ProblemSpec, field: &GridField, t: f64) -> Result<Vec<f64>> {
    Ok(admissible_eval(problem, field, t, false)?.residual)
}

/// Exact derivative of [`residual`]; every non-boundary node must be admissible.
pub fn jacobian(problem: &ProblemSpec, field: &GridField, t: f64) -> Result<SparseMatrix> {
    Ok(admissible_eval(problem, field, t, true)?.jacobian.expect("requested"))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::DomainGeometry;
    use crate::symfun::ConeSpec;

    fn bowl(geom: DomainGeometry, cone: ConeSpec) -> ProblemSpec {
        ProblemSpec::with_fns(cone, |_| 2.0, |_| 1.5, |x| x[0].sin() + 2.0, geom).unwrap()
    }

    #[test]
    fn t0_solution_is_discrete_exact() {
        let cone = ConeSpec::new(3, 2, 2).unwrap();
        let pr = bowl(DomainGeometry::radial(1.0).unwrap(), cone);
        let g = Arc::new(Grid::radial(3, 1.0, 16).unwrap());
        let r = residual(&pr, &GridField::initial(g), 0.0).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-11), "{r:?}");

        let pr = bowl(DomainGeometry::cuboid(vec![1.0; 3]).unwrap(), cone);
        let g = Arc::new(Grid::lattice(&[1.0; 3], 6).unwrap());
        let r = residual(&pr, &GridField::initial(g), 0.0).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-11));
    }

    #[test]
    fn neumann_closure_bits() {
        let cone = ConeSpec::new(3, 2, 1).unwrap();
        let pr = ProblemSpec::with_fns(cone, |_| 1.0, |_| 0.25, |_| 0.0, DomainGeometry::radial(1.0).unwrap()).unwrap();
        let g = Arc::new(Grid::radial(3, 1.0, 10).unwrap());
        let mut f = GridField::initial(g);
        f.values[10] = 0.7;
        f.values[9] = 0.41;
        f.values[8] = 0.33;
        let r = residual(&pr, &f, 1.0).unwrap();
        let h = 1.0 / 10.0;
        assert_eq!(r[10], (3.0 * 0.7 - 4.0 * 0.41 + 0.33) / (2.0 * h) + 0.25 * 0.7 - 0.0);
    }

    fn fd_check(pr: &ProblemSpec, field: &GridField, t: f64) {
        let j = jacobian(pr, field, t).unwrap();
        let dir: Vec<f64> = (0..field.values.len()).map(|i| ((i * 7 + 3) % 11) as f64 / 11.0 - 0.5).collect();
        let jv = j.matvec(&dir);
        let eps = 1e-6;
        let shift = |s: f64| {
            let mut g = field.clone();
            for (v, d) in g.values.iter_mut().zip(&dir) {
                *v += s * d;
            }
            residual(pr, &g, t).unwrap()
        };
        let (rp, rm) = (shift(eps), shift(-eps));
        for i in 0..jv.len() {
            let fd = (rp[i] - rm[i]) / (2.0 * eps);
            assert!((fd - jv[i]).abs() <= 1e-5 * (1.0 + fd.abs()), "row {i}: {fd} vs {}", jv[i]);
        }
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let cone = ConeSpec::new(3, 2, 2).unwrap();
        let pert = |x: &[f64]| 0.5 * x.iter().map(|v| v * v).sum::<f64>() + 0.05 * (x[0] + 0.3 * x[1]).sin();

        let pr = bowl(DomainGeometry::radial(1.0).unwrap(), cone);
        let g = Arc::new(Grid::radial(3, 1.0, 12).unwrap());
        fd_check(&pr, &GridField::from_fn(g, pert), 0.4);

        let pr = bowl(DomainGeometry::cuboid(vec![1.0; 3]).unwrap(), cone);
        let g = Arc::new(Grid::lattice(&[1.0; 3], 5).unwrap());
        fd_check(&pr, &GridField::from_fn(g, pert), 0.7);
    }

    #[test]
    fn validation_errors() {
        let cone = ConeSpec::new(3, 2, 2).unwrap();
        let g = Arc::new(Grid::radial(3, 1.0, 8).unwrap());
        let pr = ProblemSpec::with_fns(cone, |x| x[0] - 0.5, |_| 1.0, |_| 1.0, DomainGeometry::radial(1.0).unwrap()).unwrap();
        assert!(matches!(residual(&pr, &GridField::initial(g.clone()), 1.0), Err(Error::Validation(_))));
        let pr = ProblemSpec::with_fns(cone, |_| 1.0, |_| 0.0, |_| 1.0, DomainGeometry::radial(1.0).unwrap()).unwrap();
        assert!(matches!(residual(&pr, &GridField::initial(g), 1.0), Err(Error::Validation(_))));
    }
}
