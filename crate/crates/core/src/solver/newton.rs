use serde::{Deserialize, Serialize};

use super::discrete::{evaluate, Evaluation};
use super::grid::GridField;
use super::linear::LinearSolver;
use super::ProblemSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonConfig {
    /// Stop when the max-norm residual is at or below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Every accepted iterate keeps its cone margin at or above this.
    pub margin_floor: f64,
    /// Sufficient-decrease constant in `|R(u + s du)| <= (1 - c s) |R(u)|`.
    pub armijo: f64,
    pub min_step: f64,
    pub linear: LinearSolver,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tol: 1e-10,
            max_iter: 30,
            margin_floor: 1e-12,
            armijo: 1e-4,
            min_step: 1.0 / 1024.0,
            linear: LinearSolver::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NewtonStats {
    pub iterations: usize,
    pub residual_inf: f64,
    /// Smallest margin over all accepted iterates, including the start.
    pub min_margin: f64,
    pub step_sizes: Vec<f64>,
    pub residual_history: Vec<f64>,
}

/// Damped Newton at fixed `t`. Steps are halved until the trial point is
/// admissible and the residual decreases sufficiently.
pub fn newton_solve(u0: &GridField, problem: &ProblemSpec, t: f64, cfg: &NewtonConfig) -> Result<(GridField, NewtonStats)> {
    let mut u = u0.clone();
    let mut ev = evaluate(problem, &u, t, true)?;
    if ev.min_margin < cfg.margin_floor {
        return Err(Error::Inadmissible { node: ev.worst_node, margin: ev.min_margin });
    }
    let mut stats = NewtonStats { min_margin: ev.min_margin, residual_history: vec![ev.norm_inf()], ..Default::default() };
    loop {
        let rnorm = ev.norm_inf();
        stats.residual_inf = rnorm;
        if !rnorm.is_finite() {
            return Err(nonconvergence(&stats, "non-finite residual", u.values));
        }
        if rnorm <= cfg.tol {
            return Ok((u, stats));
        }
        if stats.iterations >= cfg.max_iter {
            return Err(nonconvergence(&stats, "iteration limit", u.values));
        }
        let jac = ev.jacobian.take().expect("jacobian requested");
        let rhs: Vec<f64> = ev.residual.iter().map(|r| -r).collect();
        let du = match cfg.linear.solve(&jac, &rhs) {
            Ok(du) => du,
            Err(e) => return Err(nonconvergence(&stats, &format!("linear solve: {e}"), u.values)),
        };
        let r2 = ev.norm_2();
        let mut s = 1.0;
        let accepted: Option<(GridField, Evaluation)> = loop {
            if s < cfg.min_step {
                break None;
            }
            let mut trial = u.clone();
            for (v, d) in trial.values.iter_mut().zip(&du) {
                *v += s * d;
            }
            match evaluate(problem, &trial, t, true) {
                Ok(tev) if tev.min_margin >= cfg.margin_floor && tev.norm_2() <= (1.0 - cfg.armijo * s) * r2 => {
                    break Some((trial, tev));
                }
                Ok(_) | Err(Error::Numeric(_)) => s *= 0.5,
                Err(e) => return Err(e),
            }
        };
        let Some((next, nev)) = accepted else {
            return Err(nonconvergence(&stats, "line search stalled", u.values));
        };
        u = next;
        ev = nev;
        stats.iterations += 1;
        stats.step_sizes.push(s);
        stats.min_margin = stats.min_margin.min(ev.min_margin);
        stats.residual_history.push(ev.norm_inf());
    }
}

fn nonconvergence(stats: &NewtonStats, reason: &str, last_u: Vec<f64>) -> Error {
    Error::NonConvergence {
        iterations: stats.iterations,
        residual: stats.residual_inf,
        reason: reason.to_string(),
        last_u,
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::DomainGeometry;
    use crate::solver::grid::Grid;
    use crate::symfun::ConeSpec;

    #[test]
    fn exact_start_takes_no_steps() {
        let cone = ConeSpec::new(3, 2, 2).unwrap();
        let pr = ProblemSpec::with_fns(cone, |_| 1.0, |_| 1.0, |_| 1.0, DomainGeometry::radial(1.0).unwrap()).unwrap();
        let g = Arc::new(Grid::radial(3, 1.0, 20).unwrap());
        let (_, st) = newton_solve(&GridField::initial(g), &pr, 0.0, &NewtonConfig::default()).unwrap();
        assert_eq!(st.iterations, 0);
    }

    #[test]
    fn small_step_converges_quadratically() {
        let cone = ConeSpec::new(3, 2, 2).unwrap();
        let pr = ProblemSpec::with_fns(cone, |_| 10.0, |_| 1.0, |_| 1.0, DomainGeometry::radial(1.0).unwrap()).unwrap();
        let g = Arc::new(Grid::radial(3, 1.0, 40).unwrap());
        let (u, st) = newton_solve(&GridField::initial(g), &pr, 0.1, &NewtonConfig::default()).unwrap();
        assert!(st.iterations <= 8, "{st:?}");
        assert!(st.min_margin > 0.0);
        assert!(st.step_sizes.iter().all(|&s| s == 1.0));
        assert!(evaluate(&pr, &u, 0.1, false).unwrap().norm_inf() <= 1e-10);
    }
}
