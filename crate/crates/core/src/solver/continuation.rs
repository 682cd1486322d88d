use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::{Grid, GridField, GridKind};
use super::newton::{newton_solve, NewtonConfig};
use super::ProblemSpec;
use crate::error::{Error, Result};
use crate::geometry::{c0_diagnostic, C0Report};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuationConfig {
    pub cells: usize,
    pub newton: NewtonConfig,
    pub dt0: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub grow: f64,
    /// Maximum-principle slack is `c0_slack * h^2`.
    pub c0_slack: f64,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig {
            cells: 64,
            newton: NewtonConfig::default(),
            dt0: 0.1,
            dt_min: 1e-4,
            dt_max: 0.25,
            grow: 1.5,
            c0_slack: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    pub accepted: bool,
    pub newton_iters: usize,
    pub residual_inf: f64,
    pub min_margin: f64,
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ContinuationState {
    pub t: f64,
    pub u: GridField,
    pub steps: Vec<StepRecord>,
    pub total_newton_iters: usize,
    /// Smallest cone margin over every accepted Newton iterate.
    pub min_margin: f64,
    pub final_residual: f64,
    pub c0: C0Report,
}

impl ContinuationState {
    pub fn accepted_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.accepted).count()
    }
}

/// Path-follows `t: 0 -> 1` from `|x|^2 / 2` with adaptive steps.
pub fn continuation_solve(problem: &ProblemSpec, cfg: &ContinuationConfig) -> Result<ContinuationState> {
    let grid = Arc::new(Grid::for_domain(&problem.geom, problem.cone.n, cfg.cells)?);
    continuation_on(problem, grid, cfg)
}

/// Continuation on a radial mesh; the domain must be a ball about the origin.
pub fn radial_solve(problem: &ProblemSpec, cfg: &ContinuationConfig) -> Result<ContinuationState> {
    let grid = Grid::for_domain(&problem.geom, problem.cone.n, cfg.cells)?;
    if grid.kind != GridKind::Radial {
        return Err(Error::Config("radial solve needs a ball or radial domain".into()));
    }
    continuation_on(problem, Arc::new(grid), cfg)
}

fn continuation_on(problem: &ProblemSpec, grid: Arc<Grid>, cfg: &ContinuationConfig) -> Result<ContinuationState> {
    if !(cfg.dt_min > 0.0 && cfg.dt_min <= cfg.dt0 && cfg.dt0 <= cfg.dt_max && cfg.grow >= 1.0) {
        return Err(Error::Config("step sizes need 0 < dt_min <= dt0 <= dt_max and grow >= 1".into()));
    }
    let (mut u, st0) = newton_solve(&GridField::initial(grid), problem, 0.0, &cfg.newton)?;
    let mut steps = vec![StepRecord {
        t: 0.0,
        dt: 0.0,
        accepted: true,
        newton_iters: st0.iterations,
        residual_inf: st0.residual_inf,
        min_margin: st0.min_margin,
        note: None,
    }];
    let mut total = st0.iterations;
    let mut min_margin = st0.min_margin;
    let mut final_residual = st0.residual_inf;
    let mut t = 0.0;
    let mut dt = cfg.dt0;
    let mut prev: Option<(f64, Vec<f64>)> = None;
    while t < 1.0 {
        let t_try = if t + dt >= 1.0 - 1e-12 { 1.0 } else { t + dt };
        let attempt = match &prev {
            // secant predictor; falls back to the last solution if it leaves the cone
            Some((tp, up)) => {
                let ratio = (t_try - t) / (t - tp);
                let mut guess = u.clone();
                for (g, q) in guess.values.iter_mut().zip(up) {
                    *g += ratio * (*g - q);
                }
                match newton_solve(&guess, problem, t_try, &cfg.newton) {
                    Err(Error::Inadmissible { .. } | Error::NonConvergence { .. }) => {
                        newton_solve(&u, problem, t_try, &cfg.newton)
                    }
                    r => r,
                }
            }
            None => newton_solve(&u, problem, t_try, &cfg.newton),
        };
        match attempt {
            Ok((next, st)) => {
                steps.push(StepRecord {
                    t: t_try,
                    dt: t_try - t,
                    accepted: true,
                    newton_iters: st.iterations,
                    residual_inf: st.residual_inf,
                    min_margin: st.min_margin,
                    note: None,
                });
                total += st.iterations;
                min_margin = min_margin.min(st.min_margin);
                final_residual = st.residual_inf;
                prev = Some((t, std::mem::replace(&mut u, next).values));
                t = t_try;
                dt = (dt * cfg.grow).min(cfg.dt_max);
            }
            Err(e @ (Error::NonConvergence { .. } | Error::Inadmissible { .. } | Error::Numeric(_))) => {
                let (iters, res) = match &e {
                    Error::NonConvergence { iterations, residual, .. } => (*iterations, *residual),
                    _ => (0, f64::NAN),
                };
                steps.push(StepRecord {
                    t: t_try,
                    dt: t_try - t,
                    accepted: false,
                    newton_iters: iters,
                    residual_inf: res,
                    min_margin: f64::NAN,
                    note: Some(e.to_string()),
                });
                total += iters;
                dt *= 0.5;
                if dt < cfg.dt_min {
                    return Err(Error::Continuation { t, dt_min: cfg.dt_min, last_u: u.values });
                }
            }
            Err(e) => return Err(e),
        }
    }
    let c0 = diagnose(problem, &u, cfg.c0_slack)?;
    Ok(ContinuationState { t, u, steps, total_newton_iters: total, min_margin, final_residual, c0 })
}

/// Maximum-principle diagnostics of a `t = 1` solution.
pub fn diagnose(problem: &ProblemSpec, u: &GridField, slack: f64) -> Result<C0Report> {
    let grid = &u.grid;
    let boundary: Vec<(usize, f64, f64)> =
        grid.boundary_nodes().map(|p| (p, (problem.a)(&grid.coords[p]), (problem.b)(&grid.coords[p]))).collect();
    c0_diagnostic(&u.values, &boundary, slack * grid.spacing * grid.spacing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainGeometry;
    use crate::symfun::ConeSpec;

    #[test]
    fn constant_data_radial() {
        let cone = ConeSpec::new(3, 2, 2).unwrap();
        let pr = ProblemSpec::with_fns(cone, |_| 3.0, |_| 2.0, |_| 2.5, DomainGeometry::radial(1.0).unwrap()).unwrap();
        let cfg = ContinuationConfig { cells: 32, ..Default::default() };
        let st = radial_solve(&pr, &cfg).unwrap();
        assert_eq!(st.t, 1.0);
        assert!(st.min_margin > 0.0);
        assert!(st.final_residual <= 1e-10);
        assert!(st.c0.passed(), "{:?}", st.c0);
        assert!(st.steps.iter().filter(|s| s.accepted).all(|s| s.min_margin > 0.0));
    }

    #[test]
    fn bad_step_config() {
        let cone = ConeSpec::new(3, 2, 2).unwrap();
        let pr = ProblemSpec::with_fns(cone, |_| 3.0, |_| 2.0, |_| 2.5, DomainGeometry::radial(1.0).unwrap()).unwrap();
        let cfg = ContinuationConfig { dt_min: 0.5, ..Default::default() };
        assert!(matches!(radial_solve(&pr, &cfg), Err(Error::Config(_))));
    }
}
