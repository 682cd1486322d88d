//! Finite-difference continuation solver for
//! `S_k(W(D^2 u)) = f` in the domain, `u_nu = -a u + b` on the boundary.
//!
//! The path starts from `u0 = |x|^2 / 2`, which solves the `t = 0` member of
//!
//! ```text
//! S_k(W) = t f + (1 - t) C(C(n,m), k) m^k
//! u_nu   = -a u + t b + (1 - t) (x . nu + a |x|^2 / 2)
//! ```
//!
//! exactly, including at the discrete level.

mod continuation;
mod discrete;
mod grid;
mod linear;
mod manufactured;
mod newton;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::DomainGeometry;
use crate::symfun::{binomial, ConeSpec};

pub use continuation::{continuation_solve, diagnose, radial_solve, ContinuationConfig, ContinuationState, StepRecord};
pub use discrete::{evaluate, homotopy_data, jacobian, residual, Evaluation, HomotopyData};
pub use grid::{Grid, GridField, GridKind, NodeRole};
pub use linear::{gmres, LinearSolver, SparseMatrix};
pub use manufactured::{
    manufactured_problem, manufactured_suite, BoxCosine, ConvergenceReport, ConvergenceRow, ExactSolution,
    QuadraticBowl, RadialQuartic,
};
pub use newton::{newton_solve, NewtonConfig, NewtonStats};

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type StateFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// Right-hand side `f(x)` or `f(x, u)`; the latter carries its `u`-derivative,
/// which must be non-positive.
#[derive(Clone)]
pub enum Source {
    X(ScalarFn),
    XU { f: StateFn, df_du: StateFn },
}

impl Source {
    pub fn value(&self, x: &[f64], u: f64) -> f64 {
        match self {
            Source::X(f) => f(x),
            Source::XU { f, .. } => f(x, u),
        }
    }

    pub fn du(&self, x: &[f64], u: f64) -> f64 {
        match self {
            Source::X(_) => 0.0,
            Source::XU { df_du, .. } => df_du(x, u),
        }
    }
}

impl std::fmt::Debug for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Source::X(_) => f.write_str("Source::X(..)"),
            Source::XU { .. } => f.write_str("Source::XU(..)"),
        }
    }
}

/// The Neumann problem: cone data, source, boundary coefficients, domain.
#[derive(Clone)]
pub struct ProblemSpec {
    pub cone: ConeSpec,
    pub f: Source,
    pub a: ScalarFn,
    pub b: ScalarFn,
    pub geom: DomainGeometry,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec").field("cone", &self.cone).field("geom", &self.geom).finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn new(cone: ConeSpec, f: Source, a: ScalarFn, b: ScalarFn, geom: DomainGeometry) -> Result<Self> {
        if let Some(d) = geom.dim() {
            if d != cone.n {
                return Err(Error::Config(format!("domain dimension {d} does not match n = {}", cone.n)));
            }
        }
        Ok(ProblemSpec { cone, f, a, b, geom })
    }

    /// Convenience constructor for constant-free closures.
    pub fn with_fns(
        cone: ConeSpec,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        a: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        b: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        geom: DomainGeometry,
    ) -> Result<Self> {
        ProblemSpec::new(cone, Source::X(Arc::new(f)), Arc::new(a), Arc::new(b), geom)
    }

    /// Right side of the `t = 0` problem, `C(C(n,m), k) m^k`.
    pub fn t0_rhs(&self) -> f64 {
        t0_rhs(&self.cone)
    }
}

pub fn t0_rhs(cone: &ConeSpec) -> f64 {
    binomial(cone.lifted_dim(), cone.k) as f64 * (cone.m as f64).powi(cone.k as i32)
}
