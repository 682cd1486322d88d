use std::sync::Arc;

use mhess::expr::Expr;
use mhess::geometry::DomainGeometry;
use mhess::solver::{
    continuation_solve, evaluate, manufactured_problem, BoxCosine, ContinuationConfig, ExactSolution, LinearSolver,
    NewtonConfig, ProblemSpec, QuadraticBowl, RadialQuartic, Source,
};
use mhess::symfun::ConeSpec;
use serde_json::{json, Map, Value};

use crate::output::num;
use crate::{core_exit_code, CliError, Output, RunConfig, EXIT_FAILED, EXIT_OK};

const KEYS: &[&str] = &[
    "n",
    "m",
    "k",
    "domain",
    "radius",
    "half_widths",
    "cells",
    "f",
    "a",
    "b",
    "manufactured",
    "tol",
    "max_iter",
    "margin_floor",
    "dt0",
    "dt_min",
    "dt_max",
    "grow",
    "c0_slack",
    "linear",
    "seed",
];

/// `bowl`, `quartic:<c>` or `box-cosine:<amp>`.
pub(crate) fn parse_exact(spec: &str) -> Result<Arc<dyn ExactSolution>, CliError> {
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a.trim())),
        None => (spec.trim(), None),
    };
    let param = |default: f64| -> Result<f64, CliError> {
        match arg {
            None => Ok(default),
            Some(a) => a.parse().map_err(|_| CliError::Config(format!("cannot parse parameter '{a}' of '{spec}'"))),
        }
    };
    Ok(match name {
        "bowl" if arg.is_none() => Arc::new(QuadraticBowl),
        "quartic" => Arc::new(RadialQuartic { c: param(0.05)? }),
        "box-cosine" => Arc::new(BoxCosine { amp: param(0.05)? }),
        _ => {
            return Err(CliError::Config(format!(
                "unknown exact solution '{spec}'; expected bowl, quartic:<c> or box-cosine:<amp>"
            )))
        }
    })
}

fn parse_field(cfg: &RunConfig, key: &str, n: usize) -> Result<Expr, CliError> {
    let src: String = cfg.require(key)?;
    let e = Expr::parse(&src)?;
    if e.coord_span() > n {
        return Err(CliError::Config(format!("{key} = {src} references x{} but n = {n}", e.coord_span())));
    }
    if key != "f" && e.uses_u() {
        return Err(CliError::Config(format!("{key} may not depend on u")));
    }
    Ok(e)
}

/// Radial meshes sample data along the first axis only, so the data must be
/// rotation invariant: values along each axis and two diagonals must agree.
fn check_radial(key: &str, e: &Expr, n: usize, radii: &[f64]) -> Result<(), CliError> {
    let mut dirs: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut d = vec![0.0; n];
            d[j] = 1.0;
            d
        })
        .collect();
    let s = 1.0 / (n as f64).sqrt();
    dirs.push(vec![s; n]);
    dirs.push((0..n).map(|j| if j % 2 == 0 { s } else { -s }).collect());
    for &r in radii {
        let u = 0.5 * r * r;
        let v0 = e.eval(&dirs[0].iter().map(|d| d * r).collect::<Vec<_>>(), u);
        for d in &dirs[1..] {
            let v = e.eval(&d.iter().map(|c| c * r).collect::<Vec<_>>(), u);
            let gap = (v - v0).abs();
            if gap.is_nan() || gap > 1e-9 * v0.abs().max(1.0) {
                return Err(CliError::Config(format!(
                    "radial mode needs radially symmetric data: {key} = {e} takes {v0} and {v} at radius {r}"
                )));
            }
        }
    }
    Ok(())
}

fn newton_config(cfg: &RunConfig) -> Result<NewtonConfig, CliError> {
    let d = NewtonConfig::default();
    let linear = match cfg.str("linear").unwrap_or("auto") {
        "auto" => LinearSolver::default(),
        "direct" => LinearSolver::Direct,
        "gmres" => LinearSolver::Gmres { restart: 50, tol: 1e-12, max_iter: 5000 },
        other => return Err(CliError::Config(format!("linear = {other}; expected auto, direct or gmres"))),
    };
    Ok(NewtonConfig {
        tol: cfg.get_or("tol", d.tol)?,
        max_iter: cfg.get_or("max_iter", d.max_iter)?,
        margin_floor: cfg.get_or("margin_floor", d.margin_floor)?,
        linear,
        ..d
    })
}

struct Setup {
    problem: ProblemSpec,
    exact: Option<Arc<dyn ExactSolution>>,
    description: String,
    continuation: ContinuationConfig,
}

fn setup(cfg: &RunConfig) -> Result<Setup, CliError> {
    cfg.check_keys("solve", KEYS)?;
    let (n, m, k) = (cfg.require("n")?, cfg.require("m")?, cfg.require("k")?);
    let cone = ConeSpec::new(n, m, k)?;
    let domain = cfg.str("domain").unwrap_or("ball");
    let radial = match domain {
        "ball" | "radial" => true,
        "box" => false,
        other => return Err(CliError::Config(format!("domain = {other}; expected ball, radial or box"))),
    };
    let radius: f64 = cfg.get_or("radius", 1.0)?;
    let geom = if radial {
        if cfg.str("half_widths").is_some() {
            return Err(CliError::Config("half_widths applies to domain = box only".into()));
        }
        DomainGeometry::ball(vec![0.0; n], radius)?
    } else {
        if cfg.str("radius").is_some() {
            return Err(CliError::Config("radius applies to domain = ball only".into()));
        }
        let mut hw: Vec<f64> = cfg.list("half_widths")?.unwrap_or_else(|| vec![1.0]);
        if hw.len() == 1 {
            hw = vec![hw[0]; n];
        }
        if hw.len() != n {
            return Err(CliError::Config(format!("half_widths has {} entries, n = {n}", hw.len())));
        }
        DomainGeometry::cuboid(hw)?
    };
    let d = ContinuationConfig::default();
    let continuation = ContinuationConfig {
        cells: cfg.get_or("cells", if radial { 64 } else { 16 })?,
        newton: newton_config(cfg)?,
        dt0: cfg.get_or("dt0", d.dt0)?,
        dt_min: cfg.get_or("dt_min", d.dt_min)?,
        dt_max: cfg.get_or("dt_max", d.dt_max)?,
        grow: cfg.get_or("grow", d.grow)?,
        c0_slack: cfg.get_or("c0_slack", d.c0_slack)?,
    };

    if let Some(spec) = cfg.str("manufactured") {
        if cfg.str("f").is_some() || cfg.str("b").is_some() {
            return Err(CliError::Config("manufactured problems derive f and b; remove those keys".into()));
        }
        let exact = parse_exact(spec)?;
        if radial && exact.name().starts_with("box-cosine") {
            return Err(CliError::Config("box-cosine is not radially symmetric; use domain = box".into()));
        }
        let a: f64 = cfg
            .str("a")
            .map(|s| s.parse().map_err(|_| CliError::Config(format!("manufactured problems need a constant a, got '{s}'"))))
            .transpose()?
            .unwrap_or(1.0);
        let problem = manufactured_problem(exact.clone(), cone, geom, a)?;
        return Ok(Setup { problem, description: format!("manufactured {}", exact.name()), exact: Some(exact), continuation });
    }

    let f = parse_field(cfg, "f", n)?;
    let a = if cfg.str("a").is_some() { parse_field(cfg, "a", n)? } else { Expr::Num(1.0) };
    let b = parse_field(cfg, "b", n)?;
    if radial {
        let cells = continuation.cells.max(1);
        let radii: Vec<f64> = (0..=cells).map(|i| radius * i as f64 / cells as f64).collect();
        check_radial("f", &f, n, &radii)?;
        check_radial("a", &a, n, &[radius])?;
        check_radial("b", &b, n, &[radius])?;
    }
    let description = format!("f = {f}, a = {a}, b = {b}");
    let source = if f.uses_u() {
        let df = f.d_du();
        let f = Arc::new(f);
        Source::XU { f: Arc::new(move |x: &[f64], u| f.eval(x, u)), df_du: Arc::new(move |x: &[f64], u| df.eval(x, u)) }
    } else {
        Source::X(Arc::new(move |x: &[f64]| f.eval(x, 0.0)))
    };
    let problem = ProblemSpec::new(
        cone,
        source,
        Arc::new(move |x: &[f64]| a.eval(x, 0.0)),
        Arc::new(move |x: &[f64]| b.eval(x, 0.0)),
        geom,
    )?;
    Ok(Setup { problem, exact: None, description, continuation })
}

pub fn run(cfg: &RunConfig, out: &Output) -> Result<i32, CliError> {
    let s = setup(cfg)?;
    let cone = s.problem.cone;
    let mut body = Map::new();
    body.insert(
        "problem".into(),
        json!({
            "n": cone.n, "m": cone.m, "k": cone.k,
            "domain": cfg.str("domain").unwrap_or("ball"),
            "data": s.description,
            "cells": s.continuation.cells,
        }),
    );
    let state = match continuation_solve(&s.problem, &s.continuation) {
        Ok(st) => st,
        Err(e) if core_exit_code(&e) == EXIT_FAILED => {
            body.insert("error".into(), Value::from(e.to_string()));
            out.manifest("failed", EXIT_FAILED, body)?;
            eprintln!("solve failed: {e}");
            return Ok(EXIT_FAILED);
        }
        Err(e) => return Err(e.into()),
    };

    let grid = state.u.grid.clone();
    let ev = evaluate(&s.problem, &state.u, 1.0, false)?;
    let accepted_positive = state.steps.iter().filter(|r| r.accepted).all(|r| r.min_margin > 0.0);
    let diagnostics_ok = state.c0.passed() && accepted_positive && ev.min_margin > 0.0;

    body.insert(
        "grid".into(),
        json!({ "kind": grid.kind, "nodes": grid.len(), "h": grid.spacing, "cells": grid.cells }),
    );
    body.insert("steps".into(), serde_json::to_value(&state.steps).expect("step records"));
    body.insert(
        "summary".into(),
        json!({
            "t": state.t,
            "accepted_steps": state.accepted_steps(),
            "rejected_steps": state.steps.len() - state.accepted_steps(),
            "newton_iterations": state.total_newton_iters,
            "final_residual_inf": state.final_residual,
            "min_margin_over_iterates": state.min_margin,
        }),
    );
    body.insert(
        "diagnostics".into(),
        json!({
            "c0": state.c0,
            "c0_bound_holds": state.c0.bound_margin >= -state.c0.tolerance,
            "max_on_boundary": state.c0.max_on_boundary,
            "iterates_admissible": accepted_positive,
            "final_min_margin": ev.min_margin,
            "passed": diagnostics_ok,
        }),
    );
    if let Some(exact) = &s.exact {
        let errs: Vec<f64> =
            grid.coords.iter().zip(&state.u.values).map(|(x, u)| (u - exact.value(x)).abs()).collect();
        body.insert(
            "error_report".into(),
            json!({
                "exact": exact.name(),
                "linf": errs.iter().copied().fold(0.0, f64::max),
                "l2_rms": (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt(),
            }),
        );
    }

    let mut header: Vec<String> = (1..=cone.n).map(|i| format!("x{i}")).collect();
    header.push("u".into());
    header.push("margin".into());
    let rows: Vec<Vec<String>> = grid
        .coords
        .iter()
        .zip(&state.u.values)
        .zip(&ev.margins)
        .map(|((x, u), mg)| {
            let mut r: Vec<String> = x.iter().map(|v| num(*v)).collect();
            r.push(num(*u));
            r.push(mg.map(num).unwrap_or_default());
            r
        })
        .collect();
    let json_rows: Vec<Value> = grid
        .coords
        .iter()
        .zip(&state.u.values)
        .zip(&ev.margins)
        .map(|((x, u), mg)| json!({ "x": x, "u": u, "margin": mg }))
        .collect();
    out.data("solution", &json_rows, &header, &rows)?;

    let (status, code) = if diagnostics_ok { ("converged", EXIT_OK) } else { ("diagnostics-failed", EXIT_FAILED) };
    out.manifest(status, code, body)?;
    println!(
        "solve: {status}; {} accepted steps, {} Newton iterations, residual {:e}, min margin {:e}, sup u {} <= {} ({})",
        state.accepted_steps(),
        state.total_newton_iters,
        state.final_residual,
        state.min_margin,
        state.c0.sup_u,
        state.c0.bound,
        out.dir().display()
    );
    Ok(code)
}
