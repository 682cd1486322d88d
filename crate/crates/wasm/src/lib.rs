//! Browser bindings. Every export returns a JSON string; errors surface as
//! JavaScript exceptions carrying the message.

use std::sync::Arc;

use mhess::expr::Expr;
use mhess::geometry::{verify_barrier_bound, BarrierLemma, BarrierParams, DomainGeometry};
use mhess::solver::{
    continuation_solve, evaluate, ContinuationConfig, ExactSolution, ProblemSpec, QuadraticBowl, RadialQuartic, Source,
};
use mhess::symfun::{largest_cone_degree, sym_prefix, ConeSpec, SymMatrix};
use mhess::woperator::w_spectrum_fast;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn js(r: Result<Value, String>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

fn numbers(src: &str) -> Result<Vec<f64>, String> {
    src.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("cannot parse '{s}' as a number")))
        .collect()
}

/// Lifted spectrum, `S_1 .. S_N`, running margins and the largest admissible
/// `k` of a symmetric matrix given as `n * n` row-major entries.
pub fn cone_report_value(entries: &str, m: usize) -> Result<Value, String> {
    let v = numbers(entries)?;
    let n = (v.len() as f64).sqrt().round() as usize;
    if n == 0 || n * n != v.len() {
        return Err(format!("{} entries do not form a square matrix", v.len()));
    }
    if m < 1 || m > n {
        return Err(format!("m = {m} needs 1 <= m <= n = {n}"));
    }
    let h = SymMatrix::from_row_major(n, &v).map_err(|e| e.to_string())?;
    let mut lifted = w_spectrum_fast(&h, m).map_err(|e| e.to_string())?.into_vec();
    lifted.sort_by(|a, b| b.total_cmp(a));
    let s = sym_prefix(&lifted, lifted.len())[1..].to_vec();
    let margins: Vec<f64> = s
        .iter()
        .scan(f64::INFINITY, |acc, v| {
            *acc = acc.min(*v);
            Some(*acc)
        })
        .collect();
    Ok(json!({
        "n": n,
        "m": m,
        "eigenvalues": h.eigenvalues().map_err(|e| e.to_string())?.sorted_desc().as_slice(),
        "lifted": lifted,
        "s": s,
        "margins": margins,
        "largest_admissible_k": largest_cone_degree(&lifted),
    }))
}

/// Radial continuation solve on the unit ball. `f` and `b` may use `r` and
/// (for `f`) `u`; `a` is a positive constant.
pub fn radial_curve_value(n: usize, m: usize, k: usize, f: &str, a: f64, b: &str, cells: usize) -> Result<Value, String> {
    let cone = ConeSpec::new(n, m, k).map_err(|e| e.to_string())?;
    let fe = Expr::parse(f).map_err(|e| e.to_string())?;
    let be = Expr::parse(b).map_err(|e| e.to_string())?;
    if fe.coord_span() > 0 || be.coord_span() > 0 {
        return Err("radial data may only use r (and u in f)".into());
    }
    if be.uses_u() {
        return Err("b may not depend on u".into());
    }
    let source = if fe.uses_u() {
        let df = fe.d_du();
        let fe = Arc::new(fe);
        Source::XU { f: Arc::new(move |x: &[f64], u| fe.eval(x, u)), df_du: Arc::new(move |x: &[f64], u| df.eval(x, u)) }
    } else {
        Source::X(Arc::new(move |x: &[f64]| fe.eval(x, 0.0)))
    };
    let geom = DomainGeometry::ball(vec![0.0; n], 1.0).map_err(|e| e.to_string())?;
    let problem =
        ProblemSpec::new(cone, source, Arc::new(move |_: &[f64]| a), Arc::new(move |x: &[f64]| be.eval(x, 0.0)), geom)
            .map_err(|e| e.to_string())?;
    let cfg = ContinuationConfig { cells, ..Default::default() };
    let st = continuation_solve(&problem, &cfg).map_err(|e| e.to_string())?;
    let ev = evaluate(&problem, &st.u, 1.0, false).map_err(|e| e.to_string())?;
    let grid = &st.u.grid;
    Ok(json!({
        "r": grid.coords.iter().map(|x| x[0]).collect::<Vec<f64>>(),
        "u": st.u.values,
        "margin": ev.margins,
        "steps": st.steps.iter().filter(|s| s.accepted).map(|s| json!({ "t": s.t, "newton_iters": s.newton_iters, "residual": s.residual_inf })).collect::<Vec<_>>(),
        "newton_iterations": st.total_newton_iters,
        "residual": st.final_residual,
        "sup_u": st.c0.sup_u,
        "c0_bound": st.c0.bound,
        "c0_passed": st.c0.passed(),
    }))
}

/// Barrier ratio `F^{ij} h_ij / (1 + tr F)` and bound margins at `samples`
/// depths across the collar, along the first axis of the unit ball.
/// `lemma` is 53 or 55; `quartic_c = 0` uses `|x|^2 / 2`.
#[allow(clippy::too_many_arguments)]
pub fn barrier_profile_value(
    n: usize,
    m: usize,
    lemma: u32,
    k0: usize,
    k: usize,
    big_k3: f64,
    small_k3: f64,
    quartic_c: f64,
    samples: usize,
) -> Result<Value, String> {
    let which = match lemma {
        53 => BarrierLemma::Lemma53,
        55 => BarrierLemma::Lemma55 { k0 },
        _ => return Err(format!("lemma must be 53 or 55, got {lemma}")),
    };
    let spec = ConeSpec::new(n, m, k).map_err(|e| e.to_string())?;
    let geom = DomainGeometry::ball(vec![0.0; n], 1.0).map_err(|e| e.to_string())?;
    let params = BarrierParams::new(big_k3, small_k3).map_err(|e| e.to_string())?;
    let exact: Box<dyn ExactSolution> =
        if quartic_c == 0.0 { Box::new(QuadraticBowl) } else { Box::new(RadialQuartic { c: quartic_c }) };
    let hess = |x: &[f64]| exact.hessian(x);
    let width = params.collar(&geom);
    let (mut depth, mut ratio, mut margin, mut h_margin) = (vec![], vec![], vec![], vec![]);
    let mut notes = vec![];
    for i in 0..samples.max(1) {
        let d = width * (i as f64 + 0.5) / samples.max(1) as f64;
        let mut x = vec![0.0; n];
        x[0] = 1.0 - d;
        let rep = verify_barrier_bound(&hess, &geom, &params, &spec, &[x], which).map_err(|e| e.to_string())?;
        if rep.checked == 0 {
            continue;
        }
        notes = rep.notes;
        depth.push(d);
        ratio.push(rep.empirical_ratio);
        margin.push(rep.min_margin);
        h_margin.push(rep.h_min_margin);
    }
    let passed = !margin.is_empty() && margin.iter().all(|v| *v > 0.0) && h_margin.iter().all(|v| *v >= -1e-12);
    Ok(json!({
        "collar": width,
        "depth": depth,
        "ratio": ratio,
        "margin": margin,
        "h_margin": h_margin,
        "passed": passed,
        "notes": notes,
    }))
}

#[wasm_bindgen(js_name = coneReport)]
pub fn cone_report(entries: &str, m: usize) -> Result<String, JsValue> {
    js(cone_report_value(entries, m))
}

#[wasm_bindgen(js_name = radialCurve)]
pub fn radial_curve(n: usize, m: usize, k: usize, f: &str, a: f64, b: &str, cells: usize) -> Result<String, JsValue> {
    js(radial_curve_value(n, m, k, f, a, b, cells))
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen(js_name = barrierProfile)]
pub fn barrier_profile(
    n: usize,
    m: usize,
    lemma: u32,
    k0: usize,
    k: usize,
    big_k3: f64,
    small_k3: f64,
    quartic_c: f64,
    samples: usize,
) -> Result<String, JsValue> {
    js(barrier_profile_value(n, m, lemma, k0, k, big_k3, small_k3, quartic_c, samples))
}
