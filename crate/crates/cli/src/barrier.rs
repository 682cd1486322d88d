use mhess::geometry::{
    collar_points, lemma53_initial_k3, search_big_k3, verify_barrier_bound, BarrierLemma, BarrierParams, BarrierReport,
    DomainGeometry,
};
use mhess::symfun::{binomial, ConeSpec};
use mhess::woperator::s_k_of_hessian;
use serde_json::{json, Map, Value};

use crate::output::num;
use crate::solve::parse_exact;
use crate::{core_exit_code, CliError, Output, RunConfig, EXIT_FAILED, EXIT_OK};

const KEYS: &[&str] =
    &["n", "m", "k", "lemma", "k0", "radius", "mu0", "samples", "small_k3", "big_k3", "u", "seed"];

pub fn run(cfg: &RunConfig, out: &Output) -> Result<i32, CliError> {
    cfg.check_keys("barrier-check", KEYS)?;
    let (n, m): (usize, usize) = (cfg.require("n")?, cfg.require("m")?);
    let c1 = binomial(n.saturating_sub(1), m.saturating_sub(1)) as usize;
    let (lemma, k) = match cfg.str("lemma").unwrap_or("53") {
        "53" => {
            if cfg.str("k0").is_some() {
                return Err(CliError::Config("k0 applies to lemma = 55 only".into()));
            }
            (BarrierLemma::Lemma53, cfg.require("k")?)
        }
        "55" => {
            let k0: usize = cfg.get_or("k0", 1)?;
            (BarrierLemma::Lemma55 { k0 }, cfg.get_or("k", c1 + k0)?)
        }
        other => return Err(CliError::Config(format!("lemma = {other}; expected 53 or 55"))),
    };
    let spec = ConeSpec::new(n, m, k)?;
    let radius: f64 = cfg.get_or("radius", 1.0)?;
    let mut geom = DomainGeometry::ball(vec![0.0; n], radius)?;
    if let Some(mu0) = cfg.opt::<f64>("mu0")? {
        if !(mu0 > 0.0 && mu0 <= radius) {
            return Err(CliError::Config(format!("mu0 = {mu0} must lie in (0, radius]")));
        }
        geom = geom.with_collar(mu0);
    }
    let samples: usize = cfg.get_or("samples", 1000)?;
    let small_k3: f64 = cfg.get_or("small_k3", 0.1)?;
    let exact = parse_exact(cfg.str("u").unwrap_or("bowl"))?;
    if exact.name().starts_with("box-cosine") {
        return Err(CliError::Config("barrier checks run on the ball; use u = bowl or quartic:<c>".into()));
    }
    let hess = |x: &[f64]| exact.hessian(x);

    let result: mhess::Result<BarrierReport> = match cfg.opt::<f64>("big_k3")? {
        Some(big) => {
            let params = BarrierParams::new(big, small_k3)?;
            let pts = collar_points(&geom, n, params.collar(&geom), samples)?;
            verify_barrier_bound(&hess, &geom, &params, &spec, &pts, lemma)
        }
        None => {
            // range of f = S_k(W(D^2 u)) along a radius seeds the K3 search
            let mut f_min = f64::INFINITY;
            let mut f_max = f64::NEG_INFINITY;
            for i in 0..=64 {
                let mut x = vec![0.0; n];
                x[0] = radius * i as f64 / 64.0;
                let f = s_k_of_hessian(&exact.hessian(&x), &spec)?;
                f_min = f_min.min(f);
                f_max = f_max.max(f);
            }
            if f_min.is_nan() || f_min <= 0.0 {
                return Err(CliError::Config(format!("u = {} is not k-admissible on the ball", exact.name())));
            }
            search_big_k3(&hess, &geom, &spec, small_k3, lemma, samples, lemma53_initial_k3(n, k, f_min, f_max))
        }
    };
    let report = match result {
        Ok(r) => r,
        Err(e) if core_exit_code(&e) == EXIT_FAILED => {
            let mut body = Map::new();
            body.insert("error".into(), Value::from(e.to_string()));
            out.manifest("failed", EXIT_FAILED, body)?;
            eprintln!("barrier-check failed: {e}");
            return Ok(EXIT_FAILED);
        }
        Err(e) => return Err(e.into()),
    };

    let header: Vec<String> = [
        "lemma",
        "k",
        "big_k3",
        "small_k3",
        "collar",
        "points",
        "checked",
        "skipped",
        "min_margin",
        "empirical_ratio",
        "h_min_margin",
        "passed",
    ]
    .map(String::from)
    .to_vec();
    let lemma_name = match lemma {
        BarrierLemma::Lemma53 => "53".to_string(),
        BarrierLemma::Lemma55 { k0 } => format!("55(k0={k0})"),
    };
    let rows = vec![vec![
        lemma_name,
        k.to_string(),
        num(report.big_k3),
        num(report.small_k3),
        num(report.collar),
        report.points.to_string(),
        report.checked.to_string(),
        report.skipped.len().to_string(),
        num(report.min_margin),
        num(report.empirical_ratio),
        num(report.h_min_margin),
        report.passed().to_string(),
    ]];
    out.data("report", &report, &header, &rows)?;
    let passed = report.passed();
    let (status, code) = if passed { ("passed", EXIT_OK) } else { ("violations", EXIT_FAILED) };
    let mut body = Map::new();
    body.insert("problem".into(), json!({ "n": n, "m": m, "k": k, "radius": radius, "u": exact.name() }));
    body.insert("report".into(), serde_json::to_value(&report).expect("barrier report"));
    out.manifest(status, code, body)?;
    println!(
        "barrier-check: {status}; K3 = {}, collar {}, {} of {} points checked, min margin {:e}, h margin {:e}",
        report.big_k3, report.collar, report.checked, report.points, report.min_margin, report.h_min_margin
    );
    for note in &report.notes {
        println!("note: {note}");
    }
    Ok(code)
}
