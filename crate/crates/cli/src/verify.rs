use mhess::cones::{prop26_k_max, run_prop23, run_prop24, run_prop25, run_prop26, run_prop27, SampleReport};
use mhess::symfun::ConeSpec;
use mhess::verify::{run_euler, run_jacobian, run_prop21, run_prop22, run_spectral_lift};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::output::num;
use crate::{CliError, Output, RunConfig, EXIT_FAILED, EXIT_OK};

const KEYS: &[&str] = &["suite", "n", "m", "k", "trials", "seed"];

const SUITES: &[&str] =
    &["prop21", "prop22", "prop23", "prop24", "prop25", "prop26", "prop27", "euler", "spectral-lift", "jacobian"];

/// Largest `n` swept when the config leaves it open.
const DESK_N: usize = 6;

#[derive(Debug, Clone, Copy, Serialize)]
struct Case {
    n: usize,
    m: Option<usize>,
    k: Option<usize>,
    seed: u64,
}

#[derive(Serialize)]
struct CaseReport {
    label: String,
    #[serde(flatten)]
    case: Case,
    report: SampleReport,
}

fn case_seed(seed: u64, n: usize, m: usize, k: usize) -> u64 {
    let tag = ((n as u64) << 32) | ((m as u64) << 16) | k as u64;
    seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn forbid(cfg: &RunConfig, suite: &str, keys: &[&str]) -> Result<(), CliError> {
    for k in keys {
        if cfg.str(k).is_some() {
            return Err(CliError::Config(format!("key '{k}' does not apply to suite {suite}")));
        }
    }
    Ok(())
}

fn range_or(v: Option<usize>, lo: usize, hi: usize) -> Vec<usize> {
    match v {
        Some(x) => vec![x],
        None => (lo..=hi).collect(),
    }
}

/// Expands omitted dimensions into the desk sweep for `suite`.
fn cases(cfg: &RunConfig, suite: &str, seed: u64) -> Result<Vec<Case>, CliError> {
    let n: Option<usize> = cfg.opt("n")?;
    let m: Option<usize> = cfg.opt("m")?;
    let k: Option<usize> = cfg.opt("k")?;
    let mk = |n: usize, m: Option<usize>, k: Option<usize>| Case {
        n,
        m,
        k,
        seed: case_seed(seed, n, m.unwrap_or(0), k.unwrap_or(0)),
    };
    let mut out = Vec::new();
    match suite {
        "prop21" | "prop22" => {
            forbid(cfg, suite, &["m", "k"])?;
            for n in range_or(n, 2, DESK_N) {
                out.push(mk(n, None, None));
            }
        }
        "prop23" | "prop24" | "prop25" | "prop27" => {
            forbid(cfg, suite, &["m"])?;
            for n in range_or(n, 2, DESK_N) {
                let (lo, hi) = match suite {
                    "prop24" => (2, n),
                    "prop25" => (1, n - 1),
                    "prop27" => (2, n - 1),
                    _ => (1, n),
                };
                match k {
                    Some(k) if n_given(cfg) || (lo..=hi).contains(&k) => out.push(mk(n, None, Some(k))),
                    Some(_) => {}
                    None => out.extend((lo..=hi).map(|k| mk(n, None, Some(k)))),
                }
            }
        }
        "prop26" => {
            for n in range_or(n, 3, DESK_N) {
                let ms = match m {
                    Some(m) => vec![m],
                    None => (2..n).collect(),
                };
                for m in ms {
                    let kmax = prop26_k_max(n, m);
                    match k {
                        Some(k) if (n_given(cfg) && m_given(cfg)) || (2..=kmax).contains(&k) => {
                            out.push(mk(n, Some(m), Some(k)))
                        }
                        Some(_) => {}
                        // an explicit (n, m) with an empty k range is reported by the sampler
                        None if kmax < 2 && n_given(cfg) && m_given(cfg) => out.push(mk(n, Some(m), Some(2))),
                        None => out.extend((2..=kmax).map(|k| mk(n, Some(m), Some(k)))),
                    }
                }
            }
        }
        "spectral-lift" => {
            forbid(cfg, suite, &["k"])?;
            for n in range_or(n, 3, DESK_N) {
                let ms = match m {
                    Some(m) => vec![m],
                    None => (2..n).collect(),
                };
                out.extend(ms.into_iter().map(|m| mk(n, Some(m), None)));
            }
        }
        "euler" | "jacobian" => match (n, m, k) {
            (None, None, None) => {
                out.extend([(3, 2, 2), (4, 2, 2), (4, 2, 3)].map(|(n, m, k)| mk(n, Some(m), Some(k))));
            }
            (Some(n), Some(m), Some(k)) => out.push(mk(n, Some(m), Some(k))),
            _ => return Err(CliError::Config(format!("suite {suite} needs all of n, m, k or none of them"))),
        },
        other => {
            return Err(CliError::Config(format!("unknown suite '{other}'; expected one of {}", SUITES.join(", "))))
        }
    }
    if out.is_empty() {
        return Err(CliError::Config(format!("no (n, m, k) in the sweep satisfies the hypotheses of {suite}")));
    }
    Ok(out)
}

fn n_given(cfg: &RunConfig) -> bool {
    cfg.str("n").is_some()
}

fn m_given(cfg: &RunConfig) -> bool {
    cfg.str("m").is_some()
}

fn run_case(suite: &str, c: &Case, trials: usize) -> mhess::Result<SampleReport> {
    let (n, m, k) = (c.n, c.m.unwrap_or(0), c.k.unwrap_or(0));
    match suite {
        "prop21" => run_prop21(n, trials, c.seed),
        "prop22" => run_prop22(n, trials, c.seed),
        "prop23" => run_prop23(n, k, trials, c.seed),
        "prop24" => run_prop24(n, k, trials, c.seed),
        "prop25" => run_prop25(n, k, trials, c.seed),
        "prop26" => {
            if m >= 2 && m < n && prop26_k_max(n, m) < 2 {
                return Err(mhess::Error::Config(format!(
                    "no k satisfies 2 <= k <= (n-m)/n*C(n,m) = {} for n = {n}, m = {m}",
                    prop26_k_max(n, m)
                )));
            }
            run_prop26(ConeSpec::new(n, m, k)?, trials, c.seed)
        }
        "prop27" => run_prop27(n, k, trials, c.seed),
        "spectral-lift" => run_spectral_lift(n, m, trials, c.seed),
        "euler" => run_euler(ConeSpec::new(n, m, k)?, trials, c.seed),
        "jacobian" => run_jacobian(ConeSpec::new(n, m, k)?, trials, c.seed),
        _ => unreachable!("suite validated"),
    }
}

fn label(c: &Case) -> String {
    let mut s = format!("n={}", c.n);
    if let Some(m) = c.m {
        s.push_str(&format!(" m={m}"));
    }
    if let Some(k) = c.k {
        s.push_str(&format!(" k={k}"));
    }
    s
}

pub fn run(cfg: &RunConfig, out: &Output, seed: u64) -> Result<i32, CliError> {
    cfg.check_keys("verify", KEYS)?;
    let suite: String = cfg.require("suite")?;
    let cases = cases(cfg, &suite, seed)?;
    let default_trials = match suite.as_str() {
        "spectral-lift" => 1000,
        "euler" | "jacobian" => 10,
        _ => 10_000,
    };
    let trials: usize = cfg.get_or("trials", default_trials)?;

    let mut reports = Vec::with_capacity(cases.len());
    for c in &cases {
        let report = run_case(&suite, c, trials)?;
        println!(
            "{suite} {}: {} checked, {} violations, worst margin {}",
            label(c),
            report.hypothesis_hits,
            report.violations,
            report.worst_margin
        );
        reports.push(CaseReport { label: label(c), case: *c, report });
    }
    let violations: usize = reports.iter().map(|r| r.report.violations).sum();
    let checked: usize = reports.iter().map(|r| r.report.hypothesis_hits).sum();
    let worst = reports.iter().map(|r| r.report.worst_margin).fold(f64::INFINITY, f64::min);

    let header: Vec<String> =
        ["case", "inequality", "checked", "violations", "worst_margin"].map(String::from).to_vec();
    let mut rows = Vec::new();
    for r in &reports {
        for (name, st) in &r.report.per_inequality {
            rows.push(vec![
                r.label.clone(),
                name.clone(),
                st.checked.to_string(),
                st.violations.to_string(),
                num(st.worst_margin),
            ]);
        }
    }
    out.data("report", &reports, &header, &rows)?;

    let (status, code) = if violations == 0 { ("passed", EXIT_OK) } else { ("violations", EXIT_FAILED) };
    let mut body = Map::new();
    body.insert("suite".into(), Value::from(suite.clone()));
    body.insert("trials".into(), Value::from(trials));
    body.insert("totals".into(), json!({ "cases": reports.len(), "checked": checked, "violations": violations, "worst_margin": worst }));
    body.insert("cases".into(), serde_json::to_value(&reports).expect("reports"));
    out.manifest(status, code, body)?;
    println!("{suite}: {status} ({} cases, {checked} checked, {violations} violations)", reports.len());
    Ok(code)
}
