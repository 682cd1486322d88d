//! Executable forms of the symmetric-function inequalities on Garding cones,
//! their explicit constants, and hypothesis-driven samplers.
//!
//! Every `check_*` function evaluates one point. When the point does not meet
//! the hypotheses it returns [`CheckOutcome::Skipped`]; otherwise it returns a
//! list of margins `lhs - rhs`, each normalised by `max(1, |lhs|, |rhs|)`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::symfun::{binomial, cone_margin, sym_deleted_unchecked, sym_gradient, sym_prefix, ConeSpec, Spectrum};
use crate::woperator::MultiIndexTable;

/// Inequality margins below this are violations.
pub const MARGIN_FLOOR: f64 = -1e-12;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Explicit constants of the two gradient bounds on `Gamma_k^(m)` and of the
/// deleted-function bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityConstants {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub delta1: f64,
    pub c0: f64,
}

impl InequalityConstants {
    pub fn new(n: usize, m: usize, k: usize, delta: f64, epsilon: f64) -> Self {
        let c = binomial(n, m) as usize;
        let delta1 = delta.powi(k as i32) / (factorial(c) * 4f64.powi(k as i32));
        let theta1 = delta1.powi(k as i32 - 1);
        let theta2 = delta.powi(k as i32 - 1)
            / (2f64.powi(k as i32) * (m as f64).powi(k as i32 - 1) * (c as f64).powi(3));
        InequalityConstants { n, m, k, delta, epsilon, theta1, theta2, delta1, c0: c0(n, delta, epsilon) }
    }

    /// The `delta^(k-1)` variant of `delta1` that also appears in the argument.
    pub fn delta1_alt(&self) -> f64 {
        let c = binomial(self.n, self.m) as usize;
        self.delta.powi(self.k as i32 - 1) / (factorial(c) * 4f64.powi(self.k as i32))
    }
}

/// `c0 = min{ eps^2 delta^2 / (2 (n-2)(n-1)), eps^2 delta / (4 (n-1)) }`.
pub fn c0(n: usize, delta: f64, epsilon: f64) -> f64 {
    let nf = n as f64;
    let second = epsilon * epsilon * delta / (4.0 * (nf - 1.0));
    if n <= 2 {
        return second;
    }
    let first = epsilon * epsilon * delta * delta / (2.0 * (nf - 2.0) * (nf - 1.0));
    first.min(second)
}

/// Upper end of the admissible `k` range for the `Gamma_k^(m)` gradient
/// bounds: `(n - m)/n * C(n, m) = C(n - 1, m)`.
pub fn prop26_k_max(n: usize, m: usize) -> usize {
    binomial(n - 1, m) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Margin {
    pub label: String,
    pub value: f64,
    /// Values below `floor` are violations.
    pub floor: f64,
}

impl Margin {
    fn ineq(label: &str, lhs: f64, rhs: f64) -> Self {
        let scale = 1f64.max(lhs.abs()).max(rhs.abs());
        Margin { label: label.to_string(), value: (lhs - rhs) / scale, floor: MARGIN_FLOOR }
    }

    /// Identity check: `value = tol - err`, violated when negative.
    pub fn identity(label: &str, err: f64, tol: f64) -> Self {
        Margin { label: label.to_string(), value: tol - err, floor: 0.0 }
    }

    pub fn violated(&self) -> bool {
        !(self.value >= self.floor)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CheckOutcome {
    Skipped(String),
    Checked(Vec<Margin>),
}

impl CheckOutcome {
    pub fn margins(&self) -> &[Margin] {
        match self {
            CheckOutcome::Skipped(_) => &[],
            CheckOutcome::Checked(m) => m,
        }
    }

    pub fn passed(&self) -> bool {
        self.margins().iter().all(|m| !m.violated())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct InequalityStats {
    pub checked: usize,
    pub violations: usize,
    pub worst_margin: f64,
}

/// Aggregate of a sampled verification run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleReport {
    pub name: String,
    pub trials: usize,
    pub hypothesis_hits: usize,
    pub violations: usize,
    pub worst_margin: f64,
    pub witness: Option<Vec<f64>>,
    pub per_inequality: BTreeMap<String, InequalityStats>,
    pub notes: Vec<String>,
}

impl SampleReport {
    pub fn new(name: &str) -> Self {
        SampleReport {
            name: name.to_string(),
            trials: 0,
            hypothesis_hits: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
            witness: None,
            per_inequality: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn record(&mut self, point: &[f64], outcome: &CheckOutcome) {
        self.trials += 1;
        let CheckOutcome::Checked(margins) = outcome else {
            return;
        };
        self.hypothesis_hits += 1;
        let mut bad = false;
        for m in margins {
            let stats = self.per_inequality.entry(m.label.clone()).or_insert(InequalityStats {
                checked: 0,
                violations: 0,
                worst_margin: f64::INFINITY,
            });
            stats.checked += 1;
            stats.worst_margin = stats.worst_margin.min(m.value);
            if m.violated() {
                stats.violations += 1;
                bad = true;
            }
            self.worst_margin = self.worst_margin.min(m.value);
        }
        if bad {
            self.violations += 1;
            if self.witness.is_none() {
                self.witness = Some(point.to_vec());
            }
        }
    }

    pub fn merge(&mut self, other: SampleReport) {
        self.trials += other.trials;
        self.hypothesis_hits += other.hypothesis_hits;
        self.violations += other.violations;
        self.worst_margin = self.worst_margin.min(other.worst_margin);
        if self.witness.is_none() {
            self.witness = other.witness;
        }
        for (k, v) in other.per_inequality {
            let e = self.per_inequality.entry(k).or_insert(InequalityStats {
                checked: 0,
                violations: 0,
                worst_margin: f64::INFINITY,
            });
            e.checked += v.checked;
            e.violations += v.violations;
            e.worst_margin = e.worst_margin.min(v.worst_margin);
        }
        self.notes.extend(other.notes);
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn in_gamma(values: &[f64], k: usize) -> bool {
    cone_margin(values, k, 0.0).inside
}

fn sorted_desc(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Ordering of deleted functions, positivity of the leading entries, the
/// `lambda_1 S_{k-1}(lambda|1)` lower bound, and midpoint concavity of
/// `S_k^{1/k}` along the segment to `partner`.
pub fn check_prop23(lambda: &Spectrum, partner: Option<&Spectrum>, k: usize) -> CheckOutcome {
    let n = lambda.len();
    if k < 1 || k > n {
        return CheckOutcome::Skipped(format!("k = {k} outside 1..={n}"));
    }
    let l = sorted_desc(lambda.as_slice());
    if !in_gamma(&l, k) {
        return CheckOutcome::Skipped("lambda not in Gamma_k".into());
    }
    let mut out = Vec::new();
    let del: Vec<f64> = (0..n).map(|i| sym_deleted_unchecked(&l, k - 1, &[i])).collect();
    for i in 0..n - 1 {
        out.push(Margin::ineq("deleted ordering", del[i + 1], del[i]));
    }
    out.push(Margin::ineq("deleted positivity", del[0], 0.0));
    out.push(Margin::ineq("lambda_k > 0", l[k - 1], 0.0));
    let s = sym_prefix(&l, k);
    out.push(Margin::ineq("leading-entry bound", l[0] * del[0], k as f64 / n as f64 * s[k]));
    if let Some(p) = partner {
        if p.len() == n && in_gamma(p.as_slice(), k) {
            let root = |v: &[f64]| sym_prefix(v, k)[k].max(0.0).powf(1.0 / k as f64);
            let mid: Vec<f64> = lambda.as_slice().iter().zip(p.as_slice()).map(|(a, b)| 0.5 * (a + b)).collect();
            out.push(Margin::ineq(
                "midpoint concavity",
                root(&mid),
                0.5 * (root(lambda.as_slice()) + root(p.as_slice())),
            ));
        }
    }
    CheckOutcome::Checked(out)
}

/// Newton-Maclaurin between degrees `k > l >= 1` and the gradient-sum bound
/// `sum_i d S_k^{1/k} / d lambda_i >= C(n, k)^{1/k}`.
pub fn check_prop24(lambda: &Spectrum, k: usize, l: usize) -> CheckOutcome {
    let n = lambda.len();
    if !(l >= 1 && k > l && k <= n) {
        return CheckOutcome::Skipped(format!("need n >= k > l >= 1, got k = {k}, l = {l}"));
    }
    let v = lambda.as_slice();
    if !in_gamma(v, k) {
        return CheckOutcome::Skipped("lambda not in Gamma_k".into());
    }
    let s = sym_prefix(v, k);
    let lhs = (s[k] / binomial(n, k) as f64).powf(1.0 / k as f64);
    let rhs = (s[l] / binomial(n, l) as f64).powf(1.0 / l as f64);
    let grad_sum: f64 = sym_gradient(v, k).iter().sum::<f64>() * s[k].powf(1.0 / k as f64 - 1.0) / k as f64;
    CheckOutcome::Checked(vec![
        Margin::ineq("Newton-Maclaurin", rhs, lhs),
        Margin::ineq("gradient-sum lower bound", grad_sum, (binomial(n, k) as f64).powf(1.0 / k as f64)),
    ])
}

/// Bounds at a negative entry `neg_index` of `lambda in Gamma_k`.
pub fn check_prop25(lambda: &Spectrum, k: usize, neg_index: usize) -> CheckOutcome {
    let n = lambda.len();
    let v = lambda.as_slice();
    if k < 1 || k > n || neg_index >= n {
        return CheckOutcome::Skipped("degree or index out of range".into());
    }
    if v[neg_index] >= 0.0 {
        return CheckOutcome::Skipped("designated entry is not negative".into());
    }
    if !in_gamma(v, k) {
        return CheckOutcome::Skipped("lambda not in Gamma_k".into());
    }
    let grad = sym_gradient(v, k);
    let total: f64 = grad.iter().sum();
    CheckOutcome::Checked(vec![
        Margin::ineq("gradient at negative entry", grad[neg_index], total / (n - k + 1) as f64),
        Margin::ineq("gradient sum vs negative entry", total, (-v[neg_index]).powi(k as i32 - 1)),
    ])
}

/// Gradient lower bounds for `mu in Gamma_k^(m)` with a strongly negative
/// entry. Returns a configuration error when `k` is outside
/// `2 <= k <= C(n - 1, m)`.
pub fn check_prop26(mu: &Spectrum, spec: &ConeSpec, delta: f64, scale_l: f64) -> Result<CheckOutcome> {
    let (n, m, k) = (spec.n, spec.m, spec.k);
    if mu.len() != n {
        return Err(Error::Argument(format!("mu has length {}, expected {n}", mu.len())));
    }
    let kmax = prop26_k_max(n, m);
    if kmax < 2 {
        return Err(Error::Config(format!(
            "no k satisfies 2 <= k <= (n-m)/n*C(n,m) = {kmax} for n = {n}, m = {m}"
        )));
    }
    if k < 2 || k > kmax {
        return Err(Error::Config(format!("k = {k} outside 2..={kmax} for n = {n}, m = {m}")));
    }
    if !(delta > 0.0 && scale_l > 0.0) {
        return Ok(CheckOutcome::Skipped("delta and L must be positive".into()));
    }
    let table = MultiIndexTable::build(n, m);
    let lambda = table.subset_sums(mu.as_slice());
    if !in_gamma(&lambda, k) {
        return Ok(CheckOutcome::Skipped("mu not in Gamma_k^(m)".into()));
    }
    let mu_min = mu.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
    if !(mu_min < -delta * scale_l) {
        return Ok(CheckOutcome::Skipped("mu_min >= -delta L".into()));
    }
    let consts = InequalityConstants::new(n, m, k, delta, 0.0);
    let grad = sym_gradient(&lambda, k);
    let total: f64 = grad.iter().sum();
    let mut out = vec![Margin::ineq("gradient sum, theta1", total, consts.theta1 * scale_l.powi(k as i32 - 1))];
    let lo = lambda.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= m as f64 * scale_l {
        let gmin = grad.iter().copied().fold(f64::INFINITY, f64::min);
        if lo >= -consts.delta1 * scale_l {
            out.push(Margin::ineq("min gradient, theta2", gmin, consts.theta2 * total));
        } else if lo >= -consts.delta1_alt() * scale_l {
            out.push(Margin::ineq("min gradient, theta2 (alternate delta1)", gmin, consts.theta2 * total));
        }
    }
    Ok(CheckOutcome::Checked(out))
}

/// `S_l(lambda|1) >= c0 S_l(lambda)` for `l = 0..k-1`, where entry 0 plays the
/// role of the distinguished positive entry.
pub fn check_prop27(lambda: &Spectrum, k: usize, delta: f64, epsilon: f64) -> CheckOutcome {
    let n = lambda.len();
    let v = lambda.as_slice();
    if k < 2 || k > n || n < 2 {
        return CheckOutcome::Skipped("need 2 <= k <= n".into());
    }
    if !(delta > 0.0 && epsilon > 0.0) {
        return CheckOutcome::Skipped("delta and epsilon must be positive".into());
    }
    if !in_gamma(v, k) {
        return CheckOutcome::Skipped("lambda not in Gamma_k".into());
    }
    if v[1..].windows(2).any(|w| w[0] < w[1]) {
        return CheckOutcome::Skipped("lambda_2..lambda_n not sorted".into());
    }
    let (l1, l2, ln) = (v[0], v[1], v[n - 1]);
    if !(l1 > 0.0 && l1 >= delta * l2 && ln <= -epsilon * l1) {
        return CheckOutcome::Skipped("hypotheses on lambda_1 not met".into());
    }
    let c = c0(n, delta, epsilon);
    let full = sym_prefix(v, k - 1);
    let out = (0..k)
        .map(|l| {
            let del = sym_deleted_unchecked(v, l, &[0]);
            Margin::ineq("deleted positive entry, c0", del, c * full[l])
        })
        .collect();
    CheckOutcome::Checked(out)
}

/// Which hypothesis set a sampler targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SampleMode {
    GammaK { n: usize, k: usize },
    GammaKM(ConeSpec),
    Prop26(ConeSpec),
    Prop27 { n: usize, k: usize },
}

impl SampleMode {
    fn name(&self) -> &'static str {
        match self {
            SampleMode::GammaK { .. } => "gamma_k",
            SampleMode::GammaKM(_) => "gamma_k_m",
            SampleMode::Prop26(_) => "prop26_hypotheses",
            SampleMode::Prop27 { .. } => "prop27_hypotheses",
        }
    }
}

/// One accepted sample with the auxiliary constants it was drawn for.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeSample {
    pub values: Spectrum,
    pub delta: f64,
    pub epsilon: f64,
    pub scale_l: f64,
}

/// Rejection sampler for the cone hypothesis sets.
pub struct ConeSampler {
    mode: SampleMode,
    rng: ChaCha8Rng,
    proposed: usize,
    accepted: usize,
}

const STARVATION_RATE: f64 = 1e-4;
const STARVATION_MIN_PROPOSALS: usize = 100_000;

impl ConeSampler {
    pub fn new(mode: SampleMode, seed: u64) -> Result<Self> {
        match mode {
            SampleMode::GammaK { n, k } | SampleMode::Prop27 { n, k } => {
                if n == 0 || k < 1 || k > n {
                    return Err(Error::Argument(format!("invalid (n, k) = ({n}, {k})")));
                }
            }
            SampleMode::Prop26(spec) => {
                let kmax = prop26_k_max(spec.n, spec.m);
                if kmax < 2 {
                    return Err(Error::Config(format!(
                        "no k satisfies 2 <= k <= (n-m)/n*C(n,m) = {kmax} for n = {}, m = {}",
                        spec.n, spec.m
                    )));
                }
                if spec.k < 2 || spec.k > kmax {
                    return Err(Error::Config(format!("k = {} outside 2..={kmax} for n = {}, m = {}", spec.k, spec.n, spec.m)));
                }
            }
            SampleMode::GammaKM(_) => {}
        }
        Ok(ConeSampler { mode, rng: ChaCha8Rng::seed_from_u64(seed), proposed: 0, accepted: 0 })
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            return 1.0;
        }
        self.accepted as f64 / self.proposed as f64
    }

    pub fn proposed(&self) -> usize {
        self.proposed
    }

    pub fn sample(&mut self, count: usize) -> Result<Vec<ConeSample>> {
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            self.proposed += 1;
            if let Some(s) = self.propose() {
                self.accepted += 1;
                out.push(s);
            } else if self.proposed >= STARVATION_MIN_PROPOSALS && self.acceptance_rate() < STARVATION_RATE {
                return Err(Error::SamplerStarved {
                    mode: self.mode.name().to_string(),
                    accepted: self.accepted,
                    proposed: self.proposed,
                });
            }
        }
        Ok(out)
    }

    fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    fn gaussian_vec(&mut self, n: usize, shift: f64, spread: f64) -> Vec<f64> {
        (0..n).map(|_| shift + spread * self.normal()).collect()
    }

    fn propose(&mut self) -> Option<ConeSample> {
        let plain = |values: Vec<f64>| ConeSample {
            values: Spectrum::new(values).expect("finite proposal"),
            delta: 0.0,
            epsilon: 0.0,
            scale_l: 0.0,
        };
        match self.mode {
            SampleMode::GammaK { n, k } => {
                let shift = 0.3 + 0.7 * k as f64 / n as f64;
                let spread = self.rng.random_range(0.3..1.5);
                let v = self.gaussian_vec(n, shift, spread);
                in_gamma(&v, k).then(|| plain(v))
            }
            SampleMode::GammaKM(spec) => {
                let c = spec.lifted_dim();
                let shift = 0.2 + 0.8 * spec.k as f64 / c as f64;
                let spread = self.rng.random_range(0.3..1.5);
                let v = self.gaussian_vec(spec.n, shift, spread);
                let table = MultiIndexTable::build(spec.n, spec.m);
                in_gamma(&table.subset_sums(&v), spec.k).then(|| plain(v))
            }
            SampleMode::Prop26(spec) => self.propose_prop26(spec),
            SampleMode::Prop27 { n, k } => self.propose_prop27(n, k),
        }
    }

    fn propose_prop26(&mut self, spec: ConeSpec) -> Option<ConeSample> {
        let (n, m, k) = (spec.n, spec.m, spec.k);
        let delta = self.rng.random_range(0.05..0.5);
        let table = MultiIndexTable::build(n, m);
        let mut mu;
        let scale_l;
        if self.rng.random_bool(0.5) {
            // near the boundary of the extra hypothesis: smallest m-sum in [-delta1 L, 0.2 L]
            scale_l = 1.0;
            let consts = InequalityConstants::new(n, m, k, delta, 0.0);
            let neg = -delta * scale_l * self.rng.random_range(1.0001..2.0);
            mu = (0..n - 1).map(|_| self.rng.random_range(0.0..1.0)).collect::<Vec<f64>>();
            mu.sort_by(|a, b| b.total_cmp(a));
            let smallest: f64 = mu[n - m..].iter().sum();
            let target = if self.rng.random_bool(0.5) {
                -consts.delta1 * scale_l * self.rng.random_range(0.0..1.0)
            } else {
                self.rng.random_range(0.0..0.2) * scale_l
            };
            let shift = (target - neg - smallest) / (m - 1) as f64;
            for x in mu.iter_mut() {
                *x += shift;
            }
            mu.push(neg);
        } else {
            mu = self.gaussian_vec(n - 1, 0.8, 0.6);
            let neg = -self.rng.random_range(0.05..1.5);
            mu.push(neg);
            let lmax = -neg / delta;
            scale_l = lmax * self.rng.random_range(0.9..0.999_999);
        }
        mu.sort_by(|a, b| b.total_cmp(a));
        let lambda = table.subset_sums(&mu);
        let mu_min = mu[n - 1];
        let ok = in_gamma(&lambda, k) && mu_min < -delta * scale_l;
        ok.then(|| ConeSample {
            values: Spectrum::new(mu).expect("finite proposal"),
            delta,
            epsilon: 0.0,
            scale_l,
        })
    }

    fn propose_prop27(&mut self, n: usize, k: usize) -> Option<ConeSample> {
        if n < 2 || k < 2 {
            return None;
        }
        let delta: f64 = self.rng.random_range(0.05..1.0);
        let epsilon = self.rng.random_range(0.01..0.5);
        let l1: f64 = self.rng.random_range(0.1..2.0);
        let mut rest: Vec<f64> = (0..n - 2)
            .map(|_| self.rng.random_range(0.0..(l1 / delta).min(3.0)))
            .collect();
        rest.push(-epsilon * l1 * self.rng.random_range(1.0..3.0));
        rest.sort_by(|a, b| b.total_cmp(a));
        let mut v = vec![l1];
        v.extend(rest);
        let (l2, ln) = (v[1], v[n - 1]);
        let ok = l1 >= delta * l2 && ln <= -epsilon * l1 && in_gamma(&v, k);
        ok.then(|| ConeSample { values: Spectrum::new(v).expect("finite proposal"), delta, epsilon, scale_l: 0.0 })
    }
}

/// Stream of samples for a mode; `count = 0` yields an empty vector.
pub fn sample_cone(mode: SampleMode, count: usize, seed: u64) -> Result<(Vec<ConeSample>, f64)> {
    let mut s = ConeSampler::new(mode, seed)?;
    let v = s.sample(count)?;
    Ok((v, s.acceptance_rate()))
}

pub fn run_prop23(n: usize, k: usize, samples: usize, seed: u64) -> Result<SampleReport> {
    let (pts, rate) = sample_cone(SampleMode::GammaK { n, k }, samples + 1, seed)?;
    let mut rep = SampleReport::new("prop23");
    for w in pts.windows(2) {
        rep.record(w[0].values.as_slice(), &check_prop23(&w[0].values, Some(&w[1].values), k));
    }
    rep.notes.push(format!("n = {n}, k = {k}, acceptance {rate:.4}"));
    Ok(rep)
}

pub fn run_prop24(n: usize, k: usize, samples: usize, seed: u64) -> Result<SampleReport> {
    let mut rep = SampleReport::new("prop24");
    if k < 2 {
        rep.notes.push("k < 2: no l with k > l >= 1".into());
        return Ok(rep);
    }
    let (pts, rate) = sample_cone(SampleMode::GammaK { n, k }, samples, seed)?;
    for (i, p) in pts.iter().enumerate() {
        let l = 1 + i % (k - 1);
        rep.record(p.values.as_slice(), &check_prop24(&p.values, k, l));
    }
    rep.notes.push(format!("n = {n}, k = {k}, acceptance {rate:.4}"));
    Ok(rep)
}

/// Samples until `samples` points with a negative entry have been checked
/// (at every negative entry). Vacuous for `k = n`.
pub fn run_prop25(n: usize, k: usize, samples: usize, seed: u64) -> Result<SampleReport> {
    let mut rep = SampleReport::new("prop25");
    if k == n {
        rep.notes.push("Gamma_n has no negative entries; nothing to check".into());
        return Ok(rep);
    }
    let mut sampler = ConeSampler::new(SampleMode::GammaK { n, k }, seed)?;
    while rep.hypothesis_hits < samples {
        for p in sampler.sample(256)? {
            let v = p.values.as_slice();
            let negs: Vec<usize> = (0..n).filter(|&i| v[i] < 0.0).collect();
            if negs.is_empty() {
                rep.record(v, &CheckOutcome::Skipped("no negative entry".into()));
                continue;
            }
            let mut margins = Vec::new();
            for i in negs {
                margins.extend(check_prop25(&p.values, k, i).margins().iter().cloned());
            }
            rep.record(v, &CheckOutcome::Checked(margins));
        }
    }
    rep.notes.push(format!("n = {n}, k = {k}, acceptance {:.4}", sampler.acceptance_rate()));
    Ok(rep)
}

pub fn run_prop26(spec: ConeSpec, samples: usize, seed: u64) -> Result<SampleReport> {
    let (pts, rate) = sample_cone(SampleMode::Prop26(spec), samples, seed)?;
    let mut rep = SampleReport::new("prop26");
    for p in &pts {
        rep.record(p.values.as_slice(), &check_prop26(&p.values, &spec, p.delta, p.scale_l)?);
    }
    let consts = InequalityConstants::new(spec.n, spec.m, spec.k, 0.5, 0.0);
    rep.notes.push(format!(
        "n = {}, m = {}, k = {}, acceptance {rate:.4}; delta1 from the exponent-k form, theta1(delta=0.5) = {:e}, theta2(delta=0.5) = {:e}",
        spec.n, spec.m, spec.k, consts.theta1, consts.theta2
    ));
    Ok(rep)
}

/// Needs `2 <= k <= n - 1`: `Gamma_n` has no negative entries.
pub fn run_prop27(n: usize, k: usize, samples: usize, seed: u64) -> Result<SampleReport> {
    if k < 2 || k + 1 > n {
        return Err(Error::Config(format!("prop27 needs 2 <= k <= n - 1, got n = {n}, k = {k}")));
    }
    let (pts, rate) = sample_cone(SampleMode::Prop27 { n, k }, samples, seed)?;
    let mut rep = SampleReport::new("prop27");
    for p in &pts {
        rep.record(p.values.as_slice(), &check_prop27(&p.values, k, p.delta, p.epsilon));
    }
    rep.notes.push(format!("n = {n}, k = {k}, acceptance {rate:.4}"));
    Ok(rep)
}
