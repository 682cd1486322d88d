//! Domain geometry near the boundary: distance, normal, principal curvatures,
//! the quadratic distance barrier `h = -d + K3 d^2`, and numeric checks of the
//! barrier bounds `F^{ij} h_ij >= c (1 + tr F)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cones::Margin;
use crate::error::{Error, Result};
use crate::symfun::{binomial, cone_margin, sym_prefix, ConeMembership, ConeSpec, Spectrum, SymMatrix};
use crate::woperator::{point_eval, MultiIndexTable};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DomainKind {
    Ball { center: Vec<f64>, radius: f64 },
    /// Axis-aligned box `[-w_i, w_i]` centred at the origin.
    Box { half_widths: Vec<f64> },
    /// Ball of the given radius centred at the origin, any dimension.
    Radial { radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainGeometry {
    pub kind: DomainKind,
    /// Collar width in which the distance function is smooth.
    pub mu0: f64,
}

/// Distance to the boundary with its first and second derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct DistancePack {
    pub d: f64,
    pub grad: Vec<f64>,
    pub hess: SymMatrix,
    /// False in the box edge zone, where `d` has a kink.
    pub smooth: bool,
}

/// Outward normal and principal curvatures at the nearest boundary point.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub nu: Vec<f64>,
    pub kappa: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl DomainGeometry {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || center.is_empty() {
            return Err(Error::Argument("ball needs a positive radius and a centre".into()));
        }
        Ok(DomainGeometry { kind: DomainKind::Ball { center, radius }, mu0: radius / 2.0 })
    }

    pub fn radial(radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Argument("radius must be positive".into()));
        }
        Ok(DomainGeometry { kind: DomainKind::Radial { radius }, mu0: radius / 2.0 })
    }

    pub fn cuboid(half_widths: Vec<f64>) -> Result<Self> {
        if half_widths.is_empty() || half_widths.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Argument("box half-widths must be positive".into()));
        }
        let mu0 = half_widths.iter().copied().fold(f64::INFINITY, f64::min) / 2.0;
        Ok(DomainGeometry { kind: DomainKind::Box { half_widths }, mu0 })
    }

    pub fn with_collar(mut self, mu0: f64) -> Self {
        self.mu0 = mu0;
        self
    }

    /// Fixed dimension, if the geometry has one.
    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            DomainKind::Ball { center, .. } => Some(center.len()),
            DomainKind::Box { half_widths } => Some(half_widths.len()),
            DomainKind::Radial { .. } => None,
        }
    }

    pub fn diameter(&self) -> f64 {
        match &self.kind {
            DomainKind::Ball { radius, .. } | DomainKind::Radial { radius } => 2.0 * radius,
            DomainKind::Box { half_widths } => 2.0 * norm(half_widths),
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if let Some(n) = self.dim() {
            if x.len() != n {
                return Err(Error::Argument(format!("point has dimension {}, domain has {n}", x.len())));
            }
        }
        Ok(())
    }

    fn ball_parts(&self, x: &[f64]) -> Option<(Vec<f64>, f64)> {
        match &self.kind {
            DomainKind::Ball { center, radius } => {
                Some((x.iter().zip(center).map(|(a, c)| a - c).collect(), *radius))
            }
            DomainKind::Radial { radius } => Some((x.to_vec(), *radius)),
            DomainKind::Box { .. } => None,
        }
    }

    /// Distance to the boundary, positive inside.
    pub fn distance(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(match &self.kind {
            DomainKind::Box { half_widths } => face_distances(x, half_widths)[0].0,
            _ => {
                let (rel, r) = self.ball_parts(x).expect("round domain");
                r - norm(&rel)
            }
        })
    }

    pub fn boundary_data(&self, x: &[f64]) -> Result<BoundaryData> {
        self.check_point(x)?;
        let n = x.len();
        match &self.kind {
            DomainKind::Box { half_widths } => {
                let (_, axis, sign) = face_distances(x, half_widths)[0];
                let mut nu = vec![0.0; n];
                nu[axis] = sign;
                Ok(BoundaryData { nu, kappa: vec![0.0; n - 1] })
            }
            _ => {
                let (rel, r) = self.ball_parts(x).expect("round domain");
                let len = norm(&rel);
                if len == 0.0 {
                    return Err(Error::Argument("normal undefined at the centre".into()));
                }
                Ok(BoundaryData { nu: rel.iter().map(|v| v / len).collect(), kappa: vec![1.0 / r; n - 1] })
            }
        }
    }
}

/// Face distances `(distance, axis, outward sign)` sorted ascending.
fn face_distances(x: &[f64], half_widths: &[f64]) -> Vec<(f64, usize, f64)> {
    let mut f: Vec<(f64, usize, f64)> = x
        .iter()
        .zip(half_widths)
        .enumerate()
        .flat_map(|(i, (&xi, &w))| [(w - xi, i, 1.0), (w + xi, i, -1.0)])
        .collect();
    f.sort_by(|a, b| a.0.total_cmp(&b.0));
    f
}

pub fn distance_pack(geom: &DomainGeometry, x: &[f64]) -> Result<DistancePack> {
    geom.check_point(x)?;
    let n = x.len();
    let d = geom.distance(x)?;
    if !(d >= 0.0 && d < geom.mu0) {
        return Err(Error::Collar { d, width: geom.mu0 });
    }
    match &geom.kind {
        DomainKind::Box { half_widths } => {
            let faces = face_distances(x, half_widths);
            let (_, axis, sign) = faces[0];
            let mut grad = vec![0.0; n];
            grad[axis] = -sign;
            let smooth = faces.len() < 2 || faces[1].0 >= geom.mu0;
            Ok(DistancePack { d, grad, hess: SymMatrix::zeros(n), smooth })
        }
        _ => {
            let (rel, _) = geom.ball_parts(x).expect("round domain");
            let r = norm(&rel);
            let nu: Vec<f64> = rel.iter().map(|v| v / r).collect();
            let mut h = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    h[(i, j)] = -(delta - nu[i] * nu[j]) / r;
                }
            }
            Ok(DistancePack { d, grad: nu.iter().map(|v| -v).collect(), hess: SymMatrix::symmetrized(h)?, smooth: true })
        }
    }
}

/// `K3` (large) and `k3` (small) of the barrier bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BarrierParams {
    pub big_k3: f64,
    pub small_k3: f64,
}

impl BarrierParams {
    pub fn new(big_k3: f64, small_k3: f64) -> Result<Self> {
        if !(big_k3 > 0.0 && small_k3 > 0.0) {
            return Err(Error::Argument("barrier constants must be positive".into()));
        }
        Ok(BarrierParams { big_k3, small_k3 })
    }

    /// `min{1 / (4 K3), mu0}`.
    pub fn collar(&self, geom: &DomainGeometry) -> f64 {
        (0.25 / self.big_k3).min(geom.mu0)
    }
}

pub fn barrier_value(geom: &DomainGeometry, params: &BarrierParams, x: &[f64]) -> Result<f64> {
    let d = geom.distance(x)?;
    Ok(-d + params.big_k3 * d * d)
}

/// `D^2 h = (2 K3 d - 1) D^2 d + 2 K3 Dd Dd^T`; in principal coordinates its
/// eigenvalues are `(1 - 2 K3 d) kappa_i / (1 - kappa_i d)` and `2 K3`.
pub fn barrier_hessian(geom: &DomainGeometry, params: &BarrierParams, x: &[f64]) -> Result<SymMatrix> {
    let width = params.collar(geom);
    let pack = distance_pack(geom, x)?;
    if pack.d >= width {
        return Err(Error::Collar { d: pack.d, width });
    }
    let n = x.len();
    let k3 = params.big_k3;
    let g = DVector::from_row_slice(&pack.grad);
    let m = pack.hess.as_matrix() * (2.0 * k3 * pack.d - 1.0) + (&g * g.transpose()) * (2.0 * k3);
    debug_assert_eq!(m.nrows(), n);
    SymMatrix::symmetrized(m)
}

/// Strict `(m, k0)`-convexity of a principal-curvature vector: its `m`-sums
/// lie in `Gamma_{k0}`.
pub fn mk0_convex_check(kappa: &Spectrum, m: usize, k0: usize) -> Result<ConeMembership> {
    let len = kappa.len();
    if m < 1 || m > len {
        return Err(Error::Argument(format!("m = {m} exceeds the curvature count {len}")));
    }
    let sums = MultiIndexTable::build(len, m).subset_sums(kappa.as_slice());
    if k0 < 1 || k0 > sums.len() {
        return Err(Error::Range { k: k0, max: sums.len() });
    }
    Ok(cone_margin(&sums, k0, 0.0))
}

/// Something that can report `D^2 u` at a point.
pub trait HessianField {
    fn hessian(&self, x: &[f64]) -> SymMatrix;
}

impl<F: Fn(&[f64]) -> SymMatrix> HessianField for F {
    fn hessian(&self, x: &[f64]) -> SymMatrix {
        self(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BarrierLemma {
    /// `F^{ij} h_ij >= K3^{1/2} (1 + tr F)` for `k <= C(n-1, m-1)`.
    Lemma53,
    /// `F^{ij} h_ij >= k3 (1 + tr F)` for `k = C(n-1, m-1) + k0`.
    Lemma55 { k0: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierReport {
    pub lemma: BarrierLemma,
    pub big_k3: f64,
    pub small_k3: f64,
    pub collar: f64,
    pub points: usize,
    pub checked: usize,
    pub skipped: Vec<(Vec<f64>, String)>,
    /// Smallest normalised margin of the operator bound.
    pub min_margin: f64,
    /// Smallest `F^{ij} h_ij / (1 + tr F)` over checked points.
    pub empirical_ratio: f64,
    /// Smallest normalised margin among the eigenvalue-sum bounds on `D^2 h`.
    pub h_min_margin: f64,
    pub worst_point: Option<Vec<f64>>,
    pub notes: Vec<String>,
}

impl BarrierReport {
    pub fn passed(&self) -> bool {
        self.checked > 0 && self.min_margin > 0.0 && self.h_min_margin >= crate::cones::MARGIN_FLOOR
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Deterministic low-discrepancy points with `0 < d < width`.
pub fn collar_points(geom: &DomainGeometry, n: usize, width: f64, count: usize) -> Result<Vec<Vec<f64>>> {
    if n + 1 > PRIMES.len() {
        return Err(Error::Argument(format!("dimension {n} too large for the Halton sampler")));
    }
    let mut out = Vec::with_capacity(count);
    let mut idx: u64 = 1;
    while out.len() < count {
        let h: Vec<f64> = (0..=n).map(|j| radical_inverse(idx, PRIMES[j])).collect();
        idx += 1;
        let depth = width * h[n];
        if depth <= 0.0 {
            continue;
        }
        match &geom.kind {
            DomainKind::Box { half_widths } => {
                // face from h[0], position on the face from the rest, away from edges
                let face = ((h[0] * (2 * n) as f64) as usize).min(2 * n - 1);
                let (axis, sign) = (face / 2, if face.is_multiple_of(2) { 1.0 } else { -1.0 });
                let mut x = vec![0.0; n];
                let mut ok = true;
                let mut slot = 1;
                for (j, xj) in x.iter_mut().enumerate() {
                    if j == axis {
                        *xj = sign * (half_widths[j] - depth);
                    } else {
                        let span = half_widths[j] - geom.mu0;
                        if span <= 0.0 {
                            ok = false;
                        }
                        *xj = span * (2.0 * h[slot] - 1.0);
                        slot += 1;
                    }
                }
                if ok {
                    out.push(x);
                }
            }
            _ => {
                let (center, radius) = match &geom.kind {
                    DomainKind::Ball { center, radius } => (center.clone(), *radius),
                    DomainKind::Radial { radius } => (vec![0.0; n], *radius),
                    DomainKind::Box { .. } => unreachable!(),
                };
                let dir: Vec<f64> = h[..n].iter().map(|v| 2.0 * v - 1.0).collect();
                let len = norm(&dir);
                if !(0.05..=1.0).contains(&len) {
                    continue;
                }
                out.push(center.iter().zip(&dir).map(|(c, v)| c + (radius - depth) * v / len).collect());
            }
        }
    }
    Ok(out)
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Numerically checks the barrier inequality at `points` (all inside the
/// collar `min{1/(4 K3), mu0}`), together with the lower bounds on the
/// `m`-sum spectrum of `D^2 h` that make `h` admissible.
pub fn verify_barrier_bound(
    u: &dyn HessianField,
    geom: &DomainGeometry,
    params: &BarrierParams,
    spec: &ConeSpec,
    points: &[Vec<f64>],
    which: BarrierLemma,
) -> Result<BarrierReport> {
    let (n, m, k) = (spec.n, spec.m, spec.k);
    let c1 = binomial(n - 1, m - 1) as usize;
    let mut notes = Vec::new();
    match which {
        BarrierLemma::Lemma53 => {
            if k > c1 {
                return Err(Error::Config(format!("lemma53 needs k <= C(n-1, m-1) = {c1}, got {k}")));
            }
        }
        BarrierLemma::Lemma55 { k0 } => {
            if k0 < 1 || k != c1 + k0 {
                return Err(Error::Config(format!("lemma55 needs k = C(n-1, m-1) + k0 = {}", c1 + k0)));
            }
            let kmax = binomial(n - 1, m) as usize;
            if k > kmax {
                notes.push(format!(
                    "k = {k} exceeds (n-m)/n*C(n,m) = {kmax}; checked on the full range k <= C(n,m)"
                ));
            }
        }
    }
    let table = MultiIndexTable::new(n, m)?;
    let kappa_table = MultiIndexTable::build(n - 1, m.min(n - 1));
    let k3 = params.big_k3;
    let width = params.collar(geom);
    let mut rep = BarrierReport {
        lemma: which,
        big_k3: k3,
        small_k3: params.small_k3,
        collar: width,
        points: points.len(),
        checked: 0,
        skipped: Vec::new(),
        min_margin: f64::INFINITY,
        empirical_ratio: f64::INFINITY,
        h_min_margin: f64::INFINITY,
        worst_point: None,
        notes,
    };
    for x in points {
        let pack = distance_pack(geom, x)?;
        if !pack.smooth {
            rep.skipped.push((x.clone(), "box edge zone".into()));
            continue;
        }
        let hu = u.hessian(x);
        let ev = point_eval(&hu, spec, &table)?;
        if !ev.admissible {
            rep.skipped.push((x.clone(), format!("u not admissible (margin {:e})", ev.margin)));
            continue;
        }
        let dh = barrier_hessian(geom, params, x)?;
        let lhs: f64 = ev.f.iter().zip(dh.as_matrix().transpose().iter()).map(|(a, b)| a * b).sum();
        let one_plus = 1.0 + ev.trace;
        let bound = match which {
            BarrierLemma::Lemma53 => k3.sqrt() * one_plus,
            BarrierLemma::Lemma55 { .. } => params.small_k3 * one_plus,
        };
        let margin = (lhs - bound) / lhs.abs().max(bound.abs()).max(1.0);
        rep.empirical_ratio = rep.empirical_ratio.min(lhs / one_plus);
        if margin < rep.min_margin {
            rep.min_margin = margin;
            rep.worst_point = Some(x.clone());
        }

        let lambda = sorted_desc(table.subset_sums(dh.eigenvalues()?.as_slice()));
        let s = sym_prefix(&lambda, k);
        let mut hm: Vec<Margin> = Vec::new();
        match which {
            BarrierLemma::Lemma53 => {
                hm.push(margin_of("lambda_k >= K3", lambda[k - 1], k3));
                for (l, sl) in s.iter().enumerate().skip(1) {
                    hm.push(margin_of("S_l >= K3^l / 2", *sl, k3.powi(l as i32) / 2.0));
                }
            }
            BarrierLemma::Lemma55 { k0 } => {
                let bd = geom.boundary_data(x)?;
                let ksums = kappa_table.subset_sums(&bd.kappa);
                let b0 = sym_prefix(&ksums, k0.min(ksums.len()))[k0.min(ksums.len())];
                for (l, sl) in s.iter().enumerate().skip(1) {
                    if l <= c1 {
                        hm.push(margin_of("S_l >= K3^l", *sl, k3.powi(l as i32)));
                    } else {
                        let l0 = l - c1;
                        let rhs = b0.max(0.0).powf(l0 as f64 / k0 as f64) * (0.75 * k3).powi(c1 as i32);
                        hm.push(margin_of("S_l >= b0^(l0/k0) (3K3/4)^C", *sl, rhs));
                    }
                }
            }
        }
        hm.push(margin_of("h admissible", cone_margin(&lambda, k, 0.0).margin, 0.0));
        for mg in hm {
            rep.h_min_margin = rep.h_min_margin.min(mg.value);
        }
        rep.checked += 1;
    }
    Ok(rep)
}

fn margin_of(label: &str, lhs: f64, rhs: f64) -> Margin {
    let scale = 1f64.max(lhs.abs()).max(rhs.abs());
    Margin { label: label.into(), value: (lhs - rhs) / scale, floor: crate::cones::MARGIN_FLOOR }
}

/// Smallest power of two `K3` for which the chosen bound holds at every
/// collar sample point, starting from `initial_guess`.
pub fn search_big_k3(
    u: &dyn HessianField,
    geom: &DomainGeometry,
    spec: &ConeSpec,
    small_k3: f64,
    which: BarrierLemma,
    samples: usize,
    initial_guess: f64,
) -> Result<BarrierReport> {
    let n = spec.n;
    let run = |exp: i32| -> Result<BarrierReport> {
        let params = BarrierParams::new(2f64.powi(exp), small_k3)?;
        let pts = collar_points(geom, n, params.collar(geom), samples)?;
        verify_barrier_bound(u, geom, &params, spec, &pts, which)
    };
    let mut exp = initial_guess.max(1e-6).log2().ceil() as i32;
    let mut rep = run(exp)?;
    if rep.passed() {
        while exp > -20 {
            let lower = run(exp - 1)?;
            if !lower.passed() {
                break;
            }
            exp -= 1;
            rep = lower;
        }
        Ok(rep)
    } else {
        while exp < 60 {
            exp += 1;
            rep = run(exp)?;
            if rep.passed() {
                return Ok(rep);
            }
        }
        Err(Error::Numeric("no power of two up to 2^60 satisfies the barrier bound".into()))
    }
}

/// Initial `K3` for the `K3^{1/2}` bound: `(4 n max f^{1/k} / (k min f))^2`.
pub fn lemma53_initial_k3(n: usize, k: usize, f_min: f64, f_max: f64) -> f64 {
    (4.0 * n as f64 * f_max.powf(1.0 / k as f64) / (k as f64 * f_min)).powi(2)
}

/// Maximum-principle diagnostics of a discrete solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C0Report {
    pub sup_u: f64,
    /// `sup b / inf a` over the boundary.
    pub bound: f64,
    pub bound_margin: f64,
    pub tolerance: f64,
    pub max_on_boundary: bool,
    pub argmax: usize,
}

impl C0Report {
    pub fn passed(&self) -> bool {
        self.bound_margin >= -self.tolerance && self.max_on_boundary
    }
}

/// `values` over all nodes; `boundary` lists `(node, a, b)` for boundary nodes.
pub fn c0_diagnostic(values: &[f64], boundary: &[(usize, f64, f64)], tolerance: f64) -> Result<C0Report> {
    if values.is_empty() || boundary.is_empty() {
        return Err(Error::Argument("need node values and boundary data".into()));
    }
    let (argmax, sup_u) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let sup_b = boundary.iter().map(|b| b.2).fold(f64::NEG_INFINITY, f64::max);
    let inf_a = boundary.iter().map(|b| b.1).fold(f64::INFINITY, f64::min);
    if !(inf_a > 0.0) {
        return Err(Error::Validation("inf a must be positive on the boundary".into()));
    }
    let bound = sup_b / inf_a;
    let boundary_max = boundary.iter().map(|b| values[b.0]).fold(f64::NEG_INFINITY, f64::max);
    Ok(C0Report {
        sup_u,
        bound,
        bound_margin: bound - sup_u,
        tolerance,
        max_on_boundary: boundary_max >= sup_u,
        argmax,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_distance_pack() {
        let g = DomainGeometry::ball(vec![0.0; 3], 1.0).unwrap();
        let p = distance_pack(&g, &[0.9, 0.0, 0.0]).unwrap();
        assert!((p.d - 0.1).abs() < 1e-15);
        let mut ev = p.hess.eigenvalues().unwrap().into_vec();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] + 1.0 / 0.9).abs() < 1e-12);
        assert!((ev[1] + 1.0 / 0.9).abs() < 1e-12);
        assert!(ev[2].abs() < 1e-12);
        let b = distance_pack(&g, &[0.0, 1.0, 0.0]).unwrap();
        let nu = g.boundary_data(&[0.0, 1.0, 0.0]).unwrap().nu;
        for (a, v) in b.grad.iter().zip(&nu) {
            assert!((a + v).abs() < 1e-15);
        }
        assert!(matches!(distance_pack(&g, &[0.1, 0.0, 0.0]), Err(Error::Collar { .. })));
    }

    #[test]
    fn box_distance_pack() {
        let g = DomainGeometry::cuboid(vec![1.0, 1.0, 1.0]).unwrap();
        let p = distance_pack(&g, &[0.0, 0.1, 0.8]).unwrap();
        assert!((p.d - 0.2).abs() < 1e-15);
        assert_eq!(p.hess, SymMatrix::zeros(3));
        assert!(p.smooth);
        assert_eq!(p.grad, vec![0.0, 0.0, -1.0]);
        let e = distance_pack(&g, &[0.0, 0.8, 0.8]).unwrap();
        assert!(!e.smooth);
    }

    #[test]
    fn barrier_hessian_at_boundary() {
        let g = DomainGeometry::ball(vec![0.0; 4], 1.0).unwrap();
        let p = BarrierParams::new(8.0, 0.01).unwrap();
        let h = barrier_hessian(&g, &p, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let mut ev = h.eigenvalues().unwrap().into_vec();
        ev.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip([1.0, 1.0, 1.0, 16.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let t = MultiIndexTable::new(4, 2).unwrap();
        let mut sums = t.subset_sums(&ev);
        sums.sort_by(f64::total_cmp);
        for (a, b) in sums.iter().zip([2.0, 2.0, 2.0, 17.0, 17.0, 17.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn barrier_tangential_zero_at_half() {
        // K3 d = 1/2 needs a collar reaching d = 1/(2 K3)
        let g = DomainGeometry::ball(vec![0.0; 3], 1.0).unwrap();
        let k3 = 2.0;
        let pack = distance_pack(&g, &[0.75, 0.0, 0.0]).unwrap();
        let grad = DVector::from_row_slice(&pack.grad);
        let m = pack.hess.as_matrix() * (2.0 * k3 * pack.d - 1.0) + (&grad * grad.transpose()) * (2.0 * k3);
        let mut ev: Vec<f64> = SymMatrix::symmetrized(m).unwrap().eigenvalues().unwrap().into_vec();
        ev.sort_by(f64::total_cmp);
        assert!(ev[0].abs() < 1e-12 && ev[1].abs() < 1e-12);
        assert!((ev[2] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn mk0_examples() {
        let ball = Spectrum::new(vec![0.5; 3]).unwrap();
        for m in 1..=3 {
            for k0 in 1..=binomial(3, m) as usize {
                assert!(mk0_convex_check(&ball, m, k0).unwrap().inside);
            }
        }
        let k = Spectrum::new(vec![1.0, 1.0, 1.0, -0.05]).unwrap();
        assert!(mk0_convex_check(&k, 2, 1).unwrap().inside);
        let bad = Spectrum::new(vec![1.0, 1.0, -10.0]).unwrap();
        assert!(!mk0_convex_check(&bad, 2, 1).unwrap().inside);
        assert!(mk0_convex_check(&bad, 4, 1).is_err());
    }

    #[test]
    fn collar_points_inside() {
        let g = DomainGeometry::ball(vec![0.0; 4], 1.0).unwrap();
        let pts = collar_points(&g, 4, 0.05, 300).unwrap();
        assert_eq!(pts.len(), 300);
        for p in &pts {
            let d = g.distance(p).unwrap();
            assert!(d > 0.0 && d < 0.05);
        }
        let b = DomainGeometry::cuboid(vec![1.0; 3]).unwrap();
        for p in collar_points(&b, 3, 0.05, 100).unwrap() {
            let pk = distance_pack(&b, &p).unwrap();
            assert!(pk.d < 0.05 && pk.smooth);
        }
    }

    #[test]
    fn c0_constant_solution() {
        // u = b / a solves u_nu = -a u + b with u_nu = 0
        let vals = vec![2.0; 5];
        let bd = vec![(0, 1.5, 3.0), (4, 1.5, 3.0)];
        let r = c0_diagnostic(&vals, &bd, 0.0).unwrap();
        assert!(r.passed());
        assert_eq!(r.bound_margin, 0.0);
        let r = c0_diagnostic(&[0.0, 1.0, 0.5], &[(0, 1.0, 3.0), (2, 1.0, 3.0)], 0.0).unwrap();
        assert!(!r.max_on_boundary && !r.passed());
    }

    #[test]
    fn lemma53_on_ball_identity_hessian() {
        let g = DomainGeometry::ball(vec![0.0; 3], 1.0).unwrap();
        let spec = ConeSpec::new(3, 2, 2).unwrap();
        let u = |_: &[f64]| SymMatrix::identity(3);
        let p = BarrierParams::new(64.0, 0.01).unwrap();
        let pts = collar_points(&g, 3, p.collar(&g), 200).unwrap();
        let r = verify_barrier_bound(&u, &g, &p, &spec, &pts, BarrierLemma::Lemma53).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.checked, 200);
    }
}
