//! Sampled identity and consistency suites. Each returns a [`SampleReport`]
//! whose margins are `tol - err`, so any negative margin is a violation.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cones::{CheckOutcome, Margin, SampleReport};
use crate::error::{Error, Result};
use crate::geometry::DomainGeometry;
use crate::solver::{evaluate, Grid, GridField, ProblemSpec};
use crate::symfun::{
    binomial, elementary_sym, matrix_sym, mixed_sym, newton_transform, sym_deleted, sym_prefix, ConeSpec, Spectrum,
    SymMatrix,
};
use crate::woperator::{admissible, build_table, build_w, f_ij, f_ij_adjoint, LiftOperator};

pub const IDENTITY_TOL: f64 = 1e-12;
pub const SPECTRAL_TOL: f64 = 1e-9;
pub const EULER_TOL: f64 = 1e-9;
pub const JACOBIAN_TOL: f64 = 1e-5;

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    SymMatrix::symmetrized(g.clone() + g.transpose()).expect("finite")
}

pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

/// Random `H` with `lambda(W(H))` in the cone: a perturbed identity, shrunk
/// towards `I` until admissible.
pub fn random_admissible(rng: &mut ChaCha8Rng, spec: &ConeSpec) -> Result<SymMatrix> {
    let n = spec.n;
    let p = random_symmetric(rng, n);
    let mut s: f64 = rng.random_range(0.2..1.5);
    for _ in 0..60 {
        let m = DMatrix::identity(n, n) + p.as_matrix() * s;
        let h = SymMatrix::symmetrized(m)?;
        if admissible(&h, spec)?.inside {
            return Ok(h);
        }
        s *= 0.7;
    }
    Ok(SymMatrix::identity(n))
}

fn abs_spectrum(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.abs()).collect()
}

fn rel(err: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

fn spectral_norm(a: &SymMatrix) -> Result<f64> {
    Ok(a.eigenvalues()?.as_slice().iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// Deleted-function identities for every `k` and `i`, plus the mixed decomposition
/// `S_k(A + B) = sum_i C(k, i) S_{k,i}(A, B)`. Errors are relative to
/// `S_k(|lambda|)` and to `C(n, k) (|A| + |B|)^k` respectively.
pub fn run_prop21(n: usize, samples: usize, seed: u64) -> Result<SampleReport> {
    if n == 0 || n > crate::symfun::MAX_DIM {
        return Err(Error::Config(format!("n = {n} outside 1..={}", crate::symfun::MAX_DIM)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = SampleReport::new("prop21");
    for _ in 0..samples {
        let v = gaussian_vec(&mut rng, n);
        let lam = Spectrum::new(v.clone())?;
        let s = sym_prefix(&v, n);
        let sa = sym_prefix(&abs_spectrum(&v), n);
        let mut margins = Vec::new();
        for k in 1..=n {
            let mut sum_lam = 0.0;
            let mut sum_del = 0.0;
            let mut worst = 0.0f64;
            for i in 0..n {
                let dk = sym_deleted(&lam, k, &[i])?;
                let dk1 = sym_deleted(&lam, k - 1, &[i])?;
                worst = worst.max(rel((s[k] - dk - v[i] * dk1).abs(), sa[k]));
                sum_lam += v[i] * dk1;
                sum_del += dk;
            }
            margins.push(Margin::identity("deleted split", worst, IDENTITY_TOL));
            margins.push(Margin::identity("weighted gradient sum", rel((sum_lam - k as f64 * s[k]).abs(), k as f64 * sa[k]), IDENTITY_TOL));
            let nk = (n - k) as f64;
            margins.push(Margin::identity("deleted sum", rel((sum_del - nk * s[k]).abs(), nk.max(1.0) * sa[k]), IDENTITY_TOL));
        }
        let a = random_symmetric(&mut rng, n);
        let b = random_symmetric(&mut rng, n);
        let ab = SymMatrix::symmetrized(a.as_matrix() + b.as_matrix())?;
        let norm = spectral_norm(&a)? + spectral_norm(&b)?;
        let mut worst = 0.0f64;
        for k in 1..=n {
            let lhs = matrix_sym(&ab, k)?;
            let mut rhs = 0.0;
            for i in 0..=k {
                rhs += binomial(k, i) as f64 * mixed_sym(&a, &b, k, i)?;
            }
            let scale = binomial(n, k) as f64 * norm.powi(k as i32);
            worst = worst.max(rel((lhs - rhs).abs(), scale));
        }
        margins.push(Margin::identity("mixed decomposition", worst, IDENTITY_TOL));
        rep.record(&v, &CheckOutcome::Checked(margins));
    }
    rep.notes.push(format!("n = {n}; all k in 1..={n}"));
    Ok(rep)
}

/// Gradient of `S_k` at diagonal matrices: `T_{k-1}(diag lambda)` has
/// diagonal `S_{k-1}(lambda|i)` and vanishing off-diagonal.
/// Deleted functions come from subset enumeration, so `n <= 20`.
pub fn run_prop22(n: usize, samples: usize, seed: u64) -> Result<SampleReport> {
    if n == 0 || n > 20 {
        return Err(Error::Config(format!("n = {n} outside 1..=20")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = SampleReport::new("prop22");
    for _ in 0..samples {
        let v = gaussian_vec(&mut rng, n);
        let w = SymMatrix::diagonal(&v);
        let sa = sym_prefix(&abs_spectrum(&v), n);
        let mut diag = 0.0f64;
        let mut off = 0.0f64;
        for k in 1..=n {
            let t = newton_transform(&w, k)?;
            for i in 0..n {
                let mut dropped = v.clone();
                dropped[i] = 0.0;
                diag = diag.max(rel((t.get(i, i) - brute_force_sym(&dropped, k - 1)).abs(), sa[k - 1]));
                for j in 0..n {
                    if i != j {
                        off = off.max(rel(t.get(i, j).abs(), sa[k - 1]));
                    }
                }
            }
        }
        rep.record(
            &v,
            &CheckOutcome::Checked(vec![
                Margin::identity("diagonal gradient", diag, IDENTITY_TOL),
                Margin::identity("off-diagonal gradient", off, IDENTITY_TOL),
            ]),
        );
    }
    rep.notes.push(format!("n = {n}; all k in 1..={n}"));
    Ok(rep)
}

/// Sorted `eig(W(H))` against sorted m-subset sums of `eig(H)`, absolute.
pub fn run_spectral_lift(n: usize, m: usize, samples: usize, seed: u64) -> Result<SampleReport> {
    let table = build_table(n, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = SampleReport::new("spectral-lift");
    for _ in 0..samples {
        let h = random_symmetric(&mut rng, n);
        let w = build_w(&h, &table)?;
        let mut lifted = w.data.eigenvalues()?.into_vec();
        let mut sums = table.subset_sums(h.eigenvalues()?.as_slice());
        lifted.sort_by(f64::total_cmp);
        sums.sort_by(f64::total_cmp);
        let err = lifted.iter().zip(&sums).fold(0.0f64, |e, (a, b)| e.max((a - b).abs()));
        let flat: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| h.get(i, j)).collect();
        rep.record(&flat, &CheckOutcome::Checked(vec![Margin::identity("spectral-lift", err, SPECTRAL_TOL)]));
    }
    rep.notes.push(format!("n = {n}, m = {m}, C(n,m) = {}", table.len()));
    Ok(rep)
}

/// `<F, H> = k S_k(W(H))` at random admissible `H`, plus agreement of the
/// eigenbasis and adjoint-lift evaluations of `F` and positivity of `F`.
pub fn run_euler(spec: ConeSpec, samples: usize, seed: u64) -> Result<SampleReport> {
    let lift = LiftOperator::new(build_table(spec.n, spec.m)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = SampleReport::new("euler");
    for _ in 0..samples {
        let h = random_admissible(&mut rng, &spec)?;
        let f = f_ij(&h, &spec)?;
        let fa = f_ij_adjoint(&h, &spec, &lift)?;
        let sk = crate::woperator::s_k_of_hessian(&h, &spec)?;
        let lhs = f.f.frobenius_dot(&h);
        let k = spec.k as f64;
        let fnorm = spectral_norm(&f.f)?;
        let diff = (f.f.as_matrix() - fa.f.as_matrix()).amax();
        let fmin = f.f.eigenvalues()?.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
        let flat: Vec<f64> = h.as_matrix().iter().copied().collect();
        rep.record(
            &flat,
            &CheckOutcome::Checked(vec![
                Margin::identity("euler", rel((lhs - k * sk).abs(), k * sk.abs()), EULER_TOL),
                Margin::identity("F eigenbasis vs adjoint", rel(diff, fnorm), EULER_TOL),
                Margin { label: "F positive definite".into(), value: fmin / fnorm.max(1.0), floor: f64::MIN_POSITIVE },
            ]),
        );
    }
    rep.notes.push(format!("n = {}, m = {}, k = {}", spec.n, spec.m, spec.k));
    Ok(rep)
}

fn random_state(rng: &mut ChaCha8Rng, grid: Arc<Grid>, spec: &ConeSpec, problem: &ProblemSpec) -> Result<GridField> {
    let n = grid.dim;
    for _ in 0..50 {
        let amp: f64 = rng.random_range(0.01..0.08);
        let freq: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let field = GridField::from_fn(grid.clone(), |x| {
            let arg: f64 = x.iter().zip(&freq).map(|(a, b)| a * b).sum::<f64>() + phase;
            0.5 * x.iter().map(|v| v * v).sum::<f64>() + amp * arg.sin()
        });
        if evaluate(problem, &field, 1.0, false)?.min_margin > 0.0 {
            return Ok(field);
        }
    }
    Err(Error::Numeric(format!("no admissible random state found for {spec:?}")))
}

/// Assembled Jacobian matvecs against central differences of the residual,
/// on a radial mesh and a box lattice, at random admissible states.
pub fn run_jacobian(spec: ConeSpec, states: usize, seed: u64) -> Result<SampleReport> {
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = SampleReport::new("jacobian");
    let cases = [
        (DomainGeometry::radial(1.0)?, 16usize),
        (DomainGeometry::cuboid(vec![1.0; n])?, if n <= 3 { 6 } else { 4 }),
    ];
    for (geom, cells) in cases {
        let label = if matches!(geom.kind, crate::geometry::DomainKind::Radial { .. }) { "radial" } else { "box" };
        let problem = ProblemSpec::new(
            spec,
            crate::solver::Source::XU {
                f: Arc::new(|x: &[f64], u: f64| 2.0 + x[0].cos() + (-u).exp()),
                df_du: Arc::new(|_: &[f64], u: f64| -(-u).exp()),
            },
            Arc::new(|x: &[f64]| 1.0 + 0.5 * x[0] * x[0]),
            Arc::new(|x: &[f64]| x.iter().sum::<f64>()),
            geom.clone(),
        )?;
        let grid = Arc::new(Grid::for_domain(&geom, n, cells)?);
        for _ in 0..states {
            let u = random_state(&mut rng, grid.clone(), &spec, &problem)?;
            let t: f64 = rng.random_range(0.0..1.0);
            let ev = evaluate(&problem, &u, t, true)?;
            let jac = ev.jacobian.expect("requested");
            let dir = gaussian_vec(&mut rng, grid.len());
            let jv = jac.matvec(&dir);
            let eps = 1e-6;
            let shifted = |s: f64| -> Result<Vec<f64>> {
                let mut g = u.clone();
                for (v, d) in g.values.iter_mut().zip(&dir) {
                    *v += s * d;
                }
                Ok(evaluate(&problem, &g, t, false)?.residual)
            };
            let (rp, rm) = (shifted(eps)?, shifted(-eps)?);
            let mut err = 0.0f64;
            let mut scale = 0.0f64;
            for i in 0..jv.len() {
                let fd = (rp[i] - rm[i]) / (2.0 * eps);
                err = err.max((fd - jv[i]).abs());
                scale = scale.max(jv[i].abs());
            }
            rep.record(&[t], &CheckOutcome::Checked(vec![Margin::identity(label, rel(err, scale), JACOBIAN_TOL)]));
        }
    }
    rep.notes.push(format!("n = {}, m = {}, k = {}", spec.n, spec.m, spec.k));
    Ok(rep)
}

/// `S_k(lambda)` by explicit subset enumeration, for cross-checks.
pub fn brute_force_sym(values: &[f64], k: usize) -> f64 {
    let n = values.len();
    if k > n {
        return 0.0;
    }
    (0u32..(1u32 << n))
        .filter(|mask| mask.count_ones() as usize == k)
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).map(|i| values[i]).product::<f64>())
        .sum()
}

/// Checks `elementary_sym` against [`brute_force_sym`] for one spectrum.
pub fn brute_force_gap(lambda: &Spectrum) -> Result<f64> {
    let v = lambda.as_slice();
    let sa = sym_prefix(&abs_spectrum(v), v.len());
    let mut worst = 0.0f64;
    for k in 0..=v.len() {
        worst = worst.max(rel((elementary_sym(lambda, k)? - brute_force_sym(v, k)).abs(), sa[k]));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        for n in 1..=5 {
            assert!(run_prop21(n, 50, 1).unwrap().passed());
            assert!(run_prop22(n, 50, 2).unwrap().passed());
        }
        assert!(run_spectral_lift(4, 2, 50, 3).unwrap().passed());
        let spec = ConeSpec::new(4, 2, 3).unwrap();
        let r = run_euler(spec, 20, 4).unwrap();
        assert!(r.passed(), "{r:?}");
        let r = run_jacobian(ConeSpec::new(3, 2, 2).unwrap(), 2, 5).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn brute_force_oracle() {
        assert_eq!(brute_force_sym(&[1.0, 2.0, 3.0], 2), 11.0);
        assert_eq!(brute_force_sym(&[1.0, 2.0, 3.0], 0), 1.0);
        let l = Spectrum::new(vec![0.3, -1.2, 2.0, 0.7, -0.1]).unwrap();
        assert!(brute_force_gap(&l).unwrap() < 1e-14);
    }

    #[test]
    fn reports_are_seed_deterministic() {
        let a = run_prop21(4, 20, 9).unwrap();
        let b = run_prop21(4, 20, 9).unwrap();
        assert_eq!(a, b);
    }
}
