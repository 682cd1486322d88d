use std::sync::Arc;

use mhess::geometry::DomainGeometry;
use mhess::solver::{
    continuation_solve, evaluate, manufactured_problem, newton_solve, BoxCosine, ContinuationConfig, ExactSolution,
    Grid, GridField, LinearSolver, NewtonConfig, ProblemSpec, QuadraticBowl, RadialQuartic, Source,
};
use mhess::symfun::ConeSpec;
use mhess::Error;

fn cone(n: usize, m: usize, k: usize) -> ConeSpec {
    ConeSpec::new(n, m, k).unwrap()
}

fn quartic_radial(n: usize, m: usize, k: usize) -> ProblemSpec {
    manufactured_problem(Arc::new(RadialQuartic { c: 0.05 }), cone(n, m, k), DomainGeometry::radial(1.0).unwrap(), 1.0)
        .unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |e, (x, y)| e.max((x - y).abs()))
}

#[test]
fn newton_recovers_from_small_perturbation_quickly() {
    let problem = quartic_radial(3, 2, 2);
    let cfg = ContinuationConfig::default();
    let st = continuation_solve(&problem, &cfg).unwrap();
    let mut start = st.u.clone();
    for (v, x) in start.values.iter_mut().zip(&st.u.grid.coords) {
        *v += 1e-3 * (std::f64::consts::PI * x[0]).cos();
    }
    let (u, stats) = newton_solve(&start, &problem, 1.0, &cfg.newton).unwrap();
    assert!(stats.iterations <= 5, "{} iterations", stats.iterations);
    assert!(max_diff(&u.values, &st.u.values) < 1e-8);
}

#[test]
fn inadmissible_start_is_rejected() {
    let problem = quartic_radial(3, 2, 2);
    let grid = Arc::new(Grid::for_domain(&problem.geom, 3, 16).unwrap());
    let concave = GridField::from_fn(grid, |x| -0.5 * x.iter().map(|v| v * v).sum::<f64>());
    match newton_solve(&concave, &problem, 1.0, &NewtonConfig::default()) {
        Err(Error::Inadmissible { margin, .. }) => assert!(margin < 0.0),
        other => panic!("expected an inadmissibility error, got {other:?}"),
    }
}

#[test]
fn constant_path_takes_no_newton_iterations() {
    let bowl: Arc<dyn ExactSolution> = Arc::new(QuadraticBowl);
    for (geom, cells) in [(DomainGeometry::radial(1.0).unwrap(), 64), (DomainGeometry::cuboid(vec![1.0; 3]).unwrap(), 8)] {
        let problem = manufactured_problem(bowl.clone(), cone(3, 2, 2), geom, 2.5).unwrap();
        let st = continuation_solve(&problem, &ContinuationConfig { cells, ..Default::default() }).unwrap();
        assert_eq!(st.total_newton_iters, 0);
        assert!(st.final_residual <= 1e-12);
        assert!(st.c0.passed());
    }
}

#[test]
fn four_dimensional_pair_sums_with_k3_converge() {
    let problem = quartic_radial(4, 2, 3);
    let st = continuation_solve(&problem, &ContinuationConfig::default()).unwrap();
    let exact = RadialQuartic { c: 0.05 };
    let err = st.u.grid.coords.iter().zip(&st.u.values).fold(0.0f64, |e, (x, u)| e.max((u - exact.value(x)).abs()));
    assert!(err < 1e-3, "linf error {err}");
    assert!(st.min_margin > 0.0);
    assert!(st.c0.passed());
}

#[test]
fn sharp_source_bump_converges_inside_the_cone() {
    let geom = DomainGeometry::ball(vec![0.0; 3], 1.0).unwrap();
    let problem = ProblemSpec::with_fns(
        cone(3, 2, 2),
        |x| 12.0 + 40.0 * (-30.0 * x.iter().map(|v| v * v).sum::<f64>()).exp(),
        |_| 1.0,
        |_| 2.0,
        geom,
    )
    .unwrap();
    let st = continuation_solve(&problem, &ContinuationConfig::default()).unwrap();
    assert!(st.final_residual <= 1e-10);
    assert!(st.min_margin > 0.0);
    assert!(st.c0.passed(), "{:?}", st.c0);
    assert!(st.accepted_steps() > 1);
}

#[test]
fn state_dependent_source_converges() {
    let geom = DomainGeometry::radial(1.0).unwrap();
    let problem = ProblemSpec::new(
        cone(3, 2, 2),
        Source::XU { f: Arc::new(|_: &[f64], u: f64| 10.0 + (-u).exp()), df_du: Arc::new(|_: &[f64], u: f64| -(-u).exp()) },
        Arc::new(|_: &[f64]| 1.0),
        Arc::new(|x: &[f64]| 1.0 + x[0]),
        geom,
    )
    .unwrap();
    let st = continuation_solve(&problem, &ContinuationConfig::default()).unwrap();
    let ev = evaluate(&problem, &st.u, 1.0, false).unwrap();
    assert!(ev.norm_inf() <= 1e-10);
    assert!(ev.min_margin > 0.0);
}

#[test]
fn gmres_and_direct_agree_on_box() {
    let problem = manufactured_problem(
        Arc::new(BoxCosine { amp: 0.05 }),
        cone(3, 2, 2),
        DomainGeometry::cuboid(vec![1.0; 3]).unwrap(),
        1.0,
    )
    .unwrap();
    let run = |linear| {
        let cfg = ContinuationConfig { cells: 6, newton: NewtonConfig { linear, ..Default::default() }, ..Default::default() };
        continuation_solve(&problem, &cfg).unwrap()
    };
    let direct = run(LinearSolver::Direct);
    let krylov = run(LinearSolver::Gmres { restart: 60, tol: 1e-13, max_iter: 5000 });
    assert!(max_diff(&direct.u.values, &krylov.u.values) < 1e-8);
}

#[test]
fn mismatched_domain_dimension_is_a_config_error() {
    let geom = DomainGeometry::ball(vec![0.0; 4], 1.0).unwrap();
    let err = ProblemSpec::with_fns(cone(3, 2, 2), |_| 1.0, |_| 1.0, |_| 1.0, geom).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}
