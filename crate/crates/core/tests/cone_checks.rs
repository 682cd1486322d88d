use mhess::cones::{check_prop23, check_prop24, check_prop25, sample_cone, SampleMode};
use mhess::symfun::{binomial, elementary_sym, sym_deleted, Spectrum};
use mhess::verify::brute_force_sym;
use proptest::prelude::*;

fn scale_of(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(1.0, f64::max)
}

#[test]
fn checks_are_invariant_under_positive_scaling() {
    for n in 2..=6 {
        for k in 1..=n {
            let (pts, _) = sample_cone(SampleMode::GammaK { n, k }, 200, 17 * n as u64 + k as u64).unwrap();
            for p in &pts {
                let v = p.values.as_slice();
                for c in [0.5, 2.0, 10.0] {
                    let scaled = p.values.scaled(c);
                    let s = elementary_sym(&p.values, k).unwrap();
                    let sc = elementary_sym(&scaled, k).unwrap();
                    let bound = 1e-12 * binomial(n, k) as f64 * (c * scale_of(v)).powi(k as i32);
                    assert!((sc - c.powi(k as i32) * s).abs() <= bound, "S_{k} homogeneity at {v:?}");
                    assert!(check_prop23(&scaled, None, k).passed());
                    if k >= 2 {
                        assert!(check_prop24(&scaled, k, 1 + (k - 1) / 2).passed());
                    }
                    if k < n {
                        if let Some(i) = v.iter().position(|x| *x < 0.0) {
                            assert!(check_prop25(&scaled, k, i).passed());
                        }
                    }
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn deleted_functions_match_subset_enumeration(v in prop::collection::vec(-2.0..2.0f64, 2..=5),
                                                  i in 0usize..5, j in 0usize..5) {
        let n = v.len();
        let (i, j) = (i % n, j % n);
        prop_assume!(i != j);
        let lambda = Spectrum::new(v.clone()).unwrap();
        for k in 0..=n {
            let scale = binomial(n, k) as f64 * scale_of(&v).powi(k as i32);
            let mut one = v.clone();
            one[i] = 0.0;
            let got = sym_deleted(&lambda, k, &[i]).unwrap();
            prop_assert!((got - brute_force_sym(&one, k)).abs() <= 1e-12 * scale);
            let mut two = one.clone();
            two[j] = 0.0;
            let got = sym_deleted(&lambda, k, &[i, j]).unwrap();
            prop_assert!((got - brute_force_sym(&two, k)).abs() <= 1e-12 * scale);
        }
    }
}
