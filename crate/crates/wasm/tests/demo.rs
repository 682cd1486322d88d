use mhess_wasm::{barrier_profile_value, cone_report_value, radial_curve_value};

#[test]
fn cone_report_of_identity_and_saddle() {
    let r = cone_report_value("1 0 0\n0 1 0\n0 0 1", 2).unwrap();
    assert_eq!(r["largest_admissible_k"], 3);
    assert_eq!(r["lifted"], serde_json::json!([2.0, 2.0, 2.0]));
    let r = cone_report_value("1,0,0, 0,1,0, 0,0,-1", 2).unwrap();
    assert_eq!(r["largest_admissible_k"], 1);
    assert!(cone_report_value("1 2 3", 1).is_err());
    assert!(cone_report_value("1 0 0 1", 3).is_err());
}

#[test]
fn radial_curve_recovers_bowl_data() {
    // constant t = 0 data: the bowl |x|^2 / 2 solves every member of the path
    let r = radial_curve_value(3, 2, 2, "12", 1.0, "r + 0.5*r^2", 16).unwrap();
    assert_eq!(r["newton_iterations"], 0);
    let u = r["u"].as_array().unwrap();
    let rr = r["r"].as_array().unwrap();
    for (x, v) in rr.iter().zip(u) {
        let x = x.as_f64().unwrap();
        assert_eq!(v.as_f64().unwrap(), 0.5 * x * x);
    }
    assert_eq!(r["c0_passed"], true);
    assert!(radial_curve_value(3, 2, 2, "2 + x1", 1.0, "1", 16).is_err());
}

#[test]
fn barrier_profile_is_positive_on_the_collar() {
    let r = barrier_profile_value(4, 2, 53, 0, 2, 4.0, 0.1, 0.05, 64).unwrap();
    assert_eq!(r["passed"], true);
    assert_eq!(r["depth"].as_array().unwrap().len(), 64);
    assert!(barrier_profile_value(4, 2, 54, 0, 2, 2.0, 0.1, 0.0, 4).is_err());
}
