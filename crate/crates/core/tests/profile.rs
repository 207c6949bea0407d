use proptest::prelude::*;
use radshock::model::{ModelSpec, Side};
use radshock::profile::{verify_profile, Profile, ProfileOptions};

#[test]
fn burgers_profile_meets_fidelity_targets() {
    let spec = ModelSpec::burgers_linear(0.2);
    let p = Profile::build(&spec).unwrap();
    let r = verify_profile(&p, &spec);
    assert!(r.max_residual < 1e-8, "residual {}", r.max_residual);
    assert_eq!(r.monotonicity_violations, 0);
    assert!(r.u0_error < 1e-8);
    assert!(r.eta_rel_error() < 0.05, "eta error {}", r.eta_rel_error());
    assert!(!p.subshock());
}

#[test]
fn cubic_m_profile_is_smooth_and_monotone() {
    let spec = ModelSpec::burgers_cubic_m(0.05);
    let p = Profile::build(&spec).unwrap();
    let r = verify_profile(&p, &spec);
    assert!(r.max_residual < 1e-8);
    assert_eq!(r.monotonicity_violations, 0);
    assert!(r.eta_rel_error() < 0.05);
}

#[test]
fn refinement_changes_nodes_at_second_order_or_better() {
    let spec = ModelSpec::burgers_linear(0.2);
    let coarse = Profile::build_with(&spec, &ProfileOptions { h: 2e-3, ..Default::default() }).unwrap();
    let fine = Profile::build(&spec).unwrap();
    let diff = (0..coarse.len())
        .map(|i| (coarse.u()[i] - fine.eval_u(coarse.x(i)).0).abs())
        .fold(0.0, f64::max);
    assert!(diff < 1e-8, "max node change {diff}");
}

#[test]
fn strong_shock_has_subshock() {
    let spec = ModelSpec::burgers_linear(0.9);
    let p = Profile::build(&spec).unwrap();
    assert!(p.subshock());
}

#[test]
fn tails_approach_end_states() {
    let spec = ModelSpec::burgers_linear(0.2);
    let p = Profile::build(&spec).unwrap();
    let far = p.x_infinity(1e-12);
    assert!((p.eval_u(-far).0 - 0.2).abs() < 1e-11);
    assert!((p.eval_u(far).0 + 0.2).abs() < 1e-11);
    assert!(p.eta(Side::Minus) > 0.0 && p.eta(Side::Plus) > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn weak_profiles_are_monotone_with_small_residual(eps in 0.05f64..0.3) {
        let spec = ModelSpec::burgers_linear(eps);
        let p = Profile::build(&spec).unwrap();
        let r = verify_profile(&p, &spec);
        prop_assert_eq!(r.monotonicity_violations, 0);
        prop_assert!(r.max_residual < 1e-7, "residual {}", r.max_residual);
        prop_assert!(p.du().iter().all(|&d| d <= 0.0));
    }

    #[test]
    fn odd_symmetric_presets_give_odd_profiles(eps in 0.05f64..0.3, x in 0.0f64..20.0) {
        let p = Profile::build(&ModelSpec::burgers_linear(eps)).unwrap();
        prop_assert!((p.eval_u(x).0 + p.eval_u(-x).0).abs() < 1e-9);
    }
}
