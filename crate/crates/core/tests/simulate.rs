use radshock::model::ModelSpec;
use radshock::profile::Profile;
use radshock::simulate::{run, track_shock_location, EnergyOptions, Grid, InitialData, Scheme, SimError, SimOptions};

fn burgers() -> Profile {
    Profile::build(&ModelSpec::burgers_linear(0.2)).unwrap()
}

fn quick(initial: InitialData, amplitude: f64, t_final: f64) -> SimOptions {
    SimOptions { initial, amplitude, t_final, h: 0.04, ..Default::default() }
}

#[test]
fn unperturbed_profile_is_stationary_to_second_order() {
    let p = burgers();
    let drift = |h: f64| {
        let opts = SimOptions { amplitude: 0.0, t_final: 10.0, h, x_dom: Some(120.0), ..Default::default() };
        let r = run(&p, &opts).unwrap();
        assert!(r.max_conservation_defect < 1e-12, "defect {}", r.max_conservation_defect);
        assert!(r.max_elliptic_residual < 1e-10);
        r.samples.last().unwrap().linf
    };
    let (coarse, fine) = (drift(0.04), drift(0.02));
    assert!(coarse < 1e-5, "coarse drift {coarse}");
    let ratio = coarse / fine;
    assert!(ratio > 3.0, "ratio {ratio}");
}

#[test]
fn zero_perturbation_has_negligible_energy() {
    let p = burgers();
    let r = run(&p, &SimOptions { amplitude: 0.0, t_final: 8.0, x_dom: Some(120.0), ..Default::default() }).unwrap();
    for s in &r.samples {
        assert!(s.energy < 1e-11, "E = {} at t = {}", s.energy, s.t);
        assert!(s.alpha.abs() < 1e-8);
    }
}

#[test]
fn tracking_recovers_exact_shift_and_identity() {
    let p = burgers();
    let grid = Grid::new(60.0, 0.02);
    for shift in [0.0, 0.1, -0.37] {
        let u: Vec<f64> = grid.xs().iter().map(|&x| p.eval_u(x - shift).0).collect();
        let tr = track_shock_location(&u, &grid, &p, 0.0, 2.0).unwrap();
        assert!((tr.alpha - shift).abs() < 1e-8, "shift {shift}: {}", tr.alpha);
        assert!(tr.residual < 1e-7);
    }
}

#[test]
fn tracking_fails_at_bracket_edge() {
    let p = burgers();
    let grid = Grid::new(60.0, 0.02);
    let u: Vec<f64> = grid.xs().iter().map(|&x| p.eval_u(x - 5.0).0).collect();
    assert!(matches!(track_shock_location(&u, &grid, &p, 0.0, 1.0), Err(SimError::Tracking(_))));
}

#[test]
fn forward_backward_step_is_second_order() {
    let p = burgers();
    let scheme = Scheme::new(p.spec(), Grid::new(40.0, 0.05));
    let u0: Vec<f64> = scheme.grid.xs().iter().map(|&x| p.eval_u(x).0 + 1e-3 * (-(x - 3.0f64).powi(2) / 4.0).exp()).collect();
    let err = |dt: f64| {
        let u1 = scheme.step(&u0, dt, 0.45).unwrap();
        let u2 = scheme.step(&u1, -dt, 0.45).unwrap();
        u2.iter().zip(&u0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    let dt = scheme.max_dt(&u0, 0.45);
    let (e1, e2) = (err(dt), err(0.5 * dt));
    assert!(e1 < 10.0 * dt * dt, "e1 {e1} dt {dt}");
    assert!(e1 / e2 > 3.5, "ratio {}", e1 / e2);
}

#[test]
fn translation_mode_settles_to_seeded_shift() {
    let p = burgers();
    let amp = 1e-2;
    let r = run(&p, &quick(InitialData::Translation, amp, 40.0)).unwrap();
    let max_du = p.du().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let seeded = -amp * p.spec().jump().abs() / max_du;
    let last = r.samples.last().unwrap();
    assert!((last.alpha - seeded).abs() < 0.05 * seeded.abs(), "alpha {} seeded {seeded}", last.alpha);
    // Norms of the re-centred perturbation are second order in the amplitude.
    assert!(r.samples[0].linf < 0.05 * amp * p.spec().jump().abs());
    assert!(r.decay.linf_reduction < 0.5);
}

#[test]
fn gaussian_shift_estimators_converge() {
    let p = burgers();
    let opts = quick(InitialData::Gaussian { center: 0.0, width: 2.0 }, 1e-2, 150.0);
    let r = run(&p, &opts).unwrap();
    let last = r.samples.last().unwrap();
    assert!((last.alpha - last.alpha_mass).abs() < 1e-3, "{} vs {}", last.alpha, last.alpha_mass);
    assert!(r.decay.linf_reduction < 0.1);
    assert!(r.slaving.excess < 2.0, "slaving excess {}", r.slaving.excess);
    assert_eq!(r.energy.damping.violations, 0);
    let mass0 = r.samples[0].mass;
    assert!(r.samples.iter().all(|s| s.mass.is_finite() && (s.mass - mass0).abs() < 1e-6));
}

#[test]
fn large_perturbation_trips_guard() {
    let p = burgers();
    let err = run(&p, &quick(InitialData::Gaussian { center: 0.0, width: 2.0 }, 0.5, 20.0)).unwrap_err();
    assert!(matches!(err, SimError::Guard { t, .. } if t == 0.0), "{err:?}");
}

#[test]
fn short_run_is_rejected() {
    let p = burgers();
    let err = run(&p, &SimOptions { t_final: 2.0, ..Default::default() }).unwrap_err();
    assert!(matches!(err, SimError::Config(_)));
}

#[test]
fn unresolved_energy_order_is_degraded() {
    let p = burgers();
    let opts = SimOptions {
        h: 0.5,
        t_final: 8.0,
        x_dom: Some(40.0),
        energy: EnergyOptions { k: 3, ..Default::default() },
        ..Default::default()
    };
    let r = run(&p, &opts).unwrap();
    assert_eq!(r.energy.k, 1);
    assert_eq!(r.energy.warnings.len(), 1);
}

#[test]
fn runs_are_deterministic() {
    let p = burgers();
    let opts = SimOptions {
        initial: InitialData::Random { count: 3, spread: 5.0, width: 1.0 },
        t_final: 8.0,
        h: 0.04,
        seed: 7,
        ..Default::default()
    };
    let a = run(&p, &opts).unwrap();
    let b = run(&p, &opts).unwrap();
    assert_eq!(a, b);
}

mod properties {
    use proptest::prelude::*;
    use radshock::model::ModelSpec;
    use radshock::simulate::{Grid, Scheme};

    proptest! {
        #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

        #[test]
        fn steps_conserve_mass_up_to_boundary_flux(
            bumps in prop::collection::vec((-8.0f64..8.0, -0.05f64..0.05), 1..5),
            cfl in 0.05f64..0.45,
        ) {
            let spec = ModelSpec::burgers_linear(0.2);
            let scheme = Scheme::new(&spec, Grid::new(12.0, 0.05));
            let mut u: Vec<f64> = scheme
                .grid
                .xs()
                .iter()
                .map(|&x| -0.2 * (x / 2.0).tanh() + bumps.iter().map(|&(c, a)| a * (-(x - c) * (x - c)).exp()).sum::<f64>())
                .collect();
            for _ in 0..5 {
                let dt = scheme.max_dt(&u, cfl);
                let m0: f64 = u.iter().sum::<f64>() * scheme.grid.h;
                let (next, outflow) = scheme.step_with_outflow(&u, dt, cfl).unwrap();
                let m1: f64 = next.iter().sum::<f64>() * scheme.grid.h;
                prop_assert!((m1 - m0 + outflow).abs() < 1e-12);
                u = next;
            }
        }
    }
}
