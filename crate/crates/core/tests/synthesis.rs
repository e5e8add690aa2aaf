use bilinear_lab::dynamics::Model;
use bilinear_lab::synthesis::{
    compile, conjugated_limit_probe, decompose, phase_tree, reach_exponential, steer_same_sign, steer_with_hold,
    Stage, SynthConfig,
};
use bilinear_lab::{Error, FourierField};
use proptest::prelude::*;

const K: usize = 32;
const GRID: usize = 128;

#[test]
fn hold_plan_has_exact_horizon() {
    let cfg = SynthConfig::new(Model::Ch, K, GRID);
    let u1 = FourierField::constant(0.5, K, GRID);
    let plan = steer_with_hold(&FourierField::constant(2.0, K, GRID), &u1, 5e-2, 0.5, &cfg).unwrap();
    assert_eq!(plan.duration, 0.5);
    assert!((&plan.terminal - &u1).sobolev_norm(1.0) < 5e-2);
    assert!(plan.stages.iter().any(|s| matches!(s, Stage::Hold { .. })));
}

#[test]
fn sign_changing_target_is_rejected() {
    let cfg = SynthConfig::new(Model::Ks, K, GRID);
    let u0 = FourierField::constant(1.0, K, GRID);
    let u1 = FourierField::from_cos_sin(K, GRID, &[(0, 0.1, 0.0), (1, 1.0, 0.0)]);
    assert!(matches!(steer_with_hold(&u0, &u1, 0.1, 0.5, &cfg), Err(Error::SignMismatch(_))));
}

#[test]
fn same_sign_steering_reaches_tolerance() {
    let cfg = SynthConfig::new(Model::Ks, K, GRID);
    let u0 = FourierField::from_cos_sin(K, GRID, &[(0, 1.0, 0.0), (1, 0.0, 0.3)]);
    let u1 = FourierField::from_cos_sin(K, GRID, &[(0, 1.5, 0.0), (1, -0.2, 0.0)]);
    let plan = steer_same_sign(&u0, &u1, &[], 0.1, 0.5, &cfg).unwrap();
    assert!(plan.tolerance_met());
    assert!(plan.duration <= 0.5);
    let replay = compile(&plan.stages).unwrap();
    assert_eq!(replay.segments.len(), plan.segment_count());
}

#[test]
fn generator_tree_reaches_scaled_state() {
    let cfg = SynthConfig::new(Model::Ch, K, GRID);
    let phi = FourierField::from_cos_sin(K, GRID, &[(0, 0.2, 0.0), (1, 0.1, -0.1)]);
    let tree = phase_tree(&phi, 2).unwrap();
    let plan = reach_exponential(&FourierField::constant(1.0, K, GRID), &tree, 1e-4, 1.0, &cfg).unwrap();
    assert!(plan.achieved_error < 1e-4);
}

#[test]
fn probe_errors_decrease() {
    let mut cfg = SynthConfig::new(Model::Ch, K, GRID);
    cfg.s = 1.0;
    let u0 = FourierField::from_cos_sin(K, GRID, &[(0, 1.0, 0.0), (1, 0.1, 0.0)]);
    let phi = FourierField::from_cos_sin(K, GRID, &[(0, 1.2, 0.0), (1, 0.0, 0.2)]);
    let r = conjugated_limit_probe(&u0, &phi, [0.3, 0.0, 0.0], &[1e-2, 5e-3, 2.5e-3], &cfg).unwrap();
    assert!(r.monotone);
    assert_eq!(r.rows.len(), 3);
}

#[test]
fn probe_needs_index_above_half() {
    let cfg = SynthConfig::new(Model::Ch, K, GRID);
    let f = FourierField::constant(1.0, K, GRID);
    let res = conjugated_limit_probe(&f, &f, [0.0; 3], &[1e-2], &SynthConfig { s: 0.5, ..cfg });
    assert!(matches!(res, Err(Error::ConfigError(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decomposition_weights_are_nonnegative(
        a2 in -0.1f64..0.1, b2 in -0.1f64..0.1, a3 in -0.05f64..0.05, b3 in -0.05f64..0.05,
    ) {
        let phi = FourierField::from_cos_sin(K, GRID, &[(0, 0.3, 0.0), (2, a2, b2), (3, a3, b3)]);
        let d = decompose(&phi, 3).unwrap();
        prop_assert!(d.terms.iter().all(|t| t.weight >= 0.0));
        prop_assert!((&d.evaluate(K, GRID) - &phi).l2_norm() < 1e-12);
    }
}
