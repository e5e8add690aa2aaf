use bilinear_lab::dynamics::{
    flow, integrate, stability_probe, Concatenation, ControlLaw, ControlSchedule, FlowConfig, Model, ProfileSet,
    Scheme,
};
use bilinear_lab::{Error, FourierField};
use proptest::prelude::*;
use std::sync::Arc;

const K: usize = 16;
const GRID: usize = 64;

fn tight() -> FlowConfig {
    FlowConfig::default().with_tolerance(1e-12, 1e-14)
}

fn bump() -> FourierField {
    FourierField::from_cos_sin(K, GRID, &[(0, 1.0, 0.0), (1, 0.3, -0.1), (3, 0.0, 0.05)])
}

#[test]
fn spectral_round_trip_and_derivative() {
    let f = FourierField::from_fn(K, GRID, |x| (x.sin()).exp());
    let g = FourierField::from_grid_values(&f.grid_values(), K, GRID).unwrap();
    assert!((&f - &g).l2_norm() < 1e-13);
    let s = FourierField::from_cos_sin(K, GRID, &[(2, 0.0, 1.0)]);
    let d = s.derivative(1);
    assert!((d.cos_sin(2).0 - 2.0).abs() < 1e-14);
    assert!(d.cos_sin(2).1.abs() < 1e-14);
}

#[test]
fn zero_control_conserves_mean() {
    let law = ControlSchedule::zero(3, 1.0).unwrap();
    let p = ProfileSet::low_modes(K, GRID);
    for model in [Model::Ks, Model::Ch] {
        let (u, _) = flow(&bump(), &law, &p, model, 1.0, &tight()).unwrap();
        assert!((u.mean() - 1.0).abs() < 1e-10, "{model:?} mean {}", u.mean());
    }
}

#[test]
fn concatenation_matches_split_runs() {
    let p = ProfileSet::low_modes(K, GRID);
    let a = ControlSchedule::constant(vec![0.5, -0.2, 0.1], 0.2).unwrap();
    let b = ControlSchedule::constant(vec![-0.3, 0.4, 0.0], 0.15).unwrap();
    let both = Concatenation::new().then(Arc::new(a.clone())).then(Arc::new(b.clone()));
    assert!((both.duration() - 0.35).abs() < 1e-15);
    for model in [Model::Ks, Model::Ch] {
        let whole = integrate(&bump(), &both, &p, model, 0.35, &tight()).unwrap().final_state;
        let mid = integrate(&bump(), &a, &p, model, 0.2, &tight()).unwrap().final_state;
        let end = integrate(&mid, &b, &p, model, 0.15, &tight()).unwrap().final_state;
        assert!((&whole - &end).l2_norm() < 1e-8 * whole.l2_norm());
    }
}

#[test]
fn midpoint_scheme_agrees_with_default() {
    let p = ProfileSet::low_modes(K, GRID);
    let law = ControlSchedule::constant(vec![0.2, 0.0, 0.1], 0.1).unwrap();
    let mut mid = tight();
    mid.scheme = Scheme::Midpoint;
    mid.rtol = 1e-8;
    let (a, _) = flow(&bump(), &law, &p, Model::Ch, 0.1, &tight()).unwrap();
    let (b, _) = flow(&bump(), &law, &p, Model::Ch, 0.1, &mid).unwrap();
    assert!((&a - &b).l2_norm() < 1e-5);
}

#[test]
fn blowup_is_flagged_not_raised_by_integrate() {
    let p = ProfileSet::low_modes(K, GRID);
    let law = ControlSchedule::constant(vec![60.0, 0.0, 0.0], 1.0).unwrap();
    let cfg = FlowConfig { guard: 1e3, ..FlowConfig::default() };
    let rep = integrate(&bump(), &law, &p, Model::Ks, 1.0, &cfg).unwrap();
    assert!(rep.blowup_flag && rep.t_end < 1.0);
    assert!(matches!(flow(&bump(), &law, &p, Model::Ks, 1.0, &cfg), Err(Error::BlowupDetected { .. })));
}

#[test]
fn stability_ratio_settles_under_halving() {
    let p = ProfileSet::low_modes(K, GRID);
    let law = ControlSchedule::constant(vec![0.1, 0.2, -0.1], 0.4).unwrap();
    let dir = FourierField::from_cos_sin(K, GRID, &[(2, 1.0, 0.0)]);
    let r: Vec<f64> = (0..3)
        .map(|j| {
            let eps = 1e-2 / 2f64.powi(j);
            stability_probe(&bump(), &bump().axpy(eps, &dir), &law, &p, Model::Ks, 0.4, &tight()).unwrap()
        })
        .collect();
    assert!((r[2] - r[1]).abs() < (r[1] - r[0]).abs() + 1e-9);
    assert!(r.iter().all(|x| x.is_finite() && *x < 10.0));
}

#[test]
fn horizon_beyond_schedule_is_rejected() {
    let p = ProfileSet::low_modes(K, GRID);
    let law = ControlSchedule::constant(vec![0.1, 0.0, 0.0], 0.1).unwrap();
    assert!(matches!(integrate(&bump(), &law, &p, Model::Ch, 0.5, &tight()), Err(Error::ConfigError(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_schedules_compose(
        v1 in proptest::collection::vec(-1.5f64..1.5, 3),
        v2 in proptest::collection::vec(-1.5f64..1.5, 3),
        d1 in 0.02f64..0.2,
        d2 in 0.02f64..0.2,
        ks in any::<bool>(),
    ) {
        let model = if ks { Model::Ks } else { Model::Ch };
        let p = ProfileSet::low_modes(K, GRID);
        let a = ControlSchedule::constant(v1, d1).unwrap();
        let b = ControlSchedule::constant(v2, d2).unwrap();
        let ab = a.concatenate(&b);
        let whole = integrate(&bump(), &ab, &p, model, d1 + d2, &tight()).unwrap().final_state;
        let mid = integrate(&bump(), &a, &p, model, d1, &tight()).unwrap().final_state;
        let end = integrate(&mid, &b, &p, model, d2, &tight()).unwrap().final_state;
        prop_assert!((&whole - &end).l2_norm() < 1e-8 * whole.l2_norm());
    }

    #[test]
    fn product_is_commutative(a in proptest::collection::vec(-1.0f64..1.0, 4), b in proptest::collection::vec(-1.0f64..1.0, 4)) {
        let f = FourierField::from_cos_sin(K, GRID, &[(0, a[0], 0.0), (1, a[1], a[2]), (2, a[3], 0.0)]);
        let g = FourierField::from_cos_sin(K, GRID, &[(0, b[0], 0.0), (1, b[1], 0.0), (3, b[2], b[3])]);
        prop_assert!((&f.product(&g) - &g.product(&f)).l2_norm() < 1e-14);
    }
}
