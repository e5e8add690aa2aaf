use bilinear_lab::dynamics::{cubic_profile, quartic_profile, LinearModel, LinearizedSystem};
use bilinear_lab::moment::{
    biorthogonal_family, build_spectrum, check_ks_profile, cost_law, gramian_oracle, moment_control_ch,
    moment_control_ks, MomentSolver, PrecisionPolicy, M_FLOOR,
};
use bilinear_lab::{Error, FourierField};
use num_complex::Complex64;

const K: usize = 32;
const GRID: usize = 128;

fn ch_v0() -> FourierField {
    FourierField::from_cos_sin(K, GRID, &[(0, 1.0, 0.0), (1, 0.5, 0.0), (2, 0.0, 0.3)])
}

#[test]
fn ch_family_is_biorthogonal() {
    let spec = build_spectrum(LinearModel::ChLin, 1.0, 10).unwrap();
    let fam = biorthogonal_family(&spec.lambdas, 0.5, &PrecisionPolicy::default()).unwrap();
    assert!(fam.defect < 1e-8);
    assert_eq!(fam.norms.len(), 10);
}

#[test]
fn two_mode_family_matches_inverse_gram() {
    let lam = [Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)];
    let fam = biorthogonal_family(&lam, 1.0, &PrecisionPolicy::default()).unwrap();
    let g = |a: f64| (1.0 - (-a).exp()) / a;
    let det = g(2.0) * g(4.0) - g(3.0) * g(3.0);
    assert!((fam.coeffs[0][0].re - g(4.0) / det).abs() < 1e-12 * (g(4.0) / det));
    assert!((fam.coeffs[0][1].re + g(3.0) / det).abs() < 1e-12 * (g(3.0) / det));
}

#[test]
fn ch_null_control_and_oracle() {
    let (mu4, mu5) = (quartic_profile(K, GRID), cubic_profile(K, GRID));
    let policy = PrecisionPolicy::default();
    let mc = moment_control_ch(&ch_v0(), 1.0, &mu4, &mu5, 0.5, 8, &policy).unwrap();
    assert!(mc.residual < 1e-3);
    let sys = LinearizedSystem::new(LinearModel::ChLin, 1.0, vec![mu4, mu5]).unwrap();
    let g = gramian_oracle(&sys, &ch_v0(), 0.5, 8, &policy).unwrap();
    assert!(g.solve_residual < 1e-10);
    assert!(g.total_norm <= mc.total_norm);
}

#[test]
fn ks_null_control_is_real() {
    let mu4 = quartic_profile(K, GRID);
    let v0 = FourierField::from_cos_sin(K, GRID, &[(1, 0.1, 0.05)]);
    let mc = moment_control_ks(&v0, 1.0, &mu4, 0.5, 5, &PrecisionPolicy::default()).unwrap();
    assert!(mc.residual < 1e-6);
    assert!(mc.max_imag < 1e-10 * mc.total_norm.max(1.0));
    assert!(check_ks_profile(&mu4, K, 2.0).is_ok());
}

#[test]
fn ks_even_count_is_rejected() {
    let mu4 = quartic_profile(K, GRID);
    assert!(MomentSolver::new_ks(1.0, &mu4, 0.5, 6, 2.0, &PrecisionPolicy::default()).is_err());
}

#[test]
fn constant_profile_violates_ks_hypothesis() {
    let flat = FourierField::constant(1.0, K, GRID);
    assert!(matches!(check_ks_profile(&flat, K, 2.0), Err(Error::HypothesisViolated(_))));
}

#[test]
fn cost_grows_as_horizon_shrinks() {
    let (mu4, mu5) = (quartic_profile(K, GRID), cubic_profile(K, GRID));
    let pts: Vec<(f64, f64)> = [0.5, 0.35, 0.2]
        .iter()
        .map(|&t| (t, moment_control_ch(&ch_v0(), 1.0, &mu4, &mu5, t, 8, &PrecisionPolicy::default()).unwrap().total_norm))
        .collect();
    let law = cost_law(&pts);
    assert!(law.strictly_increasing);
    assert_eq!(law.slopes.len(), 2);
    assert!(law.m >= M_FLOOR);
}
