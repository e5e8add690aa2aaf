//! Moment-series controls h(t) = Σ_m target_m e^{−t} e_m(t), reversed to p(t) = h(T − t).

use super::biorth::{biorthogonal_family, BiorthFamily, PrecisionPolicy};
use super::spectrum::{build_spectrum, Certificates, ExpSpectrum};
use super::xprec::XCtx;
use crate::dynamics::{ControlLaw, ExpSumControl, ExpTerm, LinearModel, LinearizedSystem};
use crate::error::{Error, Result};
use crate::field::FourierField;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// Default decay exponent θ in the profile lower bounds.
pub const DEFAULT_THETA: f64 = 2.0;

/// ⟨f, e^{ikx}⟩ in L²(0, 2π).
pub fn pairing_exp(f: &FourierField, k: i64) -> Complex64 {
    f.coeff(k) * (2.0 * PI)
}

/// ⟨f, c_k⟩ for the orthonormal basis c₀ = 1/√(2π), c_k = cos(kx)/√π.
pub fn pairing_cos(f: &FourierField, k: usize) -> f64 {
    if k == 0 {
        (2.0 * PI).sqrt() * f.mean()
    } else {
        PI.sqrt() * f.cos_sin(k).0
    }
}

/// ⟨f, s_k⟩ with s_k = sin(kx)/√π.
pub fn pairing_sin(f: &FourierField, k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        PI.sqrt() * f.cos_sin(k).1
    }
}

/// Orthonormal basis functions c_k, s_k as fields.
pub fn basis_cos(k: usize, kmax: usize, grid: usize) -> FourierField {
    if k == 0 {
        FourierField::constant(1.0 / (2.0 * PI).sqrt(), kmax, grid)
    } else {
        FourierField::from_cos_sin(kmax, grid, &[(k, 1.0 / PI.sqrt(), 0.0)])
    }
}

pub fn basis_sin(k: usize, kmax: usize, grid: usize) -> FourierField {
    FourierField::from_cos_sin(kmax, grid, &[(k, 0.0, 1.0 / PI.sqrt())])
}

/// Lower-bound constants of the profile hypotheses over the truncation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub theta: f64,
    /// min_k (k^{2θ} + [KS] 1)|pairing| for μ₄.
    pub c4: f64,
    /// Same for μ₅ (CH only).
    pub c5: Option<f64>,
    /// Largest pairing that must vanish (cross terms), relative to the largest pairing.
    pub cross_leak: f64,
}

const CROSS_TOL: f64 = 1e-12;

/// Moments smaller than this fraction of the largest are compared against that floor.
pub const REPLAY_FLOOR: f64 = 1e-8;

/// Checks ⟨μ₄,c₀⟩ ≠ 0, ⟨μ₅,c₀⟩ = 0, k^{2θ}|⟨μ₄,c_k⟩| ≥ C₁ > 0, ⟨μ₄,s_k⟩ = 0, and the mirrored μ₅ conditions.
pub fn check_ch_profiles(mu4: &FourierField, mu5: &FourierField, kmax: usize, theta: f64) -> Result<HypothesisReport> {
    let scale = (0..=kmax)
        .flat_map(|k| [pairing_cos(mu4, k).abs(), pairing_sin(mu5, k).abs()])
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut cross = pairing_cos(mu5, 0).abs();
    for k in 1..=kmax {
        cross = cross.max(pairing_sin(mu4, k).abs()).max(pairing_cos(mu5, k).abs());
    }
    let cross_leak = cross / scale;
    if cross_leak > CROSS_TOL {
        return Err(Error::HypothesisViolated(format!(
            "μ₄/μ₅ do not decouple cosine and sine modes (leak {cross_leak:.3e})"
        )));
    }
    if pairing_cos(mu4, 0).abs() <= CROSS_TOL * scale {
        return Err(Error::HypothesisViolated("⟨μ₄, c₀⟩ vanishes".into()));
    }
    let lam = |k: usize| ((k * k) as f64).powf(theta);
    let c4 = (1..=kmax).map(|k| lam(k) * pairing_cos(mu4, k).abs()).fold(f64::INFINITY, f64::min);
    let c5 = (1..=kmax).map(|k| lam(k) * pairing_sin(mu5, k).abs()).fold(f64::INFINITY, f64::min);
    for (name, c) in [("μ₄", c4), ("μ₅", c5)] {
        if !(c > CROSS_TOL * scale) {
            return Err(Error::HypothesisViolated(format!("{name} pairing lower bound fails (C = {c:.3e})")));
        }
    }
    Ok(HypothesisReport { theta, c4, c5: Some(c5), cross_leak })
}

/// Checks (k^{2θ} + 1)|⟨μ₄, e^{ikx}⟩| ≥ C > 0 for |k| ≤ kmax.
pub fn check_ks_profile(mu4: &FourierField, kmax: usize, theta: f64) -> Result<HypothesisReport> {
    let scale = (0..=kmax as i64).map(|k| pairing_exp(mu4, k).norm()).fold(f64::MIN_POSITIVE, f64::max);
    let c4 = (-(kmax as i64)..=kmax as i64)
        .map(|k| (((k * k) as f64).powf(theta) + 1.0) * pairing_exp(mu4, k).norm())
        .fold(f64::INFINITY, f64::min);
    if !(c4 > CROSS_TOL * scale) {
        return Err(Error::HypothesisViolated(format!("μ₄ pairing lower bound fails (C = {c4:.3e})")));
    }
    Ok(HypothesisReport { theta, c4, c5: None, cross_leak: 0.0 })
}

/// Spectrum, biorthogonal family and profiles for one (model, Φ, T, count).
#[derive(Clone, Debug)]
pub struct MomentSolver {
    pub spectrum: ExpSpectrum,
    pub family: BiorthFamily,
    pub system: LinearizedSystem,
    pub hypothesis: HypothesisReport,
    pub t: f64,
}

/// The control produced for one terminal state, before verification.
#[derive(Clone, Debug)]
pub struct MomentSeries {
    /// p(t) = h(T − t) per profile.
    pub law: ExpSumControl,
    /// Moment right-hand sides per component, indexed like the family.
    pub targets: Vec<Vec<Complex64>>,
    /// L² norms of each component.
    pub norms: Vec<f64>,
    /// max over modes of |∫h e^{λt} − target| / max(|target|, REPLAY_FLOOR max|target|).
    pub replay_error: f64,
    /// sup over a sampling grid of |Im h| (zero up to rounding after conjugate pairing).
    pub max_imag: f64,
}

impl MomentSolver {
    pub fn new_ch(
        phi: f64,
        mu4: &FourierField,
        mu5: &FourierField,
        t: f64,
        count: usize,
        theta: f64,
        policy: &PrecisionPolicy,
    ) -> Result<Self> {
        let kmax = mu4.truncation().min(mu5.truncation());
        if count > kmax + 1 {
            return Err(Error::ConfigError(format!("count {count} exceeds truncation {kmax} + 1")));
        }
        let hypothesis = check_ch_profiles(mu4, mu5, kmax, theta)?;
        let spectrum = build_spectrum(LinearModel::ChLin, phi, count)?;
        let family = biorthogonal_family(&spectrum.lambdas, t, policy)?;
        let system = LinearizedSystem::new(LinearModel::ChLin, phi, vec![mu4.clone(), mu5.clone()])?;
        Ok(MomentSolver { spectrum, family, system, hypothesis, t })
    }

    pub fn new_ks(
        phi: f64,
        mu4: &FourierField,
        t: f64,
        count: usize,
        theta: f64,
        policy: &PrecisionPolicy,
    ) -> Result<Self> {
        if count.is_multiple_of(2) {
            return Err(Error::ConfigError(format!(
                "KS count {count} must be odd so that every mode k has its partner −k"
            )));
        }
        let half = (count - 1) / 2;
        let kmax = mu4.truncation();
        if half > kmax {
            return Err(Error::ConfigError(format!("count {count} needs truncation ≥ {half}")));
        }
        let hypothesis = check_ks_profile(mu4, kmax, theta)?;
        let spectrum = build_spectrum(LinearModel::KsLin, phi, count)?;
        let family = biorthogonal_family(&spectrum.lambdas, t, policy)?;
        let system = LinearizedSystem::new(LinearModel::KsLin, phi, vec![mu4.clone()])?;
        Ok(MomentSolver { spectrum, family, system, hypothesis, t })
    }

    pub fn model(&self) -> LinearModel {
        self.spectrum.model
    }

    pub fn count(&self) -> usize {
        self.spectrum.lambdas.len()
    }

    pub fn certificates(&self) -> Certificates {
        self.spectrum.certificates
    }

    /// Largest |k| among the controlled modes.
    pub fn controlled_kmax(&self) -> usize {
        match self.model() {
            LinearModel::ChLin => self.count() - 1,
            LinearModel::KsLin => (self.count() - 1) / 2,
        }
    }

    /// Keeps only the controlled modes of `v`.
    pub fn controlled_part(&self, v: &FourierField) -> FourierField {
        let kc = self.controlled_kmax();
        let mut out = v.clone();
        for (k, c) in out.half_spectrum_mut().iter_mut().enumerate() {
            if k > kc {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    /// Control that cancels the controlled modes of a free terminal state z.
    pub fn control_for_terminal(&self, z: &FourierField) -> Result<MomentSeries> {
        let phi = self.system.phi;
        let n = self.count();
        let targets: Vec<Vec<Complex64>> = match self.model() {
            LinearModel::ChLin => {
                let (mu4, mu5) = (&self.system.profiles[0], &self.system.profiles[1]);
                let cos: Vec<Complex64> = (0..n)
                    .map(|k| {
                        let (a, _) = if k == 0 { (z.mean(), 0.0) } else { z.cos_sin(k) };
                        let m = if k == 0 { mu4.mean() } else { mu4.cos_sin(k).0 };
                        Complex64::new(-a / (phi * m), 0.0)
                    })
                    .collect();
                let sin: Vec<Complex64> = (0..n)
                    .map(|k| {
                        if k == 0 {
                            return Complex64::new(0.0, 0.0);
                        }
                        Complex64::new(-z.cos_sin(k).1 / (phi * mu5.cos_sin(k).1), 0.0)
                    })
                    .collect();
                vec![cos, sin]
            }
            LinearModel::KsLin => {
                let mu4 = &self.system.profiles[0];
                let tg = self
                    .spectrum
                    .labels
                    .iter()
                    .map(|&j| {
                        let k = -j;
                        -z.coeff(k) / (phi * mu4.coeff(k))
                    })
                    .collect();
                vec![tg]
            }
        };
        self.series_from_targets(targets)
    }

    fn series_from_targets(&self, targets: Vec<Vec<Complex64>>) -> Result<MomentSeries> {
        let fam = &self.family;
        let n = self.count();
        let t = self.t;
        let x = XCtx::new(fam.bits)?;
        let g = super::biorth::gram(&x, &fam.lambdas, t);
        let shifted: Vec<Complex64> = fam.lambdas.iter().map(|l| l + 1.0).collect();
        let gh = super::biorth::gram(&x, &shifted, t);
        let mut components = Vec::new();
        let mut norms = Vec::new();
        let mut replay_error = 0.0f64;
        for tg in &targets {
            let xt: Vec<_> = tg.iter().map(|&c| x.c(c)).collect();
            let mut d: Vec<Complex64> = (0..n)
                .map(|j| {
                    let mut acc = x.zero();
                    for m in 0..n {
                        acc = x.add(&acc, &x.mul(&xt[m], &fam.xcoeffs[m][j]));
                    }
                    x.to_c64(&acc)
                })
                .collect();
            if self.model() == LinearModel::KsLin {
                pair_conjugates(&self.spectrum.labels, &mut d);
            }
            let xd: Vec<_> = d.iter().map(|&c| x.c(c)).collect();
            // ‖h‖² = Σ d_i conj(d_j) ∫ e^{−(2 + conj Λ_i + Λ_j) t}
            let mut nrm = x.zero();
            for i in 0..n {
                for j in 0..n {
                    nrm = x.add(&nrm, &x.mul(&x.mul(&xd[i], &x.conj(&xd[j])), &gh[j][i]));
                }
            }
            norms.push(x.to_f64(&nrm.re).max(0.0).sqrt());
            let tmax = tg.iter().map(|c| c.norm()).fold(0.0, f64::max);
            for m in 0..n {
                let mut acc = x.zero();
                for j in 0..n {
                    acc = x.add(&acc, &x.mul(&xd[j], &g[m][j]));
                }
                let err = (x.to_c64(&acc) - tg[m]).norm();
                let denom = tg[m].norm().max(REPLAY_FLOOR * tmax);
                if denom > 0.0 {
                    replay_error = replay_error.max(err / denom);
                } else if err > 0.0 {
                    replay_error = f64::INFINITY;
                }
            }
            components.push(
                d.iter()
                    .zip(&fam.lambdas)
                    .filter(|(c, _)| c.norm() > 0.0)
                    .map(|(&coeff, l)| ExpTerm { coeff, rate: l.conj() + 1.0, anchor: t })
                    .collect::<Vec<_>>(),
            );
        }
        let law = ExpSumControl { duration: t, components };
        let max_imag = (0..=400)
            .map(|i| t * i as f64 / 400.0)
            .flat_map(|s| law.imaginary_part(s))
            .fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(MomentSeries { law, targets, norms, replay_error, max_imag })
    }
}

/// Makes coefficients of conjugate labels (j, −j) exact conjugates.
fn pair_conjugates(labels: &[i64], d: &mut [Complex64]) {
    for (a, &ja) in labels.iter().enumerate() {
        if ja > 0 {
            if let Some(b) = labels.iter().position(|&jb| jb == -ja) {
                let avg = 0.5 * (d[a] + d[b].conj());
                d[a] = avg;
                d[b] = avg.conj();
            }
        } else if ja == 0 {
            d[a].im = 0.0;
        }
    }
}

/// Verified moment-method null control.
#[derive(Clone, Debug, Serialize)]
pub struct MomentControl {
    pub model: String,
    pub phi: f64,
    pub t: f64,
    pub count: usize,
    #[serde(skip)]
    pub law: ExpSumControl,
    pub norms: Vec<f64>,
    /// Sum of the component norms.
    pub total_norm: f64,
    pub defect: f64,
    pub rounded_defect: f64,
    pub quadrature_defect: f64,
    pub bits: usize,
    pub replay_error: f64,
    pub max_imag: f64,
    /// ‖controlled modes of v(T)‖ / ‖v0‖.
    pub residual: f64,
    /// ‖uncontrolled modes of v(T)‖ / ‖v0‖.
    pub tail_residual: f64,
    pub certificates: Certificates,
    pub hypothesis: HypothesisReport,
    #[serde(skip)]
    pub terminal: FourierField,
}

impl MomentControl {
    /// h(t) = p(T − t).
    pub fn h(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.law.dim()];
        let s = self.t - t;
        for (o, terms) in out.iter_mut().zip(&self.law.components) {
            *o = terms.iter().map(|e| e.eval(s)).sum();
        }
        out
    }

    /// Rows (t, p₄[, p₅]) on a uniform grid of n + 1 points.
    pub fn signal_rows(&self, n: usize) -> Vec<Vec<f64>> {
        (0..=n)
            .map(|i| {
                let t = self.t * i as f64 / n as f64;
                let mut row = vec![t];
                let mut p = vec![0.0; self.law.dim()];
                for (o, terms) in p.iter_mut().zip(&self.law.components) {
                    *o = terms.iter().map(|e| e.eval(t)).sum();
                }
                row.extend(p);
                row
            })
            .collect()
    }
}

/// Builds and verifies the moment control for v0 under `solver`.
pub fn moment_control(solver: &MomentSolver, v0: &FourierField) -> Result<MomentControl> {
    let t = solver.t;
    let z = solver.system.flow(v0, None, None, t)?;
    let series = solver.control_for_terminal(&z)?;
    let terminal = solver.system.flow(v0, Some(&series.law), None, t)?;
    let v0n = v0.l2_norm();
    let ctrl = solver.controlled_part(&terminal);
    let tail = &terminal - &ctrl;
    let (residual, tail_residual) = if v0n > 0.0 {
        (ctrl.l2_norm() / v0n, tail.l2_norm() / v0n)
    } else {
        (ctrl.l2_norm(), tail.l2_norm())
    };
    Ok(MomentControl {
        model: solver.model().to_string(),
        phi: solver.system.phi,
        t,
        count: solver.count(),
        total_norm: series.norms.iter().sum(),
        norms: series.norms,
        law: series.law,
        defect: solver.family.defect,
        rounded_defect: solver.family.rounded_defect,
        quadrature_defect: solver.family.quadrature_defect,
        bits: solver.family.bits,
        replay_error: series.replay_error,
        max_imag: series.max_imag,
        residual,
        tail_residual,
        certificates: solver.certificates(),
        hypothesis: solver.hypothesis.clone(),
        terminal,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn moment_control_ch(
    v0: &FourierField,
    phi: f64,
    mu4: &FourierField,
    mu5: &FourierField,
    t: f64,
    count: usize,
    policy: &PrecisionPolicy,
) -> Result<MomentControl> {
    let solver = MomentSolver::new_ch(phi, mu4, mu5, t, count, DEFAULT_THETA, policy)?;
    moment_control(&solver, v0)
}

pub fn moment_control_ks(
    v0: &FourierField,
    phi: f64,
    mu4: &FourierField,
    t: f64,
    count: usize,
    policy: &PrecisionPolicy,
) -> Result<MomentControl> {
    let solver = MomentSolver::new_ks(phi, mu4, t, count, DEFAULT_THETA, policy)?;
    moment_control(&solver, v0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{cubic_profile, quartic_profile};

    const K: usize = 16;
    const N: usize = 64;

    fn ch_v0() -> FourierField {
        &(&basis_cos(0, K, N) + &basis_cos(1, K, N).scale(0.5)) + &basis_sin(2, K, N).scale(0.3)
    }

    #[test]
    fn zero_state_gives_zero_control() {
        let mu4 = quartic_profile(K, N);
        let mu5 = cubic_profile(K, N);
        let mc = moment_control_ch(&FourierField::zeros(K, N), 1.0, &mu4, &mu5, 0.5, 6, &PrecisionPolicy::default())
            .unwrap();
        assert_eq!(mc.total_norm, 0.0);
        assert_eq!(mc.terminal.l2_norm(), 0.0);
    }

    #[test]
    fn ch_null_control_small_residual() {
        let mu4 = quartic_profile(K, N);
        let mu5 = cubic_profile(K, N);
        let mc = moment_control_ch(&ch_v0(), 1.0, &mu4, &mu5, 0.5, 8, &PrecisionPolicy::default()).unwrap();
        assert!(mc.residual < 1e-3, "residual {}", mc.residual);
        assert!(mc.replay_error < 1e-6, "replay {}", mc.replay_error);
        assert!(mc.defect < 1e-8);
    }

    #[test]
    fn constant_state_needs_no_sine_control() {
        let mu4 = quartic_profile(K, N);
        let mu5 = cubic_profile(K, N);
        let mc = moment_control_ch(&basis_cos(0, K, N), 1.0, &mu4, &mu5, 0.5, 8, &PrecisionPolicy::default()).unwrap();
        assert_eq!(mc.norms[1], 0.0);
        assert!(mc.norms[0] > 0.0);
        assert!(mc.residual < 1e-6, "residual {}", mc.residual);
    }

    #[test]
    fn ks_control_is_real_and_small_residual() {
        let mu4 = quartic_profile(K, N);
        let v0 = FourierField::from_cos_sin(K, N, &[(1, 0.1, 0.0)]);
        let mc = moment_control_ks(&v0, 1.0, &mu4, 0.5, 9, &PrecisionPolicy::default()).unwrap();
        assert!(mc.residual < 1e-5, "residual {}", mc.residual);
        assert!(mc.max_imag < 1e-12 * mc.total_norm.max(1.0), "imag {}", mc.max_imag);
    }

    #[test]
    fn quartic_pairings_match_closed_form() {
        let mu4 = quartic_profile(K, N);
        for k in 1..=K as i64 {
            let want = -24.0 * (2.0 * PI).sqrt() / (k as f64).powi(4);
            let got = pairing_exp(&mu4, k) / (2.0 * PI).sqrt();
            assert!((got.re - want).abs() < 1e-12 && got.im.abs() < 1e-12);
        }
        assert!(pairing_exp(&mu4, 0).re > 0.0);
    }

    #[test]
    fn hypothesis_rejects_mixed_profile() {
        let mu4 = quartic_profile(K, N);
        let bad = &cubic_profile(K, N) + &FourierField::from_cos_sin(K, N, &[(3, 0.1, 0.0)]);
        assert!(matches!(check_ch_profiles(&mu4, &bad, K, 2.0), Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn ks_rejects_even_count() {
        let mu4 = quartic_profile(K, N);
        assert!(MomentSolver::new_ks(1.0, &mu4, 0.5, 8, 2.0, &PrecisionPolicy::default()).is_err());
    }
}
