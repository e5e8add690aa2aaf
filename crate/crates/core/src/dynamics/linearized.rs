//! Linearization around a positive constant Φ, propagated exactly mode by mode.
//!
//! CH: v_t = −v'''' − v'' + 3Φ²v'' + Φ(p₄μ₄ + p₅μ₅) + f, eigenvalues λ_k = −k⁴ + (1−3Φ²)k².
//! KS: v_t = −v'''' − v'' − Φv' + Φp₄μ₄ + f, with λ_k = −k⁴ + k² + ikΦ attached to the mode
//! e^{−ikx}; the stored coefficient of e^{ikx} therefore evolves with λ_{−k}.

use super::ControlLaw;
use crate::error::{Error, Result};
use crate::field::FourierField;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinearModel {
    ChLin,
    KsLin,
}

impl FromStr for LinearModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ch" | "ch_lin" => Ok(LinearModel::ChLin),
            "ks" | "ks_lin" => Ok(LinearModel::KsLin),
            other => Err(Error::ConfigError(format!("unknown linear model '{other}'"))),
        }
    }
}

impl std::fmt::Display for LinearModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LinearModel::ChLin => "ch_lin",
            LinearModel::KsLin => "ks_lin",
        })
    }
}

/// Source term f(t) given at sample times and interpolated linearly in between.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledSource {
    pub times: Vec<f64>,
    pub fields: Vec<FourierField>,
}

impl SampledSource {
    pub fn new(times: Vec<f64>, fields: Vec<FourierField>) -> Result<Self> {
        if times.len() != fields.len() || times.len() < 2 {
            return Err(Error::ConfigError("source needs at least two matching samples".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::ConfigError("source sample times must increase".into()));
        }
        Ok(SampledSource { times, fields })
    }

    /// Time-constant source on [0, t].
    pub fn constant(f: FourierField, t: f64) -> Self {
        SampledSource { times: vec![0.0, t], fields: vec![f.clone(), f] }
    }

    fn coeff(&self, j: usize, k: usize) -> Complex64 {
        self.fields[j].half_spectrum().get(k).copied().unwrap_or_default()
    }

    /// Linear interpolation of mode k at time t inside sample interval j.
    fn interp(&self, j: usize, k: usize, t: f64) -> Complex64 {
        let (a, b) = (self.times[j], self.times[j + 1]);
        let w = (t - a) / (b - a);
        self.coeff(j, k) * (1.0 - w) + self.coeff(j + 1, k) * w
    }

    pub fn scale(&self, a: f64) -> Self {
        SampledSource { times: self.times.clone(), fields: self.fields.iter().map(|f| f.scale(a)).collect() }
    }

    /// Pointwise sum with a source sampled at the same times.
    pub fn add(&self, other: &SampledSource) -> Result<Self> {
        if self.times != other.times {
            return Err(Error::ConfigError("sources sampled at different times".into()));
        }
        Ok(SampledSource {
            times: self.times.clone(),
            fields: self.fields.iter().zip(&other.fields).map(|(a, b)| a + b).collect(),
        })
    }
}

/// φ₁(z) = (e^z − 1)/z.
pub fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for n in 2..24 {
            term = term * z / n as f64;
            sum += term;
        }
        sum
    } else {
        (z.exp() - 1.0) / z
    }
}

/// φ₂(z) = (e^z − 1 − z)/z².
pub fn phi2(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        let mut term = Complex64::new(0.5, 0.0);
        let mut sum = term;
        for n in 3..26 {
            term = term * z / n as f64;
            sum += term;
        }
        sum
    } else {
        (z.exp() - 1.0 - z) / (z * z)
    }
}

/// ∫_a^b e^{λ(b−s)} c e^{β(s−anchor)} ds without overflow for large |λ − β|.
fn exp_term_integral(lambda: Complex64, coeff: Complex64, beta: Complex64, anchor: f64, a: f64, b: f64) -> Complex64 {
    let h = b - a;
    if h <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let z = (lambda - beta) * h;
    if z.norm() < 1.0 {
        coeff * (beta * (b - anchor)).exp() * h * phi1(z)
    } else {
        coeff * ((lambda * h + beta * (a - anchor)).exp() - (beta * (b - anchor)).exp()) / (lambda - beta)
    }
}

const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_48),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_48),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

#[derive(Clone, Debug, PartialEq)]
pub struct LinearizedSystem {
    pub model: LinearModel,
    pub phi: f64,
    /// Profiles the control multiplies (μ₄, and μ₅ for CH).
    pub profiles: Vec<FourierField>,
}

impl LinearizedSystem {
    pub fn new(model: LinearModel, phi: f64, profiles: Vec<FourierField>) -> Result<Self> {
        if !(phi > 0.0) {
            return Err(Error::ConfigError(format!("linearization point {phi} must be positive")));
        }
        Ok(LinearizedSystem { model, phi, profiles })
    }

    /// Stated eigenvalue λ_k for the integer label k.
    pub fn eigenvalue(&self, k: i64) -> Complex64 {
        let kf = k as f64;
        match self.model {
            LinearModel::ChLin => Complex64::new(-kf.powi(4) + (1.0 - 3.0 * self.phi * self.phi) * kf * kf, 0.0),
            LinearModel::KsLin => Complex64::new(-kf.powi(4) + kf * kf, kf * self.phi),
        }
    }

    /// Rate of the stored coefficient of e^{ikx}, k ≥ 0.
    pub fn mode_rate(&self, k: usize) -> Complex64 {
        match self.model {
            LinearModel::ChLin => self.eigenvalue(k as i64),
            LinearModel::KsLin => self.eigenvalue(-(k as i64)),
        }
    }

    fn profile_coeff(&self, i: usize, k: usize) -> Complex64 {
        self.profiles.get(i).and_then(|f| f.half_spectrum().get(k).copied()).unwrap_or_default()
    }

    /// v(t) from v0 with optional control and source.
    pub fn flow(
        &self,
        v0: &FourierField,
        law: Option<&dyn ControlLaw>,
        source: Option<&SampledSource>,
        t: f64,
    ) -> Result<FourierField> {
        Ok(self.trajectory(v0, law, source, &[t])?.pop().expect("one time requested"))
    }

    /// States at the given increasing times (t = 0 allowed).
    pub fn trajectory(
        &self,
        v0: &FourierField,
        law: Option<&dyn ControlLaw>,
        source: Option<&SampledSource>,
        times: &[f64],
    ) -> Result<Vec<FourierField>> {
        if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
            return Err(Error::ConfigError("trajectory times must be nonnegative and sorted".into()));
        }
        let kmax = v0.truncation();
        let pieces = law.and_then(|l| l.exp_pieces());
        let mut out = Vec::with_capacity(times.len());
        let mut state: Vec<Complex64> = v0.half_spectrum().to_vec();
        let mut t_prev = 0.0;
        for &t in times {
            if t > t_prev {
                for (k, c) in state.iter_mut().enumerate() {
                    let lam = self.mode_rate(k);
                    let mut next = *c * (lam * (t - t_prev)).exp();
                    if let Some(law) = law {
                        next += self.control_contribution(k, lam, law, pieces.as_deref(), t_prev, t);
                    }
                    if let Some(src) = source {
                        next += source_contribution(src, k, lam, t_prev, t);
                    }
                    *c = next;
                }
                t_prev = t;
            }
            let mut coeffs = state.clone();
            coeffs[0].im = 0.0;
            let f = FourierField::from_half_spectrum(coeffs, v0.grid_size())?;
            if f.half_spectrum().iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                return Err(Error::BlowupDetected { t, norm: f64::INFINITY, guard: f64::MAX });
            }
            out.push(f);
        }
        debug_assert!(out.iter().all(|f| f.truncation() == kmax));
        Ok(out)
    }

    /// Φ Σ_i μ̂_{i,k} ∫_a^b e^{λ(b−s)} p_i(s) ds.
    fn control_contribution(
        &self,
        k: usize,
        lam: Complex64,
        law: &dyn ControlLaw,
        pieces: Option<&[super::ExpPiece]>,
        a: f64,
        b: f64,
    ) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        let m = law.dim().min(self.profiles.len());
        let weights: Vec<Complex64> = (0..m).map(|i| self.profile_coeff(i, k) * self.phi).collect();
        if weights.iter().all(|w| w.norm() == 0.0) {
            return total;
        }
        match pieces {
            Some(pieces) => {
                for piece in pieces {
                    let lo = piece.start.max(a);
                    let hi = piece.end.min(b);
                    if hi <= lo {
                        continue;
                    }
                    let carry = (lam * (b - hi)).exp();
                    for (i, w) in weights.iter().enumerate() {
                        if w.norm() == 0.0 {
                            continue;
                        }
                        let mut acc = Complex64::new(0.0, 0.0);
                        for e in piece.components.get(i).map(|v| v.as_slice()).unwrap_or(&[]) {
                            // Re(c e^{β·}) = (c e^{β·} + c̄ e^{β̄·})/2, integrated separately since λ may be complex.
                            acc += exp_term_integral(lam, e.coeff, e.rate, e.anchor, lo, hi)
                                + exp_term_integral(lam, e.coeff.conj(), e.rate.conj(), e.anchor, lo, hi);
                        }
                        total += w * acc * 0.5 * carry;
                    }
                }
            }
            None => {
                let mut cuts: Vec<f64> = law.breakpoints().into_iter().filter(|&x| x > a && x < b).collect();
                cuts.insert(0, a);
                cuts.push(b);
                let mut buf = vec![0.0; law.dim()];
                for w in cuts.windows(2) {
                    let (lo, hi) = (w[0], w[1]);
                    let carry = (lam * (b - hi)).exp();
                    let rate = lam.norm() + 1.0;
                    let mut right = hi;
                    let mut width = (0.1 / rate).min(hi - lo);
                    while right > lo {
                        let left = (right - width).max(lo);
                        let (mid, half) = (0.5 * (left + right), 0.5 * (right - left));
                        for &(x, wq) in &GL8 {
                            let s = mid + half * x;
                            law.value(s, &mut buf);
                            let kern = (lam * (hi - s)).exp() * (wq * half);
                            for (i, wt) in weights.iter().enumerate() {
                                total += wt * kern * buf[i] * carry;
                            }
                        }
                        right = left;
                        width = (width * 2.0).min((hi - lo) / 32.0).max(width);
                    }
                }
            }
        }
        total
    }
}

/// ∫_a^b e^{λ(b−s)} f̂_k(s) ds for the piecewise-linear source.
fn source_contribution(src: &SampledSource, k: usize, lam: Complex64, a: f64, b: f64) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for j in 0..src.times.len() - 1 {
        let lo = src.times[j].max(a);
        let hi = src.times[j + 1].min(b);
        if hi <= lo {
            continue;
        }
        let fa = src.interp(j, k, lo);
        let fb = src.interp(j, k, hi);
        let h = hi - lo;
        let z = lam * h;
        let part = fa * h * phi1(z) + (fb - fa) * h * phi2(z);
        total += part * (lam * (b - hi)).exp();
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{ControlSchedule, ExpSumControl, ExpTerm};

    #[test]
    fn ch_mode_one_decays_with_rate_minus_three() {
        let sys = LinearizedSystem::new(LinearModel::ChLin, 1.0, vec![]).unwrap();
        assert_eq!(sys.eigenvalue(1).re, -3.0);
        let v0 = FourierField::from_cos_sin(8, 32, &[(1, 0.7, 0.0)]);
        let v = sys.flow(&v0, None, None, 1.0).unwrap();
        assert!((v.cos_sin(1).0 - 0.7 * (-3.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn ks_mode_rotates_with_stated_convention() {
        let sys = LinearizedSystem::new(LinearModel::KsLin, 2.0, vec![]).unwrap();
        let mut c = vec![Complex64::new(0.0, 0.0); 5];
        c[1] = Complex64::new(1.0, 0.0);
        let v0 = FourierField::from_half_spectrum(c, 16).unwrap();
        let v = sys.flow(&v0, None, None, 0.5).unwrap();
        let want = Complex64::new(0.0, -1.0).exp();
        assert!((v.half_spectrum()[1] - want).norm() < 1e-15);
    }

    #[test]
    fn constant_control_matches_closed_form() {
        let mu = FourierField::from_cos_sin(8, 32, &[(0, 1.0, 0.0), (2, 0.5, 0.0)]);
        let sys = LinearizedSystem::new(LinearModel::ChLin, 1.0, vec![mu]).unwrap();
        let law = ControlSchedule::constant(vec![2.0], 0.5).unwrap();
        let v = sys.flow(&FourierField::zeros(8, 32), Some(&law), None, 0.5).unwrap();
        assert!((v.mean() - 1.0).abs() < 1e-15);
        let lam = sys.eigenvalue(2).re;
        let want = 0.5 * 2.0 * ((lam * 0.5).exp() - 1.0) / lam;
        assert!((v.cos_sin(2).0 - want).abs() < 1e-15);
        assert!(v.cos_sin(1).0.abs() < 1e-18);
    }

    #[test]
    fn exponential_and_quadrature_paths_agree() {
        struct Opaque(ExpSumControl);
        impl ControlLaw for Opaque {
            fn dim(&self) -> usize {
                self.0.dim()
            }
            fn duration(&self) -> f64 {
                self.0.duration()
            }
            fn value(&self, t: f64, out: &mut [f64]) {
                self.0.value(t, out)
            }
            fn breakpoints(&self) -> Vec<f64> {
                self.0.breakpoints()
            }
        }
        let law = ExpSumControl {
            duration: 0.5,
            components: vec![vec![
                ExpTerm { coeff: Complex64::new(1.0, 0.5), rate: Complex64::new(-3.0, 2.0), anchor: 0.0 },
                ExpTerm { coeff: Complex64::new(0.2, 0.0), rate: Complex64::new(40.0, 0.0), anchor: 0.5 },
            ]],
        };
        let mu = crate::dynamics::quartic_profile(8, 32);
        let v0 = FourierField::from_cos_sin(8, 32, &[(1, 0.3, 0.1)]);
        for model in [LinearModel::ChLin, LinearModel::KsLin] {
            let sys = LinearizedSystem::new(model, 1.0, vec![mu.clone()]).unwrap();
            let a = sys.flow(&v0, Some(&law), None, 0.5).unwrap();
            let b = sys.flow(&v0, Some(&Opaque(law.clone())), None, 0.5).unwrap();
            assert!((&a - &b).l2_norm() < 1e-12, "{model:?}: {}", (&a - &b).l2_norm());
        }
    }

    #[test]
    fn constant_source_stays_in_its_mode() {
        let sys = LinearizedSystem::new(LinearModel::ChLin, 1.0, vec![]).unwrap();
        let f = FourierField::constant(1.0, 8, 32);
        let src = SampledSource::constant(f, 0.5);
        let v = sys.flow(&FourierField::zeros(8, 32), None, Some(&src), 0.5).unwrap();
        assert!((v.mean() - 0.5).abs() < 1e-15);
        assert!(v.with_truncation(8).l2_norm() - v.mean().abs() < 1e-15);
    }

    #[test]
    fn phi_functions_are_continuous_across_series_switch() {
        for z in [0.4999, 0.5001, -0.4999, -0.5001] {
            let z = Complex64::new(z, 0.0);
            let exact1 = (z.exp() - 1.0) / z;
            let exact2 = (z.exp() - 1.0 - z) / (z * z);
            assert!((phi1(z) - exact1).norm() < 1e-14);
            assert!((phi2(z) - exact2).norm() < 1e-13);
        }
    }
}
