//! Shifted exponent families Λ and their sector / counting / gap certificates.

use crate::dynamics::LinearModel;
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::Serialize;

/// Certificates verified over the truncated family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Certificates {
    /// Sector angle: |Im Λ| < sinh(θ) Re Λ.
    pub theta: f64,
    /// Counting constant: #{|Λ| ≤ r} ≤ κ r^{1/4}.
    pub kappa: f64,
    /// Gap claimed by the model (3Φ² for CH, Φ for KS).
    pub rho: f64,
    /// Smallest observed pairwise gap.
    pub min_gap: f64,
    pub min_re: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpSpectrum {
    pub model: LinearModel,
    pub phi: f64,
    /// Λ_1..Λ_count.
    pub lambdas: Vec<Complex64>,
    /// Eigenvalue label j with Λ_m = −λ_j + 1.
    pub labels: Vec<i64>,
    pub certificates: Certificates,
}

/// σ(m) = m/2 for even m, (1−m)/2 for odd m.
pub fn sigma(m: i64) -> i64 {
    if m % 2 == 0 {
        m / 2
    } else {
        (1 - m) / 2
    }
}

/// λ_j for the linearized model.
pub fn eigenvalue(model: LinearModel, phi: f64, j: i64) -> Complex64 {
    let k = j as f64;
    match model {
        LinearModel::ChLin => Complex64::new(-k.powi(4) + (1.0 - 3.0 * phi * phi) * k * k, 0.0),
        LinearModel::KsLin => Complex64::new(-k.powi(4) + k * k, k * phi),
    }
}

pub fn build_spectrum(model: LinearModel, phi: f64, count: usize) -> Result<ExpSpectrum> {
    if !(phi > 0.0) {
        return Err(Error::ConfigError(format!("Φ = {phi} must be positive")));
    }
    if count < 2 {
        return Err(Error::ConfigError("spectrum needs count ≥ 2".into()));
    }
    let labels: Vec<i64> = (1..=count as i64)
        .map(|m| match model {
            LinearModel::ChLin => m - 1,
            LinearModel::KsLin => sigma(m),
        })
        .collect();
    let lambdas: Vec<Complex64> = labels.iter().map(|&j| -eigenvalue(model, phi, j) + 1.0).collect();
    let rho = match model {
        LinearModel::ChLin => 3.0 * phi * phi,
        LinearModel::KsLin => phi,
    };
    let certificates = certify(&lambdas, rho)?;
    Ok(ExpSpectrum { model, phi, lambdas, labels, certificates })
}

/// Computes (θ, κ, gap) and fails if any hypothesis is violated.
pub fn certify(lambdas: &[Complex64], rho: f64) -> Result<Certificates> {
    let min_re = lambdas.iter().map(|l| l.re).fold(f64::INFINITY, f64::min);
    if !(min_re > 0.0) {
        return Err(Error::CertificateFailed(format!("Re Λ = {min_re} is not positive")));
    }
    let ratio = lambdas.iter().map(|l| l.im.abs() / l.re).fold(0.0, f64::max);
    let theta = (1.01 * ratio).max(1e-3).asinh();
    if lambdas.iter().any(|l| l.im.abs() >= theta.sinh() * l.re) {
        return Err(Error::CertificateFailed("sector condition".into()));
    }
    let mut min_gap = f64::INFINITY;
    for (i, a) in lambdas.iter().enumerate() {
        for b in &lambdas[i + 1..] {
            min_gap = min_gap.min((a - b).norm());
        }
    }
    if min_gap < rho * (1.0 - 1e-12) {
        return Err(Error::CertificateFailed(format!("gap {min_gap} below ρ = {rho}")));
    }
    let mut mags: Vec<f64> = lambdas.iter().map(|l| l.norm()).collect();
    mags.sort_by(f64::total_cmp);
    let kappa = mags
        .iter()
        .map(|&r| mags.iter().filter(|&&x| x <= r).count() as f64 / r.powf(0.25))
        .fold(0.0, f64::max);
    Ok(Certificates { theta, kappa, rho, min_gap, min_re })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ch_family_at_phi_one() {
        let s = build_spectrum(LinearModel::ChLin, 1.0, 10).unwrap();
        assert_eq!(eigenvalue(LinearModel::ChLin, 1.0, 1).re, -3.0);
        assert_eq!(s.lambdas[1], Complex64::new(4.0, 0.0));
        assert_eq!(s.certificates.rho, 3.0);
        assert!(s.certificates.min_gap >= 3.0);
    }

    #[test]
    fn ks_family_uses_sigma_ordering() {
        assert_eq!((1..=5).map(sigma).collect::<Vec<_>>(), vec![0, 1, -1, 2, -2]);
        let s = build_spectrum(LinearModel::KsLin, 2.0, 5).unwrap();
        assert_eq!(s.lambdas[2], Complex64::new(1.0, 2.0));
        assert!((s.certificates.min_gap - 2.0).abs() < 1e-12);
        assert!(s.certificates.theta > 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(build_spectrum(LinearModel::ChLin, 0.0, 4).is_err());
        assert!(build_spectrum(LinearModel::ChLin, 1.0, 1).is_err());
    }
}
