//! Controlled equation ∂t u + ∂x⁴u + ∂x²u + N(u) = ⟨p(t), μ⟩u on the torus.

pub mod control;
pub mod integrator;
pub mod linearized;

pub use control::{
    Concatenation, ControlLaw, ControlSchedule, Embedded, ExpPiece, ExpSumControl, ExpTerm,
    Scaled, Segment,
};
pub use integrator::{flow, integrate, stability_probe, FlowConfig, Scheme, SolveReport};
pub use linearized::{LinearModel, LinearizedSystem, SampledSource};

use crate::error::{Error, Result};
use crate::field::FourierField;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::str::FromStr;

/// Nonlinearity of the controlled equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    /// N(u) = u ∂x u
    Ks,
    /// N(u) = −∂x²(u³)
    Ch,
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Ks => "KS",
            Model::Ch => "CH",
        }
    }

    /// N(u) evaluated with dealiasing.
    pub fn nonlinearity(&self, u: &FourierField) -> FourierField {
        match self {
            Model::Ks => {
                let mut n = u.product(&u.derivative(1));
                // ∫ u u_x = 0 on the torus; remove rounding residue from the mean.
                n.half_spectrum_mut()[0] = num_complex::Complex64::new(0.0, 0.0);
                n
            }
            Model::Ch => u.cube().derivative(2).scale(-1.0),
        }
    }
}

impl FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ks" => Ok(Model::Ks),
            "ch" => Ok(Model::Ch),
            other => Err(Error::ConfigError(format!("unknown model '{other}'"))),
        }
    }
}

/// Control profiles μ₁..μ_m, with μ₁ = 1, μ₂ = cos x, μ₃ = sin x.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileSet {
    profiles: Vec<FourierField>,
    sup: Vec<f64>,
}

impl ProfileSet {
    /// The three low modes 1, cos x, sin x.
    pub fn low_modes(k: usize, grid: usize) -> Self {
        let p = vec![
            FourierField::constant(1.0, k, grid),
            FourierField::from_cos_sin(k, grid, &[(1, 1.0, 0.0)]),
            FourierField::from_cos_sin(k, grid, &[(1, 0.0, 1.0)]),
        ];
        Self::from_fields(p)
    }

    /// Low modes followed by the given extra profiles (μ₄, μ₅).
    pub fn with_extra(k: usize, grid: usize, extra: &[FourierField]) -> Result<Self> {
        if extra.len() > 2 {
            return Err(Error::ConfigError("at most two extra profiles (μ4, μ5)".into()));
        }
        let mut base = Self::low_modes(k, grid).profiles;
        base.extend(extra.iter().map(|f| f.with_truncation(k)));
        Ok(Self::from_fields(base))
    }

    fn from_fields(profiles: Vec<FourierField>) -> Self {
        let sup = profiles
            .iter()
            .map(|f| f.grid_values().iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .collect();
        ProfileSet { profiles, sup }
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn get(&self, i: usize) -> &FourierField {
        &self.profiles[i]
    }

    pub fn fields(&self) -> &[FourierField] {
        &self.profiles
    }

    /// Σ p_i μ_i.
    pub fn combine(&self, p: &[f64]) -> FourierField {
        let mut q = self.profiles[0].scale(p.first().copied().unwrap_or(0.0));
        for (i, f) in self.profiles.iter().enumerate().skip(1) {
            if let Some(&c) = p.get(i) {
                if c != 0.0 {
                    q = q.axpy(c, f);
                }
            }
        }
        q
    }

    /// Upper bound on sup_x |Σ p_i μ_i(x)|.
    pub fn sup_bound(&self, p: &[f64]) -> f64 {
        p.iter().zip(&self.sup).map(|(a, s)| a.abs() * s).sum()
    }
}

/// μ(x) = x²(x−2π)² extended periodically: 8π⁴/15 − 48 Σ_{k≥1} cos kx / k⁴.
pub fn quartic_profile(k: usize, grid: usize) -> FourierField {
    let mut terms = vec![(0usize, 8.0 * PI.powi(4) / 15.0, 0.0)];
    terms.extend((1..=k).map(|n| (n, -48.0 / (n as f64).powi(4), 0.0)));
    FourierField::from_cos_sin(k, grid, &terms)
}

/// μ(x) = x(x−π)(x−2π) extended periodically: 12 Σ_{k≥1} sin kx / k³.
pub fn cubic_profile(k: usize, grid: usize) -> FourierField {
    let terms: Vec<_> = (1..=k).map(|n| (n, 0.0, 12.0 / (n as f64).powi(3))).collect();
    FourierField::from_cos_sin(k, grid, &terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_are_fixed_points_of_both_nonlinearities() {
        let c = FourierField::constant(1.7, 16, 64);
        assert_eq!(Model::Ks.nonlinearity(&c).l2_norm(), 0.0);
        assert_eq!(Model::Ch.nonlinearity(&c).l2_norm(), 0.0);
    }

    #[test]
    fn profile_series_match_their_closed_forms() {
        let q = quartic_profile(64, 256);
        let c = cubic_profile(64, 256);
        for x in [0.3, 1.0, 2.5, 4.0, 6.0] {
            let mq = x * x * (x - 2.0 * PI).powi(2);
            let mc = x * (x - PI) * (x - 2.0 * PI);
            assert!((q.evaluate(x) - mq).abs() < 2e-4, "quartic at {x}");
            assert!((c.evaluate(x) - mc).abs() < 2e-3, "cubic at {x}");
        }
    }

    #[test]
    fn combine_matches_manual_sum() {
        let p = ProfileSet::low_modes(4, 16);
        let q = p.combine(&[1.0, 2.0, -3.0]);
        let want = FourierField::from_cos_sin(4, 16, &[(0, 1.0, 0.0), (1, 2.0, -3.0)]);
        assert!((&q - &want).l2_norm() < 1e-15);
        assert!((p.sup_bound(&[1.0, 2.0, -3.0]) - 6.0).abs() < 1e-12);
    }
}
