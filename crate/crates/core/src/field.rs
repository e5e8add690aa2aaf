//! Truncated Fourier representation of real 2π-periodic functions.
//!
//! A field stores the coefficients û_k for k = 0..K of u(x) = Σ_{|k|≤K} û_k e^{ikx};
//! negative modes are implied by û_{-k} = conj(û_k), so realness holds by construction.

use crate::error::{Error, Result};
use crate::fft;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

/// Default fraction of L² mass a pointwise map may discard above its output truncation.
pub const DEFAULT_ALIAS_BUDGET: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct FourierField {
    coeffs: Vec<Complex64>,
    grid: usize,
}

/// Resolution metadata written next to exported spectra.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
}

impl FourierField {
    /// Builds a field from the half spectrum k = 0..K; the imaginary part of the mean is dropped.
    pub fn from_half_spectrum(mut coeffs: Vec<Complex64>, grid: usize) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::ConfigError("empty spectrum".into()));
        }
        let k = coeffs.len() - 1;
        if grid < 2 * k + 2 {
            return Err(Error::ConfigError(format!("grid size {grid} < 2K+2 = {}", 2 * k + 2)));
        }
        coeffs[0].im = 0.0;
        Ok(FourierField { coeffs, grid })
    }

    pub fn zeros(k: usize, grid: usize) -> Self {
        Self::constant(0.0, k, grid)
    }

    pub fn constant(c: f64, k: usize, grid: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); k + 1];
        coeffs[0] = Complex64::new(c, 0.0);
        FourierField { coeffs, grid: grid.max(2 * k + 2) }
    }

    /// Field Σ (a_n cos nx + b_n sin nx) from `(n, a_n, b_n)` triples; modes above K are ignored.
    pub fn from_cos_sin(k: usize, grid: usize, terms: &[(usize, f64, f64)]) -> Self {
        let mut f = Self::zeros(k, grid);
        for &(n, a, b) in terms {
            if n > k {
                continue;
            }
            if n == 0 {
                f.coeffs[0].re += a;
            } else {
                f.coeffs[n] += Complex64::new(0.5 * a, -0.5 * b);
            }
        }
        f
    }

    /// Samples `f` on an oversampled grid and keeps modes up to K (no tail check).
    pub fn from_fn(k: usize, grid: usize, f: impl Fn(f64) -> f64) -> Self {
        let m = fft::smooth_size((8 * k + 8).max(grid));
        let vals: Vec<f64> = (0..m).map(|j| f(grid_point(j, m))).collect();
        let spec = fft::analyze(&vals);
        FourierField { coeffs: spec[..=k].to_vec(), grid: grid.max(2 * k + 2) }
    }

    /// Transforms grid values (any length > 2K) and truncates to K.
    pub fn from_grid_values(values: &[f64], k: usize, grid: usize) -> Result<Self> {
        if values.len() <= 2 * k {
            return Err(Error::ConfigError(format!(
                "{} grid values cannot resolve {} modes",
                values.len(),
                k
            )));
        }
        let spec = fft::analyze(values);
        Ok(FourierField { coeffs: spec[..=k].to_vec(), grid: grid.max(2 * k + 2) })
    }

    pub fn truncation(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn grid_size(&self) -> usize {
        self.grid
    }

    pub fn resolution(&self) -> Resolution {
        Resolution { k: self.truncation(), n: self.grid }
    }

    /// Half spectrum k = 0..K.
    pub fn half_spectrum(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn half_spectrum_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of e^{ikx} for any integer k (zero outside the truncation).
    pub fn coeff(&self, k: i64) -> Complex64 {
        let a = k.unsigned_abs() as usize;
        if a > self.truncation() {
            return Complex64::new(0.0, 0.0);
        }
        if k >= 0 {
            self.coeffs[a]
        } else {
            self.coeffs[a].conj()
        }
    }

    /// Coefficients (a_n, b_n) of a_n cos nx + b_n sin nx.
    pub fn cos_sin(&self, n: usize) -> (f64, f64) {
        if n > self.truncation() {
            return (0.0, 0.0);
        }
        if n == 0 {
            return (self.coeffs[0].re, 0.0);
        }
        let c = self.coeffs[n];
        (2.0 * c.re, -2.0 * c.im)
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// Same function with truncation `k`: padded with zeros or cut.
    pub fn with_truncation(&self, k: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); k + 1];
        let n = k.min(self.truncation());
        coeffs[..=n].copy_from_slice(&self.coeffs[..=n]);
        FourierField { coeffs, grid: self.grid.max(2 * k + 2) }
    }

    /// Grid values at x_j = 2πj/m.
    pub fn to_grid(&self, m: usize) -> Vec<f64> {
        fft::synthesize(&self.coeffs, m)
    }

    /// Grid values on the field's own grid.
    pub fn grid_values(&self) -> Vec<f64> {
        self.to_grid(self.grid)
    }

    /// Point evaluation by direct summation.
    pub fn evaluate(&self, x: f64) -> f64 {
        let mut s = self.coeffs[0].re;
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            let e = Complex64::from_polar(1.0, k as f64 * x);
            s += 2.0 * (c * e).re;
        }
        s
    }

    /// (ik)^order û_k for each mode.
    pub fn derivative(&self, order: u32) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * ik_pow(k as f64, order))
            .collect();
        FourierField { coeffs, grid: self.grid }
    }

    fn is_constant(&self) -> bool {
        self.coeffs[1..].iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// Dealiased product: grid of at least 3K+1 points, result truncated to K.
    pub fn product(&self, other: &Self) -> Self {
        let k = self.truncation().max(other.truncation());
        let grid = self.grid.max(other.grid);
        if self.is_constant() {
            return other.scale(self.mean()).with_truncation(k).with_grid(grid);
        }
        if other.is_constant() {
            return self.scale(other.mean()).with_truncation(k).with_grid(grid);
        }
        let m = fft::smooth_size(self.truncation() + other.truncation() + k + 1);
        let a = self.to_grid(m);
        let b = other.to_grid(m);
        let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        let spec = fft::analyze(&prod);
        FourierField { coeffs: spec[..=k].to_vec(), grid }
    }

    /// Dealiased cube u³ truncated to K.
    pub fn cube(&self) -> Self {
        let k = self.truncation();
        if self.is_constant() {
            return FourierField::constant(self.mean().powi(3), k, self.grid);
        }
        let m = fft::smooth_size(4 * k + 1);
        let vals: Vec<f64> = self.to_grid(m).into_iter().map(|v| v * v * v).collect();
        let spec = fft::analyze(&vals);
        FourierField { coeffs: spec[..=k].to_vec(), grid: self.grid }
    }

    /// Applies `map` on an oversampled grid and truncates to `k_out`, measuring the discarded tail.
    pub fn pointwise_map(
        &self,
        map: impl Fn(f64) -> f64,
        k_out: usize,
        budget: f64,
    ) -> Result<Self> {
        let k = self.truncation().max(k_out);
        let m = fft::smooth_size((4 * k).max(self.grid).max(2 * k + 2));
        let vals: Vec<f64> = self.to_grid(m).into_iter().map(&map).collect();
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::AliasingBudgetExceeded { fraction: f64::INFINITY, budget });
        }
        let spec = fft::analyze(&vals);
        let mass = |s: &[Complex64], first: usize| -> f64 {
            s.iter()
                .enumerate()
                .map(|(j, c)| if j + first == 0 { c.norm_sqr() } else { 2.0 * c.norm_sqr() })
                .sum::<f64>()
        };
        let total = mass(&spec, 0);
        let tail = mass(&spec[k_out + 1..], k_out + 1);
        let fraction = if total > 0.0 { (tail / total).sqrt() } else { 0.0 };
        if fraction > budget {
            return Err(Error::AliasingBudgetExceeded { fraction, budget });
        }
        Ok(FourierField { coeffs: spec[..=k_out].to_vec(), grid: self.grid.max(2 * k_out + 2) })
    }

    /// (Σ_k (1+k²)^s |û_k|²)^{1/2} over the truncated range.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let mut acc = self.coeffs[0].norm_sqr();
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            let w = if s == 0.0 { 1.0 } else { (1.0 + (k * k) as f64).powf(s) };
            acc += 2.0 * w * c.norm_sqr();
        }
        acc.sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0.0)
    }

    /// Mean-square norm computed from grid values; agrees with `l2_norm` for band-limited fields.
    pub fn grid_l2_norm(&self) -> f64 {
        let vals = self.grid_values();
        (vals.iter().map(|v| v * v).sum::<f64>() / vals.len() as f64).sqrt()
    }

    /// Minimum over the field's grid.
    pub fn grid_min(&self) -> f64 {
        self.grid_values().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn grid_max(&self) -> f64 {
        self.grid_values().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scale(&self, a: f64) -> Self {
        FourierField { coeffs: self.coeffs.iter().map(|c| c * a).collect(), grid: self.grid }
    }

    /// x ↦ u(−x).
    pub fn reflect(&self) -> Self {
        FourierField { coeffs: self.coeffs.iter().map(|c| c.conj()).collect(), grid: self.grid }
    }

    fn with_grid(mut self, grid: usize) -> Self {
        self.grid = self.grid.max(grid);
        self
    }

    /// self + a·other, padding to the larger truncation.
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        let k = self.truncation().max(other.truncation());
        let mut out = self.with_truncation(k);
        for (j, c) in other.coeffs.iter().enumerate() {
            out.coeffs[j] += c * a;
        }
        out.grid = self.grid.max(other.grid);
        out
    }

    /// Rows (k, re, im) for k = −K..K.
    pub fn spectrum_rows(&self) -> Vec<(i64, f64, f64)> {
        let k = self.truncation() as i64;
        (-k..=k)
            .map(|j| {
                let c = self.coeff(j);
                (j, c.re, c.im)
            })
            .collect()
    }

    /// Inverse of `spectrum_rows`; the negative half is checked for conjugate symmetry.
    pub fn from_spectrum_rows(rows: &[(i64, f64, f64)], grid: usize) -> Result<Self> {
        let k = rows.iter().map(|r| r.0.unsigned_abs() as usize).max().unwrap_or(0);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); k + 1];
        for &(j, re, im) in rows {
            if j >= 0 {
                coeffs[j as usize] = Complex64::new(re, im);
            }
        }
        for &(j, re, im) in rows {
            if j < 0 {
                let c = coeffs[j.unsigned_abs() as usize];
                let scale = c.norm().max(1.0);
                if (c.re - re).abs() > 1e-12 * scale || (c.im + im).abs() > 1e-12 * scale {
                    return Err(Error::Parse(format!("mode {j} breaks conjugate symmetry")));
                }
            }
        }
        Self::from_half_spectrum(coeffs, grid)
    }

    /// Largest |û_k − conj(û_{−k})| over the exported spectrum; zero by construction.
    pub fn hermitian_defect(&self) -> f64 {
        let k = self.truncation() as i64;
        (1..=k)
            .map(|j| (self.coeff(j) - self.coeff(-j).conj()).norm())
            .fold(self.coeffs[0].im.abs(), f64::max)
    }
}

/// x_j = 2πj/m.
pub fn grid_point(j: usize, m: usize) -> f64 {
    2.0 * std::f64::consts::PI * j as f64 / m as f64
}

fn ik_pow(k: f64, order: u32) -> Complex64 {
    let m = k.powi(order as i32);
    match order % 4 {
        0 => Complex64::new(m, 0.0),
        1 => Complex64::new(0.0, m),
        2 => Complex64::new(-m, 0.0),
        _ => Complex64::new(0.0, -m),
    }
}

impl Add for &FourierField {
    type Output = FourierField;
    fn add(self, rhs: &FourierField) -> FourierField {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &FourierField {
    type Output = FourierField;
    fn sub(self, rhs: &FourierField) -> FourierField {
        self.axpy(-1.0, rhs)
    }
}

impl Neg for &FourierField {
    type Output = FourierField;
    fn neg(self) -> FourierField {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &FourierField {
    type Output = FourierField;
    fn mul(self, a: f64) -> FourierField {
        self.scale(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: &FourierField, b: &FourierField, tol: f64) -> bool {
        (a - b).l2_norm() <= tol
    }

    #[test]
    fn derivative_of_cos_is_minus_sin() {
        let f = FourierField::from_cos_sin(8, 32, &[(1, 1.0, 0.0)]);
        let g = FourierField::from_cos_sin(8, 32, &[(1, 0.0, -1.0)]);
        assert!(close(&f.derivative(1), &g, 1e-15));
    }

    #[test]
    fn reflection_matches_grid_values() {
        let f = FourierField::from_fn(8, 32, |x| (x.sin() + 0.3 * (2.0 * x).cos()).exp());
        let g = FourierField::from_fn(8, 32, |x| (-x.sin() + 0.3 * (2.0 * x).cos()).exp());
        assert!(close(&f.reflect(), &g, 1e-13));
    }

    #[test]
    fn fourth_derivative_of_constant_vanishes() {
        assert_eq!(FourierField::constant(1.0, 8, 32).derivative(4).l2_norm(), 0.0);
    }

    #[test]
    fn second_derivative_of_sin3x() {
        let f = FourierField::from_cos_sin(8, 32, &[(3, 0.0, 1.0)]);
        let g = FourierField::from_cos_sin(8, 32, &[(3, 0.0, -9.0)]);
        assert!(close(&f.derivative(2), &g, 1e-14));
    }

    #[test]
    fn exp_of_zero_and_log2() {
        let z = FourierField::zeros(8, 32);
        let e = z.pointwise_map(f64::exp, 8, DEFAULT_ALIAS_BUDGET).unwrap();
        assert!(close(&e, &FourierField::constant(1.0, 8, 32), 1e-15));
        let l = FourierField::constant(2f64.ln(), 8, 32);
        let e = l.pointwise_map(f64::exp, 8, DEFAULT_ALIAS_BUDGET).unwrap();
        assert!(close(&e, &FourierField::constant(2.0, 8, 32), 1e-14));
    }

    #[test]
    fn cube_of_sin() {
        let f = FourierField::from_cos_sin(8, 32, &[(1, 0.0, 1.0)]);
        let want = FourierField::from_cos_sin(8, 32, &[(1, 0.0, 0.75), (3, 0.0, -0.25)]);
        let m = f.pointwise_map(|v| v * v * v, 8, DEFAULT_ALIAS_BUDGET).unwrap();
        assert!(close(&m, &want, 1e-14));
        assert!(close(&f.cube(), &want, 1e-14));
    }

    #[test]
    fn aliasing_budget_is_enforced() {
        let f = FourierField::from_cos_sin(4, 16, &[(1, 3.0, 0.0)]);
        let r = f.pointwise_map(f64::exp, 4, 1e-8);
        assert!(matches!(r, Err(Error::AliasingBudgetExceeded { .. })));
    }

    #[test]
    fn products_of_trig() {
        let c = FourierField::from_cos_sin(8, 32, &[(1, 1.0, 0.0)]);
        let s = FourierField::from_cos_sin(8, 32, &[(1, 0.0, 1.0)]);
        let cc = FourierField::from_cos_sin(8, 32, &[(0, 0.5, 0.0), (2, 0.5, 0.0)]);
        let sc = FourierField::from_cos_sin(8, 32, &[(2, 0.0, 0.5)]);
        assert!(close(&c.product(&c), &cc, 1e-15));
        assert!(close(&s.product(&c), &sc, 1e-15));
        let one = FourierField::constant(1.0, 8, 32);
        assert_eq!(one.product(&s), s);
    }

    #[test]
    fn norms_follow_parseval() {
        let f = FourierField::from_cos_sin(8, 32, &[(1, 2.0, 0.0)]);
        assert!((f.sobolev_norm(0.0) - 2f64.sqrt()).abs() < 1e-15);
        assert!((f.sobolev_norm(1.0) - 2.0).abs() < 1e-15);
        assert_eq!(FourierField::zeros(4, 16).sobolev_norm(1.0), 0.0);
        assert!((FourierField::constant(1.5, 4, 16).l2_norm() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn evaluate_matches_grid() {
        let f = FourierField::from_cos_sin(8, 32, &[(0, 0.3, 0.0), (2, 0.1, -0.7), (5, 0.0, 0.2)]);
        let g = f.grid_values();
        for (j, v) in g.iter().enumerate() {
            assert!((f.evaluate(grid_point(j, 32)) - v).abs() < 1e-14);
        }
        assert!((f.evaluate(PI / 2.0) - (0.3 - 0.1 - 0.7 * 0.0 + 0.2)).abs() < 1e-14);
    }

    #[test]
    fn spectrum_rows_round_trip() {
        let f = FourierField::from_cos_sin(6, 16, &[(0, 1.0, 0.0), (3, 0.25, -0.5)]);
        let rows = f.spectrum_rows();
        assert_eq!(rows.len(), 13);
        assert_eq!(FourierField::from_spectrum_rows(&rows, 16).unwrap(), f);
    }
}
