//! Biorthogonal families to {e^{−Λ_j t}} on [0, T] by an extended-precision Gram solve.

use super::xprec::{XCtx, XC};
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionPolicy {
    /// Starting significand in bits.
    pub bits: usize,
    /// Largest significand tried before giving up.
    pub max_bits: usize,
    /// Required biorthogonality defect.
    pub tolerance: f64,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy { bits: 256, max_bits: 1024, tolerance: 1e-8 }
    }
}

/// e_k(t) = Σ_j C_kj e^{−conj(Λ_j) t} with ∫₀ᵀ e_k e^{−Λ_j t} dt = δ_kj.
#[derive(Clone, Debug)]
pub struct BiorthFamily {
    pub t: f64,
    pub lambdas: Vec<Complex64>,
    /// Coefficients rounded to double precision (downstream controls use the extended ones).
    pub coeffs: Vec<Vec<Complex64>>,
    /// max |∫ e_k e^{−Λ_j} − δ_kj| for the stored extended-precision coefficients.
    pub defect: f64,
    /// Same quantity for the coefficients rounded to double precision.
    pub rounded_defect: f64,
    /// Defect measured by composite Gauss–Legendre quadrature in double precision.
    pub quadrature_defect: f64,
    /// ‖e_k‖_{L²(0,T)}.
    pub norms: Vec<f64>,
    pub bits: usize,
    pub(crate) xcoeffs: Vec<Vec<XC>>,
}

impl BiorthFamily {
    /// e_k(t) evaluated in double precision.
    pub fn eval(&self, k: usize, t: f64) -> Complex64 {
        self.coeffs[k]
            .iter()
            .zip(&self.lambdas)
            .map(|(c, l)| c * (-l.conj() * t).exp())
            .sum()
    }
}

/// Gram entries G_ij = ∫₀ᵀ e^{−(Λ_i + conj Λ_j) t} dt.
pub(crate) fn gram(x: &XCtx, lambdas: &[Complex64], t: f64) -> Vec<Vec<XC>> {
    let xl: Vec<XC> = lambdas.iter().map(|&l| x.c(l)).collect();
    xl.iter()
        .map(|li| xl.iter().map(|lj| x.gram_kernel(&x.add(li, &x.conj(lj)), t)).collect())
        .collect()
}

pub fn biorthogonal_family(lambdas: &[Complex64], t: f64, policy: &PrecisionPolicy) -> Result<BiorthFamily> {
    if !(t > 0.0) {
        return Err(Error::ConfigError(format!("horizon T = {t} must be positive")));
    }
    if lambdas.is_empty() {
        return Err(Error::ConfigError("empty exponent family".into()));
    }
    let mut bits = policy.bits.max(super::xprec::MIN_BITS);
    loop {
        let fam = build_at(lambdas, t, bits)?;
        if fam.defect <= policy.tolerance {
            return Ok(fam);
        }
        if bits * 2 > policy.max_bits {
            return Err(Error::IllConditioned(format!(
                "biorthogonality defect {:.3e} exceeds {:.1e} at {bits} bits (count {}, T = {t})",
                fam.defect,
                policy.tolerance,
                lambdas.len()
            )));
        }
        bits *= 2;
    }
}

fn build_at(lambdas: &[Complex64], t: f64, bits: usize) -> Result<BiorthFamily> {
    let x = XCtx::new(bits)?;
    let n = lambdas.len();
    let g = gram(&x, lambdas, t);
    let ident: Vec<Vec<XC>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { x.one() } else { x.zero() }).collect()).collect();
    // Column k of the solution holds c_k with G c_k = unit_k.
    let sol = x.solve(&g, &ident)?;
    let xcoeffs: Vec<Vec<XC>> = (0..n).map(|k| (0..n).map(|j| sol[j][k].clone()).collect()).collect();
    let coeffs: Vec<Vec<Complex64>> = xcoeffs.iter().map(|r| r.iter().map(|c| x.to_c64(c)).collect()).collect();
    let rounded: Vec<Vec<XC>> = coeffs.iter().map(|r| r.iter().map(|&c| x.c(c)).collect()).collect();
    let rounded_defect = defect_of(&x, &g, &rounded);
    let defect = defect_of(&x, &g, &xcoeffs);
    let norms = (0..n)
        .map(|k| {
            let mut acc = x.zero();
            for i in 0..n {
                for j in 0..n {
                    // ∫ e^{−conj Λ_i t} conj(e^{−conj Λ_j t}) = G_ji
                    let term = x.mul(&x.mul(&xcoeffs[k][i], &x.conj(&xcoeffs[k][j])), &g[j][i]);
                    acc = x.add(&acc, &term);
                }
            }
            x.to_f64(&acc.re).max(0.0).sqrt()
        })
        .collect();
    let mut fam = BiorthFamily {
        t,
        lambdas: lambdas.to_vec(),
        coeffs,
        defect,
        rounded_defect,
        quadrature_defect: 0.0,
        norms,
        bits,
        xcoeffs,
    };
    fam.quadrature_defect = quadrature_defect(&fam);
    Ok(fam)
}

/// max_{k,j} |Σ_i C_ki G_ji − δ_kj|.
fn defect_of(x: &XCtx, g: &[Vec<XC>], c: &[Vec<XC>]) -> f64 {
    let n = g.len();
    let mut worst = 0.0f64;
    for k in 0..n {
        for j in 0..n {
            let mut acc = x.zero();
            for i in 0..n {
                acc = x.add(&acc, &x.mul(&c[k][i], &g[j][i]));
            }
            if j == k {
                acc = x.sub(&acc, &x.one());
            }
            worst = worst.max(x.to_c64(&acc).norm());
        }
    }
    worst
}

/// Composite 8-point Gauss–Legendre on panels refined ten times beyond the fastest decay scale.
fn quadrature_defect(fam: &BiorthFamily) -> f64 {
    let n = fam.lambdas.len();
    let fastest = fam.lambdas.iter().map(|l| 2.0 * l.norm()).fold(1.0, f64::max);
    let mut panels = Vec::new();
    let mut left = 0.0;
    let mut width = 0.1 / fastest;
    while left < fam.t {
        let right = (left + width).min(fam.t);
        panels.push((left, right));
        left = right;
        width = (width * 1.1).min(fam.t / 200.0).max(width);
    }
    let mut worst = 0.0f64;
    for k in 0..n {
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(a, b) in &panels {
                let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
                for &(xq, wq) in &GL8 {
                    let s = mid + half * xq;
                    let mut val = Complex64::new(0.0, 0.0);
                    for i in 0..n {
                        val += fam.coeffs[k][i] * (-(fam.lambdas[i].conj() + fam.lambdas[j]) * s).exp();
                    }
                    acc += val * (wq * half);
                }
            }
            let target = if j == k { 1.0 } else { 0.0 };
            worst = worst.max((acc - target).norm());
        }
    }
    worst
}

pub(crate) const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_48),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_48),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];
