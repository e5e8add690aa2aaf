//! Realisable decompositions: a band-limited phase written as const − Σ w_j (ψ_j′)⁴ with w_j ≥ 0.

use crate::error::{Error, Result};
use crate::field::FourierField;
use crate::saturation::{q_from_f64, PhaseTree};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Amplitudes below this fraction of the largest mode are dropped.
const MODE_FLOOR: f64 = 1e-14;

/// One quartic term w (ψ′)⁴.
#[derive(Clone, Debug)]
pub struct QuarticTerm {
    pub weight: f64,
    pub psi: FourierField,
}

/// φ = affine − Σ w_j (ψ_j′)⁴ where affine holds modes 0 and 1 only.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub affine: [f64; 3],
    pub terms: Vec<QuarticTerm>,
}

/// (mean, cos x, sin x) coefficients.
pub fn affine_part(phi: &FourierField) -> [f64; 3] {
    let (a, b) = phi.cos_sin(1);
    [phi.mean(), a, b]
}

/// φ with modes 0 and 1 removed.
pub fn high_part(phi: &FourierField) -> FourierField {
    let mut h = phi.clone();
    for c in h.half_spectrum_mut().iter_mut().take(2) {
        *c = Complex64::new(0.0, 0.0);
    }
    h
}

/// Modes above `cap` only.
pub fn above_cap(phi: &FourierField, cap: usize) -> FourierField {
    let mut h = phi.clone();
    for c in h.half_spectrum_mut().iter_mut().take(cap + 1) {
        *c = Complex64::new(0.0, 0.0);
    }
    h
}

/// f(x − s).
pub fn translate(f: &FourierField, s: f64) -> FourierField {
    let mut g = f.clone();
    for (k, c) in g.half_spectrum_mut().iter_mut().enumerate() {
        *c *= Complex64::from_polar(1.0, -(k as f64) * s);
    }
    g
}

/// Base function whose (ψ′)⁴ carries mode n.
fn base(n: usize, k: usize, grid: usize) -> FourierField {
    if n == 2 || n == 4 {
        FourierField::from_cos_sin(k, grid, &[(1, 0.0, 1.0)])
    } else if n.is_multiple_of(2) {
        let m = n / 2;
        FourierField::from_cos_sin(k, grid, &[(m, 0.0, 1.0 / m as f64)])
    } else {
        FourierField::from_cos_sin(k, grid, &[(1, 0.0, 1.0), (n - 1, 0.0, 1.0 / (n - 1) as f64)])
    }
}

/// Smallest even J whose translation filter keeps only modes 0 and ±n of a function supported on `support`.
fn filter_size(n: usize, support: &[usize]) -> usize {
    let ok = |j: usize| {
        let r = |m: usize| m % j;
        if r(n) == 0 || r(2 * n) == 0 {
            return false;
        }
        support.iter().filter(|&&m| m != 0 && m != n).all(|&m| {
            let rm = r(m);
            rm != 0 && rm != r(n) && rm != (j - r(n)) % j
        })
    };
    (1..).map(|h| 2 * h).find(|&j| ok(j)).expect("large J always separates a finite support")
}

fn support(f: &FourierField) -> Vec<usize> {
    let scale = f.half_spectrum().iter().map(|c| c.norm()).fold(0.0, f64::max);
    f.half_spectrum()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 1e-15 * scale)
        .map(|(m, _)| m)
        .collect()
}

/// Writes the modes 2..=cap of φ as const − Σ w_j (ψ′(x − s_j))⁴ and adds modes 0, 1 to the affine part.
pub fn decompose(phi: &FourierField, cap: usize) -> Result<Decomposition> {
    let (k, grid) = (phi.truncation(), phi.grid_size());
    let mut affine = affine_part(phi);
    let mut terms = Vec::new();
    let top = (2..=cap.min(k)).map(|n| hypot(phi.cos_sin(n))).fold(0.0, f64::max);
    for n in 2..=cap.min(k) {
        let (a, b) = phi.cos_sin(n);
        let amp = a.hypot(b);
        if amp <= MODE_FLOOR * top || amp == 0.0 {
            continue;
        }
        if 4 * n > k {
            return Err(Error::BudgetExceeded(format!("mode {n} needs truncation ≥ {}", 4 * n)));
        }
        let theta = b.atan2(a);
        let psi = base(n, k, grid);
        let d = psi.derivative(1);
        let g = d.product(&d).product(&d.product(&d));
        let (ga, gb) = g.cos_sin(n);
        let gamp = ga.hypot(gb);
        if gamp == 0.0 {
            return Err(Error::SingularGramian(format!("base for mode {n} has no mode-{n} content")));
        }
        let theta_g = gb.atan2(ga);
        let j_count = filter_size(n, &support(&g));
        let w_total = 2.0 * amp / gamp;
        let gamma = theta - theta_g + PI;
        for j in 0..j_count {
            let s = 2.0 * PI * j as f64 / j_count as f64;
            let w = w_total * (1.0 + (n as f64 * s - gamma).cos()) / j_count as f64;
            if w > 1e-300 {
                terms.push(QuarticTerm { weight: w, psi: translate(&psi, s) });
            }
        }
        affine[0] += w_total * g.mean();
    }
    Ok(Decomposition { affine, terms })
}

fn hypot((a, b): (f64, f64)) -> f64 {
    a.hypot(b)
}

impl Decomposition {
    /// affine − Σ w_j (ψ_j′)⁴ as a field.
    pub fn evaluate(&self, k: usize, grid: usize) -> FourierField {
        let [c0, c1, c2] = self.affine;
        let mut acc = FourierField::from_cos_sin(k, grid, &[(0, c0, 0.0), (1, c1, c2)]);
        for t in &self.terms {
            let d = t.psi.derivative(1);
            acc = acc.axpy(-t.weight, &d.product(&d).product(&d.product(&d)));
        }
        acc
    }

    /// Exact tree with the weights and coefficients converted to rationals.
    pub fn to_tree(&self, cap: usize) -> Result<PhaseTree> {
        let [c0, c1, c2] = self.affine;
        let affine = PhaseTree::generator(q_from_f64(c0), q_from_f64(c1), q_from_f64(c2));
        let mut children = Vec::new();
        for t in &self.terms {
            children.push((q_from_f64(t.weight), phase_tree(&t.psi, cap)?));
        }
        Ok(PhaseTree::quartic(affine, children))
    }
}

/// PhaseTree with nonnegative weights whose value approximates φ up to mode `cap`.
pub fn phase_tree(phi: &FourierField, cap: usize) -> Result<PhaseTree> {
    let hi = high_part(phi);
    if hi.l2_norm() == 0.0 {
        let [c0, c1, c2] = affine_part(phi);
        return Ok(PhaseTree::generator(q_from_f64(c0), q_from_f64(c1), q_from_f64(c2)));
    }
    decompose(phi, cap)?.to_tree(cap)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_low_modes() {
        let phi = FourierField::from_cos_sin(
            32,
            128,
            &[(0, 0.3, 0.0), (1, -0.2, 0.1), (2, 0.05, -0.03), (3, 0.01, 0.02), (4, -0.004, 0.0)],
        );
        let d = decompose(&phi, 4).unwrap();
        assert!(d.terms.iter().all(|t| t.weight >= 0.0));
        assert!((&d.evaluate(32, 128) - &phi).l2_norm() < 1e-13);
    }

    #[test]
    fn tree_matches_field() {
        let phi = FourierField::from_cos_sin(32, 128, &[(0, 0.1, 0.0), (2, 0.0, 0.07)]);
        let tree = phase_tree(&phi, 2).unwrap();
        assert_eq!(tree.depth(), 1);
        let v = tree.evaluate().to_field(32, 128);
        assert!((&v - &phi).l2_norm() < 1e-13);
    }

    #[test]
    fn filter_separates_support() {
        assert_eq!(filter_size(2, &[0, 2, 4]), 8);
        let j = filter_size(3, &[0, 1, 2, 3, 4, 5, 6, 7, 8]);
        assert!(j.is_multiple_of(2) && j > 8);
    }
}
