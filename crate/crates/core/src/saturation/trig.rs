//! Exact trigonometric polynomials Σ a_k cos kx + b_k sin kx with rational coefficients.

use crate::field::FourierField;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Exact conversion of a finite double.
pub fn q_from_f64(x: f64) -> Q {
    Q::from_float(x).unwrap_or_else(Q::zero)
}

/// `terms[k] = (a_k, b_k)`; trailing zero frequencies are trimmed and b₀ = 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct TrigPolynomial {
    terms: Vec<(Q, Q)>,
}

impl TrigPolynomial {
    pub fn zero() -> Self {
        TrigPolynomial { terms: Vec::new() }
    }

    pub fn constant(c: Q) -> Self {
        Self::from_terms(vec![(c, Q::zero())])
    }

    pub fn cos(k: usize) -> Self {
        Self::monomial(k, Q::one(), Q::zero())
    }

    pub fn sin(k: usize) -> Self {
        Self::monomial(k, Q::zero(), Q::one())
    }

    pub fn monomial(k: usize, a: Q, b: Q) -> Self {
        let mut terms = vec![(Q::zero(), Q::zero()); k + 1];
        terms[k] = (a, b);
        Self::from_terms(terms)
    }

    pub fn from_terms(mut terms: Vec<(Q, Q)>) -> Self {
        if let Some(t) = terms.first_mut() {
            t.1 = Q::zero();
        }
        while terms.last().is_some_and(|(a, b)| a.is_zero() && b.is_zero()) {
            terms.pop();
        }
        TrigPolynomial { terms }
    }

    /// (a_k, b_k), zero beyond the support.
    pub fn coeff(&self, k: usize) -> (Q, Q) {
        self.terms.get(k).cloned().unwrap_or_else(|| (Q::zero(), Q::zero()))
    }

    pub fn terms(&self) -> &[(Q, Q)] {
        &self.terms
    }

    /// Highest frequency present (0 for constants and zero).
    pub fn max_freq(&self) -> usize {
        self.terms.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.terms.len().max(o.terms.len());
        Self::from_terms(
            (0..n)
                .map(|k| {
                    let (a, b) = self.coeff(k);
                    let (c, d) = o.coeff(k);
                    (a + c, b + d)
                })
                .collect(),
        )
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&-Q::one()))
    }

    pub fn scale(&self, s: &Q) -> Self {
        if s.is_zero() {
            return Self::zero();
        }
        Self::from_terms(self.terms.iter().map(|(a, b)| (a * s, b * s)).collect())
    }

    /// d/dx: a cos kx + b sin kx ↦ k b cos kx − k a sin kx.
    pub fn derivative(&self) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .enumerate()
                .map(|(k, (a, b))| {
                    let kq = qi(k as i64);
                    (&kq * b, -(&kq * a))
                })
                .collect(),
        )
    }

    /// Product by the product-to-sum formulas.
    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let n = self.max_freq() + o.max_freq();
        let mut out = vec![(Q::zero(), Q::zero()); n + 1];
        let half = q(1, 2);
        for (j, (a1, b1)) in self.terms.iter().enumerate() {
            if a1.is_zero() && b1.is_zero() {
                continue;
            }
            for (k, (a2, b2)) in o.terms.iter().enumerate() {
                if a2.is_zero() && b2.is_zero() {
                    continue;
                }
                let (s, d) = (j + k, j.abs_diff(k));
                // sign of sin((j − k)x) relative to sin(|j − k| x)
                let sg = if j >= k { Q::one() } else { -Q::one() };
                // cos j cos k = [cos(j−k) + cos(j+k)]/2
                let cc = a1 * a2 * &half;
                // sin j sin k = [cos(j−k) − cos(j+k)]/2
                let ss = b1 * b2 * &half;
                // sin j cos k = [sin(j+k) + sin(j−k)]/2
                let sc = b1 * a2 * &half;
                // cos j sin k = [sin(j+k) − sin(j−k)]/2
                let cs = a1 * b2 * &half;
                out[d].0 += &cc + &ss;
                out[s].0 += &cc - &ss;
                out[s].1 += &sc + &cs;
                out[d].1 += (&sc - &cs) * &sg;
            }
        }
        Self::from_terms(out)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::constant(Q::one());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .enumerate()
            .map(|(k, (a, b))| {
                let kx = k as f64 * x;
                a.to_f64().unwrap_or(0.0) * kx.cos() + b.to_f64().unwrap_or(0.0) * kx.sin()
            })
            .sum()
    }

    /// Floating-point field with truncation K (higher frequencies dropped).
    pub fn to_field(&self, k: usize, grid: usize) -> FourierField {
        let t: Vec<(usize, f64, f64)> = self
            .terms
            .iter()
            .enumerate()
            .map(|(n, (a, b))| (n, a.to_f64().unwrap_or(0.0), b.to_f64().unwrap_or(0.0)))
            .collect();
        FourierField::from_cos_sin(k, grid, &t)
    }

    /// Coefficient vector over (1, sin x, cos x, sin 2x, cos 2x, …) up to `cap`.
    pub fn to_vector(&self, cap: usize) -> Vec<Q> {
        let mut v = vec![Q::zero(); 2 * cap + 1];
        for (k, (a, b)) in self.terms.iter().enumerate().take(cap + 1) {
            if k == 0 {
                v[0] = a.clone();
            } else {
                v[2 * k - 1] = b.clone();
                v[2 * k] = a.clone();
            }
        }
        v
    }

    pub fn from_vector(v: &[Q]) -> Self {
        let cap = v.len() / 2;
        let mut terms = vec![(Q::zero(), Q::zero()); cap + 1];
        for (i, c) in v.iter().enumerate() {
            if i == 0 {
                terms[0].0 = c.clone();
            } else {
                let k = i.div_ceil(2);
                if i % 2 == 1 {
                    terms[k].1 = c.clone();
                } else {
                    terms[k].0 = c.clone();
                }
            }
        }
        Self::from_terms(terms)
    }

    /// Largest |coefficient| as a double.
    pub fn max_abs(&self) -> f64 {
        self.terms
            .iter()
            .flat_map(|(a, b)| [a.abs(), b.abs()])
            .map(|c| c.to_f64().unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for TrigPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (k, (a, b)) in self.terms.iter().enumerate() {
            if !a.is_zero() {
                parts.push(if k == 0 { format!("{a}") } else { format!("{a}*cos({k}x)") });
            }
            if !b.is_zero() {
                parts.push(format!("{b}*sin({k}x)"));
            }
        }
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_follow_trig_identities() {
        let c1 = TrigPolynomial::cos(1);
        let s1 = TrigPolynomial::sin(1);
        let want = TrigPolynomial::constant(q(1, 2)).add(&TrigPolynomial::cos(2).scale(&q(1, 2)));
        assert_eq!(c1.mul(&c1), want);
        assert_eq!(s1.mul(&c1), TrigPolynomial::sin(2).scale(&q(1, 2)));
        // sin x · sin 3x = [cos 2x − cos 4x]/2
        let p = s1.mul(&TrigPolynomial::sin(3));
        assert_eq!(p, TrigPolynomial::cos(2).sub(&TrigPolynomial::cos(4)).scale(&q(1, 2)));
        // cos x · sin 3x = [sin 4x + sin 2x]/2
        let p = c1.mul(&TrigPolynomial::sin(3));
        assert_eq!(p, TrigPolynomial::sin(4).add(&TrigPolynomial::sin(2)).scale(&q(1, 2)));
    }

    #[test]
    fn derivative_and_fourth_power() {
        assert_eq!(TrigPolynomial::cos(1).derivative(), TrigPolynomial::sin(1).scale(&qi(-1)));
        // cos⁴x = 3/8 + cos 2x/2 + cos 4x/8
        let want = TrigPolynomial::constant(q(3, 8))
            .add(&TrigPolynomial::cos(2).scale(&q(1, 2)))
            .add(&TrigPolynomial::cos(4).scale(&q(1, 8)));
        assert_eq!(TrigPolynomial::cos(1).pow(4), want);
    }

    #[test]
    fn vector_round_trip() {
        let p = TrigPolynomial::from_terms(vec![(qi(1), qi(0)), (q(1, 3), qi(2)), (qi(0), q(-5, 7))]);
        assert_eq!(TrigPolynomial::from_vector(&p.to_vector(4)), p);
        assert!((p.eval(0.3) - (1.0 + (0.3f64).cos() / 3.0 + 2.0 * (0.3f64).sin() - 5.0 / 7.0 * (0.6f64).sin())).abs() < 1e-14);
    }
}
