//! Extended-precision complex arithmetic and dense solves on top of `astro-float`.

use crate::error::{Error, Result};
use astro_float::{BigFloat, Consts, RoundingMode};
use num_complex::Complex64;
use std::cell::RefCell;

const RM: RoundingMode = RoundingMode::ToEven;

/// Smallest significand accepted by the precision policy.
pub const MIN_BITS: usize = 128;

/// Working precision plus the cached constants needed by exp/sin/cos.
pub struct XCtx {
    pub bits: usize,
    consts: RefCell<Consts>,
}

/// Complex number with `BigFloat` parts.
#[derive(Clone, Debug)]
pub struct XC {
    pub re: BigFloat,
    pub im: BigFloat,
}

impl XCtx {
    pub fn new(bits: usize) -> Result<Self> {
        if bits < MIN_BITS {
            return Err(Error::ConfigError(format!("precision {bits} bits below minimum {MIN_BITS}")));
        }
        let consts = Consts::new().map_err(|e| Error::IllConditioned(format!("constant cache: {e:?}")))?;
        Ok(XCtx { bits, consts: RefCell::new(consts) })
    }

    pub fn real(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.bits)
    }

    pub fn c(&self, z: Complex64) -> XC {
        XC { re: self.real(z.re), im: self.real(z.im) }
    }

    pub fn zero(&self) -> XC {
        self.c(Complex64::new(0.0, 0.0))
    }

    pub fn one(&self) -> XC {
        self.c(Complex64::new(1.0, 0.0))
    }

    pub fn add(&self, a: &XC, b: &XC) -> XC {
        XC { re: a.re.add(&b.re, self.bits, RM), im: a.im.add(&b.im, self.bits, RM) }
    }

    pub fn sub(&self, a: &XC, b: &XC) -> XC {
        XC { re: a.re.sub(&b.re, self.bits, RM), im: a.im.sub(&b.im, self.bits, RM) }
    }

    pub fn mul(&self, a: &XC, b: &XC) -> XC {
        let p = self.bits;
        let re = a.re.mul(&b.re, p, RM).sub(&a.im.mul(&b.im, p, RM), p, RM);
        let im = a.re.mul(&b.im, p, RM).add(&a.im.mul(&b.re, p, RM), p, RM);
        XC { re, im }
    }

    pub fn conj(&self, a: &XC) -> XC {
        XC { re: a.re.clone(), im: a.im.neg() }
    }

    pub fn neg(&self, a: &XC) -> XC {
        XC { re: a.re.neg(), im: a.im.neg() }
    }

    pub fn norm_sqr(&self, a: &XC) -> BigFloat {
        let p = self.bits;
        a.re.mul(&a.re, p, RM).add(&a.im.mul(&a.im, p, RM), p, RM)
    }

    pub fn div(&self, a: &XC, b: &XC) -> XC {
        let p = self.bits;
        let d = self.norm_sqr(b);
        let num = self.mul(a, &self.conj(b));
        XC { re: num.re.div(&d, p, RM), im: num.im.div(&d, p, RM) }
    }

    pub fn exp(&self, a: &XC) -> XC {
        let p = self.bits;
        let mut cc = self.consts.borrow_mut();
        let m = a.re.exp(p, RM, &mut cc);
        if a.im.is_zero() {
            return XC { re: m, im: self.real(0.0) };
        }
        let c = a.im.cos(p, RM, &mut cc);
        let s = a.im.sin(p, RM, &mut cc);
        XC { re: m.mul(&c, p, RM), im: m.mul(&s, p, RM) }
    }

    /// (1 − e^{−zT})/z, with the z → 0 limit T.
    pub fn gram_kernel(&self, z: &XC, t: f64) -> XC {
        if z.re.is_zero() && z.im.is_zero() {
            return self.c(Complex64::new(t, 0.0));
        }
        let tt = self.c(Complex64::new(-t, 0.0));
        let e = self.exp(&self.mul(z, &tt));
        self.div(&self.sub(&self.one(), &e), z)
    }

    pub fn to_f64(&self, x: &BigFloat) -> f64 {
        if x.is_zero() {
            return 0.0;
        }
        format!("{x}").parse::<f64>().unwrap_or(f64::NAN)
    }

    pub fn to_c64(&self, a: &XC) -> Complex64 {
        Complex64::new(self.to_f64(&a.re), self.to_f64(&a.im))
    }

    fn magnitude(&self, a: &XC) -> BigFloat {
        let p = self.bits;
        abs(&a.re).add(&abs(&a.im), p, RM)
    }

    /// Solves A X = B by Gaussian elimination with partial pivoting; A is n×n, B is n×m.
    pub fn solve(&self, a: &[Vec<XC>], b: &[Vec<XC>]) -> Result<Vec<Vec<XC>>> {
        let n = a.len();
        let m = b.first().map_or(0, |r| r.len());
        let mut aug: Vec<Vec<XC>> = a
            .iter()
            .zip(b)
            .map(|(ra, rb)| ra.iter().chain(rb.iter()).cloned().collect())
            .collect();
        for col in 0..n {
            let mut piv = col;
            let mut best = self.magnitude(&aug[col][col]);
            for (r, row) in aug.iter().enumerate().skip(col + 1) {
                let mag = self.magnitude(&row[col]);
                if mag.cmp(&best).is_some_and(|c| c > 0) {
                    best = mag;
                    piv = r;
                }
            }
            if best.is_zero() {
                return Err(Error::IllConditioned(format!("zero pivot in column {col}")));
            }
            aug.swap(col, piv);
            let pivot = aug[col][col].clone();
            for r in col + 1..n {
                let f = self.div(&aug[r][col], &pivot);
                if f.re.is_zero() && f.im.is_zero() {
                    continue;
                }
                for c in col..n + m {
                    let t = self.mul(&f, &aug[col][c]);
                    aug[r][c] = self.sub(&aug[r][c], &t);
                }
            }
        }
        let mut x = vec![vec![self.zero(); m]; n];
        for r in (0..n).rev() {
            for c in 0..m {
                let mut acc = aug[r][n + c].clone();
                for j in r + 1..n {
                    acc = self.sub(&acc, &self.mul(&aug[r][j], &x[j][c]));
                }
                x[r][c] = self.div(&acc, &aug[r][r]);
            }
        }
        Ok(x)
    }
}

fn abs(x: &BigFloat) -> BigFloat {
    if x.is_negative() {
        x.neg()
    } else {
        x.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_exp_matches_f64() {
        let x = XCtx::new(256).unwrap();
        let z = Complex64::new(-1.25, 2.5);
        let e = x.to_c64(&x.exp(&x.c(z)));
        assert!((e - z.exp()).norm() < 1e-15);
    }

    #[test]
    fn solves_small_complex_system() {
        let x = XCtx::new(192).unwrap();
        let a = vec![
            vec![x.c(Complex64::new(2.0, 1.0)), x.c(Complex64::new(1.0, 0.0))],
            vec![x.c(Complex64::new(0.0, 1.0)), x.c(Complex64::new(3.0, -1.0))],
        ];
        let want = [Complex64::new(1.0, -2.0), Complex64::new(0.5, 0.25)];
        let b: Vec<Vec<XC>> = (0..2)
            .map(|i| {
                let mut s = Complex64::new(0.0, 0.0);
                for j in 0..2 {
                    s += x.to_c64(&a[i][j]) * want[j];
                }
                vec![x.c(s)]
            })
            .collect();
        let sol = x.solve(&a, &b).unwrap();
        for j in 0..2 {
            assert!((x.to_c64(&sol[j][0]) - want[j]).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_low_precision() {
        assert!(XCtx::new(64).is_err());
    }
}
