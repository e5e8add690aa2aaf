//! Exact spans of trigonometric polynomials in reduced row-echelon form.

use super::trig::{Q, TrigPolynomial};
use crate::error::{Error, Result};
use num_traits::{One, Zero};

/// Basis rows over (1, sin x, cos x, …, sin cap·x, cos cap·x), kept in RREF.
#[derive(Clone, Debug, PartialEq)]
pub struct SpanBasis {
    cap: usize,
    rows: Vec<Vec<Q>>,
    pivots: Vec<usize>,
}

/// Outcome of a membership query.
#[derive(Clone, Debug, PartialEq)]
pub struct Membership {
    pub member: bool,
    /// What remains after elimination (zero iff member).
    pub residual: TrigPolynomial,
}

impl SpanBasis {
    pub fn new(cap: usize) -> Self {
        SpanBasis { cap, rows: Vec::new(), pivots: Vec::new() }
    }

    /// H₀ = span{1, cos x, sin x}.
    pub fn h0(cap: usize) -> Self {
        let mut b = Self::new(cap.max(1));
        for p in [TrigPolynomial::constant(Q::one()), TrigPolynomial::cos(1), TrigPolynomial::sin(1)] {
            b.insert(&p).expect("frequency 1 within cap");
        }
        b
    }

    pub fn from_polys(cap: usize, polys: &[TrigPolynomial]) -> Result<Self> {
        let mut b = Self::new(cap);
        for p in polys {
            b.insert(p)?;
        }
        Ok(b)
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn elements(&self) -> Vec<TrigPolynomial> {
        self.rows.iter().map(|r| TrigPolynomial::from_vector(r)).collect()
    }

    fn reduce(&self, mut v: Vec<Q>) -> Vec<Q> {
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if !v[p].is_zero() {
                let f = v[p].clone();
                for (x, r) in v.iter_mut().zip(row) {
                    if !r.is_zero() {
                        *x -= &f * r;
                    }
                }
            }
        }
        v
    }

    fn check_cap(&self, p: &TrigPolynomial) -> Result<()> {
        if p.max_freq() > self.cap {
            return Err(Error::BudgetExceeded(format!(
                "frequency {} exceeds cap {}",
                p.max_freq(),
                self.cap
            )));
        }
        Ok(())
    }

    /// Adds p to the span; returns whether the dimension grew.
    pub fn insert(&mut self, p: &TrigPolynomial) -> Result<bool> {
        self.check_cap(p)?;
        let mut v = self.reduce(p.to_vector(self.cap));
        let Some(piv) = v.iter().position(|c| !c.is_zero()) else {
            return Ok(false);
        };
        let inv = Q::one() / &v[piv];
        for x in v.iter_mut() {
            *x *= &inv;
        }
        for row in self.rows.iter_mut() {
            if !row[piv].is_zero() {
                let f = row[piv].clone();
                for (x, r) in row.iter_mut().zip(&v) {
                    if !r.is_zero() {
                        *x -= &f * r;
                    }
                }
            }
        }
        let at = self.pivots.iter().position(|&p| p > piv).unwrap_or(self.pivots.len());
        self.rows.insert(at, v);
        self.pivots.insert(at, piv);
        Ok(true)
    }

    pub fn membership(&self, p: &TrigPolynomial) -> Result<Membership> {
        self.check_cap(p)?;
        let residual = TrigPolynomial::from_vector(&self.reduce(p.to_vector(self.cap)));
        Ok(Membership { member: residual.is_zero(), residual })
    }

    /// span(self) ⊆ span(other).
    pub fn is_subspace_of(&self, other: &SpanBasis) -> Result<bool> {
        for e in self.elements() {
            if !other.membership(&e)?.member {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// One step of the chain: G plus (b′)⁴ and ((b_i ± b_j)′)⁴ over basis pairs, reduced exactly.
pub fn generate_next(g: &SpanBasis, cap: usize, max_terms: usize) -> Result<SpanBasis> {
    if g.dim() == 0 {
        return Ok(SpanBasis::new(cap));
    }
    let elems = g.elements();
    let mut out = SpanBasis::new(cap.max(g.cap()));
    for e in &elems {
        out.insert(e)?;
    }
    let ders: Vec<TrigPolynomial> = elems.iter().map(TrigPolynomial::derivative).collect();
    let mut push = |p: TrigPolynomial| -> Result<()> {
        if p.is_zero() {
            return Ok(());
        }
        out.insert(&p)?;
        if out.dim() > max_terms {
            return Err(Error::BudgetExceeded(format!("span dimension above {max_terms}")));
        }
        Ok(())
    };
    for (i, di) in ders.iter().enumerate() {
        push(di.pow(4))?;
        for dj in &ders[i + 1..] {
            push(di.add(dj).pow(4))?;
            push(di.sub(dj).pow(4))?;
        }
    }
    Ok(out)
}

/// H₀ ⊆ H₁ ⊆ … ⊆ H_depth.
pub fn chain(depth: usize, cap: usize, max_terms: usize) -> Result<Vec<SpanBasis>> {
    let mut out = vec![SpanBasis::h0(cap)];
    for _ in 0..depth {
        let next = generate_next(out.last().expect("nonempty"), cap, max_terms)?;
        out.push(next);
    }
    Ok(out)
}
