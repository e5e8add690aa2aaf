//! Time-dependent control vectors p(t) ∈ R^m.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// One exponential term: Re(coeff · e^{rate (t − anchor)}).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpTerm {
    pub coeff: Complex64,
    pub rate: Complex64,
    pub anchor: f64,
}

impl ExpTerm {
    pub fn eval(&self, t: f64) -> f64 {
        (self.coeff * (self.rate * (t - self.anchor)).exp()).re
    }
}

/// A time window on which every component is a finite exponential sum.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpPiece {
    pub start: f64,
    pub end: f64,
    /// `components[i]` lists the terms of p_i on [start, end).
    pub components: Vec<Vec<ExpTerm>>,
}

/// A control law p(t) on [0, duration]; right-continuous at breakpoints, zero afterwards.
pub trait ControlLaw: Send + Sync {
    fn dim(&self) -> usize;
    fn duration(&self) -> f64;
    /// Writes p(t) into `out[..dim]`.
    fn value(&self, t: f64, out: &mut [f64]);
    /// Sorted times (including 0 and the duration) where p may be discontinuous.
    fn breakpoints(&self) -> Vec<f64>;
    /// Closed-form description as exponential sums, when available.
    fn exp_pieces(&self) -> Option<Vec<ExpPiece>> {
        None
    }
}

impl std::fmt::Debug for dyn ControlLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ControlLaw(dim {}, duration {})", self.dim(), self.duration())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    pub value: Vec<f64>,
}

/// Piecewise-constant control.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSchedule {
    pub dim: usize,
    pub segments: Vec<Segment>,
}

impl ControlSchedule {
    pub fn empty(dim: usize) -> Self {
        ControlSchedule { dim, segments: Vec::new() }
    }

    pub fn constant(value: Vec<f64>, duration: f64) -> Result<Self> {
        let mut s = Self::empty(value.len());
        s.push(duration, value)?;
        Ok(s)
    }

    pub fn zero(dim: usize, duration: f64) -> Result<Self> {
        Self::constant(vec![0.0; dim], duration)
    }

    /// Appends a segment; values shorter than `dim` are zero-padded.
    pub fn push(&mut self, duration: f64, mut value: Vec<f64>) -> Result<()> {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::ConfigError(format!("segment duration {duration} must be positive")));
        }
        if value.len() > self.dim {
            return Err(Error::ConfigError(format!(
                "segment of dimension {} exceeds schedule dimension {}",
                value.len(),
                self.dim
            )));
        }
        if value.iter().any(|v| !v.is_finite()) {
            return Err(Error::ConfigError("non-finite control value".into()));
        }
        value.resize(self.dim, 0.0);
        self.segments.push(Segment { duration, value });
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// p ∗ q: q runs after p.
    pub fn concatenate(&self, other: &ControlSchedule) -> ControlSchedule {
        let dim = self.dim.max(other.dim);
        let segments = self
            .segments
            .iter()
            .chain(other.segments.iter())
            .map(|s| {
                let mut v = s.value.clone();
                v.resize(dim, 0.0);
                Segment { duration: s.duration, value: v }
            })
            .collect();
        ControlSchedule { dim, segments }
    }

    /// Same segments with every vector widened to `dim` components.
    pub fn widened(&self, dim: usize) -> ControlSchedule {
        self.concatenate(&ControlSchedule::empty(dim))
    }

    fn starts(&self) -> Vec<f64> {
        let mut t = 0.0;
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        for s in &self.segments {
            out.push(t);
            t += s.duration;
        }
        out.push(t);
        out
    }
}

impl ControlLaw for ControlSchedule {
    fn dim(&self) -> usize {
        self.dim
    }

    fn duration(&self) -> f64 {
        self.total_duration()
    }

    fn value(&self, t: f64, out: &mut [f64]) {
        out[..self.dim].iter_mut().for_each(|v| *v = 0.0);
        let mut start = 0.0;
        for s in &self.segments {
            let end = start + s.duration;
            if t >= start && t < end {
                out[..self.dim].copy_from_slice(&s.value);
                return;
            }
            start = end;
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.starts()
    }

    fn exp_pieces(&self) -> Option<Vec<ExpPiece>> {
        let starts = self.starts();
        Some(
            self.segments
                .iter()
                .enumerate()
                .map(|(j, s)| ExpPiece {
                    start: starts[j],
                    end: starts[j + 1],
                    components: s
                        .value
                        .iter()
                        .map(|&v| {
                            vec![ExpTerm {
                                coeff: Complex64::new(v, 0.0),
                                rate: Complex64::new(0.0, 0.0),
                                anchor: starts[j],
                            }]
                        })
                        .collect(),
                })
                .collect(),
        )
    }
}

/// A control whose components are finite exponential sums on [0, duration].
#[derive(Clone, Debug, PartialEq)]
pub struct ExpSumControl {
    pub duration: f64,
    pub components: Vec<Vec<ExpTerm>>,
}

impl ExpSumControl {
    /// Imaginary part of Σ coeff e^{rate(t − anchor)} at t, per component (zero for real laws).
    pub fn imaginary_part(&self, t: f64) -> Vec<f64> {
        self.components
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .map(|e| (e.coeff * (e.rate * (t - e.anchor)).exp()).im)
                    .sum()
            })
            .collect()
    }
}

impl ControlLaw for ExpSumControl {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn duration(&self) -> f64 {
        self.duration
    }

    fn value(&self, t: f64, out: &mut [f64]) {
        for (o, terms) in out.iter_mut().zip(&self.components) {
            *o = if (0.0..self.duration).contains(&t) {
                terms.iter().map(|e| e.eval(t)).sum()
            } else {
                0.0
            };
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![0.0, self.duration]
    }

    fn exp_pieces(&self) -> Option<Vec<ExpPiece>> {
        Some(vec![ExpPiece { start: 0.0, end: self.duration, components: self.components.clone() }])
    }
}

/// Law whose components are placed at `offset..offset+inner.dim()` of a wider vector.
#[derive(Clone)]
pub struct Embedded {
    pub inner: Arc<dyn ControlLaw>,
    pub offset: usize,
    pub dim: usize,
}

impl ControlLaw for Embedded {
    fn dim(&self) -> usize {
        self.dim
    }

    fn duration(&self) -> f64 {
        self.inner.duration()
    }

    fn value(&self, t: f64, out: &mut [f64]) {
        out[..self.dim].iter_mut().for_each(|v| *v = 0.0);
        let d = self.inner.dim();
        self.inner.value(t, &mut out[self.offset..self.offset + d]);
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.inner.breakpoints()
    }

    fn exp_pieces(&self) -> Option<Vec<ExpPiece>> {
        let pieces = self.inner.exp_pieces()?;
        Some(
            pieces
                .into_iter()
                .map(|p| {
                    let mut components = vec![Vec::new(); self.dim];
                    for (i, c) in p.components.into_iter().enumerate() {
                        components[self.offset + i] = c;
                    }
                    ExpPiece { start: p.start, end: p.end, components }
                })
                .collect(),
        )
    }
}

/// Law with each component multiplied by a fixed factor.
#[derive(Clone)]
pub struct Scaled {
    pub inner: Arc<dyn ControlLaw>,
    pub factors: Vec<f64>,
}

impl ControlLaw for Scaled {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn duration(&self) -> f64 {
        self.inner.duration()
    }

    fn value(&self, t: f64, out: &mut [f64]) {
        self.inner.value(t, out);
        for (v, f) in out.iter_mut().zip(&self.factors) {
            *v *= f;
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.inner.breakpoints()
    }

    fn exp_pieces(&self) -> Option<Vec<ExpPiece>> {
        let mut pieces = self.inner.exp_pieces()?;
        for p in &mut pieces {
            for (terms, f) in p.components.iter_mut().zip(&self.factors) {
                terms.iter_mut().for_each(|e| e.coeff *= f);
            }
        }
        Some(pieces)
    }
}

/// Laws run one after another.
#[derive(Clone, Default)]
pub struct Concatenation {
    parts: Vec<Arc<dyn ControlLaw>>,
}

impl Concatenation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn then(mut self, law: Arc<dyn ControlLaw>) -> Self {
        self.parts.push(law);
        self
    }

    fn offsets(&self) -> Vec<f64> {
        let mut t = 0.0;
        let mut out = vec![0.0];
        for p in &self.parts {
            t += p.duration();
            out.push(t);
        }
        out
    }
}

impl ControlLaw for Concatenation {
    fn dim(&self) -> usize {
        self.parts.iter().map(|p| p.dim()).max().unwrap_or(0)
    }

    fn duration(&self) -> f64 {
        self.parts.iter().map(|p| p.duration()).sum()
    }

    fn value(&self, t: f64, out: &mut [f64]) {
        let dim = self.dim();
        out[..dim].iter_mut().for_each(|v| *v = 0.0);
        let offs = self.offsets();
        for (j, p) in self.parts.iter().enumerate() {
            if t >= offs[j] && t < offs[j + 1] {
                p.value(t - offs[j], out);
                return;
            }
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        let offs = self.offsets();
        let mut out: Vec<f64> = Vec::new();
        for (j, p) in self.parts.iter().enumerate() {
            out.extend(p.breakpoints().into_iter().map(|b| b + offs[j]));
        }
        out.push(offs[self.parts.len()]);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn exp_pieces(&self) -> Option<Vec<ExpPiece>> {
        let offs = self.offsets();
        let dim = self.dim();
        let mut out = Vec::new();
        for (j, p) in self.parts.iter().enumerate() {
            for mut piece in p.exp_pieces()? {
                piece.start += offs[j];
                piece.end += offs[j];
                piece.components.resize(dim, Vec::new());
                for terms in &mut piece.components {
                    for e in terms.iter_mut() {
                        e.anchor += offs[j];
                    }
                }
                out.push(piece);
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concatenation_identity_and_duration() {
        let p = ControlSchedule::constant(vec![1.0, 2.0], 0.1).unwrap();
        let q = ControlSchedule::constant(vec![3.0, 4.0], 0.2).unwrap();
        assert_eq!(p.concatenate(&ControlSchedule::empty(2)), p);
        assert!((p.concatenate(&q).total_duration() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn schedule_is_right_continuous() {
        let mut s = ControlSchedule::empty(1);
        s.push(0.5, vec![1.0]).unwrap();
        s.push(0.5, vec![2.0]).unwrap();
        let mut v = [0.0];
        s.value(0.5, &mut v);
        assert_eq!(v[0], 2.0);
        s.value(0.4999, &mut v);
        assert_eq!(v[0], 1.0);
        s.value(1.0, &mut v);
        assert_eq!(v[0], 0.0);
    }

    #[test]
    fn rejects_nonpositive_durations() {
        assert!(ControlSchedule::constant(vec![1.0], 0.0).is_err());
        assert!(ControlSchedule::constant(vec![1.0], -1.0).is_err());
    }

    #[test]
    fn concatenation_law_matches_schedule_concat() {
        let p = ControlSchedule::constant(vec![1.0], 0.25).unwrap();
        let q = ControlSchedule::constant(vec![-2.0], 0.5).unwrap();
        let c = Concatenation::new().then(Arc::new(p.clone())).then(Arc::new(q.clone()));
        let s = p.concatenate(&q);
        let (mut a, mut b) = ([0.0], [0.0]);
        for t in [0.0, 0.1, 0.25, 0.6, 0.75, 0.8] {
            c.value(t, &mut a);
            s.value(t, &mut b);
            assert_eq!(a, b);
        }
        assert_eq!(c.breakpoints(), s.breakpoints());
    }
}
