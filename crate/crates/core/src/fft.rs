//! Thin wrappers over rustfft for half-spectrum storage of real functions.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

struct Plans {
    planner: FftPlanner<f64>,
    forward: HashMap<usize, Arc<dyn Fft<f64>>>,
    inverse: HashMap<usize, Arc<dyn Fft<f64>>>,
}

thread_local! {
    static PLANS: RefCell<Plans> = RefCell::new(Plans {
        planner: FftPlanner::new(),
        forward: HashMap::new(),
        inverse: HashMap::new(),
    });
}

fn plan(m: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|p| {
        let mut p = p.borrow_mut();
        let Plans { planner, forward, inverse: inv } = &mut *p;
        let table = if inverse { inv } else { forward };
        table
            .entry(m)
            .or_insert_with(|| {
                if inverse {
                    planner.plan_fft_inverse(m)
                } else {
                    planner.plan_fft_forward(m)
                }
            })
            .clone()
    })
}

/// Smallest 5-smooth integer that is at least `min`.
pub fn smooth_size(min: usize) -> usize {
    let mut n = min.max(1);
    loop {
        let mut r = n;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return n;
        }
        n += 1;
    }
}

/// Grid values u(2πj/m) of the real function with half spectrum `half` (index k = 0..len).
pub fn synthesize(half: &[Complex64], m: usize) -> Vec<f64> {
    let kmax = half.len() - 1;
    assert!(m > 2 * kmax, "grid of {m} points cannot hold modes up to {kmax}");
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    buf[0] = Complex64::new(half[0].re, 0.0);
    for k in 1..=kmax {
        buf[k] = half[k];
        buf[m - k] = half[k].conj();
    }
    plan(m, true).process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

/// Half spectrum (k = 0..m/2) of real grid values, normalised so that u = Σ û_k e^{ikx}.
pub fn analyze(values: &[f64]) -> Vec<Complex64> {
    let m = values.len();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(m, false).process(&mut buf);
    let scale = 1.0 / m as f64;
    let top = m / 2;
    let mut out: Vec<Complex64> = buf[..=top].iter().map(|c| c * scale).collect();
    out[0].im = 0.0;
    if m.is_multiple_of(2) {
        // The Nyquist bin is shared between ±m/2; keep half of it on each side.
        out[top] = Complex64::new(out[top].re * 0.5, 0.0);
    }
    out
}
