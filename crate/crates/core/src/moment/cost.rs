//! Control cost versus horizon: monotonicity, convexity in 1/T, and the fitted constant M.

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostLaw {
    /// (T, ‖control‖) sorted by decreasing T.
    pub points: Vec<(f64, f64)>,
    /// ‖control‖ strictly increases as T decreases.
    pub strictly_increasing: bool,
    /// Slopes of log‖control‖ against 1/T between consecutive points.
    pub slopes: Vec<f64>,
    /// Slopes nondecreasing (log‖control‖ convex in 1/T).
    pub convex: bool,
    /// Least-squares M in log‖control‖ ≈ log M + M/T.
    pub m: f64,
}

/// Smallest admissible fitted constant.
pub const M_FLOOR: f64 = 0.1;

pub fn cost_law(points: &[(f64, f64)]) -> CostLaw {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let strictly_increasing = pts.windows(2).all(|w| w[1].1 > w[0].1);
    let slopes: Vec<f64> = pts
        .windows(2)
        .map(|w| (w[1].1.ln() - w[0].1.ln()) / (1.0 / w[1].0 - 1.0 / w[0].0))
        .collect();
    let convex = slopes.windows(2).all(|s| s[1] >= s[0] - 1e-9 * s[0].abs());
    CostLaw { m: fit_m(&pts), points: pts, strictly_increasing, slopes, convex }
}

/// Golden-section search of Σ (log c − log M − M/T)² over log M.
pub fn fit_m(points: &[(f64, f64)]) -> f64 {
    let usable: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.1 > 0.0 && p.0 > 0.0).collect();
    if usable.is_empty() {
        return M_FLOOR;
    }
    let loss = |lm: f64| {
        let m = lm.exp();
        usable.iter().map(|&(t, c)| (c.ln() - lm - m / t).powi(2)).sum::<f64>()
    };
    let (mut a, mut b) = (M_FLOOR.ln(), 1e3f64.ln());
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    for _ in 0..200 {
        if loss(c) < loss(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    (0.5 * (a + b)).exp().max(M_FLOOR)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_convex_increasing_law() {
        let m: f64 = 0.7;
        let pts: Vec<_> = [0.5, 0.35, 0.2].iter().map(|&t| (t, m * (m / t).exp())).collect();
        let law = cost_law(&pts);
        assert!(law.strictly_increasing);
        // m e^{m/T} has log linear in 1/T: slopes equal, still convex.
        assert!(law.convex);
        assert!((law.m - m).abs() < 1e-6, "{}", law.m);
    }

    #[test]
    fn detects_concave_law() {
        let law = cost_law(&[(0.5, 1.0), (0.35, 3.0), (0.2, 4.0)]);
        assert!(law.strictly_increasing);
        assert!(!law.convex);
    }
}
