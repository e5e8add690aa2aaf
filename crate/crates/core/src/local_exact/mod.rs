//! Local exact controllability to constant states by a source-term fixed point.

mod pipeline;

pub use pipeline::{global_to_constant, GlobalConfig, GlobalReport};

use crate::dynamics::{
    cubic_profile, integrate, quartic_profile, Embedded, ExpSumControl, FlowConfig, LinearModel, LinearizedSystem,
    Model, ProfileSet, SampledSource,
};
use crate::error::{Error, Result};
use crate::field::FourierField;
use crate::moment::{cost_law, gramian_for_terminal, MomentSolver, PrecisionPolicy, DEFAULT_THETA};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Weights below this are treated as zero when forming weighted norms.
pub const WEIGHT_FLOOR: f64 = 1e-150;

/// ρ₀(t) = e^{−pM/((q−1)(T−t))} and ρ_F(t) = e^{−(1+p)q²M/((q−1)(T−t))}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightPair {
    pub q: f64,
    pub p: f64,
    pub m: f64,
    pub t: f64,
}

impl WeightPair {
    pub fn new(q: f64, p: f64, m: f64, t: f64) -> Result<Self> {
        if !(q > 1.0 && q < std::f64::consts::SQRT_2) {
            return Err(Error::ConfigError(format!("weight q = {q} must lie in (1, √2)")));
        }
        let p_min = q * q / (2.0 - q * q);
        if !(p > p_min) {
            return Err(Error::ConfigError(format!("weight p = {p} must exceed {p_min:.6}")));
        }
        if !(m > 0.0 && t > 0.0) {
            return Err(Error::ConfigError("weight constants M and T must be positive".into()));
        }
        Ok(WeightPair { q, p, m, t })
    }

    fn exponent(&self, c: f64, s: f64) -> f64 {
        let gap = self.t - s;
        if gap <= 0.0 {
            f64::NEG_INFINITY
        } else {
            -c * self.m / ((self.q - 1.0) * gap)
        }
    }

    pub fn rho0(&self, s: f64) -> f64 {
        self.exponent(self.p, s).exp()
    }

    pub fn rho_f(&self, s: f64) -> f64 {
        self.exponent((1.0 + self.p) * self.q * self.q, s).exp()
    }

    /// (max ρ₀²/ρ_F, max ρ₀³/ρ_F) over n + 1 uniform points, taking the limit 0 at t = T.
    pub fn ratio_maxima(&self, n: usize) -> (f64, f64) {
        let c_f = (1.0 + self.p) * self.q * self.q;
        let (mut a, mut b) = (0.0f64, 0.0f64);
        for i in 0..=n {
            let s = self.t * i as f64 / n.max(1) as f64;
            if s >= self.t {
                continue;
            }
            a = a.max((self.exponent(2.0 * self.p - c_f, s)).exp());
            b = b.max((self.exponent(3.0 * self.p - c_f, s)).exp());
        }
        (a, b)
    }
}

/// Nonlinear remainder of the equation for v = u − Φ.
pub fn nonlinear_source(v: &FourierField, phi: f64, model: Model) -> FourierField {
    match model {
        Model::Ch => {
            // (3Φv² + v³)'' = 6v(v')² + 6Φ(v')² + 3v²v'' + 6Φvv''
            let d1 = v.derivative(1);
            let d2 = v.derivative(2);
            let d1sq = d1.product(&d1);
            let vd2 = v.product(&d2);
            let a = v.product(&d1sq).scale(6.0);
            let b = d1sq.scale(6.0 * phi);
            let c = v.product(&vd2).scale(3.0);
            let d = vd2.scale(6.0 * phi);
            &(&(&a + &b) + &c) + &d
        }
        Model::Ks => {
            let mut n = v.product(&v.derivative(1)).scale(-1.0);
            n.half_spectrum_mut()[0] = num_complex::Complex64::new(0.0, 0.0);
            n
        }
    }
}

/// (Σ p_i μ_i) v.
pub fn bilinear_remainder(v: &FourierField, profiles: &[FourierField], p: &[f64]) -> FourierField {
    let mut q = FourierField::zeros(v.truncation(), v.grid_size());
    for (mu, &c) in profiles.iter().zip(p) {
        if c != 0.0 {
            q = q.axpy(c, &mu.with_truncation(v.truncation()));
        }
    }
    q.product(v)
}

/// Which linear null-control solver each sweep uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinearSolverKind {
    Moment,
    Gramian,
}

impl std::str::FromStr for LinearSolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "moment" => Ok(LinearSolverKind::Moment),
            "gramian" => Ok(LinearSolverKind::Gramian),
            o => Err(Error::ConfigError(format!("unknown linear solver '{o}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalConfig {
    pub model: Model,
    pub phi: f64,
    pub t: f64,
    /// Exponents in the linear control problem (odd for KS).
    pub count: usize,
    pub k: usize,
    pub grid: usize,
    pub solver: LinearSolverKind,
    pub rtol: f64,
    pub atol: f64,
    pub max_sweeps: usize,
    /// Uniform samples of the source on [0, T].
    pub uniform_points: usize,
    /// Geometric clustering factor of extra samples near t = 0 and t = T.
    pub cluster_ratio: f64,
    pub q: f64,
    pub p: f64,
    /// Cost constant of the weights; fitted from control costs when absent.
    pub m: Option<f64>,
    pub policy: PrecisionPolicy,
    pub flow: FlowConfig,
}

impl LocalConfig {
    pub fn new(model: Model, phi: f64, t: f64) -> Self {
        LocalConfig {
            model,
            phi,
            t,
            count: match model {
                Model::Ch => 8,
                Model::Ks => 5,
            },
            k: 32,
            grid: 128,
            solver: LinearSolverKind::Moment,
            rtol: 1e-10,
            atol: 1e-16,
            max_sweeps: 30,
            uniform_points: 200,
            cluster_ratio: 0.85,
            q: 1.2,
            p: 3.0,
            m: None,
            policy: PrecisionPolicy::default(),
            flow: FlowConfig::default().with_tolerance(1e-11, 1e-15),
        }
    }

    fn linear_model(&self) -> LinearModel {
        match self.model {
            Model::Ch => LinearModel::ChLin,
            Model::Ks => LinearModel::KsLin,
        }
    }

    /// μ₄, μ₅ for CH; μ₄ for KS.
    pub fn extra_profiles(&self) -> Vec<FourierField> {
        match self.model {
            Model::Ch => vec![quartic_profile(self.k, self.grid), cubic_profile(self.k, self.grid)],
            Model::Ks => vec![quartic_profile(self.k, self.grid)],
        }
    }

    /// Sample times: uniform points plus geometric clusters at both ends.
    pub fn time_grid(&self) -> Vec<f64> {
        let t = self.t;
        let mut times: Vec<f64> = (0..=self.uniform_points.max(1))
            .map(|i| t * i as f64 / self.uniform_points.max(1) as f64)
            .collect();
        let h = t / self.uniform_points.max(1) as f64;
        let mut d = h * self.cluster_ratio;
        while d > t * 1e-9 {
            times.push(d);
            times.push(t - d);
            d *= self.cluster_ratio;
        }
        times.sort_by(f64::total_cmp);
        times.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * t);
        times
    }
}

/// Linear control machinery shared by all sweeps of one instance.
pub struct LocalProblem {
    pub cfg: LocalConfig,
    pub system: LinearizedSystem,
    pub times: Vec<f64>,
    moment: Option<MomentSolver>,
}

/// Result of one source-driven linear solve.
#[derive(Clone, Debug)]
pub struct SourceSolve {
    pub law: ExpSumControl,
    pub trajectory: Vec<FourierField>,
    /// Terminal state of the free flow with the source and no control.
    pub free_terminal: FourierField,
    pub terminal: FourierField,
    pub control_norm: f64,
}

impl LocalProblem {
    pub fn new(cfg: LocalConfig) -> Result<Self> {
        if !(cfg.phi > 0.0) || !(cfg.t > 0.0) {
            return Err(Error::ConfigError("local exact control needs Φ > 0 and T > 0".into()));
        }
        let profiles = cfg.extra_profiles();
        let system = LinearizedSystem::new(cfg.linear_model(), cfg.phi, profiles.clone())?;
        let moment = match cfg.solver {
            LinearSolverKind::Moment => Some(match cfg.model {
                Model::Ch => {
                    MomentSolver::new_ch(cfg.phi, &profiles[0], &profiles[1], cfg.t, cfg.count, DEFAULT_THETA, &cfg.policy)?
                }
                Model::Ks => MomentSolver::new_ks(cfg.phi, &profiles[0], cfg.t, cfg.count, DEFAULT_THETA, &cfg.policy)?,
            }),
            LinearSolverKind::Gramian => None,
        };
        let times = cfg.time_grid();
        Ok(LocalProblem { cfg, system, times, moment })
    }

    fn control_for(&self, z: &FourierField) -> Result<(ExpSumControl, f64)> {
        match &self.moment {
            Some(m) => {
                let s = m.control_for_terminal(z)?;
                Ok((s.law, s.norms.iter().sum()))
            }
            None => {
                let g = gramian_for_terminal(&self.system, z, self.cfg.t, self.cfg.count, &self.cfg.policy)?;
                Ok((g.law, g.norms.iter().sum()))
            }
        }
    }

    /// Source sampled on the problem's time grid.
    pub fn sample(&self, f: impl Fn(f64) -> FourierField) -> Result<SampledSource> {
        SampledSource::new(self.times.clone(), self.times.iter().map(|&t| f(t)).collect())
    }

    pub fn zero_source(&self) -> SampledSource {
        SampledSource {
            times: self.times.clone(),
            fields: vec![FourierField::zeros(self.cfg.k, self.cfg.grid); self.times.len()],
        }
    }

    /// Steers v' = Av + B p + f from v0 so that the controlled modes of v(T) vanish.
    pub fn controlled_solve_with_source(&self, v0: &FourierField, f: &SampledSource) -> Result<SourceSolve> {
        let v0 = v0.with_truncation(self.cfg.k);
        let free_terminal = self.system.flow(&v0, None, Some(f), self.cfg.t)?;
        let (law, control_norm) = self.control_for(&free_terminal)?;
        let trajectory = self.system.trajectory(&v0, Some(&law), Some(f), &self.times)?;
        let terminal = trajectory.last().expect("nonempty grid").clone();
        Ok(SourceSolve { law, trajectory, free_terminal, terminal, control_norm })
    }

    /// F(v(t)) + (p(t)·μ) v(t) on the time grid.
    pub fn next_source(&self, sol: &SourceSolve) -> Result<SampledSource> {
        let profiles = &self.system.profiles;
        let fields = self
            .times
            .iter()
            .zip(&sol.trajectory)
            .map(|(&t, v)| {
                let p = law_at(&sol.law, t);
                &nonlinear_source(v, self.cfg.phi, self.cfg.model) + &bilinear_remainder(v, profiles, &p)
            })
            .collect();
        SampledSource::new(self.times.clone(), fields)
    }

    /// ‖g‖ in L²(0,T; L²) by the trapezoid rule on the sample grid.
    pub fn time_norm(&self, g: &[FourierField]) -> f64 {
        self.weighted_time_norm(g, |_| 1.0)
    }

    fn weighted_time_norm(&self, g: &[FourierField], w: impl Fn(f64) -> f64) -> f64 {
        let vals: Vec<f64> = self.times.iter().zip(g).map(|(&t, f)| (f.l2_norm() * w(t)).powi(2)).collect();
        self.times
            .windows(2)
            .zip(vals.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
            .sum::<f64>()
            .sqrt()
    }

    /// ‖v/ρ₀‖ and ‖f/ρ_F‖ over the window where ρ_F ≥ WEIGHT_FLOOR.
    pub fn weighted_norms(&self, w: &WeightPair, v: &[FourierField], f: &[FourierField]) -> (f64, f64) {
        let inside = |t: f64| w.rho_f(t) >= WEIGHT_FLOOR;
        let a = self.weighted_time_norm(v, |t| if inside(t) { 1.0 / w.rho0(t) } else { 0.0 });
        let b = self.weighted_time_norm(f, |t| if inside(t) { 1.0 / w.rho_f(t) } else { 0.0 });
        (a, b)
    }
}

/// Components of an exponential-sum law on the closed interval [0, duration].
pub fn law_at(law: &ExpSumControl, t: f64) -> Vec<f64> {
    law.components.iter().map(|c| c.iter().map(|e| e.eval(t)).sum()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sweep: usize,
    /// ‖f^{n} − f^{n−1}‖ in L²(0,T; L²).
    pub update_norm: f64,
    /// update_n / update_{n−1}; absent on the first sweep.
    pub ratio: Option<f64>,
    pub source_norm: f64,
    pub control_norm: f64,
    pub weighted_v: f64,
    pub weighted_f: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalReport {
    pub model: Model,
    pub phi: f64,
    pub t: f64,
    pub initial_distance: f64,
    pub weights: WeightPair,
    pub weight_ratio_maxima: (f64, f64),
    pub sweeps: Vec<SweepRecord>,
    pub converged: bool,
    /// Controls p₄(, p₅) of the final sweep.
    #[serde(skip)]
    pub law: ExpSumControl,
    /// Profiles 1, cos x, sin x, μ₄(, μ₅) used in the full simulation.
    #[serde(skip)]
    pub profiles: ProfileSet,
    pub control_norm: f64,
    /// ‖v(T)‖ of the final linear solve plus √T times the last source update.
    pub internal_estimate: f64,
    /// ‖u(T) − Φ‖ from the full nonlinear simulation.
    pub terminal_error: f64,
    /// Part of the terminal error in the controlled modes.
    pub controlled_error: f64,
    pub tail_error: f64,
    #[serde(skip)]
    pub terminal: FourierField,
}

impl LocalReport {
    /// The law as a control on the full profile set (offset past 1, cos x, sin x).
    pub fn full_law(&self) -> Embedded {
        Embedded { inner: Arc::new(self.law.clone()), offset: 3, dim: self.profiles.len() }
    }
}

/// Cost constant M fitted from linear control costs of v0 at T, 0.7T and 0.4T.
pub fn fit_cost_constant(cfg: &LocalConfig, v0: &FourierField) -> Result<f64> {
    if v0.l2_norm() == 0.0 {
        return Ok(crate::moment::M_FLOOR);
    }
    let mut pts = Vec::new();
    for s in [1.0, 0.7, 0.4] {
        let mut c = cfg.clone();
        c.t = cfg.t * s;
        let prob = LocalProblem::new(c)?;
        let sol = prob.controlled_solve_with_source(v0, &prob.zero_source())?;
        pts.push((prob.cfg.t, sol.control_norm));
    }
    Ok(cost_law(&pts).m)
}

/// Drives u0 to the constant Φ over [0, T] by Picard iteration on the source.
pub fn local_exact_to_constant(u0: &FourierField, cfg: &LocalConfig) -> Result<LocalReport> {
    let problem = LocalProblem::new(cfg.clone())?;
    let u0 = u0.with_truncation(cfg.k);
    let v0 = u0.axpy(-1.0, &FourierField::constant(cfg.phi, cfg.k, u0.grid_size()));
    let profiles = ProfileSet::with_extra(cfg.k, u0.grid_size(), &problem.system.profiles)?;
    let m = match cfg.m {
        Some(m) => m,
        None => fit_cost_constant(cfg, &v0)?,
    };
    let weights = WeightPair::new(cfg.q, cfg.p, m, cfg.t)?;
    let dim = profiles.len() - 3;
    let initial_distance = v0.l2_norm();
    if initial_distance == 0.0 {
        let law = ExpSumControl { duration: cfg.t, components: vec![Vec::new(); dim] };
        return Ok(LocalReport {
            model: cfg.model,
            phi: cfg.phi,
            t: cfg.t,
            initial_distance,
            weights,
            weight_ratio_maxima: weights.ratio_maxima(1000),
            sweeps: Vec::new(),
            converged: true,
            law,
            profiles,
            control_norm: 0.0,
            internal_estimate: 0.0,
            terminal_error: 0.0,
            controlled_error: 0.0,
            tail_error: 0.0,
            terminal: u0,
        });
    }

    let mut f = problem.zero_source();
    let mut sweeps: Vec<SweepRecord> = Vec::new();
    let mut above_one = 0;
    let mut converged = false;
    let mut last: Option<(SourceSolve, f64)> = None;
    for sweep in 1..=cfg.max_sweeps {
        let sol = problem.controlled_solve_with_source(&v0, &f)?;
        let next = problem.next_source(&sol)?;
        let diff: Vec<FourierField> = next.fields.iter().zip(&f.fields).map(|(a, b)| a - b).collect();
        let update = problem.time_norm(&diff);
        let source_norm = problem.time_norm(&next.fields);
        let ratio = sweeps.last().map(|r| if r.update_norm > 0.0 { update / r.update_norm } else { 0.0 });
        let (wv, wf) = problem.weighted_norms(&weights, &sol.trajectory, &f.fields);
        sweeps.push(SweepRecord {
            sweep,
            update_norm: update,
            ratio,
            source_norm,
            control_norm: sol.control_norm,
            weighted_v: wv,
            weighted_f: wf,
        });
        if let Some(r) = ratio {
            above_one = if r >= 1.0 { above_one + 1 } else { 0 };
            if above_one >= 3 {
                return Err(Error::NoContraction { ratio: r, sweep });
            }
        }
        if !update.is_finite() {
            return Err(Error::NoContraction { ratio: f64::INFINITY, sweep });
        }
        last = Some((sol, update));
        f = next;
        if update <= cfg.rtol * source_norm + cfg.atol {
            converged = true;
            break;
        }
    }
    let (sol, update) = last.expect("at least one sweep");
    if !converged {
        let r = sweeps.last().and_then(|s| s.ratio).unwrap_or(f64::NAN);
        return Err(Error::NoContraction { ratio: r, sweep: sweeps.len() });
    }
    let internal_estimate = sol.terminal.l2_norm() + cfg.t.sqrt() * update;

    let full = Embedded { inner: Arc::new(sol.law.clone()), offset: 3, dim: profiles.len() };
    let rep = integrate(&u0, &full, &profiles, cfg.model, cfg.t, &cfg.flow)?;
    if rep.blowup_flag {
        return Err(Error::BlowupDetected { t: rep.t_end, norm: rep.sup_norm, guard: cfg.flow.guard });
    }
    let err = rep.final_state.axpy(-1.0, &FourierField::constant(cfg.phi, cfg.k, u0.grid_size()));
    let kc = match cfg.model {
        Model::Ch => cfg.count - 1,
        Model::Ks => (cfg.count - 1) / 2,
    };
    let mut ctrl = err.clone();
    for (k, c) in ctrl.half_spectrum_mut().iter_mut().enumerate() {
        if k > kc {
            *c = num_complex::Complex64::new(0.0, 0.0);
        }
    }
    let tail = &err - &ctrl;
    Ok(LocalReport {
        model: cfg.model,
        phi: cfg.phi,
        t: cfg.t,
        initial_distance,
        weights,
        weight_ratio_maxima: weights.ratio_maxima(1000),
        sweeps,
        converged,
        control_norm: sol.control_norm,
        law: sol.law,
        profiles,
        internal_estimate,
        terminal_error: err.l2_norm(),
        controlled_error: ctrl.l2_norm(),
        tail_error: tail.l2_norm(),
        terminal: rep.final_state,
    })
}

/// Empirical basin radius along `direction`: amplitudes double from `start` while the loop converges
/// with terminal error below `tol`; returns the largest successful distance ‖a·direction‖.
pub fn basin_radius(
    cfg: &LocalConfig,
    direction: &FourierField,
    start: f64,
    tol: f64,
    max_doublings: usize,
) -> Result<f64> {
    let n = direction.l2_norm();
    if n == 0.0 {
        return Err(Error::ConfigError("basin direction must be nonzero".into()));
    }
    let base = FourierField::constant(cfg.phi, cfg.k, direction.grid_size());
    let mut best = 0.0;
    let mut amp = start / n;
    for _ in 0..=max_doublings {
        let u0 = base.axpy(amp, &direction.with_truncation(cfg.k));
        match local_exact_to_constant(&u0, cfg) {
            Ok(r) if r.terminal_error < tol => best = amp * n,
            Ok(_) | Err(Error::NoContraction { .. }) | Err(Error::BlowupDetected { .. }) => break,
            Err(e) => return Err(e),
        }
        amp *= 2.0;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ch() -> LocalConfig {
        LocalConfig::new(Model::Ch, 1.0, 0.5)
    }

    #[test]
    fn weights_vanish_at_horizon() {
        let w = WeightPair::new(1.2, 3.0, 1.0, 0.5).unwrap();
        assert_eq!(w.rho0(0.5), 0.0);
        assert_eq!(w.rho_f(0.5), 0.0);
        assert!(w.rho0(0.1) > w.rho0(0.4));
        let (a, b) = w.ratio_maxima(500);
        assert!(a.is_finite() && b.is_finite() && a <= 1.0 && b <= 1.0);
        assert!(WeightPair::new(1.2, 2.5, 1.0, 0.5).is_err());
        assert!(WeightPair::new(1.5, 3.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn source_vanishes_on_constants() {
        let c = FourierField::constant(0.7, 16, 64);
        assert!(nonlinear_source(&c, 1.0, Model::Ch).l2_norm() < 1e-15);
        assert!(nonlinear_source(&FourierField::zeros(16, 64), 1.0, Model::Ks).l2_norm() == 0.0);
    }

    #[test]
    fn ch_source_of_sine() {
        // v = ε sin x, Φ = 1: 6ε³ sin x cos²x + 6ε² cos²x − 3ε³ sin³x − 6ε² sin²x
        let eps = 1e-2;
        let v = FourierField::from_cos_sin(16, 64, &[(1, 0.0, eps)]);
        let got = nonlinear_source(&v, 1.0, Model::Ch);
        let want = FourierField::from_fn(16, 64, |x| {
            let (s, c) = x.sin_cos();
            6.0 * eps.powi(3) * s * c * c + 6.0 * eps * eps * c * c - 3.0 * eps.powi(3) * s.powi(3)
                - 6.0 * eps * eps * s * s
        });
        assert!((&got - &want).l2_norm() < 1e-15);
    }

    #[test]
    fn zero_data_zero_control() {
        let p = LocalProblem::new(ch()).unwrap();
        let s = p.controlled_solve_with_source(&FourierField::zeros(32, 128), &p.zero_source()).unwrap();
        assert_eq!(s.control_norm, 0.0);
        assert!(s.trajectory.iter().all(|v| v.l2_norm() == 0.0));
    }

    #[test]
    fn superposition() {
        let p = LocalProblem::new(ch()).unwrap();
        let v0 = FourierField::from_cos_sin(32, 128, &[(1, 1e-3, 0.0), (2, 0.0, 5e-4)]);
        let f1 = p.sample(|t| FourierField::from_cos_sin(32, 128, &[(0, 1e-4 * t, 0.0), (3, 2e-4, 0.0)])).unwrap();
        let f2 = p.sample(|t| FourierField::from_cos_sin(32, 128, &[(1, 0.0, 3e-4 * (1.0 - t))])).unwrap();
        let both = p.controlled_solve_with_source(&v0, &f1.add(&f2).unwrap()).unwrap();
        let a = p.controlled_solve_with_source(&v0, &f1).unwrap();
        let b = p.controlled_solve_with_source(&v0, &f2).unwrap();
        let h = p.controlled_solve_with_source(&v0, &p.zero_source()).unwrap();
        let scale = both.trajectory.iter().map(|v| v.l2_norm()).fold(0.0, f64::max);
        for i in 0..p.times.len() {
            let sum = &(&a.trajectory[i] + &b.trajectory[i]) - &h.trajectory[i];
            assert!((&sum - &both.trajectory[i]).l2_norm() < 1e-10 * scale);
        }
    }

    #[test]
    fn constant_source_is_cancelled() {
        let p = LocalProblem::new(ch()).unwrap();
        let c0 = FourierField::from_cos_sin(32, 128, &[(0, 1e-3, 0.0), (1, 1e-3, 0.0), (2, 0.0, 1e-3)]);
        let src = SampledSource::new(p.times.clone(), vec![c0; p.times.len()]).unwrap();
        let s = p.controlled_solve_with_source(&FourierField::zeros(32, 128), &src).unwrap();
        let peak = s.trajectory.iter().map(|v| v.l2_norm()).fold(0.0, f64::max);
        assert!(s.terminal.l2_norm() < 1e-5 * peak, "{} vs {}", s.terminal.l2_norm(), peak);
    }

    #[test]
    fn constant_state_needs_no_sweeps() {
        let r = local_exact_to_constant(&FourierField::constant(1.0, 32, 128), &ch()).unwrap();
        assert!(r.sweeps.is_empty() && r.terminal_error == 0.0);
    }
}
