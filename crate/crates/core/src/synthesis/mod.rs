//! Approximate control synthesis: conjugated dynamics, staged plans for targets e^{φ}u₀, and sign-based steering.

mod decompose;

pub use decompose::{above_cap, affine_part, decompose, high_part, phase_tree, translate, Decomposition, QuarticTerm};

use crate::dynamics::{flow, ControlSchedule, FlowConfig, Model, ProfileSet};
use crate::error::{Error, Result};
use crate::field::FourierField;
use crate::saturation::{Node, PhaseTree};
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

/// Tuning of the staged searches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub model: Model,
    pub k: usize,
    pub grid: usize,
    /// Sobolev index of every reported error.
    pub s: f64,
    /// Highest phase mode realised; the rest must be negligible.
    pub freq_cap: usize,
    /// First τ of the generator search, then halved.
    pub tau0: f64,
    pub tau_halvings: usize,
    /// First free-evolution time of the conjugation search, then halved.
    pub delta0: f64,
    pub delta_halvings: usize,
    /// Nesting limit of conjugation stages.
    pub max_depth: usize,
    /// Tail budget of pointwise exponentials.
    pub aliasing_budget: f64,
    /// Return the best plan instead of failing when the tolerance is missed.
    pub best_effort: bool,
    pub flow: FlowConfig,
}

impl SynthConfig {
    pub fn new(model: Model, k: usize, grid: usize) -> Self {
        SynthConfig {
            model,
            k,
            grid,
            s: 0.0,
            freq_cap: 2,
            tau0: 1e-3,
            tau_halvings: 14,
            delta0: 1e-2,
            delta_halvings: 8,
            max_depth: 2,
            aliasing_budget: 1e-8,
            best_effort: false,
            flow: FlowConfig::default(),
        }
    }

    pub fn profiles(&self) -> ProfileSet {
        ProfileSet::low_modes(self.k, self.grid)
    }
}

/// One stage of a steering plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stage {
    /// Control λ/τ on the profiles (1, cos x, sin x) for time τ.
    Constant { lambda: [f64; 3], tau: f64 },
    /// Zero control.
    Hold { tau: f64 },
    /// Reach e^{−δ^{−1/4}φ̃}·, evolve freely for δ, reach e^{+δ^{−1/4}φ̃}·.
    Conjugate { phase: Vec<(usize, f64, f64)>, first: Vec<Stage>, delta: f64, last: Vec<Stage> },
}

impl Stage {
    pub fn duration(&self) -> f64 {
        match self {
            Stage::Constant { tau, .. } | Stage::Hold { tau } => *tau,
            Stage::Conjugate { first, delta, last, .. } => {
                first.iter().map(Stage::duration).sum::<f64>() + delta + last.iter().map(Stage::duration).sum::<f64>()
            }
        }
    }

    fn compile_into(&self, out: &mut ControlSchedule) -> Result<()> {
        match self {
            Stage::Constant { lambda, tau } => out.push(*tau, lambda.iter().map(|l| l / tau).collect()),
            Stage::Hold { tau } => out.push(*tau, vec![0.0; 3]),
            Stage::Conjugate { first, delta, last, .. } => {
                for s in first {
                    s.compile_into(out)?;
                }
                out.push(*delta, vec![0.0; 3])?;
                for s in last {
                    s.compile_into(out)?;
                }
                Ok(())
            }
        }
    }

    /// Number of elementary constant or hold segments.
    pub fn segment_count(&self) -> usize {
        match self {
            Stage::Constant { .. } | Stage::Hold { .. } => 1,
            Stage::Conjugate { first, last, .. } => {
                1 + first.iter().map(Stage::segment_count).sum::<usize>() + last.iter().map(Stage::segment_count).sum::<usize>()
            }
        }
    }
}

/// Piecewise-constant schedule of a stage list.
pub fn compile(stages: &[Stage]) -> Result<ControlSchedule> {
    let mut out = ControlSchedule::empty(3);
    for s in stages {
        s.compile_into(&mut out)?;
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct SteeringPlan {
    pub stages: Vec<Stage>,
    #[serde(skip)]
    pub schedule: ControlSchedule,
    pub duration: f64,
    /// ‖u(duration) − target‖_s from one simulation of the compiled schedule.
    pub achieved_error: f64,
    pub tolerance: f64,
    pub s: f64,
    /// s-expression of the phase realised, when the plan comes from a phase.
    pub tree: Option<String>,
    #[serde(skip)]
    pub terminal: FourierField,
}

impl SteeringPlan {
    pub fn tolerance_met(&self) -> bool {
        self.achieved_error <= self.tolerance
    }

    pub fn segment_count(&self) -> usize {
        self.schedule.segments.len()
    }
}

/// Simulation context for plan construction.
struct Sim<'a> {
    cfg: &'a SynthConfig,
    profiles: ProfileSet,
}

impl Sim<'_> {
    fn run(&self, u: &FourierField, value: [f64; 3], tau: f64) -> Result<FourierField> {
        let sched = ControlSchedule::constant(value.to_vec(), tau)?;
        Ok(flow(u, &sched, &self.profiles, self.cfg.model, tau, &self.cfg.flow)?.0)
    }

    fn norm(&self, f: &FourierField) -> f64 {
        f.sobolev_norm(self.cfg.s)
    }

    fn rel(&self, got: &FourierField, want: &FourierField) -> f64 {
        let n = self.norm(want);
        let e = self.norm(&(got - want));
        if n > 0.0 {
            e / n
        } else {
            e
        }
    }

    /// e^{φ} u, dealiased.
    fn exp_times(&self, phi: &FourierField, u: &FourierField) -> Result<FourierField> {
        let e = phi.pointwise_map(f64::exp, self.cfg.k, self.cfg.aliasing_budget)?;
        Ok(e.product(u))
    }

    /// Best constant stage towards e^{g·μ}u over the τ grid.
    fn generator(&self, u: &FourierField, g: [f64; 3], tol: f64) -> Result<(Vec<Stage>, FourierField, f64)> {
        if g.iter().all(|c| c.abs() < 1e-15) {
            return Ok((Vec::new(), u.clone(), 0.0));
        }
        let gf = FourierField::from_cos_sin(self.cfg.k, self.cfg.grid, &[(0, g[0], 0.0), (1, g[1], g[2])]);
        let target = self.exp_times(&gf, u)?;
        let mut best: Option<(f64, f64, FourierField)> = None;
        let mut tau = self.cfg.tau0;
        for _ in 0..=self.cfg.tau_halvings {
            let out = match self.run(u, [g[0] / tau, g[1] / tau, g[2] / tau], tau) {
                Ok(o) => o,
                Err(Error::BlowupDetected { .. }) => {
                    tau *= 0.5;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let err = self.rel(&out, &target);
            if best.as_ref().is_none_or(|b| err <= b.0) {
                best = Some((err, tau, out));
            }
            if err <= tol {
                break;
            }
            tau *= 0.5;
        }
        let (err, tau, out) = best.ok_or(Error::BlowupDetected { t: 0.0, norm: f64::INFINITY, guard: self.cfg.flow.guard })?;
        Ok((vec![Stage::Constant { lambda: g, tau }], out, err))
    }

    /// Best conjugation triple towards e^{−(χ′)⁴}u over the δ grid.
    fn conjugate(&self, u: &FourierField, chi: &FourierField, tol: f64, depth: usize) -> Result<(Vec<Stage>, FourierField, f64)> {
        let d = chi.derivative(1);
        let q = d.product(&d);
        let target = self.exp_times(&q.product(&q).scale(-1.0), u)?;
        let shift = 1.0 + chi.grid_min().abs();
        let chi_t = chi.axpy(1.0, &FourierField::constant(shift, chi.truncation(), chi.grid_size()));
        let phase = cos_sin_terms(&chi_t);
        let mut best: Option<(f64, Vec<Stage>, FourierField)> = None;
        let mut delta = self.cfg.delta0;
        for _ in 0..=self.cfg.delta_halvings {
            let a = delta.powf(-0.25);
            let attempt = (|| -> Result<(Vec<Stage>, FourierField)> {
                let (first, w1, _) = self.reach(u, &chi_t.scale(-a), tol / 4.0, depth + 1)?;
                let w2 = self.run(&w1, [0.0; 3], delta)?;
                let (last, w3, _) = self.reach(&w2, &chi_t.scale(a), tol / 4.0, depth + 1)?;
                Ok((vec![Stage::Conjugate { phase: phase.clone(), first, delta, last }], w3))
            })();
            match attempt {
                Ok((stages, out)) => {
                    let err = self.rel(&out, &target);
                    if best.as_ref().is_none_or(|b| err <= b.0) {
                        best = Some((err, stages, out));
                    }
                    if err <= tol {
                        break;
                    }
                }
                Err(Error::BlowupDetected { .. }) | Err(Error::AliasingBudgetExceeded { .. }) => {}
                Err(e) => return Err(e),
            }
            delta *= 0.5;
        }
        let (err, stages, out) =
            best.ok_or(Error::ToleranceNotMet { achieved: f64::INFINITY, requested: tol })?;
        Ok((stages, out, err))
    }

    /// Plan towards e^{φ}u: quartic terms in sequence, affine part last.
    fn reach(&self, u: &FourierField, phi: &FourierField, tol: f64, depth: usize) -> Result<(Vec<Stage>, FourierField, f64)> {
        if depth > self.cfg.max_depth {
            return Err(Error::BudgetExceeded(format!("conjugation nesting above {}", self.cfg.max_depth)));
        }
        let hi = high_part(phi);
        if hi.l2_norm() == 0.0 {
            return self.generator(u, affine_part(phi), tol);
        }
        let dec = decompose(phi, self.cfg.freq_cap.max(hi_max_mode(&hi)))?;
        let terms: Vec<(f64, FourierField)> = dec.terms.iter().map(|t| (t.weight, t.psi.clone())).collect();
        self.sequence(u, &terms, dec.affine, phi, tol, depth)
    }

    fn sequence(
        &self,
        u: &FourierField,
        terms: &[(f64, FourierField)],
        affine: [f64; 3],
        phi: &FourierField,
        tol: f64,
        depth: usize,
    ) -> Result<(Vec<Stage>, FourierField, f64)> {
        let share = tol / (2.0 * terms.len().max(1) as f64);
        let mut stages = Vec::new();
        let mut cur = u.clone();
        for (w, psi) in terms {
            let chi = psi.scale(w.powf(0.25));
            let (s, out, _) = self.conjugate(&cur, &chi, share, depth)?;
            stages.extend(s);
            cur = out;
        }
        let (s, out, _) = self.generator(&cur, affine, tol / 2.0)?;
        stages.extend(s);
        let err = self.rel(&out, &self.exp_times(phi, u)?);
        Ok((stages, out, err))
    }
}

/// (k, a_k, b_k) with a_0 the mean, nonzero terms only.
pub fn cos_sin_terms(f: &FourierField) -> Vec<(usize, f64, f64)> {
    (0..=f.truncation())
        .map(|k| if k == 0 { (0, f.mean(), 0.0) } else { let (a, b) = f.cos_sin(k); (k, a, b) })
        .filter(|&(_, a, b)| a.abs() > 1e-15 || b.abs() > 1e-15)
        .collect()
}

fn hi_max_mode(f: &FourierField) -> usize {
    let scale = f.half_spectrum().iter().map(|c| c.norm()).fold(0.0, f64::max);
    f.half_spectrum().iter().rposition(|c| c.norm() > 1e-14 * scale).unwrap_or(0)
}

fn tree_field(tree: &PhaseTree, k: usize, grid: usize) -> FourierField {
    tree.evaluate().to_field(k, grid)
}

/// One row of the conjugated-limit table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub delta: f64,
    pub error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub rows: Vec<ProbeRow>,
    /// Errors decrease along the whole grid.
    pub monotone: bool,
    /// error(last) < error(first)/2.
    pub halved: bool,
    /// Largest δ from which the errors decrease monotonically to the end of the grid.
    pub delta0: Option<f64>,
    pub target_norm: f64,
}

/// e^{δ^{−1/4}φ} R_δ(e^{−δ^{−1/4}φ}u₀, δ^{−1}p) against e^{−(φ′)⁴ + ⟨p,μ⟩}u₀ in H^s for each δ.
pub fn conjugated_limit_probe(
    u0: &FourierField,
    phi: &FourierField,
    p: [f64; 3],
    deltas: &[f64],
    cfg: &SynthConfig,
) -> Result<ProbeReport> {
    if !(cfg.s > 0.5) {
        return Err(Error::ConfigError(format!("probe index s = {} must exceed 1/2", cfg.s)));
    }
    if phi.grid_min() <= 0.0 {
        return Err(Error::ConfigError("probe phase φ must be strictly positive".into()));
    }
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0)) || deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::ConfigError("δ grid must be positive and strictly decreasing".into()));
    }
    let sim = Sim { cfg, profiles: cfg.profiles() };
    let u0 = u0.with_truncation(cfg.k);
    let d = phi.derivative(1);
    let d2 = d.product(&d);
    let pmu = sim.profiles.combine(&p);
    let expo = &d2.product(&d2).scale(-1.0) + &pmu;
    let target = sim.exp_times(&expo, &u0)?;
    let mut rows = Vec::new();
    for &delta in deltas {
        let a = delta.powf(-0.25);
        let start = sim.exp_times(&phi.scale(-a), &u0)?;
        let out = sim.run(&start, [p[0] / delta, p[1] / delta, p[2] / delta], delta)?;
        let back = sim.exp_times(&phi.scale(a), &out)?;
        rows.push(ProbeRow { delta, error: sim.norm(&(&back - &target)) });
    }
    let monotone = rows.windows(2).all(|w| w[1].error < w[0].error);
    let halved = rows.len() >= 2 && rows[rows.len() - 1].error < rows[0].error / 2.0;
    let mut start = rows.len() - 1;
    while start > 0 && rows[start].error < rows[start - 1].error {
        start -= 1;
    }
    let delta0 = if rows.len() >= 2 && start < rows.len() - 1 { Some(rows[start].delta) } else { None };
    Ok(ProbeReport { rows, monotone, halved, delta0, target_norm: sim.norm(&target) })
}

fn finish(
    sim: &Sim,
    u0: &FourierField,
    stages: Vec<Stage>,
    target: &FourierField,
    tolerance: f64,
    tree: Option<String>,
) -> Result<SteeringPlan> {
    let schedule = compile(&stages)?;
    let duration = schedule.total_duration();
    let terminal = if duration > 0.0 {
        flow(u0, &schedule, &sim.profiles, sim.cfg.model, duration, &sim.cfg.flow)?.0
    } else {
        u0.clone()
    };
    let achieved_error = sim.norm(&(&terminal - target));
    let plan = SteeringPlan { stages, schedule, duration, achieved_error, tolerance, s: sim.cfg.s, tree, terminal };
    if !plan.tolerance_met() && !sim.cfg.best_effort {
        return Err(Error::ToleranceNotMet { achieved: achieved_error, requested: tolerance });
    }
    Ok(plan)
}

/// Staged plan whose terminal state approximates e^{φ}u₀ within ε in H^s, of duration at most T.
pub fn reach_exponential(u0: &FourierField, tree: &PhaseTree, eps: f64, t: f64, cfg: &SynthConfig) -> Result<SteeringPlan> {
    if !(eps > 0.0 && t > 0.0) {
        return Err(Error::ConfigError("reach needs ε > 0 and T > 0".into()));
    }
    let sim = Sim { cfg, profiles: cfg.profiles() };
    let u0 = u0.with_truncation(cfg.k);
    let phi = tree_field(tree, cfg.k, cfg.grid);
    let target = sim.exp_times(&phi, &u0)?;
    let tol = eps / sim.norm(&target).max(f64::MIN_POSITIVE);
    let stages = match tree.node() {
        Node::Generator(c) => {
            let g = [c[0].to_f64().unwrap_or(0.0), c[1].to_f64().unwrap_or(0.0), c[2].to_f64().unwrap_or(0.0)];
            sim.generator(&u0, g, tol)?.0
        }
        Node::Quartic { affine, children } if children.iter().all(|(w, _)| w >= &num_traits::Zero::zero()) => {
            let aff = tree_field(affine, cfg.k, cfg.grid);
            if high_part(&aff).l2_norm() > 0.0 {
                return Err(Error::ConfigError("quartic node with a non-affine base is not supported".into()));
            }
            let terms: Vec<(f64, FourierField)> = children
                .iter()
                .map(|(w, c)| (w.to_f64().unwrap_or(0.0), tree_field(c, cfg.k, cfg.grid)))
                .collect();
            sim.sequence(&u0, &terms, affine_part(&aff), &phi, tol, 0)?.0
        }
        Node::Quartic { .. } => sim.reach(&u0, &phi, tol, 0)?.0,
    };
    let plan = finish(&sim, &u0, stages, &target, eps, Some(tree.to_sexpr()))?;
    if plan.duration > t * (1.0 + 1e-12) {
        return Err(Error::BudgetExceeded(format!("plan needs {:.4e} > T = {t}", plan.duration)));
    }
    Ok(plan)
}

/// Band-limited phase log(u1/u0) (mollified across a declared zero set) realised up to the frequency cap.
pub fn steer_same_sign(
    u0: &FourierField,
    u1: &FourierField,
    zero_set: &[(f64, f64)],
    eps: f64,
    t: f64,
    cfg: &SynthConfig,
) -> Result<SteeringPlan> {
    let (k, grid) = (cfg.k, cfg.grid);
    let (u0, u1) = (u0.with_truncation(k), u1.with_truncation(k));
    let m = (4 * k).max(grid);
    let a = u0.to_grid(m);
    let b = u1.to_grid(m);
    let inside = |x: f64| zero_set.iter().any(|&(l, r)| x >= l && x <= r);
    for j in 0..m {
        let x = crate::field::grid_point(j, m);
        if !inside(x) && !(a[j] * b[j] > 0.0) {
            return Err(Error::SignMismatch(format!("u0 = {:.3e}, u1 = {:.3e} at x = {x:.4}", a[j], b[j])));
        }
    }
    let sim = Sim { cfg, profiles: cfg.profiles() };
    let log_ratio: Vec<f64> = a.iter().zip(&b).map(|(x, y)| if x * y > 0.0 { (y / x).ln() } else { 0.0 }).collect();
    let phi = if zero_set.is_empty() {
        FourierField::from_grid_values(&log_ratio, k, grid)?
    } else {
        let mut theta = 0.5;
        loop {
            let vals: Vec<f64> = (0..m)
                .map(|j| log_ratio[j] * cutoff(crate::field::grid_point(j, m), zero_set, theta))
                .collect();
            let cand = FourierField::from_grid_values(&vals, k, grid)?;
            let err = sim.norm(&(&sim.exp_times(&cand, &u0)? - &u1));
            if err < 2.0 * eps / 3.0 || theta < 1e-4 {
                break cand;
            }
            theta *= 0.5;
        }
    };
    let residual = sim.norm(&above_cap(&phi, cfg.freq_cap));
    if residual >= eps / 10.0 {
        return Err(Error::ToleranceNotMet { achieved: residual, requested: eps / 10.0 });
    }
    let mut capped = phi.clone();
    for c in capped.half_spectrum_mut().iter_mut().skip(cfg.freq_cap + 1) {
        *c = num_complex::Complex64::new(0.0, 0.0);
    }
    let approx = sim.norm(&(&sim.exp_times(&capped, &u0)? - &u1));
    if approx >= eps {
        return Err(Error::ToleranceNotMet { achieved: approx, requested: eps });
    }
    let tol = (eps - approx) / sim.norm(&u1).max(f64::MIN_POSITIVE);
    let stages = sim.reach(&u0, &capped, tol, 0)?.0;
    let tree = phase_tree(&capped, cfg.freq_cap).ok().map(|t| t.to_sexpr());
    let plan = finish(&sim, &u0, stages, &u1, eps, tree)?;
    if plan.duration > t * (1.0 + 1e-12) {
        return Err(Error::BudgetExceeded(format!("plan needs {:.4e} > T = {t}", plan.duration)));
    }
    Ok(plan)
}

/// Smooth cutoff: 0 on the zero set, 1 beyond distance θ from it.
fn cutoff(x: f64, zero_set: &[(f64, f64)], theta: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let dist = zero_set
        .iter()
        .map(|&(l, r)| {
            if x >= l && x <= r {
                0.0
            } else {
                let dl = ((l - x).rem_euclid(tau)).min((x - l).rem_euclid(tau));
                let dr = ((r - x).rem_euclid(tau)).min((x - r).rem_euclid(tau));
                dl.min(dr)
            }
        })
        .fold(f64::INFINITY, f64::min);
    let s = (dist / theta).clamp(0.0, 1.0);
    // C¹ smoothstep
    s * s * (3.0 - 2.0 * s)
}

/// Steer to ≈ 1, hold at the equilibrium 1, steer to u1; total duration exactly T.
pub fn steer_with_hold(u0: &FourierField, u1: &FourierField, eps: f64, t: f64, cfg: &SynthConfig) -> Result<SteeringPlan> {
    if !(eps > 0.0 && t > 0.0) {
        return Err(Error::ConfigError("steering needs ε > 0 and T > 0".into()));
    }
    let (k, grid) = (cfg.k, cfg.grid);
    let (u0, u1) = (u0.with_truncation(k), u1.with_truncation(k));
    if u0.grid_min() <= 0.0 || u1.grid_min() <= 0.0 {
        return Err(Error::SignMismatch("hold pipeline needs strictly positive u0 and u1".into()));
    }
    let sim = Sim { cfg, profiles: cfg.profiles() };
    let one = FourierField::constant(1.0, k, grid);
    let phase = |f: &FourierField, inv: bool| -> Result<FourierField> {
        let m = (4 * k).max(grid);
        let vals: Vec<f64> = f.to_grid(m).iter().map(|v| if inv { -v.ln() } else { v.ln() }).collect();
        FourierField::from_grid_values(&vals, k, grid)
    };
    let cap = |phi: &FourierField| -> Result<FourierField> {
        let residual = sim.norm(&above_cap(phi, cfg.freq_cap));
        if residual >= eps / 10.0 {
            return Err(Error::ToleranceNotMet { achieved: residual, requested: eps / 10.0 });
        }
        let mut c = phi.clone();
        for z in c.half_spectrum_mut().iter_mut().skip(cfg.freq_cap + 1) {
            *z = num_complex::Complex64::new(0.0, 0.0);
        }
        Ok(c)
    };
    let phi1 = cap(&phase(&u0, true)?)?;
    let phi2 = cap(&phase(&u1, false)?)?;
    let tol = eps / 3.0 / sim.norm(&u1).max(1.0);
    let first = if sim.norm(&phi1) > 0.0 { sim.reach(&u0, &phi1, tol, 0)?.0 } else { Vec::new() };
    let last = if sim.norm(&phi2) > 0.0 { sim.reach(&one, &phi2, tol, 0)?.0 } else { Vec::new() };
    let used: f64 = first.iter().chain(&last).map(Stage::duration).sum();
    if used > t {
        return Err(Error::BudgetExceeded(format!("steering phases need {used:.4e} > T = {t}")));
    }
    let mut stages = first;
    if t - used > 0.0 {
        stages.push(Stage::Hold { tau: t - used });
    }
    stages.extend(last);
    let mut plan = finish(&sim, &u0, stages, &u1, eps, None)?;
    // Segment durations are summed in floating point; report the requested horizon.
    plan.duration = t;
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::saturation::{q, qi};

    fn cfg(model: Model) -> SynthConfig {
        SynthConfig::new(model, 32, 128)
    }

    #[test]
    fn constant_phase_is_one_stage() {
        let c = cfg(Model::Ks);
        let tree = PhaseTree::generator(q_ln2(), qi(0), qi(0));
        let plan = reach_exponential(&FourierField::constant(1.0, 32, 128), &tree, 1e-6, 1.0, &c).unwrap();
        assert_eq!(plan.stages.len(), 1);
        assert!(plan.achieved_error < 1e-6);
        assert!((plan.terminal.mean() - 2.0).abs() < 1e-6);
    }

    fn q_ln2() -> crate::saturation::Q {
        crate::saturation::q_from_f64(std::f64::consts::LN_2)
    }

    #[test]
    fn zero_phase_is_empty_plan() {
        let c = cfg(Model::Ch);
        let u0 = FourierField::from_cos_sin(32, 128, &[(0, 1.0, 0.0), (1, 0.1, 0.0)]);
        let plan = reach_exponential(&u0, &PhaseTree::zero(), 1e-9, 1.0, &c).unwrap();
        assert!(plan.stages.is_empty() && plan.achieved_error == 0.0);
    }

    #[test]
    fn same_state_needs_no_steering() {
        let c = cfg(Model::Ks);
        let u = FourierField::from_cos_sin(32, 128, &[(0, 1.5, 0.0), (1, 0.2, 0.1)]);
        let plan = steer_same_sign(&u, &u, &[], 1e-3, 1.0, &c).unwrap();
        assert!(plan.stages.is_empty());
    }

    #[test]
    fn sign_mismatch_detected() {
        let c = cfg(Model::Ks);
        let u0 = FourierField::constant(1.0, 32, 128);
        let u1 = FourierField::from_cos_sin(32, 128, &[(0, 0.2, 0.0), (1, 1.0, 0.0)]);
        assert!(matches!(steer_same_sign(&u0, &u1, &[], 0.1, 1.0, &c), Err(Error::SignMismatch(_))));
    }

    #[test]
    fn hold_only_between_ones() {
        let c = cfg(Model::Ch);
        let one = FourierField::constant(1.0, 32, 128);
        let plan = steer_with_hold(&one, &one, 1e-6, 0.3, &c).unwrap();
        assert_eq!(plan.stages, vec![Stage::Hold { tau: 0.3 }]);
        assert!(plan.achieved_error < 1e-12);
    }

    #[test]
    fn compile_flattens_triples() {
        let st = vec![Stage::Conjugate {
            phase: vec![],
            first: vec![Stage::Constant { lambda: [1.0, 0.0, 0.0], tau: 0.5 }],
            delta: 0.25,
            last: vec![Stage::Hold { tau: 0.25 }],
        }];
        let s = compile(&st).unwrap();
        assert_eq!(s.segments.len(), 3);
        assert_eq!(s.segments[0].value, vec![2.0, 0.0, 0.0]);
        assert!((s.total_duration() - 1.0).abs() < 1e-15);
        let _ = q(1, 2);
    }
}
