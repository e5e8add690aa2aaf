//! Approximate steering on [0, T/2] followed by local exact control on [T/2, T].

use super::{basin_radius, local_exact_to_constant, LocalConfig, LocalReport};
use crate::dynamics::{
    integrate, Concatenation, ControlLaw, ControlSchedule, LinearModel, LinearizedSystem, Model, ProfileSet, Scaled,
};
use crate::error::{Error, Result};
use crate::field::FourierField;
use crate::synthesis::{above_cap, steer_with_hold, SteeringPlan, SynthConfig};
use serde::Serialize;
use std::sync::Arc;

#[derive(Clone, Debug)]
pub struct GlobalConfig {
    pub t: f64,
    /// Local problem on [T/2, T]; its horizon is overwritten with T/2.
    pub local: LocalConfig,
    pub synth: SynthConfig,
    /// Basin radius for phase 2; searched by halving the observed distance when absent.
    pub radius: Option<f64>,
    /// Tolerance of the phase-1 plan.
    pub phase1_eps: f64,
    /// Extra short steering rounds at the end of phase 1, each of length T/20.
    pub refinements: usize,
}

impl GlobalConfig {
    pub fn new(model: Model, phi: f64, t: f64) -> Self {
        let local = LocalConfig::new(model, phi, t / 2.0);
        let mut synth = SynthConfig::new(model, local.k, local.grid);
        synth.best_effort = true;
        GlobalConfig { t, local, synth, radius: None, phase1_eps: 1e-2, refinements: 1 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GlobalReport {
    pub model: Model,
    pub phi: f64,
    pub t: f64,
    /// Branch sign: −1 when u0 < 0 and the target is −|Φ|.
    pub sign: f64,
    /// Negative KS branch: controls computed for −u0(−x), odd components flipped on replay.
    pub reflected: bool,
    /// Main steering plan followed by the refinement rounds.
    pub phase1: Vec<SteeringPlan>,
    /// Distance to Φ after each phase-1 round.
    pub round_distances: Vec<f64>,
    pub phase1_distance: f64,
    pub radius: f64,
    pub phase2: Option<LocalReport>,
    /// ‖u(T) − Φ‖ from one uninterrupted simulation of the whole schedule.
    pub terminal_error: f64,
    pub controlled_error: f64,
    pub tail_error: f64,
    /// Free linear decay of the uncontrolled modes of u(T/2) − Φ over [T/2, T].
    pub tail_decay_bound: f64,
    #[serde(skip)]
    pub terminal: FourierField,
    #[serde(skip)]
    pub schedule: Option<Arc<dyn ControlLaw>>,
}

/// Steers u0 (one strict sign) to the constant Φ of the same sign at time T.
pub fn global_to_constant(u0: &FourierField, cfg: &GlobalConfig) -> Result<GlobalReport> {
    let phi = cfg.local.phi;
    let (k, grid) = (cfg.local.k, cfg.local.grid);
    let u0 = u0.with_truncation(k);
    let sign = if u0.grid_min() > 0.0 && phi > 0.0 {
        1.0
    } else if u0.grid_max() < 0.0 && phi < 0.0 {
        -1.0
    } else {
        return Err(Error::SignMismatch("u0 and Φ must share a strict sign".into()));
    };
    let half = cfg.t / 2.0;
    let mut local = cfg.local.clone();
    local.t = half;
    local.phi = phi.abs();
    let target = FourierField::constant(phi, k, grid);
    let profiles = ProfileSet::with_extra(k, grid, &local.extra_profiles())?;
    // u ↦ −u is a symmetry for CH only; KS needs u(x) ↦ −u(−x), which reflects the profiles.
    let reflected = sign < 0.0 && local.model == Model::Ks;
    let dim = profiles.len();

    if (&u0 - &target).l2_norm() == 0.0 {
        let hold: Arc<dyn ControlLaw> = Arc::new(ControlSchedule::zero(dim, cfg.t)?);
        return Ok(GlobalReport {
            model: local.model,
            phi,
            t: cfg.t,
            sign,
            reflected,
            phase1: Vec::new(),
            round_distances: Vec::new(),
            phase1_distance: 0.0,
            radius: cfg.radius.unwrap_or(0.0),
            phase2: None,
            terminal_error: 0.0,
            controlled_error: 0.0,
            tail_error: 0.0,
            tail_decay_bound: 0.0,
            terminal: u0,
            schedule: Some(hold),
        });
    }

    let w0 = if reflected { u0.reflect().scale(-1.0) } else { u0.scale(sign) };
    let phi_pos = FourierField::constant(phi.abs(), k, grid);
    let round = cfg.t / 20.0;
    let main = half - cfg.refinements as f64 * round;
    if !(main > 0.0) {
        return Err(Error::ConfigError(format!("{} refinement rounds do not fit in T/2", cfg.refinements)));
    }
    let mut plans = Vec::new();
    let mut phase1 = Concatenation::new();
    let mut mid = w0.clone();
    let mut eps = cfg.phase1_eps;
    let mut rounds = Vec::new();
    for len in std::iter::once(main).chain(std::iter::repeat_n(round, cfg.refinements)) {
        let mut synth = cfg.synth.clone();
        synth.freq_cap = phase_cap(&mid, eps, &synth)?;
        let plan = steer_with_hold(&mid, &phi_pos, eps, len, &synth)?;
        phase1 = phase1.then(Arc::new(plan.schedule.widened(dim)));
        // Replay from u0 so the mid state matches the final uninterrupted run.
        let rep = integrate(&w0, &phase1, &profiles, local.model, phase1.duration(), &local.flow)?;
        if rep.blowup_flag {
            return Err(Error::BlowupDetected { t: rep.t_end, norm: rep.sup_norm, guard: local.flow.guard });
        }
        mid = rep.final_state;
        plans.push(plan);
        let d = (&mid - &phi_pos).l2_norm();
        eps = (d * 1e-2).max(1e-14);
        rounds.push(d);
    }
    let dev = mid.axpy(-1.0, &phi_pos);
    let distance = dev.l2_norm();
    let radius = match cfg.radius {
        Some(r) => r,
        None => basin_along(&local, &dev, distance)?,
    };
    if distance > radius {
        return Err(Error::RadiusNotReached { distance, radius });
    }
    let rep2 = local_exact_to_constant(&mid, &local)?;
    let mut full: Arc<dyn ControlLaw> = Arc::new(phase1.then(Arc::new(rep2.full_law())));
    if reflected {
        full = Arc::new(Scaled { inner: full, factors: parities(&profiles)? });
    }

    let end = integrate(&u0, full.as_ref(), &profiles, local.model, cfg.t, &local.flow)?;
    if end.blowup_flag {
        return Err(Error::BlowupDetected { t: end.t_end, norm: end.sup_norm, guard: local.flow.guard });
    }
    let err = end.final_state.axpy(-1.0, &target);
    let kc = match local.model {
        Model::Ch => local.count - 1,
        Model::Ks => (local.count - 1) / 2,
    };
    let (ctrl, tail) = split(&err, kc);
    let lin = LinearizedSystem::new(
        match local.model {
            Model::Ch => LinearModel::ChLin,
            Model::Ks => LinearModel::KsLin,
        },
        phi.abs(),
        Vec::new(),
    )?;
    let (_, dev_tail) = split(&dev, kc);
    let decayed = lin.flow(&dev_tail, None, None, half)?;
    Ok(GlobalReport {
        model: local.model,
        phi,
        t: cfg.t,
        sign,
        reflected,
        phase1: plans,
        round_distances: rounds,
        phase1_distance: distance,
        radius,
        phase2: Some(rep2),
        terminal_error: err.l2_norm(),
        controlled_error: ctrl.l2_norm(),
        tail_error: tail.l2_norm(),
        tail_decay_bound: decayed.l2_norm(),
        terminal: end.final_state,
        schedule: Some(full),
    })
}

/// +1 for even profiles, −1 for odd ones.
fn parities(profiles: &ProfileSet) -> Result<Vec<f64>> {
    profiles
        .fields()
        .iter()
        .map(|mu| {
            let r = mu.reflect();
            let tol = 1e-12 * mu.l2_norm();
            if (&r - mu).l2_norm() <= tol {
                Ok(1.0)
            } else if (&r + mu).l2_norm() <= tol {
                Ok(-1.0)
            } else {
                Err(Error::ConfigError("reflected branch needs even or odd profiles".into()))
            }
        })
        .collect()
}

/// `distance` when the local loop succeeds there, else the largest halving of it that does (0 if none).
fn basin_along(local: &LocalConfig, dev: &FourierField, distance: f64) -> Result<f64> {
    let dir = dev.scale(1.0 / distance);
    let mut amp = distance;
    for _ in 0..12 {
        if basin_radius(local, &dir, amp, f64::INFINITY, 0)? > 0.0 {
            return Ok(amp);
        }
        amp *= 0.5;
    }
    Ok(0.0)
}

/// Smallest cap ≥ the configured one leaving less than ε/10 of −ln u0 above it.
fn phase_cap(u0: &FourierField, eps: f64, synth: &SynthConfig) -> Result<usize> {
    let m = (4 * synth.k).max(synth.grid);
    let vals: Vec<f64> = u0.to_grid(m).iter().map(|v| -v.ln()).collect();
    let phase = FourierField::from_grid_values(&vals, synth.k, synth.grid)?;
    (synth.freq_cap..=synth.k / 4)
        .find(|&c| above_cap(&phase, c).sobolev_norm(synth.s) < eps / 10.0)
        .ok_or_else(|| Error::BudgetExceeded(format!("phase of u0 needs modes above K/4 = {}", synth.k / 4)))
}

fn split(f: &FourierField, kc: usize) -> (FourierField, FourierField) {
    let mut low = f.clone();
    for (k, c) in low.half_spectrum_mut().iter_mut().enumerate() {
        if k > kc {
            *c = num_complex::Complex64::new(0.0, 0.0);
        }
    }
    let high = f - &low;
    (low, high)
}
