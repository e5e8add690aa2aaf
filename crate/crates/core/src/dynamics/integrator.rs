//! Integrating-factor Runge–Kutta integration of the controlled equation.
//!
//! The linear part −∂x⁴ − ∂x² is diagonal in Fourier space and propagated exactly;
//! −N(u) + Q(t)u is advanced by an embedded explicit pair with adaptive steps that
//! never cross a control breakpoint.

use super::{ControlLaw, Model, ProfileSet};
use crate::error::{Error, Result};
use crate::field::FourierField;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Dormand–Prince 5(4), first-same-as-last.
    DormandPrince,
    /// Explicit midpoint with an embedded Euler estimate.
    Midpoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub scheme: Scheme,
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub h_min: f64,
    /// Sobolev index of the monitored norm.
    pub s: f64,
    /// Blowup guard on the monitored norm.
    pub guard: f64,
    /// Cadence of stored trajectory samples; `None` stores only the endpoints.
    pub sample_dt: Option<f64>,
    /// Fixed step size; disables error control when set.
    pub fixed_step: Option<f64>,
    pub max_steps: usize,
    /// Step ceiling as a fraction of 1 / sup|Q|.
    pub control_cfl: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            scheme: Scheme::DormandPrince,
            rtol: 1e-9,
            atol: 1e-12,
            h_init: 1e-4,
            h_max: 0.05,
            h_min: 1e-15,
            s: 1.0,
            guard: 1e8,
            sample_dt: None,
            fixed_step: None,
            max_steps: 20_000_000,
            control_cfl: 0.5,
        }
    }
}

impl FlowConfig {
    pub fn with_tolerance(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub final_state: FourierField,
    /// (t, u(t)) at the configured cadence, including both endpoints.
    pub samples: Vec<(f64, FourierField)>,
    /// Largest monitored norm over accepted steps.
    pub sup_norm: f64,
    pub blowup_flag: bool,
    /// Time reached (equal to the horizon unless the guard triggered).
    pub t_end: f64,
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

struct Tableau {
    c: Vec<f64>,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    bhat: Vec<f64>,
    fsal: bool,
    low_order: i32,
}

impl Tableau {
    fn new(scheme: Scheme) -> Self {
        match scheme {
            Scheme::DormandPrince => Tableau {
                c: vec![0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0],
                a: vec![
                    vec![],
                    vec![0.2],
                    vec![3.0 / 40.0, 9.0 / 40.0],
                    vec![44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
                    vec![19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
                    vec![
                        9017.0 / 3168.0,
                        -355.0 / 33.0,
                        46732.0 / 5247.0,
                        49.0 / 176.0,
                        -5103.0 / 18656.0,
                    ],
                    vec![35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
                ],
                b: vec![35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0],
                bhat: vec![
                    5179.0 / 57600.0,
                    0.0,
                    7571.0 / 16695.0,
                    393.0 / 640.0,
                    -92097.0 / 339200.0,
                    187.0 / 2100.0,
                    1.0 / 40.0,
                ],
                fsal: true,
                low_order: 4,
            },
            Scheme::Midpoint => Tableau {
                c: vec![0.0, 0.5],
                a: vec![vec![], vec![0.5]],
                b: vec![0.0, 1.0],
                bhat: vec![1.0, 0.0],
                fsal: false,
                low_order: 1,
            },
        }
    }

    /// Distinct propagation fractions used by the scheme, and index tables into them.
    fn fractions(&self) -> (Vec<f64>, Vec<Vec<usize>>, Vec<usize>, Vec<usize>) {
        let mut d: Vec<f64> = Vec::new();
        let idx = |x: f64, d: &mut Vec<f64>| -> usize {
            if let Some(p) = d.iter().position(|&y| (y - x).abs() < 1e-15) {
                p
            } else {
                d.push(x);
                d.len() - 1
            }
        };
        let s = self.c.len();
        let mut pair = vec![vec![0; s]; s];
        let mut start = vec![0; s];
        let mut fin = vec![0; s];
        for i in 0..s {
            start[i] = idx(self.c[i], &mut d);
            fin[i] = idx(1.0 - self.c[i], &mut d);
            for j in 0..i {
                pair[i][j] = idx(self.c[i] - self.c[j], &mut d);
            }
        }
        (d, pair, start, fin)
    }
}

struct Rhs<'a> {
    law: &'a dyn ControlLaw,
    profiles: &'a ProfileSet,
    model: Model,
    buf: Vec<f64>,
    evals: usize,
}

impl Rhs<'_> {
    fn control(&mut self, t: f64) -> Vec<f64> {
        let n = self.profiles.len().max(self.law.dim());
        if self.buf.len() < n {
            self.buf.resize(n, 0.0);
        }
        self.law.value(t, &mut self.buf);
        self.buf[..self.law.dim()].to_vec()
    }

    /// −N(u) + Q(t)u.
    fn eval(&mut self, t: f64, u: &FourierField) -> FourierField {
        self.evals += 1;
        let p = self.control(t);
        let mut out = self.model.nonlinearity(u).scale(-1.0);
        if p.iter().any(|&v| v != 0.0) {
            let q = self.profiles.combine(&p);
            out = out.axpy(1.0, &q.product(u));
        }
        out
    }
}

fn linear_symbol(k: usize) -> f64 {
    let k = k as f64;
    -k.powi(4) + k * k
}

fn propagate(u: &[Complex64], e: &[f64]) -> Vec<Complex64> {
    u.iter().zip(e).map(|(c, f)| c * f).collect()
}

/// Integrates from u0 over [0, t] under `law`; never errors on blowup, which is flagged instead.
pub fn integrate(
    u0: &FourierField,
    law: &dyn ControlLaw,
    profiles: &ProfileSet,
    model: Model,
    t: f64,
    cfg: &FlowConfig,
) -> Result<SolveReport> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::ConfigError(format!("horizon {t} must be finite and nonnegative")));
    }
    if t > law.duration() * (1.0 + 1e-12) + 1e-14 && law.dim() > 0 && law.duration() > 0.0 {
        return Err(Error::ConfigError(format!(
            "horizon {t} exceeds control duration {}",
            law.duration()
        )));
    }
    let k = u0.truncation();
    let grid = u0.grid_size();
    let tab = Tableau::new(cfg.scheme);
    let (fracs, pair, start_idx, fin_idx) = tab.fractions();
    let symbols: Vec<f64> = (0..=k).map(linear_symbol).collect();

    let mut stops: Vec<f64> = law.breakpoints().into_iter().filter(|&b| b > 0.0 && b < t).collect();
    if let Some(dt) = cfg.sample_dt {
        if dt > 0.0 {
            let n = (t / dt).floor() as usize;
            stops.extend((1..=n).map(|j| j as f64 * dt).filter(|&s| s < t));
        }
    }
    stops.push(t);
    stops.sort_by(f64::total_cmp);
    stops.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * t.max(1.0));
    let sample_set: Vec<f64> = match cfg.sample_dt {
        Some(dt) if dt > 0.0 => stops.iter().copied().filter(|s| is_multiple(*s, dt) || *s == t).collect(),
        _ => vec![t],
    };

    let mut rhs = Rhs { law, profiles, model, buf: Vec::new(), evals: 0 };
    let mut u = u0.clone();
    let mut samples = vec![(0.0, u0.clone())];
    let mut sup_norm = u0.sobolev_norm(cfg.s);
    let mut t_cur = 0.0;
    let mut h = cfg.fixed_step.unwrap_or(cfg.h_init).min(cfg.h_max);
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut blowup = false;
    let stages = tab.c.len();

    'outer: for &target in &stops {
        let mut first: Option<FourierField> = None;
        while t_cur < target {
            if accepted + rejected >= cfg.max_steps {
                return Err(Error::BudgetExceeded(format!("step budget {} exhausted at t = {t_cur}", cfg.max_steps)));
            }
            let p_now = rhs.control(t_cur);
            let sup_q = profiles.sup_bound(&p_now);
            let mut h_try = h.min(cfg.h_max);
            if let Some(hf) = cfg.fixed_step {
                h_try = hf;
            }
            if sup_q > 0.0 && cfg.fixed_step.is_none() {
                h_try = h_try.min(cfg.control_cfl / sup_q);
            }
            let remaining = target - t_cur;
            if h_try >= remaining || remaining - h_try < 1e-3 * h_try {
                h_try = remaining;
            }
            let exps: Vec<Vec<f64>> =
                fracs.iter().map(|d| symbols.iter().map(|l| (l * d * h_try).exp()).collect()).collect();
            let eval_time = |c: f64| -> f64 {
                let te = t_cur + c * h_try;
                if te >= target {
                    target.next_down()
                } else {
                    te
                }
            };
            let mut nvals: Vec<Vec<Complex64>> = Vec::with_capacity(stages);
            let n0 = match first.take() {
                Some(f) => f,
                None => rhs.eval(eval_time(0.0), &u),
            };
            nvals.push(n0.half_spectrum().to_vec());
            let mut last_stage = u.clone();
            for i in 1..stages {
                let mut acc = propagate(u.half_spectrum(), &exps[start_idx[i]]);
                for j in 0..i {
                    let a = tab.a[i][j];
                    if a == 0.0 {
                        continue;
                    }
                    let e = &exps[pair[i][j]];
                    for (m, x) in acc.iter_mut().enumerate() {
                        *x += nvals[j][m] * (h_try * a * e[m]);
                    }
                }
                let stage = FourierField::from_half_spectrum(acc, grid)?;
                let nv = rhs.eval(eval_time(tab.c[i]), &stage);
                nvals.push(nv.half_spectrum().to_vec());
                last_stage = stage;
            }
            let new_state = if tab.fsal {
                last_stage
            } else {
                let mut acc = propagate(u.half_spectrum(), &exps[start_idx_of_one(&fracs)]);
                for j in 0..stages {
                    let e = &exps[fin_idx[j]];
                    for (m, x) in acc.iter_mut().enumerate() {
                        *x += nvals[j][m] * (h_try * tab.b[j] * e[m]);
                    }
                }
                FourierField::from_half_spectrum(acc, grid)?
            };
            let mut err_acc = 0.0;
            for m in 0..=k {
                let mut e = Complex64::new(0.0, 0.0);
                for j in 0..stages {
                    let w = tab.b[j] - tab.bhat[j];
                    if w != 0.0 {
                        e += nvals[j][m] * (h_try * w * exps[fin_idx[j]][m]);
                    }
                }
                let scale = cfg.atol
                    + cfg.rtol * u.half_spectrum()[m].norm().max(new_state.half_spectrum()[m].norm());
                err_acc += (e.norm() / scale).powi(2);
            }
            let err = (err_acc / (k + 1) as f64).sqrt();
            let ok = cfg.fixed_step.is_some() || err <= 1.0 || h_try <= cfg.h_min;
            if !err.is_finite() && cfg.fixed_step.is_none() {
                rejected += 1;
                h = h_try * 0.2;
                continue;
            }
            if ok {
                accepted += 1;
                t_cur = if h_try == remaining { target } else { t_cur + h_try };
                if tab.fsal {
                    let last = nvals.pop().unwrap_or_default();
                    first = Some(FourierField::from_half_spectrum(last, grid)?);
                }
                u = new_state;
                let norm = u.sobolev_norm(cfg.s);
                if !norm.is_finite() || norm > cfg.guard {
                    sup_norm = if norm.is_finite() { sup_norm.max(norm) } else { f64::INFINITY };
                    blowup = true;
                    break 'outer;
                }
                sup_norm = sup_norm.max(norm);
            } else {
                rejected += 1;
            }
            if cfg.fixed_step.is_none() {
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-1.0 / (tab.low_order as f64 + 1.0))).clamp(0.2, 5.0)
                };
                if ok && h_try < h && h_try == remaining {
                    // A step shortened to hit a breakpoint says nothing about the next one.
                    h = h.max(h_try * fac);
                } else {
                    h = (h_try * fac).max(cfg.h_min);
                }
            }
        }
        if sample_set.contains(&target) && target != 0.0 {
            samples.push((target, u.clone()));
        }
    }
    Ok(SolveReport {
        final_state: u,
        samples,
        sup_norm,
        blowup_flag: blowup,
        t_end: t_cur,
        accepted,
        rejected,
        rhs_evals: rhs.evals,
    })
}

fn start_idx_of_one(fracs: &[f64]) -> usize {
    fracs.iter().position(|&d| (d - 1.0).abs() < 1e-15).unwrap_or(0)
}

fn is_multiple(s: f64, dt: f64) -> bool {
    let r = s / dt;
    (r - r.round()).abs() < 1e-9
}

/// u(t) for the controlled equation; `BlowupDetected` when the guard triggers.
pub fn flow(
    u0: &FourierField,
    law: &dyn ControlLaw,
    profiles: &ProfileSet,
    model: Model,
    t: f64,
    cfg: &FlowConfig,
) -> Result<(FourierField, SolveReport)> {
    let report = integrate(u0, law, profiles, model, t, cfg)?;
    if report.blowup_flag {
        return Err(Error::BlowupDetected { t: report.t_end, norm: report.sup_norm, guard: cfg.guard });
    }
    Ok((report.final_state.clone(), report))
}

/// ‖flow(u0) − flow(v0)‖_s / ‖u0 − v0‖_s.
pub fn stability_probe(
    u0: &FourierField,
    v0: &FourierField,
    law: &dyn ControlLaw,
    profiles: &ProfileSet,
    model: Model,
    t: f64,
    cfg: &FlowConfig,
) -> Result<f64> {
    let d0 = (u0 - v0).sobolev_norm(cfg.s);
    if d0 == 0.0 {
        return Err(Error::ConfigError("stability probe needs distinct initial states".into()));
    }
    let (a, _) = flow(u0, law, profiles, model, t, cfg)?;
    let (b, _) = flow(v0, law, profiles, model, t, cfg)?;
    Ok((&a - &b).sobolev_norm(cfg.s) / d0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ControlSchedule;

    fn setup() -> (ProfileSet, FlowConfig) {
        (ProfileSet::low_modes(16, 64), FlowConfig::default())
    }

    #[test]
    fn constant_one_is_stationary() {
        let (p, cfg) = setup();
        let u0 = FourierField::constant(1.0, 16, 64);
        let law = ControlSchedule::zero(3, 0.7).unwrap();
        for model in [Model::Ks, Model::Ch] {
            let (u, _) = flow(&u0, &law, &p, model, 0.7, &cfg).unwrap();
            assert!((&u - &u0).l2_norm() < 1e-15);
        }
    }

    #[test]
    fn zero_is_invariant() {
        let (p, cfg) = setup();
        let u0 = FourierField::zeros(16, 64);
        let law = ControlSchedule::constant(vec![3.0, -1.0, 2.0], 0.3).unwrap();
        for model in [Model::Ks, Model::Ch] {
            let (u, _) = flow(&u0, &law, &p, model, 0.3, &cfg).unwrap();
            assert_eq!(u.l2_norm(), 0.0);
        }
    }

    #[test]
    fn linear_heat_mode_decays_exactly() {
        let (p, cfg) = setup();
        let u0 = FourierField::from_cos_sin(16, 64, &[(2, 1e-6, 0.0)]);
        let law = ControlSchedule::zero(3, 0.1).unwrap();
        let (u, _) = flow(&u0, &law, &p, Model::Ch, 0.1, &cfg).unwrap();
        let want = 1e-6 * (-12.0f64 * 0.1).exp();
        assert!((u.cos_sin(2).0 - want).abs() < 1e-16);
    }

    #[test]
    fn mean_control_scales_constants() {
        let (p, cfg) = setup();
        let cfg = cfg.with_tolerance(1e-11, 1e-14);
        let u0 = FourierField::constant(1.0, 16, 64);
        let law = ControlSchedule::constant(vec![2.0f64.ln() / 0.2, 0.0, 0.0], 0.2).unwrap();
        let (u, _) = flow(&u0, &law, &p, Model::Ks, 0.2, &cfg).unwrap();
        assert!((u.mean() - 2.0).abs() < 1e-9, "{}", u.mean());
    }

    #[test]
    fn guard_reports_blowup() {
        let (p, mut cfg) = setup();
        cfg.guard = 10.0;
        let u0 = FourierField::constant(1.0, 16, 64);
        let law = ControlSchedule::constant(vec![50.0, 0.0, 0.0], 1.0).unwrap();
        let r = flow(&u0, &law, &p, Model::Ks, 1.0, &cfg);
        assert!(matches!(r, Err(Error::BlowupDetected { .. })));
    }

    #[test]
    fn samples_follow_cadence() {
        let (p, mut cfg) = setup();
        cfg.sample_dt = Some(0.1);
        let u0 = FourierField::from_cos_sin(16, 64, &[(0, 1.0, 0.0), (1, 0.1, 0.0)]);
        let law = ControlSchedule::zero(3, 0.35).unwrap();
        let r = integrate(&u0, &law, &p, Model::Ks, 0.35, &cfg).unwrap();
        let times: Vec<f64> = r.samples.iter().map(|s| s.0).collect();
        assert_eq!(times.len(), 5);
        assert!(times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*times.last().unwrap(), 0.35);
    }
}
