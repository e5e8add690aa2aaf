//! Scenario runner behind the `bilab` binary.

pub mod config;
pub mod expr;
pub mod output;

use crate::dynamics::{
    cubic_profile, integrate, quartic_profile, ControlLaw, ControlSchedule, ExpPiece, FlowConfig, LinearModel,
    LinearizedSystem, Model, ProfileSet,
};
use crate::error::{Error, Result};
use crate::field::{grid_point, FourierField};
use crate::local_exact::{global_to_constant, local_exact_to_constant, GlobalConfig, LocalConfig, SweepRecord};
use crate::moment::{cost_law, gramian_oracle, moment_control_ch, moment_control_ks, PrecisionPolicy};
use crate::saturation::{certify_root, derivation_table, mode_ladder_all, LadderStrategy, PhaseTree, TrigPolynomial};
use crate::synthesis::{
    conjugated_limit_probe, phase_tree, reach_exponential, steer_same_sign, steer_with_hold, SteeringPlan, SynthConfig,
};
pub use config::Params;
use output::{num, Artifacts};
use rayon::prelude::*;
use serde_json::json;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    Simulate,
    ConjugateLimit,
    Synthesize,
    Steer,
    MomentControl,
    LocalExact,
    GlobalPipeline,
    SaturationCheck,
}

impl Subcommand {
    pub const ALL: [Subcommand; 8] = [
        Subcommand::Simulate,
        Subcommand::ConjugateLimit,
        Subcommand::Synthesize,
        Subcommand::Steer,
        Subcommand::MomentControl,
        Subcommand::LocalExact,
        Subcommand::GlobalPipeline,
        Subcommand::SaturationCheck,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::ConjugateLimit => "conjugate-limit",
            Subcommand::Synthesize => "synthesize",
            Subcommand::Steer => "steer",
            Subcommand::MomentControl => "moment-control",
            Subcommand::LocalExact => "local-exact",
            Subcommand::GlobalPipeline => "global-pipeline",
            Subcommand::SaturationCheck => "saturation-check",
        }
    }

    /// Accepted keys with defaults.
    pub fn schema(&self) -> Vec<(&'static str, &'static str)> {
        let mut s: Vec<(&str, &str)> = vec![
            ("model", "ch"),
            ("k", "32"),
            ("grid", "auto"),
            ("flow.rtol", "1e-10"),
            ("flow.atol", "1e-13"),
            ("flow.guard", "1e8"),
        ];
        let synth = [
            ("synth.tau0", "1e-3"),
            ("synth.tau_halvings", "14"),
            ("synth.delta0", "1e-2"),
            ("synth.delta_halvings", "8"),
            ("synth.max_depth", "2"),
            ("synth.aliasing_budget", "1e-8"),
        ];
        let local = [
            ("local.count", "auto"),
            ("local.solver", "moment"),
            ("local.rtol", "1e-10"),
            ("local.max_sweeps", "30"),
            ("local.q", "1.2"),
            ("local.p", "3"),
            ("local.m", "auto"),
        ];
        match self {
            Subcommand::Simulate => s.extend([
                ("u0", "1"),
                ("t", "1"),
                ("profiles", "low"),
                ("control", "0,0,0"),
                ("sample_dt", "0.01"),
                ("s", "1"),
            ]),
            Subcommand::ConjugateLimit => {
                s.retain(|(k, _)| *k != "k");
                s.extend([
                    ("k", "64"),
                    ("u0", "1 + 0.1 cos(x)"),
                    ("phi", "1.2 + 0.2 sin(x)"),
                    ("p", "0.3,0,0"),
                    ("deltas", "1e-2,5e-3,2.5e-3"),
                    ("s", "1"),
                    ("require_halving", "false"),
                ]);
            }
            Subcommand::Synthesize => {
                s.extend([
                    ("u0", "1"),
                    ("phase", "0.2 + 0.1 cos(x)"),
                    ("tree", ""),
                    ("cap", "2"),
                    ("eps", "1e-3"),
                    ("t", "1"),
                    ("s", "0"),
                ]);
                s.extend(synth);
            }
            Subcommand::Steer => {
                s.extend([
                    ("u0", "1 + 0.3 sin(x)"),
                    ("u1", "1.5 - 0.2 cos(x)"),
                    ("mode", "same-sign"),
                    ("zero_set", ""),
                    ("cap", "2"),
                    ("eps", "0.1"),
                    ("t", "0.5"),
                    ("s", "0"),
                ]);
                s.extend(synth);
            }
            Subcommand::MomentControl => s.extend([
                ("phi", "1"),
                ("ts", "0.5"),
                ("count", "auto"),
                ("v0", "auto"),
                ("method", "both"),
                ("precision.bits", "256"),
                ("precision.max_bits", "1024"),
                ("residual_tol", "1e-3"),
                ("signal_points", "200"),
            ]),
            Subcommand::LocalExact => {
                s.extend([
                    ("phi", "1"),
                    ("t", "0.5"),
                    ("u0", "1 + 1e-3 cos(x)"),
                    ("error_tol", "1e-5"),
                    ("signal_points", "200"),
                ]);
                s.extend(local);
            }
            Subcommand::GlobalPipeline => {
                s.extend([
                    ("phi", "1"),
                    ("t", "1"),
                    ("u0", "2 + 0.5 sin(x)"),
                    ("radius", "auto"),
                    ("phase1_eps", "1e-2"),
                    ("refinements", "1"),
                    ("error_tol", "1e-4"),
                    ("signal_points", "400"),
                ]);
                s.extend(local);
                s.extend(synth);
            }
            Subcommand::SaturationCheck => {
                s.retain(|(k, _)| !k.starts_with("flow.") && *k != "model" && *k != "k" && *k != "grid");
                s.extend([("n_max", "5"), ("cap", "8"), ("strategy", "incremental")]);
            }
        }
        s
    }

    /// Output files and their CSV columns, for --help.
    pub fn artifacts_help(&self) -> &'static str {
        match self {
            Subcommand::Simulate => {
                "trajectory.csv: t,mean,l2,hs,min,max\nfinal_spectrum.csv: k,re,im\nfinal_grid.csv: x,u\nsummary.json"
            }
            Subcommand::ConjugateLimit => "conjugate_limit.csv: delta,error\nreport.json (monotone, halved, delta0, slope)",
            Subcommand::Synthesize | Subcommand::Steer => {
                "schedule.csv: start,duration,p1,p2,p3\nterminal_spectrum.csv: k,re,im\nplan.json (stages, error, tree)"
            }
            Subcommand::MomentControl => {
                "moment_control.csv: t,series_norm,series_residual,tail_residual,defect,oracle_norm,oracle_residual\n\
                 signal_<i>.csv: t,p4[,p5] for the i-th horizon\ncost_law.json"
            }
            Subcommand::LocalExact => {
                "iterations.csv: sweep,update_norm,ratio,source_norm,control_norm,weighted_v,weighted_f\n\
                 control.csv: t,p4[,p5]\nschedule.json (exponential-sum pieces)\nterminal_spectrum.csv: k,re,im\nreport.json"
            }
            Subcommand::GlobalPipeline => {
                "iterations.csv: sweep,update_norm,ratio,source_norm,control_norm,weighted_v,weighted_f\n\
                 phase1_schedule.csv: start,duration,p1..pd\ncontrol.csv: t,p1..pd (phase 2)\n\
                 terminal_spectrum.csv: k,re,im\nreport.json"
            }
            Subcommand::SaturationCheck => {
                "derivation.csv: n,depth,node_count,cos_exact,sin_exact,cos_certified,sin_certified\nwitnesses.sexpr"
            }
        }
    }
}

impl FromStr for Subcommand {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::ConfigError(format!("unknown subcommand '{s}'")))
    }
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub subcommand: Subcommand,
    pub params: Params,
    pub out: PathBuf,
}

impl Scenario {
    /// Config file (or manifest) first, then `key=value` overrides, then schema defaults.
    pub fn new(subcommand: Subcommand, config: Option<&Path>, sets: &[String], out: PathBuf) -> Result<Self> {
        let mut params = match config {
            Some(p) => Params::load(p)?,
            None => Params::default(),
        };
        params.apply_overrides(sets)?;
        params.resolve(&subcommand.schema())?;
        Ok(Scenario { subcommand, params, out })
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub checks: BTreeMap<String, bool>,
    pub manifest: PathBuf,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.checks.values().all(|&c| c)
    }

    /// 0 when every declared check passes, 4 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            4
        }
    }
}

pub fn run(sc: &Scenario) -> Result<RunOutcome> {
    let mut art = Artifacts::create(&sc.out)?;
    let p = &sc.params;
    let checks = match sc.subcommand {
        Subcommand::Simulate => simulate(p, &mut art)?,
        Subcommand::ConjugateLimit => conjugate_limit(p, &mut art)?,
        Subcommand::Synthesize => synthesize(p, &mut art)?,
        Subcommand::Steer => steer(p, &mut art)?,
        Subcommand::MomentControl => moment(p, &mut art)?,
        Subcommand::LocalExact => local(p, &mut art)?,
        Subcommand::GlobalPipeline => global(p, &mut art)?,
        Subcommand::SaturationCheck => saturation(p, &mut art)?,
    };
    let manifest = art.finish(sc.subcommand.name(), p, &checks)?;
    Ok(RunOutcome { checks, manifest })
}

fn model(p: &Params) -> Result<Model> {
    Model::from_str(p.str("model")?)
}

fn resolution(p: &Params) -> Result<(usize, usize)> {
    let k = p.usize("k")?;
    if k < 2 {
        return Err(Error::ConfigError(format!("k = {k} must be at least 2")));
    }
    let grid = match p.str("grid")? {
        "auto" => 4 * k,
        _ => p.usize("grid")?,
    };
    if grid < 2 * k + 1 {
        return Err(Error::ConfigError(format!("grid {grid} must exceed 2k = {}", 2 * k)));
    }
    Ok((k, grid))
}

fn flow_config(p: &Params) -> Result<FlowConfig> {
    let mut f = FlowConfig::default().with_tolerance(p.f64("flow.rtol")?, p.f64("flow.atol")?);
    f.guard = p.f64("flow.guard")?;
    Ok(f)
}

fn positive(p: &Params, key: &str) -> Result<f64> {
    let v = p.f64(key)?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::ConfigError(format!("{key} = {v} must be positive")));
    }
    Ok(v)
}

fn spectrum_rows(f: &FourierField) -> Vec<Vec<f64>> {
    f.half_spectrum().iter().enumerate().map(|(k, c)| vec![k as f64, c.re, c.im]).collect()
}

fn synth_config(p: &Params, model: Model, k: usize, grid: usize) -> Result<SynthConfig> {
    let mut c = SynthConfig::new(model, k, grid);
    c.s = p.f64("s")?;
    c.freq_cap = p.usize("cap")?;
    c.tau0 = positive(p, "synth.tau0")?;
    c.tau_halvings = p.usize("synth.tau_halvings")?;
    c.delta0 = positive(p, "synth.delta0")?;
    c.delta_halvings = p.usize("synth.delta_halvings")?;
    c.max_depth = p.usize("synth.max_depth")?;
    c.aliasing_budget = positive(p, "synth.aliasing_budget")?;
    c.best_effort = true;
    c.flow = flow_config(p)?;
    Ok(c)
}

fn local_config(p: &Params, model: Model, phi: f64, t: f64, k: usize, grid: usize) -> Result<LocalConfig> {
    let mut c = LocalConfig::new(model, phi, t);
    c.k = k;
    c.grid = grid;
    if p.str("local.count")? != "auto" {
        c.count = p.usize("local.count")?;
    }
    c.solver = p.str("local.solver")?.parse()?;
    c.rtol = positive(p, "local.rtol")?;
    c.max_sweeps = p.usize("local.max_sweeps")?;
    c.q = p.f64("local.q")?;
    c.p = p.f64("local.p")?;
    c.m = p.opt_f64("local.m")?;
    Ok(c)
}

fn simulate(p: &Params, art: &mut Artifacts) -> Result<BTreeMap<String, bool>> {
    let m = model(p)?;
    let (k, grid) = resolution(p)?;
    let t = p.f64("t")?;
    let u0 = expr::field(p.str("u0")?, k, grid)?;
    let profiles = match p.str("profiles")? {
        "low" => ProfileSet::low_modes(k, grid),
        "ch" => ProfileSet::with_extra(k, grid, &[quartic_profile(k, grid), cubic_profile(k, grid)])?,
        "ks" => ProfileSet::with_extra(k, grid, &[quartic_profile(k, grid)])?,
        o => return Err(Error::ConfigError(format!("profiles = '{o}' (expected low, ch or ks)"))),
    };
    let control = p.f64_list("control")?;
    if control.len() != profiles.len() {
        return Err(Error::ConfigError(format!("control has {} entries for {} profiles", control.len(), profiles.len())));
    }
    let law = ControlSchedule::constant(control, t)?;
    let mut cfg = flow_config(p)?;
    cfg.s = p.f64("s")?;
    cfg.sample_dt = Some(positive(p, "sample_dt")?);
    let rep = integrate(&u0, &law, &profiles, m, t, &cfg)?;
    let rows: Vec<Vec<f64>> = rep
        .samples
        .iter()
        .map(|(t, u)| vec![*t, u.mean(), u.l2_norm(), u.sobolev_norm(cfg.s), u.grid_min(), u.grid_max()])
        .collect();
    art.csv("trajectory.csv", &["t", "mean", "l2", "hs", "min", "max"], &rows)?;
    art.csv("final_spectrum.csv", &["k", "re", "im"], &spectrum_rows(&rep.final_state))?;
    let g = rep.final_state.grid_values();
    let grid_rows: Vec<Vec<f64>> = g.iter().enumerate().map(|(j, v)| vec![grid_point(j, g.len()), *v]).collect();
    art.csv("final_grid.csv", &["x", "u"], &grid_rows)?;
    art.json(
        "summary.json",
        &json!({
            "model": m.name(), "t_end": rep.t_end, "blowup": rep.blowup_flag, "sup_norm": rep.sup_norm,
            "accepted_steps": rep.accepted, "rejected_steps": rep.rejected,
        }),
    )?;
    if rep.blowup_flag {
        return Err(Error::BlowupDetected { t: rep.t_end, norm: rep.sup_norm, guard: cfg.guard });
    }
    Ok(BTreeMap::from([("no_blowup".to_string(), true)]))
}

fn conjugate_limit(p: &Params, art: &mut Artifacts) -> Result<BTreeMap<String, bool>> {
    let m = model(p)?;
    let (k, grid) = resolution(p)?;
    let mut cfg = SynthConfig::new(m, k, grid);
    cfg.s = p.f64("s")?;
    cfg.flow = flow_config(p)?;
    let pv = p.f64_list("p")?;
    let pv: [f64; 3] = pv.try_into().map_err(|_| Error::ConfigError("p needs three entries".into()))?;
    let deltas = p.f64_list("deltas")?;
    let u0 = expr::field(p.str("u0")?, k, grid)?;
    let phi = expr::field(p.str("phi")?, k, grid)?;
    let r = conjugated_limit_probe(&u0, &phi, pv, &deltas, &cfg)?;
    let rows: Vec<Vec<f64>> = r.rows.iter().map(|row| vec![row.delta, row.error]).collect();
    art.csv("conjugate_limit.csv", &["delta", "error"], &rows)?;
    let slope = loglog_slope(&rows);
    art.json("report.json", &json!({ "model": m.name(), "probe": r, "slope": slope }))?;
    let mut checks = BTreeMap::from([("monotone".to_string(), r.monotone)]);
    if p.bool("require_halving")? {
        checks.insert("halved".into(), r.halved);
    }
    Ok(checks)
}

/// Least-squares slope of log error against log δ.
fn loglog_slope(rows: &[Vec<f64>]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        rows.iter().filter(|r| r[0] > 0.0 && r[1] > 0.0).map(|r| (r[0].ln(), r[1].ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

fn write_plan(art: &mut Artifacts, plan: &SteeringPlan) -> Result<BTreeMap<String, bool>> {
    art.csv("schedule.csv", &schedule_header(plan.schedule.dim), &schedule_rows(&plan.schedule))?;
    art.csv("terminal_spectrum.csv", &["k", "re", "im"], &spectrum_rows(&plan.terminal))?;
    art.json("plan.json", plan)?;
    Ok(BTreeMap::from([("tolerance_met".to_string(), plan.tolerance_met())]))
}

fn schedule_header(dim: usize) -> Vec<&'static str> {
    const P: [&str; 8] = ["p1", "p2", "p3", "p4", "p5", "p6", "p7", "p8"];
    let mut h = vec!["start", "duration"];
    h.extend(&P[..dim.min(P.len())]);
    h
}

fn schedule_rows(s: &ControlSchedule) -> Vec<Vec<f64>> {
    let mut start = 0.0;
    s.segments
        .iter()
        .map(|seg| {
            let mut row = vec![start, seg.duration];
            row.extend(&seg.value);
            start += seg.duration;
            row
        })
        .collect()
}

fn synthesize(p: &Params, art: &mut Artifacts) -> Result<BTreeMap<String, bool>> {
    let m = model(p)?;
    let (k, grid) = resolution(p)?;
    let cfg = synth_config(p, m, k, grid)?;
    let u0 = expr::field(p.str("u0")?, k, grid)?;
    let tree = match p.str("tree")? {
        "" => phase_tree(&expr::field(p.str("phase")?, k, grid)?, cfg.freq_cap)?,
        path => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{path}: {e}")))?;
            PhaseTree::from_sexpr(&text)?
        }
    };
    let plan = reach_exponential(&u0, &tree, positive(p, "eps")?, positive(p, "t")?, &cfg)?;
    write_plan(art, &plan)
}

fn zero_set(text: &str) -> Result<Vec<(f64, f64)>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(';')
        .map(|iv| {
            let (a, b) = iv.split_once(':').ok_or_else(|| Error::ConfigError(format!("zero_set interval '{iv}' is not a:b")))?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::ConfigError(format!("zero_set: '{s}'")));
            Ok((parse(a)?, parse(b)?))
        })
        .collect()
}

fn steer(p: &Params, art: &mut Artifacts) -> Result<BTreeMap<String, bool>> {
    let m = model(p)?;
    let (k, grid) = resolution(p)?;
    let cfg = synth_config(p, m, k, grid)?;
    let u0 = expr::field(p.str("u0")?, k, grid)?;
    let u1 = expr::field(p.str("u1")?, k, grid)?;
    let (eps, t) = (positive(p, "eps")?, positive(p, "t")?);
    let plan = match p.str("mode")? {
        "same-sign" => steer_same_sign(&u0, &u1, &zero_set(p.str("zero_set")?)?, eps, t, &cfg)?,
        "hold" => steer_with_hold(&u0, &u1, eps, t, &cfg)?,
        o => return Err(Error::ConfigError(format!("mode = '{o}' (expected same-sign or hold)"))),
    };
    write_plan(art, &plan)
}

struct MomentRow {
    t: f64,
    series: Option<crate::moment::MomentControl>,
    oracle: Option<crate::moment::GramianControl>,
}

fn moment(p: &Params, art: &mut Artifacts) -> Result<BTreeMap<String, bool>> {
    let m = model(p)?;
    let (k, grid) = resolution(p)?;
    let phi = positive(p, "phi")?;
    let ts = p.f64_list("ts")?;
    if ts.is_empty() || ts.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::ConfigError("ts must list positive horizons".into()));
    }
    let count = match p.str("count")? {
        "auto" => match m {
            Model::Ch => 8,
            Model::Ks => 5,
        },
        _ => p.usize("count")?,
    };
    let v0 = match (p.str("v0")?, m) {
        ("auto", Model::Ch) => expr::field("1 + 0.5 cos(x) + 0.3 sin(2x)", k, grid)?,
        ("auto", Model::Ks) => expr::field("0.1 cos(x)", k, grid)?,
        (text, _) => expr::field(text, k, grid)?,
    };
    let policy = PrecisionPolicy { bits: p.usize("precision.bits")?, max_bits: p.usize("precision.max_bits")?, ..Default::default() };
    let (want_series, want_oracle) = match p.str("method")? {
        "moment" => (true, false),
        "gramian" => (false, true),
        "both" => (true, true),
        o => return Err(Error::ConfigError(format!("method = '{o}' (expected moment, gramian or both)"))),
    };
    let (mu4, mu5) = (quartic_profile(k, grid), cubic_profile(k, grid));
    let (lin, profiles) = match m {
        Model::Ch => (LinearModel::ChLin, vec![mu4.clone(), mu5.clone()]),
        Model::Ks => (LinearModel::KsLin, vec![mu4.clone()]),
    };
    let sys = LinearizedSystem::new(lin, phi, profiles)?;
    // Horizons run in the worker pool; collect keeps the input order.
    let rows: Vec<MomentRow> = ts
        .par_iter()
        .map(|&t| -> Result<MomentRow> {
            let series = if want_series {
                Some(match m {
                    Model::Ch => moment_control_ch(&v0, phi, &mu4, &mu5, t, count, &policy)?,
                    Model::Ks => moment_control_ks(&v0, phi, &mu4, t, count, &policy)?,
                })
            } else {
                None
            };
            let oracle = if want_oracle { Some(gramian_oracle(&sys, &v0, t, count, &policy)?) } else { None };
            Ok(MomentRow { t, series, oracle })
        })
        .collect::<Result<_>>()?;
    let tol = positive(p, "residual_tol")?;
    let mut checks = BTreeMap::new();
    let nan = f64::NAN;
    let mut table = Vec::new();
    let n_sig = p.usize("signal_points")?.max(1);
    for (i, r) in rows.iter().enumerate() {
        let s = r.series.as_ref();
        let o = r.oracle.as_ref();
        table.push(vec![
            r.t,
            s.map_or(nan, |s| s.total_norm),
            s.map_or(nan, |s| s.residual),
            s.map_or(nan, |s| s.tail_residual),
            s.map_or(nan, |s| s.defect),
            o.map_or(nan, |o| o.total_norm),
            o.map_or(nan, |o| o.solve_residual),
        ]);
        if let Some(s) = s {
            checks.insert(format!("residual_t{i}"), s.residual < tol);
            let header: &[&str] = if m == Model::Ch { &["t", "p4", "p5"] } else { &["t", "p4"] };
            art.csv(&format!("signal_{i}.csv"), header, &s.signal_rows(n_sig))?;
        }
        if let (Some(s), Some(o)) = (s, o) {
            checks.insert(format!("oracle_not_costlier_t{i}"), o.total_norm <= s.total_norm);
        }
    }
    art.csv(
        "moment_control.csv",
        &["t", "series_norm", "series_residual", "tail_residual", "defect", "oracle_norm", "oracle_residual"],
        &table,
    )?;
    let costs: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.series.as_ref().map(|s| s.total_norm).or(r.oracle.as_ref().map(|o| o.total_norm)).map(|c| (r.t, c)))
        .collect();
    let reports: Vec<_> = rows.iter().filter_map(|r| r.series.as_ref()).collect();
    art.json("cost_law.json", &json!({ "model": m.name(), "count": count, "cost_law": cost_law(&costs), "series": reports }))?;
    Ok(checks)
}

fn pieces_json(pieces: &[ExpPiece]) -> serde_json::Value {
    json!(pieces
        .iter()
        .map(|pc| json!({
            "start": pc.start,
            "end": pc.end,
            "components": pc.components.iter().map(|terms| terms.iter().map(|e| json!({
                "coeff": [e.coeff.re, e.coeff.im], "rate": [e.rate.re, e.rate.im], "anchor": e.anchor,
            })).collect::<Vec<_>>()).collect::<Vec<_>>(),
        }))
        .collect::<Vec<_>>())
}

fn sample_law(law: &dyn ControlLaw, n: usize, offset: f64) -> Vec<Vec<f64>> {
    let d = law.duration();
    let mut buf = vec![0.0; law.dim()];
    (0..=n)
        .map(|i| {
            // the last sample is taken just inside the interval
            let t = if i == n { d * (1.0 - 1e-12) } else { d * i as f64 / n as f64 };
            law.value(t, &mut buf);
            let mut row = vec![offset + t];
            row.extend(&buf);
            row
        })
        .collect()
}

fn iteration_rows(sweeps: &[SweepRecord]) -> Vec<Vec<f64>> {
    sweeps
        .iter()
        .map(|s| {
            vec![
                s.sweep as f64,
                s.update_norm,
                s.ratio.unwrap_or(f64::NAN),
                s.source_norm,
                s.control_norm,
                s.weighted_v,
                s.weighted_f,
            ]
        })
        .collect()
}

const ITER_HEADER: [&str; 7] = ["sweep", "update_norm", "ratio", "source_norm", "control_norm", "weighted_v", "weighted_f"];

fn local(p: &Params, art: &mut Artifacts) -> Result<BTreeMap<String, bool>> {
    let m = model(p)?;
    let (k, grid) = resolution(p)?;
    let mut cfg = local_config(p, m, positive(p, "phi")?, positive(p, "t")?, k, grid)?;
    cfg.flow = flow_config(p)?.with_tolerance(p.f64("flow.rtol")?.min(1e-11), p.f64("flow.atol")?.min(1e-15));
    let u0 = expr::field(p.str("u0")?, k, grid)?;
    let r = local_exact_to_constant(&u0, &cfg)?;
    art.csv("iterations.csv", &ITER_HEADER, &iteration_rows(&r.sweeps))?;
    let header: &[&str] = if m == Model::Ch { &["t", "p4", "p5"] } else { &["t", "p4"] };
    art.csv("control.csv", header, &sample_law(&r.law, p.usize("signal_points")?.max(1), 0.0))?;
    let pieces = r.law.exp_pieces().unwrap_or_default();
    art.json("schedule.json", &json!({ "profiles_offset": 3, "pieces": pieces_json(&pieces) }))?;
    art.csv("terminal_spectrum.csv", &["k", "re", "im"], &spectrum_rows(&r.terminal))?;
    art.json("report.json", &r)?;
    let contraction = r.sweeps.iter().skip(1).filter_map(|s| s.ratio).all(|q| q < 0.5);
    Ok(BTreeMap::from([
        ("converged".to_string(), r.converged),
        ("contraction_below_half".to_string(), contraction),
        ("terminal_error".to_string(), r.terminal_error < positive(p, "error_tol")?),
    ]))
}

fn global(p: &Params, art: &mut Artifacts) -> Result<BTreeMap<String, bool>> {
    let m = model(p)?;
    let (k, grid) = resolution(p)?;
    let phi = p.f64("phi")?;
    if phi == 0.0 || !phi.is_finite() {
        return Err(Error::ConfigError("phi must be a nonzero constant".into()));
    }
    let t = positive(p, "t")?;
    let mut cfg = GlobalConfig::new(m, phi, t);
    cfg.local = local_config(p, m, phi, t / 2.0, k, grid)?;
    let mut synth_params = p.clone();
    synth_params.set("s", "0");
    synth_params.set("cap", "2");
    cfg.synth = synth_config(&synth_params, m, k, grid)?;
    cfg.radius = p.opt_f64("radius")?;
    cfg.phase1_eps = positive(p, "phase1_eps")?;
    cfg.refinements = p.usize("refinements")?;
    let u0 = expr::field(p.str("u0")?, k, grid)?;
    let r = global_to_constant(&u0, &cfg)?;
    let sweeps = r.phase2.as_ref().map(|l| l.sweeps.clone()).unwrap_or_default();
    art.csv("iterations.csv", &ITER_HEADER, &iteration_rows(&sweeps))?;
    let dim = cfg.local.extra_profiles().len() + 3;
    let mut phase1 = ControlSchedule::empty(dim);
    for plan in &r.phase1 {
        phase1 = phase1.concatenate(&plan.schedule.widened(dim));
    }
    art.csv("phase1_schedule.csv", &schedule_header(dim), &schedule_rows(&phase1))?;
    if let Some(l) = &r.phase2 {
        let law = l.full_law();
        let mut header = schedule_header(dim);
        header.remove(0);
        header[0] = "t";
        art.csv("control.csv", &header, &sample_law(&law, p.usize("signal_points")?.max(1), t / 2.0))?;
    }
    art.csv("terminal_spectrum.csv", &["k", "re", "im"], &spectrum_rows(&r.terminal))?;
    art.json("report.json", &r)?;
    Ok(BTreeMap::from([("terminal_error".to_string(), r.terminal_error < positive(p, "error_tol")?)]))
}

fn saturation(p: &Params, art: &mut Artifacts) -> Result<BTreeMap<String, bool>> {
    let n_max = p.usize("n_max")?;
    let cap = p.usize("cap")?;
    if n_max > cap {
        return Err(Error::ConfigError(format!("n_max = {n_max} exceeds cap = {cap}")));
    }
    let strategy = match p.str("strategy")? {
        "incremental" => LadderStrategy::Incremental,
        "doubling" => LadderStrategy::Doubling,
        o => return Err(Error::ConfigError(format!("strategy = '{o}' (expected incremental or doubling)"))),
    };
    let ladder = mode_ladder_all(n_max, cap, strategy)?;
    let table = derivation_table(n_max, cap, strategy)?;
    let mut rows = Vec::new();
    let mut sexpr = String::new();
    let mut all = true;
    for (row, pair) in table.iter().zip(ladder.iter().skip(1)) {
        let (c, s) = (TrigPolynomial::cos(row.n), TrigPolynomial::sin(row.n));
        let ce = pair.cos.evaluate() == c;
        let se = pair.sin.evaluate() == s;
        let cc = certify_root(&pair.cos, &c)?.member;
        let sc = certify_root(&pair.sin, &s)?.member;
        all &= ce && se && cc && sc;
        rows.push(vec![
            row.n.to_string(),
            row.depth.to_string(),
            row.node_count.to_string(),
            ce.to_string(),
            se.to_string(),
            cc.to_string(),
            sc.to_string(),
        ]);
        sexpr.push_str(&format!("; cos {}x\n{}\n; sin {}x\n{}\n", row.n, pair.cos.to_sexpr(), row.n, pair.sin.to_sexpr()));
    }
    art.csv_text(
        "derivation.csv",
        &["n", "depth", "node_count", "cos_exact", "sin_exact", "cos_certified", "sin_certified"],
        &rows,
    )?;
    art.write_bytes("witnesses.sexpr", sexpr.as_bytes())?;
    Ok(BTreeMap::from([("all_exact".to_string(), all)]))
}

/// Number formatting shared with the CSV writer, for callers printing summaries.
pub fn format_number(x: f64) -> String {
    num(x)
}
