//! Parameter sweeps over detuning, coupling and mechanical frequency, plus
//! the ground-state map. Rows are computed in parallel and emitted in input
//! order.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cavity::{cavity_poles, effective_skewness, photon_spectrum, skewness, skewness_grid, PoleRegion};
use crate::mechanics::{min_backaction, occupation, CoolingReport};
use crate::optimize::{
    optimize_detuning, optimize_operating_point, reference_drive, Mode, Objective, OptimizeOptions, Optimum,
    PowerReference,
};
use crate::oracle::attach_oracle;
use crate::output::{Cell, Table};
use crate::params::{as_number, parse_flat, ConfigError, OperatingPoint, SystemParams};
use crate::steady_state::{photon_branches, solve_steady, Branch, SteadyState, CRITICAL_FRACTION};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown sweep kind `{0}`")]
    Kind(String),
    #[error("invalid value for `{key}`: {reason}")]
    Value { key: String, reason: String },
}

fn bad(key: &str, reason: impl Into<String>) -> SweepError {
    SweepError::Value { key: key.into(), reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    DetuningProfile,
    CouplingSweep,
    SidebandSweep,
    SidebandSweepSqueezed,
    OptimalPowerCurve,
    GroundStateMap,
}

impl SweepKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "detuning_profile" => Self::DetuningProfile,
            "coupling_sweep" => Self::CouplingSweep,
            "sideband_sweep" => Self::SidebandSweep,
            "sideband_sweep_squeezed" => Self::SidebandSweepSqueezed,
            "optimal_power_curve" => Self::OptimalPowerCurve,
            "ground_state_map" => Self::GroundStateMap,
            _ => return None,
        })
    }

    /// Axes in the order they are nested (outer first) with their defaults.
    fn default_axes(&self) -> Vec<Axis> {
        match self {
            Self::DetuningProfile => vec![Axis::new("detuning_over_kappa", -3.0, 1.0, 4001, Scale::Linear)],
            Self::CouplingSweep => vec![Axis::new("g0_hz", 1.0e3, 23.28e3, 41, Scale::Log)],
            Self::SidebandSweep | Self::SidebandSweepSqueezed => {
                vec![Axis::new("omega_m_over_kappa", 0.01, 10.0, 41, Scale::Log)]
            }
            Self::OptimalPowerCurve => vec![Axis::new("omega_m_over_kappa", 0.01, 1.0, 41, Scale::Log)],
            Self::GroundStateMap => vec![
                Axis::new("omega_m_over_kappa", 0.01, 0.5, 120, Scale::Linear),
                Axis::new("g0_over_kappa", 1e-4, 1e-2, 120, Scale::Log),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub scale: Scale,
}

impl Axis {
    pub fn new(name: &str, start: f64, stop: f64, count: usize, scale: Scale) -> Self {
        Self { name: name.into(), start, stop, count, scale }
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.count;
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                match self.scale {
                    Scale::Linear => self.start + (self.stop - self.start) * t,
                    Scale::Log => (self.start.ln() + (self.stop.ln() - self.start.ln()) * t).exp(),
                }
            })
            .collect()
    }

    fn validate(&self) -> Result<(), SweepError> {
        if self.count < 2 {
            return Err(bad(&format!("{}_count", self.name), "needs at least 2 points"));
        }
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(bad(&self.name, "range must be finite"));
        }
        if self.scale == Scale::Log && !(self.start > 0.0 && self.stop > 0.0) {
            return Err(bad(&self.name, "log scale needs positive endpoints"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub modes: Vec<Mode>,
    pub axes: Vec<Axis>,
    /// Power cap as a fraction of n_in_bi.
    pub cap: f64,
    /// Coupling override in rad/s.
    pub g0: Option<f64>,
    pub xi: f64,
    pub oracle_objective: bool,
    pub oracle_check: bool,
    pub power_reference: PowerReference,
    pub power_points: usize,
    pub detuning_points: usize,
}

impl SweepSpec {
    pub fn new(kind: SweepKind) -> Self {
        Self {
            kind,
            modes: vec![Mode::Nonlinear],
            axes: kind.default_axes(),
            cap: CRITICAL_FRACTION,
            g0: match kind {
                SweepKind::SidebandSweep
                | SweepKind::SidebandSweepSqueezed
                | SweepKind::OptimalPowerCurve => Some(TAU * 15e3),
                _ => None,
            },
            xi: 0.9,
            oracle_objective: false,
            oracle_check: false,
            power_reference: match kind {
                SweepKind::OptimalPowerCurve => PowerReference::OwnBifurcation,
                _ => PowerReference::NonlinearCap,
            },
            power_points: 64,
            detuning_points: 600,
        }
    }

    pub fn with_modes(mut self, modes: &[Mode]) -> Self {
        self.modes = modes.to_vec();
        self
    }

    pub fn with_axis(mut self, name: &str, start: f64, stop: f64, count: usize) -> Self {
        if let Some(a) = self.axes.iter_mut().find(|a| a.name == name) {
            a.start = start;
            a.stop = stop;
            a.count = count;
        }
        self
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if !(self.cap > 0.0 && self.cap <= 1.0) {
            return Err(bad("cap", "must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.xi) {
            return Err(bad("xi", "must lie in [0, 1]"));
        }
        if let Some(g) = self.g0 {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(bad("g0_hz", "must be finite and non-negative"));
            }
        }
        if self.modes.is_empty() {
            return Err(bad("mode", "no mode selected"));
        }
        if self.power_points < 2 || self.detuning_points < 3 {
            return Err(bad("power_points", "optimizer grids are too small"));
        }
        self.axes.iter().try_for_each(Axis::validate)
    }

    fn axis(&self, name: &str) -> &Axis {
        self.axes.iter().find(|a| a.name == name).expect("axis defined for this kind")
    }

    fn options(&self) -> OptimizeOptions {
        OptimizeOptions {
            cap: self.cap,
            power_points: self.power_points,
            detuning_points: self.detuning_points,
            rel_tol: 1e-4,
            objective: if self.kind == SweepKind::SidebandSweepSqueezed {
                Objective::Squeezed { xi: self.xi }
            } else if self.oracle_objective {
                Objective::Oracle
            } else {
                Objective::RateForm
            },
            power_reference: self.power_reference,
        }
    }
}

fn text<'a>(key: &str, v: &'a toml::Value) -> Result<&'a str, SweepError> {
    v.as_str().ok_or_else(|| bad(key, "expected a string"))
}

fn count(key: &str, v: &toml::Value) -> Result<usize, SweepError> {
    match v.as_integer() {
        Some(i) if i >= 0 => Ok(i as usize),
        _ => Err(bad(key, "expected a non-negative integer")),
    }
}

fn flag(key: &str, v: &toml::Value) -> Result<bool, SweepError> {
    v.as_bool().ok_or_else(|| bad(key, "expected true or false"))
}

/// Reads a sweep spec from a flat key-value document.
///
/// `kind` is required. Optional keys: `mode` (nonlinear, linear, both),
/// `cap`, `g0_hz`, `xi`, `objective` (rate, oracle), `oracle_check`,
/// `power_reference` (nonlinear, own), `power_points`, `detuning_points`,
/// and for every axis `<axis>_start`, `_stop`, `_count`, `_scale`.
pub fn parse_spec(document: &str) -> Result<SweepSpec, SweepError> {
    let table: BTreeMap<String, toml::Value> = parse_flat(document)?;
    let kind_s = text("kind", table.get("kind").ok_or(ConfigError::Missing("kind"))?)?;
    let kind = SweepKind::parse(kind_s).ok_or_else(|| SweepError::Kind(kind_s.into()))?;
    let mut spec = SweepSpec::new(kind);
    for (k, v) in &table {
        match k.as_str() {
            "kind" => {}
            "mode" => {
                spec.modes = match text(k, v)? {
                    "nonlinear" => vec![Mode::Nonlinear],
                    "linear" => vec![Mode::LinearComparison],
                    "both" => vec![Mode::Nonlinear, Mode::LinearComparison],
                    other => return Err(bad(k, format!("unknown mode `{other}`"))),
                }
            }
            "cap" => spec.cap = as_number(k, v)?,
            "g0_hz" => spec.g0 = Some(TAU * as_number(k, v)?),
            "xi" => spec.xi = as_number(k, v)?,
            "objective" => {
                spec.oracle_objective = match text(k, v)? {
                    "rate" => false,
                    "oracle" => true,
                    other => return Err(bad(k, format!("unknown objective `{other}`"))),
                }
            }
            "oracle_check" => spec.oracle_check = flag(k, v)?,
            "power_reference" => {
                spec.power_reference = match text(k, v)? {
                    "nonlinear" => PowerReference::NonlinearCap,
                    "own" => PowerReference::OwnBifurcation,
                    other => return Err(bad(k, format!("unknown power reference `{other}`"))),
                }
            }
            "power_points" => spec.power_points = count(k, v)?,
            "detuning_points" => spec.detuning_points = count(k, v)?,
            _ => {
                let axis = spec.axes.iter_mut().find_map(|a| {
                    k.strip_prefix(a.name.as_str()).and_then(|s| s.strip_prefix('_')).map(|field| (a, field))
                });
                match axis {
                    Some((a, "start")) => a.start = as_number(k, v)?,
                    Some((a, "stop")) => a.stop = as_number(k, v)?,
                    Some((a, "count")) => a.count = count(k, v)?,
                    Some((a, "scale")) => {
                        a.scale = match text(k, v)? {
                            "linear" => Scale::Linear,
                            "log" => Scale::Log,
                            other => return Err(bad(k, format!("unknown scale `{other}`"))),
                        }
                    }
                    _ => return Err(ConfigError::Unknown(k.clone()).into()),
                }
            }
        }
    }
    spec.validate()?;
    Ok(spec)
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Nonlinear => "nonlinear",
        Mode::LinearComparison => "linear",
    }
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Monostable => "monostable",
        Branch::BistableLower => "lower",
        Branch::BistableMiddle => "middle",
        Branch::BistableUpper => "upper",
    }
}

fn region_name(r: PoleRegion) -> &'static str {
    match r {
        PoleRegion::SplitFrequencies => "split_frequencies",
        PoleRegion::SplitDecays => "split_decays",
        PoleRegion::ExceptionalPoint => "exceptional_point",
    }
}

const REPORT_COLUMNS: [&str; 12] = [
    "gamma_stokes_rad_s",
    "gamma_antistokes_rad_s",
    "gamma_opt_rad_s",
    "c_eff",
    "n_closed",
    "n_rate",
    "n_backaction",
    "n_thermal_part",
    "n_backaction_part",
    "sigma_re_rad_s",
    "sigma_im_rad_s",
    "n_oracle",
];

fn report_cells(rep: Option<&CoolingReport>) -> Vec<Cell> {
    let Some(r) = rep else {
        return vec![Cell::Num(f64::NAN); REPORT_COLUMNS.len()];
    };
    [
        r.rates.gamma_stokes,
        r.rates.gamma_antistokes,
        r.rates.gamma_opt,
        r.rates.c_eff,
        r.n_closed,
        r.n_rate,
        r.n_backaction.unwrap_or(f64::NAN),
        r.n_thermal_part,
        r.n_backaction_part,
        r.sigma_m.re,
        r.sigma_m.im,
        r.oracle.map_or(f64::NAN, |o| o.n_oracle),
    ]
    .into_iter()
    .map(Cell::Num)
    .collect()
}

fn columns(lead: &[&str], report: bool, tail: &[&str]) -> Vec<String> {
    let mut c: Vec<&str> = lead.to_vec();
    if report {
        c.extend(REPORT_COLUMNS);
    }
    c.extend(tail);
    c.into_iter().map(String::from).collect()
}

fn table(name: &str, cols: Vec<String>, rows: Vec<Vec<Cell>>) -> Table {
    let mut t = Table { name: name.into(), columns: cols, rows: Vec::new() };
    for r in rows {
        t.push(r);
    }
    t
}

/// Cooling report with the oracle attached when requested. Oracle failures
/// leave the report without a check.
fn report_for(ss: &SteadyState, q: &SystemParams, oracle: bool) -> Result<CoolingReport, String> {
    let mut rep = occupation(ss, q).map_err(|e| e.to_string())?;
    if oracle {
        let _ = attach_oracle(&mut rep, ss, q);
    }
    Ok(rep)
}

fn with_report(mut rep: Optimum, q: &SystemParams, oracle: bool) -> Optimum {
    if oracle {
        let op = OperatingPoint::new(rep.detuning, rep.n_in);
        if let Ok(ss) = solve_steady(q, &op) {
            let _ = attach_oracle(&mut rep.report, &ss, q);
        }
    }
    rep
}

fn run_detuning_profile(p: &SystemParams, spec: &SweepSpec) -> Table {
    let cols = columns(
        &[
            "mode",
            "detuning_over_kappa",
            "detuning_rad_s",
            "n_in_per_s",
            "root_count",
            "n_c",
            "n_c_upper",
            "branch",
            "pole_region",
            "pole1_re_rad_s",
            "pole1_im_rad_s",
            "pole2_re_rad_s",
            "pole2_im_rad_s",
            "skewness",
            "skewness_eff",
        ],
        true,
        &["error"],
    );
    let xs = spec.axis("detuning_over_kappa").values();
    let n_in = spec.cap * reference_drive(p, Mode::Nonlinear, PowerReference::NonlinearCap).unwrap_or(f64::NAN);
    let grid = skewness_grid(p);
    let mut rows = Vec::new();
    for &mode in &spec.modes {
        let q = mode.apply(p);
        let part: Vec<Vec<Cell>> = xs
            .par_iter()
            .map(|&x| {
                let d = x * q.kappa;
                let mut row: Vec<Cell> = vec![mode_name(mode).into(), x.into(), d.into(), n_in.into()];
                let roots = photon_branches(&q, d, n_in);
                row.push(roots.len().into());
                match solve_steady(&q, &OperatingPoint::new(d, n_in)) {
                    Ok(ss) => {
                        let poles = cavity_poles(&ss, &q);
                        let upper = if roots.len() > 1 { roots[roots.len() - 1].n_c } else { f64::NAN };
                        let sk = photon_spectrum(&ss, &q, &grid)
                            .ok()
                            .and_then(|s| skewness(&s).ok())
                            .unwrap_or(f64::NAN);
                        let sk_eff = effective_skewness(&q, n_in, d).unwrap_or(f64::NAN);
                        row.extend([ss.n_c.into(), upper.into(), branch_name(ss.branch).into()]);
                        row.push(region_name(poles.region).into());
                        for z in poles.poles {
                            row.extend([z.re.into(), z.im.into()]);
                        }
                        row.extend([sk.into(), sk_eff.into()]);
                        match report_for(&ss, &q, spec.oracle_check) {
                            Ok(rep) => {
                                row.extend(report_cells(Some(&rep)));
                                row.push("".into());
                            }
                            Err(e) => {
                                row.extend(report_cells(None));
                                row.push(e.into());
                            }
                        }
                    }
                    Err(e) => {
                        row.extend(vec![Cell::Num(f64::NAN); 2]);
                        row.push("".into());
                        row.push("".into());
                        row.extend(vec![Cell::Num(f64::NAN); 6]);
                        row.extend(report_cells(None));
                        row.push(e.to_string().into());
                    }
                }
                row
            })
            .collect();
        rows.extend(part);
    }
    table("detuning_profile", cols, rows)
}

fn optimum_cells(o: &Result<Optimum, String>, kappa: f64) -> (Vec<Cell>, Vec<Cell>, Cell) {
    match o {
        Ok(o) => (
            vec![
                o.detuning.into(),
                (o.detuning / kappa).into(),
                o.n_in.into(),
                (o.n_in / o.n_in_ref).into(),
                o.n_m.into(),
            ],
            vec![o.converged.into(), o.evaluations.into()],
            "".into(),
        ),
        Err(e) => (
            vec![Cell::Num(f64::NAN); 5],
            vec![false.into(), 0usize.into()],
            e.clone().into(),
        ),
    }
}

const OPT_COLUMNS: [&str; 5] = ["detuning_rad_s", "detuning_over_kappa", "n_in_per_s", "power_fraction", "n_m"];

fn run_coupling_sweep(p: &SystemParams, spec: &SweepSpec) -> Table {
    let lead: Vec<&str> = ["mode", "g0_hz", "g0_rad_s"].into_iter().chain(OPT_COLUMNS).collect();
    let cols = columns(&lead, true, &["converged", "evaluations", "error"]);
    let xs = spec.axis("g0_hz").values();
    let opts = spec.options();
    let mut rows = Vec::new();
    for &mode in &spec.modes {
        let part: Vec<Vec<Cell>> = xs
            .par_iter()
            .map(|&g| {
                let q = p.with_g0(TAU * g);
                let o = optimize_operating_point(&q, mode, &opts)
                    .map(|o| with_report(o, &mode.apply(&q), spec.oracle_check))
                    .map_err(|e| e.to_string());
                let (opt, meta, err) = optimum_cells(&o, q.kappa);
                let mut row: Vec<Cell> = vec![mode_name(mode).into(), g.into(), (TAU * g).into()];
                row.extend(opt);
                row.extend(report_cells(o.as_ref().ok().map(|o| &o.report)));
                row.extend(meta);
                row.push(err);
                row
            })
            .collect();
        rows.extend(part);
    }
    table("coupling_sweep", cols, rows)
}

/// System at ω_m = r·κ with the bath temperature held fixed.
pub fn at_sideband_ratio(p: &SystemParams, r: f64) -> SystemParams {
    p.with_omega_m_fixed_temperature(r * p.kappa)
}

fn run_sideband_sweep(p: &SystemParams, spec: &SweepSpec) -> Table {
    let squeezed = spec.kind == SweepKind::SidebandSweepSqueezed;
    let lead: Vec<&str> =
        ["mode", "omega_m_over_kappa", "omega_m_rad_s", "n_th"].into_iter().chain(OPT_COLUMNS).chain(["n_ba_min"]).collect();
    let tail: &[&str] = if squeezed {
        &["xi", "squeeze_db", "n_s", "sideband_ratio", "n_ba_squeezed", "converged", "evaluations", "error"]
    } else {
        &["converged", "evaluations", "error"]
    };
    let cols = columns(&lead, true, tail);
    let xs = spec.axis("omega_m_over_kappa").values();
    let base = spec.g0.map_or(*p, |g| p.with_g0(g));
    let opts = spec.options();
    let mut rows = Vec::new();
    for &mode in &spec.modes {
        let part: Vec<Vec<Cell>> = xs
            .par_iter()
            .map(|&r| {
                let q = at_sideband_ratio(&base, r);
                let o = reference_drive(&q, mode, spec.power_reference)
                    .and_then(|n| optimize_detuning(&q, mode, spec.cap * n, &opts))
                    .map(|o| with_report(o, &mode.apply(&q), spec.oracle_check))
                    .map_err(|e| e.to_string());
                let (opt, meta, err) = optimum_cells(&o, q.kappa);
                let mut row: Vec<Cell> = vec![mode_name(mode).into(), r.into(), q.omega_m.into(), q.n_th.into()];
                row.extend(opt);
                row.push(min_backaction(&q).1.into());
                row.extend(report_cells(o.as_ref().ok().map(|o| &o.report)));
                if squeezed {
                    let s = o.as_ref().ok().and_then(|o| o.squeeze);
                    row.push(spec.xi.into());
                    for v in [s.map(|s| s.db), s.map(|s| s.n_s_opt), s.map(|s| s.wp * s.wp), s.map(|s| s.n_ba_s)] {
                        row.push(v.unwrap_or(f64::NAN).into());
                    }
                }
                row.extend(meta);
                row.push(err);
                row
            })
            .collect();
        rows.extend(part);
    }
    table(if squeezed { "sideband_sweep_squeezed" } else { "sideband_sweep" }, cols, rows)
}

fn run_power_curve(p: &SystemParams, spec: &SweepSpec) -> Table {
    let lead: Vec<&str> = ["mode", "omega_m_over_kappa", "omega_m_rad_s"].into_iter().chain(OPT_COLUMNS).collect();
    let cols = columns(
        &lead,
        false,
        &["n_in_over_nonlinear_bi", "n_in_over_own_bi", "threshold_ratio", "c_eff", "converged", "evaluations", "error"],
    );
    let xs = spec.axis("omega_m_over_kappa").values();
    let base = spec.g0.map_or(*p, |g| p.with_g0(g));
    let opts = spec.options();
    let mut rows = Vec::new();
    for &mode in &spec.modes {
        let part: Vec<Vec<Cell>> = xs
            .par_iter()
            .map(|&r| {
                let q = at_sideband_ratio(&base, r);
                let o = optimize_operating_point(&q, mode, &opts).map_err(|e| e.to_string());
                let (opt, meta, err) = optimum_cells(&o, q.kappa);
                let nl = reference_drive(&q, mode, PowerReference::NonlinearCap).unwrap_or(f64::NAN);
                let own = reference_drive(&q, mode, PowerReference::OwnBifurcation).unwrap_or(f64::NAN);
                let n_in = o.as_ref().map_or(f64::NAN, |o| o.n_in);
                let mut row: Vec<Cell> = vec![mode_name(mode).into(), r.into(), q.omega_m.into()];
                row.extend(opt);
                row.extend([(n_in / nl).into(), (n_in / own).into()]);
                // n_in_bi of the K = 0 system over that of the full system
                row.push((1.0 + q.kerr * q.omega_m / (2.0 * q.g0 * q.g0)).into());
                row.push(o.as_ref().map_or(f64::NAN, |o| o.report.rates.c_eff).into());
                row.extend(meta);
                row.push(err);
                row
            })
            .collect();
        rows.extend(part);
    }
    table("optimal_power_curve", cols, rows)
}

/// Lowest occupation over detuning at ω_m = r·κ, g0 = g·κ, drive at the cap.
pub fn map_occupation(p: &SystemParams, mode: Mode, r: f64, g: f64, opts: &OptimizeOptions) -> Result<f64, String> {
    let q = at_sideband_ratio(p, r).with_g0(g * p.kappa);
    let n = reference_drive(&q, mode, opts.power_reference).map_err(|e| e.to_string())?;
    optimize_detuning(&q, mode, opts.cap * n, opts).map(|o| o.n_m).map_err(|e| e.to_string())
}

/// Smallest g0/κ in [lo, hi] reaching n_m < 1 at ω_m = r·κ, by bisection in
/// log g0. `None` when the whole bracket stays above one phonon.
pub fn ground_state_boundary(
    p: &SystemParams,
    mode: Mode,
    r: f64,
    lo: f64,
    hi: f64,
    opts: &OptimizeOptions,
) -> Option<f64> {
    let below = |g: f64| map_occupation(p, mode, r, g, opts).is_ok_and(|n| n < 1.0);
    if !below(hi) {
        return None;
    }
    if below(lo) {
        return Some(lo);
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    while b - a > 1e-6 {
        let m = 0.5 * (a + b);
        if below(m.exp()) {
            b = m;
        } else {
            a = m;
        }
    }
    Some(b.exp())
}

fn run_ground_state_map(p: &SystemParams, spec: &SweepSpec) -> Vec<Table> {
    let rs = spec.axis("omega_m_over_kappa").values();
    let gs_axis = spec.axis("g0_over_kappa");
    let gs = gs_axis.values();
    let opts = spec.options();
    let mut map_rows = Vec::new();
    let mut edge_rows = Vec::new();
    for &mode in &spec.modes {
        let cells: Vec<(f64, f64)> = rs.iter().flat_map(|&r| gs.iter().map(move |&g| (r, g))).collect();
        let part: Vec<Vec<Cell>> = cells
            .par_iter()
            .map(|&(r, g)| {
                let n = map_occupation(p, mode, r, g, &opts);
                let v = *n.as_ref().unwrap_or(&f64::NAN);
                vec![
                    mode_name(mode).into(),
                    r.into(),
                    g.into(),
                    v.into(),
                    (v < 1.0).into(),
                    n.err().unwrap_or_default().into(),
                ]
            })
            .collect();
        map_rows.extend(part);
        let (lo, hi) = (gs_axis.start.min(gs_axis.stop), gs_axis.start.max(gs_axis.stop));
        let part: Vec<Vec<Cell>> = rs
            .par_iter()
            .map(|&r| {
                let b = ground_state_boundary(p, mode, r, lo, hi, &opts);
                let err = if b.is_none() { "no ground state within the coupling range" } else { "" };
                vec![mode_name(mode).into(), r.into(), b.unwrap_or(f64::NAN).into(), err.into()]
            })
            .collect();
        edge_rows.extend(part);
    }
    vec![
        table(
            "ground_state_map",
            columns(&["mode", "omega_m_over_kappa", "g0_over_kappa", "n_m", "ground_state", "error"], false, &[]),
            map_rows,
        ),
        table(
            "ground_state_boundary",
            columns(&["mode", "omega_m_over_kappa", "g0_over_kappa", "error"], false, &[]),
            edge_rows,
        ),
    ]
}

/// Runs a sweep. Failures at individual points are recorded in the row's
/// `error` column.
pub fn run_sweep(p: &SystemParams, spec: &SweepSpec) -> Result<Vec<Table>, SweepError> {
    spec.validate()?;
    Ok(match spec.kind {
        SweepKind::DetuningProfile => vec![run_detuning_profile(p, spec)],
        SweepKind::CouplingSweep => vec![run_coupling_sweep(p, spec)],
        SweepKind::SidebandSweep | SweepKind::SidebandSweepSqueezed => vec![run_sideband_sweep(p, spec)],
        SweepKind::OptimalPowerCurve => vec![run_power_curve(p, spec)],
        SweepKind::GroundStateMap => run_ground_state_map(p, spec),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::default_params;

    #[test]
    fn parses_spec() {
        let s = parse_spec(
            "kind = \"sideband_sweep\"\nmode = \"both\"\ng0_hz = 15e3\nomega_m_over_kappa_start = 0.05\n\
             omega_m_over_kappa_count = 5\nomega_m_over_kappa_scale = \"linear\"\n",
        )
        .unwrap();
        assert_eq!(s.kind, SweepKind::SidebandSweep);
        assert_eq!(s.modes.len(), 2);
        let a = &s.axes[0];
        assert_eq!((a.start, a.stop, a.count, a.scale), (0.05, 10.0, 5, Scale::Linear));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(parse_spec("kind = \"nope\""), Err(SweepError::Kind(_))));
        assert!(parse_spec("mode = \"both\"").is_err());
        assert!(parse_spec("kind = \"coupling_sweep\"\ng0_hz_count = 1").is_err());
        assert!(parse_spec("kind = \"coupling_sweep\"\ncap = 2.0").is_err());
        assert!(matches!(
            parse_spec("kind = \"coupling_sweep\"\nbogus = 1"),
            Err(SweepError::Config(ConfigError::Unknown(_)))
        ));
    }

    #[test]
    fn axis_endpoints() {
        let a = Axis::new("x", 1e-3, 10.0, 5, Scale::Log);
        let v = a.values();
        assert!((v[0] - 1e-3).abs() < 1e-18 && (v[4] - 10.0).abs() < 1e-12);
        assert!((v[2] - 0.1).abs() < 1e-14);
    }

    #[test]
    fn profile_rows_in_order() {
        let spec = SweepSpec::new(SweepKind::DetuningProfile)
            .with_modes(&[Mode::Nonlinear, Mode::LinearComparison])
            .with_axis("detuning_over_kappa", -2.0, 0.5, 11);
        let t = &run_sweep(&default_params(), &spec).unwrap()[0];
        assert_eq!(t.rows.len(), 22);
        let x = t.numbers("detuning_over_kappa").unwrap();
        assert!(x[..11].windows(2).all(|w| w[0] < w[1]));
        assert_eq!(t.rows[11][0], Cell::from("linear"));
    }
}
