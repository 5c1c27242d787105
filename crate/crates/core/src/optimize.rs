//! Derivative-free search for the drive detuning and power that minimise the
//! phonon occupation below the bistable threshold.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mechanics::{occupation, CoolingError, CoolingReport};
use crate::oracle::{build_matrix, numeric_occupation, InputCorrelators};
use crate::params::{BranchPolicy, OperatingPoint, SystemParams};
use crate::squeezing::{squeezed_backaction, SqueezedBackaction};
use crate::steady_state::{bifurcation, solve_steady, SteadyState, SteadyStateError, CRITICAL_FRACTION};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("power cap fraction must lie in (0, 1], got {0}")]
    Cap(f64),
    #[error("no feasible operating point found")]
    Infeasible,
    #[error(transparent)]
    Steady(#[from] SteadyStateError),
    #[error(transparent)]
    Cooling(#[from] CoolingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Mode {
    #[default]
    Nonlinear,
    /// Intrinsic Kerr switched off, mechanical Kerr kept.
    LinearComparison,
}

impl Mode {
    pub fn apply(&self, p: &SystemParams) -> SystemParams {
        match self {
            Mode::Nonlinear => *p,
            Mode::LinearComparison => p.linear(),
        }
    }
}

/// Which bistability threshold the power cap refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PowerReference {
    /// Threshold of the full nonlinear system, used for both modes.
    #[default]
    NonlinearCap,
    /// Threshold of the system actually being evaluated.
    OwnBifurcation,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum Objective {
    /// Rate-form occupation.
    #[default]
    RateForm,
    /// Rate-form occupation with matched squeezed input of purity `xi`.
    Squeezed { xi: f64 },
    /// Quadrature of the full 4×4 mechanical spectrum.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOptions {
    pub cap: f64,
    pub power_points: usize,
    pub detuning_points: usize,
    pub rel_tol: f64,
    pub objective: Objective,
    pub power_reference: PowerReference,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            cap: CRITICAL_FRACTION,
            power_points: 64,
            detuning_points: 600,
            rel_tol: 1e-4,
            objective: Objective::RateForm,
            power_reference: PowerReference::NonlinearCap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub detuning: f64,
    pub n_in: f64,
    /// Threshold drive the cap refers to.
    pub n_in_ref: f64,
    pub n_m: f64,
    pub report: CoolingReport,
    pub squeeze: Option<SqueezedBackaction>,
    pub converged: bool,
    pub evaluations: usize,
}

/// Threshold drive n_in_bi under the chosen reference.
pub fn reference_drive(p: &SystemParams, mode: Mode, reference: PowerReference) -> Result<f64, OptimizeError> {
    let q = match reference {
        PowerReference::NonlinearCap => *p,
        PowerReference::OwnBifurcation => mode.apply(p),
    };
    Ok(bifurcation(&q)?.n_in_bi)
}

fn steady(q: &SystemParams, delta: f64, n_in: f64) -> Result<SteadyState, OptimizeError> {
    let op = OperatingPoint::new(delta, n_in).with_policy(BranchPolicy::RequireMonostable);
    Ok(solve_steady(q, &op)?)
}

/// Objective value at one operating point of the mode-adjusted system `q`.
pub fn evaluate(q: &SystemParams, delta: f64, n_in: f64, objective: Objective) -> Result<f64, OptimizeError> {
    let ss = steady(q, delta, n_in)?;
    let rep = occupation(&ss, q)?;
    if rep.rates.gamma_opt <= 0.0 {
        return Err(CoolingError::HeatingSide(rep.delta_eff).into());
    }
    match objective {
        Objective::RateForm => Ok(rep.n_rate),
        Objective::Squeezed { xi } => {
            let total = q.gamma_m + rep.rates.gamma_opt;
            Ok(q.n_th * (q.gamma_m / total) + (1.0 - xi) * rep.rates.gamma_stokes / total)
        }
        Objective::Oracle => {
            let dm = build_matrix(&ss, q);
            numeric_occupation(&dm, &InputCorrelators::thermal(q), q.kappa).map(|n| n.value).map_err(|_| OptimizeError::Infeasible)
        }
    }
}

fn value(q: &SystemParams, delta: f64, n_in: f64, objective: Objective) -> f64 {
    evaluate(q, delta, n_in, objective).unwrap_or(f64::INFINITY)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimisation of `f` on [a, b]. Returns (x, f(x), evaluations).
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> (f64, f64, usize) {
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let mut evals = 2;
    while b - a > xtol && evals < 200 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        evals += 1;
    }
    if f1 <= f2 {
        (x1, f1, evals)
    } else {
        (x2, f2, evals)
    }
}

/// Red-detuned search grid: log-spaced |Δ| in [1e-3, 20]κ plus Δ_bi.
pub fn detuning_grid(q: &SystemParams, points: usize) -> Vec<f64> {
    let points = points.max(3);
    let (lo, hi) = (1e-3f64.ln(), 20f64.ln());
    let mut g: Vec<f64> =
        (0..points).map(|i| -q.kappa * (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp()).collect();
    if let Ok(b) = bifurcation(q) {
        g.push(b.delta_bi);
    }
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

fn bracket(grid: &[f64], vals: &[f64]) -> Option<(usize, f64, f64)> {
    let (i, _) = vals.iter().enumerate().filter(|(_, v)| v.is_finite()).min_by(|a, b| a.1.total_cmp(b.1))?;
    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(grid.len() - 1)];
    Some((i, lo, hi))
}

struct Best {
    delta: f64,
    n_m: f64,
    evals: usize,
}

fn best_detuning(q: &SystemParams, n_in: f64, opts: &OptimizeOptions) -> Option<Best> {
    let grid = detuning_grid(q, opts.detuning_points);
    let vals: Vec<f64> = grid.iter().map(|&d| value(q, d, n_in, opts.objective)).collect();
    let (i, lo, hi) = bracket(&grid, &vals)?;
    let (x, fx, e) = golden_min(|d| value(q, d, n_in, opts.objective), lo, hi, 1e-9 * lo.abs());
    let (delta, n_m) = if fx <= vals[i] { (x, fx) } else { (grid[i], vals[i]) };
    Some(Best { delta, n_m, evals: grid.len() + e })
}

fn finish(
    q: &SystemParams,
    delta: f64,
    n_in: f64,
    n_in_ref: f64,
    n_m: f64,
    converged: bool,
    evaluations: usize,
    objective: Objective,
) -> Result<Optimum, OptimizeError> {
    let ss = steady(q, delta, n_in)?;
    let report = occupation(&ss, q)?;
    let squeeze = match objective {
        Objective::Squeezed { xi } => squeezed_backaction(&ss, q, xi).ok(),
        _ => None,
    };
    Ok(Optimum { detuning: delta, n_in, n_in_ref, n_m, report, squeeze, converged, evaluations })
}

/// ±1% perturbation test on each coordinate.
fn is_local_min(q: &SystemParams, delta: f64, n_in: f64, n_max: f64, n_m: f64, opts: &OptimizeOptions) -> bool {
    let floor = n_m * (1.0 - opts.rel_tol);
    let ok = |d: f64, n: f64| n > n_max || value(q, d, n, opts.objective) >= floor;
    ok(delta * 1.01, n_in) && ok(delta * 0.99, n_in) && ok(delta, n_in * 1.01) && ok(delta, n_in * 0.99)
}

/// Best detuning at a fixed drive.
pub fn optimize_detuning(p: &SystemParams, mode: Mode, n_in: f64, opts: &OptimizeOptions) -> Result<Optimum, OptimizeError> {
    let q = mode.apply(p);
    let n_ref = reference_drive(p, mode, opts.power_reference).unwrap_or(f64::NAN);
    let b = best_detuning(&q, n_in, opts).ok_or(OptimizeError::Infeasible)?;
    let floor = b.n_m * (1.0 - opts.rel_tol);
    let conv = [1.01, 0.99].iter().all(|s| value(&q, b.delta * s, n_in, opts.objective) >= floor);
    finish(&q, b.delta, n_in, n_ref, b.n_m, conv, b.evals + 2, opts.objective)
}

/// Minimises the occupation over detuning and drive with
/// n_in ≤ cap·n_in_bi and a single stable branch.
pub fn optimize_operating_point(p: &SystemParams, mode: Mode, opts: &OptimizeOptions) -> Result<Optimum, OptimizeError> {
    if !(opts.cap > 0.0 && opts.cap <= 1.0) {
        return Err(OptimizeError::Cap(opts.cap));
    }
    let q = mode.apply(p);
    let n_ref = reference_drive(p, mode, opts.power_reference)?;
    let n_max = opts.cap * n_ref;
    let rate_opts = OptimizeOptions {
        objective: match opts.objective {
            Objective::Oracle => Objective::RateForm,
            o => o,
        },
        ..*opts
    };
    let np = opts.power_points.max(2);
    let logs: Vec<f64> = (0..np).map(|i| -3.0 + 3.0 * i as f64 / (np - 1) as f64).collect();
    let drive = |l: f64| n_max * 10f64.powf(l);
    let inner: Vec<Option<Best>> = logs.par_iter().map(|&l| best_detuning(&q, drive(l), &rate_opts)).collect();
    let mut evals: usize = inner.iter().flatten().map(|b| b.evals).sum();
    let vals: Vec<f64> = inner.iter().map(|b| b.as_ref().map_or(f64::INFINITY, |b| b.n_m)).collect();
    let (i, lo, hi) = bracket(&logs, &vals).ok_or(OptimizeError::Infeasible)?;
    let best_i = inner[i].as_ref().unwrap();
    let (mut delta, mut n_m, mut l_best) = (best_i.delta, best_i.n_m, logs[i]);
    let (l, fl, e) = golden_min(
        |l| {
            evals += 1;
            best_detuning(&q, drive(l), &rate_opts).map_or(f64::INFINITY, |b| b.n_m)
        },
        lo,
        hi,
        1e-7,
    );
    evals += e;
    if fl < n_m {
        if let Some(b) = best_detuning(&q, drive(l), &rate_opts) {
            delta = b.delta;
            n_m = b.n_m;
            l_best = l;
        }
    }
    let mut n_in = drive(l_best);

    if opts.objective == Objective::Oracle {
        let f = |d: f64, n: f64| value(&q, d, n, Objective::Oracle);
        n_m = f(delta, n_in);
        for _ in 0..2 {
            let (d, fd, e) = golden_min(|d| f(d, n_in), 1.1 * delta, 0.9 * delta, 1e-6 * delta.abs());
            evals += e;
            if fd < n_m {
                delta = d;
                n_m = fd;
            }
            let (ln, fn_, e) =
                golden_min(|ln| f(delta, n_max * 10f64.powf(ln)), (n_in / n_max).log10() - 0.3, 0.0, 1e-6);
            evals += e;
            if fn_ < n_m {
                n_in = n_max * 10f64.powf(ln);
                n_m = fn_;
            }
        }
    }
    let converged = is_local_min(&q, delta, n_in, n_max, n_m, opts);
    finish(&q, delta, n_in, n_ref, n_m, converged, evals + 4, opts.objective)
}
