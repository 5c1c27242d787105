//! Named datasets: the standard figure sweeps and the headline numbers at the
//! reference parameter set.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::optimize::{optimize_detuning, Mode, OptimizeError, OptimizeOptions};
use crate::output::Table;
use crate::params::SystemParams;
use crate::steady_state::critical_drive;
use crate::sweep::{run_sweep, SweepError, SweepKind, SweepSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Fig10,
    AppF,
    TableValues,
}

impl Target {
    pub const ALL: [Target; 11] = [
        Target::Fig2,
        Target::Fig3,
        Target::Fig4,
        Target::Fig5,
        Target::Fig6,
        Target::Fig7,
        Target::Fig8,
        Target::Fig9,
        Target::Fig10,
        Target::AppF,
        Target::TableValues,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Target::Fig2 => "fig2",
            Target::Fig3 => "fig3",
            Target::Fig4 => "fig4",
            Target::Fig5 => "fig5",
            Target::Fig6 => "fig6",
            Target::Fig7 => "fig7",
            Target::Fig8 => "fig8",
            Target::Fig9 => "fig9",
            Target::Fig10 => "fig10",
            Target::AppF => "appF",
            Target::TableValues => "table-values",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Target::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown target `{s}`"))
    }
}

const BOTH: [Mode; 2] = [Mode::Nonlinear, Mode::LinearComparison];

/// Sweep specs behind a figure target.
pub fn figure_specs(target: Target) -> Vec<SweepSpec> {
    let both = |k| SweepSpec::new(k).with_modes(&BOTH);
    match target {
        Target::Fig2 | Target::Fig3 | Target::Fig4 | Target::Fig5 => vec![both(SweepKind::DetuningProfile)],
        Target::Fig6 => {
            let mut s = both(SweepKind::CouplingSweep);
            s.oracle_objective = true;
            vec![s]
        }
        Target::Fig7 => vec![both(SweepKind::SidebandSweep)],
        Target::Fig8 => vec![both(SweepKind::OptimalPowerCurve)],
        Target::Fig9 => vec![both(SweepKind::SidebandSweepSqueezed)],
        Target::Fig10 => {
            let axis = |s: SweepSpec| s.with_axis("omega_m_over_kappa", 0.01, 1.0, 41);
            let mut nl = axis(SweepSpec::new(SweepKind::SidebandSweepSqueezed));
            nl.xi = 0.44;
            let mut lin = axis(SweepSpec::new(SweepKind::SidebandSweepSqueezed).with_modes(&[Mode::LinearComparison]));
            lin.xi = 0.99;
            vec![nl, lin]
        }
        Target::AppF => vec![both(SweepKind::GroundStateMap)],
        Target::TableValues => Vec::new(),
    }
}

/// Headline numbers at the critical drive, detuning optimised separately for
/// the nonlinear system and for its linear counterpart at the same drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableValues {
    pub n_th: f64,
    pub n_in: f64,
    pub detuning_nl: f64,
    pub detuning_lin: f64,
    pub c_eff_nl: f64,
    pub c_eff_lin: f64,
    pub n_m_nl: f64,
    pub n_m_lin: f64,
    /// Backaction contribution C/(C+1)·n_BA to the nonlinear occupation.
    pub n_ba_share: f64,
    pub n_ba_share_lin: f64,
}

pub fn table_values(p: &SystemParams) -> Result<TableValues, OptimizeError> {
    let n_in = critical_drive(p)?;
    let opts = OptimizeOptions::default();
    let nl = optimize_detuning(p, Mode::Nonlinear, n_in, &opts)?;
    let lin = optimize_detuning(p, Mode::LinearComparison, n_in, &opts)?;
    Ok(TableValues {
        n_th: p.n_th,
        n_in,
        detuning_nl: nl.detuning,
        detuning_lin: lin.detuning,
        c_eff_nl: nl.report.rates.c_eff,
        c_eff_lin: lin.report.rates.c_eff,
        n_m_nl: nl.n_m,
        n_m_lin: lin.n_m,
        n_ba_share: nl.report.n_backaction_part,
        n_ba_share_lin: lin.report.n_backaction_part,
    })
}

fn values_table(v: &TableValues) -> Table {
    let mut t = Table::new(
        "table-values",
        &[
            "c_eff_nl",
            "c_eff_lin",
            "n_m_nl",
            "n_m_lin",
            "n_ba_share",
            "n_ba_share_lin",
            "n_th",
            "n_in_per_s",
            "detuning_nl_rad_s",
            "detuning_lin_rad_s",
        ],
    );
    t.push(
        [
            v.c_eff_nl,
            v.c_eff_lin,
            v.n_m_nl,
            v.n_m_lin,
            v.n_ba_share,
            v.n_ba_share_lin,
            v.n_th,
            v.n_in,
            v.detuning_nl,
            v.detuning_lin,
        ]
        .into_iter()
        .map(Into::into)
        .collect(),
    );
    t
}

#[derive(Debug, thiserror::Error)]
pub enum ReproduceError {
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
}

/// Tables for one target. Multi-spec targets are concatenated row-wise.
pub fn reproduce(p: &SystemParams, target: Target, oracle_check: bool) -> Result<Vec<Table>, ReproduceError> {
    if target == Target::TableValues {
        return Ok(vec![values_table(&table_values(p)?)]);
    }
    let mut out: Vec<Table> = Vec::new();
    for mut spec in figure_specs(target) {
        spec.oracle_check |= oracle_check;
        for t in run_sweep(p, &spec)? {
            match out.iter_mut().find(|o| o.name == t.name) {
                Some(o) => o.extend(t),
                None => out.push(t),
            }
        }
    }
    if let [t] = out.as_mut_slice() {
        t.name = target.name().to_string();
    }
    Ok(out)
}
