use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use kerrcool::cavity::{cavity_poles, exceptional_points, linspace, SpectrumKind};
use kerrcool::mechanics::{mech_spectrum_at, mechanical_poles, occupation};
use kerrcool::oracle::{attach_oracle, build_matrix, numeric_spectrum, InputCorrelators, OracleSpectrum};
use kerrcool::output::{tables_to_json, Table};
use kerrcool::params::{params_from_config, BranchPolicy, OperatingPoint, SystemParams};
use kerrcool::reproduce::{reproduce, Target};
use kerrcool::squeezing::{
    matched_squeeze, occupation_with_squeezing, optimal_phase, squeezed_backaction, squeezed_force_spectrum,
    SqueezeSpec,
};
use kerrcool::steady_state::{bifurcation, photon_branches, solve_steady, SteadyState, CRITICAL_FRACTION};
use kerrcool::sweep::{parse_spec, run_sweep, SweepError};
use kerrcool::default_params;

#[derive(Parser)]
#[command(name = "kerrcool", version, about = "Kerr-enhanced optomechanical cooling calculator")]
struct Cli {
    /// Parameter file (flat key = value, frequencies in Hz).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Cross-check closed forms against the 4×4 solver.
    #[arg(long, global = true)]
    oracle: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Lower,
    Upper,
    Monostable,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Photon,
    Force,
    Mechanical,
}

#[derive(Args, Clone)]
struct PointArgs {
    /// Drive detuning in Hz (cyclic). Defaults to the bifurcation detuning.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "detuning_over_kappa")]
    detuning_hz: Option<f64>,
    /// Drive detuning in units of κ.
    #[arg(long, allow_hyphen_values = true)]
    detuning_over_kappa: Option<f64>,
    /// Input photon flux (photons/s).
    #[arg(long, conflicts_with = "power_fraction")]
    n_in: Option<f64>,
    /// Input flux as a fraction of the bistability threshold.
    #[arg(long)]
    power_fraction: Option<f64>,
    #[arg(long, value_enum, default_value = "lower")]
    policy: Policy,
}

#[derive(Subcommand)]
enum Command {
    /// Photon-number branches and bifurcation data at one operating point.
    Steady(PointArgs),
    /// Photon-number, force or mechanical noise spectrum.
    Spectrum {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, value_enum, default_value = "photon")]
        kind: Kind,
        /// Grid half-width in units of ω_m.
        #[arg(long, default_value_t = 5.0)]
        span: f64,
        #[arg(long, default_value_t = 2001)]
        points: usize,
        /// Squeezing purity for the force spectrum.
        #[arg(long)]
        xi: Option<f64>,
        /// Squeezing strength in dB (default: matched to the sideband ratio).
        #[arg(long)]
        db: Option<f64>,
    },
    /// Cavity and mechanical poles, exceptional points.
    Poles(PointArgs),
    /// Rates, cooperativity and phonon occupations.
    Cool(PointArgs),
    /// Squeezed-input backaction suppression.
    Squeeze {
        #[command(flatten)]
        point: PointArgs,
        /// Squeezing purity ξ in [0, 1].
        #[arg(long, default_value_t = 0.9)]
        xi: f64,
        /// Squeezing strength in dB.
        #[arg(long, conflicts_with = "n_s")]
        db: Option<f64>,
        /// Squeezed photon number N_s. Without --db or --n-s the squeeze is
        /// matched to the sideband ratio.
        #[arg(long)]
        n_s: Option<f64>,
    },
    /// Run a sweep described by a spec file.
    Sweep {
        /// TOML sweep spec
        spec: PathBuf,
    },
    /// Regenerate a named dataset.
    Reproduce {
        /// fig2 … fig10, appF or table-values
        target: String,
    },
}

enum Failure {
    Usage(String),
    Config(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Config(m) | Failure::Numerical(m) => m,
        }
    }
}

fn numerical(e: impl ToString) -> Failure {
    Failure::Numerical(e.to_string())
}

fn load_params(path: &Option<PathBuf>) -> Result<SystemParams, Failure> {
    let Some(path) = path else {
        return Ok(default_params());
    };
    let doc = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    params_from_config(&doc).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn operating_point(p: &SystemParams, a: &PointArgs) -> Result<OperatingPoint, Failure> {
    let bif = bifurcation(p);
    let detuning = match (a.detuning_hz, a.detuning_over_kappa) {
        (Some(f), _) => TAU * f,
        (None, Some(x)) => x * p.kappa,
        (None, None) => -(3f64.sqrt()) * p.kappa / 2.0,
    };
    let n_in = match (a.n_in, a.power_fraction) {
        (Some(n), _) => n,
        (None, frac) => {
            let frac = frac.unwrap_or(CRITICAL_FRACTION);
            frac * bif
                .map_err(|_| Failure::Usage("no bistability threshold for this system; pass --n-in".into()))?
                .n_in_bi
        }
    };
    let policy = match a.policy {
        Policy::Lower => BranchPolicy::LowerBranch,
        Policy::Upper => BranchPolicy::UpperBranch,
        Policy::Monostable => BranchPolicy::RequireMonostable,
    };
    Ok(OperatingPoint::new(detuning, n_in).with_policy(policy))
}

fn steady(p: &SystemParams, a: &PointArgs) -> Result<(OperatingPoint, SteadyState), Failure> {
    let op = operating_point(p, a)?;
    let ss = solve_steady(p, &op).map_err(numerical)?;
    Ok((op, ss))
}

enum Output {
    Json(serde_json::Value),
    Tables(Vec<Table>),
}

fn cmd_steady(p: &SystemParams, a: &PointArgs) -> Result<Output, Failure> {
    let op = operating_point(p, a)?;
    let roots = photon_branches(p, op.detuning, op.n_in);
    let ss = solve_steady(p, &op).map_err(numerical)?;
    Ok(Output::Json(json!({
        "detuning_rad_s": op.detuning,
        "n_in_per_s": op.n_in,
        "bifurcation": bifurcation(p).ok(),
        "branches": roots,
        "selected": ss,
    })))
}

fn cmd_spectrum(
    p: &SystemParams,
    a: &PointArgs,
    kind: Kind,
    span: f64,
    points: usize,
    xi: Option<f64>,
    db: Option<f64>,
    oracle: bool,
) -> Result<Output, Failure> {
    let (_, ss) = steady(p, a)?;
    if points < 2 || !(span > 0.0) {
        return Err(Failure::Usage("need --points ≥ 2 and --span > 0".into()));
    }
    let grid = linspace(-span * p.omega_m, span * p.omega_m, points);
    let sq = match xi {
        None => SqueezeSpec::vacuum(),
        Some(xi) => match db {
            Some(db) => SqueezeSpec::from_db(xi, db, optimal_phase(&ss, p)).map_err(numerical)?,
            None => matched_squeeze(&ss, p, xi).map_err(numerical)?,
        },
    };
    let (sk, ok) = match kind {
        Kind::Photon => (SpectrumKind::PhotonNumber, OracleSpectrum::PhotonNumber),
        Kind::Force => (SpectrumKind::Force, OracleSpectrum::Force),
        Kind::Mechanical => (SpectrumKind::Mechanical, OracleSpectrum::Mechanical),
    };
    let values: Vec<f64> = grid
        .iter()
        .map(|&w| match kind {
            Kind::Photon => kerrcool::cavity::photon_spectrum_at(&ss, p, w),
            Kind::Force => squeezed_force_spectrum(&ss, p, &sq, w),
            Kind::Mechanical => mech_spectrum_at(&ss, p, w),
        })
        .collect();
    let col = sk.column();
    let mut cols = vec!["omega_rad_s", "omega_over_omega_m", col];
    let oracle_vals = if oracle {
        // force and photon spectra are cavity-only quantities
        let q = if kind == Kind::Mechanical { *p } else { p.with_g0(0.0) };
        let dm = build_matrix(&ss, &q);
        cols.push("oracle");
        Some(numeric_spectrum(&dm, &InputCorrelators::squeezed(p, &sq), ok, p.g0, &grid).map_err(numerical)?)
    } else {
        None
    };
    let mut t = Table::new("spectrum", &cols);
    for (i, &w) in grid.iter().enumerate() {
        let mut row = vec![w.into(), (w / p.omega_m).into(), values[i].into()];
        if let Some(o) = &oracle_vals {
            row.push(o[i].into());
        }
        t.push(row);
    }
    Ok(Output::Tables(vec![t]))
}

fn cmd_poles(p: &SystemParams, a: &PointArgs) -> Result<Output, Failure> {
    let (op, ss) = steady(p, a)?;
    let cav = cavity_poles(&ss, p);
    let (em, ep) = exceptional_points(p, op.n_in);
    let mech = mechanical_poles(&ss, p);
    let oracle = build_matrix(&ss, p).poles().map_err(numerical)?;
    Ok(Output::Json(json!({
        "cavity": cav,
        "mechanical": mech,
        "full_system": oracle,
        "exceptional_point_detunings_rad_s": [em.ok(), ep.ok()],
    })))
}

fn cmd_cool(p: &SystemParams, a: &PointArgs, oracle: bool) -> Result<Output, Failure> {
    let (_, ss) = steady(p, a)?;
    let mut rep = occupation(&ss, p).map_err(numerical)?;
    let oracle_error = if oracle { attach_oracle(&mut rep, &ss, p).err().map(|e| e.to_string()) } else { None };
    let mut doc = json!({ "steady_state": ss, "report": rep });
    if let Some(e) = oracle_error {
        doc["oracle_error"] = json!(e);
    }
    Ok(Output::Json(doc))
}

fn cmd_squeeze(p: &SystemParams, a: &PointArgs, xi: f64, db: Option<f64>, n_s: Option<f64>) -> Result<Output, Failure> {
    let (_, ss) = steady(p, a)?;
    let phase = optimal_phase(&ss, p);
    let sq = match (db, n_s) {
        (Some(db), _) => SqueezeSpec::from_db(xi, db, phase),
        (None, Some(n)) => SqueezeSpec::from_n_s(xi, n, phase),
        (None, None) => matched_squeeze(&ss, p, xi),
    }
    .map_err(numerical)?;
    let ba = squeezed_backaction(&ss, p, xi).map_err(numerical)?;
    let n_m = occupation_with_squeezing(&ss, p, &sq).map_err(numerical)?;
    Ok(Output::Json(json!({ "squeeze": sq, "backaction": ba, "n_m": n_m })))
}

fn sweep_failure(e: SweepError) -> Failure {
    Failure::Config(e.to_string())
}

fn run(cli: &Cli) -> Result<(Output, Format), Failure> {
    let p = load_params(&cli.config)?;
    let json_default = |f: Option<Format>| f.unwrap_or(Format::Json);
    let csv_default = |f: Option<Format>| f.unwrap_or(Format::Csv);
    Ok(match &cli.command {
        Command::Steady(a) => (cmd_steady(&p, a)?, json_default(cli.format)),
        Command::Spectrum { point, kind, span, points, xi, db } => {
            (cmd_spectrum(&p, point, *kind, *span, *points, *xi, *db, cli.oracle)?, csv_default(cli.format))
        }
        Command::Poles(a) => (cmd_poles(&p, a)?, json_default(cli.format)),
        Command::Cool(a) => (cmd_cool(&p, a, cli.oracle)?, json_default(cli.format)),
        Command::Squeeze { point, xi, db, n_s } => (cmd_squeeze(&p, point, *xi, *db, *n_s)?, json_default(cli.format)),
        Command::Sweep { spec } => {
            let doc = fs::read_to_string(spec).map_err(|e| Failure::Config(format!("{}: {e}", spec.display())))?;
            let mut s = parse_spec(&doc).map_err(sweep_failure)?;
            s.oracle_check |= cli.oracle;
            (Output::Tables(run_sweep(&p, &s).map_err(sweep_failure)?), csv_default(cli.format))
        }
        Command::Reproduce { target } => {
            let t: Target = target.parse().map_err(Failure::Usage)?;
            let tables = reproduce(&p, t, cli.oracle).map_err(numerical)?;
            (Output::Tables(tables), csv_default(cli.format))
        }
    })
}

fn side_path(path: &Path, name: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let file = match path.extension() {
        Some(ext) => format!("{stem}-{name}.{}", ext.to_string_lossy()),
        None => format!("{stem}-{name}"),
    };
    path.with_file_name(file)
}

fn emit(out: Output, format: Format, path: &Option<PathBuf>) -> Result<(), Failure> {
    let write = |p: &Path, s: &str| fs::write(p, s).map_err(|e| Failure::Config(format!("{}: {e}", p.display())));
    let docs: Vec<(Option<PathBuf>, String)> = match (out, format) {
        (Output::Json(v), _) => vec![(path.clone(), serde_json::to_string_pretty(&v).unwrap() + "\n")],
        (Output::Tables(ts), Format::Json) => vec![(path.clone(), tables_to_json(&ts))],
        (Output::Tables(ts), Format::Csv) => ts
            .iter()
            .enumerate()
            .map(|(i, t)| (path.as_ref().map(|p| if i == 0 { p.clone() } else { side_path(p, &t.name) }), t.to_csv()))
            .collect(),
    };
    let mut first = true;
    for (dest, body) in docs {
        match dest {
            Some(p) => write(&p, &body)?,
            None => {
                if !first {
                    println!();
                }
                print!("{body}");
            }
        }
        first = false;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let pool = match cli.jobs {
        Some(0) => {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(1);
        }
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    }
    .expect("thread pool");
    let res = pool.install(|| run(&cli).and_then(|(out, fmt)| emit(out, fmt, &cli.out)));
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
