//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::f64::consts::{PI, TAU};
use std::process::ExitCode;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use kerrcool::cavity::{
    cavity_poles, effective_skewness, linspace, photon_spectrum, scattering_rates, skewness,
    skewness_grid,
};
use kerrcool::mechanics::{backaction_limit, cavity_self_energy, min_backaction, occupation};
use kerrcool::optimize::{optimize_detuning, optimize_operating_point, Mode, Objective, OptimizeOptions};
use kerrcool::oracle::{attach_oracle, build_matrix, numeric_spectrum, InputCorrelators, OracleSpectrum};
use kerrcool::reproduce::table_values;
use kerrcool::squeezing::{matched_squeeze, squeezed_force_spectrum, stokes_rate_squeezed, SqueezeSpec};
use kerrcool::steady_state::{
    bifurcation, critical_drive, cubic_discriminant, effective_kerr, solve_steady, state_from_root, Branch,
    SteadyState,
};
use kerrcool::sweep::{at_sideband_ratio, ground_state_boundary, run_sweep, SweepKind, SweepSpec};
use kerrcool::{default_params, OperatingPoint, SystemParams};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    rel(value, target) <= tol
}

fn random_point(rng: &mut StdRng) -> (SystemParams, SteadyState) {
    loop {
        let base = default_params();
        let p = base.with_kerr(base.kerr * rng.random_range(0.0..2.0)).with_g0(TAU * rng.random_range(0.5e3..20e3));
        let p = at_sideband_ratio(&p, rng.random_range(0.02..0.5));
        let n_in = rng.random_range(0.01..0.999) * critical_drive(&p).unwrap();
        let d = -rng.random_range(0.05..3.0) * p.kappa;
        if let Ok(ss) = solve_steady(&p, &OperatingPoint::new(d, n_in)) {
            if ss.delta_eff() > 0.0 && occupation(&ss, &p).is_ok() {
                return (p, ss);
            }
        }
    }
}

fn c1_bifurcation() -> Outcome {
    let p = default_params();
    let b = bifurcation(&p).unwrap();
    let k = p.kerr + 2.0 * p.g0 * p.g0 * p.omega_m / (p.omega_m.powi(2) + p.gamma_m.powi(2) / 4.0);
    let s3 = 3f64.sqrt();
    let errs = [
        rel(b.delta_bi, -s3 * p.kappa / 2.0),
        rel(b.n_bi, p.kappa / (s3 * k)),
        rel(b.n_in_bi, p.kappa.powi(2) / (3.0 * s3 * k)),
        rel(effective_kerr(&p), k),
    ];
    // n_bi is the triple root: the cubic and its slope vanish there
    let ke = effective_kerr(&p);
    let g = |n: f64| n * ((b.delta_bi + ke * n).powi(2) + p.kappa.powi(2) / 4.0) - p.kappa * b.n_in_bi;
    let slope = 3.0 * ke * ke * b.n_bi.powi(2) + 4.0 * b.delta_bi * ke * b.n_bi + b.delta_bi.powi(2) + p.kappa.powi(2) / 4.0;
    let scale = p.kappa * b.n_in_bi;
    let triple = (g(b.n_bi) / scale).abs().max((slope * b.n_bi / scale).abs());
    let disc = cubic_discriminant(&p, b.delta_bi, b.n_in_bi).abs();
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    check(
        worst < 1e-10 && triple < 1e-10 && disc < 1e-8,
        format!("max identity error {worst:.2e}, triple-root residual {triple:.2e}, discriminant {disc:.2e}"),
    )
}

fn c2_c3() -> (Outcome, Outcome) {
    let v = table_values(&default_params()).unwrap();
    let c2 = check(
        within(v.c_eff_nl, 264.0, 0.03) && within(v.c_eff_lin, 22.0, 0.03),
        format!("C_eff nonlinear {:.2} (264), linear {:.2} (22)", v.c_eff_nl, v.c_eff_lin),
    );
    let c3 = check(
        within(v.n_m_nl, 12.66, 0.03) && within(v.n_m_lin, 123.33, 0.03) && within(v.n_ba_share, 2.74, 0.03),
        format!(
            "n_m nonlinear {:.3} (12.66), linear {:.3} (123.33), backaction share {:.3} (2.74; linear system {:.3})",
            v.n_m_nl, v.n_m_lin, v.n_ba_share, v.n_ba_share_lin
        ),
    );
    (c2, c3)
}

fn c4_backaction_floor() -> Outcome {
    let p = default_params();
    let q = SystemParams { omega_m: p.kappa / 10.0, ..p };
    let (_, n10) = min_backaction(&q);
    let floor = |r: f64| min_backaction(&SystemParams { omega_m: r * p.kappa, ..p }).1;
    let (mut a, mut b) = (0.05, 0.5);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if floor(m) > 1.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let target = 1.0 / (4.0 * 2f64.sqrt());
    let crossing = 0.5 * (a + b);
    check(
        (n10 - 2.049).abs() < 1e-3 && rel(crossing, target) < 1e-12,
        format!("n_BA_min(kappa/omega_m = 10) = {n10:.5}; n_BA_min = 1 at omega_m/kappa = {crossing:.15} vs {target:.15}"),
    )
}

fn c5_fig6_endpoints() -> Outcome {
    let p = default_params().with_g0(TAU * 23.28e3);
    let opts = OptimizeOptions { objective: Objective::Oracle, ..Default::default() };
    let nl = optimize_operating_point(&p, Mode::Nonlinear, &opts).unwrap();
    let lin = optimize_detuning(&p, Mode::LinearComparison, nl.n_in, &opts).unwrap();
    check(
        within(nl.n_m, 2.26, 0.05) && within(lin.n_m, 3.06, 0.05),
        format!("g0/2pi = 23.28 kHz: nonlinear {:.4} (2.26), linear at same drive {:.4} (3.06)", nl.n_m, lin.n_m),
    )
}

fn c6_squeezing_law() -> Outcome {
    let mut rng = StdRng::seed_from_u64(6);
    let (mut worst_law, mut worst_tot) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let (p, ss) = random_point(&mut rng);
        let xi = rng.random_range(0.0..1.0);
        let sq = matched_squeeze(&ss, &p, xi).unwrap();
        let rates = scattering_rates(&ss, &p);
        let n_ba = backaction_limit(&p, ss.delta_eff()).unwrap();
        let n_ba_s = stokes_rate_squeezed(&ss, &p, &sq) / rates.gamma_opt;
        worst_law = worst_law.max(((n_ba_s - (1.0 - xi) * n_ba) / n_ba).abs());
        let any = SqueezeSpec::from_n_s(rng.random_range(0.0..1.0), rng.random_range(0.0..10.0), rng.random_range(0.0..PI))
            .unwrap();
        let tot = squeezed_force_spectrum(&ss, &p, &any, p.omega_m) - squeezed_force_spectrum(&ss, &p, &any, -p.omega_m);
        worst_tot = worst_tot.max(rel(tot, rates.gamma_opt));
    }
    check(
        worst_law < 1e-10 && worst_tot < 1e-10,
        format!("100 random points: suppression-law error {worst_law:.2e}, total-damping drift {worst_tot:.2e}"),
    )
}

fn squeezed_min(p: &SystemParams, mode: Mode, r: f64, xi: f64) -> kerrcool::optimize::Optimum {
    let q = at_sideband_ratio(p, r);
    let n = critical_drive(&q).unwrap();
    let opts = OptimizeOptions { objective: Objective::Squeezed { xi }, ..Default::default() };
    optimize_detuning(&q, mode, n, &opts).unwrap()
}

fn onset(p: &SystemParams, mode: Mode, xi: f64) -> f64 {
    let (mut a, mut b) = (0.005, 0.5);
    for _ in 0..40 {
        let m = 0.5 * (a + b);
        if squeezed_min(p, mode, m, xi).n_m < 1.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

fn c7_squeezing_strengths() -> Outcome {
    let p = default_params().with_g0(TAU * 15e3);
    let lin = squeezed_min(&p, Mode::LinearComparison, 0.13, 0.99).squeeze.unwrap().db;
    let nl = squeezed_min(&p, Mode::Nonlinear, 0.13, 0.44).squeeze.unwrap().db;
    let on_nl = onset(&p, Mode::Nonlinear, 0.9);
    let on_lin = onset(&p, Mode::LinearComparison, 0.9);
    check(
        (lin - 10.15).abs() <= 0.1 && (nl - 6.48).abs() <= 0.1 && within(on_nl, 0.03, 0.1) && within(on_lin, 0.144, 0.1),
        format!(
            "linear xi=0.99 {lin:.3} dB (10.15), nonlinear xi=0.44 {nl:.3} dB (6.48); ground-state onset nonlinear {on_nl:.4} (0.03), linear {on_lin:.4} (0.144)"
        ),
    )
}

fn c8_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    let (mut s_nn, mut s_ff, mut poles) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10 {
        let (p, ss) = random_point(&mut rng);
        let q = p.with_g0(0.0);
        let dm = build_matrix(&ss, &q);
        let grid = linspace(-5.0 * p.kappa, 5.0 * p.kappa, 2001);
        let num = numeric_spectrum(&dm, &InputCorrelators::thermal(&q), OracleSpectrum::PhotonNumber, 0.0, &grid).unwrap();
        let cf = photon_spectrum(&ss, &q, &grid).unwrap();
        s_nn = s_nn.max(num.iter().zip(&cf.values).map(|(a, b)| rel(*a, *b)).fold(0.0, f64::max));
        let sq = SqueezeSpec::from_n_s(rng.random_range(0.0..1.0), rng.random_range(0.0..5.0), rng.random_range(0.0..PI))
            .unwrap();
        let num = numeric_spectrum(&dm, &InputCorrelators::squeezed(&p, &sq), OracleSpectrum::Force, p.g0, &grid).unwrap();
        s_ff = s_ff.max(
            grid.iter().zip(&num).map(|(&w, a)| rel(*a, squeezed_force_spectrum(&ss, &p, &sq, w))).fold(0.0, f64::max),
        );
        let ev = dm.poles().unwrap();
        for z in cavity_poles(&ss, &q).poles {
            let d = ev.iter().map(|e| (e - z).norm()).fold(f64::INFINITY, f64::min);
            poles = poles.max(d / z.norm().max(p.kappa));
        }
    }
    let p = default_params();
    let n_in = critical_drive(&p).unwrap();
    let opt = optimize_detuning(&p, Mode::Nonlinear, n_in, &OptimizeOptions::default()).unwrap();
    let ss = solve_steady(&p, &OperatingPoint::new(opt.detuning, n_in)).unwrap();
    let mut rep = occupation(&ss, &p).unwrap();
    attach_oracle(&mut rep, &ss, &p).unwrap();
    let gap = rep.oracle.unwrap().relative_gap;
    check(
        s_nn < 1e-8 && s_ff < 1e-8 && poles < 1e-10 && gap < 0.02,
        format!("S_nn {s_nn:.2e}, squeezed S_FF {s_ff:.2e}, poles {poles:.2e}, occupation gap at optimum {gap:.2e}"),
    )
}

fn c9_skewness() -> Outcome {
    let p = default_params();
    let n_in = critical_drive(&p).unwrap();
    let lin = p.linear();
    let ss = solve_steady(&lin, &OperatingPoint::new(bifurcation(&p).unwrap().delta_bi, n_in)).unwrap();
    let g1 = skewness(&photon_spectrum(&ss, &lin, &skewness_grid(&lin)).unwrap()).unwrap();
    let grid = linspace(-1.5 * p.kappa, -0.5 * p.kappa, 201);
    let vals: Vec<f64> = grid.iter().map(|&d| effective_skewness(&p, n_in, d).unwrap_or(f64::NEG_INFINITY)).collect();
    let i = vals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    let step = grid[1] - grid[0];
    let off = (grid[i] - bifurcation(&p).unwrap().delta_bi).abs();
    check(
        (g1 - 3.48).abs() <= 0.02 && off <= step,
        format!("K=0 skewness {g1:.4} (3.48); argmax of effective skewness {:.4} kappa, {:.2} steps from Delta_bi", grid[i] / p.kappa, off / step),
    )
}

fn c10_ground_state_map() -> Outcome {
    let p = default_params();
    let opts = OptimizeOptions::default();
    let mut lines = Vec::new();
    let mut pass = true;
    for (mode, g_ref, r_ref) in [(Mode::Nonlinear, 0.85e-3, 0.189), (Mode::LinearComparison, 1.79e-3, 0.192)] {
        let samples: Vec<(f64, Option<f64>)> = linspace(0.95 * r_ref, 1.05 * r_ref, 11)
            .into_iter()
            .map(|r| (r, ground_state_boundary(&p, mode, r, 1e-5, 1e-1, &opts)))
            .collect();
        let hit = samples.iter().any(|(_, g)| g.is_some_and(|g| within(g, g_ref, 0.05)));
        let at_ref = ground_state_boundary(&p, mode, r_ref, 1e-5, 1e-1, &opts).unwrap_or(f64::NAN);
        pass &= hit;
        lines.push(format!("{mode:?}: boundary g0/kappa {at_ref:.3e} at omega_m/kappa = {r_ref} (expected {g_ref:.2e})"));
    }
    check(pass, lines.join("; "))
}

fn c11_properties() -> Outcome {
    let mut rng = StdRng::seed_from_u64(11);
    let mut failures = Vec::new();
    for _ in 0..200 {
        let (p, _) = random_point(&mut rng);
        let n_in = rng.random_range(0.01..0.999) * critical_drive(&p).unwrap();
        let d = rng.random_range(-3.0..1.0) * p.kappa;
        let Ok(ss) = solve_steady(&p, &OperatingPoint::new(d, n_in)) else { continue };
        let r = scattering_rates(&ss, &p);
        if ss.delta_eff() != 0.0 && r.gamma_opt.signum() != ss.delta_eff().signum() {
            failures.push("sign law");
        }
        if (r.gamma_opt - (r.gamma_antistokes - r.gamma_stokes)).abs() > 1e-9 * r.gamma_antistokes.abs().max(r.gamma_stokes.abs()) {
            failures.push("rate identity");
        }
        if let Ok(rep) = occupation(&ss, &p) {
            if rep.rates.gamma_opt > 0.0 && rel(rep.n_closed, rep.n_rate) > 1e-9 {
                failures.push("closed vs rate form");
            }
        }
        // exceptional point Δ = −|Λ|
        let n_c = ss.n_c;
        let ep = state_from_root(&p, -p.kerr * n_c, n_in, n_c, Branch::Monostable);
        let sigma = cavity_self_energy(&ep, &p, p.omega_m);
        if p.kerr > 0.0 && (sigma.norm() != 0.0 || scattering_rates(&ep, &p).gamma_opt.abs() > 1e-12 * r.gamma_stokes.abs().max(1.0)) {
            failures.push("self-energy at exceptional point");
        }
    }
    let spec = SweepSpec::new(SweepKind::SidebandSweep)
        .with_modes(&[Mode::Nonlinear, Mode::LinearComparison])
        .with_axis("omega_m_over_kappa", 0.02, 2.0, 16);
    let p = default_params();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| run_sweep(&p, &spec).unwrap());
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| run_sweep(&p, &spec).unwrap());
    if one[0].to_csv() != four[0].to_csv() {
        failures.push("determinism");
    }
    failures.sort();
    failures.dedup();
    check(failures.is_empty(), if failures.is_empty() { "200 random samples, 1 vs 4 threads".into() } else { failures.join(", ") })
}

fn main() -> ExitCode {
    let (c2, c3) = c2_c3();
    let results = [
        ("C1 bifurcation identities", c1_bifurcation()),
        ("C2 cooperativity", c2),
        ("C3 occupations", c3),
        ("C4 backaction floor", c4_backaction_floor()),
        ("C5 optimised coupling endpoints", c5_fig6_endpoints()),
        ("C6 squeezing suppression law", c6_squeezing_law()),
        ("C7 squeezing strengths and onsets", c7_squeezing_strengths()),
        ("C8 oracle equivalence", c8_oracle()),
        ("C9 skewness", c9_skewness()),
        ("C10 ground-state boundary", c10_ground_state_map()),
        ("C11 property suite", c11_properties()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
