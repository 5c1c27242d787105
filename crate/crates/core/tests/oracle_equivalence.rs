use std::f64::consts::TAU;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use kerrcool::cavity::linspace;
use kerrcool::mechanics::{mech_spectrum_at, occupation};
use kerrcool::optimize::{optimize_detuning, Mode, OptimizeOptions};
use kerrcool::oracle::{
    build_matrix, numeric_occupation, numeric_occupation_squeezed, numeric_spectrum, InputCorrelators, OracleSpectrum,
};
use kerrcool::squeezing::{matched_squeeze, occupation_with_squeezing};
use kerrcool::steady_state::{
    critical_drive, cubic_discriminant, photon_branches, solve_steady, state_from_root, Branch, Stability,
};
use kerrcool::{default_params, OperatingPoint};

#[test]
fn root_stability_matches_eigenvalues_inside_bistable_window() {
    let p = default_params().with_g0(0.0);
    let mut rng = StdRng::seed_from_u64(3);
    let mut checked = 0;
    for _ in 0..20_000 {
        let delta = -rng.random_range(1.2..4.0) * p.kappa;
        let n_in = rng.random_range(1.0..60.0) * critical_drive(&p).unwrap();
        if cubic_discriminant(&p, delta, n_in) < 1e-3 {
            continue;
        }
        let roots = photon_branches(&p, delta, n_in);
        assert_eq!(roots.len(), 3);
        for r in roots {
            let ss = state_from_root(&p, delta, n_in, r.n_c, Branch::BistableMiddle);
            let stable = build_matrix(&ss, &p).is_stable().unwrap();
            assert_eq!(stable, r.stability == Stability::Stable, "delta {delta}, n_in {n_in}, n {}", r.n_c);
        }
        checked += 1;
        if checked == 50 {
            break;
        }
    }
    assert_eq!(checked, 50);
}

#[test]
fn uncoupled_oscillator_holds_thermal_occupation() {
    let p = default_params().linear().with_g0(0.0);
    let ss = solve_steady(&p, &OperatingPoint::new(-p.kappa, 1e10)).unwrap();
    let n = numeric_occupation(&build_matrix(&ss, &p), &InputCorrelators::thermal(&p), p.kappa).unwrap();
    // ∫ S_bb dω/2π of a Lorentzian of width γ_m is n_th
    assert!((n.value - p.n_th).abs() < 1e-6 * p.n_th, "{} vs {}", n.value, p.n_th);
}

#[test]
fn mechanical_spectrum_matches_near_resonance() {
    let p = default_params().with_g0(TAU * 5e3);
    let n_in = 0.5 * critical_drive(&p).unwrap();
    let ss = solve_steady(&p, &OperatingPoint::new(-0.9 * p.kappa, n_in)).unwrap();
    let dm = build_matrix(&ss, &p);
    let rep = occupation(&ss, &p).unwrap();
    let width = p.gamma_m + rep.rates.gamma_opt;
    let grid = linspace(p.omega_m - 3.0 * width, p.omega_m + 3.0 * width, 61);
    let num = numeric_spectrum(&dm, &InputCorrelators::thermal(&p), OracleSpectrum::Mechanical, p.g0, &grid).unwrap();
    let peak = num.iter().cloned().fold(0.0, f64::max);
    for (&w, v) in grid.iter().zip(&num) {
        let cf = mech_spectrum_at(&ss, &p, w);
        assert!((cf - v).abs() < 0.02 * peak, "omega {w}: {cf} vs {v}");
    }
}

#[test]
fn squeezed_occupation_matches_oracle_at_optimum() {
    let p = default_params().with_g0(TAU * 15e3);
    let p = p.with_omega_m_fixed_temperature(0.2 * p.kappa);
    let n_in = critical_drive(&p).unwrap();
    let opt = optimize_detuning(&p, Mode::Nonlinear, n_in, &OptimizeOptions::default()).unwrap();
    let ss = solve_steady(&p, &OperatingPoint::new(opt.detuning, n_in)).unwrap();
    let sq = matched_squeeze(&ss, &p, 0.9).unwrap();
    let closed = occupation_with_squeezing(&ss, &p, &sq).unwrap();
    let num = numeric_occupation_squeezed(&ss, &p, &sq).unwrap();
    assert!((closed - num.value).abs() < 0.02 * num.value, "{closed} vs {}", num.value);
}
