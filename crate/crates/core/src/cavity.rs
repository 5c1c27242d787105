//! Linearised cavity response: susceptibilities, photon-number spectrum,
//! pole structure, exceptional points, skewness and scattering rates.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{OperatingPoint, SystemParams};
use crate::steady_state::{solve_steady, SteadyState, SteadyStateError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CavityError {
    #[error("cavity fluctuations are dynamically unstable at this operating point")]
    Unstable,
    #[error("frequency grid must be finite and strictly increasing")]
    BadGrid,
    #[error("spectrum is flat, skewness undefined")]
    Degenerate,
    #[error("no exceptional point Δ = -{0}K n_c(Δ) in the search bracket")]
    NoExceptionalPoint(u8),
    #[error(transparent)]
    Steady(#[from] SteadyStateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    PhotonNumber,
    Force,
    Mechanical,
}

impl SpectrumKind {
    pub fn column(&self) -> &'static str {
        match self {
            SpectrumKind::PhotonNumber => "s_nn",
            SpectrumKind::Force => "s_ff",
            SpectrumKind::Mechanical => "s_bb",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub kind: SpectrumKind,
    pub params: SystemParams,
    pub detuning: f64,
    pub n_in: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: SpectrumMeta,
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<(), CavityError> {
    if grid.iter().any(|w| !w.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CavityError::BadGrid);
    }
    Ok(())
}

/// `n` points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let step = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + step * i as f64 })
        .collect()
}

/// Bare cavity susceptibility χ_c[ω] = 1/(−i(ω + Δ̃) + κ/2).
pub fn bare_susceptibility(ss: &SteadyState, p: &SystemParams, omega: f64) -> Complex64 {
    Complex64::new(0.5 * p.kappa, -(omega + ss.delta_tilde)).inv()
}

/// Driven Kerr susceptibility χ_c / (1 − |Λ|² χ_c[ω] χ_c*[−ω]).
pub fn kerr_susceptibility(ss: &SteadyState, p: &SystemParams, omega: f64) -> Complex64 {
    let chi = bare_susceptibility(ss, p, omega);
    let chi_m = bare_susceptibility(ss, p, -omega).conj();
    chi / (1.0 - ss.lambda_abs * ss.lambda_abs * chi * chi_m)
}

/// |Π(ω − Ω_c,±)|², the common denominator of the cavity spectra.
pub fn cavity_denominator(ss: &SteadyState, p: &SystemParams, omega: f64) -> f64 {
    let a = ss.delta_tilde * ss.delta_tilde - omega * omega + 0.25 * p.kappa * p.kappa
        - ss.lambda_abs * ss.lambda_abs;
    a * a + p.kappa * p.kappa * omega * omega
}

/// Photon-number spectrum S_nn[ω] at one frequency (no stability check).
pub fn photon_spectrum_at(ss: &SteadyState, p: &SystemParams, omega: f64) -> f64 {
    let x = -ss.delta_tilde + omega + ss.lambda_abs;
    ss.n_c * p.kappa * (x * x + 0.25 * p.kappa * p.kappa) / cavity_denominator(ss, p, omega)
}

pub fn cavity_is_stable(ss: &SteadyState, p: &SystemParams) -> bool {
    let r = ss.pole_radicand();
    r >= 0.0 || (-r).sqrt() < 0.5 * p.kappa
}

pub fn photon_spectrum(ss: &SteadyState, p: &SystemParams, grid: &[f64]) -> Result<Spectrum, CavityError> {
    check_grid(grid)?;
    if !cavity_is_stable(ss, p) {
        return Err(CavityError::Unstable);
    }
    let values = grid.par_iter().map(|&w| photon_spectrum_at(ss, p, w)).collect();
    Ok(Spectrum {
        grid: grid.to_vec(),
        values,
        meta: SpectrumMeta {
            kind: SpectrumKind::PhotonNumber,
            params: *p,
            detuning: ss.detuning,
            n_in: ss.n_in,
        },
    })
}

/// Relative tolerance of the decay-extremum test. At the critical drive n_c
/// sits about 0.5% below n_bi (cube-root sensitivity near the fold).
pub const DECAY_EXTREMUM_TOL: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoleRegion {
    SplitFrequencies,
    SplitDecays,
    ExceptionalPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleStructure {
    pub poles: [Complex64; 2],
    pub region: PoleRegion,
    /// (Δ_−, Δ_+) = (−|Λ|, −3|Λ|) at the present |Λ|.
    pub ep_detunings: Option<(f64, f64)>,
    /// Relative deviation from n_c/Δ = −2/(3K).
    pub decay_extremum_deviation: Option<f64>,
    pub at_decay_extremum: bool,
}

pub fn cavity_poles(ss: &SteadyState, p: &SystemParams) -> PoleStructure {
    let r = ss.pole_radicand();
    let scale = ss.detuning * ss.detuning + ss.lambda_abs * ss.lambda_abs;
    let region = if r.abs() <= 1e-12 * scale {
        PoleRegion::ExceptionalPoint
    } else if r > 0.0 {
        PoleRegion::SplitFrequencies
    } else {
        PoleRegion::SplitDecays
    };
    let s = if region == PoleRegion::ExceptionalPoint {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(r, 0.0).sqrt()
    };
    let c = Complex64::new(0.0, -0.5 * p.kappa);
    let ep_detunings = (ss.lambda_abs > 0.0).then(|| (-ss.lambda_abs, -3.0 * ss.lambda_abs));
    let deviation = (p.kerr > 0.0 && ss.detuning != 0.0).then(|| {
        let target = -2.0 / (3.0 * p.kerr);
        (ss.n_c / ss.detuning - target).abs() / target.abs()
    });
    PoleStructure {
        poles: [c + s, c - s],
        region,
        ep_detunings,
        decay_extremum_deviation: deviation,
        at_decay_extremum: deviation.is_some_and(|d| d <= DECAY_EXTREMUM_TOL),
    }
}

/// Self-consistent exceptional-point detunings at fixed drive, found along the
/// lower branch: Δ_− solves Δ = −K n_c(Δ), Δ_+ solves Δ = −3K n_c(Δ).
pub fn exceptional_points(
    p: &SystemParams,
    n_in: f64,
) -> (Result<f64, CavityError>, Result<f64, CavityError>) {
    (ep_search(p, n_in, 1), ep_search(p, n_in, 3))
}

fn ep_search(p: &SystemParams, n_in: f64, c: u8) -> Result<f64, CavityError> {
    let f = |d: f64| -> Result<f64, CavityError> {
        let ss = solve_steady(p, &OperatingPoint::new(d, n_in))?;
        Ok(d + c as f64 * p.kerr * ss.n_c)
    };
    let probes = linspace(-10.0 * p.kappa, -1e-6 * p.kappa, 2048);
    let mut prev = (probes[0], f(probes[0])?);
    for &d in &probes[1..] {
        let v = f(d)?;
        if v == 0.0 {
            return Ok(d);
        }
        if prev.1.signum() != v.signum() {
            let (mut a, mut fa, mut b) = (prev.0, prev.1, d);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let fm = f(m)?;
                if fm.abs() < 1e-9 * p.kappa || m == a || m == b {
                    return Ok(m);
                }
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            return Ok(0.5 * (a + b));
        }
        prev = (d, v);
    }
    Err(CavityError::NoExceptionalPoint(c))
}

/// Sample skewness Σ(x−μ)³/(nσ³) with the population standard deviation.
pub fn skewness_of(values: &[f64]) -> Result<f64, CavityError> {
    let n = values.len() as f64;
    let mu = values.iter().sum::<f64>() / n;
    let (m2, m3) = values.iter().fold((0.0, 0.0), |(a, b), x| {
        let d = x - mu;
        (a + d * d, b + d * d * d)
    });
    let sigma = (m2 / n).sqrt();
    if !(sigma > 0.0) {
        return Err(CavityError::Degenerate);
    }
    Ok(m3 / (n * sigma.powi(3)))
}

pub fn skewness(spec: &Spectrum) -> Result<f64, CavityError> {
    skewness_of(&spec.values)
}

/// Points of the truncated skewness grid, ω/ω_m ∈ [−100, 100].
pub const SKEWNESS_POINTS: usize = 20001;

pub fn skewness_grid(p: &SystemParams) -> Vec<f64> {
    linspace(-100.0 * p.omega_m, 100.0 * p.omega_m, SKEWNESS_POINTS)
}

/// Skewness of S_nn minus that of the same system with K = 0, same drive.
pub fn effective_skewness(p: &SystemParams, n_in: f64, delta: f64) -> Result<f64, CavityError> {
    let grid = skewness_grid(p);
    let op = OperatingPoint::new(delta, n_in);
    let nl = solve_steady(p, &op)?;
    let lp = p.linear();
    let lin = solve_steady(&lp, &op)?;
    Ok(skewness(&photon_spectrum(&nl, p, &grid)?)? - skewness(&photon_spectrum(&lin, &lp, &grid)?)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub gamma_stokes: f64,
    pub gamma_antistokes: f64,
    pub gamma_opt: f64,
    pub c_eff: f64,
}

/// Γ_S,AS = g0² S_nn[∓ω_m] and the closed-form optical damping.
pub fn scattering_rates(ss: &SteadyState, p: &SystemParams) -> RateReport {
    let g2 = p.g0 * p.g0;
    let gamma_stokes = g2 * photon_spectrum_at(ss, p, -p.omega_m);
    let gamma_antistokes = g2 * photon_spectrum_at(ss, p, p.omega_m);
    let gamma_opt = optical_damping(ss, p);
    RateReport { gamma_stokes, gamma_antistokes, gamma_opt, c_eff: gamma_opt / p.gamma_m }
}

pub fn optical_damping(ss: &SteadyState, p: &SystemParams) -> f64 {
    4.0 * p.g0 * p.g0 * ss.n_c * ss.delta_eff() * p.kappa * p.omega_m
        / cavity_denominator(ss, p, p.omega_m)
}
