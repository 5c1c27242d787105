//! Effective mechanical dynamics: cavity self-energy, mechanical noise
//! spectrum, phonon occupations and the backaction floor.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cavity::{
    cavity_is_stable, check_grid, scattering_rates, CavityError, RateReport, Spectrum, SpectrumKind,
    SpectrumMeta,
};
use crate::params::SystemParams;
use crate::steady_state::SteadyState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoolingError {
    #[error("net optical anti-damping exceeds intrinsic damping (Γ_opt = {gamma_opt:.6e} ≤ −γ_m)")]
    AntiDamping { gamma_opt: f64 },
    #[error("mechanical poles are not in the lower half plane")]
    UnstablePoles,
    #[error("effective detuning Δ_eff = {0:.6e} is on the heating side")]
    HeatingSide(f64),
    #[error(transparent)]
    Cavity(#[from] CavityError),
}

/// Σ_c[ω] = 2|G|²(|Λ| − Δ̃) / ((−iω + κ/2)² + Δ̃² − |Λ|²).
pub fn cavity_self_energy(ss: &SteadyState, p: &SystemParams, omega: f64) -> Complex64 {
    self_energy(ss, p).value_at(omega)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfEnergy {
    pub delta_eff: f64,
    g2: f64,
    radicand: f64,
    half_kappa: f64,
    omega_m: f64,
    gamma_m: f64,
}

pub fn self_energy(ss: &SteadyState, p: &SystemParams) -> SelfEnergy {
    SelfEnergy {
        delta_eff: ss.delta_eff(),
        g2: ss.g_abs * ss.g_abs,
        radicand: ss.pole_radicand(),
        half_kappa: 0.5 * p.kappa,
        omega_m: p.omega_m,
        gamma_m: p.gamma_m,
    }
}

impl SelfEnergy {
    pub fn value_at(&self, omega: f64) -> Complex64 {
        let num = 2.0 * self.g2 * self.delta_eff;
        if num == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let z = Complex64::new(self.half_kappa, -omega);
        num / (z * z + self.radicand)
    }

    pub fn modified_frequency(&self, omega: f64) -> f64 {
        self.omega_m - self.value_at(omega).re
    }

    pub fn modified_damping(&self, omega: f64) -> f64 {
        self.gamma_m + 2.0 * self.value_at(omega).im
    }
}

/// Mechanical poles with Σ_c frozen at ω_m.
///
/// Ω_± = −iγ_m/2 ± sqrt(ω_m² − 2ω_mΣ_c[ω_m]). Only |Im Ω_−| enters the
/// spectrum, so the mirror pole is reported in the lower half plane.
pub fn mechanical_poles(ss: &SteadyState, p: &SystemParams) -> [Complex64; 2] {
    let sigma = cavity_self_energy(ss, p, p.omega_m);
    let s = (p.omega_m * p.omega_m - 2.0 * p.omega_m * sigma).sqrt();
    let half = Complex64::new(0.0, -0.5 * p.gamma_m);
    let plus = half + s;
    let minus = half - s;
    [plus, Complex64::new(minus.re, -minus.im.abs())]
}

fn poles_stable(poles: &[Complex64; 2]) -> bool {
    poles.iter().all(|z| z.im < 0.0)
}

/// Three-term mechanical noise spectrum at one frequency.
pub fn mech_spectrum_at(ss: &SteadyState, p: &SystemParams, omega: f64) -> f64 {
    let sigma = cavity_self_energy(ss, p, p.omega_m);
    let poles = mechanical_poles(ss, p);
    let rates = scattering_rates(ss, p);
    mech_spectrum_eval(p, sigma, &poles, rates.gamma_stokes, omega)
}

fn mech_spectrum_eval(p: &SystemParams, sigma: Complex64, poles: &[Complex64; 2], gamma_s: f64, w: f64) -> f64 {
    // X_m*^{-1}[−ω]
    let xm = Complex64::new(0.5 * p.gamma_m, -(w + p.omega_m));
    let den = ((w - poles[0]) * (w - poles[1])).norm_sqr();
    let i_sigma = Complex64::i() * sigma;
    (p.gamma_m * (xm + i_sigma).norm_sqr() * p.n_th
        + p.gamma_m * sigma.norm_sqr() * (p.n_th + 1.0)
        + xm.norm_sqr() * gamma_s)
        / den
}

pub fn mech_noise_spectrum(ss: &SteadyState, p: &SystemParams, grid: &[f64]) -> Result<Spectrum, CoolingError> {
    check_grid(grid)?;
    if !cavity_is_stable(ss, p) {
        return Err(CavityError::Unstable.into());
    }
    let poles = mechanical_poles(ss, p);
    if !poles_stable(&poles) {
        return Err(CoolingError::UnstablePoles);
    }
    let sigma = cavity_self_energy(ss, p, p.omega_m);
    let gs = scattering_rates(ss, p).gamma_stokes;
    let values = grid.par_iter().map(|&w| mech_spectrum_eval(p, sigma, &poles, gs, w)).collect();
    Ok(Spectrum {
        grid: grid.to_vec(),
        values,
        meta: SpectrumMeta { kind: SpectrumKind::Mechanical, params: *p, detuning: ss.detuning, n_in: ss.n_in },
    })
}

/// True when κ exceeds g0 by at least a factor of ten.
pub fn weak_coupling(p: &SystemParams) -> bool {
    p.kappa >= 10.0 * p.g0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoolingReport {
    pub rates: RateReport,
    pub sigma_m: Complex64,
    pub delta_eff: f64,
    /// Thermal part plus backaction part.
    pub n_closed: f64,
    pub n_rate: f64,
    /// Backaction floor, `None` on the heating side.
    pub n_backaction: Option<f64>,
    pub n_thermal_part: f64,
    pub n_backaction_part: f64,
    pub mech_poles: [Complex64; 2],
    pub oracle: Option<OracleCheck>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub n_oracle: f64,
    pub error_estimate: f64,
    pub relative_gap: f64,
}

fn signed_backaction(p: &SystemParams, delta_eff: f64) -> f64 {
    let d = p.omega_m - delta_eff;
    (d * d + 0.25 * p.kappa * p.kappa) / (4.0 * p.omega_m * delta_eff)
}

pub fn occupation(ss: &SteadyState, p: &SystemParams) -> Result<CoolingReport, CoolingError> {
    if !cavity_is_stable(ss, p) {
        return Err(CavityError::Unstable.into());
    }
    let rates = scattering_rates(ss, p);
    if rates.gamma_opt <= -p.gamma_m {
        return Err(CoolingError::AntiDamping { gamma_opt: rates.gamma_opt });
    }
    let c = rates.c_eff;
    let delta_eff = ss.delta_eff();
    let (n_thermal_part, n_backaction_part) = if c == 0.0 || delta_eff == 0.0 {
        (p.n_th, rates.gamma_stokes / p.gamma_m)
    } else {
        (p.n_th / (c + 1.0), c / (c + 1.0) * signed_backaction(p, delta_eff))
    };
    let total = p.gamma_m + rates.gamma_opt;
    let n_rate = p.n_th * (p.gamma_m / total) + rates.gamma_stokes / total;
    Ok(CoolingReport {
        rates,
        sigma_m: cavity_self_energy(ss, p, p.omega_m),
        delta_eff,
        n_closed: n_thermal_part + n_backaction_part,
        n_rate,
        n_backaction: (delta_eff > 0.0).then(|| signed_backaction(p, delta_eff)),
        n_thermal_part,
        n_backaction_part,
        mech_poles: mechanical_poles(ss, p),
        oracle: None,
    })
}

/// n_BA = ((ω_m − Δ_eff)² + κ²/4) / (4ω_m Δ_eff).
pub fn backaction_limit(p: &SystemParams, delta_eff: f64) -> Result<f64, CoolingError> {
    if !(delta_eff > 0.0) {
        return Err(CoolingError::HeatingSide(delta_eff));
    }
    Ok(signed_backaction(p, delta_eff))
}

/// Optimal Δ_eff and the smallest reachable backaction occupation.
pub fn min_backaction(p: &SystemParams) -> (f64, f64) {
    let d = (0.25 * p.kappa * p.kappa + p.omega_m * p.omega_m).sqrt();
    let r = p.kappa / p.omega_m;
    (d, ((r * r + 4.0).sqrt() - 2.0) / 4.0)
}

/// Whether the backaction floor lies below one phonon.
pub fn ground_state_feasible(p: &SystemParams) -> bool {
    min_backaction(p).1 < 1.0
}

/// Closed-form residue integrals of 1, ω and ω² over |(ω−Ω_+)(ω−Ω_−)|⁻², per 2π.
pub fn residue_integrals(p: &SystemParams, c_eff: f64) -> [f64; 3] {
    let (w, g) = (p.omega_m, p.gamma_m);
    let c2 = c_eff * c_eff - 1.0;
    [
        c_eff / (2.0 * w * w * g * c2),
        1.0 / (2.0 * w * g * -c2),
        c_eff * (1.0 - (g / (2.0 * w)).powi(2)) / (2.0 * g * c2),
    ]
}
