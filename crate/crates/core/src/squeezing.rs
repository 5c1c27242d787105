//! Squeezed-vacuum drive from a degenerate parametric amplifier: noise
//! correlators, squeezed radiation-pressure force spectrum, optimal phase and
//! suppressed backaction.

use std::f64::consts::{LN_10, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cavity::{cavity_denominator, cavity_is_stable, photon_spectrum_at, scattering_rates, CavityError};
use crate::mechanics::{backaction_limit, CoolingError};
use crate::params::SystemParams;
use crate::steady_state::SteadyState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SqueezeError {
    #[error("purity xi must lie in [0, 1], got {0}")]
    Purity(f64),
    #[error("`{0}` must be finite and non-negative")]
    Negative(&'static str),
    #[error("parametric drive |chi| = {chi:.6e} is at or above threshold kappa/2 = {half_kappa:.6e}")]
    AboveThreshold { chi: f64, half_kappa: f64 },
    #[error("nonzero squeezing needs xi > 0")]
    NoPurity,
    #[error("sideband ratio is not below one")]
    SidebandRatio,
    #[error(transparent)]
    Cooling(#[from] CoolingError),
}

/// Squeezed-vacuum input: ⟨d†d⟩ = ξN_s, ⟨dd⟩ = ξM_s e^{−2iφ}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeSpec {
    pub xi: f64,
    pub n_s: f64,
    pub m_s: f64,
    pub phase: f64,
    pub r: f64,
    pub db: f64,
}

fn check_xi(xi: f64) -> Result<(), SqueezeError> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(SqueezeError::Purity(xi));
    }
    Ok(())
}

/// r from N_s and ξ: sinh²r = ξN_s.
fn squeeze_factor(xi: f64, n_s: f64) -> f64 {
    (xi * n_s).sqrt().asinh()
}

/// ϱ = 10 log10(e^{2r}).
pub fn db_from_r(r: f64) -> f64 {
    20.0 * r / LN_10
}

pub fn r_from_db(db: f64) -> f64 {
    db * LN_10 / 20.0
}

impl SqueezeSpec {
    pub fn vacuum() -> Self {
        Self { xi: 0.0, n_s: 0.0, m_s: 0.0, phase: 0.0, r: 0.0, db: 0.0 }
    }

    pub fn from_n_s(xi: f64, n_s: f64, phase: f64) -> Result<Self, SqueezeError> {
        check_xi(xi)?;
        if !(n_s >= 0.0) || !n_s.is_finite() {
            return Err(SqueezeError::Negative("n_s"));
        }
        let r = squeeze_factor(xi, n_s);
        Ok(Self { xi, n_s, m_s: (n_s * (n_s + 1.0)).sqrt(), phase, r, db: db_from_r(r) })
    }

    pub fn from_db(xi: f64, db: f64, phase: f64) -> Result<Self, SqueezeError> {
        check_xi(xi)?;
        if !(db >= 0.0) || !db.is_finite() {
            return Err(SqueezeError::Negative("db"));
        }
        if db == 0.0 {
            return Ok(Self { xi, phase, ..Self::vacuum() });
        }
        if xi == 0.0 {
            return Err(SqueezeError::NoPurity);
        }
        let r = r_from_db(db);
        let n_s = r.sinh().powi(2) / xi;
        Ok(Self { xi, n_s, m_s: (n_s * (n_s + 1.0)).sqrt(), phase, r, db })
    }

    pub fn from_chi(kappa: f64, chi_abs: f64, xi: f64, phase: f64) -> Result<Self, SqueezeError> {
        let (n_s, m_s) = correlators_from_chi(kappa, chi_abs)?;
        let mut s = Self::from_n_s(xi, n_s, phase)?;
        s.m_s = m_s;
        Ok(s)
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }
}

/// Output correlators of a degenerate parametric amplifier below threshold,
/// κ_± = κ/2 ± |χ|.
pub fn correlators_from_chi(kappa: f64, chi_abs: f64) -> Result<(f64, f64), SqueezeError> {
    if !(chi_abs >= 0.0) {
        return Err(SqueezeError::Negative("chi"));
    }
    if chi_abs >= 0.5 * kappa {
        return Err(SqueezeError::AboveThreshold { chi: chi_abs, half_kappa: 0.5 * kappa });
    }
    let kp2 = (0.5 * kappa + chi_abs).powi(2);
    let km2 = (0.5 * kappa - chi_abs).powi(2);
    let den = 4.0 * kp2 * km2;
    Ok(((kp2 - km2).powi(2) / den, (kp2 * kp2 - km2 * km2) / den))
}

/// Radiation-pressure force spectrum under squeezed input.
///
/// S_FF = S⁰_FF {1 + [1 + R(ω)] ξN_s}
///        − 2ξM_s g0² n_c κ [(Δ_eff² − ω² − κ²/4) cos 2φ + κΔ_eff sin 2φ] / D(ω)
/// with R(ω) = ((ω−Δ_eff)² + κ²/4)/((ω+Δ_eff)² + κ²/4) and D the quartic
/// cavity denominator. The phase φ is measured from the intracavity field.
pub fn squeezed_force_spectrum(ss: &SteadyState, p: &SystemParams, sq: &SqueezeSpec, omega: f64) -> f64 {
    let g2 = p.g0 * p.g0;
    let s0 = g2 * photon_spectrum_at(ss, p, omega);
    if sq.xi == 0.0 {
        return s0;
    }
    let de = ss.delta_eff();
    let q = 0.25 * p.kappa * p.kappa;
    let ratio = ((omega - de).powi(2) + q) / ((omega + de).powi(2) + q);
    let (s2, c2) = (2.0 * sq.phase).sin_cos();
    let interference = 2.0 * sq.xi * sq.m_s * g2 * ss.n_c * p.kappa
        * ((de * de - omega * omega - q) * c2 + p.kappa * de * s2)
        / cavity_denominator(ss, p, omega);
    s0 * (1.0 + (1.0 + ratio) * sq.xi * sq.n_s) - interference
}

/// Squeezing phase in [0, π) minimising the Stokes rate.
pub fn optimal_phase(ss: &SteadyState, p: &SystemParams) -> f64 {
    let de = ss.delta_eff();
    let a = p.omega_m * p.omega_m + 0.25 * p.kappa * p.kappa - de * de;
    let b = p.kappa * de;
    // Γ_S(φ) − const ∝ a cos 2φ − b sin 2φ, smallest at 2φ = π − atan2(b, a)
    let phi = 0.5 * (PI - b.atan2(a));
    if phi >= PI {
        phi - PI
    } else {
        phi
    }
}

/// Stokes rate under squeezed input, Γ_S^sq = S_FF[−ω_m].
pub fn stokes_rate_squeezed(ss: &SteadyState, p: &SystemParams, sq: &SqueezeSpec) -> f64 {
    squeezed_force_spectrum(ss, p, sq, -p.omega_m)
}

/// Sideband ratio ℘² = ((Δ_eff−ω_m)² + κ²/4)/((Δ_eff+ω_m)² + κ²/4).
pub fn sideband_ratio_sq(p: &SystemParams, delta_eff: f64) -> f64 {
    let q = 0.25 * p.kappa * p.kappa;
    ((delta_eff - p.omega_m).powi(2) + q) / ((delta_eff + p.omega_m).powi(2) + q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezedBackaction {
    pub n_ba: f64,
    pub n_ba_s: f64,
    /// ℘, square root of the sideband ratio.
    pub wp: f64,
    pub n_s_opt: f64,
    pub r: f64,
    pub db: f64,
}

pub fn squeezed_backaction(ss: &SteadyState, p: &SystemParams, xi: f64) -> Result<SqueezedBackaction, SqueezeError> {
    check_xi(xi)?;
    let de = ss.delta_eff();
    let n_ba = backaction_limit(p, de)?;
    let wp2 = sideband_ratio_sq(p, de);
    if !(wp2 < 1.0) {
        return Err(SqueezeError::SidebandRatio);
    }
    let n_s_opt = wp2 / (1.0 - wp2);
    let r = squeeze_factor(xi, n_s_opt);
    Ok(SqueezedBackaction { n_ba, n_ba_s: (1.0 - xi) * n_ba, wp: wp2.sqrt(), n_s_opt, r, db: db_from_r(r) })
}

/// Squeezed input with N_s matched to the sideband ratio and optimal phase.
pub fn matched_squeeze(ss: &SteadyState, p: &SystemParams, xi: f64) -> Result<SqueezeSpec, SqueezeError> {
    let b = squeezed_backaction(ss, p, xi)?;
    SqueezeSpec::from_n_s(xi, b.n_s_opt, optimal_phase(ss, p))
}

/// Rate-form phonon occupation with the squeezed Stokes rate at optimal phase.
/// The phase stored in `sq` is ignored.
pub fn occupation_with_squeezing(ss: &SteadyState, p: &SystemParams, sq: &SqueezeSpec) -> Result<f64, SqueezeError> {
    if !cavity_is_stable(ss, p) {
        return Err(CoolingError::from(CavityError::Unstable).into());
    }
    let rates = scattering_rates(ss, p);
    if rates.gamma_opt <= -p.gamma_m {
        return Err(CoolingError::AntiDamping { gamma_opt: rates.gamma_opt }.into());
    }
    let opt = sq.with_phase(optimal_phase(ss, p));
    let gs = stokes_rate_squeezed(ss, p, &opt);
    let total = p.gamma_m + rates.gamma_opt;
    Ok(p.n_th * (p.gamma_m / total) + gs / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{default_params, OperatingPoint};
    use crate::steady_state::{critical_drive, solve_steady};

    fn point() -> (SystemParams, SteadyState) {
        let p = default_params();
        let n_in = critical_drive(&p).unwrap();
        let ss = solve_steady(&p, &OperatingPoint::new(-0.87 * p.kappa, n_in)).unwrap();
        (p, ss)
    }

    #[test]
    fn vacuum_correlators() {
        assert_eq!(correlators_from_chi(1.0, 0.0).unwrap(), (0.0, 0.0));
        assert!(correlators_from_chi(1.0, 0.5).is_err());
    }

    #[test]
    fn pure_dpa_identity() {
        for chi in [0.01, 0.1, 0.3, 0.45, 0.499] {
            let (n, m) = correlators_from_chi(1.0, chi).unwrap();
            assert!((m * m - n * (n + 1.0)).abs() <= 1e-12 * m * m.max(1.0), "{chi}");
        }
    }

    #[test]
    fn db_round_trip() {
        let s = SqueezeSpec::from_n_s(0.8, 3.7, 0.2).unwrap();
        let t = SqueezeSpec::from_db(0.8, s.db, 0.2).unwrap();
        assert!((t.n_s / s.n_s - 1.0).abs() < 1e-12);
        assert!((t.r / s.r - 1.0).abs() < 1e-12);
        assert!((db_from_r(r_from_db(7.3)) - 7.3).abs() < 1e-12);
    }

    #[test]
    fn no_squeezing_reduces() {
        let (p, ss) = point();
        let sq = SqueezeSpec::vacuum();
        for w in [-p.omega_m, 0.0, 3.0 * p.omega_m] {
            assert_eq!(squeezed_force_spectrum(&ss, &p, &sq, w), p.g0 * p.g0 * photon_spectrum_at(&ss, &p, w));
        }
    }

    #[test]
    fn optimal_phase_is_minimum() {
        let (p, ss) = point();
        let base = SqueezeSpec::from_n_s(0.7, 1.3, 0.0).unwrap();
        let phi = optimal_phase(&ss, &p);
        assert!((0.0..PI).contains(&phi));
        let gs = |f: f64| stokes_rate_squeezed(&ss, &p, &base.with_phase(f));
        let h = 1e-5;
        let d1 = (gs(phi + h) - gs(phi - h)) / (2.0 * h);
        let d2 = (gs(phi + h) - 2.0 * gs(phi) + gs(phi - h)) / (h * h);
        assert!(d1.abs() < 1e-8 * gs(phi).abs().max(d2.abs() * h), "{d1} {d2}");
        assert!(d2 > 0.0);
        assert!(gs(phi) < stokes_rate_squeezed(&ss, &p, &SqueezeSpec::vacuum()));
    }

    #[test]
    fn phase_near_zero_detuning() {
        let p = default_params();
        let ss = SteadyState { detuning: -1e-3, lambda_abs: 0.0, delta_tilde: -1e-3, ..point().1 };
        let phi = optimal_phase(&ss, &p);
        assert!((phi - 0.5 * PI).abs() < 1e-6);
    }

    #[test]
    fn full_suppression() {
        let (p, ss) = point();
        let b = squeezed_backaction(&ss, &p, 1.0).unwrap();
        assert_eq!(b.n_ba_s, 0.0);
        let sq = matched_squeeze(&ss, &p, 1.0).unwrap();
        let gs = stokes_rate_squeezed(&ss, &p, &sq);
        assert!(gs.abs() < 1e-9 * scattering_rates(&ss, &p).gamma_stokes);
    }

    #[test]
    fn total_damping_invariant() {
        let (p, ss) = point();
        let g0 = scattering_rates(&ss, &p).gamma_opt;
        let sq = SqueezeSpec::from_n_s(0.6, 2.0, 1.1).unwrap();
        let gt = squeezed_force_spectrum(&ss, &p, &sq, p.omega_m) - squeezed_force_spectrum(&ss, &p, &sq, -p.omega_m);
        assert!((gt - g0).abs() < 1e-10 * g0);
    }

    #[test]
    fn vacuum_occupation_matches() {
        let (p, ss) = point();
        let n = occupation_with_squeezing(&ss, &p, &SqueezeSpec::vacuum()).unwrap();
        let r = crate::mechanics::occupation(&ss, &p).unwrap();
        assert_eq!(n, r.n_rate);
    }
}
