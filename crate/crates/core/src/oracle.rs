//! Independent numerical solver for the linearised quantum Langevin
//! equations in the basis (δa, δa†, δb, δb†). Spectra come from inverting the
//! full 4×4 dynamical matrix at each frequency and occupations from direct
//! quadrature, with no rotating-wave or weak-coupling reductions.

use std::f64::consts::PI;

use nalgebra::{Matrix4, RowVector4, Vector4};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cavity::check_grid;
use crate::mechanics::{CoolingReport, OracleCheck};
use crate::params::SystemParams;
use crate::quadrature::{integrate_real_line, QuadError, QuadOptions};
use crate::squeezing::SqueezeSpec;
use crate::steady_state::SteadyState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("dynamical matrix has an eigenvalue with non-negative real part ({0:.6e})")]
    Unstable(f64),
    #[error("eigenvalue decomposition failed")]
    Eigen,
    #[error("singular response matrix at omega = {0:.6e}")]
    Singular(f64),
    #[error("invalid frequency grid: {0}")]
    BadGrid(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicalMatrix {
    pub m: Matrix4<Complex64>,
    /// Input coupling amplitudes √κ, √κ, √γ, √γ.
    pub k: [f64; 4],
    pub alpha: Complex64,
    pub phi_c: f64,
    pub omega_m: f64,
}

/// Drift matrix of the linearised equations about `ss`.
pub fn build_matrix(ss: &SteadyState, p: &SystemParams) -> DynamicalMatrix {
    let alpha = ss.alpha();
    let rot = Complex64::from_polar(1.0, ss.phi_c);
    let l = p.kerr * ss.n_c * rot * rot;
    let g = p.g0 * ss.n_c.sqrt() * rot;
    let dt = ss.detuning + 2.0 * l.norm();
    let (hk, hg) = (c(0.5 * p.kappa), c(0.5 * p.gamma_m));
    let (wm, z) = (p.omega_m, c(0.0));
    #[rustfmt::skip]
    let m = Matrix4::new(
        I * dt - hk,   I * l,          -I * g,         -I * g,
        -I * l.conj(), -I * dt - hk,   I * g.conj(),   I * g.conj(),
        -I * g.conj(), -I * g,         -I * wm - hg,   z,
        I * g.conj(),  I * g,          z,              I * wm - hg,
    );
    let (sk, sg) = (p.kappa.sqrt(), p.gamma_m.sqrt());
    DynamicalMatrix { m, k: [sk, sk, sg, sg], alpha, phi_c: ss.phi_c, omega_m: p.omega_m }
}

/// Input noise correlators ⟨ξ_i(ω) ξ_j(ω')⟩ = C_ij 2π δ(ω+ω').
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputCorrelators {
    pub n_th: f64,
    pub xi: f64,
    pub n_s: f64,
    pub m_s: f64,
    /// Squeezing phase relative to the intracavity field.
    pub phase: f64,
}

impl InputCorrelators {
    pub fn thermal(p: &SystemParams) -> Self {
        Self { n_th: p.n_th, xi: 0.0, n_s: 0.0, m_s: 0.0, phase: 0.0 }
    }

    pub fn squeezed(p: &SystemParams, sq: &SqueezeSpec) -> Self {
        Self { n_th: p.n_th, xi: sq.xi, n_s: sq.n_s, m_s: sq.m_s, phase: sq.phase }
    }

    fn matrix(&self, phi_c: f64) -> Matrix4<Complex64> {
        let mut cm = Matrix4::zeros();
        let ph = Complex64::from_polar(1.0, -2.0 * (self.phase - phi_c));
        cm[(0, 0)] = self.xi * self.m_s * ph;
        cm[(0, 1)] = c(1.0 + self.xi * self.n_s);
        cm[(1, 0)] = c(self.xi * self.n_s);
        cm[(1, 1)] = self.xi * self.m_s * ph.conj();
        cm[(2, 3)] = c(self.n_th + 1.0);
        cm[(3, 2)] = c(self.n_th);
        cm
    }
}

impl DynamicalMatrix {
    pub fn eigenvalues(&self) -> Result<Vec<Complex64>, OracleError> {
        let ev = self.m.eigenvalues().ok_or(OracleError::Eigen)?;
        let mut v: Vec<Complex64> = ev.iter().copied().collect();
        v.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
        Ok(v)
    }

    /// Largest real part among the eigenvalues.
    pub fn spectral_abscissa(&self) -> Result<f64, OracleError> {
        Ok(self.eigenvalues()?.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn is_stable(&self) -> Result<bool, OracleError> {
        Ok(self.spectral_abscissa()? < 0.0)
    }

    /// Response poles ω = iλ in the convention δx(t) ∝ e^{−iωt}.
    pub fn poles(&self) -> Result<Vec<Complex64>, OracleError> {
        Ok(self.eigenvalues()?.into_iter().map(|e| I * e).collect())
    }

    /// Transfer matrix T(ω) = −(−iω − M)⁻¹ K mapping inputs to outputs.
    pub fn transfer(&self, omega: f64) -> Result<Matrix4<Complex64>, OracleError> {
        let a = Matrix4::from_diagonal_element(-I * omega) - self.m;
        let inv = a.lu().try_inverse().ok_or(OracleError::Singular(omega))?;
        let kd = Matrix4::from_diagonal(&Vector4::from_iterator(self.k.iter().map(|&x| c(x))));
        Ok(-(inv * kd))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleSpectrum {
    PhotonNumber,
    Force,
    Mechanical,
}

fn contract(a: RowVector4<Complex64>, cm: &Matrix4<Complex64>, b: RowVector4<Complex64>) -> Complex64 {
    (a * cm * b.transpose())[(0, 0)]
}

/// One spectral value at ω.
pub fn numeric_spectrum_at(
    dm: &DynamicalMatrix,
    noise: &InputCorrelators,
    kind: OracleSpectrum,
    g0: f64,
    omega: f64,
) -> Result<f64, OracleError> {
    let cm = noise.matrix(dm.phi_c);
    let (tp, tm) = (dm.transfer(omega)?, dm.transfer(-omega)?);
    let v = match kind {
        OracleSpectrum::Mechanical => contract(tm.row(3).into_owned(), &cm, tp.row(2).into_owned()).re,
        OracleSpectrum::PhotonNumber | OracleSpectrum::Force => {
            let u = RowVector4::new(dm.alpha.conj(), dm.alpha, c(0.0), c(0.0));
            let s = contract(u * tp, &cm, u * tm).re;
            if kind == OracleSpectrum::Force {
                g0 * g0 * s
            } else {
                s
            }
        }
    };
    Ok(v)
}

pub fn numeric_spectrum(
    dm: &DynamicalMatrix,
    noise: &InputCorrelators,
    kind: OracleSpectrum,
    g0: f64,
    grid: &[f64],
) -> Result<Vec<f64>, OracleError> {
    check_grid(grid).map_err(|e| OracleError::BadGrid(e.to_string()))?;
    grid.par_iter().map(|&w| numeric_spectrum_at(dm, noise, kind, g0, w)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericOccupation {
    pub value: f64,
    pub error: f64,
}

/// Mechanical pole pair (as eigenvalues) used to place quadrature breakpoints.
fn mechanical_eigen(dm: &DynamicalMatrix) -> Result<(f64, f64), OracleError> {
    let ev = dm.eigenvalues()?;
    let wm = dm.omega_m;
    let mech: Vec<&Complex64> = ev.iter().filter(|e| e.im.abs() > 0.2 * wm && e.re.abs() < 0.5 * wm).collect();
    let pick: Vec<&Complex64> = if mech.is_empty() { ev.iter().collect() } else { mech };
    let w = pick.iter().map(|e| e.im.abs()).fold(0.0, f64::max);
    let g = pick.iter().map(|e| -e.re).fold(0.0, f64::max);
    Ok((w, g))
}

/// n_m = ∫ dω/2π S_bb(ω), integrated over the real line.
pub fn numeric_occupation(
    dm: &DynamicalMatrix,
    noise: &InputCorrelators,
    kappa: f64,
) -> Result<NumericOccupation, OracleError> {
    let abscissa = dm.spectral_abscissa()?;
    if abscissa >= 0.0 {
        return Err(OracleError::Unstable(abscissa));
    }
    let (w, g) = mechanical_eigen(dm)?;
    let r = (10.0 * kappa).max(w + 1e4 * g);
    let mut pts = vec![-r, r];
    for centre in [w, -w] {
        for s in [-1.0, 1.0] {
            for k in [0.0, 1.0, 10.0, 100.0, 1e3, 1e4] {
                let x = centre + s * g * k;
                if x > -r && x < r {
                    pts.push(x);
                }
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let cm = noise.matrix(dm.phi_c);
    let f = |om: f64| -> f64 {
        match (dm.transfer(om), dm.transfer(-om)) {
            (Ok(tp), Ok(tm)) => contract(tm.row(3).into_owned(), &cm, tp.row(2).into_owned()).re / (2.0 * PI),
            _ => f64::NAN,
        }
    };
    let opts = QuadOptions { rel_tol: 1e-9, abs_tol: 0.0, max_intervals: 20_000 };
    let res = integrate_real_line(f, &pts, opts)?;
    Ok(NumericOccupation { value: res.value, error: res.error })
}

/// Fills the oracle comparison into a closed-form cooling report.
pub fn attach_oracle(report: &mut CoolingReport, ss: &SteadyState, p: &SystemParams) -> Result<(), OracleError> {
    let dm = build_matrix(ss, p);
    let n = numeric_occupation(&dm, &InputCorrelators::thermal(p), p.kappa)?;
    report.oracle = Some(OracleCheck {
        n_oracle: n.value,
        error_estimate: n.error,
        relative_gap: (report.n_closed - n.value).abs() / n.value.abs(),
    });
    Ok(())
}

/// Squeezed-input occupation from the oracle at the phase stored in `sq`.
pub fn numeric_occupation_squeezed(
    ss: &SteadyState,
    p: &SystemParams,
    sq: &SqueezeSpec,
) -> Result<NumericOccupation, OracleError> {
    numeric_occupation(&build_matrix(ss, p), &InputCorrelators::squeezed(p, sq), p.kappa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::{cavity_poles, photon_spectrum_at};
    use crate::mechanics::occupation;
    use crate::params::{default_params, OperatingPoint};
    use crate::squeezing::{optimal_phase, squeezed_force_spectrum};
    use crate::steady_state::{critical_drive, solve_steady};

    fn point(p: &SystemParams, d: f64) -> SteadyState {
        let n_in = critical_drive(p).unwrap();
        solve_steady(p, &OperatingPoint::new(d * p.kappa, n_in)).unwrap()
    }

    #[test]
    fn uncoupled_photon_spectrum() {
        let p = default_params().with_g0(0.0);
        let ss = point(&default_params(), -0.87);
        let ss = SteadyState { g_abs: 0.0, ..ss };
        let dm = build_matrix(&ss, &p);
        let noise = InputCorrelators::thermal(&p);
        for w in [-p.omega_m, 0.0, 0.3 * p.kappa, 2.0 * p.kappa] {
            let a = numeric_spectrum_at(&dm, &noise, OracleSpectrum::PhotonNumber, 0.0, w).unwrap();
            let b = photon_spectrum_at(&ss, &p, w);
            assert!((a / b - 1.0).abs() < 1e-8, "{w}: {a} {b}");
        }
    }

    #[test]
    fn cavity_eigenvalues_match() {
        let p = default_params().with_g0(0.0);
        let ss = point(&default_params(), -0.87);
        let poles = build_matrix(&ss, &p).poles().unwrap();
        let cav = cavity_poles(&ss, &p).poles;
        for q in cav {
            let best = poles.iter().map(|z| (z - q).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-10 * p.kappa, "{q} {poles:?}");
        }
    }

    #[test]
    fn uncoupled_is_thermal() {
        let p = default_params().with_g0(0.0);
        let ss = point(&p, -0.87);
        let n = numeric_occupation(&build_matrix(&ss, &p), &InputCorrelators::thermal(&p), p.kappa).unwrap();
        assert!((n.value / p.n_th - 1.0).abs() < 1e-4, "{}", n.value);
    }

    #[test]
    fn agrees_with_closed_form() {
        let p = default_params();
        let ss = point(&p, -0.87);
        let mut rep = occupation(&ss, &p).unwrap();
        attach_oracle(&mut rep, &ss, &p).unwrap();
        let o = rep.oracle.unwrap();
        assert!(o.relative_gap < 0.02, "{rep:?}");
    }

    #[test]
    fn squeezed_force_matches() {
        let p = default_params();
        let ss = point(&p, -0.87);
        let dm0 = build_matrix(&ss, &p.with_g0(0.0));
        for phase in [0.0, 0.4, optimal_phase(&ss, &p), 2.3] {
            let sq = SqueezeSpec::from_n_s(0.7, 1.5, phase).unwrap();
            let noise = InputCorrelators::squeezed(&p, &sq);
            for w in [-p.omega_m, p.omega_m, 0.2 * p.kappa] {
                let a = numeric_spectrum_at(&dm0, &noise, OracleSpectrum::Force, p.g0, w).unwrap();
                let b = squeezed_force_spectrum(&ss, &p, &sq, w);
                assert!((a / b - 1.0).abs() < 1e-8, "phase {phase} w {w}: {a} {b}");
            }
        }
    }
}
