//! Classical steady state of the driven Kerr cavity with the static
//! optomechanical shift folded into an effective Kerr constant.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{BranchPolicy, OperatingPoint, SystemParams};

/// Tolerance for treating a closed-form root as real.
const REAL_ROOT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SteadyStateError {
    #[error("effective Kerr constant is zero: a linear cavity has no bifurcation")]
    NoBifurcation,
    #[error("operating point is bistable ({0} branches) but a monostable point was required")]
    NotMonostable(usize),
    #[error("no stable photon-number branch")]
    NoStableRoot,
    #[error("input flux must be finite and non-negative, got {0}")]
    BadDrive(f64),
    #[error("detuning must be finite")]
    BadDetuning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Monostable,
    BistableLower,
    BistableMiddle,
    BistableUpper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonRoot {
    pub n_c: f64,
    pub stability: Stability,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BifurcationData {
    pub delta_bi: f64,
    pub n_bi: f64,
    pub n_in_bi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub detuning: f64,
    pub n_in: f64,
    pub n_c: f64,
    pub phi_c: f64,
    pub k_eff: f64,
    pub delta_tilde: f64,
    pub lambda_abs: f64,
    pub g_abs: f64,
    pub q_static: f64,
    pub branch: Branch,
}

impl SteadyState {
    /// Δ_eff = |Λ| − Δ̃ = −(Δ + |Λ|); positive on the cooling side.
    pub fn delta_eff(&self) -> f64 {
        self.lambda_abs - self.delta_tilde
    }

    /// Δ̃² − |Λ|² written as (Δ + 3|Λ|)(Δ + |Λ|).
    pub fn pole_radicand(&self) -> f64 {
        (self.detuning + 3.0 * self.lambda_abs) * (self.detuning + self.lambda_abs)
    }

    /// Complex intracavity amplitude α.
    pub fn alpha(&self) -> Complex64 {
        Complex64::from_polar(self.n_c.sqrt(), self.phi_c)
    }
}

/// K_eff = K + 2 g0² ω_m / (ω_m² + γ_m²/4).
pub fn effective_kerr(p: &SystemParams) -> f64 {
    p.kerr + 2.0 * p.g0 * p.g0 * p.omega_m / (p.omega_m * p.omega_m + 0.25 * p.gamma_m * p.gamma_m)
}

pub fn bifurcation(p: &SystemParams) -> Result<BifurcationData, SteadyStateError> {
    let k = effective_kerr(p);
    if k <= 0.0 {
        return Err(SteadyStateError::NoBifurcation);
    }
    let s3 = 3f64.sqrt();
    Ok(BifurcationData {
        delta_bi: -s3 * p.kappa / 2.0,
        n_bi: p.kappa / (s3 * k),
        n_in_bi: p.kappa * p.kappa / (3.0 * s3 * k),
    })
}

/// Input flux at the critical drive, a hair below the bifurcation.
pub const CRITICAL_FRACTION: f64 = 0.9999999;

pub fn critical_drive(p: &SystemParams) -> Result<f64, SteadyStateError> {
    Ok(CRITICAL_FRACTION * bifurcation(p)?.n_in_bi)
}

// double-double helpers for the residual evaluation

#[derive(Clone, Copy, Debug)]
struct Dd(f64, f64);

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    Dd(s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    Dd(p, a.mul_add(b, -p))
}

impl Dd {
    fn add(self, o: Dd) -> Dd {
        let s = two_sum(self.0, o.0);
        let e = s.1 + self.1 + o.1;
        two_sum(s.0, e)
    }

    fn mul(self, o: Dd) -> Dd {
        let p = two_prod(self.0, o.0);
        let e = p.1 + self.0 * o.1 + self.1 * o.0;
        two_sum(p.0, e)
    }

    fn value(self) -> f64 {
        self.0 + self.1
    }
}

fn dd(x: f64) -> Dd {
    Dd(x, 0.0)
}

/// Cubic n[(Δ + K n)² + κ²/4] − κ n_in, evaluated in double-double.
fn cubic_residual(k: f64, delta: f64, kappa: f64, n_in: f64, n: f64) -> f64 {
    let shift = dd(delta).add(dd(k).mul(dd(n)));
    let quad = shift.mul(shift).add(two_prod(0.5 * kappa, 0.5 * kappa));
    dd(n).mul(quad).add(two_prod(-kappa, n_in)).value()
}

fn cubic_slope(k: f64, delta: f64, kappa: f64, n: f64) -> f64 {
    3.0 * k * k * n * n + 4.0 * delta * k * n + delta * delta + 0.25 * kappa * kappa
}

fn polish(k: f64, delta: f64, kappa: f64, n_in: f64, mut n: f64) -> f64 {
    let mut r = cubic_residual(k, delta, kappa, n_in, n);
    for _ in 0..3 {
        let d = cubic_slope(k, delta, kappa, n);
        if r == 0.0 || d == 0.0 {
            break;
        }
        let cand = n - r / d;
        let rc = cubic_residual(k, delta, kappa, n_in, cand);
        if rc.abs() >= r.abs() || !cand.is_finite() {
            break;
        }
        n = cand;
        r = rc;
    }
    n
}

/// Residual of the steady-state cubic at `n`, normalised by κ n_in.
pub fn relative_residual(p: &SystemParams, delta: f64, n_in: f64, n: f64) -> f64 {
    let r = cubic_residual(effective_kerr(p), delta, p.kappa, n_in, n);
    if n_in == 0.0 {
        r.abs()
    } else {
        (r / (p.kappa * n_in)).abs()
    }
}

/// Closed-form complex roots of K² n³ + 2ΔK n² + (Δ² + κ²/4) n − κ n_in.
fn closed_form_roots(k: f64, delta: f64, kappa: f64, n_in: f64) -> [Complex64; 3] {
    let l0 = 0.75 * kappa * kappa - delta * delta;
    let l1 = -(2.25 * kappa * kappa + delta * delta) * delta - 13.5 * kappa * k * n_in;
    let disc = Complex64::new(l0 * l0 * l0 + l1 * l1, 0.0).sqrt();
    let mut sigma = (disc + l1).cbrt();
    if sigma.norm() == 0.0 {
        // other sign of the square root avoids the 0/0 at Λ0 = 0
        sigma = (l1 - disc).cbrt();
    }
    let e = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_3);
    let ec = e.conj();
    let s = 3.0 * k;
    let r1 = (-2.0 * delta - sigma + l0 / sigma) / s;
    let r2 = (-2.0 * delta + ec * sigma - e * l0 / sigma) / s;
    let r3 = (-2.0 * delta + e * sigma - ec * l0 / sigma) / s;
    [r1, r2, r3]
}

/// All real non-negative photon numbers solving the steady-state cubic, ascending.
pub fn photon_branches(p: &SystemParams, delta: f64, n_in: f64) -> Vec<PhotonRoot> {
    let k = effective_kerr(p);
    let kappa = p.kappa;
    if n_in == 0.0 {
        return vec![PhotonRoot { n_c: 0.0, stability: Stability::Stable }];
    }
    if k == 0.0 {
        let n = kappa * n_in / (delta * delta + 0.25 * kappa * kappa);
        return vec![PhotonRoot { n_c: n, stability: Stability::Stable }];
    }
    let cands = closed_form_roots(k, delta, kappa, n_in);
    let mut reals: Vec<f64> = cands
        .iter()
        .filter(|z| z.im.abs() <= REAL_ROOT_TOL * z.re.abs().max(1.0) && z.re >= 0.0)
        .map(|z| z.re)
        .collect();
    if reals.is_empty() {
        // a real cubic always has a real root; take the least complex one
        let z = cands
            .iter()
            .min_by(|a, b| {
                let ra = a.im.abs() / a.norm().max(1.0);
                let rb = b.im.abs() / b.norm().max(1.0);
                ra.total_cmp(&rb)
            })
            .unwrap();
        reals.push(z.re.max(0.0));
    }
    let mut roots: Vec<f64> = reals
        .into_iter()
        .map(|n| polish(k, delta, kappa, n_in, n))
        .collect();
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(b.abs()));
    roots
        .into_iter()
        .map(|n| {
            let stability = if cubic_slope(k, delta, kappa, n) < 0.0 {
                Stability::Unstable
            } else {
                Stability::Stable
            };
            PhotonRoot { n_c: n, stability }
        })
        .collect()
}

/// Discriminant of the normalised cubic in x = K_eff n/κ, divided by the sum
/// of magnitudes of its terms. Zero on the fold lines, positive inside the
/// bistable window.
pub fn cubic_discriminant(p: &SystemParams, delta: f64, n_in: f64) -> f64 {
    let k = effective_kerr(p);
    let (a, b, c, d) = (
        1.0,
        2.0 * delta / p.kappa,
        (delta / p.kappa).powi(2) + 0.25,
        -k * n_in / (p.kappa * p.kappa),
    );
    let terms = [
        18.0 * a * b * c * d,
        -4.0 * b * b * b * d,
        b * b * c * c,
        -4.0 * a * c * c * c,
        -27.0 * a * a * d * d,
    ];
    let scale: f64 = terms.iter().map(|t| t.abs()).sum();
    if scale == 0.0 {
        return 0.0;
    }
    terms.iter().sum::<f64>() / scale
}

fn classify(roots: &[PhotonRoot], idx: usize) -> Branch {
    match roots.len() {
        1 => Branch::Monostable,
        2 => {
            if idx == 0 {
                Branch::BistableLower
            } else {
                Branch::BistableUpper
            }
        }
        _ => match idx {
            0 => Branch::BistableLower,
            1 => Branch::BistableMiddle,
            _ => Branch::BistableUpper,
        },
    }
}

/// Solves the mean-field problem and fills in the linearisation parameters.
pub fn solve_steady(p: &SystemParams, op: &OperatingPoint) -> Result<SteadyState, SteadyStateError> {
    if !(op.n_in >= 0.0) || !op.n_in.is_finite() {
        return Err(SteadyStateError::BadDrive(op.n_in));
    }
    if !op.detuning.is_finite() {
        return Err(SteadyStateError::BadDetuning);
    }
    let roots = photon_branches(p, op.detuning, op.n_in);
    let stable = || roots.iter().enumerate().filter(|(_, r)| r.stability == Stability::Stable);
    let idx = match op.branch_policy {
        BranchPolicy::RequireMonostable => {
            if roots.len() > 1 {
                return Err(SteadyStateError::NotMonostable(roots.len()));
            }
            stable().next().map(|(i, _)| i)
        }
        BranchPolicy::LowerBranch => stable().next().map(|(i, _)| i),
        BranchPolicy::UpperBranch => stable().last().map(|(i, _)| i),
    }
    .ok_or(SteadyStateError::NoStableRoot)?;
    Ok(state_from_root(p, op.detuning, op.n_in, roots[idx].n_c, classify(&roots, idx)))
}

/// Builds the steady state for a given root, including unstable ones.
pub fn state_from_root(p: &SystemParams, delta: f64, n_in: f64, n_c: f64, branch: Branch) -> SteadyState {
    let k_eff = effective_kerr(p);
    let alpha = if n_in == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        p.kappa.sqrt() * n_in.sqrt() / Complex64::new(-0.5 * p.kappa, delta + k_eff * n_c)
    };
    let phi_c = if n_in == 0.0 { 0.0 } else { alpha.arg().rem_euclid(std::f64::consts::TAU) };
    let lambda_abs = p.kerr * n_c;
    SteadyState {
        detuning: delta,
        n_in,
        n_c,
        phi_c,
        k_eff,
        delta_tilde: delta + 2.0 * lambda_abs,
        lambda_abs,
        g_abs: p.g0 * n_c.sqrt(),
        q_static: -std::f64::consts::SQRT_2 * p.g0 * p.omega_m * n_c
            / (p.omega_m * p.omega_m + 0.25 * p.gamma_m * p.gamma_m),
        branch,
    }
}
