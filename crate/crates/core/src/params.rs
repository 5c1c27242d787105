//! System parameters, operating points and the flat key-value config format.
//!
//! Everything is stored in angular units (rad/s). Config files use cyclic
//! frequencies in Hz, matching how experimental parameters are usually quoted.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// ħ/k_B in K·s.
const HBAR_OVER_KB: f64 = 7.638_232_577_577_646e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("`{0}` must be finite")]
    NotFinite(&'static str),
    #[error("`{0}` must be positive")]
    NonPositive(&'static str),
    #[error("`{0}` must be non-negative")]
    Negative(&'static str),
    #[error("gamma_m must be smaller than the mechanical frequency")]
    LowQ,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config is not a flat key-value document: {0}")]
    Syntax(String),
    #[error("missing key `{0}`")]
    Missing(&'static str),
    #[error("key `{0}` given twice (cyclic and angular forms)")]
    Duplicate(String),
    #[error("value of `{0}` is not a number")]
    NotNumber(String),
    #[error("unknown key `{0}`")]
    Unknown(String),
    #[error(transparent)]
    Invalid(#[from] ParamError),
}

/// Physical constants of the cavity + oscillator system, angular units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega_m: f64,
    pub gamma_m: f64,
    pub kappa: f64,
    pub kerr: f64,
    pub g0: f64,
    pub n_th: f64,
}

impl SystemParams {
    pub fn new(
        omega_m: f64,
        gamma_m: f64,
        kappa: f64,
        kerr: f64,
        g0: f64,
        n_th: f64,
    ) -> Result<Self, ParamError> {
        let p = Self { omega_m, gamma_m, kappa, kerr, g0, n_th };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let fields = [
            ("omega_m", self.omega_m, true),
            ("gamma_m", self.gamma_m, true),
            ("kappa", self.kappa, true),
            ("kerr", self.kerr, false),
            ("g0", self.g0, false),
            ("n_th", self.n_th, false),
        ];
        for (key, v, strict) in fields {
            if !v.is_finite() {
                return Err(ParamError::NotFinite(key));
            }
            if strict && v <= 0.0 {
                return Err(ParamError::NonPositive(key));
            }
            if !strict && v < 0.0 {
                return Err(ParamError::Negative(key));
            }
        }
        if self.gamma_m >= self.omega_m {
            return Err(ParamError::LowQ);
        }
        Ok(())
    }

    /// Same system with the intrinsic Kerr term switched off. The
    /// optomechanical (mechanical) Kerr contribution is unaffected.
    pub fn linear(&self) -> Self {
        Self { kerr: 0.0, ..*self }
    }

    pub fn with_kerr(&self, kerr: f64) -> Self {
        Self { kerr, ..*self }
    }

    pub fn with_g0(&self, g0: f64) -> Self {
        Self { g0, ..*self }
    }

    /// Moves the mechanical frequency while keeping the bath temperature
    /// fixed, so `n_th` follows the Bose-Einstein law.
    pub fn with_omega_m_fixed_temperature(&self, omega_m: f64) -> Self {
        let n_th = if self.n_th == 0.0 {
            0.0
        } else {
            let x = (1.0 / self.n_th).ln_1p() * omega_m / self.omega_m;
            1.0 / x.exp_m1()
        };
        Self { omega_m, n_th, ..*self }
    }

    pub fn temperature(&self) -> f64 {
        if self.n_th == 0.0 {
            return 0.0;
        }
        HBAR_OVER_KB * self.omega_m / (1.0 / self.n_th).ln_1p()
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        default_params()
    }
}

/// Reference parameter set: a 300 kHz oscillator in a 3 MHz-wide Kerr cavity.
pub fn default_params() -> SystemParams {
    SystemParams {
        omega_m: TAU * 0.3e6,
        gamma_m: TAU * 0.5,
        kappa: TAU * 3e6,
        kerr: TAU * 0.16e6,
        g0: TAU * 1.7e3,
        n_th: 2778.0,
    }
}

/// Bose-Einstein occupation of a mode at `omega` (rad/s) and temperature `t` (K).
pub fn bose_occupation(omega: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    1.0 / (HBAR_OVER_KB * omega / t).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchPolicy {
    #[default]
    LowerBranch,
    UpperBranch,
    RequireMonostable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// Drive detuning Δ = ω_p − ω_c (rad/s).
    pub detuning: f64,
    /// Input photon flux.
    pub n_in: f64,
    pub branch_policy: BranchPolicy,
}

impl OperatingPoint {
    pub fn new(detuning: f64, n_in: f64) -> Self {
        Self { detuning, n_in, branch_policy: BranchPolicy::LowerBranch }
    }

    pub fn with_policy(mut self, policy: BranchPolicy) -> Self {
        self.branch_policy = policy;
        self
    }
}

// config key, whether the value is a frequency
const KEYS: [(&str, bool); 5] = [
    ("f_m", true),
    ("gamma_m", true),
    ("kappa", true),
    ("kerr", true),
    ("g0", true),
];

/// Parses a flat `key = value` document into a flat table of numbers.
pub fn parse_flat(document: &str) -> Result<BTreeMap<String, toml::Value>, ConfigError> {
    let table: toml::Table =
        document.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
    let mut out = BTreeMap::new();
    for (k, v) in table {
        if v.is_table() {
            return Err(ConfigError::Syntax(format!("nested table `{k}`")));
        }
        out.insert(k, v);
    }
    Ok(out)
}

pub(crate) fn as_number(key: &str, v: &toml::Value) -> Result<f64, ConfigError> {
    match v {
        toml::Value::Float(x) => Ok(*x),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(ConfigError::NotNumber(key.to_string())),
    }
}

/// Reads `SystemParams` from a config document.
///
/// Frequencies are cyclic (Hz) under the keys `f_m`, `gamma_m`, `kappa`,
/// `kerr`, `g0`; each may instead be given in rad/s with a `_rad_s` suffix.
/// The bath is either `n_th` or `temperature_K`.
pub fn params_from_config(document: &str) -> Result<SystemParams, ConfigError> {
    let table = parse_flat(document)?;
    params_from_table(&table, false)
}

pub(crate) fn params_from_table(
    table: &BTreeMap<String, toml::Value>,
    allow_extra: bool,
) -> Result<SystemParams, ConfigError> {
    let mut vals = [0.0; 5];
    for (slot, (key, _)) in KEYS.iter().enumerate() {
        let angular_key = format!("{}_rad_s", angular_name(key));
        let v = match (table.get(*key), table.get(&angular_key)) {
            (Some(_), Some(_)) => return Err(ConfigError::Duplicate(key.to_string())),
            (Some(v), None) => as_number(key, v)? * TAU,
            (None, Some(v)) => as_number(&angular_key, v)?,
            (None, None) => return Err(ConfigError::Missing(key)),
        };
        vals[slot] = v;
    }
    let n_th = match (table.get("n_th"), table.get("temperature_K")) {
        (Some(_), Some(_)) => return Err(ConfigError::Duplicate("n_th".into())),
        (Some(v), None) => as_number("n_th", v)?,
        (None, Some(v)) => {
            let t = as_number("temperature_K", v)?;
            if !(t >= 0.0) || !t.is_finite() {
                return Err(ParamError::Negative("temperature_K").into());
            }
            bose_occupation(vals[0], t)
        }
        (None, None) => return Err(ConfigError::Missing("n_th")),
    };
    if !allow_extra {
        for k in table.keys() {
            let known = KEYS.iter().any(|(c, _)| {
                k == c || *k == format!("{}_rad_s", angular_name(c))
            }) || k == "n_th"
                || k == "temperature_K";
            if !known {
                return Err(ConfigError::Unknown(k.clone()));
            }
        }
    }
    let [omega_m, gamma_m, kappa, kerr, g0] = vals;
    // report the config key, not the field name
    SystemParams::new(omega_m, gamma_m, kappa, kerr, g0, n_th).map_err(|e| match e {
        ParamError::NonPositive("omega_m") => ParamError::NonPositive("f_m").into(),
        ParamError::NotFinite("omega_m") => ParamError::NotFinite("f_m").into(),
        other => other.into(),
    })
}

fn angular_name(key: &str) -> &str {
    if key == "f_m" {
        "omega_m"
    } else {
        key
    }
}

/// Writes `p` as a config document that parses back to the identical value.
///
/// Each frequency is written in Hz when some decimal Hz value maps back onto
/// the stored angular value bit for bit, and in rad/s otherwise.
pub fn to_config(p: &SystemParams) -> String {
    let mut s = String::new();
    let vals = [p.omega_m, p.gamma_m, p.kappa, p.kerr, p.g0];
    for ((key, _), w) in KEYS.iter().zip(vals) {
        match exact_cyclic(w) {
            Some(f) => writeln!(s, "{key} = {}", fmt_float(f)).unwrap(),
            None => writeln!(s, "{}_rad_s = {}", angular_name(key), fmt_float(w)).unwrap(),
        }
    }
    writeln!(s, "n_th = {}", fmt_float(p.n_th)).unwrap();
    s
}

fn exact_cyclic(w: f64) -> Option<f64> {
    let f = w / TAU;
    if f * TAU == w {
        return Some(f);
    }
    let mut lo = f;
    let mut hi = f;
    for _ in 0..4 {
        lo = lo.next_down();
        hi = hi.next_up();
        if lo * TAU == w {
            return Some(lo);
        }
        if hi * TAU == w {
            return Some(hi);
        }
    }
    None
}

fn fmt_float(x: f64) -> String {
    // toml floats need a decimal point or exponent
    let s = format!("{x:?}");
    if s.contains(['.', 'e', 'E']) || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}
