//! Kerr-enhanced dynamical-backaction cooling of a mechanical oscillator.
//!
//! The crate follows the usual pipeline: classical steady state of the
//! driven Kerr cavity, linearised fluctuation spectra, scattering rates and
//! phonon occupations, optionally with a squeezed-vacuum input. An
//! independent 4×4 Langevin solver in [`oracle`] cross-checks every closed
//! form numerically.

pub mod cavity;
pub mod mechanics;
pub mod optimize;
pub mod output;
pub mod oracle;
pub mod params;
pub mod quadrature;
pub mod reproduce;
pub mod squeezing;
pub mod steady_state;
pub mod sweep;

pub use params::{default_params, BranchPolicy, OperatingPoint, SystemParams};
