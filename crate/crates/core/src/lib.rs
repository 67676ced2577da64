//! sirkit — design, simulation, and measurement analysis for superconducting
//! coplanar-waveguide resonators.
//!
//! The crate covers the full desk workflow for notch-style (hanger) CPW
//! resonators, both uniform-impedance (UIR) and stepped-impedance (SIR):
//!
//! * [`cpw`] — cross-section geometry to transmission-line parameters
//!   (effective permittivity, characteristic impedance, phase velocity).
//! * [`sir`] — the stepped-impedance resonance condition, minimal-length
//!   design, spurious-mode placement, and physical length synthesis with
//!   capacitive end corrections.
//! * [`network`] — ABCD-matrix synthesis of feedline transmission spectra
//!   with any number of capacitively coupled resonators.
//! * [`fit`] — quality-factor extraction from complex S21 traces (delay
//!   removal, algebraic circle fit, phase fit, diameter correction, full
//!   nonlinear refinement) and photon-number power calibration.
//! * [`loss`] — a phenomenological power-dependent internal-loss generator
//!   for end-to-end pipeline tests.
//! * [`manifest`] — the JSON design-manifest schema shared with the CLI.
//!
//! Traces move between modules as [`trace::S21Trace`] values and on disk as
//! Touchstone v1 or CSV files ([`touchstone`], [`trace`]).

pub mod constants;
pub mod cpw;
pub mod fit;
pub mod loss;
pub mod manifest;
pub mod math;
pub mod network;
pub mod notch;
pub mod sir;
pub mod touchstone;
pub mod trace;

mod guide;

pub use cpw::{cpw_params, solve_center_width, CpwCrossSection, LineParams, SubstrateSpec};
pub use fit::{fit_notch, photon_number, power_sweep, single_photon_power_dbm, FitResult};
pub use network::{abcd_line, fundamental_frequency, s21_sweep, ResonatorSpec, TwoPortAbcd};
pub use sir::{minimal_total_theta, synthesize_design, DesignTarget, SirDesign};
pub use trace::S21Trace;
