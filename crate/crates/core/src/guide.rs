//! The book chapters, included as doc comments so every code sample in the
//! guide compiles and runs under `cargo test --doc`.
#![allow(unused)]

#[doc = include_str!("../../../book/src/cpw-lines.md")]
pub mod cpw_lines {}

#[doc = include_str!("../../../book/src/stepped-impedance.md")]
pub mod stepped_impedance {}

#[doc = include_str!("../../../book/src/network-simulation.md")]
pub mod network_simulation {}

#[doc = include_str!("../../../book/src/resonance-fitting.md")]
pub mod resonance_fitting {}

#[doc = include_str!("../../../book/src/photon-calibration.md")]
pub mod photon_calibration {}
