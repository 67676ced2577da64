//! Coplanar-waveguide cross sections and their transmission-line parameters.
//!
//! The conformal-mapping result for a CPW on a half-space dielectric with
//! zero-thickness metal gives
//!
//! ```text
//! eps_eff = (1 + eps_r) / 2
//! Z0      = 30 pi / sqrt(eps_eff) * K(k') / K(k),   k = w / (w + 2g)
//! ```
//!
//! with K the complete elliptic integral of the first kind, `w` the center
//! conductor width and `g` the gap to the ground planes. Film thickness and
//! substrate anisotropy corrections are not modeled; they typically shift Z0
//! by a couple of percent for thin films.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{SPEED_OF_LIGHT, UM};
use crate::math::ellipk_ratio;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("invalid geometry: {field} must be positive (got {value})")]
    InvalidGeometry { field: &'static str, value: f64 },
    #[error("invalid substrate: relative permittivity must be >= 1 (got {0})")]
    InvalidSubstrate(f64),
    #[error("no solution: target impedance {target_ohm} ohm outside attainable range [{min_ohm:.2}, {max_ohm:.2}] ohm")]
    NoSolution {
        target_ohm: f64,
        min_ohm: f64,
        max_ohm: f64,
    },
}

/// Planar geometry of one CPW segment. Lengths in micrometres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpwCrossSection {
    /// Center conductor width, um.
    pub center_width_um: f64,
    /// Gap between center conductor and ground plane, um.
    pub gap_um: f64,
    /// Metal film thickness, um. Stored for bookkeeping; not used by the
    /// zero-thickness model.
    #[serde(default)]
    pub film_thickness_um: f64,
}

impl CpwCrossSection {
    pub fn new(center_width_um: f64, gap_um: f64) -> Result<Self, GeometryError> {
        let xs = Self {
            center_width_um,
            gap_um,
            film_thickness_um: 0.0,
        };
        xs.validate()?;
        Ok(xs)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.center_width_um > 0.0) {
            return Err(GeometryError::InvalidGeometry {
                field: "center_width_um",
                value: self.center_width_um,
            });
        }
        if !(self.gap_um > 0.0) {
            return Err(GeometryError::InvalidGeometry {
                field: "gap_um",
                value: self.gap_um,
            });
        }
        Ok(())
    }

    /// Conformal-mapping modulus k = w / (w + 2g), strictly inside (0, 1)
    /// for any valid cross section.
    pub fn modulus(&self) -> f64 {
        self.center_width_um / (self.center_width_um + 2.0 * self.gap_um)
    }
}

/// Substrate dielectric description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubstrateSpec {
    pub relative_permittivity: f64,
    #[serde(default)]
    pub model: SubstrateModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SubstrateModel {
    /// Semi-infinite dielectric below zero-thickness metal.
    #[default]
    #[serde(rename = "zero-thickness-half-space")]
    ZeroThicknessHalfSpace,
}

impl SubstrateSpec {
    pub fn new(relative_permittivity: f64) -> Result<Self, GeometryError> {
        if !(relative_permittivity >= 1.0) {
            return Err(GeometryError::InvalidSubstrate(relative_permittivity));
        }
        Ok(Self {
            relative_permittivity,
            model: SubstrateModel::ZeroThicknessHalfSpace,
        })
    }

    /// Isotropic approximation of C-plane sapphire. Reproduces measured CPW
    /// impedances on sapphire to a few percent.
    pub fn sapphire() -> Self {
        Self {
            relative_permittivity: 10.0,
            model: SubstrateModel::ZeroThicknessHalfSpace,
        }
    }
}

/// Per-unit-length parameters of a uniform line segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineParams {
    /// Effective relative permittivity.
    pub eps_eff: f64,
    /// Characteristic impedance, ohm.
    pub z0_ohm: f64,
    /// Phase velocity, m/s (c / sqrt(eps_eff)).
    pub phase_velocity_m_per_s: f64,
    /// Attenuation, nepers per metre.
    #[serde(default)]
    pub attenuation_np_per_m: f64,
}

impl LineParams {
    /// Builds line parameters directly from eps_eff and Z0, lossless.
    pub fn from_eps_eff(eps_eff: f64, z0_ohm: f64) -> Self {
        Self {
            eps_eff,
            z0_ohm,
            phase_velocity_m_per_s: SPEED_OF_LIGHT / eps_eff.sqrt(),
            attenuation_np_per_m: 0.0,
        }
    }

    /// Propagation phase constant beta = 2 pi f / v_ph, rad/m.
    pub fn beta(&self, f_hz: f64) -> f64 {
        2.0 * std::f64::consts::PI * f_hz / self.phase_velocity_m_per_s
    }

    /// Electrical angle accumulated along `length_um` at `f_hz`, rad.
    pub fn electrical_angle(&self, length_um: f64, f_hz: f64) -> f64 {
        self.beta(f_hz) * length_um * UM
    }
}

/// Maps a cross section and substrate to line parameters.
pub fn cpw_params(xs: &CpwCrossSection, sub: &SubstrateSpec) -> Result<LineParams, GeometryError> {
    xs.validate()?;
    if !(sub.relative_permittivity >= 1.0) {
        return Err(GeometryError::InvalidSubstrate(sub.relative_permittivity));
    }
    let eps_eff = 0.5 * (1.0 + sub.relative_permittivity);
    let k = xs.modulus();
    let z0_ohm = 30.0 * std::f64::consts::PI / eps_eff.sqrt() * ellipk_ratio(k);
    Ok(LineParams::from_eps_eff(eps_eff, z0_ohm))
}

// Bisection limits on the modulus. Outside these the elliptic ratio is
// numerically meaningless anyway.
const K_MIN: f64 = 1e-9;
const K_MAX: f64 = 1.0 - 1e-12;

/// Inverse design: center width that hits `target_z0_ohm` at a fixed gap,
/// found by bisection on the modulus (Z0 is strictly decreasing in k).
///
/// The returned width satisfies |Z0(w) - target| < 1e-6 ohm.
pub fn solve_center_width(
    target_z0_ohm: f64,
    gap_um: f64,
    sub: &SubstrateSpec,
) -> Result<f64, GeometryError> {
    if !(gap_um > 0.0) {
        return Err(GeometryError::InvalidGeometry {
            field: "gap_um",
            value: gap_um,
        });
    }
    let z0_of_k = |k: f64| -> f64 {
        let w = 2.0 * gap_um * k / (1.0 - k);
        let xs = CpwCrossSection {
            center_width_um: w,
            gap_um,
            film_thickness_um: 0.0,
        };
        cpw_params(&xs, sub).expect("modulus kept in range").z0_ohm
    };
    let z_hi = z0_of_k(K_MIN);
    let z_lo = z0_of_k(K_MAX);
    if !(target_z0_ohm > z_lo && target_z0_ohm < z_hi) {
        return Err(GeometryError::NoSolution {
            target_ohm: target_z0_ohm,
            min_ohm: z_lo,
            max_ohm: z_hi,
        });
    }
    let (mut lo, mut hi) = (K_MIN, K_MAX);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let z_mid = z0_of_k(mid);
        if (z_mid - target_z0_ohm).abs() < 1e-7 {
            return Ok(2.0 * gap_um * mid / (1.0 - mid));
        }
        if z_mid > target_z0_ohm {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let k = 0.5 * (lo + hi);
    Ok(2.0 * gap_um * k / (1.0 - k))
}
