//! The JSON design manifest: a chip as data.
//!
//! A manifest carries the substrate, the feedline geometry and tap layout,
//! and one entry per resonator (segment geometries from the coupled end to
//! the termination, explicit lengths, coupling capacitance, flags). It is
//! the interchange format between the design, simulation, and analysis
//! commands; writing is deterministic so write → read → write is
//! byte-identical.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cpw::{cpw_params, CpwCrossSection, GeometryError, LineParams, SubstrateSpec};
use crate::network::{ResonatorSpec, Segment, Termination};

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("manifest validation failed: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub const SCHEMA_VERSION: u32 = 1;

/// Coupling capacitance assumed for entries that do not state one, fF.
pub const DEFAULT_COUPLING_CAP_FF: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignManifest {
    pub schema_version: u32,
    pub substrate: SubstrateSpec,
    pub feedline: FeedlineSpec,
    pub resonators: Vec<ResonatorEntry>,
}

/// Feedline geometry and tap layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedlineSpec {
    pub center_width_um: f64,
    pub gap_um: f64,
    /// Position of the first resonator tap from port 1, um.
    pub first_tap_um: f64,
    /// Spacing between consecutive taps, um.
    pub tap_spacing_um: f64,
}

impl Default for FeedlineSpec {
    fn default() -> Self {
        Self {
            center_width_um: 20.0,
            gap_um: 10.0,
            first_tap_um: 1000.0,
            tap_spacing_um: 1000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResonatorKind {
    Uir,
    Sir,
}

/// One resonator on the chip. Segments run from the coupled end to the
/// termination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonatorEntry {
    pub name: String,
    pub kind: ResonatorKind,
    pub termination: Termination,
    pub segments: Vec<SegmentEntry>,
    /// Series coupling capacitance, fF; `null` when not simulated for this
    /// device (a default applies at simulation time).
    pub coupling_cap_ff: Option<f64>,
    /// Internal quality factor to assume in simulation; `null` = lossless.
    pub internal_q: Option<f64>,
    /// Design frequency this entry was synthesized for, when known.
    pub target_f0_hz: Option<f64>,
    /// Design impedance ratio Z_open/Z_short, when stated explicitly.
    pub impedance_ratio: Option<f64>,
    /// Step discontinuities rounded in layout; metadata only, the step
    /// capacitance is taken as zero either way.
    #[serde(default)]
    pub rounded_step: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentEntry {
    pub center_width_um: f64,
    pub gap_um: f64,
    pub length_um: f64,
}

impl ResonatorEntry {
    pub fn effective_coupling_cap_ff(&self) -> f64 {
        self.coupling_cap_ff.unwrap_or(DEFAULT_COUPLING_CAP_FF)
    }

    /// Builds the simulation spec for this entry.
    pub fn resonator_spec(&self, substrate: &SubstrateSpec) -> Result<ResonatorSpec, ManifestError> {
        let mut segments = Vec::with_capacity(self.segments.len());
        for seg in &self.segments {
            let xs = CpwCrossSection::new(seg.center_width_um, seg.gap_um)?;
            segments.push(Segment {
                line: cpw_params(&xs, substrate)?,
                length_um: seg.length_um,
            });
        }
        Ok(ResonatorSpec {
            segments,
            termination: self.termination,
            coupling_cap_ff: self.effective_coupling_cap_ff(),
            internal_q: self.internal_q,
        })
    }
}

impl DesignManifest {
    pub fn new(substrate: SubstrateSpec, feedline: FeedlineSpec) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            substrate,
            feedline,
            resonators: Vec::new(),
        }
    }

    /// Line parameters of the feedline.
    pub fn feedline_params(&self) -> Result<LineParams, ManifestError> {
        let xs = CpwCrossSection::new(self.feedline.center_width_um, self.feedline.gap_um)?;
        Ok(cpw_params(&xs, &self.substrate)?)
    }

    /// Tap position of resonator `index`, um from port 1.
    pub fn tap_position_um(&self, index: usize) -> f64 {
        self.feedline.first_tap_um + index as f64 * self.feedline.tap_spacing_um
    }

    pub fn validate(&self) -> Result<(), ManifestError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ManifestError::Validation(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let mut names = std::collections::BTreeSet::new();
        for entry in &self.resonators {
            if !names.insert(entry.name.as_str()) {
                return Err(ManifestError::Validation(format!(
                    "duplicate resonator name {:?}",
                    entry.name
                )));
            }
            if entry.segments.is_empty() {
                return Err(ManifestError::Validation(format!(
                    "{}: needs at least one segment",
                    entry.name
                )));
            }
            for (i, seg) in entry.segments.iter().enumerate() {
                CpwCrossSection::new(seg.center_width_um, seg.gap_um).map_err(|e| {
                    ManifestError::Validation(format!("{} segment {i}: {e}", entry.name))
                })?;
                if !(seg.length_um > 0.0) {
                    return Err(ManifestError::Validation(format!(
                        "{} segment {i}: length must be positive",
                        entry.name
                    )));
                }
            }
            if let Some(cap) = entry.coupling_cap_ff {
                if !(cap > 0.0) {
                    return Err(ManifestError::Validation(format!(
                        "{}: coupling capacitance must be positive when given",
                        entry.name
                    )));
                }
            }
            if let Some(q) = entry.internal_q {
                if !(q > 0.0) {
                    return Err(ManifestError::Validation(format!(
                        "{}: internal Q must be positive when given",
                        entry.name
                    )));
                }
            }
            entry
                .resonator_spec(&self.substrate)
                .and_then(|spec| spec.validate().map_err(|e| ManifestError::Validation(e.to_string())))?;
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialization is infallible") + "\n"
    }

    pub fn from_json_str(text: &str, name: &str) -> Result<Self, ManifestError> {
        let manifest: Self = serde_json::from_str(text).map_err(|source| ManifestError::Json {
            path: name.into(),
            source,
        })?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), ManifestError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()).map_err(|source| ManifestError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, ManifestError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text, &path.display().to_string())
    }
}
