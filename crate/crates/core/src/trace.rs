//! Complex transmission traces and their CSV form.
//!
//! The CSV format is one optional `# power_dbm=<value>` comment (plus any
//! further `# key=value` metadata comments), a single header line
//! `frequency_hz,s21_re,s21_im`, then one row per grid point. UTF-8, `.`
//! decimal separator. Floats are written with Rust's shortest
//! round-trip formatting, so write -> read -> write is byte-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace is empty")]
    Empty,
    #[error("frequency grid must be strictly increasing at index {0}")]
    GridNotIncreasing(usize),
    #[error("frequency and s21 lengths differ ({frequencies} vs {values})")]
    LengthMismatch { frequencies: usize, values: usize },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A frequency grid with complex transmission samples and acquisition
/// metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct S21Trace {
    frequencies_hz: Vec<f64>,
    s21: Vec<Complex64>,
    /// Source power at the instrument, dBm, when known.
    pub incident_power_dbm: Option<f64>,
    /// Free-form tags carried through file round trips.
    pub metadata: BTreeMap<String, String>,
}

impl S21Trace {
    pub fn new(frequencies_hz: Vec<f64>, s21: Vec<Complex64>) -> Result<Self, TraceError> {
        if frequencies_hz.is_empty() {
            return Err(TraceError::Empty);
        }
        if frequencies_hz.len() != s21.len() {
            return Err(TraceError::LengthMismatch {
                frequencies: frequencies_hz.len(),
                values: s21.len(),
            });
        }
        for i in 1..frequencies_hz.len() {
            if !(frequencies_hz[i] > frequencies_hz[i - 1]) {
                return Err(TraceError::GridNotIncreasing(i));
            }
        }
        Ok(Self {
            frequencies_hz,
            s21,
            incident_power_dbm: None,
            metadata: BTreeMap::new(),
        })
    }

    pub fn with_power_dbm(mut self, dbm: f64) -> Self {
        self.incident_power_dbm = Some(dbm);
        self
    }

    pub fn frequencies_hz(&self) -> &[f64] {
        &self.frequencies_hz
    }

    pub fn s21(&self) -> &[Complex64] {
        &self.s21
    }

    pub fn len(&self) -> usize {
        self.frequencies_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies_hz.is_empty()
    }

    /// Frequency span, Hz.
    pub fn span_hz(&self) -> f64 {
        self.frequencies_hz[self.len() - 1] - self.frequencies_hz[0]
    }

    /// Index of the minimum of |S21|.
    pub fn dip_index(&self) -> usize {
        let mut best = 0;
        let mut best_mag = f64::INFINITY;
        for (i, s) in self.s21.iter().enumerate() {
            let m = s.norm();
            if m < best_mag {
                best_mag = m;
                best = i;
            }
        }
        best
    }

    /// Sub-trace restricted to `[lo_hz, hi_hz]` (inclusive).
    pub fn window(&self, lo_hz: f64, hi_hz: f64) -> Result<Self, TraceError> {
        let pairs: Vec<(f64, Complex64)> = self
            .frequencies_hz
            .iter()
            .zip(&self.s21)
            .filter(|(f, _)| **f >= lo_hz && **f <= hi_hz)
            .map(|(f, s)| (*f, *s))
            .collect();
        let mut t = Self::new(
            pairs.iter().map(|p| p.0).collect(),
            pairs.iter().map(|p| p.1).collect(),
        )?;
        t.incident_power_dbm = self.incident_power_dbm;
        t.metadata = self.metadata.clone();
        Ok(t)
    }

    /// Serializes the trace to the CSV format.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some(p) = self.incident_power_dbm {
            let _ = writeln!(out, "# power_dbm={p}");
        }
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str("frequency_hz,s21_re,s21_im\n");
        for (f, s) in self.frequencies_hz.iter().zip(&self.s21) {
            let _ = writeln!(out, "{f},{},{}", s.re, s.im);
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), TraceError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|source| TraceError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Parses the CSV format. `name` is used in error messages.
    pub fn from_csv_str(text: &str, name: &str) -> Result<Self, TraceError> {
        let mut frequencies = Vec::new();
        let mut values = Vec::new();
        let mut power = None;
        let mut metadata = BTreeMap::new();
        let mut saw_header = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some((key, value)) = comment.split_once('=') {
                    let (key, value) = (key.trim(), value.trim());
                    if key == "power_dbm" {
                        power = Some(value.parse::<f64>().map_err(|_| TraceError::Malformed {
                            path: name.into(),
                            line: line_no,
                            message: format!("invalid power_dbm value {value:?}"),
                        })?);
                    } else {
                        metadata.insert(key.to_string(), value.to_string());
                    }
                }
                continue;
            }
            if !saw_header {
                if line != "frequency_hz,s21_re,s21_im" {
                    return Err(TraceError::Malformed {
                        path: name.into(),
                        line: line_no,
                        message: format!("expected header 'frequency_hz,s21_re,s21_im', got {line:?}"),
                    });
                }
                saw_header = true;
                continue;
            }
            let mut fields = line.split(',');
            let mut next_f64 = |what: &str| -> Result<f64, TraceError> {
                fields
                    .next()
                    .ok_or_else(|| TraceError::Malformed {
                        path: name.into(),
                        line: line_no,
                        message: format!("missing {what} column"),
                    })?
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| TraceError::Malformed {
                        path: name.into(),
                        line: line_no,
                        message: format!("invalid {what}"),
                    })
            };
            frequencies.push(next_f64("frequency_hz")?);
            values.push(Complex64::new(next_f64("s21_re")?, next_f64("s21_im")?));
        }
        let mut trace = Self::new(frequencies, values)?;
        trace.incident_power_dbm = power;
        trace.metadata = metadata;
        Ok(trace)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self, TraceError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| TraceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_csv_str(&text, &path.display().to_string())
    }
}
