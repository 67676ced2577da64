//! Touchstone v1 reader and writer.
//!
//! The writer emits two-port files with the canonical option line
//! `# Hz S RI R 50`; S11 and S22 are written as zero and S12 = S21
//! (reciprocal), since a trace only carries transmission data. The reader
//! accepts `.s1p` and `.s2p` with RI, MA, or DB value formats and any of the
//! standard frequency units, returning the transmission column (the single
//! parameter for one-ports). A `! power_dbm=<value>` comment round-trips
//! the source-power tag.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::trace::{S21Trace, TraceError};

/// Writes `trace` as a two-port Touchstone v1 file (RI, Hz, R 50).
pub fn export_touchstone(trace: &S21Trace, path: impl AsRef<Path>) -> Result<(), TraceError> {
    let path = path.as_ref();
    std::fs::write(path, to_touchstone_string(trace)).map_err(|source| TraceError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Serializes `trace` in Touchstone v1 two-port form.
pub fn to_touchstone_string(trace: &S21Trace) -> String {
    let mut out = String::new();
    if let Some(p) = trace.incident_power_dbm {
        let _ = writeln!(out, "! power_dbm={p}");
    }
    for (k, v) in &trace.metadata {
        let _ = writeln!(out, "! {k}={v}");
    }
    out.push_str("# Hz S RI R 50\n");
    for (f, s) in trace.frequencies_hz().iter().zip(trace.s21()) {
        // S11 S21 S12 S22 in Touchstone two-port column order.
        let _ = writeln!(out, "{f} 0 0 {} {} {} {} 0 0", s.re, s.im, s.re, s.im);
    }
    out
}

/// Reads a Touchstone v1 `.s1p` or `.s2p` file into a trace.
pub fn read_touchstone(path: impl AsRef<Path>) -> Result<S21Trace, TraceError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| TraceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let ports = match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("s1p") => 1,
        _ => 2,
    };
    parse_touchstone(&text, ports, &path.display().to_string())
}

/// Reads a trace file, dispatching on the extension: `.csv` for the CSV
/// trace format, `.s1p`/`.s2p` for Touchstone.
pub fn read_trace_file(path: impl AsRef<Path>) -> Result<S21Trace, TraceError> {
    let path = path.as_ref();
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("csv") => S21Trace::read_csv(path),
        Some("s1p") | Some("s2p") => read_touchstone(path),
        _ => Err(TraceError::Malformed {
            path: path.display().to_string(),
            line: 0,
            message: "unknown trace extension (expected .csv, .s1p, or .s2p)".into(),
        }),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ValueFormat {
    RealImag,
    MagAngle,
    DbAngle,
}

impl ValueFormat {
    fn to_complex(self, a: f64, b: f64) -> Complex64 {
        match self {
            ValueFormat::RealImag => Complex64::new(a, b),
            ValueFormat::MagAngle => Complex64::from_polar(a, b.to_radians()),
            ValueFormat::DbAngle => Complex64::from_polar(10f64.powf(a / 20.0), b.to_radians()),
        }
    }
}

/// Parses Touchstone text with the given port count. `name` appears in
/// error messages; line numbers are 1-based.
pub fn parse_touchstone(text: &str, ports: usize, name: &str) -> Result<S21Trace, TraceError> {
    let malformed = |line: usize, message: String| TraceError::Malformed {
        path: name.into(),
        line,
        message,
    };
    let mut unit_scale = 1e9; // Touchstone default unit is GHz
    let mut format = ValueFormat::MagAngle; // default format is MA
    let mut saw_options = false;
    let mut power = None;
    let mut frequencies = Vec::new();
    let mut values = Vec::new();
    // 1 + 2 values per parameter, n^2 parameters.
    let columns = 1 + 2 * ports * ports;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('!') {
            if let Some((key, value)) = comment.trim().split_once('=') {
                if key.trim() == "power_dbm" {
                    power = value.trim().parse::<f64>().ok();
                }
            }
            continue;
        }
        if let Some(options) = line.strip_prefix('#') {
            if saw_options {
                // Touchstone v1 allows only one option line; later ones are
                // ignored by most readers, so we do the same.
                continue;
            }
            saw_options = true;
            let mut tokens = options.split_whitespace().peekable();
            while let Some(tok) = tokens.next() {
                match tok.to_ascii_uppercase().as_str() {
                    "HZ" => unit_scale = 1.0,
                    "KHZ" => unit_scale = 1e3,
                    "MHZ" => unit_scale = 1e6,
                    "GHZ" => unit_scale = 1e9,
                    "THZ" => unit_scale = 1e12,
                    "S" => {}
                    "Y" | "Z" | "G" | "H" => {
                        return Err(malformed(
                            line_no,
                            format!("unsupported parameter type {tok}; only S is handled"),
                        ))
                    }
                    "RI" => format = ValueFormat::RealImag,
                    "MA" => format = ValueFormat::MagAngle,
                    "DB" => format = ValueFormat::DbAngle,
                    "R" => {
                        // reference impedance value follows
                        tokens.next();
                    }
                    other => {
                        return Err(malformed(line_no, format!("unknown option token {other:?}")))
                    }
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != columns {
            return Err(malformed(
                line_no,
                format!(
                    "expected {columns} columns for a {ports}-port data line, got {}",
                    fields.len()
                ),
            ));
        }
        let parse = |s: &str, what: &str| -> Result<f64, TraceError> {
            s.parse::<f64>()
                .map_err(|_| malformed(line_no, format!("invalid {what} value {s:?}")))
        };
        let f = parse(fields[0], "frequency")? * unit_scale;
        // One-port: the single parameter. Two-port: S21 is the second
        // parameter pair (columns 3 and 4).
        let (ia, ib) = if ports == 1 { (1, 2) } else { (3, 4) };
        let a = parse(fields[ia], "parameter")?;
        let b = parse(fields[ib], "parameter")?;
        frequencies.push(f);
        values.push(format.to_complex(a, b));
    }

    let mut trace = S21Trace::new(frequencies, values)?;
    trace.incident_power_dbm = power;
    Ok(trace)
}
