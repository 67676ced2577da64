//! ABCD-matrix synthesis of feedline transmission spectra.
//!
//! Each resonator hangs off the feedline as a shunt branch: a series
//! coupling capacitor followed by its terminated segment chain. The chain
//! is evaluated by cascading lossy-line two-ports, the branch admittance is
//! folded into the feedline cascade at its tap position, and the full chain
//! converts to S-parameters against 50 ohm ports.
//!
//! Internal loss is parameterized per resonator by `internal_q`; it maps
//! onto a uniform attenuation `alpha = beta / (2 Q_i)` on every segment,
//! which makes the mode's internal quality factor equal to `Q_i` regardless
//! of the impedance steps.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{FEMTO, UM};
use crate::cpw::LineParams;
use crate::math::linspace;
use crate::trace::{S21Trace, TraceError};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("invalid resonator: {0}")]
    InvalidSpec(String),
    #[error("no resonance found in [{lo_hz:.3e}, {hi_hz:.3e}] Hz")]
    NoResonance { lo_hz: f64, hi_hz: f64 },
    #[error("resonance narrower than numerical resolution: {0}")]
    Resolution(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Reference impedance of the measurement ports, ohm.
pub const PORT_IMPEDANCE: f64 = 50.0;

/// Two-port chain (ABCD) matrix. `b` carries ohms, `c` carries siemens.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPortAbcd {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl TwoPortAbcd {
    pub fn identity() -> Self {
        Self {
            a: Complex64::ONE,
            b: Complex64::ZERO,
            c: Complex64::ZERO,
            d: Complex64::ONE,
        }
    }

    pub fn series_impedance(z: Complex64) -> Self {
        Self {
            a: Complex64::ONE,
            b: z,
            c: Complex64::ZERO,
            d: Complex64::ONE,
        }
    }

    pub fn shunt_admittance(y: Complex64) -> Self {
        Self {
            a: Complex64::ONE,
            b: Complex64::ZERO,
            c: y,
            d: Complex64::ONE,
        }
    }

    /// `self` followed by `rhs` (matrix product).
    pub fn cascade(&self, rhs: &Self) -> Self {
        Self {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    /// `ad - bc`; equals 1 for reciprocal networks.
    pub fn determinant(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    /// Converts to S-parameters against a real reference impedance.
    /// Returns (S11, S21); S12 = S21 and S22 mirrors S11 for the reciprocal
    /// symmetric cascades built here.
    pub fn to_s(&self, z_ref: f64) -> (Complex64, Complex64) {
        let denom = self.a + self.b / z_ref + self.c * z_ref + self.d;
        let s11 = (self.a + self.b / z_ref - self.c * z_ref - self.d) / denom;
        let s21 = 2.0 / denom;
        (s11, s21)
    }
}

/// Lossy-line chain matrix: entries cosh(gl), Z0 sinh(gl), sinh(gl)/Z0,
/// cosh(gl) with g = alpha + i beta.
pub fn abcd_line(line: &LineParams, length_um: f64, f_hz: f64) -> TwoPortAbcd {
    abcd_line_alpha(line, length_um, f_hz, line.attenuation_np_per_m)
}

fn abcd_line_alpha(line: &LineParams, length_um: f64, f_hz: f64, alpha: f64) -> TwoPortAbcd {
    let l = length_um * UM;
    let gamma_l = Complex64::new(alpha * l, line.beta(f_hz) * l);
    let z0 = Complex64::new(line.z0_ohm, 0.0);
    let cosh = gamma_l.cosh();
    let sinh = gamma_l.sinh();
    TwoPortAbcd {
        a: cosh,
        b: z0 * sinh,
        c: sinh / z0,
        d: cosh,
    }
}

/// Far-end termination of a resonator chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Termination {
    Short,
    Open,
}

/// One uniform section of a resonator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub line: LineParams,
    pub length_um: f64,
}

/// A resonator as an ordered chain of line segments. Segments run from the
/// coupled (feedline) end to the termination.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonatorSpec {
    pub segments: Vec<Segment>,
    pub termination: Termination,
    /// Series coupling capacitance to the feedline, fF. Zero means the bare
    /// resonator (no coupler) — allowed for resonance scans, rejected for
    /// notch simulation.
    pub coupling_cap_ff: f64,
    /// Internal quality factor; `None` means lossless apart from any
    /// per-segment attenuation.
    pub internal_q: Option<f64>,
}

impl ResonatorSpec {
    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.segments.is_empty() {
            return Err(NetworkError::InvalidSpec("needs at least one segment".into()));
        }
        for (i, seg) in self.segments.iter().enumerate() {
            if !(seg.length_um > 0.0) {
                return Err(NetworkError::InvalidSpec(format!(
                    "segment {i} length must be positive (got {})",
                    seg.length_um
                )));
            }
        }
        if !(self.coupling_cap_ff >= 0.0) {
            return Err(NetworkError::InvalidSpec(format!(
                "coupling capacitance must be non-negative (got {})",
                self.coupling_cap_ff
            )));
        }
        if let Some(q) = self.internal_q {
            if !(q > 0.0) {
                return Err(NetworkError::InvalidSpec(format!(
                    "internal Q must be positive (got {q})"
                )));
            }
        }
        Ok(())
    }

    /// One-way propagation delay through the chain, s.
    pub fn one_way_delay_s(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.length_um * UM / s.line.phase_velocity_m_per_s)
            .sum()
    }

    /// Total physical length, um.
    pub fn total_length_um(&self) -> f64 {
        self.segments.iter().map(|s| s.length_um).sum()
    }

    /// Lossless copy (drops `internal_q` and per-segment attenuation).
    pub fn lossless(&self) -> Self {
        let mut r = self.clone();
        r.internal_q = None;
        for seg in &mut r.segments {
            seg.line.attenuation_np_per_m = 0.0;
        }
        r
    }

    fn chain_abcd(&self, f_hz: f64) -> TwoPortAbcd {
        let mut m = TwoPortAbcd::identity();
        for seg in &self.segments {
            let mut alpha = seg.line.attenuation_np_per_m;
            if let Some(q) = self.internal_q {
                alpha += seg.line.beta(f_hz) / (2.0 * q);
            }
            m = m.cascade(&abcd_line_alpha(&seg.line, seg.length_um, f_hz, alpha));
        }
        m
    }

    /// Admittance of the terminated chain seen from the coupled end,
    /// evaluated in admittance form so open terminations stay finite.
    pub fn chain_admittance(&self, f_hz: f64) -> Complex64 {
        let m = self.chain_abcd(f_hz);
        match self.termination {
            Termination::Short => m.d / m.b,
            Termination::Open => m.c / m.a,
        }
    }

    /// Branch admittance including the series coupling capacitor.
    pub fn branch_admittance(&self, f_hz: f64) -> Complex64 {
        let y_chain = self.chain_admittance(f_hz);
        if self.coupling_cap_ff > 0.0 {
            let z_cap = 1.0
                / Complex64::new(
                    0.0,
                    2.0 * std::f64::consts::PI * f_hz * self.coupling_cap_ff * FEMTO,
                );
            y_chain / (Complex64::ONE + z_cap * y_chain)
        } else {
            y_chain
        }
    }
}

/// Impedance of the terminated chain (before any coupling capacitor).
/// Tangent poles come back as large finite magnitudes.
pub fn chain_input_impedance(res: &ResonatorSpec, f_hz: f64) -> Complex64 {
    1.0 / res.chain_admittance(f_hz)
}

/// Impedance looking into the coupling capacitor toward the terminated
/// chain (the full shunt branch). Falls back to the bare chain when the
/// resonator has no coupler.
pub fn input_impedance(res: &ResonatorSpec, f_hz: f64) -> Complex64 {
    1.0 / res.branch_admittance(f_hz)
}

/// Lowest resonance of the resonator, by a bracketed scan of the branch
/// admittance refined by bisection to 1 Hz.
///
/// With a coupling capacitor the reported frequency is the loaded (notch)
/// resonance — the series resonance of the branch, where Im(Y) crosses zero
/// downward. A bare resonator reports its unloaded resonance, the
/// admittance zero, where Im(Y) crosses upward.
pub fn fundamental_frequency(res: &ResonatorSpec) -> Result<f64, NetworkError> {
    res.validate()?;
    let quarter_estimate = 1.0 / (4.0 * res.one_way_delay_s());
    let f_est = match res.termination {
        Termination::Short => quarter_estimate,
        Termination::Open => 2.0 * quarter_estimate,
    };
    let lo = 0.05 * f_est;
    let hi = 2.5 * f_est;
    resonances_in(res, lo, hi, 1)?
        .first()
        .copied()
        .ok_or(NetworkError::NoResonance { lo_hz: lo, hi_hz: hi })
}

/// The first `count` resonances in `[lo_hz, hi_hz]`, using the same
/// crossing rule as [`fundamental_frequency`].
pub fn resonances_in(
    res: &ResonatorSpec,
    lo_hz: f64,
    hi_hz: f64,
    count: usize,
) -> Result<Vec<f64>, NetworkError> {
    res.validate()?;
    let coupled = res.coupling_cap_ff > 0.0;
    let im_y = |f: f64| res.branch_admittance(f).im;
    // Series-type crossings (loaded resonance) go downward; unloaded
    // admittance zeros go upward. Tangent poles jump the other way in each
    // case, so the direction filter rejects them.
    let filter = move |prev: f64, next: f64| {
        if coupled {
            prev > 0.0 && next < 0.0
        } else {
            prev < 0.0 && next > 0.0
        }
    };
    let n_steps = 8000 * count.max(1);
    let mut roots = crate::math::scan_sign_changes(im_y, lo_hz, hi_hz, n_steps, 1.0, filter);
    roots.truncate(count);
    Ok(roots)
}

/// A resonator and its tap position along the feedline, um from port 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TappedResonator {
    pub spec: ResonatorSpec,
    pub tap_position_um: f64,
}

/// Feedline length added after the last tap, um.
pub const LEAD_OUT_UM: f64 = 1000.0;

/// Full chip two-port at a single frequency: feedline sections with shunt
/// resonator branches at their taps.
pub fn chip_abcd(feedline: &LineParams, taps: &[TappedResonator], f_hz: f64) -> TwoPortAbcd {
    let mut order: Vec<usize> = (0..taps.len()).collect();
    order.sort_by(|&i, &j| {
        taps[i]
            .tap_position_um
            .partial_cmp(&taps[j].tap_position_um)
            .expect("tap positions must be comparable")
    });
    let mut m = TwoPortAbcd::identity();
    let mut pos = 0.0;
    for idx in order {
        let tap = &taps[idx];
        m = m.cascade(&abcd_line(feedline, tap.tap_position_um - pos, f_hz));
        m = m.cascade(&TwoPortAbcd::shunt_admittance(
            tap.spec.branch_admittance(f_hz),
        ));
        pos = tap.tap_position_um;
    }
    m.cascade(&abcd_line(feedline, LEAD_OUT_UM, f_hz))
}

/// (S11, S21) of the loaded feedline over a frequency grid.
pub fn sweep_sparams(
    feedline: &LineParams,
    taps: &[TappedResonator],
    grid: &[f64],
) -> Result<Vec<(Complex64, Complex64)>, NetworkError> {
    for (i, tap) in taps.iter().enumerate() {
        tap.spec.validate()?;
        if !(tap.spec.coupling_cap_ff > 0.0) {
            return Err(NetworkError::InvalidSpec(format!(
                "resonator {i}: notch coupling requires a positive coupling capacitance"
            )));
        }
        if !(tap.tap_position_um >= 0.0) {
            return Err(NetworkError::InvalidSpec(format!(
                "resonator {i}: tap position must be non-negative"
            )));
        }
    }
    Ok(grid
        .iter()
        .map(|&f| chip_abcd(feedline, taps, f).to_s(PORT_IMPEDANCE))
        .collect())
}

/// Complex S21 of the loaded feedline over a frequency grid.
pub fn s21_sweep(
    feedline: &LineParams,
    taps: &[TappedResonator],
    grid: &[f64],
) -> Result<S21Trace, NetworkError> {
    let s = sweep_sparams(feedline, taps, grid)?;
    Ok(S21Trace::new(grid.to_vec(), s.into_iter().map(|p| p.1).collect())?)
}

/// A matched 50 ohm feedline with the sapphire-CPW effective permittivity;
/// the default carrier for single-resonator studies.
pub fn matched_feedline() -> LineParams {
    LineParams::from_eps_eff(5.5, PORT_IMPEDANCE)
}

/// Loaded resonance and half-power linewidth of a single notch, measured
/// from progressively refined transmission sweeps.
pub fn half_power_linewidth(
    feedline: &LineParams,
    res: &ResonatorSpec,
    tap_position_um: f64,
) -> Result<(f64, f64), NetworkError> {
    let f_r = fundamental_frequency(res)?;
    let taps = [TappedResonator {
        spec: res.clone(),
        tap_position_um,
    }];
    let mut span = f_r * 2e-2;
    for _ in 0..60 {
        if span < f_r * 1e-11 {
            return Err(NetworkError::Resolution(format!(
                "dip at {f_r:.3e} Hz unresolved at relative span 1e-11"
            )));
        }
        let grid = linspace(f_r - span / 2.0, f_r + span / 2.0, 4001);
        let trace = s21_sweep(feedline, &taps, &grid)?;
        let mags: Vec<f64> = trace.s21().iter().map(|s| s.norm()).collect();
        let baseline = mags[0].max(mags[mags.len() - 1]);
        let i_min = trace.dip_index();
        let min_mag = mags[i_min];
        if baseline - min_mag < 0.05 * baseline {
            // Grid too coarse to see the dip; tighten around the resonance.
            span *= 0.05;
            continue;
        }
        let threshold = (0.5 * (baseline * baseline + min_mag * min_mag)).sqrt();
        let cross = |i1: usize, i2: usize| -> f64 {
            let (m1, m2) = (mags[i1], mags[i2]);
            let t = (threshold - m1) / (m2 - m1);
            grid[i1] + t * (grid[i2] - grid[i1])
        };
        let mut left = None;
        for i in (1..=i_min).rev() {
            if mags[i - 1] >= threshold && mags[i] < threshold {
                left = Some(cross(i - 1, i));
                break;
            }
        }
        let mut right = None;
        for i in i_min..mags.len() - 1 {
            if mags[i] < threshold && mags[i + 1] >= threshold {
                right = Some(cross(i, i + 1));
                break;
            }
        }
        let (Some(f_lo), Some(f_hi)) = (left, right) else {
            // Dip wider than the window.
            span *= 3.0;
            continue;
        };
        let fwhm = f_hi - f_lo;
        if fwhm < span / 100.0 || fwhm > span / 3.0 {
            span = fwhm * 40.0;
            continue;
        }
        return Ok((0.5 * (f_lo + f_hi), fwhm));
    }
    Err(NetworkError::Resolution(format!(
        "linewidth search did not settle for dip near {f_r:.3e} Hz"
    )))
}

/// Coupling quality factor implied by a series coupling capacitance:
/// the resonator is made lossless, the notch is simulated on a matched
/// feedline, and Q_c is read off the half-power linewidth (Q_L = Q_c when
/// internal loss vanishes).
pub fn coupling_q_from_cap(
    cap_ff: f64,
    res: &ResonatorSpec,
    _f_hint_hz: f64,
) -> Result<f64, NetworkError> {
    if !(cap_ff > 0.0) {
        return Err(NetworkError::InvalidSpec(format!(
            "coupling capacitance must be positive (got {cap_ff})"
        )));
    }
    let mut lossless = res.lossless();
    lossless.coupling_cap_ff = cap_ff;
    let (f_c, fwhm) = half_power_linewidth(&matched_feedline(), &lossless, 1000.0)?;
    Ok(f_c / fwhm)
}

/// Refines the loaded resonance of a single tapped resonator to sub-Hz
/// accuracy using the dip of the simulated transmission.
pub fn refine_dip_frequency(
    feedline: &LineParams,
    res: &ResonatorSpec,
    tap_position_um: f64,
) -> Result<f64, NetworkError> {
    let (f_c, fwhm) = half_power_linewidth(feedline, res, tap_position_um)?;
    let taps = [TappedResonator {
        spec: res.clone(),
        tap_position_um,
    }];
    let mag = |f: f64| {
        chip_abcd(feedline, &taps, f)
            .to_s(PORT_IMPEDANCE)
            .1
            .norm()
    };
    // Golden-section around the half-power midpoint.
    Ok(crate::math::minimize_scalar(
        mag,
        f_c - fwhm,
        f_c + fwhm,
        1e-3,
    ))
}
