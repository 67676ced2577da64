//! Stepped-impedance resonator design.
//!
//! A two-section resonator shorted at one end resonates where the input
//! admittance seen from the open end vanishes,
//!
//! ```text
//! tan(theta1) * tan(theta2) = R,    R = Z_open / Z_short,
//! ```
//!
//! with `theta1` the electrical angle of the open-end section and `theta2`
//! that of the shorted section. Splitting the angle equally minimizes the
//! total electrical length at `2 atan(sqrt(R))`, which is below the
//! uniform-line quarter wave (pi/2) whenever R < 1. Higher modes of the
//! stepped line land well above three times the fundamental instead of at
//! odd harmonics.
//!
//! Physical synthesis converts angles to lengths through each section's own
//! phase velocity, then shortens segments to compensate lumped capacitances
//! (coupling capacitor, open-end fringing, bends) by
//! `delta_theta = atan(omega C Z0)` at the attachment point. For a series
//! capacitor at the open end this correction is exact: the loaded resonance
//! of the shortened resonator lands back on the design frequency.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{FEMTO, UM};
use crate::cpw::LineParams;

#[derive(Debug, Error, PartialEq)]
pub enum SirError {
    #[error("electrical angle {0} rad is at a tangent pole")]
    TangentPole(f64),
    #[error("impedance ratio must be positive (got {0})")]
    InvalidRatio(f64),
    #[error("angle {0} rad outside (0, pi/2)")]
    AngleOutOfRange(f64),
    #[error("mode count must be at least 1")]
    InvalidCount,
    #[error("capacitance must be non-negative (got {0} fF)")]
    NegativeCapacitance(f64),
    #[error("design infeasible: {0}")]
    Infeasible(String),
}

/// Where a correction capacitance attaches to the resonator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrectionPoint {
    /// Series capacitance at the open (coupled) end: the coupling capacitor
    /// or the open-end fringing capacitance. Shortens the open segment.
    OpenEnd,
    /// Shunt capacitance at the impedance step; half the angle correction is
    /// taken from each adjacent segment.
    Step,
    /// Empirical bend capacitance inside segment `0` (open side) or `1`.
    Bend(usize),
}

/// A correction capacitance and its attachment point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionCap {
    pub capacitance_ff: f64,
    pub at: CorrectionPoint,
}

/// How the total electrical angle is divided between the two sections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitPolicy {
    /// theta1 = theta2, the minimal-length split.
    EqualTheta,
    /// Explicit open-section angle; the shorted section follows from the
    /// resonance condition.
    Explicit(f64),
}

/// Resonator termination at the end away from the coupler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// Shorted far end: quarter-wave-type resonator.
    ShortedOneEnd,
    /// Open far end: half-wave-type resonator (uniform lines only).
    OpenBothEnds,
}

/// Design goal for one resonator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignTarget {
    pub fundamental_frequency_hz: f64,
    pub split: SplitPolicy,
    pub termination: Termination,
}

/// A solved two-section design: electrical angles at the fundamental plus
/// the corrected physical lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct SirDesign {
    /// Z_open / Z_short used for the electrical solve.
    pub impedance_ratio: f64,
    /// Electrical angle of the open-end section at the fundamental, rad.
    pub theta1_rad: f64,
    /// Electrical angle of the shorted section at the fundamental, rad.
    pub theta2_rad: f64,
    /// Open-end section: line parameters and corrected physical length (um).
    pub open_segment: (LineParams, f64),
    /// Shorted section: line parameters and corrected physical length (um).
    pub short_segment: (LineParams, f64),
    /// Corrections that were subtracted from the physical lengths.
    pub correction_caps: Vec<CorrectionCap>,
    pub fundamental_frequency_hz: f64,
}

impl SirDesign {
    /// Total corrected physical length, um.
    pub fn total_length_um(&self) -> f64 {
        self.open_segment.1 + self.short_segment.1
    }
}

const POLE_EPS: f64 = 1e-12;

/// Residual of the resonance condition, `tan(theta1) tan(theta2) - R`.
/// Zero exactly at resonance.
pub fn resonance_residual(r: f64, theta1: f64, theta2: f64) -> Result<f64, SirError> {
    for theta in [theta1, theta2] {
        if theta.cos().abs() < POLE_EPS {
            return Err(SirError::TangentPole(theta));
        }
    }
    Ok(theta1.tan() * theta2.tan() - r)
}

/// Total electrical angle of the minimal-length (equal-split) design,
/// `2 atan(sqrt(R))`. Below pi/2 for every R < 1.
pub fn minimal_total_theta(r: f64) -> Result<f64, SirError> {
    if !(r > 0.0) {
        return Err(SirError::InvalidRatio(r));
    }
    Ok(2.0 * r.sqrt().atan())
}

/// Fractional length saving of the equal-split design relative to a
/// quarter-wave uniform resonator, in percent.
pub fn shortening_percent(r: f64) -> Result<f64, SirError> {
    Ok((1.0 - minimal_total_theta(r)? / std::f64::consts::FRAC_PI_2) * 100.0)
}

/// Solves the resonance condition for the shorted-section angle given the
/// open-section angle: `theta2 = atan(R / tan(theta1))`.
pub fn solve_theta2(r: f64, theta1: f64) -> Result<f64, SirError> {
    if !(r > 0.0) {
        return Err(SirError::InvalidRatio(r));
    }
    if !(theta1 > 0.0 && theta1 < std::f64::consts::FRAC_PI_2) {
        return Err(SirError::AngleOutOfRange(theta1));
    }
    Ok((r / theta1.tan()).atan())
}

/// Frequency ratios f_k / f_0 of the first `count` higher modes of an
/// equal-split design. The stepped line's modes sit at the successive
/// positive roots of `tan^2(x) = R`; closed form: with `a = atan(sqrt(R))`
/// the roots are `m pi -/+ a`, so the first ratio is `(pi - a) / a`,
/// strictly above 3 for every R < 1 (and exactly 3, 5, 7, ... at R = 1).
pub fn spurious_ratios(r: f64, count: usize) -> Result<Vec<f64>, SirError> {
    if !(r > 0.0) {
        return Err(SirError::InvalidRatio(r));
    }
    if count < 1 {
        return Err(SirError::InvalidCount);
    }
    let a = r.sqrt().atan();
    let mut ratios = Vec::with_capacity(count);
    let mut m = 1usize;
    while ratios.len() < count {
        let lower = m as f64 * std::f64::consts::PI - a;
        ratios.push(lower / a);
        if ratios.len() < count {
            let upper = m as f64 * std::f64::consts::PI + a;
            ratios.push(upper / a);
        }
        m += 1;
    }
    Ok(ratios)
}

/// Physical length for an electrical angle at a frequency,
/// `l = theta v_ph / (2 pi f)`, in um.
pub fn physical_length_um(theta_rad: f64, f_hz: f64, line: &LineParams) -> f64 {
    theta_rad * line.phase_velocity_m_per_s / (2.0 * std::f64::consts::PI * f_hz) / UM
}

/// Length to subtract from a segment to absorb a lumped capacitance:
/// `delta_theta = atan(2 pi f C Z0)`, converted through the segment's phase
/// constant. Linear in C for small capacitances.
pub fn length_correction_um(
    cap_ff: f64,
    z0_ohm: f64,
    f_hz: f64,
    line: &LineParams,
) -> Result<f64, SirError> {
    if cap_ff < 0.0 {
        return Err(SirError::NegativeCapacitance(cap_ff));
    }
    let omega = 2.0 * std::f64::consts::PI * f_hz;
    let delta_theta = (omega * cap_ff * FEMTO * z0_ohm).atan();
    Ok(delta_theta / line.beta(f_hz) / UM)
}

/// Synthesizes the corrected physical design for a target fundamental.
///
/// `lines` is `(open-end section, shorted section)`. The bare angles come
/// from the split policy and the resonance condition; each correction
/// capacitance then shortens its attachment segment. For `OpenBothEnds`
/// only uniform designs (R = 1, identical sections) are supported, with a
/// half-wave total angle.
///
/// `r` governs the angle solve. A built resonator obeys the actual
/// impedance ratio of its sections, so the synthesized design resonates at
/// the target frequency exactly when `r = lines.0.z0 / lines.1.z0`;
/// passing a rounded nominal ratio shifts the physical resonance by
/// roughly a third of the mismatch.
pub fn synthesize_design(
    target: &DesignTarget,
    r: f64,
    lines: (LineParams, LineParams),
    caps: &[CorrectionCap],
) -> Result<SirDesign, SirError> {
    if !(target.fundamental_frequency_hz > 0.0) {
        return Err(SirError::Infeasible(format!(
            "target frequency must be positive (got {})",
            target.fundamental_frequency_hz
        )));
    }
    let f = target.fundamental_frequency_hz;
    let (open_line, short_line) = lines;

    let (theta1, theta2) = match target.termination {
        Termination::ShortedOneEnd => match target.split {
            SplitPolicy::EqualTheta => {
                let t = 0.5 * minimal_total_theta(r)?;
                (t, t)
            }
            SplitPolicy::Explicit(theta1) => (theta1, solve_theta2(r, theta1)?),
        },
        Termination::OpenBothEnds => {
            if (r - 1.0).abs() > 1e-9 || open_line != short_line {
                return Err(SirError::Infeasible(
                    "open-both-ends synthesis supports uniform designs only (R = 1, \
                     identical sections)"
                        .into(),
                ));
            }
            // Half-wave uniform line, split evenly for bookkeeping.
            let quarter = std::f64::consts::FRAC_PI_2;
            (quarter, quarter)
        }
    };

    let mut open_len = physical_length_um(theta1, f, &open_line);
    let mut short_len = physical_length_um(theta2, f, &short_line);

    for cap in caps {
        match cap.at {
            CorrectionPoint::OpenEnd => {
                open_len -= length_correction_um(cap.capacitance_ff, open_line.z0_ohm, f, &open_line)?;
            }
            CorrectionPoint::Step => {
                open_len -=
                    0.5 * length_correction_um(cap.capacitance_ff, open_line.z0_ohm, f, &open_line)?;
                short_len -= 0.5
                    * length_correction_um(cap.capacitance_ff, short_line.z0_ohm, f, &short_line)?;
            }
            CorrectionPoint::Bend(segment) => {
                let (line, len) = if segment == 0 {
                    (&open_line, &mut open_len)
                } else {
                    (&short_line, &mut short_len)
                };
                *len -= length_correction_um(cap.capacitance_ff, line.z0_ohm, f, line)?;
            }
        }
    }

    if open_len <= 0.0 || short_len <= 0.0 {
        return Err(SirError::Infeasible(format!(
            "corrections exceed segment length ({open_len:.2} um / {short_len:.2} um)"
        )));
    }

    Ok(SirDesign {
        impedance_ratio: r,
        theta1_rad: theta1,
        theta2_rad: theta2,
        open_segment: (open_line, open_len),
        short_segment: (short_line, short_len),
        correction_caps: caps.to_vec(),
        fundamental_frequency_hz: f,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::SPEED_OF_LIGHT;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn line_55() -> LineParams {
        LineParams::from_eps_eff(5.5, 50.5)
    }

    #[test]
    fn residual_examples() {
        assert!(resonance_residual(1.0, FRAC_PI_4, FRAC_PI_4).unwrap().abs() < 1e-15);
        // Equal-split fixed point, cross-checked against a bisection root
        // of tan^2(x) = 0.54 rather than the arctangent path.
        let theta = 0.54f64.sqrt().atan();
        let oracle = crate::math::bisect(|x| x.tan() * x.tan() - 0.54, 0.3, 1.0, 1e-14);
        assert!((theta - oracle).abs() < 1e-12);
        assert!((theta - 0.633732).abs() < 1e-5);
        assert!(resonance_residual(0.54, theta, theta).unwrap().abs() < 1e-12);
        assert_relative_eq!(
            resonance_residual(0.54, FRAC_PI_4, FRAC_PI_4).unwrap(),
            0.46,
            epsilon = 1e-12
        );
        assert!(matches!(
            resonance_residual(1.0, FRAC_PI_2, 0.3),
            Err(SirError::TangentPole(_))
        ));
    }

    #[test]
    fn minimal_theta_examples() {
        assert_eq!(minimal_total_theta(1.0).unwrap(), FRAC_PI_2);
        assert!((minimal_total_theta(0.54).unwrap() - 1.267465).abs() < 1e-5);
        assert!((minimal_total_theta(0.41).unwrap() - 1.139070).abs() < 1e-5);
        assert!((shortening_percent(0.54).unwrap() - 19.4).abs() < 0.1);
        assert!((shortening_percent(0.41).unwrap() - 27.5).abs() < 0.1);
        assert!(matches!(
            minimal_total_theta(0.0),
            Err(SirError::InvalidRatio(_))
        ));
    }

    #[test]
    fn minimal_theta_monotone_and_below_quarter_wave() {
        let mut prev = 0.0;
        for i in 1..=99 {
            let r = i as f64 / 100.0;
            let theta = minimal_total_theta(r).unwrap();
            assert!(theta > prev, "not increasing at R={r}");
            assert!(theta < FRAC_PI_2, "not below pi/2 at R={r}");
            prev = theta;
        }
    }

    #[test]
    fn solve_theta2_examples() {
        assert_relative_eq!(solve_theta2(1.0, FRAC_PI_4).unwrap(), FRAC_PI_4);
        let fixed = 0.54f64.sqrt().atan();
        assert!((solve_theta2(0.54, fixed).unwrap() - fixed).abs() < 1e-12);
        let theta2 = solve_theta2(0.54, 0.4).unwrap();
        assert!((theta2 - 0.906538).abs() < 1e-5);
        assert!(resonance_residual(0.54, 0.4, theta2).unwrap().abs() < 1e-12);
        assert!(matches!(
            solve_theta2(0.54, 1.6),
            Err(SirError::AngleOutOfRange(_))
        ));
        assert!(matches!(
            solve_theta2(0.54, 0.0),
            Err(SirError::AngleOutOfRange(_))
        ));
    }

    #[test]
    fn residual_identity_over_domain() {
        for i in 1..100 {
            let theta1 = FRAC_PI_2 * i as f64 / 100.0;
            for r in [0.1, 0.54, 1.0, 3.0] {
                let theta2 = solve_theta2(r, theta1).unwrap();
                assert!(
                    resonance_residual(r, theta1, theta2).unwrap().abs() < 1e-12,
                    "identity fails at R={r}, theta1={theta1}"
                );
            }
        }
    }

    #[test]
    fn equal_split_is_minimal() {
        for r in [0.2, 0.41, 0.54, 0.9] {
            let minimal = minimal_total_theta(r).unwrap();
            for i in 1..1000 {
                let theta1 = FRAC_PI_2 * i as f64 / 1001.0;
                let total = theta1 + solve_theta2(r, theta1).unwrap();
                assert!(
                    minimal <= total + 1e-12,
                    "split {theta1} beats the equal split at R={r}"
                );
            }
        }
    }

    #[test]
    fn spurious_ratio_examples() {
        let uir = spurious_ratios(1.0, 4).unwrap();
        for (got, want) in uir.iter().zip([3.0, 5.0, 7.0, 9.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }
        let first = spurious_ratios(0.54, 1).unwrap()[0];
        assert!((first - 3.957286).abs() < 1e-5);
        assert!(matches!(spurious_ratios(0.5, 0), Err(SirError::InvalidCount)));
    }

    #[test]
    fn first_spurious_above_three_for_all_r_below_one() {
        for i in 1..=99 {
            let r = i as f64 / 100.0;
            assert!(spurious_ratios(r, 1).unwrap()[0] > 3.0);
        }
    }

    /// Brute-force oracle: positive roots of tan^2(x) = R located by a
    /// sign-change scan of the equal-split residual at pi/1000 resolution,
    /// refined by bisection. Poles of tan^2 never produce sign changes, so
    /// every crossing is a genuine mode.
    fn scanned_ratios(r: f64, count: usize) -> Vec<f64> {
        let g = |x: f64| x.tan().powi(2) - r;
        let span = (count as f64 / 2.0 + 2.0) * PI;
        let n = (span / (PI / 1000.0)) as usize;
        let roots =
            crate::math::scan_sign_changes(g, 1e-6, span, n, 1e-12, |_, _| true);
        roots[1..=count].iter().map(|x| x / roots[0]).collect()
    }

    #[test]
    fn closed_form_matches_root_scan() {
        for i in 1..=10 {
            let r = i as f64 / 10.0;
            let closed = spurious_ratios(r, 5).unwrap();
            let scanned = scanned_ratios(r, 5);
            for (c, s) in closed.iter().zip(&scanned) {
                assert!((c - s).abs() < 1e-9, "R={r}: closed {c} vs scan {s}");
            }
        }
    }

    #[test]
    fn physical_length_examples() {
        let line = LineParams::from_eps_eff(5.5, 50.0);
        let l = physical_length_um(FRAC_PI_2, 6.5e9, &line);
        let oracle_mm = SPEED_OF_LIGHT / (4.0 * 6.5e9 * 5.5f64.sqrt()) * 1e3;
        assert_relative_eq!(l / 1000.0, oracle_mm, epsilon = 1e-9);
        assert!((l / 1000.0 - 4.917).abs() < 5e-4);
        assert_eq!(physical_length_um(0.0, 6.5e9, &line), 0.0);
        let l_sir = physical_length_um(1.26666, 6.5e9, &line);
        assert_relative_eq!(l_sir, l * 1.26666 / FRAC_PI_2, epsilon = 1e-9);
        assert!((1.0 - l_sir / l - 0.19366).abs() < 1e-3);
    }

    #[test]
    fn length_correction_examples() {
        let line = line_55();
        assert_eq!(length_correction_um(0.0, 50.5, 6.5e9, &line).unwrap(), 0.0);
        let dl = length_correction_um(0.8, 50.5, 6.5e9, &line).unwrap();
        assert!((dl - 5.164).abs() < 0.01, "got {dl}");
        let dl2 = length_correction_um(1.6, 50.5, 6.5e9, &line).unwrap();
        assert!((dl2 / dl - 2.0).abs() < 1e-3);
        assert!(matches!(
            length_correction_um(-0.1, 50.5, 6.5e9, &line),
            Err(SirError::NegativeCapacitance(_))
        ));
    }

    #[test]
    fn physical_length_scaling() {
        let line = line_55();
        let base = physical_length_um(0.7, 6.0e9, &line);
        assert_relative_eq!(physical_length_um(1.4, 6.0e9, &line), 2.0 * base, epsilon = 1e-9);
        assert_relative_eq!(physical_length_um(0.7, 12.0e9, &line), base / 2.0, epsilon = 1e-9);
    }

    #[test]
    fn synthesize_uir_quarter_wave() {
        let line = LineParams::from_eps_eff(5.5, 50.0);
        let target = DesignTarget {
            fundamental_frequency_hz: 6.5e9,
            split: SplitPolicy::EqualTheta,
            termination: Termination::ShortedOneEnd,
        };
        let design = synthesize_design(&target, 1.0, (line, line), &[]).unwrap();
        assert!((design.total_length_um() / 1000.0 - 4.917).abs() < 5e-4);
    }

    #[test]
    fn synthesize_equal_split_sir() {
        let line = line_55();
        let target = DesignTarget {
            fundamental_frequency_hz: 6.0e9,
            split: SplitPolicy::EqualTheta,
            termination: Termination::ShortedOneEnd,
        };
        let design = synthesize_design(&target, 0.54, (line, line), &[]).unwrap();
        assert!((design.open_segment.1 - 2148.89).abs() < 0.1, "{}", design.open_segment.1);
        assert!((design.short_segment.1 - 2148.89).abs() < 0.1);
        // Consistency with the stored angles.
        assert!(
            resonance_residual(0.54, design.theta1_rad, design.theta2_rad)
                .unwrap()
                .abs()
                < 1e-9
        );
    }

    #[test]
    fn end_cap_shortens_open_segment() {
        let line = line_55();
        let target = DesignTarget {
            fundamental_frequency_hz: 6.5e9,
            split: SplitPolicy::EqualTheta,
            termination: Termination::ShortedOneEnd,
        };
        let bare = synthesize_design(&target, 0.54, (line, line), &[]).unwrap();
        let caps = [CorrectionCap {
            capacitance_ff: 0.8,
            at: CorrectionPoint::OpenEnd,
        }];
        let corrected = synthesize_design(&target, 0.54, (line, line), &caps).unwrap();
        let reduction = bare.open_segment.1 - corrected.open_segment.1;
        assert!((reduction - 5.16).abs() < 0.05, "reduction {reduction}");
        assert_eq!(bare.short_segment.1, corrected.short_segment.1);
    }

    #[test]
    fn oversized_correction_is_infeasible() {
        let line = line_55();
        let target = DesignTarget {
            fundamental_frequency_hz: 6.5e9,
            split: SplitPolicy::EqualTheta,
            termination: Termination::ShortedOneEnd,
        };
        let caps = [CorrectionCap {
            capacitance_ff: 1e9,
            at: CorrectionPoint::OpenEnd,
        }];
        assert!(matches!(
            synthesize_design(&target, 0.54, (line, line), &caps),
            Err(SirError::Infeasible(_))
        ));
    }

    proptest! {
        #[test]
        fn theta2_always_satisfies_residual(r in 0.05f64..5.0, frac in 0.01f64..0.99) {
            let theta1 = FRAC_PI_2 * frac;
            let theta2 = solve_theta2(r, theta1).unwrap();
            prop_assert!(theta2 > 0.0 && theta2 < FRAC_PI_2);
            prop_assert!(resonance_residual(r, theta1, theta2).unwrap().abs() < 1e-12);
        }
    }
}
