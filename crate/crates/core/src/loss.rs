//! Power-dependent internal loss, in the standard two-level-system
//! saturation form, used to generate full synthetic power sweeps.
//!
//! This is test infrastructure for the analysis pipeline, not a materials
//! model: the parameters are chosen so generated curves span the internal
//! quality factors seen in thin-film CPW resonators (roughly 1e5 to 1e6),
//! with loss saturating as the drive power rises.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::constants::{dbm_to_watts, BOLTZMANN, PLANCK};
use crate::fit::photon_number;
use crate::math::linspace;
use crate::network::{
    coupling_q_from_cap, fundamental_frequency, matched_feedline, s21_sweep, NetworkError,
    ResonatorSpec, TappedResonator,
};
use crate::trace::S21Trace;

#[derive(Debug, Error)]
pub enum LossError {
    #[error("invalid loss parameters: {0}")]
    InvalidParams(String),
    #[error("self-consistent photon number did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("photon-number evaluation failed: {0}")]
    Photon(String),
}

/// Parameters of the saturable-loss model
/// `1/Q_i(n) = F delta_0 tanh(hf / 2kT) / (1 + n/n_c)^beta + 1/Q_other`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossModelParams {
    /// Low-power TLS loss tangent (filling factor included).
    pub tls_loss_tangent: f64,
    /// Photon number where saturation sets in.
    pub critical_photon_number: f64,
    /// Saturation exponent, in (0, 1].
    pub saturation_exponent: f64,
    /// Power-independent quality factor floor.
    pub power_independent_q: f64,
    /// Bath temperature, K.
    pub temperature_k: f64,
    /// Resonance frequency entering the thermal factor, Hz.
    pub frequency_hz: f64,
}

impl LossModelParams {
    pub fn validate(&self) -> Result<(), LossError> {
        let all_positive = self.tls_loss_tangent > 0.0
            && self.critical_photon_number > 0.0
            && self.power_independent_q > 0.0
            && self.temperature_k > 0.0
            && self.frequency_hz > 0.0;
        if !all_positive {
            return Err(LossError::InvalidParams(
                "all parameters must be positive".into(),
            ));
        }
        if !(self.saturation_exponent > 0.0 && self.saturation_exponent <= 1.0) {
            return Err(LossError::InvalidParams(format!(
                "saturation exponent must be in (0, 1], got {}",
                self.saturation_exponent
            )));
        }
        Ok(())
    }

    /// Defaults spanning roughly Q_i = 1.2e5 at few-photon drive up to
    /// 9e5 at high power, for a 6 GHz resonator at 10 mK.
    pub fn typical_thin_film() -> Self {
        Self {
            tls_loss_tangent: 8e-6,
            critical_photon_number: 10.0,
            saturation_exponent: 0.5,
            power_independent_q: 1e6,
            temperature_k: 0.010,
            frequency_hz: 6.0e9,
        }
    }
}

/// Internal quality factor at an average photon number.
pub fn qi_of_photon_number(params: &LossModelParams, n: f64) -> f64 {
    let thermal =
        (PLANCK * params.frequency_hz / (2.0 * BOLTZMANN * params.temperature_k)).tanh();
    let saturation = (1.0 + n / params.critical_photon_number).powf(params.saturation_exponent);
    let inv_q = params.tls_loss_tangent * thermal / saturation + 1.0 / params.power_independent_q;
    1.0 / inv_q
}

/// The self-consistent operating point at one chip power: Q_i depends on
/// the photon number through saturation, and the photon number depends on
/// Q_i through the loaded quality factor. Solved by damped fixed-point
/// iteration (damping 0.5) to 1e-6 relative.
pub fn self_consistent_point(
    params: &LossModelParams,
    p_chip_w: f64,
    q_coupling: f64,
    f_r_hz: f64,
) -> Result<(f64, f64), LossError> {
    params.validate()?;
    let mut n = 0.0f64;
    for iteration in 0..100 {
        let q_i = qi_of_photon_number(params, n);
        let q_l = 1.0 / (1.0 / q_i + 1.0 / q_coupling);
        let n_new = photon_number(p_chip_w, q_l, q_i, 1, f_r_hz)
            .map_err(|e| LossError::Photon(e.to_string()))?;
        let n_damped = 0.5 * n + 0.5 * n_new;
        let settled = (n_damped - n).abs() <= 1e-6 * n_damped.abs().max(1e-30);
        n = n_damped;
        if settled {
            return Ok((n, qi_of_photon_number(params, n)));
        }
        let _ = iteration;
    }
    Err(LossError::NoConvergence(100))
}

/// Synthesizes one transmission trace per source power for a resonator
/// whose internal loss follows the saturation model.
///
/// Each trace is simulated through the full network model at the
/// self-consistent Q_i for that power, on a 1601-point grid spanning ten
/// linewidths each side, then complex Gaussian noise is added at
/// `noise_snr_db` (`None` for noiseless). Traces carry the source power
/// tag; determinism comes from per-power seeds derived from `seed`.
pub fn synthesize_power_sweep(
    params: &LossModelParams,
    resonator: &ResonatorSpec,
    powers_dbm: &[f64],
    attenuation_db: f64,
    noise_snr_db: Option<f64>,
    seed: u64,
) -> Result<Vec<S21Trace>, LossError> {
    params.validate()?;
    let feedline = matched_feedline();
    let q_coupling = coupling_q_from_cap(resonator.coupling_cap_ff, resonator, 0.0)?;
    let mut lossless = resonator.lossless();
    lossless.coupling_cap_ff = resonator.coupling_cap_ff;
    let f_r = fundamental_frequency(&lossless)?;

    let mut traces = Vec::with_capacity(powers_dbm.len());
    for (index, &source_dbm) in powers_dbm.iter().enumerate() {
        let p_chip = dbm_to_watts(source_dbm - attenuation_db);
        let (_, q_i) = self_consistent_point(params, p_chip, q_coupling, f_r)?;
        let q_l = 1.0 / (1.0 / q_i + 1.0 / q_coupling);
        let mut spec = resonator.clone();
        spec.internal_q = Some(q_i);
        let half_span = 10.0 * f_r / q_l;
        let grid = linspace(f_r - half_span, f_r + half_span, 1601);
        let tap = TappedResonator {
            spec,
            tap_position_um: 1000.0,
        };
        let mut trace = s21_sweep(&feedline, &[tap], &grid)?.with_power_dbm(source_dbm);
        if let Some(snr_db) = noise_snr_db {
            let baseline = trace.s21()[0].norm();
            let point_seed = derive_seed(seed, index as u64);
            trace = crate::notch::add_noise(&trace, baseline, snr_db, point_seed);
            trace.incident_power_dbm = Some(source_dbm);
        }
        traces.push(trace);
    }
    Ok(traces)
}

fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix-style mixing keeps per-power streams independent.
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic RNG for callers that need reproducible synthetic data.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpw::LineParams;
    use crate::network::{Segment, Termination};
    use crate::sir::physical_length_um;
    use approx::assert_relative_eq;

    fn test_resonator() -> ResonatorSpec {
        let line = LineParams::from_eps_eff(5.5, 50.0);
        ResonatorSpec {
            segments: vec![Segment {
                line,
                length_um: physical_length_um(std::f64::consts::FRAC_PI_2, 6.0e9, &line),
            }],
            termination: Termination::Short,
            coupling_cap_ff: 0.8,
            internal_q: None,
        }
    }

    #[test]
    fn saturation_limit_is_floor_q() {
        let p = LossModelParams::typical_thin_film();
        let q = qi_of_photon_number(&p, 1e15);
        assert_relative_eq!(q, 1e6, max_relative = 1e-3);
    }

    #[test]
    fn low_power_cold_limit() {
        let mut p = LossModelParams::typical_thin_film();
        p.temperature_k = 1e-6; // tanh -> 1
        let q = qi_of_photon_number(&p, 0.0);
        let expected = 1.0 / (8e-6 + 1e-6);
        assert_relative_eq!(q, expected, max_relative = 1e-12);
    }

    #[test]
    fn default_curve_spans_reported_band() {
        // Direct evaluation of the formula at the default parameters.
        let p = LossModelParams::typical_thin_film();
        let q_low = qi_of_photon_number(&p, 3.0);
        let q_high = qi_of_photon_number(&p, 1e5);
        assert_relative_eq!(q_low, 1.2474e5, max_relative = 1e-3);
        assert_relative_eq!(q_high, 9.2596e5, max_relative = 1e-3);
        assert!(q_low > 1e5 && q_high < 1e6);
    }

    #[test]
    fn qi_monotone_in_photon_number() {
        let p = LossModelParams::typical_thin_film();
        let mut prev = 0.0;
        for exp in -2..=8 {
            let n = 10f64.powi(exp);
            let q = qi_of_photon_number(&p, n);
            assert!(q >= prev);
            prev = q;
        }
    }

    #[test]
    fn infinite_critical_number_freezes_qi() {
        let mut p = LossModelParams::typical_thin_film();
        p.critical_photon_number = 1e30;
        let q0 = qi_of_photon_number(&p, 0.0);
        for n in [1.0, 1e3, 1e6] {
            assert_relative_eq!(qi_of_photon_number(&p, n), q0, max_relative = 1e-9);
        }
    }

    #[test]
    fn fixed_point_converges_over_grid() {
        let p = LossModelParams::typical_thin_film();
        for dbm in [-160.0, -140.0, -120.0, -100.0, -80.0] {
            let (n, q_i) = self_consistent_point(&p, dbm_to_watts(dbm), 2e5, 6.0e9).unwrap();
            assert!(n >= 0.0 && q_i > 0.0, "power {dbm}: n={n}, qi={q_i}");
            // The point actually solves the coupled equations.
            let q_l = 1.0 / (1.0 / q_i + 1.0 / 2e5);
            let n_check = photon_number(dbm_to_watts(dbm), q_l, q_i, 1, 6.0e9).unwrap();
            assert_relative_eq!(n, n_check, max_relative = 1e-4);
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let p = LossModelParams::typical_thin_film();
        let res = test_resonator();
        let a = synthesize_power_sweep(&p, &res, &[-40.0], 60.0, Some(40.0), 11).unwrap();
        let b = synthesize_power_sweep(&p, &res, &[-40.0], 60.0, Some(40.0), 11).unwrap();
        assert_eq!(a[0].s21(), b[0].s21());
        let c = synthesize_power_sweep(&p, &res, &[-40.0], 60.0, Some(40.0), 12).unwrap();
        assert_ne!(a[0].s21(), c[0].s21());
    }

    #[test]
    fn noiseless_single_power_round_trip() {
        let p = LossModelParams::typical_thin_film();
        let res = test_resonator();
        let traces = synthesize_power_sweep(&p, &res, &[-40.0], 60.0, None, 0).unwrap();
        let fit = crate::fit::fit_notch(&traces[0]).unwrap();
        let q_c = coupling_q_from_cap(0.8, &res, 0.0).unwrap();
        let f_r = fundamental_frequency(&{
            let mut r = res.clone();
            r.coupling_cap_ff = 0.8;
            r
        })
        .unwrap();
        let (_, q_i_programmed) =
            self_consistent_point(&p, dbm_to_watts(-100.0), q_c, f_r).unwrap();
        assert!(
            (fit.q_internal - q_i_programmed).abs() / q_i_programmed < 0.01,
            "fit {} vs programmed {q_i_programmed}",
            fit.q_internal
        );
    }
}
