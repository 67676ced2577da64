//! Closed-form notch (hanger) resonance model and synthetic trace
//! generation.
//!
//! The model for a resonator side-coupled to a feedline is
//!
//! ```text
//! S21(f) = a e^{i alpha} e^{-2 pi i f tau}
//!          [ 1 - (Q_L / |Q_c|) e^{i phi} / (1 + 2 i Q_L (f - f_r)/f_r) ]
//! ```
//!
//! with loaded quality factor `Q_L`, complex coupling quality factor
//! `Q_c = |Q_c| e^{-i phi}`, and internal quality factor defined through the
//! real-part convention `1/Q_i = 1/Q_L - cos(phi)/|Q_c|`. The background is
//! an amplitude `a`, a phase offset `alpha`, and a cable delay `tau`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::math::linspace;
use crate::trace::S21Trace;

/// Parameters of the notch model. The seven entries mirror the fit
/// parameter vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotchParams {
    pub f_r_hz: f64,
    pub q_loaded: f64,
    pub q_coupling_mag: f64,
    pub mismatch_angle_rad: f64,
    pub background_amplitude: f64,
    pub background_phase_rad: f64,
    pub cable_delay_s: f64,
}

impl NotchParams {
    /// Builds parameters from internal and coupling quality factors,
    /// deriving `Q_L` from the real-part convention.
    pub fn from_q_internal(
        f_r_hz: f64,
        q_internal: f64,
        q_coupling_mag: f64,
        mismatch_angle_rad: f64,
    ) -> Self {
        let q_loaded =
            1.0 / (1.0 / q_internal + mismatch_angle_rad.cos() / q_coupling_mag);
        Self {
            f_r_hz,
            q_loaded,
            q_coupling_mag,
            mismatch_angle_rad,
            background_amplitude: 1.0,
            background_phase_rad: 0.0,
            cable_delay_s: 0.0,
        }
    }

    pub fn with_background(mut self, amplitude: f64, phase_rad: f64, delay_s: f64) -> Self {
        self.background_amplitude = amplitude;
        self.background_phase_rad = phase_rad;
        self.cable_delay_s = delay_s;
        self
    }

    /// Internal quality factor implied by the stored values.
    pub fn q_internal(&self) -> f64 {
        let inv = 1.0 / self.q_loaded - self.mismatch_angle_rad.cos() / self.q_coupling_mag;
        if inv > 0.0 {
            1.0 / inv
        } else {
            f64::INFINITY
        }
    }

    /// Full-width linewidth f_r / Q_L, Hz.
    pub fn linewidth_hz(&self) -> f64 {
        self.f_r_hz / self.q_loaded
    }

    /// Model value at one frequency.
    pub fn evaluate(&self, f_hz: f64) -> Complex64 {
        let detuning = 2.0 * self.q_loaded * (f_hz - self.f_r_hz) / self.f_r_hz;
        let resonance = Complex64::ONE
            - (self.q_loaded / self.q_coupling_mag)
                * Complex64::from_polar(1.0, self.mismatch_angle_rad)
                / Complex64::new(1.0, detuning);
        let background = Complex64::from_polar(
            self.background_amplitude,
            self.background_phase_rad
                - 2.0 * std::f64::consts::PI * f_hz * self.cable_delay_s,
        );
        background * resonance
    }
}

/// A uniform grid of `points` samples covering `half_widths` linewidths on
/// each side of the resonance.
pub fn grid_around(params: &NotchParams, half_widths: f64, points: usize) -> Vec<f64> {
    let half_span = half_widths * params.linewidth_hz();
    linspace(params.f_r_hz - half_span, params.f_r_hz + half_span, points)
}

/// Evaluates the model on a grid.
pub fn synthesize_trace(params: &NotchParams, grid: &[f64]) -> S21Trace {
    let s21 = grid.iter().map(|&f| params.evaluate(f)).collect();
    S21Trace::new(grid.to_vec(), s21).expect("generator grids are valid")
}

/// Adds complex Gaussian noise at the given signal-to-noise ratio.
///
/// The SNR is referenced to the off-resonant level: the rms noise magnitude
/// is `background_amplitude * 10^(-snr_db/20)`, split evenly between the
/// two quadratures. Deterministic for a fixed seed.
pub fn add_noise(trace: &S21Trace, baseline_amplitude: f64, snr_db: f64, seed: u64) -> S21Trace {
    let sigma = baseline_amplitude * 10f64.powf(-snr_db / 20.0) / 2f64.sqrt();
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noisy: Vec<Complex64> = trace
        .s21()
        .iter()
        .map(|s| s + Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)))
        .collect();
    let mut out = S21Trace::new(trace.frequencies_hz().to_vec(), noisy)
        .expect("grid unchanged");
    out.incident_power_dbm = trace.incident_power_dbm;
    out.metadata = trace.metadata.clone();
    out
}
