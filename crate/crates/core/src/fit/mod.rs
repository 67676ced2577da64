//! Quality-factor extraction from complex transmission traces, and the
//! photon-number power calibration built on top of it.
//!
//! The pipeline follows the established circle-fit method for notch
//! resonators: estimate and remove the cable delay, fit the resonance
//! circle algebraically, fit the phase-versus-frequency arctangent around
//! the circle center, apply the diameter correction to split loaded and
//! coupling quality factors, then refine all seven model parameters
//! simultaneously by Levenberg–Marquardt against the raw data.
//!
//! Conventions (these differ across the literature, so they are pinned
//! here): the complex coupling quality factor is `Q_c = |Q_c| e^{-i phi}`
//! and the internal quality factor uses the real-part convention
//! `1/Q_i = 1/Q_L - cos(phi)/|Q_c|`.

mod circle;
mod lm;

pub use circle::circle_fit;

use num_complex::Complex64;
use thiserror::Error;

use crate::constants::{dbm_to_watts, watts_to_dbm, PLANCK};
use crate::notch::NotchParams;
use crate::trace::{S21Trace, TraceError};

#[derive(Debug, Error)]
pub enum FitError {
    #[error("trace too narrow: spans {span_linewidths:.1} estimated linewidths ({points} points); need >= 6 and >= 50 points")]
    InsufficientSpan { span_linewidths: f64, points: usize },
    #[error("degenerate circle fit: {0}")]
    DegenerateCircle(String),
    #[error("no resonance found: minimum |S21| is {min_fraction:.4} of the background")]
    NoResonance { min_fraction: f64 },
    #[error("fit did not converge after {iterations} iterations (chi2 = {chi2:.3e}): {message}")]
    Convergence {
        iterations: usize,
        chi2: f64,
        message: String,
    },
    #[error("inconsistent quality factors: Q_L = {q_loaded:.4e} exceeds Q_i = {q_internal:.4e}")]
    InconsistentQ { q_loaded: f64, q_internal: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Extracted resonance parameters and background, with fit diagnostics.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub f_r_hz: f64,
    pub q_loaded: f64,
    /// Magnitude of the complex coupling quality factor.
    pub q_coupling_mag: f64,
    /// Impedance-mismatch rotation of the resonance circle, rad.
    pub mismatch_angle_rad: f64,
    /// Internal quality factor from the diameter correction; infinite when
    /// the trace is consistent with a lossless resonator.
    pub q_internal: f64,
    pub cable_delay_s: f64,
    pub background_amplitude: f64,
    pub background_phase_rad: f64,
    /// RMS of |model - data| over the fit window, relative to the
    /// background amplitude.
    pub rms_residual: f64,
    pub diagnostics: FitDiagnostics,
}

/// Convergence and covariance information for a completed fit.
#[derive(Debug, Clone)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub points_used: usize,
    pub window_hz: (f64, f64),
    /// Standard errors for (f_r, Q_L, |Q_c|, phi, a, alpha, tau) when the
    /// covariance was computable.
    pub stderr: Option<[f64; 7]>,
}

impl FitResult {
    /// The notch-model parameters this result describes.
    pub fn notch_params(&self) -> NotchParams {
        NotchParams {
            f_r_hz: self.f_r_hz,
            q_loaded: self.q_loaded,
            q_coupling_mag: self.q_coupling_mag,
            mismatch_angle_rad: self.mismatch_angle_rad,
            background_amplitude: self.background_amplitude,
            background_phase_rad: self.background_phase_rad,
            cable_delay_s: self.cable_delay_s,
        }
    }
}

/// Background estimate produced by [`remove_background`].
#[derive(Debug, Clone, Copy)]
pub struct Background {
    pub cable_delay_s: f64,
    pub amplitude: f64,
    pub phase_rad: f64,
}

// ---------------------------------------------------------------------------
// background estimation

fn unwrap_phases(phases: &mut [f64]) {
    let mut offset = 0.0;
    for i in 1..phases.len() {
        let raw = phases[i] + offset;
        let mut delta = raw - phases[i - 1];
        while delta > std::f64::consts::PI {
            offset -= 2.0 * std::f64::consts::PI;
            delta -= 2.0 * std::f64::consts::PI;
        }
        while delta < -std::f64::consts::PI {
            offset += 2.0 * std::f64::consts::PI;
            delta += 2.0 * std::f64::consts::PI;
        }
        phases[i] += offset;
    }
}

/// Indices of the outer `fraction` of points on each side.
fn edge_indices(n: usize, fraction: f64) -> Vec<usize> {
    let k = ((n as f64 * fraction) as usize).max(2);
    (0..k).chain(n - k..n).collect()
}

/// Initial delay from a straight-line fit of the unwrapped phase in the
/// off-resonant outer 20% of the trace.
fn delay_from_edge_phase(trace: &S21Trace) -> f64 {
    let mut phases: Vec<f64> = trace.s21().iter().map(|s| s.arg()).collect();
    unwrap_phases(&mut phases);
    let idx = edge_indices(trace.len(), 0.2);
    let n = idx.len() as f64;
    let fs = trace.frequencies_hz();
    let mean_f = idx.iter().map(|&i| fs[i]).sum::<f64>() / n;
    let mean_p = idx.iter().map(|&i| phases[i]).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for &i in &idx {
        num += (fs[i] - mean_f) * (phases[i] - mean_p);
        den += (fs[i] - mean_f) * (fs[i] - mean_f);
    }
    let slope = num / den;
    -slope / (2.0 * std::f64::consts::PI)
}

fn remove_delay(trace: &S21Trace, tau: f64) -> Vec<Complex64> {
    trace
        .frequencies_hz()
        .iter()
        .zip(trace.s21())
        .map(|(f, s)| s * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * f * tau))
        .collect()
}

/// RMS radial deviation from the best-fit circle after removing delay
/// `tau`; the true delay minimizes this because only then is the trace an
/// exact circle.
fn circle_residual(trace: &S21Trace, tau: f64) -> f64 {
    let pts = remove_delay(trace, tau);
    match circle_fit(&pts) {
        Ok((center, radius)) => {
            let ss: f64 = pts
                .iter()
                .map(|p| {
                    let d = (p - center).norm() - radius;
                    d * d
                })
                .sum();
            (ss / pts.len() as f64).sqrt()
        }
        Err(_) => f64::INFINITY,
    }
}

fn refine_delay(trace: &S21Trace, tau_init: f64) -> f64 {
    let span = trace.span_hz();
    // A straight-line phase fit can be off by up to about a cycle across
    // the span when the resonance tails tilt it; search that whole range.
    let half_bracket = 1.0 / span;
    let lo = tau_init - half_bracket;
    let hi = tau_init + half_bracket;
    let mut best = tau_init;
    let mut best_val = f64::INFINITY;
    const COARSE: usize = 240;
    for i in 0..=COARSE {
        let tau = lo + (hi - lo) * i as f64 / COARSE as f64;
        let v = circle_residual(trace, tau);
        if v < best_val {
            best_val = v;
            best = tau;
        }
    }
    let step = (hi - lo) / COARSE as f64;
    crate::math::minimize_scalar(
        |tau| circle_residual(trace, tau),
        best - step,
        best + step,
        1e-14 / span,
    )
}

struct ResonanceEstimate {
    center: Complex64,
    radius: f64,
    q_loaded: f64,
    f_r_hz: f64,
    z_inf: Complex64,
}

/// Circle + phase fit on delay-corrected points. `points` must align with
/// `trace`'s grid.
fn estimate_resonance(
    fs: &[f64],
    points: &[Complex64],
) -> Result<ResonanceEstimate, FitError> {
    let (center, radius) = circle_fit(points)?;
    let mut psis: Vec<f64> = points.iter().map(|p| (p - center).arg()).collect();
    unwrap_phases(&mut psis);

    // Initial values: resonance at the magnitude dip, linewidth from the
    // half-depth width of |S21|.
    let mags: Vec<f64> = points.iter().map(|p| p.norm()).collect();
    let i_min = mags
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let f_r0 = fs[i_min];
    let baseline = {
        let idx = edge_indices(fs.len(), 0.1);
        idx.iter().map(|&i| mags[i]).sum::<f64>() / idx.len() as f64
    };
    let half = 0.5 * (baseline + mags[i_min]);
    let mut lo = fs[0];
    for i in (0..i_min).rev() {
        if mags[i] >= half {
            lo = fs[i];
            break;
        }
    }
    let mut hi = fs[fs.len() - 1];
    for i in i_min..fs.len() {
        if mags[i] >= half {
            hi = fs[i];
            break;
        }
    }
    let fwhm = (hi - lo).max(f64::EPSILON * f_r0);
    let q_l0 = (f_r0 / fwhm).max(10.0);
    let psi0_guess = {
        let model0: Vec<f64> = fs
            .iter()
            .map(|f| 2.0 * (2.0 * q_l0 * (1.0 - f / f_r0)).atan())
            .collect();
        psis.iter()
            .zip(&model0)
            .map(|(p, m)| p - m)
            .sum::<f64>()
            / psis.len() as f64
    };

    // Phase model psi(f) = psi0 + 2 atan(2 Q_L (1 - f/f_r)).
    let scales = [1.0f64.max(psi0_guess.abs()), q_l0, f_r0];
    let init = [psi0_guess / scales[0], 1.0, 1.0];
    let model =
        |p: &[f64], f: f64| p[0] * scales[0] + 2.0 * (2.0 * p[1] * scales[1] * (1.0 - f / (p[2] * scales[2]))).atan();
    let fit = lm::levenberg_marquardt(
        &init,
        fs.len(),
        |p, out| {
            for (k, f) in fs.iter().enumerate() {
                out[k] = model(p, *f) - psis[k];
            }
        },
        |p, out| {
            let (ql, fr) = (p[1] * scales[1], p[2] * scales[2]);
            for (k, f) in fs.iter().enumerate() {
                let u = 2.0 * ql * (1.0 - f / fr);
                let common = 2.0 / (1.0 + u * u);
                out[k * 3] = scales[0];
                out[k * 3 + 1] = common * 2.0 * (1.0 - f / fr) * scales[1];
                out[k * 3 + 2] = common * 2.0 * ql * f / (fr * fr) * scales[2];
            }
        },
        200,
    );
    let psi0 = fit.params[0] * scales[0];
    let q_loaded = fit.params[1] * scales[1];
    let f_r_hz = fit.params[2] * scales[2];
    if !(q_loaded > 0.0) || !f_r_hz.is_finite() {
        return Err(FitError::Convergence {
            iterations: fit.iterations,
            chi2: fit.chi2,
            message: "phase fit produced unphysical parameters".into(),
        });
    }
    // The off-resonant point sits diametrically opposite the resonance.
    let z_inf = center - Complex64::from_polar(radius, psi0);
    Ok(ResonanceEstimate {
        center,
        radius,
        q_loaded,
        f_r_hz,
        z_inf,
    })
}

/// Checks the span/point-count preconditions; returns the estimated
/// linewidth when a dip is present.
fn check_span(trace: &S21Trace) -> Result<Option<f64>, FitError> {
    let n = trace.len();
    if n < 50 {
        return Err(FitError::InsufficientSpan {
            span_linewidths: 0.0,
            points: n,
        });
    }
    let mags: Vec<f64> = trace.s21().iter().map(|s| s.norm()).collect();
    let idx = edge_indices(n, 0.1);
    let baseline = idx.iter().map(|&i| mags[i]).sum::<f64>() / idx.len() as f64;
    let i_min = trace.dip_index();
    if mags[i_min] > 0.99 * baseline {
        return Ok(None); // flat trace
    }
    let half = 0.5 * (baseline + mags[i_min]);
    let left = (0..i_min).rev().find(|&i| mags[i] >= half);
    let right = (i_min..n).find(|&i| mags[i] >= half);
    let (Some(l), Some(r)) = (left, right) else {
        return Err(FitError::InsufficientSpan {
            span_linewidths: 1.0,
            points: n,
        });
    };
    let fwhm = trace.frequencies_hz()[r] - trace.frequencies_hz()[l];
    let spans = trace.span_hz() / fwhm;
    if spans < 6.0 {
        return Err(FitError::InsufficientSpan {
            span_linewidths: spans,
            points: n,
        });
    }
    Ok(Some(fwhm))
}

/// Estimates and removes the cable delay and complex background so the
/// off-resonant level becomes 1 + 0i. Idempotent: a second application
/// changes the parameters only at numerical precision.
///
/// The linear edge-phase fit only initializes the delay; when a resonance
/// is present the background is taken from the full model refinement,
/// since the resonance tails tilt a straight-line fit by far more than the
/// examples tolerate. Traces without a resonance are normalized by their
/// complex mean.
pub fn remove_background(trace: &S21Trace) -> Result<(S21Trace, Background), FitError> {
    check_span(trace)?;
    let tau_init = delay_from_edge_phase(trace);
    let corrected = remove_delay(trace, tau_init);
    let mean = corrected.iter().sum::<Complex64>() / corrected.len() as f64;
    let spread = corrected
        .iter()
        .map(|p| (p - mean).norm())
        .fold(0.0f64, f64::max);

    let (tau, z_inf) = if spread < 5e-3 * mean.norm() {
        // No resonance to lean on; the edge-phase delay is already exact.
        (tau_init, mean)
    } else if let Ok(fit) = fit_notch(trace) {
        (
            fit.cable_delay_s,
            Complex64::from_polar(fit.background_amplitude, fit.background_phase_rad),
        )
    } else {
        let tau = refine_delay(trace, tau_init);
        let pts = remove_delay(trace, tau);
        let est = estimate_resonance(trace.frequencies_hz(), &pts)?;
        (tau, est.z_inf)
    };

    let normalized: Vec<Complex64> = trace
        .frequencies_hz()
        .iter()
        .zip(trace.s21())
        .map(|(f, s)| {
            s * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * f * tau) / z_inf
        })
        .collect();
    let mut out = S21Trace::new(trace.frequencies_hz().to_vec(), normalized)?;
    out.incident_power_dbm = trace.incident_power_dbm;
    out.metadata = trace.metadata.clone();
    Ok((
        out,
        Background {
            cable_delay_s: tau,
            amplitude: z_inf.norm(),
            phase_rad: z_inf.arg(),
        },
    ))
}

// ---------------------------------------------------------------------------
// full notch fit

/// Symmetric index window of at least `min_points` points covering
/// `[f_lo, f_hi]`.
fn window_indices(fs: &[f64], f_lo: f64, f_hi: f64, min_points: usize) -> (usize, usize) {
    let n = fs.len();
    let mut lo = fs.partition_point(|f| *f < f_lo);
    let mut hi = fs.partition_point(|f| *f <= f_hi);
    while hi - lo < min_points.min(n) {
        if lo > 0 {
            lo -= 1;
        }
        if hi < n {
            hi += 1;
        }
        if lo == 0 && hi == n {
            break;
        }
    }
    (lo, hi)
}

/// Fits the full notch model to a raw trace.
///
/// Runs background estimation first, so raw instrument traces (arbitrary
/// amplitude, phase offset, and cable delay) are handled directly.
pub fn fit_notch(trace: &S21Trace) -> Result<FitResult, FitError> {
    check_span(trace)?;
    let tau_init = delay_from_edge_phase(trace);
    let corrected = remove_delay(trace, tau_init);
    let mean = corrected.iter().sum::<Complex64>() / corrected.len() as f64;
    let spread = corrected
        .iter()
        .map(|p| (p - mean).norm())
        .fold(0.0f64, f64::max);
    if spread < 5e-3 * mean.norm() {
        return Err(FitError::NoResonance {
            min_fraction: 1.0 - spread / mean.norm(),
        });
    }
    let mags_min = trace
        .s21()
        .iter()
        .map(|s| s.norm())
        .fold(f64::INFINITY, f64::min);
    let baseline_mag = mean.norm();
    if mags_min > 0.99 * baseline_mag {
        return Err(FitError::NoResonance {
            min_fraction: mags_min / baseline_mag,
        });
    }

    let tau0 = refine_delay(trace, tau_init);
    let fs = trace.frequencies_hz();
    let pts = remove_delay(trace, tau0);
    let first = estimate_resonance(fs, &pts)?;

    // Second pass on a +/-5 linewidth window around the first-pass result.
    let lw = first.f_r_hz / first.q_loaded;
    let (lo, hi) = window_indices(fs, first.f_r_hz - 5.0 * lw, first.f_r_hz + 5.0 * lw, 50);
    let est = estimate_resonance(&fs[lo..hi], &pts[lo..hi])?;
    let lw = est.f_r_hz / est.q_loaded;
    let (lo, hi) = window_indices(fs, est.f_r_hz - 5.0 * lw, est.f_r_hz + 5.0 * lw, 50);

    // Diameter correction on the normalized circle.
    let radius_norm = est.radius / est.z_inf.norm();
    let center_norm = est.center / est.z_inf;
    let phi0 = (Complex64::ONE - center_norm).arg();
    let q_c0 = (est.q_loaded / (2.0 * radius_norm)).max(1.0);

    // Simultaneous refinement of all seven parameters against the raw
    // windowed data.
    let scales = [
        est.f_r_hz,
        est.q_loaded,
        q_c0,
        1.0,
        est.z_inf.norm(),
        1.0,
        (0.1 / trace.span_hz()).max(tau0.abs()),
    ];
    let init: Vec<f64> = [
        est.f_r_hz / scales[0],
        est.q_loaded / scales[1],
        q_c0 / scales[2],
        phi0,
        est.z_inf.norm() / scales[4],
        est.z_inf.arg(),
        tau0 / scales[6],
    ]
    .to_vec();
    let win_f = &fs[lo..hi];
    let win_s = &trace.s21()[lo..hi];
    let n_pts = win_f.len();

    let unscale = |p: &[f64]| NotchParams {
        f_r_hz: p[0] * scales[0],
        q_loaded: p[1] * scales[1],
        q_coupling_mag: p[2] * scales[2],
        mismatch_angle_rad: p[3] * scales[3],
        background_amplitude: p[4] * scales[4],
        background_phase_rad: p[5] * scales[5],
        cable_delay_s: p[6] * scales[6],
    };

    let residuals = |p: &[f64], out: &mut [f64]| {
        let np = unscale(p);
        for (k, (f, s)) in win_f.iter().zip(win_s).enumerate() {
            let d = np.evaluate(*f) - s;
            out[2 * k] = d.re;
            out[2 * k + 1] = d.im;
        }
    };
    let jacobian = |p: &[f64], out: &mut [f64]| {
        let np = unscale(p);
        let e_phase = |f: f64| {
            Complex64::from_polar(
                np.background_amplitude,
                np.background_phase_rad
                    - 2.0 * std::f64::consts::PI * f * np.cable_delay_s,
            )
        };
        let phi_fac = Complex64::from_polar(1.0, np.mismatch_angle_rad);
        for (k, f) in win_f.iter().enumerate() {
            let f = *f;
            let env = e_phase(f);
            let denom = Complex64::new(1.0, 2.0 * np.q_loaded * (f - np.f_r_hz) / np.f_r_hz);
            let lorentz = (np.q_loaded / np.q_coupling_mag) * phi_fac / denom;
            let m = env * (Complex64::ONE - lorentz);
            let dd = denom * denom;
            let d_fr = -env
                * (np.q_loaded / np.q_coupling_mag)
                * phi_fac
                * Complex64::new(0.0, 2.0 * np.q_loaded * f / (np.f_r_hz * np.f_r_hz))
                / dd;
            let d_ql = -env * phi_fac / (np.q_coupling_mag * dd);
            let d_qc = env * lorentz / np.q_coupling_mag;
            let d_phi = -Complex64::I * env * lorentz;
            let d_a = m / np.background_amplitude;
            let d_alpha = Complex64::I * m;
            let d_tau = Complex64::new(0.0, -2.0 * std::f64::consts::PI * f) * m;
            let cols = [
                d_fr * scales[0],
                d_ql * scales[1],
                d_qc * scales[2],
                d_phi * scales[3],
                d_a * scales[4],
                d_alpha * scales[5],
                d_tau * scales[6],
            ];
            for (j, c) in cols.iter().enumerate() {
                out[(2 * k) * 7 + j] = c.re;
                out[(2 * k + 1) * 7 + j] = c.im;
            }
        }
    };

    let lm_fit = lm::levenberg_marquardt(&init, 2 * n_pts, residuals, jacobian, 200);
    let params = unscale(&lm_fit.params);

    let in_span = params.f_r_hz >= fs[0] && params.f_r_hz <= fs[fs.len() - 1];
    if !lm_fit.converged || !in_span || !(params.q_loaded > 0.0) || !(params.q_coupling_mag > 0.0)
    {
        return Err(FitError::Convergence {
            iterations: lm_fit.iterations,
            chi2: lm_fit.chi2,
            message: if in_span {
                "refinement did not converge".into()
            } else {
                format!("fitted f_r {:.6e} Hz left the trace span", params.f_r_hz)
            },
        });
    }

    let rms_residual =
        (lm_fit.chi2 / n_pts as f64).sqrt() / params.background_amplitude;
    let stderr = lm_fit.stderr.map(|s| {
        let mut arr = [0.0; 7];
        for (i, v) in s.iter().enumerate() {
            arr[i] = v * scales[i];
        }
        arr
    });

    Ok(FitResult {
        f_r_hz: params.f_r_hz,
        q_loaded: params.q_loaded,
        q_coupling_mag: params.q_coupling_mag,
        mismatch_angle_rad: params.mismatch_angle_rad,
        q_internal: params.q_internal(),
        cable_delay_s: params.cable_delay_s,
        background_amplitude: params.background_amplitude,
        background_phase_rad: params.background_phase_rad,
        rms_residual,
        diagnostics: FitDiagnostics {
            iterations: lm_fit.iterations,
            converged: lm_fit.converged,
            points_used: n_pts,
            window_hz: (win_f[0], win_f[n_pts - 1]),
            stderr,
        },
    })
}

// ---------------------------------------------------------------------------
// photon-number calibration

/// Average photon number circulating in the resonator for an incident
/// power, `N = P Q_L (1 - Q_L/Q_i) / (n pi h f_r^2)`, with `n` the probed
/// harmonic.
pub fn photon_number(
    p_inc_w: f64,
    q_loaded: f64,
    q_internal: f64,
    harmonic: u32,
    f_r_hz: f64,
) -> Result<f64, FitError> {
    if p_inc_w < 0.0 {
        return Err(FitError::Domain(format!(
            "incident power must be non-negative (got {p_inc_w} W)"
        )));
    }
    if harmonic < 1 {
        return Err(FitError::Domain("harmonic index must be >= 1".into()));
    }
    if !(q_loaded > 0.0) || !(f_r_hz > 0.0) {
        return Err(FitError::Domain(
            "Q_L and f_r must be positive".into(),
        ));
    }
    if q_loaded > q_internal {
        return Err(FitError::InconsistentQ {
            q_loaded,
            q_internal,
        });
    }
    let coupling_fraction = 1.0 - q_loaded / q_internal;
    Ok(p_inc_w * q_loaded * coupling_fraction
        / (harmonic as f64 * std::f64::consts::PI * PLANCK * f_r_hz * f_r_hz))
}

/// Incident power for one average circulating photon, in dBm.
pub fn single_photon_power_dbm(
    q_loaded: f64,
    q_internal: f64,
    harmonic: u32,
    f_r_hz: f64,
) -> Result<f64, FitError> {
    if q_loaded >= q_internal {
        return Err(FitError::InconsistentQ {
            q_loaded,
            q_internal,
        });
    }
    if harmonic < 1 {
        return Err(FitError::Domain("harmonic index must be >= 1".into()));
    }
    if !(q_loaded > 0.0) || !(f_r_hz > 0.0) {
        return Err(FitError::Domain("Q_L and f_r must be positive".into()));
    }
    let watts = harmonic as f64 * std::f64::consts::PI * PLANCK * f_r_hz * f_r_hz
        / (q_loaded * (1.0 - q_loaded / q_internal));
    Ok(watts_to_dbm(watts))
}

/// One analyzed trace of a power sweep.
#[derive(Debug, Clone)]
pub struct PowerPoint {
    /// Index of the source trace in the input list.
    pub trace_index: usize,
    /// Power at the chip, dBm (source power minus line attenuation).
    pub incident_power_dbm: f64,
    pub photon_number: f64,
    pub fit: FitResult,
}

/// A trace that could not be analyzed, with the reason.
#[derive(Debug)]
pub struct PowerSweepFailure {
    pub index: usize,
    pub reason: String,
}

/// Outcome of [`power_sweep`]: points sorted by photon number, plus any
/// per-trace failures.
#[derive(Debug)]
pub struct PowerSweepReport {
    pub points: Vec<PowerPoint>,
    pub failures: Vec<PowerSweepFailure>,
}

/// Fits every trace of a power sweep and converts each to a photon number
/// using its own fitted quality factors. Traces must carry the source power
/// tag; `line_attenuation_db` is subtracted to get the power at the chip.
/// Failures are recorded, not fatal.
pub fn power_sweep(traces: &[S21Trace], line_attenuation_db: f64) -> PowerSweepReport {
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (index, trace) in traces.iter().enumerate() {
        let Some(source_dbm) = trace.incident_power_dbm else {
            failures.push(PowerSweepFailure {
                index,
                reason: "missing power_dbm metadata".into(),
            });
            continue;
        };
        let chip_dbm = source_dbm - line_attenuation_db;
        match fit_notch(trace) {
            Ok(fit) => match photon_number(
                dbm_to_watts(chip_dbm),
                fit.q_loaded,
                fit.q_internal,
                1,
                fit.f_r_hz,
            ) {
                Ok(n) => points.push(PowerPoint {
                    trace_index: index,
                    incident_power_dbm: chip_dbm,
                    photon_number: n,
                    fit,
                }),
                Err(e) => failures.push(PowerSweepFailure {
                    index,
                    reason: e.to_string(),
                }),
            },
            Err(e) => failures.push(PowerSweepFailure {
                index,
                reason: e.to_string(),
            }),
        }
    }
    points.sort_by(|a, b| a.photon_number.total_cmp(&b.photon_number));
    PowerSweepReport { points, failures }
}

/// One row of the fit-results CSV.
#[derive(Debug)]
pub struct FitRecord {
    pub trace_id: String,
    pub fit: FitResult,
    pub photon_number: Option<f64>,
}

/// Serializes fit results in the reporting CSV format. The photon-number
/// column is left empty when no power calibration applies.
pub fn fit_results_csv(records: &[FitRecord]) -> String {
    let mut out = String::from(
        "trace_id,f_r_hz,q_loaded,q_coupling_mag,mismatch_angle_rad,q_internal,photon_number,rms_residual\n",
    );
    for r in records {
        let photon = r
            .photon_number
            .map(|n| n.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.trace_id,
            r.fit.f_r_hz,
            r.fit.q_loaded,
            r.fit.q_coupling_mag,
            r.fit.mismatch_angle_rad,
            r.fit.q_internal,
            photon,
            r.fit.rms_residual,
        ));
    }
    out
}
