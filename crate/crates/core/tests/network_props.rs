//! Physics invariants of the network simulator: reciprocity, lossless
//! unitarity, the internal-loss mapping, and agreement with the
//! closed-form notch model.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sirkit::cpw::LineParams;
use sirkit::fit::fit_notch;
use sirkit::math::linspace;
use sirkit::network::{
    abcd_line, chip_abcd, coupling_q_from_cap, fundamental_frequency, matched_feedline,
    resonances_in, s21_sweep, sweep_sparams, ResonatorSpec, Segment, TappedResonator,
    Termination, TwoPortAbcd, PORT_IMPEDANCE,
};
use sirkit::sir::{physical_length_um, spurious_ratios};

fn random_line(rng: &mut ChaCha8Rng) -> LineParams {
    LineParams::from_eps_eff(rng.gen_range(1.0..12.0), rng.gen_range(20.0..120.0))
}

fn random_cascade(rng: &mut ChaCha8Rng, f: f64) -> TwoPortAbcd {
    let mut m = TwoPortAbcd::identity();
    for _ in 0..rng.gen_range(1..=5) {
        match rng.gen_range(0..3) {
            0 => {
                let line = random_line(rng);
                m = m.cascade(&abcd_line(&line, rng.gen_range(10.0..5000.0), f));
            }
            1 => {
                let c = rng.gen_range(0.1e-15..50e-15);
                let z = 1.0 / Complex64::new(0.0, 2.0 * std::f64::consts::PI * f * c);
                m = m.cascade(&TwoPortAbcd::series_impedance(z));
            }
            _ => {
                let c = rng.gen_range(0.1e-15..50e-15);
                let y = Complex64::new(0.0, 2.0 * std::f64::consts::PI * f * c);
                m = m.cascade(&TwoPortAbcd::shunt_admittance(y));
            }
        }
    }
    m
}

#[test]
fn reciprocity_over_random_cascades() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..1000 {
        let f = rng.gen_range(1e9..12e9);
        let m = random_cascade(&mut rng, f);
        let det_err = (m.determinant() - Complex64::ONE).norm();
        assert!(det_err < 1e-9, "det error {det_err:e}");
    }
}

#[test]
fn lossless_networks_are_unitary() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..1000 {
        let f = rng.gen_range(1e9..12e9);
        let m = random_cascade(&mut rng, f);
        let (s11, s21) = m.to_s(PORT_IMPEDANCE);
        let power = s11.norm_sqr() + s21.norm_sqr();
        assert!((power - 1.0).abs() < 1e-9, "|S11|^2+|S21|^2 = {power}");
    }
}

#[test]
fn chip_sweep_is_unitary_and_passive() {
    let line = LineParams::from_eps_eff(5.5, 50.0);
    let res = ResonatorSpec {
        segments: vec![Segment {
            line,
            length_um: physical_length_um(std::f64::consts::FRAC_PI_2, 6.0e9, &line),
        }],
        termination: Termination::Short,
        coupling_cap_ff: 0.8,
        internal_q: None,
    };
    let tap = TappedResonator {
        spec: res,
        tap_position_um: 1500.0,
    };
    let grid = linspace(5.99e9, 6.01e9, 1001);
    let sparams = sweep_sparams(&matched_feedline(), std::slice::from_ref(&tap), &grid).unwrap();
    for (s11, s21) in sparams {
        let power = s11.norm_sqr() + s21.norm_sqr();
        assert!((power - 1.0).abs() < 1e-9);
        assert!(s21.norm() <= 1.0 + 1e-6);
    }
}

/// Setting segment attenuation alpha = beta / (2 Q_i) produces a fitted
/// Q_i within 1% of the request across the full range.
#[test]
fn internal_loss_mapping_round_trip() {
    let feed = matched_feedline();
    let line = LineParams::from_eps_eff(5.5, 50.0);
    for q_i in [1e4, 1e5, 1e6, 1e7] {
        let res = ResonatorSpec {
            segments: vec![Segment {
                line,
                length_um: physical_length_um(std::f64::consts::FRAC_PI_2, 6.0e9, &line),
            }],
            termination: Termination::Short,
            coupling_cap_ff: 0.8,
            internal_q: Some(q_i),
        };
        let f_r = fundamental_frequency(&res).unwrap();
        let q_c = coupling_q_from_cap(0.8, &res, f_r).unwrap();
        let q_l = 1.0 / (1.0 / q_i + 1.0 / q_c);
        let half_span = 10.0 * f_r / q_l;
        let grid = linspace(f_r - half_span, f_r + half_span, 1601);
        let tap = TappedResonator {
            spec: res,
            tap_position_um: 1000.0,
        };
        let trace = s21_sweep(&feed, &[tap], &grid).unwrap();
        let fit = fit_notch(&trace).unwrap();
        let err = (fit.q_internal - q_i).abs() / q_i;
        assert!(err < 0.01, "Q_i {q_i:e}: fitted {:e} ({err:.3})", fit.q_internal);
    }
}

/// The same loss mapping holds for a stepped (two-section) resonator: a
/// uniform alpha = beta/(2 Q_i) on both sections leaves the mode Q_i at
/// the requested value.
#[test]
fn internal_loss_mapping_stepped_resonator() {
    let feed = matched_feedline();
    let low = LineParams::from_eps_eff(5.5, 51.4);
    let high = LineParams::from_eps_eff(5.5, 94.3);
    let q_i = 3e5;
    let theta = (low.z0_ohm / high.z0_ohm).sqrt().atan();
    let res = ResonatorSpec {
        segments: vec![
            Segment {
                line: low,
                length_um: physical_length_um(theta, 6.0e9, &low),
            },
            Segment {
                line: high,
                length_um: physical_length_um(theta, 6.0e9, &high),
            },
        ],
        termination: Termination::Short,
        coupling_cap_ff: 0.8,
        internal_q: Some(q_i),
    };
    let f_r = fundamental_frequency(&res).unwrap();
    let q_c = coupling_q_from_cap(0.8, &res, f_r).unwrap();
    let q_l = 1.0 / (1.0 / q_i + 1.0 / q_c);
    let half_span = 10.0 * f_r / q_l;
    let grid = linspace(f_r - half_span, f_r + half_span, 1601);
    let tap = TappedResonator {
        spec: res,
        tap_position_um: 1000.0,
    };
    let trace = s21_sweep(&feed, &[tap], &grid).unwrap();
    let fit = fit_notch(&trace).unwrap();
    let err = (fit.q_internal - q_i).abs() / q_i;
    assert!(err < 0.01, "stepped Q_i fitted {:e} ({err:.3})", fit.q_internal);
}

/// Near an isolated resonance the simulated trace matches the fitted
/// closed-form notch model to 1e-3 in magnitude over +/-10 linewidths.
#[test]
fn simulated_dip_matches_notch_model() {
    let feed = matched_feedline();
    let line = LineParams::from_eps_eff(5.5, 50.0);
    for q_i in [2e3, 1e5, 1e6] {
        let res = ResonatorSpec {
            segments: vec![Segment {
                line,
                length_um: physical_length_um(std::f64::consts::FRAC_PI_2, 6.0e9, &line),
            }],
            termination: Termination::Short,
            coupling_cap_ff: if q_i < 1e4 { 8.0 } else { 0.8 },
            internal_q: Some(q_i),
        };
        let f_r = fundamental_frequency(&res).unwrap();
        let q_c = coupling_q_from_cap(res.coupling_cap_ff, &res, f_r).unwrap();
        let q_l = 1.0 / (1.0 / q_i + 1.0 / q_c);
        assert!(q_l >= 1e3, "loaded Q {q_l:e} below the model-agreement regime");
        let half_span = 10.0 * f_r / q_l;
        let grid = linspace(f_r - half_span, f_r + half_span, 1601);
        let tap = TappedResonator {
            spec: res,
            tap_position_um: 1000.0,
        };
        let trace = s21_sweep(&feed, &[tap], &grid).unwrap();
        let fit = fit_notch(&trace).unwrap();
        let model = fit.notch_params();
        let max_dev = trace
            .frequencies_hz()
            .iter()
            .zip(trace.s21())
            .map(|(f, s)| (model.evaluate(*f).norm() - s.norm()).abs())
            .fold(0.0f64, f64::max);
        assert!(max_dev <= 1e-3, "Q_i {q_i:e}: max |d|S21|| = {max_dev:e}");
    }
}

/// The first spurious mode of the bare stepped resonator, located by the
/// admittance-zero scan, agrees with the closed-form mode ratios.
#[test]
fn spurious_mode_from_admittance_scan() {
    let low = LineParams::from_eps_eff(5.5, 51.4);
    let high = LineParams::from_eps_eff(5.5, 94.3);
    let r = low.z0_ohm / high.z0_ohm;
    let theta = r.sqrt().atan();
    let res = ResonatorSpec {
        segments: vec![
            Segment {
                line: low,
                length_um: physical_length_um(theta, 6.0e9, &low),
            },
            Segment {
                line: high,
                length_um: physical_length_um(theta, 6.0e9, &high),
            },
        ],
        termination: Termination::Short,
        coupling_cap_ff: 0.0,
        internal_q: None,
    };
    let f0 = fundamental_frequency(&res).unwrap();
    let modes = resonances_in(&res, 0.5 * f0, 5.0 * f0, 2).unwrap();
    assert_eq!(modes.len(), 2);
    let measured_ratio = modes[1] / modes[0];
    let closed_form = spurious_ratios(r, 1).unwrap()[0];
    assert!(
        (measured_ratio - closed_form).abs() < 1e-3,
        "scan {measured_ratio} vs closed form {closed_form}"
    );
    assert!(measured_ratio > 3.0);
}

/// Table-style two-section chain (2151 um narrow + 2128 um wide sections
/// on the sapphire model): the bare fundamental lands just above 6 GHz.
#[test]
fn table_geometry_fundamental_band() {
    let sub = sirkit::cpw::SubstrateSpec::sapphire();
    let low = sirkit::cpw::cpw_params(
        &sirkit::cpw::CpwCrossSection::new(20.0, 10.0).unwrap(),
        &sub,
    )
    .unwrap();
    let high = sirkit::cpw::cpw_params(
        &sirkit::cpw::CpwCrossSection::new(4.0, 18.0).unwrap(),
        &sub,
    )
    .unwrap();
    let res = ResonatorSpec {
        segments: vec![
            Segment {
                line: low,
                length_um: 2128.0,
            },
            Segment {
                line: high,
                length_um: 2151.0,
            },
        ],
        termination: Termination::Short,
        coupling_cap_ff: 0.0,
        internal_q: None,
    };
    let f0 = fundamental_frequency(&res).unwrap();
    assert!(
        (5.85e9..6.15e9).contains(&f0),
        "fundamental {f0:e} outside the expected band"
    );
    // Equal-split closed-form estimate for the same geometry.
    let r = low.z0_ohm / high.z0_ohm;
    let theta = r.sqrt().atan();
    let mean_len = 0.5 * (2128.0 + 2151.0) * 1e-6;
    let estimate = theta * low.phase_velocity_m_per_s / (2.0 * std::f64::consts::PI * mean_len);
    assert!((f0 - estimate).abs() / estimate < 5e-3);
}

/// Chip-level determinism: the same inputs give bit-identical sweeps.
#[test]
fn sweep_is_deterministic() {
    let line = LineParams::from_eps_eff(5.5, 50.0);
    let res = ResonatorSpec {
        segments: vec![Segment {
            line,
            length_um: 4800.0,
        }],
        termination: Termination::Short,
        coupling_cap_ff: 0.8,
        internal_q: Some(2e5),
    };
    let tap = TappedResonator {
        spec: res,
        tap_position_um: 1000.0,
    };
    let grid = linspace(6.0e9, 6.9e9, 2001);
    let a = s21_sweep(&matched_feedline(), std::slice::from_ref(&tap), &grid).unwrap();
    let b = s21_sweep(&matched_feedline(), std::slice::from_ref(&tap), &grid).unwrap();
    assert_eq!(a.s21(), b.s21());
    let f = 6.33e9;
    let m1 = chip_abcd(&matched_feedline(), std::slice::from_ref(&tap), f);
    let m2 = chip_abcd(&matched_feedline(), std::slice::from_ref(&tap), f);
    assert_eq!(m1.to_s(PORT_IMPEDANCE), m2.to_s(PORT_IMPEDANCE));
}
