//! Algebraic circle fitting (Taubin's method).
//!
//! Minimizes the gradient-weighted algebraic distance; exact on noiseless
//! circles and essentially bias-free at the noise levels resonance traces
//! carry. The characteristic polynomial root is located by Newton iteration
//! from zero, following Chernov's reference implementation.

use num_complex::Complex64;

use super::FitError;

/// Fits a circle to the points; returns (center, radius).
pub fn circle_fit(points: &[Complex64]) -> Result<(Complex64, f64), FitError> {
    if points.len() < 3 {
        return Err(FitError::DegenerateCircle(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.re).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.im).sum::<f64>() / n;

    let (mut mxx, mut myy, mut mxy) = (0.0, 0.0, 0.0);
    let (mut mxz, mut myz, mut mzz) = (0.0, 0.0, 0.0);
    for p in points {
        let u = p.re - mean_x;
        let v = p.im - mean_y;
        let z = u * u + v * v;
        mxx += u * u;
        myy += v * v;
        mxy += u * v;
        mxz += u * z;
        myz += v * z;
        mzz += z * z;
    }
    mxx /= n;
    myy /= n;
    mxy /= n;
    mxz /= n;
    myz /= n;
    mzz /= n;

    let mz = mxx + myy;
    let cov_xy = mxx * myy - mxy * mxy;
    let a3 = 4.0 * mz;
    let a2 = -3.0 * mz * mz - mzz;
    let a1 = mzz * mz + 4.0 * cov_xy * mz - mxz * mxz - myz * myz - mz * mz * mz;
    let a0 = mxz * mxz * myy + myz * myz * mxx - mzz * cov_xy - 2.0 * mxz * myz * mxy
        + mz * mz * cov_xy;
    let a22 = 2.0 * a2;
    let a33 = 3.0 * a3;

    // Newton from x = 0; the Taubin root is the smallest non-negative one.
    let mut x = 0.0;
    let mut y = a0;
    for _ in 0..32 {
        let dy = a1 + x * (a22 + x * a33);
        if dy == 0.0 {
            break;
        }
        let x_new = x - y / dy;
        if !x_new.is_finite() || (x_new - x).abs() <= 1e-14 * x.abs().max(1.0) {
            x = x_new.is_finite().then_some(x_new).unwrap_or(x);
            break;
        }
        let y_new = a0 + x_new * (a1 + x_new * (a2 + x_new * a3));
        if y_new.abs() > y.abs() {
            break;
        }
        x = x_new;
        y = y_new;
    }

    let det = x * x - x * mz + cov_xy;
    if det.abs() <= 1e-14 * mz * mz {
        return Err(FitError::DegenerateCircle(
            "points are collinear or coincident".into(),
        ));
    }
    let cu = (mxz * (myy - x) - myz * mxy) / det / 2.0;
    let cv = (myz * (mxx - x) - mxz * mxy) / det / 2.0;
    let radius = (cu * cu + cv * cv + mz).sqrt();
    Ok((Complex64::new(cu + mean_x, cv + mean_y), radius))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn on_circle(center: Complex64, radius: f64, n: usize, arc: f64) -> Vec<Complex64> {
        (0..n)
            .map(|i| center + Complex64::from_polar(radius, arc * i as f64 / n as f64))
            .collect()
    }

    #[test]
    fn exact_points_recover_exactly() {
        let center = Complex64::new(0.5, 0.0);
        let pts = on_circle(center, 0.25, 100, TAU);
        let (c, r) = circle_fit(&pts).unwrap();
        assert!((c - center).norm() < 1e-12);
        assert!((r - 0.25).abs() < 1e-12);
    }

    #[test]
    fn partial_arc_still_exact() {
        let center = Complex64::new(-1.3, 2.2);
        let pts = on_circle(center, 3.0, 40, 0.8);
        let (c, r) = circle_fit(&pts).unwrap();
        assert!((c - center).norm() < 1e-9);
        assert!((r - 3.0).abs() < 1e-9);
    }

    #[test]
    fn three_points_interpolate() {
        // Circle through (1,0), (0,1), (-1,0): unit circle.
        let pts = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
        ];
        let (c, r) = circle_fit(&pts).unwrap();
        assert!(c.norm() < 1e-12);
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_points_within_tolerance() {
        let center = Complex64::new(0.5, -0.1);
        let radius = 0.25;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Complex64> = (0..100)
                .map(|i| {
                    let angle = TAU * i as f64 / 100.0;
                    center
                        + Complex64::from_polar(radius, angle)
                        + Complex64::new(
                            1e-3 * rng.gen_range(-1.0..1.0),
                            1e-3 * rng.gen_range(-1.0..1.0),
                        )
                })
                .collect();
            let (c, r) = circle_fit(&pts).unwrap();
            assert!((c - center).norm() < 1e-3, "seed {seed}");
            assert!((r - radius).abs() < 1e-3, "seed {seed}");
        }
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let pts: Vec<Complex64> = (0..10)
            .map(|i| Complex64::new(i as f64, 2.0 * i as f64))
            .collect();
        assert!(matches!(
            circle_fit(&pts),
            Err(FitError::DegenerateCircle(_))
        ));
        assert!(circle_fit(&pts[..2]).is_err());
    }
}
