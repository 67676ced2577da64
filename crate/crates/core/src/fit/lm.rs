//! A compact Levenberg–Marquardt minimizer for small dense problems.
//!
//! Built for the handful-of-parameters fits in this crate: the Jacobian is
//! supplied as a closure, the normal equations are solved by Gaussian
//! elimination with partial pivoting, and Marquardt column scaling keeps
//! wildly different parameter magnitudes (hertz next to seconds) well
//! conditioned.

/// Result of a minimization.
pub struct LmResult {
    pub params: Vec<f64>,
    pub chi2: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Standard errors, sqrt(diag (J^T J)^-1 * chi2 / (n - p)), when the
    /// normal matrix is invertible.
    pub stderr: Option<Vec<f64>>,
}

/// Minimizes the sum of squared residuals.
///
/// `residuals(p, out)` writes the residual vector; `jacobian(p, out)` writes
/// the row-major n-by-p Jacobian of the residuals.
pub fn levenberg_marquardt(
    initial: &[f64],
    n_residuals: usize,
    residuals: impl Fn(&[f64], &mut [f64]),
    jacobian: impl Fn(&[f64], &mut [f64]),
    max_iterations: usize,
) -> LmResult {
    let p = initial.len();
    let mut params = initial.to_vec();
    let mut r = vec![0.0; n_residuals];
    let mut j = vec![0.0; n_residuals * p];
    let mut r_trial = vec![0.0; n_residuals];

    residuals(&params, &mut r);
    let mut chi2: f64 = r.iter().map(|v| v * v).sum();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..max_iterations {
        iterations += 1;
        jacobian(&params, &mut j);

        // Normal matrix and gradient.
        let mut jtj = vec![0.0; p * p];
        let mut jtr = vec![0.0; p];
        for row in 0..n_residuals {
            let jr = &j[row * p..(row + 1) * p];
            for a in 0..p {
                jtr[a] += jr[a] * r[row];
                for b in a..p {
                    jtj[a * p + b] += jr[a] * jr[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                jtj[a * p + b] = jtj[b * p + a];
            }
        }

        // Marquardt scaling: lambda multiplies the diagonal itself, so the
        // step shrinks along stiff directions first.
        let mut improved = false;
        for _ in 0..30 {
            let mut m = jtj.clone();
            for a in 0..p {
                m[a * p + a] += lambda * jtj[a * p + a].max(1e-300);
            }
            let rhs: Vec<f64> = jtr.iter().map(|v| -v).collect();
            let Some(step) = solve(&mut m, &rhs, p) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = params.iter().zip(&step).map(|(a, s)| a + s).collect();
            residuals(&trial, &mut r_trial);
            let chi2_trial: f64 = r_trial.iter().map(|v| v * v).sum();
            if chi2_trial.is_finite() && chi2_trial < chi2 {
                let rel_drop = (chi2 - chi2_trial) / chi2.max(1e-300);
                let step_size = step
                    .iter()
                    .zip(&params)
                    .map(|(s, a)| s.abs() / a.abs().max(1.0))
                    .fold(0.0f64, f64::max);
                params = trial;
                std::mem::swap(&mut r, &mut r_trial);
                chi2 = chi2_trial;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                // Callers scale parameters to order one, so a vanishing
                // step means machine precision even when chi2 heads for
                // exactly zero and the relative test cannot fire.
                if rel_drop < 1e-12 || step_size < 1e-12 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
        if !improved {
            // No downhill step at any damping: at a (possibly machine-
            // precision) minimum.
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }

    // Covariance from the final unscaled normal matrix.
    let stderr = (n_residuals > p).then(|| {
        jacobian(&params, &mut j);
        let mut jtj = vec![0.0; p * p];
        for row in 0..n_residuals {
            let jr = &j[row * p..(row + 1) * p];
            for a in 0..p {
                for b in 0..p {
                    jtj[a * p + b] += jr[a] * jr[b];
                }
            }
        }
        let sigma2 = chi2 / (n_residuals - p) as f64;
        invert_diag(&jtj, p).map(|diag| {
            diag.iter()
                .map(|v| (v.max(0.0) * sigma2).sqrt())
                .collect::<Vec<f64>>()
        })
    });

    LmResult {
        params,
        chi2,
        iterations,
        converged,
        stderr: stderr.flatten(),
    }
}

/// Gaussian elimination with partial pivoting; returns None when singular.
fn solve(m: &mut [f64], rhs: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut x = rhs.to_vec();
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if m[row * n + col].abs() > m[pivot * n + col].abs() {
                pivot = row;
            }
        }
        if m[pivot * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            x.swap(col, pivot);
        }
        let inv = 1.0 / m[col * n + col];
        for row in col + 1..n {
            let factor = m[row * n + col] * inv;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[row * n + k] -= factor * m[col * n + k];
            }
            x[row] -= factor * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut v = x[col];
        for k in col + 1..n {
            v -= m[col * n + k] * x[k];
        }
        x[col] = v / m[col * n + col];
    }
    Some(x)
}

/// Diagonal of the inverse of a symmetric positive matrix, by solving
/// against unit vectors.
fn invert_diag(m: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut diag = Vec::with_capacity(n);
    for i in 0..n {
        let mut work = m.to_vec();
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let col = solve(&mut work, &e, n)?;
        diag.push(col[i]);
    }
    Some(diag)
}
