//! Shared numerics: the complete elliptic integral of the first kind and
//! small bracketing root-finding / line-search helpers.
//!
//! Everything here is deterministic and allocation-free; the physics modules
//! build on these rather than pulling in a solver dependency.

/// Complete elliptic integral of the first kind K(k), modulus convention.
///
/// Computed by the arithmetic-geometric mean iteration,
/// K(k) = pi / (2 agm(1, k')), terminating when successive means agree to
/// 1e-15 relative. Accurate to better than 1e-14 for k in [0, 1).
///
/// Note the argument is the modulus k, not the parameter m = k^2
/// (`scipy.special.ellipk` takes m).
pub fn ellipk(k: f64) -> f64 {
    assert!(
        (0.0..1.0).contains(&k),
        "ellipk requires 0 <= k < 1, got {k}"
    );
    let k_prime = ((1.0 - k) * (1.0 + k)).sqrt();
    std::f64::consts::PI / (2.0 * agm(1.0, k_prime))
}

/// Ratio K(k')/K(k) of complete elliptic integrals of complementary
/// moduli, k' = sqrt(1 - k^2).
///
/// Uses K(x) = pi / (2 agm(1, x')) on both sides, so the complement is
/// never squared: the ratio stays accurate out to k = 1e-9 or 1 - 1e-12,
/// where forming k' directly would round to 1.
pub fn ellipk_ratio(k: f64) -> f64 {
    assert!((0.0..1.0).contains(&k) && k > 0.0, "ellipk_ratio needs 0 < k < 1, got {k}");
    let k_prime = ((1.0 - k) * (1.0 + k)).sqrt();
    agm(1.0, k_prime) / agm(1.0, k)
}

/// Arithmetic-geometric mean of two non-negative numbers.
fn agm(a0: f64, b0: f64) -> f64 {
    let (mut a, mut b) = (a0, b0);
    for _ in 0..64 {
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        a = an;
        b = bn;
        if (a - b).abs() <= 1e-15 * a {
            break;
        }
    }
    0.5 * (a + b)
}

/// Refines a bracketed sign change of `f` to an interval of width `tol`
/// by bisection. Requires f(lo) and f(hi) to have opposite signs.
///
/// Converges to a root, or to a jump discontinuity that crosses zero, which
/// is exactly the behaviour the admittance scans rely on near tangent poles.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut f_lo = f(lo);
    debug_assert!(f_lo * f(hi) <= 0.0, "bisect requires a sign change");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol {
            return mid;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_lo * f_mid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    0.5 * (lo + hi)
}

/// Scans `[lo, hi]` on `n` uniform steps and returns the brackets where `f`
/// changes sign, each refined by bisection to `tol`. `filter` receives the
/// bracket endpoint values and can reject crossings of the wrong direction
/// (e.g. pole jumps in a tangent).
pub fn scan_sign_changes<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    n: usize,
    tol: f64,
    filter: impl Fn(f64, f64) -> bool,
) -> Vec<f64> {
    let mut roots = Vec::new();
    let step = (hi - lo) / n as f64;
    let mut x_prev = lo;
    let mut f_prev = f(lo);
    for i in 1..=n {
        let x = lo + step * i as f64;
        let fx = f(x);
        if f_prev.is_finite() && fx.is_finite() && f_prev * fx < 0.0 && filter(f_prev, fx) {
            roots.push(bisect(&f, x_prev, x, tol));
        }
        x_prev = x;
        f_prev = fx;
    }
    roots
}

/// Minimizes a smooth single-valley function by golden-section search after
/// expanding the initial bracket `[a, b]` until the interior is lowest.
pub fn minimize_scalar<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    // Expand until the midpoint beats both ends (or give up and keep [a,b]).
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if f(m) <= f(a).min(f(b)) {
            break;
        }
        let w = b - a;
        a -= w;
        b += w;
    }
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two points");
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + step * i as f64).collect()
}
