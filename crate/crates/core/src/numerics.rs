//! Scalar numerics shared across the crate: the Gamma function, binary
//! entropy, adaptive quadrature, bisection and a small non-negative
//! least-squares solver.
//!
//! All entropic quantities in this crate use base-2 logarithms (bits);
//! multiply by ln 2 to convert to nats.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Lanczos coefficients for g = 10.900511 (Pugh's thesis, as used by Boost
/// and statrs). Relative error below 1e-13 for positive real arguments,
/// comfortably inside the 1e-10 budget required on s in (0, 5].
const LANCZOS_G: f64 = 10.900511;
const LANCZOS_COEFFS: [f64; 11] = [
    2.485_740_891_387_535_5e-5,
    1.051_423_785_817_219_7,
    -3.456_870_972_220_162_4,
    4.512_277_094_668_948,
    -2.982_852_253_235_766_4,
    1.056_397_115_771_267_1,
    -1.954_287_731_916_458_7e-1,
    1.709_705_434_044_412_2e-2,
    -5.719_261_174_043_057e-4,
    4.633_994_733_599_057e-6,
    -2.719_949_084_886_077_2e-9,
];

/// Gamma function for real arguments, Lanczos approximation.
///
/// Only positive arguments occur in this crate (Ohmicity parameters and
/// their shifts); negative non-integer arguments go through the reflection
/// formula for completeness.
pub fn gamma_fn(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Γ(x) Γ(1-x) = π / sin(πx)
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma_fn(1.0 - x))
    } else {
        let shifted = x - 1.0;
        let mut sum = LANCZOS_COEFFS[0];
        for (k, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
            sum += c / (shifted + k as f64);
        }
        let base = shifted + LANCZOS_G + 0.5;
        2.0 * (std::f64::consts::E / std::f64::consts::PI).sqrt()
            * (base / std::f64::consts::E).powf(shifted + 0.5)
            * sum
    }
}

/// Binary entropy h₂(p) in bits, with h₂(0) = h₂(1) = 0.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson_rule(a, b, fa, fm, fb);
    simpson_recurse(f, a, b, fa, fm, fb, whole, tol, 50)
}

fn simpson_rule(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson_rule(a, m, fa, flm, fm);
    let right = simpson_rule(m, b, fm, frm, fb);
    let err = left + right - whole;
    if depth == 0 || err.abs() <= 15.0 * tol {
        left + right + err / 15.0
    } else {
        simpson_recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + simpson_recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

/// Bisection root finding on `[lo, hi]`; `f(lo)` and `f(hi)` must bracket a
/// sign change. Returns the midpoint once the bracket is below `xtol`.
pub fn bisect<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, xtol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::OutOfRange(format!(
            "bisection bracket [{lo}, {hi}] does not straddle a root"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < xtol {
            return Ok(mid);
        }
        let fmid = f(mid);
        if fmid == 0.0 {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Lawson-Hanson non-negative least squares: minimizes ‖A w − b‖₂ subject to
/// w ≥ 0. Used by the separable-ensemble searches; problem sizes stay small
/// (17 rows, a few hundred columns).
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut passive: Vec<usize> = Vec::new();
    let mut w = DVector::zeros(n);
    let mut residual = b - a * &w;
    for _ in 0..(3 * n + 30) {
        let gradient = a.transpose() * &residual;
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if !passive.contains(&j) && gradient[j] > 1e-12 {
                if best.map_or(true, |(_, g)| gradient[j] > g) {
                    best = Some((j, gradient[j]));
                }
            }
        }
        let Some((enter, _)) = best else { break };
        passive.push(enter);

        // inner loop: solve on the passive set, clip negatives
        loop {
            let sub = a.select_columns(passive.iter());
            let sol = sub
                .svd(true, true)
                .solve(b, 1e-12)
                .unwrap_or_else(|_| DVector::zeros(passive.len()));
            if sol.iter().all(|&x| x > 0.0) {
                w.fill(0.0);
                for (k, &j) in passive.iter().enumerate() {
                    w[j] = sol[k];
                }
                break;
            }
            // step toward sol until the first coordinate hits zero
            let mut alpha = f64::INFINITY;
            for (k, &j) in passive.iter().enumerate() {
                if sol[k] <= 0.0 {
                    let denom = w[j] - sol[k];
                    if denom > 0.0 {
                        alpha = alpha.min(w[j] / denom);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            for (k, &j) in passive.iter().enumerate() {
                w[j] += alpha * (sol[k] - w[j]);
            }
            let eps = 1e-11;
            passive.retain(|&j| w[j] > eps);
            for j in 0..n {
                if w[j] <= eps {
                    w[j] = 0.0;
                }
            }
            if passive.is_empty() {
                break;
            }
        }
        residual = b - a * &w;
        if residual.norm() < 1e-14 {
            break;
        }
    }
    w
}
