//! Exponential integral and the inverse of Γ on its increasing branch.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Minimizer of Γ on `(0, ∞)`; Γ is increasing on `[GAMMA_ARGMIN, ∞)`.
pub const GAMMA_ARGMIN: f64 = 1.461_632_144_968_362_3;
/// `Γ(GAMMA_ARGMIN)`.
pub const GAMMA_MIN: f64 = 0.885_603_194_410_888_7;

/// `ln E1(x)` for `x > 0`, accurate far into the range where `E1` underflows.
pub fn ln_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 needs a positive argument");
    if x <= 1.0 {
        // E1(x) = −γ − ln x − Σ_{k≥1} (−x)^k / (k·k!)
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        let euler = 0.577_215_664_901_532_9;
        (-euler - x.ln() - sum).ln()
    } else {
        // modified Lentz evaluation of e^x E1(x) = 1/(x + 1 − 1/(x + 3 − 4/(x + 5 − …)))
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() <= 2.0 * f64::EPSILON {
                break;
            }
        }
        -x + h.ln()
    }
}

/// `w ≥ lower` with `ln E1(w) = target`, where `target ≤ ln E1(lower)`.
///
/// `ln E1` is decreasing and convex, so Newton's method started at `lower`
/// increases monotonically to the root.
pub fn inverse_ln_e1(target: f64, lower: f64) -> f64 {
    let mut w = lower;
    let mut l = ln_e1(w);
    if l <= target {
        return lower;
    }
    for _ in 0..200 {
        // d/dw ln E1(w) = −e^{−w} / (w E1(w))
        let slope = -(-w - l).exp() / w;
        let next = w - (l - target) / slope;
        if !(next > w) {
            return w;
        }
        let done = next - w <= 4.0 * f64::EPSILON * next;
        w = next;
        l = ln_e1(w);
        if done || l <= target {
            return w;
        }
    }
    w
}

/// `x ≥ GAMMA_ARGMIN` with `ln Γ(x) = ln_y`, by bisection on `ln Γ`.
pub fn gamma_inverse_ln(ln_y: f64) -> Result<f64> {
    let min = GAMMA_MIN.ln();
    if ln_y.is_nan() || ln_y < min - 1e-15 {
        return Err(Error::BelowRange { value: ln_y.exp(), min: GAMMA_MIN });
    }
    if ln_y == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let mut lo = GAMMA_ARGMIN;
    let mut hi = 2.0 * GAMMA_ARGMIN;
    while ln_gamma(hi) < ln_y {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if ln_gamma(mid) < ln_y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Inverse of Γ restricted to `[GAMMA_ARGMIN, ∞)`.
pub fn gamma_inverse(y: f64) -> Result<f64> {
    if !(y >= GAMMA_MIN * (1.0 - 1e-15)) {
        return Err(Error::BelowRange { value: y, min: GAMMA_MIN });
    }
    gamma_inverse_ln(y.ln().max(GAMMA_MIN.ln()))
}

/// `Γ⁻¹(x ∨ K)` with `K = GAMMA_ARGMIN`, given `ln x`.
pub fn gamma_inverse_clamped_ln(ln_x: f64) -> f64 {
    gamma_inverse_ln(ln_x.max(GAMMA_ARGMIN.ln())).expect("clamped argument is in range")
}
