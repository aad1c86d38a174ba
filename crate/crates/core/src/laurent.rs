//! Transfer function, Laurent (MA(∞)) coefficients and the unit-circle check.
//!
//! `H(z) = (I − zA_1 − … − z^pA_p)^{-1}(B_0 + zB_1 + … + z^qB_q)` is analytic on
//! an annulus around `|z| = 1` when `Q(z) = z^p I − z^{p−1}A_1 − … − A_p` is
//! invertible on the circle. Its Laurent coefficients
//! `ψ_k = (1/2πi)∮ z^{−k−1} H(z) dz` are approximated by the trapezoidal rule
//! `ψ_k ≈ (1/N) Σ_j z_j^{−k} H(z_j)`; the error is aliasing, `Σ_{m≠0} ψ_{k+mN}`.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::{
    c64, checked_solve, complex_to_json, matrix_to_json, min_singular_value, norm2, CMatrix, C64,
};
use crate::operator::ArmaModel;

/// Largest admissible reconstruction residual.
pub const RECONSTRUCTION_TOL: f64 = 1e-6;
/// Tail level targeted by the automatic k-range selection.
pub const AUTO_TAIL_TOL: f64 = 1e-9;
pub const MAX_LAURENT_NODES: usize = 1 << 16;
/// `Q(z)` counts as invertible when its smallest singular value exceeds this.
pub const CIRCLE_SV_TOL: f64 = 1e-6;

fn node(j: usize, n: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / n as f64)
}

/// `H(z)` by one dense solve against the MA polynomial.
pub fn transfer_function(model: &ArmaModel, z: C64) -> Result<CMatrix> {
    checked_solve(&model.ar_polynomial(z), &model.ma_polynomial(z))
}

#[derive(Clone, Debug)]
pub struct LaurentCoeffs {
    pub k_min: i64,
    pub k_max: i64,
    /// `psi[k − k_min]`.
    pub psi: Vec<CMatrix>,
    pub n_quad: usize,
    pub decay_a: f64,
    pub decay_b: f64,
    pub reconstruction_residual: f64,
}

impl LaurentCoeffs {
    pub fn get(&self, k: i64) -> Option<&CMatrix> {
        if k < self.k_min || k > self.k_max {
            None
        } else {
            self.psi.get((k - self.k_min) as usize)
        }
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> {
        self.k_min..=self.k_max
    }

    pub fn norms(&self) -> Vec<f64> {
        self.psi.iter().map(norm2).collect()
    }

    /// `Σ_k z^k ψ_k`.
    pub fn evaluate(&self, z: C64) -> CMatrix {
        let d = self.psi[0].nrows();
        let m = self.psi[0].ncols();
        let mut acc = CMatrix::zeros(d, m);
        let mut zk = z.powi(self.k_min as i32);
        for psi in &self.psi {
            acc += psi * zk;
            zk *= z;
        }
        acc
    }

    /// Envelope prediction `a·b^{min(|k_min|, k_max)}` for the first omitted coefficient.
    pub fn predicted_tail(&self) -> f64 {
        let edge = self.k_min.unsigned_abs().min(self.k_max.unsigned_abs());
        self.decay_a * self.decay_b.powf(edge as f64)
    }

    pub fn to_json(&self) -> Value {
        let records: Vec<Value> = self
            .indices()
            .zip(&self.psi)
            .map(|(k, psi)| json!({"k": k, "psi": matrix_to_json(psi), "norm": norm2(psi)}))
            .collect();
        json!({
            "k_min": self.k_min,
            "k_max": self.k_max,
            "n_quad": self.n_quad,
            "normalization": "psi_k = (1/(2 pi i)) * contour integral of z^(-k-1) H(z) dz over |z| = 1",
            "coefficients": records,
            "decay": {"a": self.decay_a, "b": self.decay_b},
            "reconstruction_residual": self.reconstruction_residual,
        })
    }
}

/// Least-squares fit of `log‖ψ_k‖ ≈ log a + |k| log b` on `|k| ≥ 3`.
///
/// Coefficients below `1e-13·max‖ψ‖` are rounding noise and excluded. The
/// slope gives `b` (clamped into `(0, 1)`, falling back to `0.5` when fewer
/// than two points survive); `a` is then the smallest constant for which the
/// envelope bounds every stored coefficient.
pub fn fit_decay(ks: &[i64], norms: &[f64]) -> (f64, f64) {
    let max_norm = norms.iter().copied().fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = ks
        .iter()
        .zip(norms)
        .filter(|(k, n)| k.unsigned_abs() >= 3 && **n > 1e-13 * max_norm && **n > 0.0)
        .map(|(k, n)| (k.unsigned_abs() as f64, n.ln()))
        .collect();
    let mut b = 0.5;
    if pts.len() >= 2 {
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx > 0.0 {
            b = (sxy / sxx).exp();
        }
    }
    let b = b.clamp(1e-300, 1.0 - 1e-12);
    let a = ks
        .iter()
        .zip(norms)
        .map(|(k, n)| n / b.powf(k.unsigned_abs() as f64))
        .fold(f64::MIN_POSITIVE, f64::max);
    (a, b)
}

/// Transfer function sampled on `n` equispaced nodes.
fn sample_transfer(model: &ArmaModel, n: usize) -> Result<Vec<CMatrix>> {
    (0..n)
        .into_par_iter()
        .map(|j| transfer_function(model, node(j, n)))
        .collect()
}

fn coefficients_from_samples(samples: &[CMatrix], k_min: i64, k_max: i64) -> Vec<CMatrix> {
    let n = samples.len();
    let scale = c64(1.0 / n as f64, 0.0);
    (k_min..=k_max)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|k| {
            let (rows, cols) = samples[0].shape();
            let mut acc = CMatrix::zeros(rows, cols);
            for (j, h) in samples.iter().enumerate() {
                // z_j^{-k} = z_{(-k j) mod n}, exact root of unity index
                let idx = (-(k as i128) * j as i128).rem_euclid(n as i128) as usize;
                acc += h * node(idx, n);
            }
            acc * scale
        })
        .collect()
}

/// Worst `‖Σ_k z^k ψ_k − H(z)‖` over 64 points of the circle that avoid the quadrature nodes.
fn reconstruction_residual(model: &ArmaModel, coeffs: &LaurentCoeffs) -> Result<f64> {
    let m = 64;
    let worst = (0..m)
        .map(|j| {
            let z = C64::from_polar(
                1.0,
                2.0 * std::f64::consts::PI * (j as f64 + 0.3819660112501051) / m as f64,
            );
            let h = transfer_function(model, z)?;
            Ok(norm2(&(coeffs.evaluate(z) - h)))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(worst)
}

fn compute(model: &ArmaModel, k_min: i64, k_max: i64, n_quad: usize) -> Result<LaurentCoeffs> {
    let samples = sample_transfer(model, n_quad)?;
    let psi = coefficients_from_samples(&samples, k_min, k_max);
    let ks: Vec<i64> = (k_min..=k_max).collect();
    let norms: Vec<f64> = psi.iter().map(norm2).collect();
    let (decay_a, decay_b) = fit_decay(&ks, &norms);
    let mut coeffs = LaurentCoeffs {
        k_min,
        k_max,
        psi,
        n_quad,
        decay_a,
        decay_b,
        reconstruction_residual: f64::NAN,
    };
    coeffs.reconstruction_residual = reconstruction_residual(model, &coeffs)?;
    Ok(coeffs)
}

/// Laurent coefficients `ψ_k` for `k_min ≤ k ≤ k_max`.
///
/// Doubles `n_quad` while the reconstruction residual exceeds
/// [`RECONSTRUCTION_TOL`]; a residual that survives doubling means the index
/// range is too short for the decay of `H`, reported as non-convergence.
pub fn laurent_coeffs(model: &ArmaModel, k_min: i64, k_max: i64, n_quad: usize) -> Result<LaurentCoeffs> {
    let span = k_max.checked_sub(k_min).unwrap_or(i64::MAX);
    if k_min > 0 || k_max < 0 || (n_quad as i128) <= 2 * span as i128 {
        return Err(Error::InvalidRange { k_min, k_max, n_quad });
    }
    let circle = unit_circle_check(model, n_quad.max(64))?;
    if !circle.ok {
        return Err(Error::NotHyperbolic { distance: circle.min_sv, eigenvalue: circle.worst_z });
    }
    let mut n = n_quad;
    loop {
        let coeffs = compute(model, k_min, k_max, n)?;
        if coeffs.reconstruction_residual <= RECONSTRUCTION_TOL {
            return Ok(coeffs);
        }
        if 2 * n > MAX_LAURENT_NODES {
            return Err(Error::QuadratureNonConvergence {
                residual: coeffs.reconstruction_residual,
                n_quad: n,
            });
        }
        n *= 2;
    }
}

/// Symmetric index range grown until the fitted envelope predicts a tail
/// below [`AUTO_TAIL_TOL`].
pub fn laurent_coeffs_auto(model: &ArmaModel) -> Result<LaurentCoeffs> {
    let mut half = 16i64;
    loop {
        let n_quad = (4 * half as usize + 1).next_power_of_two().max(256);
        let circle = unit_circle_check(model, n_quad)?;
        if !circle.ok {
            return Err(Error::NotHyperbolic { distance: circle.min_sv, eigenvalue: circle.worst_z });
        }
        let coeffs = compute(model, -half, half, n_quad)?;
        if coeffs.predicted_tail() <= AUTO_TAIL_TOL && coeffs.reconstruction_residual <= RECONSTRUCTION_TOL {
            return Ok(coeffs);
        }
        if 4 * half as usize > MAX_LAURENT_NODES {
            return Err(Error::QuadratureNonConvergence {
                residual: coeffs.reconstruction_residual.max(coeffs.predicted_tail()),
                n_quad,
            });
        }
        half *= 2;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircleCheck {
    pub ok: bool,
    pub min_sv: f64,
    pub worst_z: C64,
    /// Smallest singular value of `Q(0) = −A_p`.
    pub q0_min_sv: f64,
    pub q0_invertible: bool,
}

impl Serialize for CircleCheck {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        json!({
            "ok": self.ok,
            "min_sv": self.min_sv,
            "worst_z": complex_to_json(self.worst_z),
            "q0_min_sv": self.q0_min_sv,
            "q0_invertible": self.q0_invertible,
        })
        .serialize(s)
    }
}

/// Smallest singular value of `Q(z)` over `grid` equispaced points of the unit circle.
pub fn unit_circle_check(model: &ArmaModel, grid: usize) -> Result<CircleCheck> {
    if grid < 64 {
        return Err(Error::InvalidArgument(format!("grid must be at least 64, got {grid}")));
    }
    let svs: Vec<f64> = (0..grid)
        .into_par_iter()
        .map(|j| min_singular_value(&model.q_polynomial(node(j, grid))))
        .collect();
    let (worst, min_sv) = svs
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("grid is non-empty");
    let q0_min_sv = min_singular_value(&model.q_polynomial(c64(0.0, 0.0)));
    Ok(CircleCheck {
        ok: min_sv > CIRCLE_SV_TOL,
        min_sv,
        worst_z: node(worst, grid),
        q0_min_sv,
        q0_invertible: q0_min_sv > CIRCLE_SV_TOL,
    })
}
