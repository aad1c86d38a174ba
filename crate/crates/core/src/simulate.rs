//! Simulation of the stationary solution and its diagnostics.
//!
//! For `p = 1` and a hyperbolic `A_1 = S diag(Λ1, Λ2) S⁻¹`, write
//! `C_k = S⁻¹ B_k` split into the rows `C1_k`, `C2_k` of the two blocks. The
//! solution is `Y_t = S1 X1_t + S2 X2_t` with
//!
//! ```text
//! X1_t = Σ_{j≥0} φ1_j Z_{t−j},       φ1_j = Σ_{k=0}^{min(j,q)} Λ1^{j−k} C1_k,
//! X2_t = Σ_{n≤q−1} φ2_n Z_{t−n},     φ2_n = −Σ_{k=max(n+1,0)}^{q} Λ2^{n−k} C2_k.
//! ```
//!
//! The inner block is causal, the outer block runs on future noise.
//! Both coefficient families satisfy one-step recursions
//! (`φ1_j = Λ1 φ1_{j−1} + C1_j`, `φ2_n = Λ2⁻¹(φ2_{n+1} − C2_{n+1})`), which
//! is how they are generated.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::laurent::{LaurentCoeffs, RECONSTRUCTION_TOL};
use crate::linalg::{checked_inverse, norm2, vnorm, CMatrix, CVector, C64};
use crate::noise::{Noise, NoisePath, ScaledDraw};
use crate::operator::{companion_lift, ArmaModel, Operator};
use crate::spectral::{hyperbolic_split, SpectralSplit, DEFAULT_N_QUAD};

/// Target for the neglected tail of the truncated series.
pub const TAIL_TOL: f64 = 1e-10;
pub const MAX_TRUNCATION: usize = 200_000;
/// Quantile level reported by the partial-sum probes.
pub const PROBE_QUANTILE: f64 = 0.9;
/// Largest final quantile for which [`plim_probe`] reports convergence.
pub const PROBE_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Theorem1Split,
    MaInfinity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationResult {
    pub path: NoisePath,
    pub truncation_k: usize,
    pub max_residual: f64,
    pub method: Method,
}

impl SimulationResult {
    pub fn t_start(&self) -> i64 {
        self.path.t_start
    }

    pub fn t_end(&self) -> i64 {
        self.path.t_end()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "t_start": self.t_start(),
            "t_end": self.t_end(),
            "method": self.method,
            "truncation_k": self.truncation_k,
            "max_residual": self.max_residual,
            "path": path_json(&self.path),
        })
    }

    /// CSV with columns `t, component_0_re, component_0_im, …`.
    pub fn to_csv(&self) -> String {
        path_csv(&self.path)
    }
}

pub fn path_json(path: &NoisePath) -> Value {
    Value::Array(
        path.values
            .iter()
            .map(|v| Value::Array(v.iter().map(|z| json!([z.re, z.im])).collect()))
            .collect(),
    )
}

pub fn path_csv(path: &NoisePath) -> String {
    let d = path.dim();
    let mut out = String::from("t");
    for i in 0..d {
        out.push_str(&format!(",component_{i}_re,component_{i}_im"));
    }
    out.push('\n');
    for (offset, v) in path.values.iter().enumerate() {
        out.push_str(&(path.t_start + offset as i64).to_string());
        for z in v.iter() {
            out.push_str(&format!(",{:e},{:e}", z.re, z.im));
        }
        out.push('\n');
    }
    out
}

/// Solution coefficients in original coordinates, `Ψ_k = S1 φ1_k + S2 φ2_k` for `−K ≤ k ≤ K`.
#[derive(Clone, Debug)]
pub struct SeriesCoefficients {
    pub k: usize,
    /// `psi[k + K]`.
    pub psi: Vec<CMatrix>,
}

impl SeriesCoefficients {
    pub fn get(&self, k: i64) -> Option<&CMatrix> {
        let idx = k + self.k as i64;
        if idx < 0 {
            return None;
        }
        self.psi.get(idx as usize)
    }

    fn edge_norm(&self) -> f64 {
        norm2(&self.psi[0]).max(norm2(&self.psi[self.psi.len() - 1]))
    }
}

fn require_p1(model: &ArmaModel) -> Result<()> {
    if model.p() != 1 {
        return Err(Error::InvalidArgument(format!(
            "the split series needs p = 1 (got p = {}); lift the model first",
            model.p()
        )));
    }
    Ok(())
}

/// `Ψ_k` for `|k| ≤ k_trunc` from the block recursions.
pub fn series_coefficients(model: &ArmaModel, split: &SpectralSplit, k_trunc: usize) -> Result<SeriesCoefficients> {
    require_p1(model)?;
    let d = model.dim();
    if split.dim() != d {
        return Err(Error::DimensionMismatch { context: "spectral split".into(), expected: d, actual: split.dim() });
    }
    let q = model.q();
    let r = split.inner_dim();
    let s1 = split.s.columns(0, r).into_owned();
    let s2 = split.s.columns(r, d - r).into_owned();
    let c: Vec<CMatrix> = model.ma_ops().iter().map(|b| &split.s_inv * b.matrix()).collect();
    let c1: Vec<CMatrix> = c.iter().map(|m| m.rows(0, r).into_owned()).collect();
    let c2: Vec<CMatrix> = c.iter().map(|m| m.rows(r, d - r).into_owned()).collect();

    let kk = k_trunc as i64;
    let mut psi = vec![CMatrix::zeros(d, d); 2 * k_trunc + 1];

    if r > 0 {
        let mut phi = CMatrix::zeros(r, d);
        for j in 0..=kk {
            phi = &split.lambda1 * phi;
            if (j as usize) <= q {
                phi += &c1[j as usize];
            }
            psi[(j + kk) as usize] += &s1 * &phi;
        }
    }
    if r < d {
        let inv = checked_inverse(&split.lambda2)?;
        let mut phi = CMatrix::zeros(d - r, d);
        let mut n = q as i64 - 1;
        while n >= -kk {
            let next = n + 1;
            let shifted = if (0..=q as i64).contains(&next) { &phi - &c2[next as usize] } else { phi.clone() };
            phi = &inv * shifted;
            if n <= kk {
                psi[(n + kk) as usize] += &s2 * &phi;
            }
            n -= 1;
        }
    }
    Ok(SeriesCoefficients { k: k_trunc, psi })
}

/// Truncation level for the split series.
///
/// Starts from the smallest `K ≥ q` with `ρ^K·‖S‖‖S⁻¹‖·max‖B_k‖ ≤ 1e-10`,
/// `ρ = max(r_inner, r_outer_inv)`, and then keeps growing `K` while the edge
/// coefficients `‖Ψ_{±K}‖/(1 − ρ)` still exceed `1e-10·max(1, max‖Ψ‖)`,
/// which covers transient growth of non-normal blocks.
pub fn truncation_k(model: &ArmaModel, split: &SpectralSplit) -> Result<usize> {
    let rho = split.r_inner.max(split.r_outer_inv);
    let amp = norm2(&split.s)
        * norm2(&split.s_inv)
        * model.ma_ops().iter().map(|b| norm2(b.matrix())).fold(0.0, f64::max);
    let q = model.q();
    let mut k = if rho == 0.0 || amp == 0.0 {
        q + 1
    } else {
        let needed = (TAIL_TOL / amp).ln() / rho.ln();
        (needed.ceil().max(0.0) as usize).max(q + 1)
    };
    loop {
        let coeffs = series_coefficients(model, split, k)?;
        let peak = coeffs.psi.iter().map(norm2).fold(1.0, f64::max);
        if coeffs.edge_norm() / (1.0 - rho) <= TAIL_TOL * peak {
            return Ok(k);
        }
        if k >= MAX_TRUNCATION {
            return Err(Error::QuadratureNonConvergence { residual: coeffs.edge_norm(), n_quad: k });
        }
        k = (k + k / 4 + 1).min(MAX_TRUNCATION);
    }
}

fn convolve(psi: &[CMatrix], k_lo: i64, noise: &NoisePath, t_start: i64, t_end: i64) -> Vec<CVector> {
    let d = psi[0].nrows();
    let active: Vec<(i64, &CMatrix)> = psi
        .iter()
        .enumerate()
        .filter(|(_, m)| m.iter().any(|z| z.re != 0.0 || z.im != 0.0))
        .map(|(i, m)| (k_lo + i as i64, m))
        .collect();
    (t_start..=t_end)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|t| {
            let mut y = CVector::zeros(d);
            for (k, m) in &active {
                y += *m * noise.get(t - k).expect("window checked");
            }
            y
        })
        .collect()
}

/// Truncated split series on `[t_start, t_end]`; needs noise on `[t_start − K, t_end + K]`.
pub fn simulate_theorem1(
    model: &ArmaModel,
    split: &SpectralSplit,
    noise: &NoisePath,
    t_start: i64,
    t_end: i64,
    k: Option<usize>,
) -> Result<SimulationResult> {
    require_p1(model)?;
    if t_end < t_start {
        return Err(Error::InvalidArgument("empty time window".into()));
    }
    if !(split.r_inner < 1.0 && split.r_outer_inv < 1.0) {
        return Err(Error::NotHyperbolic {
            distance: 1.0 - split.r_inner.max(split.r_outer_inv),
            eigenvalue: crate::linalg::c64(split.r_inner.max(split.r_outer_inv), 0.0),
        });
    }
    let k = match k {
        Some(k) => k.max(model.q()),
        None => truncation_k(model, split)?,
    };
    let kk = k as i64;
    noise.require(t_start - kk, t_end + kk)?;
    let coeffs = series_coefficients(model, split, k)?;
    let path = NoisePath::new(t_start, convolve(&coeffs.psi, -kk, noise, t_start, t_end));
    let max_residual = recursion_residual(model, &path, noise)?;
    Ok(SimulationResult { path, truncation_k: k, max_residual, method: Method::Theorem1Split })
}

/// Two-sided convolution `Y_t = Σ_k ψ_k Z_{t−k}`; needs noise on `[t_start − k_max, t_end − k_min]`.
pub fn simulate_ma(
    model: &ArmaModel,
    coeffs: &LaurentCoeffs,
    noise: &NoisePath,
    t_start: i64,
    t_end: i64,
) -> Result<SimulationResult> {
    if t_end < t_start {
        return Err(Error::InvalidArgument("empty time window".into()));
    }
    if !(coeffs.reconstruction_residual <= RECONSTRUCTION_TOL) {
        return Err(Error::QuadratureNonConvergence {
            residual: coeffs.reconstruction_residual,
            n_quad: coeffs.n_quad,
        });
    }
    noise.require(t_start - coeffs.k_max, t_end - coeffs.k_min)?;
    let path = NoisePath::new(t_start, convolve(&coeffs.psi, coeffs.k_min, noise, t_start, t_end));
    let max_residual = recursion_residual(model, &path, noise)?;
    Ok(SimulationResult {
        path,
        truncation_k: coeffs.k_min.unsigned_abs().max(coeffs.k_max.unsigned_abs()) as usize,
        max_residual,
        method: Method::MaInfinity,
    })
}

/// `max_t ‖Y_t − Σ A_i Y_{t−i} − Σ B_k Z_{t−k}‖ / (1 + max_t ‖Y_t‖)` over
/// the times where every term is available.
pub fn recursion_residual(model: &ArmaModel, y: &NoisePath, z: &NoisePath) -> Result<f64> {
    let p = model.p() as i64;
    let q = model.q() as i64;
    let first = y.t_start + p;
    let last = y.t_end();
    if last < first {
        return Err(Error::InsufficientWindow {
            need_start: y.t_start,
            need_end: y.t_start + p,
            have_start: y.t_start,
            have_end: y.t_end(),
        });
    }
    z.require(first - q, last)?;
    let scale = 1.0 + y.values.iter().map(vnorm).fold(0.0, f64::max);
    let worst = (first..=last)
        .map(|t| {
            let mut lhs = y.get(t).expect("in window").clone();
            for (i, a) in model.ar_ops().iter().enumerate() {
                lhs -= a.apply_unchecked(y.get(t - 1 - i as i64).expect("in window"));
            }
            for (k, b) in model.ma_ops().iter().enumerate() {
                lhs -= b.apply_unchecked(z.get(t - k as i64).expect("in window"));
            }
            vnorm(&lhs)
        })
        .fold(0.0, f64::max);
    Ok(worst / scale)
}

/// Split-series simulation for any `p`: models with `p > 1` are simulated
/// through the companion lift and projected back to the first block.
pub fn simulate_split_any(model: &ArmaModel, noise: &NoisePath, t_start: i64, t_end: i64) -> Result<SimulationResult> {
    if model.p() == 1 {
        let split = hyperbolic_split(&model.ar_ops()[0], DEFAULT_N_QUAD)?;
        return simulate_theorem1(model, &split, noise, t_start, t_end, None);
    }
    let lift = companion_lift(model)?;
    let split = hyperbolic_split(&lift.companion, DEFAULT_N_QUAD)?;
    let lifted_noise = NoisePath::new(noise.t_start, noise.values.iter().map(|v| &lift.embedding * v).collect());
    let lifted = simulate_theorem1(&lift.model, &split, &lifted_noise, t_start, t_end, None)?;
    let path = NoisePath::new(t_start, lifted.path.values.iter().map(|v| lift.project(v)).collect());
    let max_residual = recursion_residual(model, &path, noise)?;
    Ok(SimulationResult { path, truncation_k: lifted.truncation_k, max_residual, method: Method::Theorem1Split })
}

/// Causal AR(1) series for heavy-tailed noise, kept in scaled form.
///
/// With `s` the largest log scale of the draws in the window, the noise is
/// stored as `Z̃_t = e^{−s} Z_t` and the solution as `Ỹ_t = e^{−s} Y_t`;
/// the recursion is linear, so the relative residual is unaffected.
#[derive(Clone, Debug)]
pub struct ScaledSimulation {
    pub log_scale: f64,
    pub path: NoisePath,
    pub noise: NoisePath,
    pub max_residual: f64,
}

/// `Y_t = Σ_{j=0}^{k} A^j Z_{t−j}` on `[t_start, t_end]` from draws starting at `draws_start`.
pub fn simulate_causal_scaled(
    op: &Operator,
    draws: &[ScaledDraw],
    draws_start: i64,
    t_start: i64,
    t_end: i64,
    k: usize,
) -> Result<ScaledSimulation> {
    let need_start = t_start - k as i64;
    let have_end = draws_start + draws.len() as i64 - 1;
    if need_start < draws_start || t_end > have_end || t_end < t_start {
        return Err(Error::InsufficientWindow { need_start, need_end: t_end, have_start: draws_start, have_end });
    }
    let log_scale = draws.iter().map(|d| d.log_scale).fold(f64::NEG_INFINITY, f64::max);
    let noise = NoisePath::new(
        draws_start,
        draws.iter().map(|d| &d.direction * C64::new((d.log_scale - log_scale).exp(), 0.0)).collect(),
    );
    let values: Vec<CVector> = (t_start..=t_end)
        .map(|t| {
            let mut acc = CVector::zeros(op.dim());
            for j in (0..=k as i64).rev() {
                acc = op.apply_unchecked(&acc) + noise.get(t - j).expect("window checked");
            }
            acc
        })
        .collect();
    let path = NoisePath::new(t_start, values);
    let max_residual = recursion_residual(&ArmaModel::ar1(op.clone()), &path, &noise)?;
    Ok(ScaledSimulation { log_scale, path, noise, max_residual })
}

/// Empirical quantile (`ceil(level·n)`-th order statistic).
pub fn quantile(values: &[f64], level: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let idx = ((level * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
    v[idx]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbePoint {
    pub n: usize,
    pub quantile: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlimReport {
    pub converges: bool,
    pub dispersion_curve: Vec<ProbePoint>,
}

fn transformed_noise(model: &ArmaModel, noise: &Noise, replicate: u64, count: usize) -> Vec<CVector> {
    // w_j = T Z_{−j} for j = 0..count
    let t = model.moment_transform();
    let window = noise.window(replicate, -(count as i64) + 1, count);
    window.values.iter().rev().map(|z| &t * z).collect()
}

/// `0.9`-quantile over replicates of `‖S_{2n} − S_n‖` for each `n`, where
/// `S_n = Σ_{j=q}^{n−1} A^{j−q} T Z_{−j}` and `T = Σ_k A^{q−k} B_k`.
///
/// Converges when the quantiles are non-increasing and the last one is
/// below [`PROBE_TOL`].
pub fn plim_probe(model: &ArmaModel, noise: &Noise, n_grid: &[usize], replicates: usize) -> Result<PlimReport> {
    require_p1(model)?;
    if noise.dim() != model.dim() {
        return Err(Error::DimensionMismatch { context: "noise".into(), expected: model.dim(), actual: noise.dim() });
    }
    let q = model.q();
    if n_grid.is_empty() || replicates == 0 || n_grid.iter().any(|&n| n < q.max(1)) {
        return Err(Error::InvalidArgument("n_grid must be non-empty with n ≥ max(q, 1), replicates ≥ 1".into()));
    }
    let a = &model.ar_ops()[0];
    let n_max = *n_grid.iter().max().expect("non-empty");
    let per_replicate: Vec<Vec<f64>> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let w = transformed_noise(model, noise, rep, 2 * n_max);
            n_grid
                .iter()
                .map(|&n| {
                    let mut acc = CVector::zeros(model.dim());
                    for j in (n..2 * n).rev() {
                        acc = a.apply_unchecked(&acc) + &w[j];
                    }
                    for _ in 0..(n - q) {
                        acc = a.apply_unchecked(&acc);
                    }
                    vnorm(&acc)
                })
                .collect()
        })
        .collect();
    let dispersion_curve: Vec<ProbePoint> = n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let vals: Vec<f64> = per_replicate.iter().map(|r| r[i]).collect();
            ProbePoint { n, quantile: quantile(&vals, PROBE_QUANTILE) }
        })
        .collect();
    let decreasing = dispersion_curve.windows(2).all(|w| w[1].quantile <= w[0].quantile);
    let last = dispersion_curve.last().expect("non-empty").quantile;
    Ok(PlimReport { converges: decreasing && last < PROBE_TOL, dispersion_curve })
}

/// `0.9`-quantile over replicates of `‖S_n‖` with `S_n = Σ_{j=0}^{n−1} A^j Z_{−j}` (AR(1) part only).
pub fn partial_sum_quantiles(model: &ArmaModel, noise: &Noise, n_grid: &[usize], replicates: usize) -> Result<Vec<ProbePoint>> {
    if n_grid.is_empty() || replicates == 0 {
        return Err(Error::InvalidArgument("n_grid and replicates must be non-empty".into()));
    }
    let a = &model.ar_ops()[0];
    let n_max = *n_grid.iter().max().expect("non-empty");
    let per_replicate: Vec<Vec<f64>> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let window = noise.window(rep, -(n_max as i64) + 1, n_max);
            let z: Vec<&CVector> = window.values.iter().rev().collect();
            n_grid
                .iter()
                .map(|&n| {
                    let mut acc = CVector::zeros(model.dim());
                    for j in (0..n).rev() {
                        acc = a.apply_unchecked(&acc) + z[j];
                    }
                    vnorm(&acc)
                })
                .collect()
        })
        .collect();
    Ok(n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let vals: Vec<f64> = per_replicate.iter().map(|r| r[i]).collect();
            ProbePoint { n, quantile: quantile(&vals, PROBE_QUANTILE) }
        })
        .collect())
}

/// Least-squares slope of `ln quantile` against `ln n`.
pub fn log_log_slope(curve: &[ProbePoint]) -> f64 {
    let pts: Vec<(f64, f64)> = curve.iter().map(|p| ((p.n as f64).ln(), p.quantile.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
