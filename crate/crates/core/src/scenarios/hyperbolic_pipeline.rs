//! End-to-end run on a random hyperbolic ARMA(1, q) model: split, simulate
//! from the split series, Laurent coefficients, MA(∞) simulation, and the
//! cross-checks between them.

use std::f64::consts::PI;

use serde_json::{json, Value};

use super::{Check, Params, Source};
use crate::error::{Error, Result};
use crate::laurent::{laurent_coeffs_auto, unit_circle_check, RECONSTRUCTION_TOL};
use crate::linalg::{c64, checked_inverse, match_spectra, norm2, vnorm, CMatrix, C64};
use crate::noise::{Noise, NoiseKind};
use crate::operator::{ArmaModel, Operator};
use crate::rng::{normal_pair, sub_seed, unit, SlotReader};
use crate::simulate::{series_coefficients, simulate_ma, simulate_theorem1, truncation_k};
use crate::spectral::{hyperbolic_split, DEFAULT_N_QUAD, SPLIT_TOL};

pub(super) fn defaults() -> Value {
    json!({ "d": 6, "inner": 3, "q": 2, "window": 200 })
}

/// Random `A = V diag(λ) V⁻¹` with `inner` eigenvalues of modulus in
/// `[0.2, 0.8]` and the rest in `[1.25, 3]`, `V = I + 0.3·G`, and MA
/// operators `B_0 = I + 0.3·G_0`, `B_k = G_k`, where each `G` has i.i.d.
/// complex Gaussian entries of variance `1/d`. Returns the model and the
/// eigenvalues used.
pub fn random_hyperbolic_model(d: usize, inner: usize, q: usize, seed: u64) -> Result<(ArmaModel, Vec<C64>)> {
    if d == 0 || inner > d {
        return Err(Error::InvalidArgument(format!("need 0 ≤ inner ≤ d and d ≥ 1, got inner = {inner}, d = {d}")));
    }
    let mut reader = SlotReader::new(seed, 0, 0, 0);
    let mut gaussian = |scale: f64| -> CMatrix {
        CMatrix::from_fn(d, d, |_, _| {
            let (a, b) = normal_pair(reader.next_slot());
            c64(a, b) * (scale / (2.0 * d as f64).sqrt())
        })
    };
    let v = CMatrix::identity(d, d) + gaussian(0.3);
    let b: Vec<CMatrix> = (0..=q)
        .map(|k| if k == 0 { CMatrix::identity(d, d) + gaussian(0.3) } else { gaussian(1.0) })
        .collect();
    let mut reader = SlotReader::new(seed, 0, 1, 0);
    let eig: Vec<C64> = (0..d)
        .map(|i| {
            let s = reader.next_slot();
            let r = if i < inner { 0.2 + 0.6 * unit(s[0]) } else { 1.25 + 1.75 * unit(s[0]) };
            C64::from_polar(r, 2.0 * PI * unit(s[1]))
        })
        .collect();
    let a = &v * CMatrix::from_diagonal(&nalgebra::DVector::from_vec(eig.clone())) * checked_inverse(&v)?;
    let model = ArmaModel::new(
        vec![Operator::dense(a)?],
        b.into_iter().map(Operator::dense).collect::<Result<_>>()?,
    )?;
    Ok((model, eig))
}

pub(super) fn run(params: &Params, seed: u64) -> Result<Vec<Check>> {
    let d = params.at_least("d", 1)?;
    let inner = params.usize("inner")?;
    let q = params.usize("q")?;
    let window = params.at_least("window", 2)?;
    let (model, eig) = random_hyperbolic_model(d, inner, q, sub_seed(seed, 0))?;
    let mut checks = Vec::new();

    let split = hyperbolic_split(&model.ar_ops()[0], DEFAULT_N_QUAD)?;
    let diag = split.diagnostics;
    checks.push(Check::new(
        format!("split contract: ranks {inner}/{}, idempotence, commutator and reconstruction residuals", d - inner),
        Source::Identity,
        format!("ranks {inner}/{}, each residual ≤ {SPLIT_TOL:e}", d - inner),
        format!(
            "ranks {}/{}, {:.2e}, {:.2e}, {:.2e}",
            split.inner_dim(),
            split.outer_dim(),
            diag.idempotence,
            diag.commutator,
            diag.reconstruction
        ),
        split.inner_dim() == inner
            && diag.idempotence <= SPLIT_TOL
            && diag.commutator <= SPLIT_TOL
            && diag.reconstruction <= SPLIT_TOL,
    ));
    let block = split.block_eigenvalues()?;
    let mismatch = match_spectra(&block, &eig);
    checks.push(Check::new(
        "block spectra of Λ1 ⊕ Λ2 reproduce the planted eigenvalues",
        Source::Oracle,
        "max distance ≤ 1e-8",
        format!("{mismatch:.3e} (r_inner = {:.4}, r_outer_inv = {:.4})", split.r_inner, split.r_outer_inv),
        mismatch <= 1e-8 && split.r_inner < 1.0 && split.r_outer_inv < 1.0,
    ));

    let circle = unit_circle_check(&model, 256)?;
    checks.push(Check::new(
        "Q(z) is invertible on the unit circle",
        Source::Identity,
        "min singular value > 1e-6",
        format!("{:.4e}", circle.min_sv),
        circle.ok,
    ));

    let k = truncation_k(&model, &split)?;
    let laurent = laurent_coeffs_auto(&model)?;
    checks.push(Check::new(
        "Laurent coefficients reproduce H(z) off the quadrature nodes",
        Source::Identity,
        format!("residual ≤ {RECONSTRUCTION_TOL:e}"),
        format!("{:.3e} (k ∈ [{}, {}], N = {})", laurent.reconstruction_residual, laurent.k_min, laurent.k_max, laurent.n_quad),
        laurent.reconstruction_residual <= RECONSTRUCTION_TOL,
    ));

    let series = series_coefficients(&model, &split, 20.max(k))?;
    let peak = (-20..=20i64).map(|j| norm2(series.get(j).expect("in range"))).fold(1.0, f64::max);
    let gap = (-20..=20i64)
        .map(|j| norm2(&(laurent.get(j).expect("in range") - series.get(j).expect("in range"))))
        .fold(0.0, f64::max)
        / peak;
    checks.push(Check::new(
        "quadrature ψ_k equal the split-series coefficients for |k| ≤ 20",
        Source::Oracle,
        "relative gap ≤ 1e-8",
        format!("{gap:.3e}"),
        gap <= 1e-8,
    ));

    let noise = Noise::new(NoiseKind::ComponentwiseGaussian { sigma: vec![1.0; d] }, sub_seed(seed, 1));
    let reach = (k as i64).max(laurent.k_max).max(-laurent.k_min);
    let t_end = window as i64 - 1;
    let path = noise.window(0, -reach, window + 2 * reach as usize);
    let split_sim = simulate_theorem1(&model, &split, &path, 0, t_end, Some(k))?;
    checks.push(Check::new(
        format!("split-series path over {window} steps solves the ARMA recursion (K = {k})"),
        Source::Identity,
        "relative residual ≤ 1e-10",
        format!("{:.3e}", split_sim.max_residual),
        split_sim.max_residual <= 1e-10,
    ));
    let ma_sim = simulate_ma(&model, &laurent, &path, 0, t_end)?;
    let scale = 1.0 + split_sim.path.values.iter().map(vnorm).fold(0.0, f64::max);
    let agreement = split_sim
        .path
        .values
        .iter()
        .zip(&ma_sim.path.values)
        .map(|(a, b)| vnorm(&(a - b)))
        .fold(0.0, f64::max)
        / scale;
    checks.push(Check::new(
        "split-series and MA(∞) simulations of the same noise path agree",
        Source::Oracle,
        "relative gap ≤ 1e-6",
        format!("{agreement:.3e} (MA residual {:.3e})", ma_sim.max_residual),
        agreement <= 1e-6,
    ));
    Ok(checks)
}
