//! Discretized Volterra operator `(Af)(s) = ∫_0^s f` on `m` grid points.
//!
//! The sup-norm of `A^n` is attained on the constant function 1, at the
//! right endpoint. For noise `Z_t = X_t·1` the series increments and the
//! evaluation at 1 are therefore scalar sums `Σ X_{t−n}·(A^n 1)(1)`, computed
//! here in log space. A noise with a log⁺ moment but no Γ⁻¹ moment does not
//! exist (`Γ⁻¹(x) ≲ ln x`), so sharpness is shown with pareto_exp noise,
//! which lacks both.

use rayon::prelude::*;
use serde_json::{json, Value};
use statrs::function::gamma::ln_gamma;

use super::{fmt_list, frequency_check, log_sum_exp, rel_err, Check, Params, Source};
use crate::error::{Error, Result};
use crate::linalg::{c64, CVector};
use crate::noise::{gamma_tail_min_cutoff, Noise};
use crate::operator::{Operator, VolterraRule};
use crate::rng::sub_seed;
use crate::simulate::{quantile, simulate_causal_scaled};
use crate::special::{gamma_inverse_clamped_ln, ln_e1};

pub(super) fn defaults() -> Value {
    json!({
        "m": 512,
        "rule": "adams_bashforth2",
        "replicates": 1000,
        "sharp_replicates": 20_000,
        "paths": 4,
        "path_window": 16,
    })
}

/// Composite Simpson rule on `[a, b]` with `2n` panels.
fn simpson(f: impl Fn(f64) -> f64 + Sync, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / (2 * n) as f64;
    let inner: f64 = (1..2 * n)
        .into_par_iter()
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

pub(super) fn run(params: &Params, seed: u64) -> Result<Vec<Check>> {
    let m = params.at_least("m", 16)?;
    let rule: VolterraRule = serde_json::from_value(json!(params.string("rule")?))
        .map_err(|_| Error::InvalidArgument("rule must be left_endpoint or adams_bashforth2".into()))?;
    let replicates = params.at_least("replicates", 100)?;
    let sharp_replicates = params.at_least("sharp_replicates", 100)?;
    let paths = params.at_least("paths", 1)?;
    let path_window = params.at_least("path_window", 2)?;
    let a = Operator::volterra(m, rule);
    let mut checks = Vec::new();

    let norms: Vec<f64> = (1..=6).map(|n| a.structured_norm(n)).collect();
    let closed: Vec<f64> = (1..=6).map(|n| 1.0 / (1..=n).product::<usize>() as f64).collect();
    let worst = norms.iter().zip(&closed).map(|(o, e)| rel_err(*o, *e)).fold(0.0, f64::max);
    checks.push(Check::new(
        format!("sup-norm ‖A^n‖ within 2% of 1/n! for n = 1..6 (m = {m})"),
        Source::ClosedForm,
        fmt_list(&closed),
        format!("{} (worst relative error {worst:.3e})", fmt_list(&norms)),
        worst <= 0.02,
    ));

    let radius = a.eigenvalues()?.iter().map(|z| z.norm()).fold(0.0, f64::max);
    checks.push(Check::new(
        "strictly lower triangular: spectral radius 0",
        Source::Identity,
        "0",
        format!("{radius}"),
        radius == 0.0,
    ));

    // gamma_inv_tail: W = ln ln X has density e^{−w}/(w E1(w1)) on [w1, ∞).
    // In s = ln w the moments are ∫ g(e^{e^s}) e^{−e^s} / E1(w1) ds.
    let x1 = gamma_tail_min_cutoff();
    let w1 = x1.ln().ln();
    let ln_norm = ln_e1(w1);
    let density_ds = |s: f64| (-(s.exp()) - ln_norm).exp();
    let gamma_part = |w_max: f64| {
        simpson(|s| gamma_inverse_clamped_ln(s.exp().exp()) * density_ds(s), w1.ln(), w_max.ln(), 4000)
    };
    // the integrand in w behaves like c/w², so the tail past w_max is about w_max·integrand(w_max)
    let tail = |w_max: f64| gamma_inverse_clamped_ln(w_max.exp()) * (-w_max - ln_norm).exp();
    let (g1, g2) = (gamma_part(350.0), gamma_part(700.0));
    let (e1, e2) = (g1 + tail(350.0), g2 + tail(700.0));
    checks.push(Check::new(
        "E Γ⁻¹(‖Z‖ ∨ K) is finite for gamma_inv_tail noise: tail-corrected quadrature to w = 350 and w = 700 agrees within 2%",
        Source::Oracle,
        format!("{e2:.5}"),
        format!("{e1:.5}"),
        rel_err(e1, e2) <= 0.02,
    ));
    let log_part = |w_max: f64| simpson(|s| s.exp().exp() * density_ds(s), w1.ln(), w_max.ln(), 4000);
    let (l1, l2) = (log_part(350.0), log_part(700.0));
    let closed_log = |w_max: f64| (w_max / w1).ln() / ln_norm.exp();
    checks.push(Check::new(
        "E log⁺‖Z‖ is infinite for gamma_inv_tail noise: partial integrals equal ln(w/w1)/E1(w1), unbounded in w",
        Source::Oracle,
        format!("[{:.5}, {:.5}]", closed_log(350.0), closed_log(700.0)),
        format!("[{l1:.5}, {l2:.5}]"),
        rel_err(l1, closed_log(350.0)) <= 1e-6 && rel_err(l2, closed_log(700.0)) <= 1e-6,
    ));

    let direction = CVector::from_element(m, c64(1.0 / (m as f64).sqrt(), 0.0));
    let noise = Noise::gamma_inv_tail(direction.clone(), x1, sub_seed(seed, 0));

    let k = m - 1;
    let residuals: Vec<f64> = (0..paths as u64)
        .into_par_iter()
        .map(|rep| {
            let start = -(k as i64);
            let draws = noise.window_scaled(rep, start, k + path_window);
            simulate_causal_scaled(&a, &draws, start, 0, path_window as i64 - 1, k).map(|s| s.max_residual)
        })
        .collect::<Result<_>>()?;
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    checks.push(Check::new(
        format!("{paths} scaled paths of the full series (A^{m} = 0) solve Y_t = A Y_{{t−1}} + Z_t"),
        Source::Identity,
        "relative residual ≤ 1e-10",
        format!("{worst:.3e}"),
        worst <= 1e-10,
    ));

    // ln ‖S_{2n} − S_n‖_∞ = ln Σ_{j=n}^{2n−1} X_{−j}/j! − ½ ln m with the continuum norms 1/j!;
    // the m-point grid is nilpotent of order m and cannot represent j ≥ m
    let grid = [256usize, 512, 1024, 2048];
    let n_max = *grid.last().expect("non-empty");
    let log_c: Vec<f64> = (0..2 * n_max).map(|j| -ln_gamma(j as f64 + 1.0)).collect();
    let half_ln_m = 0.5 * (m as f64).ln();
    let increments: Vec<Vec<f64>> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let draws = noise.window_scaled(rep, -(2 * n_max as i64) + 1, 2 * n_max);
            grid.iter()
                .map(|&n| {
                    let terms: Vec<f64> =
                        (n..2 * n).map(|j| draws[2 * n_max - 1 - j].log_scale + log_c[j]).collect();
                    log_sum_exp(&terms) - half_ln_m
                })
                .collect()
        })
        .collect();
    let curve: Vec<f64> = (0..grid.len())
        .map(|i| quantile(&increments.iter().map(|r| r[i]).collect::<Vec<_>>(), 0.9))
        .collect();
    let decreasing = curve.windows(2).all(|w| w[1] < w[0]);
    let last = *curve.last().expect("non-empty");
    checks.push(Check::new(
        "gamma_inv_tail noise: 0.9-quantile of ln‖S_{2n} − S_n‖_∞ over n = 2^8..2^11 decreases strictly to below ln 1e-3",
        Source::Oracle,
        "strictly decreasing, last < −6.908",
        fmt_list(&curve),
        decreasing && last < (1e-3f64).ln(),
    ));

    // sharpness: evaluation at 1 of the n-th term is e^{P}·(A^n 1)(1) > 1 iff P > −ln (A^n 1)(1)
    let sharp = Noise::pareto_exp(direction, 1, sub_seed(seed, 1));
    let levels = 24.min(m - 1);
    let log_norms: Vec<f64> = (0..=levels).map(|n| a.log_structured_norm(n)).collect();
    let p: Vec<f64> = log_norms.iter().map(|l| (1.0 / -l).clamp(0.0, 1.0)).collect();
    let p: Vec<f64> = p.iter().enumerate().map(|(n, v)| if n == 0 { 1.0 } else { *v }).collect();
    let hits: Vec<Vec<bool>> = (0..sharp_replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let draws = sharp.window_scaled(rep, -(levels as i64), levels + 1);
            (0..=levels).map(|n| draws[levels - n].log_scale + log_norms[n] > 0.0).collect()
        })
        .collect();
    let mut freqs = Vec::new();
    let mut ok = true;
    for n in 2..=levels {
        let (f, good) = frequency_check(hits.iter().filter(|h| h[n]).count(), sharp_replicates, p[n]);
        freqs.push(f);
        ok &= good;
    }
    checks.push(Check::new(
        format!("pareto_exp noise: P(e^P (A^n 1)(1) > 1) = 1/(−ln (A^n 1)(1)) ≈ 1/ln n! for n = 2..{levels} (4 binomial SE)"),
        Source::Oracle,
        fmt_list(&p[2..]),
        fmt_list(&freqs),
        ok,
    ));
    let counts: Vec<f64> = hits.iter().map(|h| h[1..].iter().filter(|x| **x).count() as f64).collect();
    let nr = sharp_replicates as f64;
    let mean = counts.iter().sum::<f64>() / nr;
    let se = (counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (nr - 1.0) / nr).sqrt();
    let expected: f64 = p[1..].iter().sum();
    checks.push(Check::new(
        format!("mean number of terms above 1 in Σ_{{n≤{levels}}} Z_{{t−n}}(A^n 1)(1) matches Σ 1/ln n!, a divergent Borel–Cantelli sum"),
        Source::Oracle,
        format!("{expected:.4}"),
        format!("{mean:.4}"),
        (mean - expected).abs() <= 4.0 * se,
    ));

    // E Γ⁻¹(e^P ∨ K) = ∫ Γ⁻¹(e^{e^u}) e^{−u} du ≥ ∫ du/u over each doubling of u
    let edges = [4.0f64, 8.0, 16.0, 32.0, 64.0, 128.0].map(|d| d * std::f64::consts::LN_10);
    // in s = ln u the integrand is Γ⁻¹(e^{e^{e^s}})·e^{s − e^s}
    let pieces: Vec<f64> = edges
        .windows(2)
        .map(|w| simpson(|s| gamma_inverse_clamped_ln(s.exp().exp()) * (s - s.exp()).exp(), w[0].ln(), w[1].ln(), 2000))
        .collect();
    let floor = std::f64::consts::LN_2;
    checks.push(Check::new(
        "pareto_exp noise has no Γ⁻¹ moment: ∫ Γ⁻¹(e^p) p^{−2} dp over p ∈ [10^a, 10^{2a}] is at least ln 2 for each a = 4, …, 64",
        Source::Oracle,
        format!("each ≥ {floor:.5}"),
        fmt_list(&pieces),
        pieces.iter().all(|v| *v >= floor),
    ));
    Ok(checks)
}
