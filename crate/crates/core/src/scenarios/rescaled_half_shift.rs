//! Right shift scaled by 1/2. On the truncation the operator is nilpotent of
//! order `d`, and the left inverse `2·(backward shift)` only holds up to the
//! last coordinate. Necessity of the log⁺ moment is shown on the components
//! `Y^{(j)}_t = 2^{−j} Z^{(0)}_{t−j}` for noise along `e_0`.

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde_json::{json, Value};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{fmt_list, frequency_check, rel_err, Check, Params, Source};
use crate::error::Result;
use crate::linalg::{c64, norm2, CMatrix, CVector};
use crate::noise::Noise;
use crate::operator::Operator;
use crate::rng::sub_seed;

pub(super) fn defaults() -> Value {
    json!({ "d": 16, "replicates": 20_000 })
}

struct Counts {
    freqs: Vec<f64>,
    ok: bool,
    mean: f64,
    se: f64,
}

/// Exceedances of `|2^{−j} Z^{(0)}_{t−j}| > 1` per replicate, against the
/// per-level probabilities `p[j]`.
fn exceedances(noise: &Noise, d: usize, replicates: usize, p: &[f64]) -> Counts {
    let hits: Vec<Vec<bool>> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let draws = noise.window_scaled(rep, -(d as i64) + 1, d);
            (0..d)
                .map(|j| {
                    let d0 = &draws[d - 1 - j];
                    d0.log_scale + d0.direction[0].norm().ln() - j as f64 * LN_2 > 0.0
                })
                .collect()
        })
        .collect();
    let mut freqs = Vec::new();
    let mut ok = true;
    for j in 1..d {
        let (f, good) = frequency_check(hits.iter().filter(|h| h[j]).count(), replicates, p[j]);
        freqs.push(f);
        ok &= good;
    }
    let counts: Vec<f64> = hits.iter().map(|h| h[1..].iter().filter(|x| **x).count() as f64).collect();
    let n = replicates as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Counts { freqs, ok, mean, se: (var / n).sqrt() }
}

pub(super) fn run(params: &Params, seed: u64) -> Result<Vec<Check>> {
    let d = params.at_least("d", 4)?;
    let replicates = params.at_least("replicates", 100)?;
    let a = Operator::scaled_unilateral_shift(d, c64(0.5, 0.0));
    let mut checks = Vec::new();

    let norms: Vec<f64> = (0..d).map(|n| a.power_norm(n)).collect::<Result<_>>()?;
    let closed: Vec<f64> = (0..d).map(|n| 0.5f64.powi(n as i32)).collect();
    let worst = norms.iter().zip(&closed).map(|(o, e)| rel_err(*o, *e)).fold(0.0, f64::max);
    checks.push(Check::new(
        format!("‖A^n‖ = 2^{{−n}} for n = 0..{}", d - 1),
        Source::ClosedForm,
        fmt_list(&closed),
        fmt_list(&norms),
        worst <= 1e-12,
    ));
    let top = a.power_norm(d)?;
    checks.push(Check::new(
        format!("the truncation is nilpotent: A^{d} = 0"),
        Source::Identity,
        "0",
        format!("{top}"),
        top == 0.0,
    ));

    let left = CMatrix::from_fn(d, d, |i, j| if j == i + 1 { c64(2.0, 0.0) } else { c64(0.0, 0.0) });
    let mut target = CMatrix::identity(d, d);
    target[(d - 1, d - 1)] = c64(0.0, 0.0);
    let defect = norm2(&(&left * a.matrix() - &target));
    checks.push(Check::new(
        "left inverse 2·(x_1, x_2, …) gives L·A = I − e_{d−1}e_{d−1}ᵀ on the truncation",
        Source::Identity,
        "0",
        format!("{defect:.3e}"),
        defect == 0.0,
    ));

    let mut e0 = CVector::zeros(d);
    e0[0] = c64(1.0, 0.0);

    // no log⁺ moment: P(2^{−j} e^P > 1) = P(P > j ln 2) = min(1, 1/(j ln 2))
    let pareto = Noise::pareto_exp(e0.clone(), 1, sub_seed(seed, 0));
    let p: Vec<f64> = (0..d).map(|j| (1.0 / (j as f64 * LN_2)).min(1.0)).collect();
    let c = exceedances(&pareto, d, replicates, &p);
    checks.push(Check::new(
        "pareto_exp noise along e_0: P(|Y^{(j)}_t| > 1) = 1/(j ln 2) for j = 2..d−1 (4 binomial SE)",
        Source::Oracle,
        fmt_list(&p[1..]),
        fmt_list(&c.freqs),
        c.ok,
    ));
    let sum: f64 = p[1..].iter().sum();
    checks.push(Check::new(
        "mean count of components above 1 matches Σ_j 1/(j ln 2), which grows like log₂ d: not in ℓ² as d → ∞",
        Source::Oracle,
        format!("{sum:.4}"),
        format!("{:.4}", c.mean),
        (c.mean - sum).abs() <= 4.0 * c.se,
    ));

    // with a log⁺ moment the Borel–Cantelli sum is finite
    let mut sigma = vec![0.0; d];
    sigma[0] = 1.0;
    let gauss = Noise::gaussian(sigma, sub_seed(seed, 1));
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p: Vec<f64> = (0..d).map(|j| 2.0 * normal.sf(2f64.powi(j as i32))).collect();
    let c = exceedances(&gauss, d, replicates, &p);
    let sum: f64 = p[1..].iter().sum();
    checks.push(Check::new(
        "Gaussian noise along e_0: mean count of components above 1 matches the finite sum Σ_j P(|N| > 2^j)",
        Source::Oracle,
        format!("{sum:.4e}"),
        format!("{:.4e}", c.mean),
        c.ok && (c.mean - sum).abs() <= 4.0 * c.se.max(1.0 / replicates as f64),
    ));
    Ok(checks)
}
