//! Isometric AR operator. The truncated unilateral shift is nilpotent, so
//! the isometry is realized by the circular shift, which is unitary.
//!
//! For Gaussian noise `S_n = Σ_{j<n} A^j Z_{−j}` is Gaussian with covariance
//! `n·I`, so `‖S_n‖²/n` is chi-squared with `d` degrees of freedom and the
//! partial sums have no limit in probability.

use serde_json::{json, Value};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{fmt_list, rel_err, Check, Params, Source};
use crate::error::Result;
use crate::noise::Noise;
use crate::operator::{ArmaModel, Operator};
use crate::rng::sub_seed;
use crate::simulate::{log_log_slope, partial_sum_quantiles, plim_probe, PROBE_QUANTILE};

pub(super) fn defaults() -> Value {
    json!({ "d": 16, "replicates": 1000, "probe_replicates": 300 })
}

pub(super) fn run(params: &Params, seed: u64) -> Result<Vec<Check>> {
    let d = params.at_least("d", 2)?;
    let replicates = params.at_least("replicates", 100)?;
    let probe_replicates = params.at_least("probe_replicates", 10)?;
    let a = Operator::circular_shift(d);
    let model = ArmaModel::ar1(a.clone());
    let noise = Noise::gaussian(vec![1.0; d], sub_seed(seed, 0));
    let mut checks = Vec::new();

    let norms: Vec<f64> = [1usize, 7, 64].iter().map(|&n| a.power_norm(n)).collect::<Result<_>>()?;
    let worst = norms.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    checks.push(Check::new(
        "‖A^n‖ = 1 for n = 1, 7, 64 (isometry)",
        Source::Identity,
        "[1, 1, 1]",
        fmt_list(&norms),
        worst <= 1e-12,
    ));
    let on_circle = a.eigenvalues()?.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
    checks.push(Check::new(
        "spectrum is the d-th roots of unity: not hyperbolic",
        Source::Identity,
        "max ||λ| − 1| = 0",
        format!("{on_circle:.3e}"),
        on_circle <= 1e-15,
    ));

    let grid: Vec<usize> = (4..=12).map(|k| 1usize << k).collect();
    let curve = partial_sum_quantiles(&model, &noise, &grid, replicates)?;
    let slope = log_log_slope(&curve);
    checks.push(Check::new(
        "log-log slope of the 0.9-quantile of ‖S_n‖ over n = 2^4..2^12 is 0.5 ± 0.1",
        Source::Oracle,
        "0.5 ± 0.1",
        format!("{slope:.4}"),
        (slope - 0.5).abs() <= 0.1,
    ));

    let chi = ChiSquared::new(d as f64).expect("positive degrees of freedom");
    let c = chi.inverse_cdf(PROBE_QUANTILE).sqrt();
    let expected: Vec<f64> = grid.iter().map(|&n| c * (n as f64).sqrt()).collect();
    let observed: Vec<f64> = curve.iter().map(|p| p.quantile).collect();
    let worst = observed.iter().zip(&expected).map(|(o, e)| rel_err(*o, *e)).fold(0.0, f64::max);
    checks.push(Check::new(
        format!("0.9-quantile of ‖S_n‖ within 10% of √(n·χ²_{d}(0.9))"),
        Source::Oracle,
        fmt_list(&expected),
        fmt_list(&observed),
        worst <= 0.1,
    ));

    let probe = plim_probe(&model, &noise.with_seed(sub_seed(seed, 1)), &[16, 64, 256, 1024], probe_replicates)?;
    let curve: Vec<f64> = probe.dispersion_curve.iter().map(|p| p.quantile).collect();
    checks.push(Check::new(
        "no limit in probability: plim probe reports divergence",
        Source::ClosedForm,
        "converges = false",
        format!("converges = {}, curve {}", probe.converges, fmt_list(&curve)),
        !probe.converges,
    ));
    Ok(checks)
}
