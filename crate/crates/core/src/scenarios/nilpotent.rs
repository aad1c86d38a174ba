//! Nilpotent AR operator: the causal series has `d` terms, so no moment
//! condition on the noise is needed.

use rayon::prelude::*;
use serde_json::{json, Value};

use super::{Check, Params, Source};
use crate::error::Result;
use crate::linalg::{c64, CVector};
use crate::moments::{moment_estimate, MomentKind, Verdict};
use crate::noise::Noise;
use crate::operator::Operator;
use crate::rng::sub_seed;
use crate::simulate::simulate_causal_scaled;

pub(super) fn defaults() -> Value {
    json!({ "d": 6, "replicates": 200, "window": 64, "moment_samples": 200_000 })
}

pub(super) fn run(params: &Params, seed: u64) -> Result<Vec<Check>> {
    let d = params.at_least("d", 2)?;
    let replicates = params.at_least("replicates", 1)?;
    let window = params.at_least("window", 2)?;
    let moment_samples = params.usize("moment_samples")?;
    let a = Operator::scaled_unilateral_shift(d, c64(1.0, 0.0));
    let mut checks = Vec::new();

    let top = a.power_norm(d - 1)?;
    let zero = a.power_norm(d)?;
    checks.push(Check::new(
        format!("‖A^{}‖ = 1 and ‖A^{d}‖ = 0: the series Σ A^n Z_{{t−n}} stops after {d} terms", d - 1),
        Source::Identity,
        "1, 0",
        format!("{top}, {zero}"),
        top == 1.0 && zero == 0.0,
    ));

    let radius = a.eigenvalues()?.iter().map(|z| z.norm()).fold(0.0, f64::max);
    checks.push(Check::new("spectral radius is 0", Source::Identity, "0", format!("{radius}"), radius == 0.0));

    let direction = CVector::from_element(d, c64(1.0 / (d as f64).sqrt(), 0.0));
    let noise = Noise::pareto_exp(direction, 1, sub_seed(seed, 0));
    let log_moment = moment_estimate(&noise, None, MomentKind::LogPlus, moment_samples)?;
    checks.push(Check::new(
        "pareto_exp noise has no log⁺ moment (tail-ladder verdict)",
        Source::ClosedForm,
        "diverging",
        format!("{:?} (tail ratio {:.3})", log_moment.finite_verdict, log_moment.tail_ratio),
        log_moment.finite_verdict == Verdict::Diverging,
    ));

    let k = d - 1;
    let outcomes: Vec<Result<(f64, bool, bool)>> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let draws = noise.window_scaled(rep, -(2 * d as i64), window + 2 * d);
            let start = -(2 * d as i64);
            let short = simulate_causal_scaled(&a, &draws, start, 0, window as i64 - 1, k)?;
            let long = simulate_causal_scaled(&a, &draws, start, 0, window as i64 - 1, 2 * d - 1)?;
            let finite = short.path.values.iter().all(|v| v.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
            Ok((short.max_residual, finite, short.path == long.path))
        })
        .collect();
    let mut worst = 0.0f64;
    let mut finite = true;
    let mut same = true;
    for o in outcomes {
        let (r, f, s) = o?;
        worst = worst.max(r);
        finite &= f;
        same &= s;
    }
    checks.push(Check::new(
        format!("{replicates} scaled paths of length {window} solve Y_t = A Y_{{t−1}} + Z_t"),
        Source::Identity,
        "relative residual ≤ 1e-12, all entries finite",
        format!("{worst:.3e}, finite = {finite}"),
        worst <= 1e-12 && finite,
    ));
    checks.push(Check::new(
        format!("adding the terms n = {d}..{} leaves every path unchanged", 2 * d - 1),
        Source::Identity,
        "identical paths",
        format!("identical = {same}"),
        same,
    ));
    Ok(checks)
}
