//! Right shift scaled by 2. In infinite dimensions it is left invertible
//! with `A^{−1}x = ½(x_1, x_2, …)`, and a stationary solution would have to
//! satisfy both `X^{(0)}_t = Z^{(0)}_t` (first coordinate of the recursion)
//! and `X^{(0)}_t = −Σ_{j≥1} 2^{−j} Z^{(j)}_{t+j}` (the anticausal series).
//! Both sides are evaluated on sampled paths. The truncation itself is
//! nilpotent and has the causal finite solution.

use rayon::prelude::*;
use serde_json::{json, Value};

use super::{fmt_list, rel_err, Check, Params, Source};
use crate::error::Result;
use crate::linalg::{c64, norm2, CMatrix};
use crate::noise::Noise;
use crate::operator::Operator;
use crate::rng::sub_seed;
use crate::simulate::simulate_causal_scaled;

pub(super) fn defaults() -> Value {
    json!({ "d": 16, "replicates": 10_000, "paths": 8, "path_window": 64 })
}

pub(super) fn run(params: &Params, seed: u64) -> Result<Vec<Check>> {
    let d = params.at_least("d", 4)?;
    let replicates = params.at_least("replicates", 100)?;
    let paths = params.at_least("paths", 1)?;
    let path_window = params.at_least("path_window", 2)?;
    let a = Operator::scaled_unilateral_shift(d, c64(2.0, 0.0));
    let noise = Noise::gaussian(vec![1.0; d], sub_seed(seed, 0));
    let mut checks = Vec::new();

    let norms: Vec<f64> = (0..d).map(|n| a.power_norm(n)).collect::<Result<_>>()?;
    let closed: Vec<f64> = (0..d).map(|n| 2f64.powi(n as i32)).collect();
    let worst = norms.iter().zip(&closed).map(|(o, e)| rel_err(*o, *e)).fold(0.0, f64::max);
    checks.push(Check::new(
        format!("‖A^n‖ = 2^n for n = 0..{}", d - 1),
        Source::ClosedForm,
        fmt_list(&closed),
        fmt_list(&norms),
        worst <= 1e-12,
    ));

    let left = CMatrix::from_fn(d, d, |i, j| if j == i + 1 { c64(0.5, 0.0) } else { c64(0.0, 0.0) });
    let mut target = CMatrix::identity(d, d);
    target[(d - 1, d - 1)] = c64(0.0, 0.0);
    let defect = norm2(&(&left * a.matrix() - &target));
    checks.push(Check::new(
        "left inverse ½(x_1, x_2, …) gives L·A = I − e_{d−1}e_{d−1}ᵀ on the truncation",
        Source::Identity,
        "0",
        format!("{defect:.3e}"),
        defect == 0.0,
    ));

    let gaps: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let z = noise.window(rep, 0, d);
            let forward = z.values[0][0];
            let mut anticausal = c64(0.0, 0.0);
            for j in 1..d {
                anticausal -= z.values[j][j] * 0.5f64.powi(j as i32);
            }
            (forward - anticausal).norm()
        })
        .collect();
    let differ = gaps.iter().filter(|g| **g > 1e-12).count() as f64 / replicates as f64;
    checks.push(Check::new(
        "Z^{(0)}_t and −Σ_{j≥1} 2^{−j} Z^{(j)}_{t+j} differ on sampled paths: no stationary solution",
        Source::Oracle,
        "fraction of paths ≥ 0.99",
        format!("{differ:.4}"),
        differ >= 0.99,
    ));

    let k = d - 1;
    let outcomes: Vec<Result<(f64, bool)>> = (0..paths as u64)
        .into_par_iter()
        .map(|rep| {
            let start = -(k as i64);
            let draws = noise.window_scaled(rep, start, k + path_window);
            let sim = simulate_causal_scaled(&a, &draws, start, 0, path_window as i64 - 1, k)?;
            let first = (0..path_window as i64)
                .all(|t| sim.path.get(t).expect("in window")[0] == sim.noise.get(t).expect("in window")[0]);
            Ok((sim.max_residual, first))
        })
        .collect();
    let mut worst = 0.0f64;
    let mut first_ok = true;
    for o in outcomes {
        let (r, f) = o?;
        worst = worst.max(r);
        first_ok &= f;
    }
    checks.push(Check::new(
        "on the nilpotent truncation the finite causal series solves the recursion, with X^{(0)}_t = Z^{(0)}_t",
        Source::Identity,
        "relative residual ≤ 1e-12, first coordinate equal",
        format!("{worst:.3e}, first coordinate equal = {first_ok}"),
        worst <= 1e-12 && first_ok,
    ));
    Ok(checks)
}
