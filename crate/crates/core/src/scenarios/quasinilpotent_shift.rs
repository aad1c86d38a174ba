//! Quasinilpotent weighted shift with `a_1⋯a_n = e^{−e^n}`.
//!
//! Weights below `e^{−745}` underflow, so norms past `n = 4` are compared in
//! log space through the stored log-weights. The solution is evaluated from
//! the component formula `Y^{(n)}_t = (a_1⋯a_n) Z^{(0)}_{t−n}` for noise along
//! `e_0`, entirely in log space.

use std::f64::consts::E;

use rayon::prelude::*;
use serde_json::{json, Value};

use super::{fmt_list, frequency_check, log_sum_exp, rel_err, Check, Params, Source};
use crate::error::Result;
use crate::linalg::{c64, CVector};
use crate::moments::{moment_estimate, MomentKind, Verdict};
use crate::noise::Noise;
use crate::operator::Operator;
use crate::rng::sub_seed;
use crate::simulate::quantile;

pub(super) fn defaults() -> Value {
    json!({ "d": 12, "replicates": 20_000, "moment_samples": 200_000 })
}

pub(crate) fn log_weights(d: usize) -> Vec<f64> {
    (1..d).map(|n| if n == 1 { -E } else { -((n as f64).exp() - ((n - 1) as f64).exp()) }).collect()
}

pub(super) fn run(params: &Params, seed: u64) -> Result<Vec<Check>> {
    let d = params.at_least("d", 6)?;
    let replicates = params.at_least("replicates", 100)?;
    let moment_samples = params.usize("moment_samples")?;
    let a = Operator::weighted_shift_log(log_weights(d));
    let mut checks = Vec::new();

    let numeric: Vec<f64> = (1..=4).map(|n| a.structured_norm(n)).collect();
    let closed: Vec<f64> = (1..=4).map(|n| (-(n as f64).exp()).exp()).collect();
    let worst = numeric.iter().zip(&closed).map(|(o, e)| rel_err(*o, *e)).fold(0.0, f64::max);
    checks.push(Check::new(
        "‖A^n‖ = e^{−e^n} for n = 1..4 in the sup-norm",
        Source::ClosedForm,
        fmt_list(&closed),
        fmt_list(&numeric),
        worst <= 1e-12,
    ));

    let symbolic: Vec<f64> = (5..d).map(|n| a.log_structured_norm(n)).collect();
    let closed_log: Vec<f64> = (5..d).map(|n| -(n as f64).exp()).collect();
    let worst = symbolic.iter().zip(&closed_log).map(|(o, e)| rel_err(*o, *e)).fold(0.0, f64::max);
    checks.push(Check::new(
        format!("ln‖A^n‖ = −e^n for n = 5..{} from the log-weights", d - 1),
        Source::ClosedForm,
        fmt_list(&closed_log),
        fmt_list(&symbolic),
        worst <= 1e-12,
    ));

    let dense: Vec<f64> = (1..=4).map(|n| a.power_norm(n)).collect::<Result<_>>()?;
    let worst = dense.iter().zip(&closed).map(|(o, e)| rel_err(*o, *e)).fold(0.0, f64::max);
    checks.push(Check::new(
        "2-norm of the materialized power A^n for n = 1..4 (shift powers have one nonzero per column)",
        Source::Oracle,
        fmt_list(&closed),
        fmt_list(&dense),
        worst <= 1e-10,
    ));

    let radius = a.eigenvalues()?.iter().map(|z| z.norm()).fold(0.0, f64::max);
    checks.push(Check::new("spectral radius is 0", Source::Identity, "0", format!("{radius}"), radius == 0.0));

    let mut e0 = CVector::zeros(d);
    e0[0] = c64(1.0, 0.0);
    let noise = Noise::pareto_exp(e0.clone(), 1, sub_seed(seed, 0));
    let loglog = moment_estimate(&noise, None, MomentKind::LogPlusLogPlus, moment_samples)?;
    let log = moment_estimate(&noise, None, MomentKind::LogPlus, moment_samples)?;
    checks.push(Check::new(
        "pareto_exp noise has a log⁺log⁺ moment and no log⁺ moment",
        Source::ClosedForm,
        "finite, diverging",
        format!("{:?}, {:?}", loglog.finite_verdict, log.finite_verdict),
        loglog.finite_verdict == Verdict::Finite && log.finite_verdict == Verdict::Diverging,
    ));

    // ln‖A^n Z_{−n}‖ = −e^n + P_{−n}
    let terms: Vec<Vec<f64>> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let draws = noise.window_scaled(rep, -(d as i64) + 1, d);
            (0..d).map(|n| a.log_structured_norm(n) + draws[d - 1 - n].log_scale).collect()
        })
        .collect();
    let tails: Vec<f64> = (1..d)
        .map(|from| {
            let per_rep: Vec<f64> = terms.iter().map(|t| log_sum_exp(&t[from..])).collect();
            quantile(&per_rep, 0.9)
        })
        .collect();
    let decreasing = tails.windows(2).all(|w| w[1] < w[0]);
    let last = *tails.last().expect("d ≥ 6");
    checks.push(Check::new(
        "0.9-quantile of ln Σ_{n≥N} ‖A^n Z_{t−n}‖ over N = 1..d−1 decreases strictly to below ln 1e-3",
        Source::Oracle,
        "strictly decreasing, last < −6.908",
        fmt_list(&tails),
        decreasing && last < (1e-3f64).ln(),
    ));

    // Borel–Cantelli: P(‖A^n Z‖ > e^{−n}) = P(P > e^n − n) = 1/(e^n − n)
    let from = 4;
    let bound: f64 = (from..10_000).map(|n| 1.0 / ((n as f64).exp() - n as f64)).sum();
    let hits = terms
        .iter()
        .filter(|t| (from..d).any(|n| t[n] > -(n as f64)))
        .count();
    let freq = hits as f64 / replicates as f64;
    let slack = 4.0 * (bound * (1.0 - bound) / replicates as f64).sqrt();
    checks.push(Check::new(
        format!("fraction of paths with some ‖A^n Z_{{t−n}}‖ > e^{{−n}}, n ≥ {from}, is within the union bound Σ 1/(e^n − n)"),
        Source::Oracle,
        format!("≤ {bound:.4e} (+{slack:.1e} sampling slack)"),
        format!("{freq:.4e}"),
        freq <= bound + slack,
    ));

    // sharpness: noise e^{e^P} e_0 has no log⁺log⁺ moment; term n exceeds 1 iff P > n
    let sharp = Noise::pareto_exp(e0, 2, sub_seed(seed, 1));
    let sharp_moment = moment_estimate(&sharp, None, MomentKind::LogPlusLogPlus, moment_samples)?;
    checks.push(Check::new(
        "doubly exponentiated Pareto noise has no log⁺log⁺ moment",
        Source::Oracle,
        "diverging",
        format!("{:?}", sharp_moment.finite_verdict),
        sharp_moment.finite_verdict == Verdict::Diverging,
    ));
    let exceed: Vec<Vec<bool>> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let draws = sharp.window_scaled(rep, -(d as i64) + 1, d);
            (0..d).map(|n| a.log_structured_norm(n) + draws[d - 1 - n].log_scale > 0.0).collect()
        })
        .collect();
    let mut freqs = Vec::new();
    let mut all_ok = true;
    for n in 1..d {
        let hits = exceed.iter().filter(|e| e[n]).count();
        let (f, ok) = frequency_check(hits, replicates, 1.0 / n as f64);
        freqs.push(f);
        all_ok &= ok;
    }
    let expected: Vec<f64> = (1..d).map(|n| 1.0 / n as f64).collect();
    checks.push(Check::new(
        "P(|Y^{(n)}_t| > 1) = 1/n for the doubly exponentiated noise, n = 1..d−1 (4 binomial SE)",
        Source::Oracle,
        fmt_list(&expected),
        fmt_list(&freqs),
        all_ok,
    ));
    let counts: Vec<f64> = exceed.iter().map(|e| e[1..].iter().filter(|x| **x).count() as f64).collect();
    let mean = counts.iter().sum::<f64>() / replicates as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (replicates as f64 - 1.0);
    let harmonic: f64 = expected.iter().sum();
    let ok = (mean - harmonic).abs() <= 4.0 * (var / replicates as f64).sqrt();
    checks.push(Check::new(
        "mean number of components with |Y^{(n)}_t| > 1 equals the harmonic sum H_{d−1}, which is unbounded in d (Borel–Cantelli divergence)",
        Source::Oracle,
        format!("{harmonic:.4}"),
        format!("{mean:.4}"),
        ok,
    ));
    Ok(checks)
}
