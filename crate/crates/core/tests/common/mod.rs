#![allow(dead_code)]

use std::f64::consts::PI;

use oparma::linalg::{c64, CMatrix, CVector, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale)
}

pub fn random_vector(rng: &mut ChaCha8Rng, d: usize) -> CVector {
    CVector::from_fn(d, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Eigenvalues with modulus in `[0.1, 0.9]` or `[1.1, 3]`, so every one is at
/// distance ≥ 0.1 from the unit circle.
pub fn hyperbolic_eigenvalues(rng: &mut ChaCha8Rng, d: usize, inner: usize) -> Vec<C64> {
    (0..d)
        .map(|i| {
            let r = if i < inner { rng.random_range(0.1..0.9) } else { rng.random_range(1.1..3.0) };
            C64::from_polar(r, rng.random_range(0.0..2.0 * PI))
        })
        .collect()
}

/// Well-conditioned eigenvector matrix `I + 0.3·G/√d`.
pub fn eigenvector_matrix(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    CMatrix::identity(d, d) + random_matrix(rng, d, 0.3 / (d as f64).sqrt())
}

/// `V diag(λ) V⁻¹` together with `V` and `V⁻¹`.
pub fn diagonalizable(rng: &mut ChaCha8Rng, eig: &[C64]) -> (CMatrix, CMatrix, CMatrix) {
    let d = eig.len();
    let v = eigenvector_matrix(rng, d);
    let v_inv = v.clone().try_inverse().expect("eigenvector matrix is invertible");
    let a = &v * CMatrix::from_diagonal(&CVector::from_vec(eig.to_vec())) * &v_inv;
    (a, v, v_inv)
}

/// Eigendecomposition projector `V diag(1_{|λ|<1}) V⁻¹`.
pub fn eigen_projector(v: &CMatrix, v_inv: &CMatrix, eig: &[C64]) -> CMatrix {
    let mask = CVector::from_iterator(eig.len(), eig.iter().map(|z| c64(if z.norm() < 1.0 { 1.0 } else { 0.0 }, 0.0)));
    v * CMatrix::from_diagonal(&mask) * v_inv
}

pub fn spectral_norm(m: &CMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

/// Greedy multiset distance: each `a` is paired with its nearest unused `b`.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (j, dist) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|l, r| l.1.total_cmp(&r.1))
            .expect("same length");
        used[j] = true;
        worst = worst.max(dist);
    }
    worst
}

/// Roots of the monic degree-`n` function `f` by Aberth–Ehrlich iteration,
/// given the logarithmic derivative `f'/f` (`None` at an exact root).
pub fn aberth_roots(n: usize, radius: f64, log_derivative: impl Fn(C64) -> Option<C64>) -> Vec<C64> {
    let mut z: Vec<C64> = (0..n)
        .map(|k| C64::from_polar(radius, 2.0 * PI * (k as f64 + 0.25) / n as f64))
        .collect();
    for _ in 0..500 {
        let mut biggest = 0.0f64;
        for k in 0..n {
            let Some(ld) = log_derivative(z[k]) else { continue };
            let newton = 1.0 / ld;
            let repulsion: C64 = (0..n).filter(|&j| j != k).map(|j| 1.0 / (z[k] - z[j])).sum();
            let step = newton / (1.0 - newton * repulsion);
            z[k] -= step;
            biggest = biggest.max(step.norm() / (1.0 + z[k].norm()));
        }
        if biggest < 1e-15 {
            break;
        }
    }
    z
}

/// `d/dz ln det Q(z) = tr(Q(z)⁻¹ Q'(z))` for `Q(z) = z^p I − Σ z^{p−i} A_i`.
pub fn q_log_derivative(ar: &[CMatrix], z: C64) -> Option<C64> {
    let d = ar[0].nrows();
    let p = ar.len();
    let mut q = CMatrix::identity(d, d) * z.powu(p as u32);
    let mut dq = CMatrix::identity(d, d) * (z.powu(p as u32 - 1) * p as f64);
    for (i, a) in ar.iter().enumerate() {
        let e = (p - i - 1) as u32;
        q -= a * z.powu(e);
        if e > 0 {
            dq -= a * (z.powu(e - 1) * e as f64);
        }
    }
    Some((q.try_inverse()? * dq).trace())
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j) = (0, 0);
    let mut worst = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        worst = worst.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    worst
}

/// 1% critical value of the two-sample KS statistic.
pub fn ks_critical_1pct(n: usize, m: usize) -> f64 {
    1.628 * ((n + m) as f64 / (n * m) as f64).sqrt()
}

/// Drops every `runtime_ms` field.
pub fn strip_runtime(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(map) => {
            map.remove("runtime_ms");
            for x in map.values_mut() {
                strip_runtime(x);
            }
        }
        serde_json::Value::Array(xs) => xs.iter_mut().for_each(strip_runtime),
        _ => {}
    }
}
