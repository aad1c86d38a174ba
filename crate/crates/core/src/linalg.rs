//! Dense complex linear algebra helpers shared by every module.
//!
//! Thin wrappers over nalgebra that add the conditioning checks and exact
//! shortcuts (triangular spectra) the rest of the crate relies on.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Largest admissible 1-norm condition estimate before a system is declared singular.
pub const MAX_CONDITION: f64 = 1e12;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Euclidean norm of a complex vector.
pub fn vnorm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Sup norm of a complex vector.
pub fn vnorm_inf(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        // the SVD iteration does not terminate on non-finite input
        return vec![f64::INFINITY; m.nrows().min(m.ncols())];
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Induced 2-norm (largest singular value).
pub fn norm2(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Smallest singular value, `+inf` for an empty matrix.
pub fn min_singular_value(m: &CMatrix) -> f64 {
    singular_values(m).last().copied().unwrap_or(f64::INFINITY)
}

/// Induced sup-norm: maximum absolute row sum.
pub fn norm_inf(m: &CMatrix) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Induced 1-norm: maximum absolute column sum.
pub fn norm1(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn is_upper_triangular(m: &CMatrix) -> bool {
    (0..m.nrows()).all(|i| (0..i.min(m.ncols())).all(|j| m[(i, j)] == ZERO))
}

pub fn is_lower_triangular(m: &CMatrix) -> bool {
    (0..m.nrows()).all(|i| ((i + 1)..m.ncols()).all(|j| m[(i, j)] == ZERO))
}

/// Eigenvalues of a square matrix.
///
/// Triangular inputs return their diagonal exactly; everything else goes
/// through a complex Schur decomposition and reads the diagonal of `T`.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    let d = m.nrows();
    if d == 0 {
        return Ok(Vec::new());
    }
    if is_upper_triangular(m) || is_lower_triangular(m) {
        return Ok(m.diagonal().iter().copied().collect());
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000 * d).ok_or(Error::EigenFailure)?;
    let (_, t) = schur.unpack();
    let vals: Vec<C64> = t.diagonal().iter().copied().collect();
    if vals.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::EigenFailure);
    }
    Ok(vals)
}

/// Maximum eigenvalue modulus.
pub fn max_abs_eigenvalue(m: &CMatrix) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Inverse with a 1-norm condition check against [`MAX_CONDITION`].
pub fn checked_inverse(a: &CMatrix) -> Result<CMatrix> {
    let inv = a
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::Singular { condition: f64::INFINITY })?;
    let condition = norm1(a) * norm1(&inv);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::Singular { condition });
    }
    Ok(inv)
}

/// Solves `a x = b` with the same conditioning contract as [`checked_inverse`].
pub fn checked_solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch {
            context: "linear solve".into(),
            expected: a.nrows(),
            actual: b.nrows(),
        });
    }
    Ok(checked_inverse(a)? * b)
}

/// `a^n` by repeated squaring.
pub fn matrix_power(a: &CMatrix, mut n: usize) -> CMatrix {
    let d = a.nrows();
    let mut result = CMatrix::identity(d, d);
    let mut base = a.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = &result * &base;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Block-diagonal matrix `diag(a, b)`; either block may be empty.
pub fn block_diag(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (r1, r2) = (a.nrows(), b.nrows());
    let mut out = CMatrix::zeros(r1 + r2, r1 + r2);
    out.view_mut((0, 0), (r1, r1)).copy_from(a);
    out.view_mut((r1, r1), (r2, r2)).copy_from(b);
    out
}

/// Row-major nested representation used by the JSON interfaces.
pub fn to_rows(m: &CMatrix) -> Vec<Vec<C64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn from_rows(rows: &[Vec<C64>]) -> Result<CMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != m) {
        return Err(Error::DimensionMismatch {
            context: "matrix rows".into(),
            expected: m,
            actual: bad.len(),
        });
    }
    Ok(CMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

/// JSON nested rows of `[re, im]` pairs.
pub fn matrix_to_json(m: &CMatrix) -> serde_json::Value {
    serde_json::Value::Array(
        m.row_iter()
            .map(|r| serde_json::Value::Array(r.iter().map(|z| complex_to_json(*z)).collect()))
            .collect(),
    )
}

pub fn complex_to_json(z: C64) -> serde_json::Value {
    serde_json::json!([z.re, z.im])
}

/// Greedy multiset matching of two spectra; returns the worst pairwise distance.
///
/// Each element of `a` is paired with the closest unused element of `b`, so
/// this is exact for well-separated spectra and an upper bound otherwise.
pub fn match_spectra(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (idx, dist) = b
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, y)| (i, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("lengths are equal");
        used[idx] = true;
        worst = worst.max(dist);
    }
    worst
}
