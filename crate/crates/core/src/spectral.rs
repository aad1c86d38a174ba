//! Hyperbolic splitting of an AR operator along the unit circle.
//!
//! The Riesz projector onto the eigenvalues inside the unit disc is computed
//! with the trapezoidal rule
//!
//! ```text
//! P ≈ (1/N) Σ_j z_j (z_j I − A)^{-1},   z_j = exp(2πij/N),
//! ```
//!
//! which is `(1/2πi)∮ (zI − A)^{-1} dz` on the positively oriented circle.
//! The split then picks orthonormal bases of `ran P` and `ran(I − P)` and
//! reads off the diagonal blocks of `S⁻¹ A S`.

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::{
    c64, checked_inverse, eigenvalues, matrix_to_json, norm2, singular_values, CMatrix, CVector,
    C64,
};
use crate::operator::Operator;

pub const DEFAULT_N_QUAD: usize = 256;
pub const MAX_N_QUAD: usize = 8192;
/// Eigenvalues closer than this to the unit circle make an operator non-hyperbolic.
pub const CIRCLE_MARGIN: f64 = 1e-6;
/// Singular values of a projector above this count towards its rank.
pub const RANK_THRESHOLD: f64 = 1e-6;
/// Singular values in `(RANK_FLOOR, RANK_THRESHOLD)` make the rank ambiguous.
pub const RANK_FLOOR: f64 = 1e-8;
/// Relative tolerance for the split contract checks.
pub const SPLIT_TOL: f64 = 1e-8;

pub const CONVENTION: &str = "P = (1/(2 pi i)) * contour integral of (zI - A)^{-1} dz over |z| = 1, \
counter-clockwise; P projects onto the eigenvalues inside the unit disc";

/// Result of [`check_hyperbolic`].
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct HyperbolicCheck {
    pub hyperbolic: bool,
    pub zero_in_spectrum: bool,
    pub min_circle_distance: f64,
}

pub fn check_hyperbolic(op: &Operator, margin: f64) -> Result<HyperbolicCheck> {
    let ev = op.eigenvalues()?;
    let min_circle_distance = ev.iter().map(|z| (1.0 - z.norm()).abs()).fold(f64::INFINITY, f64::min);
    let min_modulus = ev.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    Ok(HyperbolicCheck {
        hyperbolic: min_circle_distance > margin,
        zero_in_spectrum: min_modulus < margin,
        min_circle_distance,
    })
}

fn ensure_hyperbolic(op: &Operator) -> Result<()> {
    let ev = op.eigenvalues()?;
    if let Some(worst) = ev
        .iter()
        .copied()
        .min_by(|a, b| (1.0 - a.norm()).abs().total_cmp(&(1.0 - b.norm()).abs()))
    {
        let distance = (1.0 - worst.norm()).abs();
        if distance <= CIRCLE_MARGIN {
            return Err(Error::NotHyperbolic { distance, eigenvalue: worst });
        }
    }
    Ok(())
}

/// `Σ_j z_j (z_j I − A)^{-1}` over the nodes `z_j = exp(2πi(offset + j·stride)/total)`.
fn node_sum(a: &CMatrix, total: usize, offset: usize, stride: usize) -> Result<CMatrix> {
    let d = a.nrows();
    let terms: Vec<CMatrix> = (offset..total)
        .step_by(stride)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|j| {
            let z = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / total as f64);
            let shifted = CMatrix::identity(d, d) * z - a;
            checked_inverse(&shifted).map(|r| r * z)
        })
        .collect::<Result<Vec<_>>>()?;
    // Fixed summation order keeps the result independent of the thread count.
    Ok(terms.into_iter().fold(CMatrix::zeros(d, d), |acc, t| acc + t))
}

fn idempotence_residual(p: &CMatrix) -> f64 {
    norm2(&(p * p - p))
}

/// Riesz projector together with the number of quadrature nodes actually used.
#[derive(Clone, Debug)]
pub struct Projector {
    pub matrix: CMatrix,
    pub n_quad: usize,
}

/// Projector onto the spectral subspace of the eigenvalues inside the unit disc.
///
/// Starts at `n_quad` nodes and doubles (reusing the previous nodes) until
/// doubling changes `P` by at most `1e-10·(1 + ‖P‖)` and `P² = P` holds to
/// `1e-8·(1 + ‖P‖)`, up to [`MAX_N_QUAD`] nodes.
pub fn riesz_projector(op: &Operator, n_quad: usize) -> Result<Projector> {
    if n_quad < 8 {
        return Err(Error::InvalidArgument(format!("n_quad must be at least 8, got {n_quad}")));
    }
    ensure_hyperbolic(op)?;
    let a = op.matrix();
    let mut n = n_quad;
    let mut sum = node_sum(a, n, 0, 1)?;
    loop {
        let p = &sum / c64(n as f64, 0.0);
        let odd = node_sum(a, 2 * n, 1, 2)?;
        sum += odd;
        let p2 = &sum / c64(2.0 * n as f64, 0.0);
        n *= 2;
        let scale = 1.0 + norm2(&p2);
        let change = norm2(&(&p2 - &p));
        let idem = idempotence_residual(&p2);
        if change <= 1e-10 * scale && idem <= SPLIT_TOL * scale {
            return Ok(Projector { matrix: p2, n_quad: n });
        }
        if n >= MAX_N_QUAD {
            return Err(Error::QuadratureNonConvergence { residual: change.max(idem), n_quad: n });
        }
    }
}

/// Orthonormal basis of the range of a projector-like matrix, with the
/// rank-ambiguity guard.
fn range_basis(m: &CMatrix) -> Result<CMatrix> {
    let d = m.nrows();
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    if let Some(&s) = svd
        .singular_values
        .iter()
        .find(|&&s| s > RANK_FLOOR && s <= RANK_THRESHOLD)
    {
        return Err(Error::RankAmbiguity(s));
    }
    let cols: Vec<usize> = order
        .into_iter()
        .filter(|&i| svd.singular_values[i] > RANK_THRESHOLD)
        .collect();
    let rough = CMatrix::from_fn(d, cols.len(), |i, k| u[(i, cols[k])]);
    if rough.ncols() == 0 {
        return Ok(rough);
    }
    // the complex SVD can leave O(1e-6) errors in U; one pass through the
    // projector puts the columns back into its range
    Ok((m * rough).qr().q())
}

/// Contract residuals measured when the split is built.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct SplitDiagnostics {
    /// `‖P² − P‖ / (1 + ‖P‖)`.
    pub idempotence: f64,
    /// `‖AP − PA‖ / ‖A‖`.
    pub commutator: f64,
    /// `‖S·diag(Λ1, Λ2)·S⁻¹ − A‖ / ‖A‖`.
    pub reconstruction: f64,
}

/// `S⁻¹ A S = diag(Λ1, Λ2)` with `σ(Λ1)` inside and `σ(Λ2)` outside the unit disc.
#[derive(Clone, Debug)]
pub struct SpectralSplit {
    pub projector: CMatrix,
    pub basis_inner: CMatrix,
    pub basis_outer: CMatrix,
    pub s: CMatrix,
    pub s_inv: CMatrix,
    pub lambda1: CMatrix,
    pub lambda2: CMatrix,
    pub r_inner: f64,
    pub r_outer_inv: f64,
    pub n_quad: usize,
    pub diagnostics: SplitDiagnostics,
}

pub fn hyperbolic_split(op: &Operator, n_quad: usize) -> Result<SpectralSplit> {
    let projector = riesz_projector(op, n_quad)?;
    let a = op.matrix();
    let d = op.dim();
    let p = projector.matrix;
    let basis_inner = range_basis(&p)?;
    let complement = CMatrix::identity(d, d) - &p;
    let basis_outer = range_basis(&complement)?;
    let r = basis_inner.ncols();
    if r + basis_outer.ncols() != d {
        // ranks of P and I − P must add up to d
        let sv = singular_values(&p);
        return Err(Error::RankAmbiguity(sv.get(r.min(d - 1)).copied().unwrap_or(0.0)));
    }
    let mut s = CMatrix::zeros(d, d);
    s.view_mut((0, 0), (d, r)).copy_from(&basis_inner);
    s.view_mut((0, r), (d, d - r)).copy_from(&basis_outer);
    let s_inv = checked_inverse(&s)?;
    let m = &s_inv * a * &s;
    let lambda1 = m.view((0, 0), (r, r)).into_owned();
    let lambda2 = m.view((r, r), (d - r, d - r)).into_owned();

    let r_inner = eigenvalues(&lambda1)?.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let r_outer_inv = eigenvalues(&lambda2)?
        .iter()
        .map(|z| 1.0 / z.norm())
        .fold(0.0, f64::max);

    let a_norm = norm2(a).max(f64::MIN_POSITIVE);
    let block = crate::linalg::block_diag(&lambda1, &lambda2);
    let diagnostics = SplitDiagnostics {
        idempotence: idempotence_residual(&p) / (1.0 + norm2(&p)),
        commutator: norm2(&(a * &p - &p * a)) / a_norm,
        reconstruction: norm2(&(&s * block * &s_inv - a)) / a_norm,
    };
    if !(r_inner < 1.0 && r_outer_inv < 1.0) {
        return Err(Error::QuadratureNonConvergence {
            residual: r_inner.max(r_outer_inv),
            n_quad: projector.n_quad,
        });
    }
    if diagnostics.reconstruction > SPLIT_TOL || diagnostics.commutator > SPLIT_TOL {
        return Err(Error::QuadratureNonConvergence {
            residual: diagnostics.reconstruction.max(diagnostics.commutator),
            n_quad: projector.n_quad,
        });
    }
    Ok(SpectralSplit {
        projector: p,
        basis_inner,
        basis_outer,
        s,
        s_inv,
        lambda1,
        lambda2,
        r_inner,
        r_outer_inv,
        n_quad: projector.n_quad,
        diagnostics,
    })
}

impl SpectralSplit {
    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    pub fn inner_dim(&self) -> usize {
        self.lambda1.nrows()
    }

    pub fn outer_dim(&self) -> usize {
        self.lambda2.nrows()
    }

    /// Split coordinates `(I_1 S⁻¹ v, I_2 S⁻¹ v)`.
    pub fn to_split(&self, v: &CVector) -> (CVector, CVector) {
        let x = &self.s_inv * v;
        let r = self.inner_dim();
        (x.rows(0, r).into_owned(), x.rows(r, self.dim() - r).into_owned())
    }

    /// `S (x1, x2)`.
    pub fn from_split(&self, x1: &CVector, x2: &CVector) -> CVector {
        let r = self.inner_dim();
        self.s.columns(0, r) * x1 + self.s.columns(r, self.dim() - r) * x2
    }

    /// Eigenvalues of `Λ1` followed by those of `Λ2`.
    pub fn block_eigenvalues(&self) -> Result<Vec<C64>> {
        let mut ev = eigenvalues(&self.lambda1)?;
        ev.extend(eigenvalues(&self.lambda2)?);
        Ok(ev)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "convention": CONVENTION,
            "n_quad": self.n_quad,
            "rank_inner": self.inner_dim(),
            "r_inner": self.r_inner,
            "r_outer_inv": self.r_outer_inv,
            "projector": matrix_to_json(&self.projector),
            "basis_inner": matrix_to_json(&self.basis_inner),
            "basis_outer": matrix_to_json(&self.basis_outer),
            "S": matrix_to_json(&self.s),
            "S_inv": matrix_to_json(&self.s_inv),
            "lambda1": matrix_to_json(&self.lambda1),
            "lambda2": matrix_to_json(&self.lambda2),
            "diagnostics": self.diagnostics,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ZERO;
    use approx::assert_relative_eq;

    fn r(x: f64) -> C64 {
        c64(x, 0.0)
    }

    fn dense(rows: usize, entries: &[f64]) -> Operator {
        let vals: Vec<C64> = entries.iter().map(|&x| r(x)).collect();
        Operator::dense(CMatrix::from_row_slice(rows, rows, &vals)).unwrap()
    }

    fn assert_close(a: &CMatrix, b: &CMatrix, tol: f64) {
        let err = norm2(&(a - b));
        assert!(err <= tol, "matrices differ by {err:e}\n{a}\n{b}");
    }

    #[test]
    fn projector_examples() {
        let diag = Operator::multiplication(vec![r(0.5), r(2.0)]);
        let p = riesz_projector(&diag, DEFAULT_N_QUAD).unwrap();
        assert_close(&p.matrix, &CMatrix::from_row_slice(2, 2, &[r(1.0), ZERO, ZERO, ZERO]), 1e-12);

        let half = Operator::multiplication(vec![r(0.5), r(0.5)]);
        let p = riesz_projector(&half, DEFAULT_N_QUAD).unwrap();
        assert_close(&p.matrix, &CMatrix::identity(2, 2), 1e-12);

        let upper = dense(2, &[0.5, 1.0, 0.0, 2.0]);
        let p = riesz_projector(&upper, DEFAULT_N_QUAD).unwrap();
        let expected = CMatrix::from_row_slice(2, 2, &[r(1.0), r(-2.0 / 3.0), ZERO, ZERO]);
        assert_close(&p.matrix, &expected, 1e-12);
    }

    #[test]
    fn projector_rejects_circle_eigenvalues_and_tiny_grids() {
        assert!(matches!(
            riesz_projector(&Operator::circular_shift(4), DEFAULT_N_QUAD),
            Err(Error::NotHyperbolic { .. })
        ));
        assert!(matches!(
            riesz_projector(&Operator::zero(2), 4),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn split_examples() {
        let diag = Operator::multiplication(vec![r(0.5), r(2.0)]);
        let split = hyperbolic_split(&diag, DEFAULT_N_QUAD).unwrap();
        assert_eq!(split.inner_dim(), 1);
        assert_relative_eq!(split.lambda1[(0, 0)].re, 0.5, epsilon = 1e-12);
        assert_relative_eq!(split.lambda2[(0, 0)].re, 2.0, epsilon = 1e-12);
        assert_relative_eq!(split.r_inner, 0.5, epsilon = 1e-12);
        assert_relative_eq!(split.r_outer_inv, 0.5, epsilon = 1e-12);

        let stable = dense(2, &[0.3, 0.4, -0.2, 0.1]);
        let split = hyperbolic_split(&stable, DEFAULT_N_QUAD).unwrap();
        assert_eq!(split.outer_dim(), 0);
        assert_eq!(split.r_outer_inv, 0.0);

        let companion = dense(2, &[0.5, 0.06, 1.0, 0.0]);
        let split = hyperbolic_split(&companion, DEFAULT_N_QUAD).unwrap();
        assert_eq!(split.outer_dim(), 0);
        assert_relative_eq!(split.r_inner, 0.6, epsilon = 1e-10);
    }

    #[test]
    fn split_coordinates_round_trip() {
        let op = dense(3, &[0.5, 1.0, 0.2, 0.0, 2.0, 0.3, 0.1, 0.0, -3.0]);
        let split = hyperbolic_split(&op, DEFAULT_N_QUAD).unwrap();
        let v = CVector::from_vec(vec![r(1.0), c64(0.0, 2.0), r(-0.5)]);
        let (x1, x2) = split.to_split(&v);
        assert!((split.from_split(&x1, &x2) - v).norm() < 1e-12);
    }

    #[test]
    fn hyperbolicity_check_examples() {
        let diag = Operator::multiplication(vec![r(0.5), r(2.0)]);
        let c = check_hyperbolic(&diag, 1e-6).unwrap();
        assert!(c.hyperbolic && !c.zero_in_spectrum);

        let c = check_hyperbolic(&Operator::circular_shift(4), 1e-6).unwrap();
        assert!(!c.hyperbolic);

        let c = check_hyperbolic(&Operator::scaled_unilateral_shift(5, r(1.0)), 1e-6).unwrap();
        assert!(c.hyperbolic && c.zero_in_spectrum);
    }

    #[test]
    fn json_records_convention() {
        let diag = Operator::multiplication(vec![r(0.5), r(2.0)]);
        let js = hyperbolic_split(&diag, DEFAULT_N_QUAD).unwrap().to_json();
        assert!(js["convention"].as_str().unwrap().contains("(zI - A)^{-1}"));
        assert_eq!(js["r_inner"].as_f64().unwrap(), 0.5);
    }
}
