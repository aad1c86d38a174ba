//! Finite-dimensional realizations of the AR/MA coefficient operators.
//!
//! Every operator is materialized as a dense `d × d` complex matrix, but the
//! structured kinds keep their metadata so that application, spectra and
//! sup-norm power norms can use exact closed forms:
//!
//! | kind | matrix | spectrum |
//! |------|--------|----------|
//! | `weighted_shift` | `A[j, j-1] = a_j` | `{0}` |
//! | `multiplication` | `diag(λ_0, …, λ_{d-1})` | `{λ_i}` |
//! | `volterra` | strictly lower triangular quadrature weights | `{0}` |
//! | `circular_shift` | cyclic permutation `e_i ↦ e_{i+1 mod d}` | d-th roots of unity |
//! | `scaled_unilateral_shift` | `A[i+1, i] = c` | `{0}` |
//!
//! Truncating a unilateral shift makes it nilpotent of order `d`; scenarios
//! that need an isometry use `circular_shift` instead.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::linalg::{
    self, c64, checked_solve, matrix_power, norm2, CMatrix, CVector, C64, ONE, ZERO,
};

/// Quadrature rule used to discretize the Volterra operator `x ↦ ∫_0^s x`.
///
/// Both rules are strictly lower triangular, hence exactly nilpotent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolterraRule {
    /// Left-endpoint Riemann sum, `A[i, j] = h` for `j < i`.
    LeftEndpoint,
    /// Two-step Adams–Bashforth weights: `1.5 h` on the first subdiagonal, `h` below it.
    AdamsBashforth2,
}

impl VolterraRule {
    fn name(self) -> &'static str {
        match self {
            VolterraRule::LeftEndpoint => "left_endpoint",
            VolterraRule::AdamsBashforth2 => "adams_bashforth2",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OperatorKind {
    Dense,
    /// Weights stored as logarithms so that super-exponentially small weights survive.
    WeightedShift { log_weights: Vec<f64> },
    Multiplication { multipliers: Vec<C64> },
    Volterra { rule: VolterraRule },
    CircularShift,
    ScaledUnilateralShift { scale: C64 },
    Zero,
    Identity,
}

impl OperatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            OperatorKind::Dense => "dense",
            OperatorKind::WeightedShift { .. } => "weighted_shift",
            OperatorKind::Multiplication { .. } => "multiplication",
            OperatorKind::Volterra { .. } => "volterra",
            OperatorKind::CircularShift => "circular_shift",
            OperatorKind::ScaledUnilateralShift { .. } => "scaled_unilateral_shift",
            OperatorKind::Zero => "zero",
            OperatorKind::Identity => "identity",
        }
    }
}

/// Serialized operator description: `{"kind": ..., "dim": d, "params": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub kind: String,
    pub dim: usize,
    #[serde(default)]
    pub params: Map<String, Value>,
}

impl OperatorSpec {
    pub fn new(kind: &str, dim: usize, params: Value) -> Self {
        let params = match params {
            Value::Object(m) => m,
            _ => Map::new(),
        };
        OperatorSpec { kind: kind.to_string(), dim, params }
    }
}

/// An immutable `d × d` operator: dense matrix plus structural metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    kind: OperatorKind,
    matrix: CMatrix,
}

fn complex_from_value(v: &Value, path: &str) -> Result<C64> {
    match v {
        Value::Number(n) => Ok(c64(n.as_f64().unwrap_or(f64::NAN), 0.0)),
        Value::Array(a) if a.len() == 2 => {
            let re = a[0].as_f64();
            let im = a[1].as_f64();
            match (re, im) {
                (Some(re), Some(im)) => Ok(c64(re, im)),
                _ => Err(schema(path, "complex entries must be numbers")),
            }
        }
        _ => Err(schema(path, "expected a complex number [re, im]")),
    }
}

fn schema(path: &str, message: &str) -> Error {
    Error::Schema { path: path.to_string(), message: message.to_string() }
}

fn param<'a>(spec: &'a OperatorSpec, key: &str) -> Result<&'a Value> {
    spec.params
        .get(key)
        .ok_or_else(|| schema(&format!("params.{key}"), "missing parameter"))
}

fn complex_list(v: &Value, path: &str) -> Result<Vec<C64>> {
    let arr = v.as_array().ok_or_else(|| schema(path, "expected an array"))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| complex_from_value(x, &format!("{path}[{i}]")))
        .collect()
}

fn real_list(v: &Value, path: &str) -> Result<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| schema(path, "expected an array"))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| {
            x.as_f64()
                .ok_or_else(|| schema(&format!("{path}[{i}]"), "expected a real number"))
        })
        .collect()
}

use crate::linalg::complex_to_json as complex_json;

/// Materializes an [`OperatorSpec`].
pub fn build_operator(spec: &OperatorSpec) -> Result<Operator> {
    let d = spec.dim;
    if d == 0 {
        return Err(Error::InvalidParams("dim must be at least 1".into()));
    }
    let kind = match spec.kind.as_str() {
        "dense" => {
            let rows = param(spec, "entries")?
                .as_array()
                .ok_or_else(|| schema("params.entries", "expected an array of rows"))?;
            if rows.len() != d {
                return Err(Error::DimensionMismatch {
                    context: "dense entries (rows)".into(),
                    expected: d,
                    actual: rows.len(),
                });
            }
            let mut m = CMatrix::zeros(d, d);
            for (i, row) in rows.iter().enumerate() {
                let row = complex_list(row, &format!("params.entries[{i}]"))?;
                if row.len() != d {
                    return Err(Error::DimensionMismatch {
                        context: format!("dense entries (row {i})"),
                        expected: d,
                        actual: row.len(),
                    });
                }
                for (j, z) in row.into_iter().enumerate() {
                    m[(i, j)] = z;
                }
            }
            return Operator::dense(m);
        }
        "weighted_shift" => {
            let log_weights = if let Some(v) = spec.params.get("log_weights") {
                let lw = real_list(v, "params.log_weights")?;
                if lw.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
                    return Err(Error::InvalidParams("log weights must be < +inf".into()));
                }
                lw
            } else {
                let w = real_list(param(spec, "weights")?, "params.weights")?;
                if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(Error::InvalidParams(
                        "weighted shift weights must be finite and nonnegative".into(),
                    ));
                }
                w.iter().map(|x| x.ln()).collect()
            };
            if log_weights.len() != d - 1 {
                return Err(Error::DimensionMismatch {
                    context: "weighted_shift weights".into(),
                    expected: d - 1,
                    actual: log_weights.len(),
                });
            }
            OperatorKind::WeightedShift { log_weights }
        }
        "multiplication" => {
            let multipliers = complex_list(param(spec, "multipliers")?, "params.multipliers")?;
            if multipliers.len() != d {
                return Err(Error::DimensionMismatch {
                    context: "multiplication multipliers".into(),
                    expected: d,
                    actual: multipliers.len(),
                });
            }
            if multipliers.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::InvalidParams("multipliers must be finite".into()));
            }
            OperatorKind::Multiplication { multipliers }
        }
        "volterra" => {
            let rule = match spec.params.get("rule") {
                None => VolterraRule::AdamsBashforth2,
                Some(v) => serde_json::from_value(v.clone()).map_err(|_| {
                    schema("params.rule", "expected `left_endpoint` or `adams_bashforth2`")
                })?,
            };
            OperatorKind::Volterra { rule }
        }
        "circular_shift" => OperatorKind::CircularShift,
        "scaled_unilateral_shift" => {
            let scale = complex_from_value(param(spec, "scale")?, "params.scale")?;
            OperatorKind::ScaledUnilateralShift { scale }
        }
        "zero" => OperatorKind::Zero,
        "identity" => OperatorKind::Identity,
        other => return Err(Error::UnknownKind(other.to_string())),
    };
    Ok(Operator::structured(kind, d))
}

impl Operator {
    /// Dense operator from an explicit matrix.
    pub fn dense(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::InvalidParams(format!(
                "operator matrix must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidParams("dense entries must be finite".into()));
        }
        Ok(Operator { kind: OperatorKind::Dense, matrix })
    }

    fn structured(kind: OperatorKind, d: usize) -> Self {
        let matrix = materialize(&kind, d);
        Operator { kind, matrix }
    }

    pub fn zero(d: usize) -> Self {
        Self::structured(OperatorKind::Zero, d)
    }

    pub fn identity(d: usize) -> Self {
        Self::structured(OperatorKind::Identity, d)
    }

    pub fn multiplication(multipliers: Vec<C64>) -> Self {
        let d = multipliers.len();
        Self::structured(OperatorKind::Multiplication { multipliers }, d)
    }

    pub fn weighted_shift_log(log_weights: Vec<f64>) -> Self {
        let d = log_weights.len() + 1;
        Self::structured(OperatorKind::WeightedShift { log_weights }, d)
    }

    pub fn volterra(d: usize, rule: VolterraRule) -> Self {
        Self::structured(OperatorKind::Volterra { rule }, d)
    }

    pub fn circular_shift(d: usize) -> Self {
        Self::structured(OperatorKind::CircularShift, d)
    }

    pub fn scaled_unilateral_shift(d: usize, scale: C64) -> Self {
        Self::structured(OperatorKind::ScaledUnilateralShift { scale }, d)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Canonical serialized form.
    pub fn to_spec(&self) -> OperatorSpec {
        let d = self.dim();
        let params = match &self.kind {
            OperatorKind::Dense => json!({
                "entries": self.matrix.row_iter()
                    .map(|r| r.iter().map(|z| complex_json(*z)).collect::<Vec<_>>())
                    .collect::<Vec<_>>()
            }),
            OperatorKind::WeightedShift { log_weights } => json!({ "log_weights": log_weights }),
            OperatorKind::Multiplication { multipliers } => json!({
                "multipliers": multipliers.iter().map(|z| complex_json(*z)).collect::<Vec<_>>()
            }),
            OperatorKind::Volterra { rule } => json!({ "rule": rule.name() }),
            OperatorKind::ScaledUnilateralShift { scale } => json!({ "scale": complex_json(*scale) }),
            OperatorKind::CircularShift | OperatorKind::Zero | OperatorKind::Identity => json!({}),
        };
        OperatorSpec::new(self.kind.name(), d, params)
    }

    /// Matrix-vector product through the kind's direct application rule.
    pub fn apply(&self, v: &CVector) -> Result<CVector> {
        let d = self.dim();
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                context: "operator application".into(),
                expected: d,
                actual: v.len(),
            });
        }
        Ok(self.apply_unchecked(v))
    }

    pub(crate) fn apply_unchecked(&self, v: &CVector) -> CVector {
        let d = self.dim();
        match &self.kind {
            OperatorKind::Dense => &self.matrix * v,
            OperatorKind::WeightedShift { .. } => {
                let mut out = CVector::zeros(d);
                for j in 1..d {
                    out[j] = self.matrix[(j, j - 1)] * v[j - 1];
                }
                out
            }
            OperatorKind::Multiplication { multipliers } => {
                CVector::from_iterator(d, multipliers.iter().zip(v.iter()).map(|(l, x)| l * x))
            }
            OperatorKind::Volterra { rule } => {
                let h = 1.0 / d as f64;
                let mut out = CVector::zeros(d);
                let mut prefix = ZERO;
                for i in 1..d {
                    // prefix = v_0 + … + v_{i-1}
                    prefix += v[i - 1];
                    out[i] = match rule {
                        VolterraRule::LeftEndpoint => prefix * h,
                        VolterraRule::AdamsBashforth2 => (prefix + v[i - 1] * 0.5) * h,
                    };
                }
                out
            }
            OperatorKind::CircularShift => {
                CVector::from_fn(d, |i, _| v[(i + d - 1) % d])
            }
            OperatorKind::ScaledUnilateralShift { scale } => {
                CVector::from_fn(d, |i, _| if i == 0 { ZERO } else { scale * v[i - 1] })
            }
            OperatorKind::Zero => CVector::zeros(d),
            OperatorKind::Identity => v.clone(),
        }
    }

    /// Exact spectrum for structured kinds, eigen-solve for dense ones.
    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        let d = self.dim();
        Ok(match &self.kind {
            OperatorKind::Dense => linalg::eigenvalues(&self.matrix)?,
            OperatorKind::WeightedShift { .. }
            | OperatorKind::Volterra { .. }
            | OperatorKind::ScaledUnilateralShift { .. }
            | OperatorKind::Zero => vec![ZERO; d],
            OperatorKind::Multiplication { multipliers } => multipliers.clone(),
            OperatorKind::CircularShift => (0..d)
                .map(|k| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / d as f64))
                .collect(),
            OperatorKind::Identity => vec![ONE; d],
        })
    }

    /// Operator 2-norm of `A^n` (largest singular value of the dense power).
    pub fn power_norm(&self, n: usize) -> Result<f64> {
        let norm = match &self.kind {
            OperatorKind::Identity => 1.0,
            OperatorKind::Multiplication { multipliers } => multipliers
                .iter()
                .map(|z| z.norm().powi(n as i32))
                .fold(0.0, f64::max),
            _ => norm2(&matrix_power(&self.matrix, n)),
        };
        if norm.is_finite() {
            Ok(norm)
        } else {
            Err(Error::NormOverflow(n))
        }
    }

    /// Natural log of the induced sup-norm of `A^n`.
    ///
    /// Closed forms for the structured kinds (weighted shift: best window
    /// product `a_{i+1}⋯a_{i+n}`); the Volterra kind applies `A` to the ones
    /// vector, which is exact because its weights are nonnegative.
    pub fn log_structured_norm(&self, n: usize) -> f64 {
        let d = self.dim();
        match &self.kind {
            OperatorKind::WeightedShift { log_weights } => {
                if n == 0 {
                    return 0.0;
                }
                if n >= d {
                    return f64::NEG_INFINITY;
                }
                log_weights
                    .windows(n)
                    .map(|w| w.iter().sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max)
            }
            OperatorKind::Volterra { .. } => {
                let mut v = CVector::from_element(d, ONE);
                for _ in 0..n {
                    v = self.apply_unchecked(&v);
                }
                linalg::vnorm_inf(&v).ln()
            }
            OperatorKind::Multiplication { multipliers } => {
                n as f64 * multipliers.iter().map(|z| z.norm()).fold(0.0, f64::max).ln()
            }
            OperatorKind::CircularShift | OperatorKind::Identity => 0.0,
            OperatorKind::ScaledUnilateralShift { scale } => {
                if n == 0 {
                    0.0
                } else if n >= d {
                    f64::NEG_INFINITY
                } else {
                    n as f64 * scale.norm().ln()
                }
            }
            OperatorKind::Zero => {
                if n == 0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            OperatorKind::Dense => linalg::norm_inf(&matrix_power(&self.matrix, n)).ln(),
        }
    }

    /// Induced sup-norm of `A^n`; see [`Operator::log_structured_norm`].
    pub fn structured_norm(&self, n: usize) -> f64 {
        self.log_structured_norm(n).exp()
    }

    /// Spectral radius by eigen-solve, cross-checked against the power ratio
    /// `(‖A^128‖ / ‖A^64‖)^{1/64}`.
    pub fn spectral_radius(&self, tol: f64) -> Result<SpectralRadius> {
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument("tol must be positive".into()));
        }
        let value = self.eigenvalues()?.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let power_estimate = power_ratio_estimate(&self.matrix, 64);
        let consistent = (value - power_estimate).abs() <= tol * value.max(1.0);
        Ok(SpectralRadius { value, power_estimate, consistent })
    }

    /// Solves `(zI − A) x = v`.
    pub fn resolvent_apply(&self, z: C64, v: &CVector) -> Result<CVector> {
        let d = self.dim();
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                context: "resolvent right-hand side".into(),
                expected: d,
                actual: v.len(),
            });
        }
        let shifted = CMatrix::identity(d, d) * z - &self.matrix;
        let rhs = CMatrix::from_column_slice(d, 1, v.as_slice());
        let x = checked_solve(&shifted, &rhs)?;
        Ok(x.column(0).into_owned())
    }
}

fn materialize(kind: &OperatorKind, d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    match kind {
        OperatorKind::Dense => unreachable!("dense operators carry their own matrix"),
        OperatorKind::WeightedShift { log_weights } => {
            for (j, lw) in log_weights.iter().enumerate() {
                m[(j + 1, j)] = c64(lw.exp(), 0.0);
            }
        }
        OperatorKind::Multiplication { multipliers } => {
            for (i, l) in multipliers.iter().enumerate() {
                m[(i, i)] = *l;
            }
        }
        OperatorKind::Volterra { rule } => {
            let h = 1.0 / d as f64;
            for i in 0..d {
                for j in 0..i {
                    m[(i, j)] = c64(h, 0.0);
                }
                if i >= 1 && *rule == VolterraRule::AdamsBashforth2 {
                    m[(i, i - 1)] = c64(1.5 * h, 0.0);
                }
            }
        }
        OperatorKind::CircularShift => {
            for i in 0..d {
                m[((i + 1) % d, i)] = ONE;
            }
        }
        OperatorKind::ScaledUnilateralShift { scale } => {
            for i in 0..d.saturating_sub(1) {
                m[(i + 1, i)] = *scale;
            }
        }
        OperatorKind::Zero => {}
        OperatorKind::Identity => m.fill_with_identity(),
    }
    m
}

/// `(‖A^{2n}‖ / ‖A^n‖)^{1/n}` with `n` a power of two, computed with
/// renormalized squaring so that neither overflow nor underflow occurs.
fn power_ratio_estimate(a: &CMatrix, n: usize) -> f64 {
    debug_assert!(n.is_power_of_two());
    let s0 = norm2(a);
    if s0 == 0.0 {
        return 0.0;
    }
    let mut p = a / c64(s0, 0.0);
    let mut log_norm = s0.ln();
    let mut k = 1;
    let mut log_at_n = f64::NAN;
    while k < 2 * n {
        p = &p * &p;
        log_norm *= 2.0;
        let s = norm2(&p);
        if s == 0.0 {
            return 0.0;
        }
        p /= c64(s, 0.0);
        log_norm += s.ln();
        k *= 2;
        if k == n {
            log_at_n = log_norm;
        }
    }
    ((log_norm - log_at_n) / n as f64).exp()
}

/// Result of [`Operator::spectral_radius`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralRadius {
    pub value: f64,
    pub power_estimate: f64,
    pub consistent: bool,
}

/// ARMA(p, q) model `Y_t − Σ A_i Y_{t−i} = Σ B_k Z_{t−k}` with `d × d` coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct ArmaModel {
    ar_ops: Vec<Operator>,
    ma_ops: Vec<Operator>,
}

impl ArmaModel {
    pub fn new(ar_ops: Vec<Operator>, ma_ops: Vec<Operator>) -> Result<Self> {
        if ar_ops.is_empty() {
            return Err(Error::InvalidParams("an ARMA model needs p >= 1 AR operators".into()));
        }
        if ma_ops.is_empty() {
            return Err(Error::InvalidParams("an ARMA model needs at least B_0".into()));
        }
        let d = ar_ops[0].dim();
        for (name, ops) in [("A", &ar_ops), ("B", &ma_ops)] {
            let offset = usize::from(name == "A");
            for (i, op) in ops.iter().enumerate() {
                if op.dim() != d {
                    return Err(Error::DimensionMismatch {
                        context: format!("operator {name}_{}", i + offset),
                        expected: d,
                        actual: op.dim(),
                    });
                }
            }
        }
        Ok(ArmaModel { ar_ops, ma_ops })
    }

    /// AR(1) model `Y_t − A Y_{t−1} = Z_t`.
    pub fn ar1(a: Operator) -> Self {
        let d = a.dim();
        ArmaModel { ar_ops: vec![a], ma_ops: vec![Operator::identity(d)] }
    }

    pub fn p(&self) -> usize {
        self.ar_ops.len()
    }

    pub fn q(&self) -> usize {
        self.ma_ops.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.ar_ops[0].dim()
    }

    pub fn ar_ops(&self) -> &[Operator] {
        &self.ar_ops
    }

    pub fn ma_ops(&self) -> &[Operator] {
        &self.ma_ops
    }

    /// `Σ_{k=0}^q A_1^{q−k} B_k` (p = 1 models), the operator in the log⁺ moment condition.
    pub fn moment_transform(&self) -> CMatrix {
        let a = self.ar_ops[0].matrix();
        let q = self.q();
        let mut acc = self.ma_ops[0].matrix().clone();
        for k in 1..=q {
            acc = a * acc + self.ma_ops[k].matrix();
        }
        acc
    }

    /// `Q(z) = z^p I − z^{p−1} A_1 − … − A_p`.
    pub fn q_polynomial(&self, z: C64) -> CMatrix {
        let d = self.dim();
        let mut acc = CMatrix::identity(d, d);
        for a in &self.ar_ops {
            acc = acc * z - a.matrix();
        }
        acc
    }

    /// `I − z A_1 − … − z^p A_p`.
    pub fn ar_polynomial(&self, z: C64) -> CMatrix {
        let d = self.dim();
        let mut acc = CMatrix::zeros(d, d);
        for a in self.ar_ops.iter().rev() {
            acc = (acc + a.matrix()) * z;
        }
        CMatrix::identity(d, d) - acc
    }

    /// `B_0 + z B_1 + … + z^q B_q`.
    pub fn ma_polynomial(&self, z: C64) -> CMatrix {
        let d = self.dim();
        let mut acc = CMatrix::zeros(d, d);
        for b in self.ma_ops.iter().rev() {
            acc = acc * z + b.matrix();
        }
        acc
    }

    pub fn to_json(&self) -> Value {
        json!({
            "ar": self.ar_ops.iter().map(Operator::to_spec).collect::<Vec<_>>(),
            "ma": self.ma_ops.iter().map(Operator::to_spec).collect::<Vec<_>>(),
        })
    }
}

/// ARMA(p, q) rewritten as an ARMA(1, q) model on the `p·d`-dimensional product space.
#[derive(Clone, Debug)]
pub struct CompanionLift {
    /// Block companion operator: first block row `A_1 … A_p`, identities on the subdiagonal.
    pub companion: Operator,
    /// `B̃_k`, embedded as the top-left block of a `pd × pd` matrix.
    pub ma_ops: Vec<Operator>,
    /// `pd × d` embedding `Z ↦ (Z, 0, …, 0)`.
    pub embedding: CMatrix,
    pub model: ArmaModel,
}

impl CompanionLift {
    /// First block of a lifted state.
    pub fn project(&self, state: &CVector) -> CVector {
        let d = self.embedding.ncols();
        state.rows(0, d).into_owned()
    }
}

pub fn companion_lift(model: &ArmaModel) -> Result<CompanionLift> {
    let d = model.dim();
    let p = model.p();
    let n = p * d;
    let mut a = CMatrix::zeros(n, n);
    for (i, op) in model.ar_ops().iter().enumerate() {
        if op.dim() != d {
            return Err(Error::DimensionMismatch {
                context: format!("operator A_{}", i + 1),
                expected: d,
                actual: op.dim(),
            });
        }
        a.view_mut((0, i * d), (d, d)).copy_from(op.matrix());
    }
    for i in 1..p {
        a.view_mut((i * d, (i - 1) * d), (d, d)).fill_with_identity();
    }
    let companion = if p == 1 { model.ar_ops()[0].clone() } else { Operator::dense(a)? };
    let mut embedding = CMatrix::zeros(n, d);
    embedding.view_mut((0, 0), (d, d)).fill_with_identity();
    let ma_ops = model
        .ma_ops()
        .iter()
        .map(|b| {
            if p == 1 {
                Ok(b.clone())
            } else {
                let mut m = CMatrix::zeros(n, n);
                m.view_mut((0, 0), (d, d)).copy_from(b.matrix());
                Operator::dense(m)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let lifted = ArmaModel::new(vec![companion.clone()], ma_ops.clone())?;
    Ok(CompanionLift { companion, ma_ops, embedding, model: lifted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn r(x: f64) -> C64 {
        c64(x, 0.0)
    }

    #[test]
    fn zero_operator_materializes_to_zero_matrix() {
        let op = build_operator(&OperatorSpec::new("zero", 3, json!({}))).unwrap();
        assert_eq!(op.matrix(), &CMatrix::zeros(3, 3));
    }

    #[test]
    fn multiplication_materializes_diagonal() {
        let op = build_operator(&OperatorSpec::new(
            "multiplication",
            2,
            json!({"multipliers": [[0.5, 0.0], [2.0, 0.0]]}),
        ))
        .unwrap();
        assert_eq!(op.matrix(), &CMatrix::from_row_slice(2, 2, &[r(0.5), ZERO, ZERO, r(2.0)]));
    }

    #[test]
    fn volterra_left_endpoint_d4() {
        let op = build_operator(&OperatorSpec::new(
            "volterra",
            4,
            json!({"rule": "left_endpoint"}),
        ))
        .unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if j < i { 0.25 } else { 0.0 };
                assert_eq!(op.matrix()[(i, j)], r(expected), "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn unknown_kind_and_bad_lengths() {
        assert!(matches!(
            build_operator(&OperatorSpec::new("toeplitz", 2, json!({}))),
            Err(Error::UnknownKind(_))
        ));
        assert!(matches!(
            build_operator(&OperatorSpec::new("weighted_shift", 3, json!({"weights": [1.0]}))),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            build_operator(&OperatorSpec::new("weighted_shift", 2, json!({"weights": [-1.0]}))),
            Err(Error::InvalidParams(_))
        ));
        assert!(matches!(
            build_operator(&OperatorSpec::new("dense", 2, json!({"entries": [[1.0, 2.0]]}))),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(build_operator(&OperatorSpec::new("zero", 0, json!({}))).is_err());
    }

    #[test]
    fn apply_examples() {
        let id = Operator::identity(2);
        let v = CVector::from_vec(vec![r(1.0), c64(0.0, 2.0)]);
        assert_eq!(id.apply(&v).unwrap(), v);

        let shift = build_operator(&OperatorSpec::new(
            "weighted_shift",
            3,
            json!({"weights": [1.0, 1.0]}),
        ))
        .unwrap();
        let e0 = CVector::from_vec(vec![ONE, ZERO, ZERO]);
        assert_eq!(shift.apply(&e0).unwrap(), CVector::from_vec(vec![ZERO, ONE, ZERO]));

        let diag = Operator::multiplication(vec![r(0.5), r(2.0)]);
        let ones = CVector::from_vec(vec![ONE, ONE]);
        assert_eq!(diag.apply(&ones).unwrap(), CVector::from_vec(vec![r(0.5), r(2.0)]));

        assert!(diag.apply(&e0).is_err());
    }

    #[test]
    fn quasinilpotent_shift_norm_at_three() {
        // a_1 = e^{-e}, a_n = e^{-e^n} / e^{-e^{n-1}}
        let e = std::f64::consts::E;
        let log_weights: Vec<f64> = (1..12)
            .map(|n| if n == 1 { -e } else { -(e.powi(n) - e.powi(n - 1)) })
            .collect();
        let op = Operator::weighted_shift_log(log_weights);
        let expected = (-e.powi(3)).exp();
        assert_relative_eq!(op.structured_norm(3), expected, max_relative = 1e-12);
        assert_relative_eq!(op.log_structured_norm(7), -e.powi(7), max_relative = 1e-12);
    }

    #[test]
    fn identity_power_norm() {
        assert_relative_eq!(Operator::identity(4).power_norm(17).unwrap(), 1.0);
        let dense = Operator::dense(CMatrix::identity(3, 3)).unwrap();
        assert_relative_eq!(dense.power_norm(17).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn power_norm_overflow_is_an_error() {
        let big = Operator::dense(CMatrix::identity(2, 2) * r(1e200)).unwrap();
        assert!(matches!(big.power_norm(3), Err(Error::NormOverflow(3))));
    }

    #[test]
    fn volterra_sup_norm_n3() {
        let op = Operator::volterra(512, VolterraRule::LeftEndpoint);
        let rel = (op.structured_norm(3) * 6.0 - 1.0).abs();
        assert!(rel < 0.02, "relative error {rel}");
    }

    #[test]
    fn spectral_radius_examples() {
        let diag = Operator::multiplication(vec![r(0.5), r(2.0)]);
        assert_relative_eq!(diag.spectral_radius(1e-6).unwrap().value, 2.0);

        let mut j = CMatrix::zeros(5, 5);
        for i in 0..4 {
            j[(i, i + 1)] = ONE;
        }
        let jordan = Operator::dense(j).unwrap();
        let sr = jordan.spectral_radius(1e-6).unwrap();
        assert_eq!(sr.value, 0.0);
        assert_eq!(sr.power_estimate, 0.0);
        assert!(sr.consistent);

        let t = Operator::dense(CMatrix::from_row_slice(2, 2, &[r(0.9), ONE, ZERO, r(0.9)])).unwrap();
        let sr = t.spectral_radius(0.05).unwrap();
        assert_relative_eq!(sr.value, 0.9, epsilon = 1e-12);
        // Jordan-block transient: ratio estimate is 0.9 * 2^{1/64}.
        assert_relative_eq!(sr.power_estimate, 0.9 * 2f64.powf(1.0 / 64.0), max_relative = 1e-2);
        assert!(sr.consistent);
    }

    #[test]
    fn resolvent_examples() {
        let zero = Operator::zero(2);
        let x = zero.resolvent_apply(r(2.0), &CVector::from_vec(vec![r(4.0), r(6.0)])).unwrap();
        assert_relative_eq!((x - CVector::from_vec(vec![r(2.0), r(3.0)])).norm(), 0.0, epsilon = 1e-14);

        let half = Operator::multiplication(vec![r(0.5)]);
        let x = half.resolvent_apply(ONE, &CVector::from_vec(vec![ONE])).unwrap();
        assert_relative_eq!(x[0].re, 2.0, epsilon = 1e-14);

        let diag = Operator::multiplication(vec![r(0.5), r(2.0)]);
        let x = diag.resolvent_apply(ONE, &CVector::from_vec(vec![ONE, ONE])).unwrap();
        assert_relative_eq!(x[0].re, 2.0, epsilon = 1e-14);
        assert_relative_eq!(x[1].re, -1.0, epsilon = 1e-14);

        let unit = Operator::identity(2);
        assert!(matches!(
            unit.resolvent_apply(ONE, &CVector::from_vec(vec![ONE, ONE])),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn companion_lift_examples() {
        let a = Operator::dense(CMatrix::from_row_slice(2, 2, &[r(0.3), ONE, ZERO, r(-0.2)])).unwrap();
        let lift = companion_lift(&ArmaModel::ar1(a.clone())).unwrap();
        assert_eq!(lift.companion.matrix(), a.matrix());

        let model = ArmaModel::new(
            vec![Operator::multiplication(vec![r(0.5)]), Operator::multiplication(vec![r(0.06)])],
            vec![Operator::identity(1)],
        )
        .unwrap();
        let lift = companion_lift(&model).unwrap();
        assert_eq!(
            lift.companion.matrix(),
            &CMatrix::from_row_slice(2, 2, &[r(0.5), r(0.06), ONE, ZERO])
        );
        let ev = lift.companion.eigenvalues().unwrap();
        assert!(linalg::match_spectra(&ev, &[r(0.6), r(-0.1)]) < 1e-12);
        assert_eq!(lift.embedding, CMatrix::from_row_slice(2, 1, &[ONE, ZERO]));
        assert_eq!(lift.ma_ops[0].matrix()[(0, 0)], ONE);
        assert_eq!(lift.ma_ops[0].matrix()[(1, 1)], ZERO);
    }

    #[test]
    fn model_rejects_mismatched_dims() {
        let err = ArmaModel::new(vec![Operator::zero(2)], vec![Operator::identity(3)]).unwrap_err();
        match err {
            Error::DimensionMismatch { context, .. } => assert_eq!(context, "operator B_0"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn spec_round_trip() {
        let ops = [
            Operator::weighted_shift_log(vec![-1.0, -2.0]),
            Operator::volterra(5, VolterraRule::LeftEndpoint),
            Operator::scaled_unilateral_shift(4, c64(0.5, 0.25)),
            Operator::circular_shift(3),
            Operator::multiplication(vec![c64(0.1, 0.2), r(0.3)]),
        ];
        for op in ops {
            assert_eq!(build_operator(&op.to_spec()).unwrap(), op);
        }
    }
}
