//! Innovation sequences.
//!
//! Draws are addressed by `(seed, replicate, t)` through [`crate::rng`], so
//! any window of any replicate can be regenerated independently. Heavy-tailed
//! kinds are represented as `Z = e^{s}·u` with a unit vector `u` and a log
//! scale `s`, because `e^{s}` overflows double precision with appreciable
//! probability.
//!
//! Kinds:
//!
//! - `gaussian`: independent real components `N(0, σ_i²)`.
//! - `componentwise_gaussian`: independent circular complex components with `E|Z_i|² = σ_i²`.
//! - `pareto_exp`: `Z = x·e^{P}`, `P` Pareto with index 1 on `[1, ∞)`; with
//!   `nesting = 2` the scale is `e^{e^{P}}` instead.
//! - `gamma_inv_tail`: `Z = x·X`, `X` with density proportional to
//!   `1/(x (ln x)² ln ln x)` on `[x1, ∞)`. With `W = ln ln X` the survival
//!   function is `E1(w)/E1(w1)`, which is inverted numerically.
//! - `point_mass`: a fixed vector.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::linalg::{c64, complex_to_json, vnorm, CMatrix, CVector, C64};
use crate::rng::{normal_pair, unit_open, SlotReader};
use crate::special::{inverse_ln_e1, ln_e1};

/// Smallest admissible cutoff for `gamma_inv_tail`, `e^e`, so that `ln ln x1 ≥ 1`.
pub fn gamma_tail_min_cutoff() -> f64 {
    std::f64::consts::E.exp()
}

/// Serialized noise description: `{"kind": ..., "params": {...}, "seed": n}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: String,
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NoiseKind {
    Gaussian { sigma: Vec<f64> },
    ComponentwiseGaussian { sigma: Vec<f64> },
    ParetoExp { direction: CVector, nesting: u32 },
    GammaInvTail { direction: CVector, x1: f64 },
    PointMass { value: CVector },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Noise {
    kind: NoiseKind,
    seed: u64,
}

/// A draw `Z = e^{log_scale}·direction`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledDraw {
    pub log_scale: f64,
    pub direction: CVector,
}

/// Innovations `Z_t` for `t_start ≤ t < t_start + values.len()`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisePath {
    pub t_start: i64,
    pub values: Vec<CVector>,
}

impl NoisePath {
    pub fn new(t_start: i64, values: Vec<CVector>) -> Self {
        NoisePath { t_start, values }
    }

    /// Path that is `v` at every time in `[t_start, t_end]`.
    pub fn constant(v: CVector, t_start: i64, t_end: i64) -> Self {
        let n = (t_end - t_start + 1).max(0) as usize;
        NoisePath { t_start, values: vec![v; n] }
    }

    /// Last covered time index.
    pub fn t_end(&self) -> i64 {
        self.t_start + self.values.len() as i64 - 1
    }

    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, |v| v.len())
    }

    pub fn get(&self, t: i64) -> Option<&CVector> {
        if t < self.t_start {
            return None;
        }
        self.values.get((t - self.t_start) as usize)
    }

    pub fn require(&self, need_start: i64, need_end: i64) -> Result<()> {
        if need_start < self.t_start || need_end > self.t_end() {
            return Err(Error::InsufficientWindow {
                need_start,
                need_end,
                have_start: self.t_start,
                have_end: self.t_end(),
            });
        }
        Ok(())
    }

    pub fn scaled(&self, alpha: C64) -> Self {
        NoisePath { t_start: self.t_start, values: self.values.iter().map(|v| v * alpha).collect() }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidNoise(msg.into())
}

fn get<'a>(spec: &'a NoiseSpec, key: &str) -> Result<&'a Value> {
    spec.params
        .get(key)
        .ok_or_else(|| Error::Schema { path: format!("params.{key}"), message: "missing parameter".into() })
}

fn real_list(v: &Value, key: &str) -> Result<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| Error::Schema {
        path: format!("params.{key}"),
        message: "expected an array of numbers".into(),
    })?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| {
            x.as_f64().ok_or_else(|| Error::Schema {
                path: format!("params.{key}[{i}]"),
                message: "expected a number".into(),
            })
        })
        .collect()
}

fn complex_vector(v: &Value, key: &str) -> Result<CVector> {
    let arr = v.as_array().ok_or_else(|| Error::Schema {
        path: format!("params.{key}"),
        message: "expected an array of complex numbers".into(),
    })?;
    let vals = arr
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let bad = || Error::Schema {
                path: format!("params.{key}[{i}]"),
                message: "expected a complex number [re, im]".into(),
            };
            match x {
                Value::Number(n) => n.as_f64().map(|r| c64(r, 0.0)).ok_or_else(bad),
                Value::Array(p) if p.len() == 2 => match (p[0].as_f64(), p[1].as_f64()) {
                    (Some(re), Some(im)) => Ok(c64(re, im)),
                    _ => Err(bad()),
                },
                _ => Err(bad()),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if vals.is_empty() {
        return Err(invalid(format!("{key} must be non-empty")));
    }
    if vals.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(invalid(format!("{key} entries must be finite")));
    }
    Ok(CVector::from_vec(vals))
}

fn sigma_list(spec: &NoiseSpec) -> Result<Vec<f64>> {
    let sigma = real_list(get(spec, "sigma")?, "sigma")?;
    if sigma.is_empty() {
        return Err(invalid("sigma must be non-empty"));
    }
    if sigma.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(invalid("standard deviations must be finite and nonnegative"));
    }
    Ok(sigma)
}

fn unit_direction(spec: &NoiseSpec) -> Result<CVector> {
    let x = complex_vector(get(spec, "direction")?, "direction")?;
    if (vnorm(&x) - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("direction must have unit norm, got {}", vnorm(&x))));
    }
    Ok(x)
}

impl Noise {
    pub fn from_spec(spec: &NoiseSpec) -> Result<Self> {
        let kind = match spec.kind.as_str() {
            "gaussian" => NoiseKind::Gaussian { sigma: sigma_list(spec)? },
            "componentwise_gaussian" => NoiseKind::ComponentwiseGaussian { sigma: sigma_list(spec)? },
            "pareto_exp" => {
                if let Some(alpha) = spec.params.get("alpha") {
                    if alpha.as_f64() != Some(1.0) {
                        return Err(invalid("pareto_exp supports only the Pareto index alpha = 1"));
                    }
                }
                let nesting = match spec.params.get("nesting") {
                    None => 1,
                    Some(v) => match v.as_u64() {
                        Some(n @ 1..=2) => n as u32,
                        _ => return Err(invalid("nesting must be 1 or 2")),
                    },
                };
                NoiseKind::ParetoExp { direction: unit_direction(spec)?, nesting }
            }
            "gamma_inv_tail" => {
                let x1 = get(spec, "x1")?
                    .as_f64()
                    .ok_or_else(|| Error::Schema { path: "params.x1".into(), message: "expected a number".into() })?;
                if !(x1 >= gamma_tail_min_cutoff() * (1.0 - 1e-15)) || !x1.is_finite() {
                    return Err(invalid(format!(
                        "cutoff x1 = {x1} must be finite and at least e^e ≈ {:.6}",
                        gamma_tail_min_cutoff()
                    )));
                }
                NoiseKind::GammaInvTail { direction: unit_direction(spec)?, x1 }
            }
            "point_mass" => NoiseKind::PointMass { value: complex_vector(get(spec, "value")?, "value")? },
            other => return Err(invalid(format!("unknown noise kind `{other}`"))),
        };
        Ok(Noise { kind, seed: spec.seed })
    }

    pub fn new(kind: NoiseKind, seed: u64) -> Self {
        Noise { kind, seed }
    }

    pub fn gaussian(sigma: Vec<f64>, seed: u64) -> Self {
        Noise { kind: NoiseKind::Gaussian { sigma }, seed }
    }

    pub fn point_mass(value: CVector) -> Self {
        Noise { kind: NoiseKind::PointMass { value }, seed: 0 }
    }

    pub fn pareto_exp(direction: CVector, nesting: u32, seed: u64) -> Self {
        Noise { kind: NoiseKind::ParetoExp { direction, nesting }, seed }
    }

    pub fn gamma_inv_tail(direction: CVector, x1: f64, seed: u64) -> Self {
        Noise { kind: NoiseKind::GammaInvTail { direction, x1 }, seed }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Noise { kind: self.kind.clone(), seed }
    }

    pub fn kind(&self) -> &NoiseKind {
        &self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            NoiseKind::Gaussian { sigma } | NoiseKind::ComponentwiseGaussian { sigma } => sigma.len(),
            NoiseKind::ParetoExp { direction, .. } | NoiseKind::GammaInvTail { direction, .. } => {
                direction.len()
            }
            NoiseKind::PointMass { value } => value.len(),
        }
    }

    /// True for kinds whose draws may overflow unless kept in scaled form.
    pub fn is_heavy_tailed(&self) -> bool {
        matches!(self.kind, NoiseKind::ParetoExp { .. } | NoiseKind::GammaInvTail { .. })
    }

    pub fn to_spec(&self) -> NoiseSpec {
        let cvec = |v: &CVector| v.iter().map(|z| complex_to_json(*z)).collect::<Vec<_>>();
        let (kind, params) = match &self.kind {
            NoiseKind::Gaussian { sigma } => ("gaussian", json!({ "sigma": sigma })),
            NoiseKind::ComponentwiseGaussian { sigma } => ("componentwise_gaussian", json!({ "sigma": sigma })),
            NoiseKind::ParetoExp { direction, nesting } => {
                ("pareto_exp", json!({ "direction": cvec(direction), "alpha": 1.0, "nesting": nesting }))
            }
            NoiseKind::GammaInvTail { direction, x1 } => {
                ("gamma_inv_tail", json!({ "direction": cvec(direction), "x1": x1 }))
            }
            NoiseKind::PointMass { value } => ("point_mass", json!({ "value": cvec(value) })),
        };
        let params = match params {
            Value::Object(m) => m,
            _ => unreachable!(),
        };
        NoiseSpec { kind: kind.to_string(), params, seed: self.seed }
    }

    /// Log scale of a heavy-tailed draw from the scalar stream slot.
    fn heavy_log_scale(&self, s: [u64; 2]) -> f64 {
        let u = unit_open(s[0]);
        match &self.kind {
            NoiseKind::ParetoExp { nesting, .. } => {
                let p = 1.0 / u;
                if *nesting == 2 {
                    p.exp()
                } else {
                    p
                }
            }
            NoiseKind::GammaInvTail { x1, .. } => {
                // P(W > w) = E1(w)/E1(w1), W = ln ln X
                let w1 = x1.ln().ln();
                let w = inverse_ln_e1(u.ln() + ln_e1(w1), w1);
                w.exp()
            }
            _ => unreachable!("not a heavy-tailed kind"),
        }
    }

    /// Draws for `t_start ≤ t < t_start + count` of one replicate, in scaled form.
    pub fn window_scaled(&self, replicate: u64, t_start: i64, count: usize) -> Vec<ScaledDraw> {
        match &self.kind {
            NoiseKind::ParetoExp { direction, .. } | NoiseKind::GammaInvTail { direction, .. } => {
                let mut reader = SlotReader::new(self.seed, replicate, 0, t_start);
                (0..count)
                    .map(|_| ScaledDraw {
                        log_scale: self.heavy_log_scale(reader.next_slot()),
                        direction: direction.clone(),
                    })
                    .collect()
            }
            _ => self
                .window(replicate, t_start, count)
                .values
                .into_iter()
                .map(|v| ScaledDraw { log_scale: 0.0, direction: v })
                .collect(),
        }
    }

    /// Draws for `t_start ≤ t < t_start + count` of one replicate.
    ///
    /// Heavy-tailed kinds are exponentiated here and may contain `inf`
    /// entries; use [`Noise::window_scaled`] when that matters.
    pub fn window(&self, replicate: u64, t_start: i64, count: usize) -> NoisePath {
        let values = match &self.kind {
            NoiseKind::Gaussian { sigma } => {
                let mut out = vec![CVector::zeros(sigma.len()); count];
                for (i, s) in sigma.iter().enumerate() {
                    if *s == 0.0 {
                        continue;
                    }
                    let mut reader = SlotReader::new(self.seed, replicate, i as u64, t_start);
                    for v in out.iter_mut() {
                        v[i] = c64(s * normal_pair(reader.next_slot()).0, 0.0);
                    }
                }
                out
            }
            NoiseKind::ComponentwiseGaussian { sigma } => {
                let mut out = vec![CVector::zeros(sigma.len()); count];
                for (i, s) in sigma.iter().enumerate() {
                    if *s == 0.0 {
                        continue;
                    }
                    let scale = s / std::f64::consts::SQRT_2;
                    let mut reader = SlotReader::new(self.seed, replicate, i as u64, t_start);
                    for v in out.iter_mut() {
                        let (a, b) = normal_pair(reader.next_slot());
                        v[i] = c64(scale * a, scale * b);
                    }
                }
                out
            }
            NoiseKind::PointMass { value } => vec![value.clone(); count],
            NoiseKind::ParetoExp { .. } | NoiseKind::GammaInvTail { .. } => self
                .window_scaled(replicate, t_start, count)
                .into_iter()
                .map(|d| d.direction * c64(d.log_scale.exp(), 0.0))
                .collect(),
        };
        NoisePath { t_start, values }
    }

    /// Component `i` of `Z_t` for `t_start ≤ t < t_start + count` (Gaussian kinds and point masses).
    pub fn component_window(&self, replicate: u64, component: usize, t_start: i64, count: usize) -> Vec<C64> {
        match &self.kind {
            NoiseKind::Gaussian { sigma } => {
                let s = sigma[component];
                let mut reader = SlotReader::new(self.seed, replicate, component as u64, t_start);
                (0..count).map(|_| c64(s * normal_pair(reader.next_slot()).0, 0.0)).collect()
            }
            NoiseKind::ComponentwiseGaussian { sigma } => {
                let s = sigma[component] / std::f64::consts::SQRT_2;
                let mut reader = SlotReader::new(self.seed, replicate, component as u64, t_start);
                (0..count)
                    .map(|_| {
                        let (a, b) = normal_pair(reader.next_slot());
                        c64(s * a, s * b)
                    })
                    .collect()
            }
            _ => self.window(replicate, t_start, count).values.iter().map(|v| v[component]).collect(),
        }
    }

    /// `count` i.i.d. draws (replicate 0, times `0..count`).
    pub fn sample(&self, count: usize) -> Result<Vec<CVector>> {
        if count == 0 {
            return Err(Error::InvalidArgument("count must be at least 1".into()));
        }
        Ok(self.window(0, 0, count).values)
    }

    /// `ln ‖T Z_t‖` for `t = 0..n` of replicate 0 (`T = I` when absent).
    pub fn log_norms(&self, transform: Option<&CMatrix>, n: usize) -> Result<Vec<f64>> {
        if let Some(t) = transform {
            if t.ncols() != self.dim() {
                return Err(Error::DimensionMismatch {
                    context: "moment transform".into(),
                    expected: self.dim(),
                    actual: t.ncols(),
                });
            }
        }
        let apply = |v: &CVector| -> f64 {
            match transform {
                Some(t) => vnorm(&(t * v)).ln(),
                None => vnorm(v).ln(),
            }
        };
        if let NoiseKind::ParetoExp { direction, .. } | NoiseKind::GammaInvTail { direction, .. } = &self.kind {
            let base = apply(direction);
            let chunk = 1 << 14;
            let starts: Vec<usize> = (0..n).step_by(chunk).collect();
            let parts: Vec<Vec<f64>> = starts
                .into_par_iter()
                .map(|s| {
                    let mut reader = SlotReader::new(self.seed, 0, 0, s as i64);
                    (s..(s + chunk).min(n)).map(|_| base + self.heavy_log_scale(reader.next_slot())).collect()
                })
                .collect();
            return Ok(parts.concat());
        }
        Ok(self.window(0, 0, n).values.iter().map(apply).collect())
    }
}
