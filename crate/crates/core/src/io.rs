//! Model and noise files.
//!
//! A model file is `{"ar": [spec, …], "ma": [spec, …]}` where each spec is
//! `{"kind": …, "dim": d, "params": {…}}` and complex entries are written as
//! `[re, im]`. A noise file is `{"kind": …, "params": {…}, "seed": n}`.

use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::noise::{Noise, NoiseSpec};
use crate::operator::{build_operator, ArmaModel, OperatorSpec};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    ar: Vec<Value>,
    #[serde(default)]
    ma: Option<Vec<Value>>,
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Schema { path: format!("line {} column {}", e.line(), e.column()), message: e.to_string() }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))
}

fn operator_at(v: &Value, prefix: &str) -> Result<crate::operator::Operator> {
    let spec: OperatorSpec = serde_json::from_value(v.clone())
        .map_err(|e| Error::Schema { path: prefix.to_string(), message: e.to_string() })?;
    build_operator(&spec).map_err(|e| match e {
        Error::Schema { path, message } => Error::Schema { path: format!("{prefix}.{path}"), message },
        other => Error::Schema { path: prefix.to_string(), message: other.to_string() },
    })
}

/// Parses and validates a model document. A missing `ma` list means `B_0 = I`.
pub fn parse_model(text: &str) -> Result<ArmaModel> {
    let file: ModelFile = serde_json::from_str(text).map_err(json_error)?;
    if file.ar.is_empty() {
        return Err(Error::Schema { path: "ar".into(), message: "at least one AR operator is required".into() });
    }
    let ar: Vec<_> = file
        .ar
        .iter()
        .enumerate()
        .map(|(i, v)| operator_at(v, &format!("ar[{i}]")))
        .collect::<Result<_>>()?;
    let d = ar[0].dim();
    let ma: Vec<_> = match &file.ma {
        None => vec![crate::operator::Operator::identity(d)],
        Some(list) if list.is_empty() => {
            return Err(Error::Schema { path: "ma".into(), message: "B_0 is required".into() })
        }
        Some(list) => list
            .iter()
            .enumerate()
            .map(|(k, v)| operator_at(v, &format!("ma[{k}]")))
            .collect::<Result<_>>()?,
    };
    for (name, ops) in [("ar", &ar), ("ma", &ma)] {
        for (i, op) in ops.iter().enumerate() {
            if op.dim() != d {
                return Err(Error::Schema {
                    path: format!("{name}[{i}]"),
                    message: format!("operator has dim {} but ar[0] has dim {d}", op.dim()),
                });
            }
        }
    }
    ArmaModel::new(ar, ma)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ArmaModel> {
    parse_model(&read(path.as_ref())?)
}

/// Canonical serialized form of a model (what [`ArmaModel::to_json`] emits).
pub fn model_to_string(model: &ArmaModel) -> String {
    serde_json::to_string_pretty(&model.to_json()).expect("model serializes")
}

pub fn parse_noise(text: &str) -> Result<Noise> {
    let spec: NoiseSpec = serde_json::from_str(text).map_err(json_error)?;
    Noise::from_spec(&spec)
}

pub fn load_noise(path: impl AsRef<Path>) -> Result<Noise> {
    parse_noise(&read(path.as_ref())?)
}

pub fn noise_to_string(noise: &Noise) -> String {
    serde_json::to_string_pretty(&noise.to_spec()).expect("noise serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_scalar_model() {
        let m = parse_model(r#"{"ar": [{"kind": "dense", "dim": 1, "params": {"entries": [[[0.5, 0]]]}}]}"#).unwrap();
        assert_eq!((m.dim(), m.p(), m.q()), (1, 1, 0));
    }

    #[test]
    fn mismatched_dims_name_the_operator() {
        let text = r#"{"ar": [{"kind": "identity", "dim": 2}],
                       "ma": [{"kind": "identity", "dim": 2}, {"kind": "zero", "dim": 3}]}"#;
        match parse_model(text) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "ma[1]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nested_parameter_errors_carry_the_path() {
        let text = r#"{"ar": [{"kind": "dense", "dim": 1, "params": {"entries": [["x"]]}}]}"#;
        match parse_model(text) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "ar[0].params.entries[0][0]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_report_the_line() {
        match parse_model("{\n\"ar\": [,]}") {
            Err(Error::Schema { path, .. }) => assert!(path.starts_with("line 2"), "{path}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn structured_kind_materializes() {
        let m = parse_model(r#"{"ar": [{"kind": "weighted_shift", "dim": 3, "params": {"weights": [0.5, 0.25]}}]}"#)
            .unwrap();
        assert!((m.ar_ops()[0].matrix()[(2, 1)].re - 0.25).abs() < 1e-15);
    }

    #[test]
    fn unknown_kind_is_a_schema_error() {
        assert!(matches!(
            parse_model(r#"{"ar": [{"kind": "mystery", "dim": 1}]}"#),
            Err(Error::Schema { .. })
        ));
    }
}
