mod common;

use common::fixture;
use oparma::io::{load_model, load_noise, model_to_string, noise_to_string};
use serde_json::Value;

const MODELS: &[&str] = &[
    "hyper.json",
    "jordan.json",
    "unitroot.json",
    "scalar_half.json",
    "arma21.json",
    "weighted_shift.json",
    "structured.json",
];

const NOISES: &[&str] = &["gaussian2.json", "gaussian1.json", "circular3.json", "pareto1.json", "gamma_tail1.json"];

fn file_value(name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap()
}

#[test]
fn model_fixtures_are_in_canonical_form() {
    for name in MODELS {
        let model = load_model(fixture(name)).unwrap();
        assert_eq!(model.to_json(), file_value(name), "{name}");
        let text: Value = serde_json::from_str(&model_to_string(&model)).unwrap();
        assert_eq!(text, file_value(name), "{name}");
    }
}

#[test]
fn noise_fixtures_are_in_canonical_form() {
    for name in NOISES {
        let noise = load_noise(fixture(name)).unwrap();
        let text: Value = serde_json::from_str(&noise_to_string(&noise)).unwrap();
        assert_eq!(text, file_value(name), "{name}");
    }
}
