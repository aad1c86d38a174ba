mod common;

use common::fixture;
use oparma::cli::run;
use serde_json::Value;

fn invoke(args: &[&str]) -> (i32, String, String) {
    let argv: Vec<String> = std::iter::once("oparma").chain(args.iter().copied()).map(String::from).collect();
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(&argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap_or_else(|e| panic!("not JSON ({e}): {text}"))
}

#[test]
fn split_of_the_diagonal_fixture() {
    let (code, out, _) = invoke(&["split", "--model", &fixture("hyper.json")]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert!((v["r_inner"].as_f64().unwrap() - 0.5).abs() < 1e-10);
    assert!((v["r_outer_inv"].as_f64().unwrap() - 0.5).abs() < 1e-10);
    assert_eq!(v["rank_inner"], 1);
}

#[test]
fn split_of_the_jordan_fixture_has_the_oblique_projector() {
    let (code, out, _) = invoke(&["split", "--model", &fixture("jordan.json")]);
    assert_eq!(code, 0);
    let p = &json(&out)["projector"];
    let expected = [[1.0, -2.0 / 3.0], [0.0, 0.0]];
    for (i, row) in expected.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            let re = p[i][j][0].as_f64().unwrap();
            let im = p[i][j][1].as_f64().unwrap();
            assert!((re - e).abs() < 1e-10 && im.abs() < 1e-10, "P[{i}][{j}] = {re} + {im}i");
        }
    }
}

#[test]
fn unit_root_fails_the_circle_check() {
    let (code, out, _) = invoke(&["check-circle", "--model", &fixture("unitroot.json")]);
    assert_eq!(code, 1);
    assert_eq!(json(&out)["ok"], false);
    let (code, out, _) = invoke(&["check-circle", "--model", &fixture("hyper.json")]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["ok"], true);
}

#[test]
fn split_of_a_non_hyperbolic_model_is_a_runtime_error() {
    let (code, _, err) = invoke(&["split", "--model", &fixture("unitroot.json")]);
    assert_eq!(code, 1);
    assert!(err.contains("error"), "{err}");
}

#[test]
fn laurent_of_the_scalar_half_model() {
    let (code, out, _) = invoke(&["laurent", "--model", &fixture("scalar_half.json"), "--k-min", "-5", "--k-max", "30"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["k_min"], -5);
    let coefficients = v["coefficients"].as_array().unwrap();
    assert_eq!(coefficients.len(), 36);
    for c in coefficients {
        let k = c["k"].as_i64().unwrap() as i32;
        let expected = if k >= 0 { 0.5f64.powi(k) } else { 0.0 };
        assert!((c["psi"][0][0][0].as_f64().unwrap() - expected).abs() <= 1e-10, "ψ_{k}");
    }
}

#[test]
fn verify_passes_on_the_arma21_fixture() {
    let (code, out, _) = invoke(&["verify", "--model", &fixture("arma21.json"), "--noise", &fixture("gaussian2.json")]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(json(&out)["pass"], true);
}

#[test]
fn simulate_both_methods_agree() {
    let args = |method: &'static str| {
        vec!["simulate", "--model", "FIXTURE", "--noise", "NOISE", "--method", method, "--t-end", "49"]
    };
    let model = fixture("hyper.json");
    let noise = fixture("gaussian2.json");
    let run_method = |method: &'static str| {
        let a: Vec<&str> = args(method)
            .into_iter()
            .map(|s| match s {
                "FIXTURE" => model.as_str(),
                "NOISE" => noise.as_str(),
                other => other,
            })
            .collect();
        let (code, out, _) = invoke(&a);
        assert_eq!(code, 0);
        json(&out)
    };
    let split = run_method("split");
    let ma = run_method("ma");
    assert_eq!(split["method"], "theorem1_split");
    assert_eq!(ma["method"], "ma_infinity");
    let (ps, pm) = (split["path"].as_array().unwrap(), ma["path"].as_array().unwrap());
    assert_eq!(ps.len(), 50);
    for (a, b) in ps.iter().zip(pm) {
        for (x, y) in a.as_array().unwrap().iter().zip(b.as_array().unwrap()) {
            for c in 0..2 {
                assert!((x[c].as_f64().unwrap() - y[c].as_f64().unwrap()).abs() <= 1e-6);
            }
        }
    }
}

#[test]
fn simulate_csv_has_one_row_per_time() {
    let (code, out, _) = invoke(&[
        "--format", "csv", "simulate", "--model", &fixture("hyper.json"), "--noise", &fixture("gaussian2.json"), "--t-end", "9",
    ]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "t,component_0_re,component_0_im,component_1_re,component_1_im");
    assert_eq!(lines.len(), 11);
    assert!(lines[1].starts_with("0,"));
}

#[test]
fn seed_flag_overrides_the_noise_file() {
    let base = ["simulate", "--model", &fixture("hyper.json"), "--noise", &fixture("gaussian2.json"), "--t-end", "4"];
    let (_, default_seed, _) = invoke(&base);
    let mut with_file_seed = vec!["--seed", "11"];
    with_file_seed.extend_from_slice(&base);
    let (_, same, _) = invoke(&with_file_seed);
    let mut with_other = vec!["--seed", "12"];
    with_other.extend_from_slice(&base);
    let (_, other, _) = invoke(&with_other);
    assert_eq!(default_seed, same);
    assert_ne!(default_seed, other);
}

#[test]
fn moments_of_the_pareto_fixture() {
    let (code, out, _) = invoke(&["moments", "--noise", &fixture("pareto1.json"), "--moment", "log_plus_log_plus"]);
    assert_eq!(code, 0);
    let v = json(&out);
    let report = if v.is_array() { v[0].clone() } else { v };
    assert_eq!(report["finite_verdict"], "finite");
}

#[test]
fn out_flag_writes_a_file() {
    let dir = std::env::temp_dir().join(format!("oparma-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("split.json");
    let (code, out, _) = invoke(&["--out", path.to_str().unwrap(), "split", "--model", &fixture("hyper.json")]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert!((json(&written)["r_inner"].as_f64().unwrap() - 0.5).abs() < 1e-10);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn scenario_list_names_every_scenario() {
    let (code, out, _) = invoke(&["scenario", "list"]);
    assert_eq!(code, 0);
    for name in ["nilpotent", "quasinilpotent_shift", "volterra", "hyperbolic_pipeline", "isometry"] {
        assert!(out.contains(name), "{name} missing");
    }
}

#[test]
fn volterra_scenario_with_seed_7_passes() {
    let (code, out, _) = invoke(&["--seed", "7", "scenario", "volterra"]);
    assert_eq!(code, 0, "{out}");
    let v = json(&out);
    assert_eq!(v["seed"], 7);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}

#[test]
fn scenario_overrides_are_applied_and_echoed() {
    let (code, out, _) = invoke(&["scenario", "nilpotent", "--set", "d=4", "--set", "replicates=20"]);
    assert_eq!(code, 0, "{out}");
    let v = json(&out);
    assert_eq!(v["params"]["d"], 4);
    assert_eq!(v["params"]["replicates"], 20);
}

#[test]
fn usage_and_input_errors_exit_with_2() {
    assert_eq!(invoke(&["frobnicate"]).0, 2);
    assert_eq!(invoke(&["split"]).0, 2);
    assert_eq!(invoke(&["split", "--model", "/definitely/not/here.json"]).0, 2);
    assert_eq!(invoke(&["scenario", "no_such_scenario"]).0, 2);
    assert_eq!(invoke(&["scenario", "nilpotent", "--set", "bogus=1"]).0, 2);
    assert_eq!(invoke(&["scenario", "nilpotent", "--set", "no-equals-sign"]).0, 2);
    assert_eq!(invoke(&["--format", "csv", "split", "--model", &fixture("hyper.json")]).0, 2);
}

#[test]
fn schema_errors_name_the_offending_field() {
    let dir = std::env::temp_dir().join(format!("oparma-schema-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.json");
    std::fs::write(&path, r#"{"ar": [{"kind": "dense", "dim": 2, "params": {"entries": [[[1.0, 0.0]]]}}]}"#).unwrap();
    let (code, _, err) = invoke(&["split", "--model", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("ar[0]"), "{err}");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn help_and_version_exit_cleanly() {
    let (code, out, _) = invoke(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("scenario"));
    let (code, out, _) = invoke(&["--version"]);
    assert_eq!(code, 0);
    assert!(out.contains(env!("CARGO_PKG_VERSION")));
}
