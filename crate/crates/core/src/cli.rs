//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a check fails or a computation errors,
//! 2 on usage or input-file errors. Diagnostics go to standard error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::io::{load_model, load_noise};
use crate::laurent::{laurent_coeffs, laurent_coeffs_auto, unit_circle_check, LaurentCoeffs};
use crate::linalg::vnorm;
use crate::moments::{moment_estimate, MomentKind};
use crate::noise::Noise;
use crate::operator::{companion_lift, ArmaModel};
use crate::scenarios::{list_scenarios, run_scenario};
use crate::simulate::{simulate_ma, simulate_split_any, truncation_k, SimulationResult};
use crate::spectral::{hyperbolic_split, DEFAULT_N_QUAD};

#[derive(Parser, Debug)]
#[command(name = "oparma", version, about = "Operator-coefficient ARMA models on finite truncations")]
struct Cli {
    /// Seed for all random draws; overrides the seed stored in a noise file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SimMethod {
    Split,
    Ma,
}

#[derive(Args, Debug)]
struct ModelArg {
    /// Model file: {"ar": [...], "ma": [...]}.
    #[arg(long)]
    model: PathBuf,
}

#[derive(Args, Debug)]
struct RangeArgs {
    /// Lowest Laurent index (with --k-max; otherwise the range is chosen automatically).
    #[arg(long, allow_hyphen_values = true, requires = "k_max")]
    k_min: Option<i64>,
    /// Highest Laurent index
    #[arg(long, allow_hyphen_values = true, requires = "k_min")]
    k_max: Option<i64>,
    /// Quadrature nodes for an explicit range.
    #[arg(long, default_value_t = 1024)]
    n_quad: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Contracting/expanding splitting of A_1 via the Riesz projector.
    Split {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, default_value_t = DEFAULT_N_QUAD)]
        n_quad: usize,
    },
    /// Laurent coefficients ψ_k of the transfer function.
    Laurent {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        range: RangeArgs,
    },
    /// Invertibility of Q(z) on the unit circle; exit 1 when it fails.
    CheckCircle {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, default_value_t = 1024)]
        grid: usize,
    },
    /// Stationary solution on [t-start, t-end].
    Simulate {
        #[command(flatten)]
        model: ModelArg,
        /// Noise file: {"kind": ..., "params": {...}, "seed": N}
        #[arg(long)]
        noise: PathBuf,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
        t_start: i64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 99)]
        t_end: i64,
        #[arg(long, value_enum, default_value_t = SimMethod::Split)]
        method: SimMethod,
        /// Truncation level of the split series (default: chosen from the tail bound).
        #[arg(long = "K")]
        k: Option<usize>,
        #[arg(long, default_value_t = 0)]
        replicate: u64,
        #[command(flatten)]
        range: RangeArgs,
    },
    /// Monte Carlo moment report for a noise file.
    Moments {
        /// Noise file: {"kind": ..., "params": {...}, "seed": N}
        #[arg(long)]
        noise: PathBuf,
        /// log_plus, log_plus_log_plus, gamma_inverse or all.
        #[arg(long, default_value = "all")]
        moment: String,
        #[arg(long, default_value_t = 200_000)]
        n_samples: usize,
        /// Use T = Σ A^{q−k} B_k of this model as the transform.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Run a catalog scenario, or `list` to print the catalog.
    Scenario {
        name: String,
        /// Parameter override key=value (value parsed as JSON when possible).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Simulate with both methods and check residuals and agreement.
    Verify {
        #[command(flatten)]
        model: ModelArg,
        /// Noise file: {"kind": ..., "params": {...}, "seed": N}
        #[arg(long)]
        noise: PathBuf,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
        t_start: i64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 199)]
        t_end: i64,
        #[arg(long, default_value_t = 0)]
        replicate: u64,
    },
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Schema { .. } | Error::InvalidArgument(_) | Error::UnknownScenario(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Runtime(other),
        }
    }
}

struct Output {
    body: String,
    pass: bool,
}

fn json_output(v: Value, pass: bool) -> Output {
    Output { body: serde_json::to_string_pretty(&v).expect("JSON serializes") + "\n", pass }
}

fn input<T>(r: Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(|e| Failure::Usage(e.to_string()))
}

fn noise_with_seed(path: &Path, seed: Option<u64>) -> std::result::Result<Noise, Failure> {
    let noise = input(load_noise(path))?;
    Ok(match seed {
        Some(s) => noise.with_seed(s),
        None => noise,
    })
}

fn coefficients(model: &ArmaModel, range: &RangeArgs) -> Result<LaurentCoeffs> {
    match (range.k_min, range.k_max) {
        (Some(lo), Some(hi)) => laurent_coeffs(model, lo, hi, range.n_quad),
        _ => laurent_coeffs_auto(model),
    }
}

/// Truncation level of the split series, through the companion lift when `p > 1`.
fn split_truncation(model: &ArmaModel) -> Result<usize> {
    if model.p() == 1 {
        let split = hyperbolic_split(&model.ar_ops()[0], DEFAULT_N_QUAD)?;
        truncation_k(model, &split)
    } else {
        let lift = companion_lift(model)?;
        let split = hyperbolic_split(&lift.companion, DEFAULT_N_QUAD)?;
        truncation_k(&lift.model, &split)
    }
}

fn simulate_split(
    model: &ArmaModel,
    noise: &Noise,
    replicate: u64,
    t_start: i64,
    t_end: i64,
    k: Option<usize>,
) -> Result<SimulationResult> {
    if t_end < t_start {
        return Err(Error::InvalidArgument("t_end must not precede t_start".into()));
    }
    match k {
        Some(k) if model.p() == 1 => {
            let split = hyperbolic_split(&model.ar_ops()[0], DEFAULT_N_QUAD)?;
            let k = k.max(model.q()) as i64;
            let path = noise.window(replicate, t_start - k, (t_end - t_start + 2 * k + 1) as usize);
            crate::simulate::simulate_theorem1(model, &split, &path, t_start, t_end, Some(k as usize))
        }
        Some(_) => Err(Error::InvalidArgument("--K is only supported for p = 1".into())),
        None => {
            let k = split_truncation(model)?.max(model.q()) as i64;
            let path = noise.window(replicate, t_start - k, (t_end - t_start + 2 * k + 1) as usize);
            simulate_split_any(model, &path, t_start, t_end)
        }
    }
}

fn simulate_with_ma(
    model: &ArmaModel,
    coeffs: &LaurentCoeffs,
    noise: &Noise,
    replicate: u64,
    t_start: i64,
    t_end: i64,
) -> Result<SimulationResult> {
    if t_end < t_start {
        return Err(Error::InvalidArgument("t_end must not precede t_start".into()));
    }
    let first = (t_start - coeffs.k_max).min(t_start + model.p() as i64 - model.q() as i64);
    let last = (t_end - coeffs.k_min).max(t_end);
    let path = noise.window(replicate, first, (last - first + 1) as usize);
    simulate_ma(model, coeffs, &path, t_start, t_end)
}

fn parse_overrides(set: &[String]) -> std::result::Result<Value, Failure> {
    let mut map = Map::new();
    for item in set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--set expects key=value, got `{item}`")))?;
        let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
        map.insert(k.trim().to_string(), value);
    }
    Ok(Value::Object(map))
}

fn execute(cli: &Cli) -> std::result::Result<Output, Failure> {
    let csv_only_for_paths = |what: &str| -> std::result::Result<(), Failure> {
        if cli.format == Format::Csv {
            return Err(Failure::Usage(format!("--format csv is only available for simulate, not {what}")));
        }
        Ok(())
    };
    match &cli.command {
        Command::Split { model, n_quad } => {
            csv_only_for_paths("split")?;
            let m = input(load_model(&model.model))?;
            if m.p() != 1 {
                return Err(Failure::Usage("split needs p = 1".into()));
            }
            let split = hyperbolic_split(&m.ar_ops()[0], *n_quad)?;
            Ok(json_output(split.to_json(), true))
        }
        Command::Laurent { model, range } => {
            csv_only_for_paths("laurent")?;
            let m = input(load_model(&model.model))?;
            Ok(json_output(coefficients(&m, range)?.to_json(), true))
        }
        Command::CheckCircle { model, grid } => {
            csv_only_for_paths("check-circle")?;
            let m = input(load_model(&model.model))?;
            let c = unit_circle_check(&m, *grid)?;
            Ok(json_output(serde_json::to_value(c).expect("serializes"), c.ok))
        }
        Command::Simulate { model, noise, t_start, t_end, method, k, replicate, range } => {
            let m = input(load_model(&model.model))?;
            let n = noise_with_seed(noise, cli.seed)?;
            if n.dim() != m.dim() {
                return Err(Failure::Usage(format!("noise has dim {} but the model has dim {}", n.dim(), m.dim())));
            }
            let result = match method {
                SimMethod::Split => simulate_split(&m, &n, *replicate, *t_start, *t_end, *k)?,
                SimMethod::Ma => {
                    let coeffs = coefficients(&m, range)?;
                    simulate_with_ma(&m, &coeffs, &n, *replicate, *t_start, *t_end)?
                }
            };
            Ok(match cli.format {
                Format::Json => json_output(result.to_json(), true),
                Format::Csv => Output { body: result.to_csv(), pass: true },
            })
        }
        Command::Moments { noise, moment, n_samples, model } => {
            csv_only_for_paths("moments")?;
            let n = noise_with_seed(noise, cli.seed)?;
            let transform = match model {
                Some(p) => Some(input(load_model(p))?.moment_transform()),
                None => None,
            };
            let kinds = if moment == "all" {
                vec![MomentKind::LogPlus, MomentKind::LogPlusLogPlus, MomentKind::GammaInverse]
            } else {
                vec![input(MomentKind::parse(moment))?]
            };
            let reports: Vec<Value> = kinds
                .into_iter()
                .map(|k| moment_estimate(&n, transform.as_ref(), k, *n_samples).map(|r| json!(r)))
                .collect::<Result<_>>()?;
            Ok(json_output(Value::Array(reports), true))
        }
        Command::Scenario { name, set } => {
            csv_only_for_paths("scenario")?;
            if name == "list" {
                return Ok(json_output(json!(list_scenarios()), true));
            }
            let overrides = parse_overrides(set)?;
            let report = run_scenario(name, &overrides, cli.seed.unwrap_or(0))?;
            let pass = report.all_pass();
            Ok(json_output(report.to_json(), pass))
        }
        Command::Verify { model, noise, t_start, t_end, replicate } => {
            csv_only_for_paths("verify")?;
            let m = input(load_model(&model.model))?;
            let n = noise_with_seed(noise, cli.seed)?;
            if n.dim() != m.dim() {
                return Err(Failure::Usage(format!("noise has dim {} but the model has dim {}", n.dim(), m.dim())));
            }
            let split = simulate_split(&m, &n, *replicate, *t_start, *t_end, None)?;
            let coeffs = laurent_coeffs_auto(&m)?;
            let ma = simulate_with_ma(&m, &coeffs, &n, *replicate, *t_start, *t_end)?;
            let scale = 1.0 + split.path.values.iter().map(vnorm).fold(0.0, f64::max);
            let agreement = split
                .path
                .values
                .iter()
                .zip(&ma.path.values)
                .map(|(a, b)| vnorm(&(a - b)))
                .fold(0.0, f64::max)
                / scale;
            let pass = split.max_residual <= 1e-10 && ma.max_residual <= 1e-6 && agreement <= 1e-6;
            Ok(json_output(
                json!({
                    "split_residual": split.max_residual,
                    "split_truncation_k": split.truncation_k,
                    "ma_residual": ma.max_residual,
                    "ma_range": [coeffs.k_min, coeffs.k_max],
                    "agreement": agreement,
                    "tolerances": {"split_residual": 1e-10, "ma_residual": 1e-6, "agreement": 1e-6},
                    "pass": pass,
                }),
                pass,
            ))
        }
    }
}

/// Parses `argv` (including the program name), runs the command and returns the exit code.
pub fn run(argv: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{rendered}") } else { write!(stderr, "{rendered}") };
            return code;
        }
    };
    match execute(&cli) {
        Ok(out) => {
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &out.body)
                    .map_err(|e| format!("cannot write {}: {e}", path.display())),
                None => stdout.write_all(out.body.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(e) = written {
                let _ = writeln!(stderr, "error: {e}");
                return 1;
            }
            if out.pass {
                0
            } else {
                let _ = writeln!(stderr, "check failed");
                1
            }
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
        Err(Failure::Runtime(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

/// Entry point used by the binary.
pub fn parse_and_dispatch(argv: &[String]) -> i32 {
    run(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
