//! The `pwcheat` command line.
//!
//! Every artifact carries a metadata block (tool version, SHA-256 digest of the effective
//! configuration, seed): `# key: value` lines at the top of CSV files and a `"meta"` object
//! in JSON files. Errors are reported on stderr as `{"error": kind, "message": text}` with
//! exit code 1 (validation), 2 (numerical failure) or 3 (I/O).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::dataset::TransferDataset;
use crate::error::{validation, Error, Result};
use crate::format::{csv_metadata, fmt17};
use crate::inverse::{model_select, reconstruct, ReconstructOptions, SelectOptions};
use crate::laplace::transfer_function;
use crate::piecewise::{ConductivityProfile, DEFAULT_C0, DEFAULT_C1};
use crate::property_c::{verify, VerifyOptions};
use crate::time_domain::{
    laplace_of_samples, simulate, synthesize_dataset, FluxSpec, Signal, SimulationConfig, TimeScheme,
};

pub const TOOL: &str = "pwcheat";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser, Serialize)]
#[command(name = "pwcheat", version, about = "1-D heat conduction with piecewise-constant conductivity")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "PWCHEAT_THREADS")]
    #[serde(skip)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "snake_case")]
pub enum Command {
    /// Time-domain simulation; writes `t,f,g` CSV.
    Simulate(SimulateArgs),
    /// Evaluate the transfer function H(lambda).
    Transfer(TransferArgs),
    /// Synthesize a (noisy) transfer-function dataset.
    Synth(SynthArgs),
    /// Run the completeness checks on a pair of profiles.
    Verify(VerifyArgs),
    /// Reconstruct a profile from a dataset.
    Reconstruct(ReconstructArgs),
    /// Reconstruct with automatic choice of the number of pieces.
    Select(SelectArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeArg {
    Cn,
    Be,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Conductivity profile JSON.
    #[arg(long)]
    #[serde(skip)]
    pub profile: PathBuf,
    /// `pulse:<amplitude>:<t_on>:<t_off>` or `const:<amplitude>`.
    #[arg(long, default_value = "pulse:1:0:1")]
    pub flux: String,
    #[arg(long, default_value_t = 400)]
    pub nx: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 40.0)]
    pub t_end: f64,
    #[arg(long, value_enum, default_value = "cn")]
    pub scheme: SchemeArg,
    /// Also write numerical Laplace transforms on this lambda grid.
    #[arg(long)]
    pub laplace: Option<String>,
    /// File for the `lambda,F,G,ratio,H` table (default: stdout, when --out is set).
    #[arg(long)]
    #[serde(skip)]
    pub laplace_out: Option<PathBuf>,
    /// Output file (default: stdout).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TransferArgs {
    /// Conductivity profile JSON.
    #[arg(long)]
    #[serde(skip)]
    pub profile: PathBuf,
    /// Single lambda; prints H alone.
    #[arg(long, conflicts_with = "lambdas", required_unless_present = "lambdas")]
    pub lambda: Option<f64>,
    /// `log:<min>:<max>:<count>`, `lin:<min>:<max>:<count>` or a comma-separated list.
    #[arg(long)]
    pub lambdas: Option<String>,
    /// Output file (default: stdout).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Conductivity profile JSON.
    #[arg(long)]
    #[serde(skip)]
    pub profile: PathBuf,
    #[arg(long, default_value = "log:0.01:100:16")]
    pub lambdas: String,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file (default: stdout).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// Conductivity profile whose reciprocal is the first potential q1^2.
    #[arg(long)]
    #[serde(skip)]
    pub q1: PathBuf,
    /// Conductivity profile whose reciprocal is the second potential q2^2.
    #[arg(long)]
    #[serde(skip)]
    pub q2: PathBuf,
    /// Pieces of the uniform partition used for the moment certificate.
    #[arg(long, default_value_t = 4)]
    pub pieces: usize,
    /// Spectral grid for the certificate (default: log-spaced on [0.25, 64], 3 per piece).
    #[arg(long)]
    pub k_grid: Option<String>,
    /// Output file (default: stdout).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    /// Dataset CSV with columns `lambda,H,sigma`.
    #[arg(long)]
    #[serde(skip)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_C0)]
    pub c0: f64,
    #[arg(long, default_value_t = DEFAULT_C1)]
    pub c1: f64,
    #[arg(long, default_value_t = crate::inverse::DEFAULT_MIN_WIDTH)]
    pub min_width: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// Weight of the penalty on successive log-value differences.
    #[arg(long, default_value_t = 0.0)]
    pub ridge: f64,
    /// Output file (default: stdout).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReconstructArgs {
    /// Number of pieces.
    #[arg(long, conflicts_with = "n_max", required_unless_present = "n_max")]
    pub n: Option<usize>,
    /// Try 1..=n_max pieces and pick the best by penalized fit.
    #[arg(long)]
    pub n_max: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub fit: FitArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SelectArgs {
    /// Largest number of pieces to try.
    #[arg(long)]
    pub n_max: usize,
    #[arg(long, default_value_t = 1.0)]
    pub penalty: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub merge_tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub fit: FitArgs,
}

/// Parses `log:<min>:<max>:<count>`, `lin:<min>:<max>:<count>` or `x1,x2,...`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || validation(format!("invalid grid `{spec}`; expected log:min:max:count, lin:min:max:count or a list"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 4 && (parts[0] == "log" || parts[0] == "lin") {
        let lo: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[2].trim().parse().map_err(|_| bad())?;
        let count: usize = parts[3].trim().parse().map_err(|_| bad())?;
        if count == 0 || !(lo.is_finite() && hi.is_finite()) || hi < lo || (count > 1 && hi == lo) {
            return Err(bad());
        }
        if parts[0] == "log" {
            if lo <= 0.0 {
                return Err(validation("log grid needs min > 0"));
            }
            return Ok(crate::property_c::log_grid(lo, hi, count));
        }
        if count == 1 {
            return Ok(vec![lo]);
        }
        return Ok((0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect());
    }
    if parts.len() != 1 {
        return Err(bad());
    }
    spec.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| bad())).collect()
}

/// Parses `pulse:<amplitude>:<t_on>:<t_off>` or `const:<amplitude>`.
pub fn parse_flux(spec: &str) -> Result<FluxSpec> {
    let bad = || validation(format!("invalid flux `{spec}`; expected pulse:amp:t_on:t_off or const:amp"));
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let flux = match parts.as_slice() {
        ["pulse", a, on, off] => FluxSpec::Pulse { amplitude: num(a)?, t_on: num(on)?, t_off: num(off)? },
        ["const", a] => FluxSpec::Constant { amplitude: num(a)? },
        _ => return Err(bad()),
    };
    flux.validate()?;
    Ok(flux)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn read_profile(path: &Path) -> Result<ConductivityProfile> {
    ConductivityProfile::from_json(&read_text(path)?)
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Metadata shared by every artifact of one invocation.
struct Meta {
    entries: Vec<(String, String)>,
}

impl Meta {
    fn new(command: &Command, seed: Option<u64>, inputs: &[&Path]) -> Result<Self> {
        let config = serde_json::to_string(command).expect("config serialization");
        let mut entries = vec![
            ("tool".to_string(), TOOL.to_string()),
            ("version".to_string(), VERSION.to_string()),
            ("config_sha256".to_string(), sha256_hex(config.as_bytes())),
            ("seed".to_string(), seed.map_or_else(|| "none".into(), |s| s.to_string())),
        ];
        for p in inputs {
            let bytes =
                fs::read(p).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display()))))?;
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            entries.push((format!("input_sha256[{name}]"), sha256_hex(&bytes)));
        }
        Ok(Self { entries })
    }

    fn json(&self) -> Value {
        let map: serde_json::Map<String, Value> =
            self.entries.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        Value::Object(map)
    }

    fn csv(&self) -> String {
        csv_metadata(&self.entries)
    }
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(p) => {
            fs::write(p, text).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display()))))
        }
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON serialization");
    s.push('\n');
    s
}

fn with_meta(mut v: Value, meta: &Meta) -> Value {
    if let Value::Object(map) = &mut v {
        map.insert("meta".into(), meta.json());
    }
    v
}

fn run_simulate(cmd: &Command, a: &SimulateArgs, stdout: &mut dyn Write) -> Result<i32> {
    let profile = read_profile(&a.profile)?;
    let flux = parse_flux(&a.flux)?;
    let scheme = match a.scheme {
        SchemeArg::Cn => TimeScheme::CrankNicolsonRannacher,
        SchemeArg::Be => TimeScheme::BackwardEuler,
    };
    let cfg = SimulationConfig { nx: a.nx, dt: a.dt, t_end: a.t_end, scheme };
    let meta = Meta::new(cmd, None, &[&a.profile])?;
    let series = simulate(&profile, &flux, &cfg)?;
    emit(&series.to_csv(&meta.entries), a.out.as_deref(), stdout)?;
    if let Some(grid) = &a.laplace {
        let mut text = meta.csv();
        text.push_str("lambda,F,G,ratio,H\n");
        for lambda in parse_grid(grid)? {
            let f = laplace_of_samples(&series, Signal::F, lambda)?.value;
            let g = laplace_of_samples(&series, Signal::G, lambda)?.value;
            let h = transfer_function(&profile, lambda)?;
            text.push_str(&format!("{},{},{},{},{}\n", fmt17(lambda), fmt17(f), fmt17(g), fmt17(g / f), fmt17(h)));
        }
        match &a.laplace_out {
            Some(p) => emit(&text, Some(p), stdout)?,
            None if a.out.is_some() => emit(&text, None, stdout)?,
            None => return Err(validation("--laplace needs --laplace-out when the series goes to stdout")),
        }
    }
    Ok(0)
}

fn run_transfer(cmd: &Command, a: &TransferArgs, stdout: &mut dyn Write) -> Result<i32> {
    let profile = read_profile(&a.profile)?;
    if let Some(lambda) = a.lambda {
        let h = transfer_function(&profile, lambda)?;
        let text = format!("{}\n", fmt17(h));
        emit(&text, a.out.as_deref(), stdout)?;
        return Ok(0);
    }
    let grid = parse_grid(a.lambdas.as_deref().unwrap_or_default())?;
    let meta = Meta::new(cmd, None, &[&a.profile])?;
    let mut text = meta.csv();
    text.push_str("lambda,H\n");
    for lambda in grid {
        text.push_str(&format!("{},{}\n", fmt17(lambda), fmt17(transfer_function(&profile, lambda)?)));
    }
    emit(&text, a.out.as_deref(), stdout)?;
    Ok(0)
}

fn run_synth(cmd: &Command, a: &SynthArgs, stdout: &mut dyn Write) -> Result<i32> {
    let profile = read_profile(&a.profile)?;
    let grid = parse_grid(&a.lambdas)?;
    let meta = Meta::new(cmd, Some(a.seed), &[&a.profile])?;
    let mut entries = meta.entries.clone();
    entries.push(("noise_rel".into(), fmt17(a.noise)));
    entries.push(("prng".into(), "ChaCha8Rng::seed_from_u64 + StandardNormal".into()));
    let data = synthesize_dataset(&profile, &grid, a.noise, a.seed)?;
    emit(&data.to_csv(&entries), a.out.as_deref(), stdout)?;
    Ok(0)
}

fn run_verify(cmd: &Command, a: &VerifyArgs, stdout: &mut dyn Write) -> Result<i32> {
    if a.pieces == 0 {
        return Err(validation("--pieces must be at least 1"));
    }
    let q1 = read_profile(&a.q1)?.q_squared();
    let q2 = read_profile(&a.q2)?.q_squared();
    let opts = VerifyOptions {
        pieces: a.pieces,
        k_grid: a.k_grid.as_deref().map(parse_grid).transpose()?,
        ..Default::default()
    };
    let meta = Meta::new(cmd, None, &[&a.q1, &a.q2])?;
    let report = verify(&q1, &q2, &opts)?;
    let pass = report.all_pass();
    let v = with_meta(serde_json::to_value(&report).expect("report serialization"), &meta);
    emit(&json_text(&v), a.out.as_deref(), stdout)?;
    Ok(if pass { 0 } else { 2 })
}

fn fit_options(f: &FitArgs) -> ReconstructOptions {
    ReconstructOptions {
        c0: f.c0,
        c1: f.c1,
        restarts: f.restarts,
        max_iter: f.max_iter,
        min_width: f.min_width,
        seed: f.seed,
        ridge: f.ridge,
        ..Default::default()
    }
}

fn load_dataset(path: &Path) -> Result<TransferDataset> {
    TransferDataset::from_csv(read_text(path)?.as_bytes())
}

fn run_fit(
    cmd: &Command,
    fit: &FitArgs,
    n: Option<usize>,
    n_max: Option<usize>,
    sel: SelectOptions,
    stdout: &mut dyn Write,
) -> Result<i32> {
    let data = load_dataset(&fit.data)?;
    let opts = fit_options(fit);
    let meta = Meta::new(cmd, Some(fit.seed), &[&fit.data])?;
    let v = match (n, n_max) {
        (Some(n), _) => {
            let res = reconstruct(&data, n, &opts)?;
            serde_json::to_value(&res).expect("result serialization")
        }
        (None, Some(n_max)) => {
            let s = model_select(&data, n_max, &opts, &sel)?;
            let mut v = serde_json::to_value(&s.result).expect("result serialization");
            v["best_n"] = json!(s.best_n);
            v["candidates"] = serde_json::to_value(&s.candidates).expect("candidates serialization");
            v
        }
        (None, None) => return Err(validation("either --n or --n-max is required")),
    };
    let converged = v["converged"].as_bool().unwrap_or(false);
    emit(&json_text(&with_meta(v, &meta)), fit.out.as_deref(), stdout)?;
    Ok(if converged { 0 } else { 2 })
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> Result<i32> {
    let cmd = &cli.command;
    match cmd {
        Command::Simulate(a) => run_simulate(cmd, a, stdout),
        Command::Transfer(a) => run_transfer(cmd, a, stdout),
        Command::Synth(a) => run_synth(cmd, a, stdout),
        Command::Verify(a) => run_verify(cmd, a, stdout),
        Command::Reconstruct(a) => run_fit(cmd, &a.fit, a.n, a.n_max, SelectOptions::default(), stdout),
        Command::Select(a) => run_fit(
            cmd,
            &a.fit,
            None,
            Some(a.n_max),
            SelectOptions { penalty: a.penalty, merge_tol: a.merge_tol },
            stdout,
        ),
    }
}

fn error_json(kind: &str, message: &str) -> String {
    format!("{}\n", json!({ "error": kind, "message": message }))
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let _ = stderr.write_all(error_json("validation", &e.to_string()).as_bytes());
            return 1;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            let _ = stderr.write_all(error_json("validation", "--threads must be at least 1").as_bytes());
            return 1;
        }
        builder = builder.num_threads(t);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            let _ = stderr.write_all(error_json("numerical", &e.to_string()).as_bytes());
            return 2;
        }
    };
    let mut buf = Vec::new();
    let outcome = pool.install(|| dispatch(&cli, &mut buf));
    if let Err(e) = stdout.write_all(&buf) {
        let _ = stderr.write_all(error_json("io", &e.to_string()).as_bytes());
        return 3;
    }
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = stderr.write_all(error_json(e.kind(), &e.to_string()).as_bytes());
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_language() {
        assert_eq!(parse_grid("lin:0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        let g = parse_grid("log:0.01:100:5").unwrap();
        assert_eq!(g.len(), 5);
        assert!((g[2] - 1.0).abs() < 1e-15);
        assert_eq!(parse_grid("1, 2.5").unwrap(), vec![1.0, 2.5]);
        for bad in ["log:0:1:3", "cubic:1:2:3", "lin:1:0:3", "log:1:2", "x"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn flux_language() {
        assert_eq!(parse_flux("pulse:1:0:1").unwrap(), FluxSpec::unit_pulse(1.0));
        assert!(parse_flux("pulse:1:2:1").is_err());
        assert!(parse_flux("ramp:1").is_err());
    }

    #[test]
    fn help_exits_zero_and_bad_args_exit_one() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run(["pwcheat", "--help"], &mut o, &mut e), 0);
        assert_eq!(run(["pwcheat", "transfer"], &mut o, &mut e), 1);
        let err: Value = serde_json::from_slice(&e).unwrap();
        assert_eq!(err["error"], "validation");
    }
}
