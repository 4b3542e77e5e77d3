use clap::{Args, Parser, Subcommand};
use gyroceptron::experiments::{
    parse_config, run_adiabatic_scan_protocol, run_baseline, run_check_symplectic, run_generate_data, run_rollout, run_train,
    AdiabaticScanConfig, BaselineConfig, CheckSymplecticConfig, DataConfig, RolloutConfig, TrainRunConfig,
};
use gyroceptron::Error;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Train, roll out and audit symplectic gyroceptrons.
#[derive(Parser)]
#[command(name = "gyro", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file. Relative paths inside it resolve against its directory.
    config: PathBuf,
    /// Overrides the `seed` field of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for result files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Sample initial states and integrate them with RK4 into a flow-map dataset.
    GenerateData(Common),
    /// Fit a symplectic gyroceptron to a flow-map dataset.
    Train(Common),
    /// Iterate a trained model, optionally against an RK4 reference.
    Rollout {
        #[command(flatten)]
        common: Common,
        /// Overrides the `steps` field of the configuration.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Adiabatic-invariant drift and threshold scan over ε.
    AdiabaticScan(Common),
    /// Finite-difference symplecticity and roundtrip audit of a checkpoint.
    CheckSymplectic(Common),
    /// Fit a plain HénonNet to a flow-map dataset.
    BaselineHenonnet(Common),
}

fn load(common: &Common, overrides: &[(&str, Value)]) -> Result<String, Error> {
    let text = std::fs::read_to_string(&common.config).map_err(|source| Error::Io {
        path: common.config.display().to_string(),
        source,
    })?;
    let mut overrides = overrides.to_vec();
    if let Some(seed) = common.seed {
        overrides.push(("seed", json!(seed)));
    }
    if overrides.is_empty() {
        return Ok(text);
    }
    let mut value: Value = serde_json::from_str(&text).map_err(|e| Error::Schema {
        keys: Vec::new(),
        message: e.to_string(),
    })?;
    let object = value.as_object_mut().ok_or_else(|| Error::Schema {
        keys: Vec::new(),
        message: "configuration must be a JSON object".into(),
    })?;
    for (key, v) in overrides {
        object.insert(key.to_string(), v);
    }
    Ok(value.to_string())
}

fn base_dir(common: &Common) -> PathBuf {
    common.config.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn run(cli: Cli) -> Result<Value, Error> {
    match cli.command {
        Command::GenerateData(c) => {
            let cfg: DataConfig = parse_config(&load(&c, &[])?)?;
            let m = run_generate_data(&cfg, &c.out_dir)?;
            Ok(json!({ "outputs": m.outputs }))
        }
        Command::Train(c) => {
            let cfg: TrainRunConfig = parse_config(&load(&c, &[])?)?;
            let (_, report, m) = run_train(&cfg, &base_dir(&c), &c.out_dir)?;
            Ok(json!({
                "final_train_loss": report.train_loss.last(),
                "final_val_loss": report.val_loss.last(),
                "final_theta": report.final_theta,
                "outputs": m.outputs,
            }))
        }
        Command::Rollout { common: c, steps } => {
            let extra: Vec<(&str, Value)> = steps.map(|s| ("steps", json!(s))).into_iter().collect();
            let cfg: RolloutConfig = parse_config(&load(&c, &extra)?)?;
            let (summary, m) = run_rollout(&cfg, &base_dir(&c), &c.out_dir)?;
            Ok(json!({ "speedup": summary.speedup, "outputs": m.outputs }))
        }
        Command::AdiabaticScan(c) => {
            let cfg: AdiabaticScanConfig = parse_config(&load(&c, &[])?)?;
            let (result, m) = run_adiabatic_scan_protocol(&cfg, &c.out_dir)?;
            Ok(json!({ "rows": result.rows, "outputs": m.outputs }))
        }
        Command::CheckSymplectic(c) => {
            let cfg: CheckSymplecticConfig = parse_config(&load(&c, &[])?)?;
            let (report, m) = run_check_symplectic(&cfg, &base_dir(&c), &c.out_dir)?;
            Ok(json!({ "report": report, "outputs": m.outputs }))
        }
        Command::BaselineHenonnet(c) => {
            let cfg: BaselineConfig = parse_config(&load(&c, &[])?)?;
            let (_, report, m) = run_baseline(&cfg, &base_dir(&c), &c.out_dir)?;
            Ok(json!({ "final_val_loss": report.val_loss.last(), "outputs": m.outputs }))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let keys = match &e {
                Error::Schema { keys, .. } => keys.clone(),
                _ => Vec::new(),
            };
            eprintln!("{}", json!({ "error": { "kind": e.kind(), "message": e.to_string(), "keys": keys } }));
            ExitCode::FAILURE
        }
    }
}
