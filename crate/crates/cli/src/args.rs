//! Command-line surface and config-file loading.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use qbd_manet::NetworkConfig;
use serde::Deserialize;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "qbd-manet",
    about = "Source-delay analysis of cell-partitioned MANETs under PD-f dispatch",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the analytic delay law: CDF CSV plus stats JSON.
    Analytic(AnalyticArgs),
    /// Run the slot-level simulator: empirical CDF CSV plus summary JSON.
    Simulate(SimulateArgs),
    /// Run both engines and report the Kolmogorov-Smirnov distance.
    Compare(CompareArgs),
    /// Analytic parameter sweep over one or two axes.
    Sweep(SweepArgs),
}

/// Model parameters, each optional on the command line so a config file
/// can supply the rest.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Key-value config file (TOML: n, m, delta, q, lambda, f, M).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Node count override.
    #[arg(long)]
    pub n: Option<u32>,
    /// Cells per torus side override.
    #[arg(long)]
    pub m: Option<u32>,
    /// Guard factor override (defaults to 0 when absent everywhere).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Dispatch probability override.
    #[arg(long)]
    pub q: Option<f64>,
    /// Packet-generating probability override.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Dispatch limit override.
    #[arg(long)]
    pub f: Option<u32>,
    /// Local-queue buffer size override.
    #[arg(long = "M")]
    pub buffer: Option<u32>,
}

/// Config file schema: all fields optional so partial files combine with
/// command-line overrides.
#[derive(Debug, Default, Deserialize)]
struct ConfigFile {
    n: Option<u32>,
    m: Option<u32>,
    delta: Option<f64>,
    q: Option<f64>,
    lambda: Option<f64>,
    f: Option<u32>,
    #[serde(rename = "M")]
    buffer: Option<u32>,
}

impl ConfigArgs {
    /// File values first, command-line overrides on top, Δ defaulting to 0.
    pub fn resolve(&self) -> Result<NetworkConfig> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config file {}", path.display()))?;
                toml::from_str::<ConfigFile>(&text)
                    .with_context(|| format!("parsing config file {}", path.display()))?
            }
            None => ConfigFile::default(),
        };
        fn need<T: Default>(missing: &mut Vec<String>, name: &str, v: Option<T>) -> T {
            v.unwrap_or_else(|| {
                missing.push(name.to_string());
                T::default()
            })
        }
        let mut missing = Vec::new();
        let n = need(&mut missing, "n", self.n.or(file.n));
        let m = need(&mut missing, "m", self.m.or(file.m));
        let f = need(&mut missing, "f", self.f.or(file.f));
        let buffer = need(&mut missing, "M", self.buffer.or(file.buffer));
        let q = need(&mut missing, "q", self.q.or(file.q));
        let lambda = need(&mut missing, "lambda", self.lambda.or(file.lambda));
        let delta = self.delta.or(file.delta).unwrap_or(0.0);
        if !missing.is_empty() {
            bail!(
                "missing parameters: {} (supply via --config file or flags)",
                missing.join(", ")
            );
        }
        let cfg = NetworkConfig {
            n,
            m,
            delta,
            q,
            lambda,
            f,
            buffer,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Simulation options shared by `simulate` and `compare`.
#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Slots to simulate per replica.
    #[arg(long)]
    pub slots: u64,
    /// Warm-up slots to discard; defaults to 20 analytic mean delays.
    #[arg(long)]
    pub warmup: Option<u64>,
    /// Base RNG seed; replica i runs on stream i of this seed.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Independent replicas to run and merge.
    #[arg(long, default_value_t = 1)]
    pub replicas: u32,
}

#[derive(Debug, Args)]
pub struct AnalyticArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// CDF rows to write; defaults to the smallest u with CDF ≥ 0.999.
    #[arg(long)]
    pub max_u: Option<u64>,
    /// Also dump π, the conditional distribution, and the four chain
    /// matrices as CSV for inspection.
    #[arg(long, default_value_t = false)]
    pub dump_internals: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Also write one raw delay per line to samples.csv.
    #[arg(long, default_value_t = false)]
    pub dump_samples: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// KS distance above this fails the comparison (exit code 2).
    #[arg(long, default_value_t = 0.02)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Sweep axis, repeatable once: name=v1,v2,... or name=start:step:end
    /// with name in {lambda, M, q, f, n, m}.
    #[arg(long, required = true)]
    pub axis: Vec<String>,
    /// Output CSV path.
    #[arg(long, default_value = "out/sweep.csv")]
    pub out: PathBuf,
}

/// One parsed sweep axis.
#[derive(Debug, Clone)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

const AXIS_NAMES: [&str; 6] = ["lambda", "M", "q", "f", "n", "m"];

pub fn parse_axis(text: &str) -> Result<Axis> {
    let (name, spec) = text
        .split_once('=')
        .with_context(|| format!("axis '{text}' must look like name=values"))?;
    if !AXIS_NAMES.contains(&name) {
        bail!("axis name '{name}' not one of {AXIS_NAMES:?}");
    }
    let values: Vec<f64> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            bail!("range axis must be start:step:end, got '{spec}'");
        }
        let start: f64 = parts[0].parse().context("axis start")?;
        let step: f64 = parts[1].parse().context("axis step")?;
        let end: f64 = parts[2].parse().context("axis end")?;
        if step <= 0.0 || end < start {
            bail!("range axis needs step > 0 and end ≥ start");
        }
        let count = ((end - start) / step + 0.5).floor() as usize + 1;
        (0..count).map(|i| start + step * i as f64).collect()
    } else {
        spec.split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .with_context(|| format!("axis value '{v}'"))
            })
            .collect::<Result<_>>()?
    };
    if values.is_empty() {
        bail!("axis '{name}' has no values");
    }
    Ok(Axis {
        name: name.to_string(),
        values,
    })
}

/// Applies one axis value to a config; integer axes reject fractions.
pub fn apply_axis(cfg: &mut NetworkConfig, name: &str, value: f64) -> Result<()> {
    let as_u32 = |v: f64| -> Result<u32> {
        if v.fract() != 0.0 || v < 0.0 || v > u32::MAX as f64 {
            bail!("axis '{name}' needs integer values, got {v}");
        }
        Ok(v as u32)
    };
    match name {
        "lambda" => cfg.lambda = value,
        "q" => cfg.q = value,
        "M" => cfg.buffer = as_u32(value)?,
        "f" => cfg.f = as_u32(value)?,
        "n" => cfg.n = as_u32(value)?,
        "m" => cfg.m = as_u32(value)?,
        other => bail!("unknown axis '{other}'"),
    }
    Ok(())
}
