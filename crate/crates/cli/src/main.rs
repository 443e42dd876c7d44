mod args;
mod output;

use anyhow::{bail, Context, Result};
use args::{
    apply_axis, parse_axis, AnalyticArgs, Cli, Command, CompareArgs, SimArgs, SimulateArgs,
    SweepArgs,
};
use clap::Parser;
use output::{fmt_f64, write_csv, write_json, write_text};
use qbd_manet::compare::compare;
use qbd_manet::delay::{phase_type, stats, PhaseTypeRep, SourceDelayStats};
use qbd_manet::qbd::{assemble, build_blocks, matrix_csv, Chain, StateIndexing};
use qbd_manet::sim::{run_replicas, EmpiricalDelay};
use qbd_manet::steady::{conditional_distribution, solve_pi_omega};
use qbd_manet::{contact_probabilities, parallel_map, NetworkConfig};
use serde::Serialize;
use std::path::Path;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Analytic(a) => cmd_analytic(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

/// Worker cap: QBD_MANET_THREADS, else the machine's parallelism.
fn thread_cap() -> usize {
    std::env::var("QBD_MANET_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

// ============================================================================
// analytic
// ============================================================================

#[derive(Serialize)]
struct AnalyticReport {
    config: NetworkConfig,
    alpha: u32,
    #[serde(flatten)]
    stats: SourceDelayStats,
}

fn cmd_analytic(a: AnalyticArgs) -> Result<ExitCode> {
    let cfg = a.config.resolve()?;
    let rep = phase_type(&cfg)?;
    let delay_stats = stats(&rep)?;
    let max_u = match a.max_u {
        Some(u) => u,
        None => rep.quantile(0.999)?,
    };
    let table = rep.cdf_table(max_u);
    write_csv(
        &a.out_dir.join("analytic_cdf.csv"),
        &cfg,
        "u,cdf",
        table
            .iter()
            .enumerate()
            .map(|(u, c)| format!("{u},{}", fmt_f64(*c))),
    )?;
    let report = AnalyticReport {
        config: cfg,
        alpha: cfg.alpha(),
        stats: delay_stats,
    };
    write_json(&a.out_dir.join("analytic_stats.json"), &report)?;
    if a.dump_internals {
        dump_internals(&cfg, &a.out_dir)?;
    }
    println!(
        "analytic: mean {} variance {} (files in {})",
        delay_stats.mean,
        delay_stats.variance,
        a.out_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn dump_internals(cfg: &NetworkConfig, out_dir: &Path) -> Result<()> {
    let probs = contact_probabilities(cfg)?;
    let ix = StateIndexing::for_config(cfg);
    let (levels, f) = (cfg.buffer as usize, cfg.f as usize);
    for (chain, name) in [
        (Chain::Full, "chain_full"),
        (Chain::Acceptance, "chain_acceptance"),
        (Chain::AcceptedArrival, "chain_accepted_arrival"),
        (Chain::Absorbing, "chain_absorbing"),
    ] {
        let mat = assemble(&build_blocks(chain, cfg, &probs), levels, f)?;
        write_text(&out_dir.join(format!("{name}.csv")), &matrix_csv(&mat, &ix))?;
    }
    let pi = solve_pi_omega(cfg)?;
    write_text(&out_dir.join("pi_stationary.csv"), &pi.to_csv(&ix))?;
    let cond = conditional_distribution(cfg, &pi)?;
    write_text(&out_dir.join("pi_conditional.csv"), &cond.to_csv(&ix))?;
    Ok(())
}

// ============================================================================
// simulate
// ============================================================================

#[derive(Serialize)]
struct SimulationSummary {
    config: NetworkConfig,
    alpha: u32,
    slots: u64,
    warmup: u64,
    seed: u64,
    replicas: u32,
    samples: usize,
    accepted: u64,
    dropped: u64,
    acceptance_rate: f64,
    drop_rate: f64,
    mean: f64,
    mean_se: f64,
    variance: f64,
    variance_se: f64,
    std_dev: f64,
}

/// Warm-up default: 20 analytic mean delays (0 when λ = 0, where the mean
/// is not defined and no samples can exist anyway).
fn resolve_warmup(cfg: &NetworkConfig, requested: Option<u64>) -> Result<u64> {
    if let Some(w) = requested {
        return Ok(w);
    }
    if cfg.lambda == 0.0 {
        return Ok(0);
    }
    let rep = phase_type(cfg)?;
    Ok((20.0 * rep.mean()?).ceil() as u64)
}

fn run_simulation(cfg: &NetworkConfig, sim: &SimArgs) -> Result<(EmpiricalDelay, u64)> {
    let warmup = resolve_warmup(cfg, sim.warmup)?;
    if sim.slots <= warmup {
        bail!("slots ({}) must exceed warmup ({warmup})", sim.slots);
    }
    let out = run_replicas(cfg, sim.slots, warmup, sim.seed, sim.replicas, thread_cap())?;
    Ok((out, warmup))
}

fn summarize(
    cfg: &NetworkConfig,
    sim: &SimArgs,
    warmup: u64,
    out: &EmpiricalDelay,
) -> Result<SimulationSummary> {
    if out.samples.is_empty() {
        return Err(qbd_manet::Error::NoSamples.into());
    }
    let k = out.samples.len() as f64;
    let mean = out.mean().unwrap();
    let variance = out.variance().unwrap_or(0.0);
    // SE of the variance from the fourth central moment.
    let m4: f64 = out
        .samples
        .iter()
        .map(|&d| (d as f64 - mean).powi(4))
        .sum::<f64>()
        / k;
    let variance_se = ((m4 - variance * variance).max(0.0) / k).sqrt();
    let generated = out.accepted + out.dropped;
    Ok(SimulationSummary {
        config: *cfg,
        alpha: cfg.alpha(),
        slots: sim.slots,
        warmup,
        seed: sim.seed,
        replicas: sim.replicas,
        samples: out.samples.len(),
        accepted: out.accepted,
        dropped: out.dropped,
        acceptance_rate: if generated > 0 {
            out.accepted as f64 / generated as f64
        } else {
            0.0
        },
        drop_rate: if generated > 0 {
            out.dropped as f64 / generated as f64
        } else {
            0.0
        },
        mean,
        mean_se: (variance / k).sqrt(),
        variance,
        variance_se,
        std_dev: variance.sqrt(),
    })
}

fn cmd_simulate(a: SimulateArgs) -> Result<ExitCode> {
    let cfg = a.config.resolve()?;
    let (out, warmup) = run_simulation(&cfg, &a.sim)?;
    let summary = summarize(&cfg, &a.sim, warmup, &out)?;
    let max_u = *out.samples.iter().max().unwrap();
    let emp = qbd_manet::compare::empirical_cdf(&out.samples, max_u);
    write_csv(
        &a.out_dir.join("empirical_cdf.csv"),
        &cfg,
        "u,cdf",
        emp.iter()
            .enumerate()
            .map(|(u, c)| format!("{u},{}", fmt_f64(*c))),
    )?;
    write_json(&a.out_dir.join("simulate_summary.json"), &summary)?;
    if a.dump_samples {
        write_csv(
            &a.out_dir.join("samples.csv"),
            &cfg,
            "delay",
            out.samples.iter().map(|d| d.to_string()),
        )?;
    }
    println!(
        "simulate: {} samples, mean {:.4} ± {:.4} (files in {})",
        summary.samples,
        summary.mean,
        summary.mean_se,
        a.out_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

// ============================================================================
// compare
// ============================================================================

#[derive(Serialize)]
struct CompareReport {
    config: NetworkConfig,
    alpha: u32,
    slots: u64,
    warmup: u64,
    seed: u64,
    replicas: u32,
    samples: usize,
    ks_distance: f64,
    threshold: f64,
    pass: bool,
    analytic_mean: f64,
    analytic_variance: f64,
    empirical_mean: f64,
    empirical_variance: f64,
    mean_delta: f64,
    variance_delta: f64,
}

fn cmd_compare(a: CompareArgs) -> Result<ExitCode> {
    let cfg = a.config.resolve()?;
    let rep: PhaseTypeRep = phase_type(&cfg)?;
    let (out, warmup) = run_simulation(&cfg, &a.sim)?;
    if out.samples.is_empty() {
        return Err(qbd_manet::Error::NoSamples.into());
    }
    let cmp = compare(&out.samples, &rep, a.threshold)?;
    let report = CompareReport {
        config: cfg,
        alpha: cfg.alpha(),
        slots: a.sim.slots,
        warmup,
        seed: a.sim.seed,
        replicas: a.sim.replicas,
        samples: cmp.samples,
        ks_distance: cmp.ks_distance,
        threshold: cmp.threshold,
        pass: cmp.pass,
        analytic_mean: cmp.analytic_mean,
        analytic_variance: cmp.analytic_variance,
        empirical_mean: cmp.empirical_mean,
        empirical_variance: cmp.empirical_variance,
        mean_delta: cmp.mean_delta,
        variance_delta: cmp.variance_delta,
    };
    write_json(&a.out_dir.join("compare.json"), &report)?;
    println!(
        "compare: KS {:.5} (threshold {}), mean delta {:+.4}, {} samples — {}",
        report.ks_distance,
        report.threshold,
        report.mean_delta,
        report.samples,
        if report.pass { "PASS" } else { "FAIL" }
    );
    Ok(if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

// ============================================================================
// sweep
// ============================================================================

fn cmd_sweep(a: SweepArgs) -> Result<ExitCode> {
    if a.axis.is_empty() || a.axis.len() > 2 {
        bail!("sweep takes one or two --axis arguments");
    }
    let axes: Vec<args::Axis> = a
        .axis
        .iter()
        .map(|s| parse_axis(s))
        .collect::<Result<_>>()?;
    if axes.len() == 2 && axes[0].name == axes[1].name {
        bail!("sweep axes must differ");
    }
    let base = a.config.resolve()?;

    // Build the grid in row-major order over (axis0, axis1).
    let mut grid: Vec<(Vec<f64>, NetworkConfig)> = Vec::new();
    let second: &[f64] = if axes.len() == 2 {
        &axes[1].values
    } else {
        &[f64::NAN]
    };
    for &v0 in &axes[0].values {
        for &v1 in second {
            let mut cfg = base;
            apply_axis(&mut cfg, &axes[0].name, v0)?;
            let mut point = vec![v0];
            if axes.len() == 2 {
                apply_axis(&mut cfg, &axes[1].name, v1)?;
                point.push(v1);
            }
            cfg.validate()
                .with_context(|| format!("grid point {point:?}"))?;
            grid.push((point, cfg));
        }
    }

    let results = parallel_map(grid.len(), thread_cap(), |i| -> Result<SourceDelayStats> {
        let rep = phase_type(&grid[i].1)?;
        Ok(stats(&rep)?)
    });

    let axis_names: Vec<&str> = axes.iter().map(|ax| ax.name.as_str()).collect();
    let columns = format!(
        "# sweep axes: {}\n{},mean,variance,std_dev",
        axis_names.join(", "),
        axis_names.join(",")
    );
    let mut rows = Vec::with_capacity(grid.len());
    for ((point, _), result) in grid.iter().zip(results) {
        let s = result?;
        let coords: Vec<String> = point.iter().map(|v| fmt_f64(*v)).collect();
        rows.push(format!(
            "{},{},{},{}",
            coords.join(","),
            fmt_f64(s.mean),
            fmt_f64(s.variance),
            fmt_f64(s.std_dev)
        ));
    }
    write_csv(&a.out, &base, &columns, rows.into_iter())?;
    println!(
        "sweep: {} grid points written to {}",
        grid.len(),
        a.out.display()
    );
    Ok(ExitCode::SUCCESS)
}
