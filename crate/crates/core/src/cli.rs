//! Batch front-end: run one scenario, run the accounting oracle, or sweep
//! all twelve preset configurations across a set of algorithms. Every mode
//! writes its artifacts under one output directory plus a manifest listing
//! them.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::metrics::oracle::{
    accounting_oracle, bundled_drop_counts, compare_with_published, comparison_to_csv,
    parse_drop_counts, savings_ratios, savings_to_csv, tables_to_csv, SavingsRow, WasteMetric,
};
use crate::metrics::{export_run, WasteLedger};
use crate::model::{AqmConfig, AqmKind, Preset, ScenarioConfig, ALL_PRESETS};
use crate::scenario_file;
use crate::sim::{run_scenario, RunOutput, Simulation};

#[derive(Debug, Parser)]
#[command(
    name = "aqm-sim",
    about = "Deterministic switch-pipeline simulator with pluggable queue management"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonOpts {
    /// Output directory for all artifacts.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and export summary + time series.
    Simulate {
        /// Preset numeral (I..XII) or path to a scenario file.
        #[arg(long)]
        scenario: String,
        /// Override the scenario's algorithm (ired-delay, ired-depth,
        /// ired-ghost, codel, pi2, dualpi2, taildrop).
        #[arg(long)]
        aqm: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Multiplier on phase starts and duration (flow counts unchanged).
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Dump the one-line-per-event trace next to the exports.
        #[arg(long)]
        trace: bool,
        /// Shorthand for --aqm ired-ghost (the ghost-depth variant).
        #[arg(long)]
        ghost: bool,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Compute the waste tables from drop counts alone (no simulation).
    Oracle {
        /// Drop-count CSV (conf,ired,pi2,codel,iredg); defaults to the
        /// bundled reference fixture.
        #[arg(long)]
        counts: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run every preset configuration across a list of algorithms.
    Sweep {
        /// Comma-separated algorithm keys.
        #[arg(long, default_value = "ired-delay,pi2,codel")]
        aqms: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn write_manifest(dir: &Path, paths: &[PathBuf]) -> Result<PathBuf> {
    let listing: String = paths
        .iter()
        .map(|p| format!("{}\n", p.display()))
        .collect();
    write_file(dir, "manifest.txt", &listing)
}

fn apply_overrides(
    mut cfg: ScenarioConfig,
    aqm: Option<&str>,
    ghost: bool,
    seed: Option<u64>,
    scale: f64,
) -> Result<ScenarioConfig> {
    if scale <= 0.0 {
        bail!("--scale must be positive, got {scale}");
    }
    if let Some(key) = aqm {
        cfg.aqm = AqmConfig::defaults(AqmKind::from_key(key)?);
    }
    if ghost {
        cfg.aqm = AqmConfig::defaults(AqmKind::IredGhost);
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg.scaled(scale))
}

/// Post-run sanity: abort with nonzero status on any broken invariant.
fn check_run(out: &RunOutput) -> Result<()> {
    if !out.counters.conserved(out.in_flight_at_end) {
        bail!(
            "packet conservation violated: injected {} != accounted",
            out.counters.injected
        );
    }
    let ired = matches!(
        out.summary.aqm.as_str(),
        "ired-delay" | "ired-depth" | "ired-ghost"
    );
    if ired && out.counters.egress_aqm_drops != 0 {
        bail!("ingress-dropping AQM produced egress drops");
    }
    if ired && out.counters.scalable_ingress_drops + out.counters.scalable_egress_drops != 0 {
        bail!("ingress-dropping AQM dropped scalable packets");
    }
    Ok(())
}

fn simulate_one(cfg: &ScenarioConfig, dir: &Path, trace: bool) -> Result<(RunOutput, Vec<PathBuf>)> {
    let out = if trace {
        fs::create_dir_all(dir)?;
        let f = fs::File::create(dir.join("trace.log"))?;
        Simulation::new(cfg)?.run_traced(Box::new(std::io::BufWriter::new(f)))?
    } else {
        run_scenario(cfg)?
    };
    check_run(&out)?;
    let mut paths = export_run(dir, &out.summary, &out.series)?;
    // the exact configuration that produced these artifacts, replayable via
    // `simulate --scenario <path>`
    paths.push(write_file(dir, "scenario.txt", &scenario_file::emit(cfg))?);
    if trace {
        paths.push(dir.join("trace.log"));
    }
    Ok((out, paths))
}

fn oracle_mode(counts: Option<&Path>, dir: &Path) -> Result<Vec<PathBuf>> {
    let table = match counts {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_drop_counts(&text)?
        }
        None => bundled_drop_counts(),
    };
    let tables = accounting_oracle(&table)?;
    let mut paths = vec![
        write_file(dir, "wasted_memory.csv", &tables_to_csv(&tables, WasteMetric::Memory))?,
        write_file(dir, "wasted_cycles.csv", &tables_to_csv(&tables, WasteMetric::Cycles))?,
        write_file(dir, "wasted_weight.csv", &tables_to_csv(&tables, WasteMetric::Weight))?,
        write_file(dir, "savings.csv", &savings_to_csv(&savings_ratios(&tables)))?,
    ];
    paths.push(write_file(
        dir,
        "reference_comparison.csv",
        &comparison_to_csv(&compare_with_published(&tables)),
    )?);
    paths.push(write_manifest(dir, &paths)?);
    Ok(paths)
}

fn sweep_mode(aqms: &str, seed: u64, scale: f64, dir: &Path) -> Result<Vec<PathBuf>> {
    let kinds: Vec<AqmKind> = aqms
        .split(',')
        .map(|k| AqmKind::from_key(k.trim()))
        .collect::<std::result::Result<_, _>>()?;
    if kinds.is_empty() {
        bail!("--aqms selected nothing");
    }
    let mut paths = Vec::new();
    let mut rows = String::from(
        "conf,aqm,ingress_drops,egress_drops,tail_drops,wasted_memory_bytes,wasted_cycles,wasted_weight_tenths,classic_mean_mbps,scalable_mean_mbps\n",
    );
    let mut ledgers: Vec<(Preset, AqmKind, WasteLedger)> = Vec::new();
    for preset in ALL_PRESETS {
        for &kind in &kinds {
            let mut cfg = crate::model::preset_scenario(preset);
            cfg.aqm = AqmConfig::defaults(kind);
            cfg.seed = seed;
            let cfg = cfg.scaled(scale);
            let run_dir = dir.join(format!("{}-{}", preset.name(), kind.key()));
            let (out, run_paths) = simulate_one(&cfg, &run_dir, false)?;
            paths.extend(run_paths);
            rows.push_str(&format!(
                "{},{},{},{},{},{},{},{},{:.4},{:.4}\n",
                preset.name(),
                kind.key(),
                out.counters.ingress_aqm_drops,
                out.counters.egress_aqm_drops,
                out.counters.tail_drops,
                out.ledger.wasted_memory_bytes,
                out.ledger.wasted_cycles,
                out.ledger.wasted_weight_tenths,
                out.summary.classic_mean_mbps,
                out.summary.scalable_mean_mbps,
            ));
            ledgers.push((preset, kind, out.ledger));
        }
    }
    paths.push(write_file(dir, "sweep_summary.csv", &rows)?);
    if let Some(savings) = sweep_savings(&ledgers) {
        paths.push(write_file(dir, "savings.csv", &savings_to_csv(&savings))?);
    }
    paths.push(write_manifest(dir, &paths)?);
    Ok(paths)
}

/// Competitor-over-iRED waste ratios from the sweep's own ledgers (needs an
/// iRED variant in the run set).
fn sweep_savings(ledgers: &[(Preset, AqmKind, WasteLedger)]) -> Option<Vec<SavingsRow>> {
    let baseline = |p: Preset| {
        ledgers.iter().find(|(lp, k, _)| {
            *lp == p && matches!(k, AqmKind::IredDelay | AqmKind::IredDepth)
        })
    };
    let mut rows = Vec::new();
    for (preset, kind, ledger) in ledgers {
        if matches!(kind, AqmKind::Pi2 | AqmKind::DualPi2 | AqmKind::Codel) {
            let (_, _, base) = baseline(*preset)?;
            if base.wasted_memory_bytes == 0 || base.wasted_cycles == 0 {
                continue;
            }
            rows.push(SavingsRow {
                preset: *preset,
                versus: *kind,
                memory_ratio: ledger.wasted_memory_bytes as f64 / base.wasted_memory_bytes as f64,
                cycles_ratio: ledger.wasted_cycles as f64 / base.wasted_cycles as f64,
                weight_ratio: ledger.wasted_weight_tenths as f64
                    / base.wasted_weight_tenths as f64,
            });
        }
    }
    if rows.is_empty() {
        None
    } else {
        Some(rows)
    }
}

/// Execute one parsed command; returns every artifact path written.
pub fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    match cli.command {
        Command::Simulate { scenario, aqm, seed, scale, trace, ghost, common } => {
            let cfg = scenario_file::load_selector(&scenario)?;
            let cfg = apply_overrides(cfg, aqm.as_deref(), ghost, seed, scale)?;
            let (_, mut paths) = simulate_one(&cfg, &common.out, trace)?;
            paths.push(write_manifest(&common.out, &paths)?);
            Ok(paths)
        }
        Command::Oracle { counts, common } => oracle_mode(counts.as_deref(), &common.out),
        Command::Sweep { aqms, seed, scale, common } => {
            sweep_mode(&aqms, seed, scale, &common.out)
        }
    }
}
