//! Batch experiment driver behind the `cdnsim` binary.
//!
//! Four subcommands: `simulate` runs the manifest's sweep grid and writes
//! per-cell metrics/summary CSVs plus a seed-averaged comparison table;
//! `gen-workload` materializes the manifest's workload as a trace CSV;
//! `fit` estimates decay profiles from a trace; `solve-subproblem` prints
//! the flow allocation for one priced-capacity instance. Exit codes are
//! stable: 0 success, 1 configuration/usage error, 2 runtime error.

use crate::config::{ConfigError, PenaltySpec, RunManifest, SweepCell};
use crate::simulator::{self, SimError, Summary};
use crate::subproblem::{self, SubproblemInstance};
use crate::workload::{self, IngestOptions, RequestEvent, WorkloadError};
use crate::Catalog;
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;
use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    /// Bad manifest, flags, or input data: exit code 1.
    Config(String),
    /// Failure while executing or writing artifacts: exit code 2.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(err: ConfigError) -> Self {
        CliError::Config(err.to_string())
    }
}

impl From<WorkloadError> for CliError {
    fn from(err: WorkloadError) -> Self {
        CliError::Config(err.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(err: SimError) -> Self {
        match err {
            SimError::Dual(_) | SimError::Subproblem(_) => CliError::Runtime(err.to_string()),
            _ => CliError::Config(err.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "cdnsim",
    version,
    about = "CDN cache-placement simulator and workload tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every sweep cell of a manifest and write CSV artifacts.
    Simulate {
        /// Manifest path (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Output directory for the CSVs.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads for sweep cells (default: all cores).
        #[arg(long)]
        jobs: Option<NonZeroUsize>,
        /// Replace the manifest's seed list with this single seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Materialize the manifest's workload as a request-log CSV.
    GenWorkload {
        /// Manifest path (TOML); only `[workload]` and the horizon are used.
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Extra run seed mixed into the generators (default 0).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit per-file release/decay profiles from a request-log CSV.
    Fit {
        /// Trace path (`timestamp,cache_id,file_id,duration_minutes`).
        trace: PathBuf,
        /// Output profile CSV (`file_id,tau,V,omega`); a `file_id,size`
        /// catalog sidecar lands next to it.
        #[arg(long)]
        out: PathBuf,
        /// Multiply fitted request counts by this factor.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        upscale: u64,
        /// Volume units per duration minute.
        #[arg(long, default_value_t = 1.0)]
        bitrate: f64,
        /// Where to write the catalog sidecar (default: derived from --out).
        #[arg(long)]
        catalog_out: Option<PathBuf>,
    },
    /// Solve one priced flow-allocation instance and print the solution.
    SolveSubproblem {
        /// Instance TOML with `capacity`, `prices`, and a `[penalty]` table.
        instance: PathBuf,
    },
}

/// Parses the process arguments and runs the chosen command; this is the
/// whole binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err)
            if matches!(
                err.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) =>
        {
            print!("{err}");
            return ExitCode::SUCCESS;
        }
        Err(err) => {
            eprint!("{err}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Simulate { config, out, jobs, seed } => cmd_simulate(&config, &out, jobs, seed),
        Command::GenWorkload { config, out, seed } => cmd_gen_workload(&config, &out, seed),
        Command::Fit { trace, out, upscale, bitrate, catalog_out } => {
            cmd_fit(&trace, &out, upscale, bitrate, catalog_out.as_deref())
        }
        Command::SolveSubproblem { instance } => cmd_solve_subproblem(&instance),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}

struct CellResult {
    cell: SweepCell,
    summary: Summary,
}

fn cmd_simulate(
    config_path: &Path,
    out_dir: &Path,
    jobs: Option<NonZeroUsize>,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let mut manifest = RunManifest::load(config_path)?;
    if let Some(seed) = seed {
        manifest.experiment.seeds = vec![seed];
    }
    let base_dir = config_path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out_dir.display())))?;

    // One stream per seed, shared by every policy/size cell at that seed.
    let seeds: BTreeSet<u64> = manifest.experiment.seeds.iter().copied().collect();
    let mut streams = Vec::new();
    for &seed in &seeds {
        streams.push((seed, manifest.materialize(seed, base_dir)?));
    }
    let stream_of = |seed: u64| -> &(Catalog, Vec<RequestEvent>) {
        &streams.iter().find(|(s, _)| *s == seed).expect("materialized").1
    };

    let cells = manifest.cells();
    let run_cell = |cell: &SweepCell| -> Result<CellResult, CliError> {
        let (catalog, stream) = stream_of(cell.seed);
        let config = manifest.lower(cell, catalog)?;
        let output = simulator::run(&config, catalog, stream)?;
        let stem = cell_stem(cell);
        let metrics_path = out_dir.join(format!("{stem}.metrics.csv"));
        write_file(&metrics_path, |w| {
            simulator::write_metrics_csv(w, &output.metrics)
        })?;
        let summary_path = out_dir.join(format!("{stem}.summary.csv"));
        write_file(&summary_path, |w| {
            write_summary_csv(w, &manifest, cell, &output.summary)
        })?;
        Ok(CellResult { cell: cell.clone(), summary: output.summary })
    };

    let results: Vec<Result<CellResult, CliError>> = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.get())
            .build()
            .map_err(|e| CliError::Runtime(format!("worker pool: {e}")))?
            .install(|| cells.par_iter().map(run_cell).collect()),
        None => cells.par_iter().map(run_cell).collect(),
    };

    // Failures are isolated per cell; survivors still land in the table.
    let mut completed = Vec::new();
    let mut worst_exit = 0u8;
    for (cell, result) in cells.iter().zip(results) {
        match result {
            Ok(res) => completed.push(res),
            Err(err) => {
                eprintln!("cell {} failed: {}", cell_stem(cell), err.message());
                worst_exit = worst_exit.max(err.exit_code());
            }
        }
    }
    write_file(&out_dir.join("combined.csv"), |w| {
        write_combined_csv(w, &manifest, &completed)
    })?;
    match worst_exit {
        0 => Ok(()),
        1 => Err(CliError::Config("some sweep cells had invalid configurations".into())),
        _ => Err(CliError::Runtime("some sweep cells failed".into())),
    }
}

fn cell_stem(cell: &SweepCell) -> String {
    format!(
        "{}_c{}_t{}_s{}",
        cell.policy, cell.cache_pct, cell.t_up_v, cell.seed
    )
}

fn write_file<F>(path: &Path, write: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))?;
    let mut writer = BufWriter::new(file);
    write(&mut writer)
        .and_then(|()| writer.flush())
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))
}

const SUMMARY_HEADER: &str =
    "policy,topology,cache_pct,t_up_v,seed,slots,mean_nc,mean_rdv,mean_bbc,hits,misses,hit_rate";

fn write_summary_csv(
    out: &mut impl Write,
    manifest: &RunManifest,
    cell: &SweepCell,
    summary: &Summary,
) -> std::io::Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        cell.policy,
        manifest.experiment.topology,
        cell.cache_pct,
        cell.t_up_v,
        cell.seed,
        summary.slots,
        summary.mean_nc,
        summary.mean_rdv,
        summary.mean_bbc,
        summary.hits,
        summary.misses,
        summary.hit_rate
    )
}

const COMBINED_HEADER: &str =
    "policy,cache_pct,t_up_v,seeds,mean_nc,mean_rdv,mean_bbc,mean_hit_rate";

/// Seed-averaged comparison table, one row per (policy, cache size, update
/// interval) in manifest order — the axes of a metric-vs-cache-size plot.
fn write_combined_csv(
    out: &mut impl Write,
    manifest: &RunManifest,
    completed: &[CellResult],
) -> std::io::Result<()> {
    writeln!(out, "{COMBINED_HEADER}")?;
    let e = &manifest.experiment;
    for policy in &e.policies {
        for &pct in &e.cache_pct {
            for &t_up_v in &e.t_up_v {
                let group: Vec<&CellResult> = completed
                    .iter()
                    .filter(|r| {
                        r.cell.policy.to_string() == *policy
                            && r.cell.cache_pct == pct
                            && r.cell.t_up_v == t_up_v
                    })
                    .collect();
                if group.is_empty() {
                    continue;
                }
                let n = group.len() as f64;
                let mean = |f: fn(&Summary) -> f64| -> f64 {
                    group.iter().map(|r| f(&r.summary)).sum::<f64>() / n
                };
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    policy,
                    pct,
                    t_up_v,
                    group.len(),
                    mean(|s| s.mean_nc),
                    mean(|s| s.mean_rdv),
                    mean(|s| s.mean_bbc),
                    mean(|s| s.hit_rate)
                )?;
            }
        }
    }
    Ok(())
}

fn cmd_gen_workload(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let manifest = RunManifest::load(config_path)?;
    let base_dir = config_path.parent().unwrap_or(Path::new("."));
    let (catalog, events) = manifest.materialize(seed.unwrap_or(0), base_dir)?;
    let bitrate = match &manifest.workload {
        crate::config::WorkloadSection::Trace { bitrate, .. } => *bitrate,
        _ => 1.0,
    };
    write_file(out, |w| workload::write_trace(w, &events, &catalog, bitrate))?;
    println!(
        "wrote {} events over {} files to {}",
        events.len(),
        catalog.len(),
        out.display()
    );
    Ok(())
}

fn cmd_fit(
    trace: &Path,
    out: &Path,
    upscale: u64,
    bitrate: f64,
    catalog_out: Option<&Path>,
) -> Result<(), CliError> {
    let reader = File::open(trace)
        .map(std::io::BufReader::new)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", trace.display())))?;
    let options = IngestOptions { volume_per_minute: bitrate, sort: true };
    let (catalog, events) = workload::ingest_trace(reader, options)?;
    let mut profiles = workload::fit_profiles(&events, catalog.len());
    if upscale > 1 {
        profiles = workload::upscale(&profiles, upscale);
    }
    write_file(out, |w| workload::write_profiles(w, &profiles, Some(&catalog)))?;
    let sidecar = match catalog_out {
        Some(path) => path.to_path_buf(),
        None => out.with_extension("catalog.csv"),
    };
    write_file(&sidecar, |w| workload::write_catalog(w, &catalog))?;
    println!(
        "fitted {} profiles from {} events; sizes in {}",
        profiles.len(),
        events.len(),
        sidecar.display()
    );
    Ok(())
}

/// On-disk form of one flow-allocation instance.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceSpec {
    capacity: f64,
    prices: Vec<f64>,
    penalty: PenaltySpec,
}

fn cmd_solve_subproblem(instance_path: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(instance_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", instance_path.display())))?;
    let spec: InstanceSpec = toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", instance_path.display())))?;
    let penalty = spec.penalty.build().map_err(|e| CliError::Config(e.to_string()))?;
    let instance = SubproblemInstance {
        prices: spec.prices,
        capacity: spec.capacity,
        penalty,
    };
    let solution =
        subproblem::solve(&instance, 1e-9).map_err(|e| CliError::Config(e.to_string()))?;
    let residual = subproblem::verify_kkt(&instance, &solution);
    let flows: Vec<String> = solution.flows.iter().map(f64::to_string).collect();
    println!("flows = {}", flows.join(" "));
    println!("multiplier = {}", solution.multiplier);
    println!("saturated = {}", solution.saturated);
    println!("kkt_residual = {residual:e}");
    Ok(())
}
