//! `pulsecorr` command-line front end.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on configuration or
//! usage errors.

mod config;
mod report;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use pulsecorr::analysis::{analyze_series, sweep, SweepError};
use pulsecorr::correlate::{oracle_click_probs, EstimateError};
use pulsecorr::envelope::window_weights;
use pulsecorr::hbt::{simulate, MeasurementMode};
use pulsecorr::timetag::{
    bin_to_windows, export_timetags, parse_binary, parse_csv, ps_to_ticks, write_binary, write_csv, BinError,
    TimeTagHeader, TimeTagRecord, CSV_HEADER, MAGIC,
};

use config::{ConfigError, RunConfig};
use report::{EstimateRecord, OracleRecord, SimulationSummary};

#[derive(Debug, Parser)]
#[command(name = "pulsecorr", version, about = "Pulsed-light g2 simulation and analysis")]
struct Cli {
    /// Run configuration (flat key = value file).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output path: a directory for `simulate`, a file otherwise (default stdout).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Tabular output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Extra or overriding configuration entries.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate and write a TTG2 time-tag file plus a JSON summary.
    Simulate,
    /// Bin a time-tag file (TTG2 or CSV) onto the configured grid and estimate g2.
    Analyze {
        input: PathBuf,
    },
    /// Exact click and coincidence probabilities for the configured source.
    Oracle,
    /// Simulate and analyze once per `sweep.values` entry.
    Sweep,
    /// Convert between CSV and TTG2 time tags; direction follows the input.
    GenTimetags {
        input: PathBuf,
        /// Tick length for CSV to TTG2 conversion.
        #[arg(long, default_value_t = 1)]
        resolution_ps: u64,
        /// Channel count for CSV to TTG2 conversion (default: highest channel + 1).
        #[arg(long)]
        channels: Option<u32>,
    },
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn runtime(context: &str) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{context}: {e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (CliError::Config(msg) | CliError::Runtime(msg)) = &e;
            eprintln!("pulsecorr: {msg}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Config("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::GenTimetags {
            input,
            resolution_ps,
            channels,
        } => gen_timetags(cli, input, *resolution_ps, *channels),
        command => {
            let cfg = load_config(cli)?;
            match command {
                Command::Simulate => cmd_simulate(cli, &cfg),
                Command::Analyze { input } => cmd_analyze(cli, &cfg, input),
                Command::Oracle => cmd_oracle(cli, &cfg),
                Command::Sweep => cmd_sweep(cli, &cfg),
                Command::GenTimetags { .. } => unreachable!(),
            }
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    for assignment in &cli.set {
        cfg.set(assignment)?;
    }
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    Ok(cfg)
}

fn emit(out: Option<&Path>, content: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, content).map_err(runtime(&format!("cannot write {}", path.display()))),
        None => io::stdout().write_all(content).map_err(runtime("stdout")),
    }
}

fn cmd_simulate(cli: &Cli, cfg: &RunConfig) -> Result<(), CliError> {
    let dir = cli
        .out
        .as_deref()
        .ok_or_else(|| CliError::Config("simulate needs --out DIR".into()))?;
    let experiment = cfg.experiment()?;
    let mode = match experiment.mode {
        MeasurementMode::Temporal => "temporal",
        MeasurementMode::PulseToPulse { .. } => "pulse_to_pulse",
        MeasurementMode::SpatialEnsemble { .. } => {
            return Err(CliError::Config(
                "mode: spatial_ensemble outcomes have no time-tag form; use sweep".into(),
            ))
        }
    };
    let resolution = cfg.resolution_ps()?;
    let series = simulate(&experiment).map_err(|e| CliError::Runtime(e.to_string()))?;
    let (header, records) = export_timetags(&series, &experiment.grid, resolution).map_err(|e| match e {
        BinError::TickMismatch { .. } => CliError::Config(format!("output.resolution_ps: {e}")),
        other => CliError::Runtime(other.to_string()),
    })?;
    let mut bytes = Vec::new();
    write_binary(&records, &header, &mut bytes).map_err(|e| CliError::Runtime(e.to_string()))?;

    let tags_name = cfg.output_name("output.timetags", "clicks.ttg2");
    let summary_name = cfg.output_name("output.summary", "summary.json");
    fs::create_dir_all(dir).map_err(runtime(&format!("cannot create {}", dir.display())))?;
    emit(Some(&dir.join(&tags_name)), &bytes)?;
    let weights = window_weights(&experiment.train, &experiment.grid).map_err(|e| CliError::Runtime(e.to_string()))?;
    let summary = SimulationSummary {
        seed: experiment.seed,
        fingerprint: format!("{:016x}", series.fingerprint()),
        mode: mode.into(),
        n: series.window_count(),
        m: series.on_count(),
        r_i: series.intensity_ratio(),
        pulses: weights.pulse_count(),
        detectors: experiment.detectors.iter().map(|d| d.label().to_string()).collect(),
        click_counts: series.click_counts(),
        timetags: tags_name,
        resolution_ps: resolution,
        records: records.len(),
        bytes: bytes.len(),
    };
    emit(Some(&dir.join(summary_name)), report::to_json(&summary).as_bytes())
}

/// Reads TTG2, CSV (picosecond timestamps) or an empty file.
fn read_timetags(bytes: &[u8], fallback_resolution: u64) -> Result<(Option<TimeTagHeader>, u64, Vec<TimeTagRecord>), CliError> {
    if bytes.is_empty() {
        return Ok((None, fallback_resolution, Vec::new()));
    }
    let text = std::str::from_utf8(bytes).ok();
    match text {
        Some(t) if t.trim_start().starts_with(CSV_HEADER) => {
            let records = parse_csv(t).map_err(|e| CliError::Runtime(format!("CSV time tags: {e}")))?;
            Ok((None, 1, records))
        }
        _ => {
            let (header, records) = parse_binary(bytes).map_err(|e| CliError::Runtime(format!("TTG2 time tags: {e}")))?;
            Ok((Some(header), header.resolution_ps, records))
        }
    }
}

fn cmd_analyze(cli: &Cli, cfg: &RunConfig, input: &Path) -> Result<(), CliError> {
    let options = cfg.analysis_options()?;
    if let MeasurementMode::SpatialEnsemble { .. } = cfg.mode()? {
        return Err(CliError::Config("mode: spatial_ensemble cannot be binned from time tags".into()));
    }
    let grid = cfg.grid()?;
    let train = cfg.train(&grid, Some(1.0))?;
    let weights = window_weights(&train, &grid).map_err(|e| CliError::Config(format!("pulse/grid: {e}")))?;
    let detectors = cfg.detectors()?.len();
    if detectors > 256 {
        return Err(CliError::Config(format!("{detectors} detectors exceed the 256 channels")));
    }
    let bytes = fs::read(input).map_err(runtime(&format!("cannot read {}", input.display())))?;
    let (header, resolution, records) = read_timetags(&bytes, cfg.resolution_ps()?)?;
    if let Some(h) = header {
        if h.channel_count as usize != detectors {
            return Err(CliError::Config(format!(
                "file declares {} channels but {detectors} detectors are configured",
                h.channel_count
            )));
        }
    }
    let channel_map: Vec<u8> = (0..detectors).map(|d| d as u8).collect();
    let (series, _discarded) =
        bin_to_windows(&records, resolution, &weights, &channel_map, cfg.out_of_range()?).map_err(|e| match e {
            BinError::UnmappedChannel { .. } => CliError::Config(format!("channel count mismatch: {e}")),
            other => CliError::Runtime(other.to_string()),
        })?;
    let rows = analyze_series(&series, &options);
    let records: Vec<EstimateRecord> = rows.iter().map(EstimateRecord::from).collect();
    let text = match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => report::analyze_csv(&records),
        Format::Json => report::to_json(&records),
    };
    emit(cli.out.as_deref(), text.as_bytes())
}

fn cmd_oracle(cli: &Cli, cfg: &RunConfig) -> Result<(), CliError> {
    let source = cfg.source()?;
    let detectors = cfg.detectors()?;
    let splitter = cfg.splitter(detectors.len())?;
    let result = oracle_click_probs(&source, &splitter, &detectors).map_err(|e| match e {
        EstimateError::DarkCountsUnsupported { .. } | EstimateError::DetectorCountMismatch { .. } => {
            CliError::Config(e.to_string())
        }
        other => CliError::Runtime(other.to_string()),
    })?;
    let record = OracleRecord {
        source: source.kind_name(),
        mean: source.mean(),
        port_probs: splitter.port_probs().to_vec(),
        efficiencies: detectors.iter().map(|d| d.efficiency()).collect(),
        result,
    };
    let text = match cli.format.unwrap_or(Format::Json) {
        Format::Json => report::to_json(&record),
        Format::Csv => report::oracle_csv(&record),
    };
    emit(cli.out.as_deref(), text.as_bytes())
}

fn cmd_sweep(cli: &Cli, cfg: &RunConfig) -> Result<(), CliError> {
    let experiment = cfg.experiment()?;
    let (axis, values) = cfg.sweep()?;
    let options = cfg.analysis_options()?;
    let rows = sweep(&experiment, axis, &values, &options).map_err(|e| match e {
        SweepError::Simulation(inner) => CliError::Runtime(inner.to_string()),
        other => CliError::Config(format!("sweep: {other}")),
    })?;
    let records = report::sweep_records(axis, &rows);
    let text = match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => report::sweep_csv(axis, &records),
        Format::Json => report::to_json(&records),
    };
    emit(cli.out.as_deref(), text.as_bytes())
}

fn gen_timetags(cli: &Cli, input: &Path, resolution_ps: u64, channels: Option<u32>) -> Result<(), CliError> {
    let bytes = fs::read(input).map_err(runtime(&format!("cannot read {}", input.display())))?;
    if bytes.starts_with(&MAGIC) {
        let (header, records) = parse_binary(&bytes).map_err(|e| CliError::Runtime(format!("TTG2 time tags: {e}")))?;
        return emit(cli.out.as_deref(), write_csv(&records, header.resolution_ps).as_bytes());
    }
    if resolution_ps == 0 {
        return Err(CliError::Config("--resolution-ps must be >= 1".into()));
    }
    let text = std::str::from_utf8(&bytes).map_err(|_| CliError::Runtime("input is neither TTG2 nor UTF-8 CSV".into()))?;
    let records = parse_csv(text).map_err(|e| CliError::Runtime(format!("CSV time tags: {e}")))?;
    let ticks = ps_to_ticks(&records, resolution_ps).map_err(|i| {
        CliError::Runtime(format!("record {i} is not a whole number of {resolution_ps} ps ticks"))
    })?;
    let channel_count = channels.unwrap_or_else(|| ticks.iter().map(|r| r.channel as u32 + 1).max().unwrap_or(1));
    let header = TimeTagHeader {
        resolution_ps,
        channel_count,
    };
    let mut out = Vec::new();
    write_binary(&ticks, &header, &mut out).map_err(|e| CliError::Runtime(e.to_string()))?;
    emit(cli.out.as_deref(), &out)
}
