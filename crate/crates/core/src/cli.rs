//! Command-line front end: configuration, sweeps, fits, RNG tests,
//! benchmarks and the exact oracle.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{exhaustive_oracle, lorentzian_fit, power_law_fit, tc_extrapolate, LorentzianFit, ScalingFit, TcFit, DEFAULT_WINDOW};
use crate::bench::{render_report, throughput, write_report_csv, Variant};
use crate::error::{Error, Result};
use crate::lattice::{Init, ModelKind, ModelParams};
use crate::observables::{
    read_csv, simulate, point_stats, sweep_grid, write_csv, CsvRow, FinalState, Protocol, CSV_HEADER, DEFAULT_LANES,
};
use crate::rng::{export_bitstream, generate_bits, nist, GeneratorKind};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;
pub const EXIT_STRICT: u8 = 3;

const DEFAULT_T_RANGE: &str = "2.0:3.0:0.05";
const DEFAULT_RUN_T: f64 = 2.5;
const DEFAULT_SIDE: usize = 64;

#[derive(Debug, Parser)]
#[command(name = "spinlane", version, about = "Lane-parallel Ising machine emulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Measure observables over a grid of sizes and temperatures.
    Sweep(RunArgs),
    /// Simulate a single (L, T) point.
    Run(SingleArgs),
    /// Lorentzian peak fits, the chi_max power law and Tc extrapolation.
    Fit(FitArgs),
    /// Statistical tests on a generator bitstream.
    Rngtest(RngArgs),
    /// Spin-update throughput.
    Bench(BenchArgs),
    /// Exact Gibbs averages on a 2x2 or 4x4 torus.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON file with any of the flag values; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_model)]
    pub model: Option<ModelKind>,
    /// Lattice sides, comma separated.
    #[arg(long = "L", value_delimiter = ',')]
    pub sizes: Vec<usize>,
    /// Temperatures, comma separated.
    #[arg(long = "T", value_delimiter = ',', allow_negative_numbers = true)]
    pub temperatures: Vec<f64>,
    /// Inclusive temperature grid `start:stop:step`.
    #[arg(long = "T-range")]
    pub t_range: Option<String>,
    /// Coupling of the Ising and Potts models.
    #[arg(long = "J", allow_negative_numbers = true)]
    pub j: Option<f64>,
    #[arg(long = "J1", allow_negative_numbers = true)]
    pub j1: Option<f64>,
    #[arg(long = "J2", allow_negative_numbers = true)]
    pub j2: Option<f64>,
    #[arg(long)]
    pub q: Option<u32>,
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub lanes: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_parser = parse_init)]
    pub init: Option<Init>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SingleArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Write the final spin configuration as a text snapshot.
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Observables CSV files from `sweep`.
    #[arg(required = true)]
    pub csv: Vec<PathBuf>,
    /// Points on each side of the susceptibility maximum.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    Combined,
    Lfsr32,
}

impl From<Generator> for GeneratorKind {
    fn from(g: Generator) -> Self {
        match g {
            Generator::Combined => GeneratorKind::Combined,
            Generator::Lfsr32 => GeneratorKind::Lfsr32,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RngArgs {
    #[arg(long, value_enum, default_value_t = Generator::Combined)]
    pub generator: Generator,
    #[arg(long, default_value_t = 1_000_000)]
    pub bits: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Also write the raw bitstream, 8 bits per byte, least significant first.
    #[arg(long)]
    pub export: Option<PathBuf>,
    /// Exit with status 3 if any test fails.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchVariant {
    Lane,
    Sequential,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long = "L", value_delimiter = ',', default_values_t = [128, 256, 512, 1024])]
    pub sizes: Vec<usize>,
    #[arg(long, value_enum, default_value_t = BenchVariant::Both)]
    pub variant: BenchVariant,
    /// Seconds per measurement.
    #[arg(long, default_value_t = 1.0)]
    pub min_duration: f64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[arg(long = "L", default_value_t = 4)]
    pub side: usize,
    #[arg(long = "T", value_delimiter = ',', default_values_t = [2.0, 3.0])]
    pub temperatures: Vec<f64>,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

fn parse_model(s: &str) -> std::result::Result<ModelKind, String> {
    match s {
        "ising" => Ok(ModelKind::Ising),
        "j1j2" => Ok(ModelKind::J1j2),
        "potts" => Ok(ModelKind::Potts),
        other => Err(format!("unknown model `{other}` (expected ising, j1j2 or potts)")),
    }
}

fn parse_init(s: &str) -> std::result::Result<Init, String> {
    match s {
        "all_up" | "all-up" => Ok(Init::AllUp),
        "random" => Ok(Init::Random),
        other => Err(format!("unknown init `{other}` (expected all_up or random)")),
    }
}

/// Keys accepted in a JSON config file; each mirrors a flag.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: Option<ModelKind>,
    #[serde(rename = "L")]
    pub sizes: Option<Vec<usize>>,
    #[serde(rename = "T")]
    pub temperatures: Option<Vec<f64>>,
    #[serde(rename = "T-range")]
    pub t_range: Option<String>,
    #[serde(rename = "J")]
    pub j: Option<f64>,
    #[serde(rename = "J1")]
    pub j1: Option<f64>,
    #[serde(rename = "J2")]
    pub j2: Option<f64>,
    pub q: Option<u32>,
    pub warmup: Option<usize>,
    pub samples: Option<usize>,
    pub stride: Option<usize>,
    pub lanes: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub init: Option<Init>,
    pub out: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::usage("config", format!("{}: {e}", path.display())))
    }
}

/// Fully resolved settings of a `sweep` or `run`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub params: ModelParams,
    #[serde(rename = "L")]
    pub sizes: Vec<usize>,
    #[serde(rename = "T")]
    pub temperatures: Vec<f64>,
    pub protocol: Protocol,
    pub lane_budget: usize,
    pub seed: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
}

/// `start:stop:step`, inclusive of `stop` up to half a step.
pub fn parse_t_range(text: &str) -> Result<Vec<f64>> {
    let bad = |msg: &str| Error::usage("T-range", format!("`{text}`: {msg}"));
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad("expected start:stop:step"))?;
    let [start, stop, step] = parts[..] else {
        return Err(bad("expected start:stop:step"));
    };
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(bad("need step > 0 and stop >= start"));
    }
    let n = ((stop - start) / step + 0.5).floor() as usize;
    if n > 100_000 {
        return Err(bad("too many points"));
    }
    Ok((0..=n).map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9).collect())
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn resolve_temperatures(args: &RunArgs, file: &ConfigFile, single: bool) -> Result<Vec<f64>> {
    let choose = |list: Option<&Vec<f64>>, range: Option<&String>, source: &str| -> Result<Option<Vec<f64>>> {
        match (list.filter(|l| !l.is_empty()), range) {
            (Some(_), Some(_)) => Err(Error::usage("T", format!("{source} sets both T and T-range"))),
            (Some(l), None) => Ok(Some(l.clone())),
            (None, Some(r)) => parse_t_range(r).map(Some),
            (None, None) => Ok(None),
        }
    };
    let from_flags = choose(Some(&args.temperatures), args.t_range.as_ref(), "the command line")?;
    let from_file = choose(file.temperatures.as_ref(), file.t_range.as_ref(), "the config file")?;
    let mut ts = match from_flags.or(from_file) {
        Some(ts) => ts,
        None if single => vec![DEFAULT_RUN_T],
        None => parse_t_range(DEFAULT_T_RANGE)?,
    };
    if let Some(&bad) = ts.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::usage("T", format!("temperatures must be positive, got {bad}")));
    }
    ts.sort_by(f64::total_cmp);
    if ts.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::usage("T", "temperatures must be distinct"));
    }
    Ok(ts)
}

/// Merges the config file (if any) under the flags, applies defaults and
/// validates. Every rejection names the offending key.
pub fn parse_config(args: &RunArgs, single: bool) -> Result<RunConfig> {
    let file = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let model = pick(args.model, file.model, ModelKind::Ising);
    let sizes = match (&args.sizes, &file.sizes) {
        (flag, _) if !flag.is_empty() => flag.clone(),
        (_, Some(s)) if !s.is_empty() => s.clone(),
        _ => vec![DEFAULT_SIDE],
    };
    for &l in &sizes {
        if l < 4 || l % 2 != 0 {
            return Err(Error::usage("L", format!("lattice side must be even and at least 4, got {l}")));
        }
    }
    let temperatures = resolve_temperatures(args, &file, single)?;
    if single && sizes.len() != 1 {
        return Err(Error::usage("L", "run takes a single lattice side; use sweep for several"));
    }
    if single && temperatures.len() != 1 {
        return Err(Error::usage("T", "run takes a single temperature; use sweep for several"));
    }

    let j = pick(args.j, file.j, 1.0);
    let j1 = pick(args.j1, file.j1, 1.0);
    let j2 = pick(args.j2, file.j2, 0.0);
    let q = pick(args.q, file.q, 3);
    let params = match model {
        ModelKind::Ising => ModelParams { j, ..ModelParams::ising(temperatures[0]) },
        ModelKind::J1j2 => ModelParams::j1j2(j1, j2, temperatures[0]),
        ModelKind::Potts => ModelParams::potts(q, j, temperatures[0]),
    };
    match model {
        ModelKind::Ising | ModelKind::Potts if !(j > 0.0 && j.is_finite()) => {
            return Err(Error::usage("J", format!("coupling must be positive, got {j}")));
        }
        ModelKind::Potts if !(2..=255).contains(&q) => {
            return Err(Error::usage("q", format!("must be in 2..=255, got {q}")));
        }
        ModelKind::J1j2 if !(j1 > 0.0 && j1.is_finite()) => {
            return Err(Error::usage("J1", format!("must be positive, got {j1}")));
        }
        ModelKind::J1j2 if !(j2 <= 0.0 && j2.is_finite()) => {
            return Err(Error::usage("J2", format!("must be zero or negative, got {j2}")));
        }
        _ => {}
    }

    let protocol = Protocol {
        warmup: pick(args.warmup, file.warmup, 1000),
        n_samples: pick(args.samples, file.samples, 1000),
        stride: pick(args.stride, file.stride, 100),
        init: pick(args.init, file.init, Init::AllUp),
    };
    for (key, v) in [("warmup", protocol.warmup), ("samples", protocol.n_samples), ("stride", protocol.stride)] {
        if v == 0 {
            return Err(Error::usage(key, "must be at least 1"));
        }
    }
    if protocol.n_samples < 2 {
        return Err(Error::usage("samples", "need at least 2 samples for a variance"));
    }
    let lane_budget = pick(args.lanes, file.lanes, DEFAULT_LANES);
    if !(1..=4095).contains(&lane_budget) {
        return Err(Error::usage("lanes", format!("must be in 1..=4095, got {lane_budget}")));
    }
    if let Some(&l) = sizes.iter().find(|&&l| lane_budget < l / 2) {
        return Err(Error::usage("lanes", format!("{lane_budget} lanes cannot hold a row of L={l} (need {})", l / 2)));
    }
    let workers = pick(args.workers, file.workers, 1);
    if workers == 0 {
        return Err(Error::usage("workers", "must be at least 1"));
    }
    Ok(RunConfig {
        params,
        sizes,
        temperatures,
        protocol,
        lane_budget,
        seed: pick(args.seed, file.seed, 1),
        workers,
        out: args.out.clone().or(file.out),
    })
}

/// Sidecar written next to every sweep CSV.
#[derive(Debug, Serialize)]
struct SweepMeta<'a> {
    program: &'static str,
    version: &'static str,
    columns: &'static str,
    config: &'a RunConfig,
    /// Seed of each temperature, shared by all sizes.
    temperature_seeds: Vec<(f64, u64)>,
}

fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json { path: path.into(), source })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(path) => write_json(path, value),
        None => {
            let text = serde_json::to_string_pretty(value)
                .map_err(|source| Error::Json { path: "<stdout>".into(), source })?;
            println!("{text}");
            Ok(())
        }
    }
}

pub fn cmd_sweep(config: &RunConfig) -> Result<Vec<CsvRow>> {
    let stats = sweep_grid(
        &config.params,
        &config.sizes,
        &config.temperatures,
        &config.protocol,
        config.lane_budget,
        config.seed,
        config.workers,
    )?;
    let n_t = config.temperatures.len();
    let rows: Vec<CsvRow> = stats
        .iter()
        .enumerate()
        .map(|(k, s)| CsvRow::new(s, &config.protocol, config.seed + (k % n_t) as u64))
        .collect();
    let out = config.out.clone().unwrap_or_else(|| PathBuf::from("sweep.csv"));
    write_csv(&out, &rows)?;
    let meta = SweepMeta {
        program: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        columns: CSV_HEADER,
        config,
        temperature_seeds: config.temperatures.iter().enumerate().map(|(k, &t)| (t, config.seed + k as u64)).collect(),
    };
    write_json(&meta_path(&out), &meta)?;
    Ok(rows)
}

pub fn cmd_run(config: &RunConfig, snapshot: Option<&Path>) -> Result<CsvRow> {
    let params = config.params.with_temperature(config.temperatures[0]);
    let sim = simulate(&params, config.sizes[0], &config.protocol, config.lane_budget, config.seed)?;
    let row = CsvRow::new(&point_stats(&sim.series)?, &config.protocol, config.seed);
    if let Some(path) = &config.out {
        write_csv(path, &[row])?;
    }
    if let Some(path) = snapshot {
        let text = match &sim.final_state {
            FinalState::Spins(lat) => lat.to_snapshot(),
            FinalState::Potts(_) => return Err(Error::usage("snapshot", "snapshots hold two-state spins only")),
        };
        fs::write(path, text).map_err(|e| Error::io(path, e))?;
    }
    Ok(row)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SizeFit {
    #[serde(rename = "L")]
    pub side: usize,
    pub fit: LorentzianFit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub inputs: Vec<PathBuf>,
    pub observable: String,
    pub window: usize,
    pub lorentzian: Vec<SizeFit>,
    pub scaling: Option<ScalingFit>,
    pub tc: Option<TcFit>,
}

/// Fits `chi_abs(T)` per size, then the scaling laws when three or more
/// sizes are present.
pub fn cmd_fit(paths: &[PathBuf], window: usize) -> Result<FitReport> {
    let mut rows = Vec::new();
    for p in paths {
        rows.extend(read_csv(p)?);
    }
    let mut sizes: Vec<usize> = rows.iter().map(|r| r.side).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let mut lorentzian = Vec::new();
    for &l in &sizes {
        let points: Vec<(f64, f64)> = rows.iter().filter(|r| r.side == l).map(|r| (r.temperature, r.chi_abs)).collect();
        lorentzian.push(SizeFit { side: l, fit: lorentzian_fit(&points, window)? });
    }
    let (scaling, tc) = if sizes.len() >= 3 {
        let chi: Vec<f64> = lorentzian.iter().map(|f| f.fit.chi_max).collect();
        let ts: Vec<f64> = lorentzian.iter().map(|f| f.fit.t_star).collect();
        (Some(power_law_fit(&sizes, &chi)?), Some(tc_extrapolate(&sizes, &ts)?))
    } else {
        (None, None)
    };
    Ok(FitReport {
        inputs: paths.to_vec(),
        observable: "chi_abs".into(),
        window,
        lorentzian,
        scaling,
        tc,
    })
}

/// Returns the rendered table and whether every test passed.
pub fn cmd_rngtest(args: &RngArgs) -> Result<(String, bool)> {
    let kind = GeneratorKind::from(args.generator);
    let bits = generate_bits(kind, args.seed, args.bits)?;
    if let Some(path) = &args.export {
        export_bitstream(kind, args.seed, args.bits, path)?;
    }
    let outcomes = nist::run_battery(&bits)?;
    let all_pass = outcomes.iter().all(|o| o.passed);
    let text = format!(
        "generator: {}  bits: {}  seed: {}\n{}",
        kind.name(),
        args.bits,
        args.seed,
        nist::render_battery(&outcomes)
    );
    Ok((text, all_pass))
}

pub fn cmd_bench(args: &BenchArgs) -> Result<String> {
    let variants: &[Variant] = match args.variant {
        BenchVariant::Lane => &[Variant::Lane],
        BenchVariant::Sequential => &[Variant::Sequential],
        BenchVariant::Both => &[Variant::Lane, Variant::Sequential],
    };
    let mut reports = Vec::new();
    for &l in &args.sizes {
        if l < 4 || l % 2 != 0 {
            return Err(Error::usage("L", format!("lattice side must be even and at least 4, got {l}")));
        }
        for &v in variants {
            reports.push(throughput(l, v, args.min_duration)?);
        }
    }
    if let Some(path) = &args.csv {
        write_report_csv(path, &reports)?;
    }
    render_report(&reports)
}

pub fn cmd_oracle(args: &OracleArgs) -> Result<String> {
    let results = args
        .temperatures
        .iter()
        .map(|&t| exhaustive_oracle(args.side, t))
        .collect::<Result<Vec<_>>>()?;
    if args.json {
        return serde_json::to_string_pretty(&results).map_err(|source| Error::Json { path: "<stdout>".into(), source });
    }
    let mut out = String::new();
    for r in &results {
        out.push_str(&format!(
            "L={} T={} e_per_spin={:.10} m_abs={:.10} m_signed={:.10} chi_abs={:.10} heat_capacity={:.10} log_z={:.10}\n",
            r.side, r.temperature, r.e_per_spin, r.m_abs, r.m_signed, r.chi_abs, r.heat_capacity, r.log_z
        ));
    }
    Ok(out)
}

/// Runs a parsed command; the result is the process exit status.
pub fn execute(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Sweep(args) => {
            let config = parse_config(&args, false)?;
            let rows = cmd_sweep(&config)?;
            eprintln!("wrote {} rows", rows.len());
        }
        Command::Run(args) => {
            let config = parse_config(&args.run, true)?;
            let row = cmd_run(&config, args.snapshot.as_deref())?;
            emit_json(None, &row)?;
        }
        Command::Fit(args) => {
            let report = cmd_fit(&args.csv, args.window)?;
            emit_json(args.out.as_deref(), &report)?;
        }
        Command::Rngtest(args) => {
            let (text, all_pass) = cmd_rngtest(&args)?;
            print!("{text}");
            if args.strict && !all_pass {
                return Ok(EXIT_STRICT);
            }
        }
        Command::Bench(args) => print!("{}", cmd_bench(&args)?),
        Command::Oracle(args) => print!("{}", cmd_oracle(&args)?),
    }
    std::io::stdout().flush().map_err(|e| Error::io("<stdout>", e))?;
    Ok(EXIT_OK)
}

/// Exit status for an error: 1 for usage problems, 2 otherwise.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Usage { .. } => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}
