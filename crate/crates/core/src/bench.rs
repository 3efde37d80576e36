//! Spin-update throughput in spins per microsecond and nanoseconds per MCS.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{row_block_schedule, run_mcs, sequential_mcs_reference, BoltzmannTable};
use crate::lattice::{Init, SpinLattice};
use crate::observables::{Protocol, DEFAULT_LANES};
use crate::rng::seed_lanes;

pub const BENCH_TEMPERATURE: f64 = 2.5;

/// Published figures shown beside measurements, spins per microsecond.
pub const LITERATURE_FPGA: f64 = 614_400.0;
pub const LITERATURE_CPU: f64 = 62.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Lane,
    Sequential,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Lane => "lane-kernel",
            Variant::Sequential => "sequential-reference",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    #[serde(rename = "L")]
    pub side: usize,
    pub variant: Variant,
    pub spins_per_us: f64,
    pub ns_per_mcs: f64,
    pub wall_time_s: f64,
    pub n_mcs: u64,
    pub workers: usize,
}

/// Times MCS at [`BENCH_TEMPERATURE`] until `min_duration` seconds (at least 1) have elapsed.
pub fn throughput(side: usize, variant: Variant, min_duration: f64) -> Result<ThroughputReport> {
    if !(min_duration >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "benchmark duration must be at least 1 s, got {min_duration}"
        )));
    }
    measure(side, variant, Duration::from_secs_f64(min_duration))
}

pub(crate) fn measure(side: usize, variant: Variant, min_duration: Duration) -> Result<ThroughputReport> {
    let mut lat = SpinLattice::new(side, Init::Random, 1)?;
    let n = lat.n_sites();
    let batch = (1usize << 20).div_ceil(n).max(1);
    let mut advance: Box<dyn FnMut(&mut SpinLattice, usize) -> Result<()>> = match variant {
        Variant::Lane => {
            let lanes = DEFAULT_LANES.max(side / 2);
            let mut bank = seed_lanes(1, lanes)?;
            let table = BoltzmannTable::new(BENCH_TEMPERATURE)?;
            let schedule = row_block_schedule(side, lanes)?;
            Box::new(move |lat, k| run_mcs(lat, &mut bank, &table, &schedule, k).map(drop))
        }
        Variant::Sequential => {
            let mut rng = StdRng::seed_from_u64(1);
            Box::new(move |lat, k| {
                for _ in 0..k {
                    sequential_mcs_reference(lat, &mut rng, BENCH_TEMPERATURE)?;
                }
                Ok(())
            })
        }
    };
    advance(&mut lat, batch)?;
    let start = Instant::now();
    let mut n_mcs = 0u64;
    while start.elapsed() < min_duration {
        advance(&mut lat, batch)?;
        n_mcs += batch as u64;
    }
    let elapsed = start.elapsed();
    let micros = elapsed.as_secs_f64() * 1e6;
    if !(micros > 0.0) {
        return Err(Error::Environment("timer reported no elapsed time".into()));
    }
    Ok(ThroughputReport {
        side,
        variant,
        spins_per_us: (n_mcs as f64 * n as f64) / micros,
        ns_per_mcs: elapsed.as_secs_f64() * 1e9 / n_mcs as f64,
        wall_time_s: elapsed.as_secs_f64(),
        n_mcs,
        workers: 1,
    })
}

fn sorted(reports: &[ThroughputReport]) -> Result<Vec<ThroughputReport>> {
    if reports.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut rows = reports.to_vec();
    rows.sort_by_key(|r| (r.side, r.variant));
    Ok(rows)
}

/// Aligned table, one row per report ordered by `(L, variant)`, followed by
/// literature context and the per-temperature total of the default protocol.
pub fn render_report(reports: &[ThroughputReport]) -> Result<String> {
    let rows = sorted(reports)?;
    let mut out = String::new();
    let _ = writeln!(out, "{:>6}  {:<22}  {:>14}  {:>16}", "L", "variant", "spins/us", "ns/MCS");
    for r in &rows {
        let _ = writeln!(
            out,
            "{:>6}  {:<22}  {:>14.1}  {:>16.0}",
            r.side,
            r.variant.name(),
            r.spins_per_us,
            r.ns_per_mcs
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "literature context (not measured here):");
    let _ = writeln!(out, "{:>6}  {:<22}  {:>14.1}", 1024, "FPGA (published)", LITERATURE_FPGA);
    let _ = writeln!(out, "{:>6}  {:<22}  {:>14.1}", 1024, "CPU (published)", LITERATURE_CPU);
    let protocol = Protocol::default();
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "TOTAL per temperature ({} + {} x {} MCS):",
        protocol.warmup, protocol.n_samples, protocol.stride
    );
    for r in &rows {
        let seconds = r.ns_per_mcs * protocol.total_mcs() as f64 * 1e-9;
        let _ = writeln!(out, "{:>6}  {:<22}  {:>12.2} s", r.side, r.variant.name(), seconds);
    }
    Ok(out)
}

pub fn write_report_csv(path: &Path, reports: &[ThroughputReport]) -> Result<()> {
    let rows = sorted(reports)?;
    let wrap = |source| Error::Csv { path: path.into(), source };
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    for r in &rows {
        w.serialize(r).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_report_csv(path: &Path) -> Result<Vec<ThroughputReport>> {
    let wrap = |source| Error::Csv { path: path.into(), source };
    let mut r = csv::Reader::from_path(path).map_err(wrap)?;
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(wrap)
}
