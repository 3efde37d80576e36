//! Measurement protocol and estimators: thermalise, sample every `stride`
//! MCS, then reduce the series to magnetisation, energy and susceptibility.
//!
//! Standard errors treat samples as independent.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{build_boltzmann_table, run_mcs, row_block_schedule, Partition, RowBlockSchedule};
use crate::lattice::{Init, ModelKind, ModelParams, SpinLattice};
use crate::models::{
    j1j2_boltzmann_table, j1j2_mcs, potts_mcs, total_energy_j1j2, PottsInit, PottsLattice, PottsTable,
};
use crate::rng::seed_lanes;

/// Lane count of the emulated machine.
pub const DEFAULT_LANES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Protocol {
    pub warmup: usize,
    pub n_samples: usize,
    pub stride: usize,
    pub init: Init,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol { warmup: 1000, n_samples: 1000, stride: 100, init: Init::AllUp }
    }
}

impl Protocol {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("warmup", self.warmup), ("n_samples", self.n_samples), ("stride", self.stride)] {
            if v == 0 {
                return Err(Error::InvalidProtocol(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }

    pub fn total_mcs(&self) -> usize {
        self.warmup + self.n_samples * self.stride
    }
}

/// One measurement: total order parameter `M` and total energy `E`.
///
/// For the Potts model `M = (q n_1 - N) / (q - 1)` with `n_1` the number of
/// sites in state 1, which is the Ising magnetisation when `q = 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub m: f64,
    pub e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSeries {
    pub samples: Vec<Sample>,
    pub temperature: f64,
    pub side: usize,
    pub stride_mcs: usize,
    pub warmup_mcs: usize,
    pub n_samples: usize,
    pub seed: u64,
}

impl SampleSeries {
    pub fn n_sites(&self) -> usize {
        self.side * self.side
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointStats {
    pub side: usize,
    pub temperature: f64,
    pub m_signed: f64,
    pub m_abs: f64,
    pub chi: f64,
    pub chi_abs: f64,
    pub e_per_spin: f64,
    pub se_m_signed: f64,
    pub se_m_abs: f64,
    pub se_chi: f64,
    pub se_chi_abs: f64,
    pub se_e: f64,
    pub n_samples: usize,
}

struct Moments {
    mean: f64,
    var: f64,
    fourth: f64,
}

fn moments(xs: impl Iterator<Item = f64> + Clone, n: usize) -> Moments {
    let nf = n as f64;
    let mean = xs.clone().sum::<f64>() / nf;
    let (mut var, mut fourth) = (0.0, 0.0);
    for x in xs {
        let d = (x - mean) * (x - mean);
        var += d;
        fourth += d * d;
    }
    Moments { mean, var: var / nf, fourth: fourth / nf }
}

fn se_of_mean(m: &Moments, n: usize) -> f64 {
    (m.var / (n as f64 - 1.0)).sqrt()
}

fn se_of_var(m: &Moments, n: usize) -> f64 {
    ((m.fourth - m.var * m.var).max(0.0) / n as f64).sqrt()
}

fn check_series(series: &SampleSeries) -> Result<()> {
    if series.samples.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: series.samples.len() });
    }
    Ok(())
}

/// `chi = (<M^2> - <M>^2) / (T N)` and `chi_abs` with `<|M|>` in place of `<M>`.
pub fn susceptibility(series: &SampleSeries) -> Result<(f64, f64)> {
    check_series(series)?;
    let n = series.samples.len();
    let scale = series.temperature * series.n_sites() as f64;
    let signed = moments(series.samples.iter().map(|s| s.m), n);
    let abs = moments(series.samples.iter().map(|s| s.m.abs()), n);
    Ok((signed.var / scale, abs.var / scale))
}

pub fn point_stats(series: &SampleSeries) -> Result<PointStats> {
    check_series(series)?;
    let n = series.samples.len();
    let sites = series.n_sites() as f64;
    let scale = series.temperature * sites;
    let signed = moments(series.samples.iter().map(|s| s.m), n);
    let abs = moments(series.samples.iter().map(|s| s.m.abs()), n);
    let energy = moments(series.samples.iter().map(|s| s.e), n);
    Ok(PointStats {
        side: series.side,
        temperature: series.temperature,
        m_signed: signed.mean / sites,
        m_abs: abs.mean / sites,
        chi: signed.var / scale,
        chi_abs: abs.var / scale,
        e_per_spin: energy.mean / sites,
        se_m_signed: se_of_mean(&signed, n) / sites,
        se_m_abs: se_of_mean(&abs, n) / sites,
        se_chi: se_of_var(&signed, n) / scale,
        se_chi_abs: se_of_var(&abs, n) / scale,
        se_e: se_of_mean(&energy, n) / sites,
        n_samples: n,
    })
}

/// Drives one lattice through the protocol; `advance(k)` runs `k` MCS and
/// `measure()` reads `(M, E)`.
fn collect(
    protocol: &Protocol,
    mut advance: impl FnMut(usize) -> Result<()>,
    mut measure: impl FnMut() -> Sample,
) -> Result<Vec<Sample>> {
    advance(protocol.warmup)?;
    let mut samples = Vec::with_capacity(protocol.n_samples);
    for _ in 0..protocol.n_samples {
        advance(protocol.stride)?;
        samples.push(measure());
    }
    Ok(samples)
}

/// Final lattice of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum FinalState {
    Spins(SpinLattice),
    Potts(PottsLattice),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub series: SampleSeries,
    pub final_state: FinalState,
}

/// Raw samples for one temperature, dispatching on `params.model`.
pub fn sample_series(
    params: &ModelParams,
    side: usize,
    protocol: &Protocol,
    lane_budget: usize,
    seed: u64,
) -> Result<SampleSeries> {
    simulate(params, side, protocol, lane_budget, seed).map(|sim| sim.series)
}

/// Runs the protocol and keeps the final lattice alongside the samples.
pub fn simulate(
    params: &ModelParams,
    side: usize,
    protocol: &Protocol,
    lane_budget: usize,
    seed: u64,
) -> Result<Simulation> {
    params.validate()?;
    protocol.validate()?;
    let mut bank = seed_lanes(seed, lane_budget)?;
    let (samples, final_state) = match params.model {
        ModelKind::Ising => {
            let mut lat = SpinLattice::new(side, protocol.init, seed)?;
            let schedule = row_block_schedule(side, lane_budget)?;
            let table = build_boltzmann_table(params)?;
            let j = params.j;
            let cell = std::cell::RefCell::new(&mut lat);
            let samples = collect(
                protocol,
                |k| run_mcs(&mut cell.borrow_mut(), &mut bank, &table, &schedule, k).map(drop),
                || {
                    let lat = cell.borrow();
                    Sample { m: lat.total_magnetization() as f64, e: -j * lat.bond_sum_nn() as f64 }
                },
            )?;
            (samples, FinalState::Spins(lat))
        }
        ModelKind::J1j2 => {
            let mut lat = SpinLattice::new(side, protocol.init, seed)?;
            let schedule = RowBlockSchedule::new(side, lane_budget, Partition::FourColor)?;
            let table = j1j2_boltzmann_table(params.temperature, params.j1, params.j2)?;
            let (j1, j2) = (params.j1, params.j2);
            let cell = std::cell::RefCell::new(&mut lat);
            let samples = collect(
                protocol,
                |k| {
                    let mut lat = cell.borrow_mut();
                    for _ in 0..k {
                        j1j2_mcs(&mut lat, &mut bank, &table, &schedule)?;
                    }
                    Ok(())
                },
                || {
                    let lat = cell.borrow();
                    Sample { m: lat.total_magnetization() as f64, e: total_energy_j1j2(&lat, j1, j2) }
                },
            )?;
            (samples, FinalState::Spins(lat))
        }
        ModelKind::Potts => {
            let init = match protocol.init {
                Init::AllUp => PottsInit::Uniform(1),
                Init::Random => PottsInit::Random,
            };
            let mut lat = PottsLattice::new(side, params.q, init, seed)?;
            let schedule = row_block_schedule(side, lane_budget)?;
            let table = PottsTable::new(params.temperature, params.j)?;
            let (j, q) = (params.j, params.q as f64);
            let cell = std::cell::RefCell::new(&mut lat);
            let samples = collect(
                protocol,
                |k| {
                    let mut lat = cell.borrow_mut();
                    for _ in 0..k {
                        potts_mcs(&mut lat, &mut bank, &table, &schedule)?;
                    }
                    Ok(())
                },
                || {
                    let lat = cell.borrow();
                    let n = lat.n_sites() as f64;
                    let m = (q * lat.count_state(1) as f64 - n) / (q - 1.0);
                    Sample { m, e: lat.energy(j) }
                },
            )?;
            (samples, FinalState::Potts(lat))
        }
    };
    let series = SampleSeries {
        samples,
        temperature: params.temperature,
        side,
        stride_mcs: protocol.stride,
        warmup_mcs: protocol.warmup,
        n_samples: protocol.n_samples,
        seed,
    };
    Ok(Simulation { series, final_state })
}

pub fn run_temperature_point(
    params: &ModelParams,
    side: usize,
    protocol: &Protocol,
    lane_budget: usize,
    seed: u64,
) -> Result<(SampleSeries, PointStats)> {
    let series = sample_series(params, side, protocol, lane_budget, seed)?;
    let stats = point_stats(&series)?;
    Ok((series, stats))
}

/// One point per temperature, seeded `seed + index`. Results come back in
/// `temperatures` order regardless of `workers`.
pub fn temperature_sweep(
    params: &ModelParams,
    side: usize,
    temperatures: &[f64],
    protocol: &Protocol,
    lane_budget: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<PointStats>> {
    sweep_grid(params, &[side], temperatures, protocol, lane_budget, seed, workers)
}

/// Every `(L, T)` pair, size-major. The point at temperature index `k` is
/// seeded `seed + k` for every size. Output order is independent of `workers`.
pub fn sweep_grid(
    params: &ModelParams,
    sizes: &[usize],
    temperatures: &[f64],
    protocol: &Protocol,
    lane_budget: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<PointStats>> {
    if temperatures.is_empty() || sizes.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one size and one temperature".into()));
    }
    for &t in temperatures {
        params.with_temperature(t).validate()?;
    }
    protocol.validate()?;
    let jobs: Vec<(usize, usize, f64)> = sizes
        .iter()
        .flat_map(|&l| temperatures.iter().enumerate().map(move |(k, &t)| (l, k, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Environment(e.to_string()))?;
    pool.install(|| {
        jobs.par_iter()
            .map(|&(l, k, t)| {
                run_temperature_point(&params.with_temperature(t), l, protocol, lane_budget, seed + k as u64)
                    .map(|(_, stats)| stats)
            })
            .collect()
    })
}

/// One line of the observables CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    #[serde(rename = "L")]
    pub side: usize,
    #[serde(rename = "T")]
    pub temperature: f64,
    pub m_signed: f64,
    pub m_abs: f64,
    pub chi: f64,
    pub chi_abs: f64,
    pub e_per_spin: f64,
    pub se_m: f64,
    pub se_chi: f64,
    pub n_samples: usize,
    pub warmup: usize,
    pub stride: usize,
    pub seed: u64,
}

pub const CSV_HEADER: &str = "L,T,m_signed,m_abs,chi,chi_abs,e_per_spin,se_m,se_chi,n_samples,warmup,stride,seed";

impl CsvRow {
    /// `se_m` is the error of `m_abs` and `se_chi` that of `chi_abs`.
    pub fn new(stats: &PointStats, protocol: &Protocol, seed: u64) -> Self {
        CsvRow {
            side: stats.side,
            temperature: stats.temperature,
            m_signed: stats.m_signed,
            m_abs: stats.m_abs,
            chi: stats.chi,
            chi_abs: stats.chi_abs,
            e_per_spin: stats.e_per_spin,
            se_m: stats.se_m_abs,
            se_chi: stats.se_chi_abs,
            n_samples: stats.n_samples,
            warmup: protocol.warmup,
            stride: protocol.stride,
            seed,
        }
    }
}

pub fn write_csv_to<W: Write>(out: W, rows: &[CsvRow]) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(path: &Path, rows: &[CsvRow]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(file, rows).map_err(|source| Error::Csv { path: path.into(), source })
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let wrap = |source| Error::Csv { path: path.into(), source };
    let mut r = csv::Reader::from_path(path).map_err(wrap)?;
    let header: Vec<String> = r.headers().map_err(wrap)?.iter().map(str::to_owned).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Configuration(format!(
            "{}: unexpected CSV header `{}`",
            path.display(),
            header.join(",")
        )));
    }
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(wrap)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(ms: &[f64], t: f64, side: usize) -> SampleSeries {
        SampleSeries {
            samples: ms.iter().map(|&m| Sample { m, e: 0.0 }).collect(),
            temperature: t,
            side,
            stride_mcs: 1,
            warmup_mcs: 1,
            n_samples: ms.len(),
            seed: 0,
        }
    }

    #[test]
    fn constant_series_has_zero_susceptibility() {
        let s = series(&[10.0; 50], 2.0, 4);
        assert_eq!(susceptibility(&s).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn symmetric_extremes() {
        let n = 16.0;
        let s = series(&[n, -n, n, -n], 2.0, 4);
        let (chi, chi_abs) = susceptibility(&s).unwrap();
        assert!((chi - n / 2.0).abs() < 1e-12);
        assert_eq!(chi_abs, 0.0);
        let stats = point_stats(&s).unwrap();
        assert_eq!(stats.m_signed, 0.0);
        assert_eq!(stats.m_abs, 1.0);
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(susceptibility(&series(&[1.0], 1.0, 4)), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn protocol_validation() {
        assert!(Protocol::default().validate().is_ok());
        let bad = Protocol { n_samples: 0, ..Protocol::default() };
        assert!(matches!(bad.validate(), Err(Error::InvalidProtocol(_))));
        assert!(run_temperature_point(&ModelParams::ising(2.0), 8, &bad, 16, 1).is_err());
        assert_eq!(Protocol::default().total_mcs(), 101_000);
    }

    #[test]
    fn empty_sweep_rejected() {
        let p = Protocol { warmup: 1, n_samples: 2, stride: 1, init: Init::AllUp };
        assert!(temperature_sweep(&ModelParams::ising(1.0), 8, &[], &p, 16, 0, 1).is_err());
        let one = temperature_sweep(&ModelParams::ising(1.0), 8, &[2.0], &p, 16, 0, 1).unwrap();
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let p = Protocol { warmup: 10, n_samples: 20, stride: 2, init: Init::AllUp };
        let stats = temperature_sweep(&ModelParams::ising(1.0), 8, &[2.0, 2.5], &p, 16, 3, 1).unwrap();
        let rows: Vec<CsvRow> = stats.iter().enumerate().map(|(k, s)| CsvRow::new(s, &p, 3 + k as u64)).collect();
        write_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(read_csv(&path).unwrap(), rows);
    }
}
