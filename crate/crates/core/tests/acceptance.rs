//! Acceptance criteria 1-11. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::path::Path;
use std::process::{Command, Stdio};
use std::time::Instant;

use rand::rngs::StdRng;
use rand::SeedableRng;
use spinlane::analysis::{exhaustive_oracle, lorentzian_fit, onsager_m, power_law_fit, tc_extrapolate, CRITICAL_TEMPERATURE};
use spinlane::kernel::{sequential_mcs_reference, FIXED_ONE};
use spinlane::models::{epsilon_j1j2, j1j2_boltzmann_table, j1j2_mcs, model_mcs, total_energy_j1j2, NnIsing};
use spinlane::observables::{point_stats, sweep_grid, Sample, SampleSeries, DEFAULT_LANES};
use spinlane::rng::nist::{run_battery, TestOutcome};
use spinlane::rng::{generate_bits, lfsr12_next, GeneratorKind};
use spinlane::{
    run_temperature_point, seed_lanes, BoltzmannTable, Init, ModelParams, Partition, PointStats, Protocol,
    RowBlockSchedule, SpinLattice,
};

type Outcome = (bool, String);

fn within(a: f64, b: f64, se: f64, k: f64) -> bool {
    (a - b).abs() <= k * se
}

fn gibbs_oracle() -> Outcome {
    let protocol = Protocol { warmup: 1000, n_samples: 200_000, stride: 10, init: Init::AllUp };
    let mut ok = true;
    let mut detail = Vec::new();
    for (k, t) in [2.0, 3.0].into_iter().enumerate() {
        let exact = exhaustive_oracle(4, t).unwrap();
        let (_, s) = run_temperature_point(&ModelParams::ising(t), 4, &protocol, DEFAULT_LANES, 100 + k as u64).unwrap();
        let de = s.e_per_spin - exact.e_per_spin;
        let dm = s.m_abs - exact.m_abs;
        ok &= de.abs() <= 3.0 * s.se_e && de.abs() <= 0.01;
        ok &= dm.abs() <= 3.0 * s.se_m_abs && dm.abs() <= 0.01;
        detail.push(format!(
            "T={t}: E/N {:.5} vs {:.5} ({:+.1} se), |m| {:.5} vs {:.5} ({:+.1} se)",
            s.e_per_spin,
            exact.e_per_spin,
            de / s.se_e,
            s.m_abs,
            exact.m_abs,
            dm / s.se_m_abs
        ));
    }
    (ok, detail.join("; "))
}

fn onsager_regression() -> Outcome {
    let protocol = Protocol { warmup: 1000, n_samples: 200, stride: 20, init: Init::AllUp };
    let mut ok = true;
    let mut detail = Vec::new();
    for t in [1.5, 2.0] {
        let (_, s) = run_temperature_point(&ModelParams::ising(t), 128, &protocol, DEFAULT_LANES, 7).unwrap();
        let exact = onsager_m(t).unwrap();
        ok &= (s.m_abs - exact).abs() <= 0.01;
        detail.push(format!("T={t}: |m| {:.4} vs exact {:.4}", s.m_abs, exact));
    }
    (ok, detail.join("; "))
}

fn temperature_grid() -> Vec<f64> {
    (0..=45).map(|k| 2.1 + 0.02 * k as f64).collect()
}

fn finite_size_scaling() -> (Outcome, Outcome) {
    let sizes = [16usize, 32, 64, 128];
    let temps = temperature_grid();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let rows = sweep_grid(&ModelParams::ising(1.0), &sizes, &temps, &Protocol::default(), DEFAULT_LANES, 1, workers).unwrap();
    let mut chi_max = Vec::new();
    let mut t_star = Vec::new();
    let mut peaks = Vec::new();
    for &l in &sizes {
        let points: Vec<(f64, f64)> = rows.iter().filter(|r| r.side == l).map(|r: &PointStats| (r.temperature, r.chi_abs)).collect();
        let fit = lorentzian_fit(&points, 3).unwrap();
        chi_max.push(fit.chi_max);
        t_star.push(fit.t_star);
        peaks.push(format!("L={l} T*={:.4} chi_max={:.2}", fit.t_star, fit.chi_max));
    }
    let scaling = power_law_fit(&sizes, &chi_max).unwrap();
    let tc = tc_extrapolate(&sizes, &t_star).unwrap();
    let c3 = (
        (1.60..=1.90).contains(&scaling.exponent) && scaling.r2 >= 0.98,
        format!("exponent {:.4} +- {:.4}, r2 {:.4} ({})", scaling.exponent, scaling.se_exponent, scaling.r2, peaks.join(", ")),
    );
    let c4 = (
        (2.17..=2.37).contains(&tc.tc),
        format!("Tc {:.4} +- {:.4} (exact {:.4}), b {:.3}", tc.tc, tc.se_tc, CRITICAL_TEMPERATURE, tc.b),
    );
    (c3, c4)
}

fn rng_separation() -> Outcome {
    let combined = run_battery(&generate_bits(GeneratorKind::Combined, 1, 1_000_000).unwrap()).unwrap();
    let bare = run_battery(&generate_bits(GeneratorKind::Lfsr32, 1, 1_000_000).unwrap()).unwrap();
    let combined_ok = combined.iter().all(|o| o.passed);
    let rank = bare.iter().find(|o| o.name == "Rank").unwrap();
    let fmt = |v: &[TestOutcome]| {
        v.iter().map(|o| format!("{} {:.4}", o.name, o.p_value)).collect::<Vec<_>>().join(", ")
    };
    (
        combined_ok && rank.p_value < 0.01,
        format!("combined [{}]; bare rank p = {:.4}", fmt(&combined), rank.p_value),
    )
}

fn lfsr_period() -> Outcome {
    let mut seen = vec![false; 4096];
    let mut s = 1u16;
    let mut period = 0;
    loop {
        seen[s as usize] = true;
        s = lfsr12_next(s).unwrap();
        period += 1;
        if s == 1 || period > 4096 {
            break;
        }
    }
    let distinct = seen.iter().filter(|&&v| v).count();
    (period == 4095 && distinct == 4095, format!("period {period}, {distinct} distinct states"))
}

fn fixed_point_fidelity() -> Outcome {
    let mut worst = 0.0f64;
    for t in [0.5, 1.0, 2.269, 5.0] {
        let table = BoltzmannTable::new(t).unwrap();
        for (k, &entry) in table.entries().iter().enumerate() {
            let eps = 2 * k as i32 - 4;
            let exact = (-2.0 * eps as f64 / t).exp().min(1.0);
            worst = worst.max((entry as f64 / FIXED_ONE - exact).abs());
        }
    }
    (worst <= 1.0 / 4096.0, format!("max |entry/4096 - min(1, exp(-beta dE))| = {worst:.3e}"))
}

fn sequential_stats(side: usize, t: f64, protocol: &Protocol, seed: u64) -> PointStats {
    let mut lat = SpinLattice::new(side, protocol.init, seed).unwrap();
    let mut rng = StdRng::seed_from_u64(seed);
    for _ in 0..protocol.warmup {
        sequential_mcs_reference(&mut lat, &mut rng, t).unwrap();
    }
    let mut samples = Vec::with_capacity(protocol.n_samples);
    for _ in 0..protocol.n_samples {
        for _ in 0..protocol.stride {
            sequential_mcs_reference(&mut lat, &mut rng, t).unwrap();
        }
        samples.push(Sample { m: lat.total_magnetization() as f64, e: -(lat.bond_sum_nn() as f64) });
    }
    let series = SampleSeries {
        samples,
        temperature: t,
        side,
        stride_mcs: protocol.stride,
        warmup_mcs: protocol.warmup,
        n_samples: protocol.n_samples,
        seed,
    };
    point_stats(&series).unwrap()
}

fn kernel_cross_validation() -> Outcome {
    let protocol = Protocol { warmup: 1000, n_samples: 4000, stride: 50, init: Init::AllUp };
    let mut ok = true;
    let mut detail = Vec::new();
    for (k, t) in [2.0, 2.5, 3.0].into_iter().enumerate() {
        let (_, lane) = run_temperature_point(&ModelParams::ising(t), 16, &protocol, DEFAULT_LANES, 11 + k as u64).unwrap();
        let seq = sequential_stats(16, t, &protocol, 21 + k as u64);
        let se_m = lane.se_m_abs.hypot(seq.se_m_abs);
        let se_e = lane.se_e.hypot(seq.se_e);
        ok &= within(lane.m_abs, seq.m_abs, se_m, 3.0) && within(lane.e_per_spin, seq.e_per_spin, se_e, 3.0);
        detail.push(format!(
            "T={t}: |m| {:+.1} se, E/N {:+.1} se",
            (lane.m_abs - seq.m_abs) / se_m,
            (lane.e_per_spin - seq.e_per_spin) / se_e
        ));
    }
    (ok, detail.join("; "))
}

fn sweep_csv(dir: &Path, workers: usize) -> Vec<u8> {
    let out = dir.join(format!("sweep-w{workers}.csv"));
    let status = Command::new(env!("CARGO_BIN_EXE_spinlane"))
        .args(["sweep", "--L", "8,16", "--T-range", "2.0:2.6:0.1", "--warmup", "200", "--samples", "200"])
        .args(["--stride", "5", "--seed", "42", "--workers", &workers.to_string()])
        .arg("--out")
        .arg(&out)
        .stdout(Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
    std::fs::read(out).unwrap()
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<Vec<u8>> = [1, 1, 2, 4].into_iter().map(|w| sweep_csv(dir.path(), w)).collect();
    let same = runs.windows(2).all(|w| w[0] == w[1]);
    (same, format!("workers 1, 1, 2, 4 -> {} identical CSVs of {} bytes", if same { 4 } else { 0 }, runs[0].len()))
}

fn model_extensions() -> Outcome {
    let protocol = Protocol { warmup: 1000, n_samples: 20_000, stride: 20, init: Init::AllUp };
    let mut ok = true;
    let mut detail = Vec::new();
    for (k, t) in [2.0, 2.5, 3.0].into_iter().enumerate() {
        let (_, potts) = run_temperature_point(&ModelParams::potts(2, 2.0, t), 8, &protocol, 32, 31 + k as u64).unwrap();
        let (_, ising) = run_temperature_point(&ModelParams::ising(t), 8, &protocol, 32, 41 + k as u64).unwrap();
        // q=2 Potts at J=2 is Ising shifted by -2 per spin.
        let de = potts.e_per_spin + 2.0 - ising.e_per_spin;
        let dm = potts.m_abs - ising.m_abs;
        let (se_e, se_m) = (potts.se_e.hypot(ising.se_e), potts.se_m_abs.hypot(ising.se_m_abs));
        ok &= de.abs() <= 3.0 * se_e && dm.abs() <= 3.0 * se_m;
        detail.push(format!("potts T={t}: E {:+.1}s |m| {:+.1}s", de / se_e, dm / se_m));
    }

    let mut checked = 0;
    let mut max_err = 0.0f64;
    for seed in 0..50u64 {
        let mut lat = SpinLattice::new(6, Init::Random, seed).unwrap();
        let (j1, j2) = (1.0, -0.05 * seed as f64);
        for i in 0..6 {
            for j in 0..6 {
                let s0 = lat.spin_at(i, j).unwrap();
                let eps = epsilon_j1j2(s0, lat.neighbor_sum_nn(i, j).unwrap(), lat.neighbor_sum_nnn(i, j).unwrap(), j1, j2).unwrap();
                let before = total_energy_j1j2(&lat, j1, j2);
                lat.set_spin(i, j, -s0).unwrap();
                let after = total_energy_j1j2(&lat, j1, j2);
                lat.set_spin(i, j, s0).unwrap();
                max_err = max_err.max((after - before - 2.0 * eps).abs());
                checked += 1;
            }
        }
    }
    ok &= max_err < 1e-9;
    detail.push(format!("J1/J2 dE on {checked} flips, max error {max_err:.1e}"));

    let sched = RowBlockSchedule::new(16, 64, Partition::FourColor).unwrap();
    let mut a = SpinLattice::new(16, Init::Random, 9).unwrap();
    let mut b = a.clone();
    let mut bank_a = seed_lanes(9, 64).unwrap();
    let mut bank_b = bank_a.clone();
    let table = j1j2_boltzmann_table(2.3, 1.0, 0.0).unwrap();
    let nn = NnIsing { table: BoltzmannTable::new(2.3).unwrap() };
    for _ in 0..200 {
        j1j2_mcs(&mut a, &mut bank_a, &table, &sched).unwrap();
        model_mcs(&nn, &mut b, &mut bank_b, &sched).unwrap();
    }
    let same = a == b;
    ok &= same;
    detail.push(format!("J2=0 trajectory identical over 200 MCS: {same}"));
    (ok, detail.join("; "))
}

fn throughput_report() -> Outcome {
    let out = Command::new(env!("CARGO_BIN_EXE_spinlane"))
        .args(["bench", "--L", "1024", "--variant", "both", "--min-duration", "2"])
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    let rate = |name: &str| {
        text.lines()
            .take_while(|l| !l.is_empty())
            .find(|l| l.contains(name))
            .and_then(|l| l.split_whitespace().nth(2))
            .and_then(|v| v.parse::<f64>().ok())
    };
    let (Some(lane), Some(seq)) = (rate("lane-kernel"), rate("sequential-reference")) else {
        return (false, format!("unparseable bench output: {text}"));
    };
    let header = text.lines().next().is_some_and(|h| h.contains("spins/us") && h.contains("ns/MCS"));
    let literature = text.contains("614400");
    (
        out.status.success() && header && literature && lane >= 4.0 * seq,
        format!("L=1024 lane {lane:.1} vs sequential {seq:.1} spins/us ({:.1}x), literature line printed: {literature}", lane / seq),
    )
}

fn main() {
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let mut record = |n: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let (ok, detail) = f();
        println!(
            "{} criterion {n} ({name}): {detail} [{:.1} s]",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        results.push((n, (ok, detail)));
    };
    record(1, "gibbs oracle", &mut gibbs_oracle);
    record(2, "onsager", &mut onsager_regression);
    let mut scaling = None;
    record(3, "critical exponent", &mut || {
        let (c3, c4) = finite_size_scaling();
        scaling = Some(c4);
        c3
    });
    record(4, "tc extrapolation", &mut || scaling.take().unwrap());
    record(5, "rng separation", &mut rng_separation);
    record(6, "lfsr period", &mut lfsr_period);
    record(7, "fixed-point fidelity", &mut fixed_point_fidelity);
    record(8, "kernel cross-validation", &mut kernel_cross_validation);
    record(9, "determinism", &mut determinism);
    record(10, "model extensions", &mut model_extensions);
    record(11, "throughput", &mut throughput_report);
    let failed: Vec<usize> = results.iter().filter(|r| !r.1 .0).map(|r| r.0).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", results.len());
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
