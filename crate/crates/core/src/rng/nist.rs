//! Five tests from NIST SP 800-22: frequency (monobit), block frequency,
//! runs, cumulative sums and binary matrix rank.
//!
//! Each test returns a p-value in `[0, 1]`; a stream passes at
//! [`SIGNIFICANCE`] when `p >= 0.01`.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use super::stream::BitStream;
use crate::error::{Error, Result};

pub const SIGNIFICANCE: f64 = 0.01;

/// Matrix side used by the rank test.
pub const RANK_DIM: usize = 32;
/// Minimum matrix count for the rank test.
pub const RANK_MIN_MATRICES: usize = 38;

fn require(bits: &BitStream, needed: usize) -> Result<()> {
    if bits.len() < needed {
        return Err(Error::InsufficientData { needed, got: bits.len() });
    }
    Ok(())
}

fn clamp01(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

pub fn monobit_test(bits: &BitStream) -> Result<f64> {
    require(bits, 100)?;
    let n = bits.len() as f64;
    let s: i64 = bits.iter().map(|b| if b { 1i64 } else { -1 }).sum();
    Ok(clamp01(erfc(s.unsigned_abs() as f64 / (2.0 * n).sqrt())))
}

pub fn block_frequency_test(bits: &BitStream, block_len: usize) -> Result<f64> {
    require(bits, 100)?;
    if block_len == 0 || block_len > bits.len() {
        return Err(Error::InvalidParameter(format!(
            "block length {block_len} does not fit a {}-bit stream",
            bits.len()
        )));
    }
    let n_blocks = bits.len() / block_len;
    let chi2: f64 = (0..n_blocks)
        .map(|b| {
            let ones = bits.range(b * block_len, (b + 1) * block_len).filter(|&x| x).count();
            let pi = ones as f64 / block_len as f64;
            (pi - 0.5) * (pi - 0.5)
        })
        .sum::<f64>()
        * 4.0
        * block_len as f64;
    if chi2 == 0.0 {
        return Ok(1.0);
    }
    Ok(clamp01(gamma_ur(n_blocks as f64 / 2.0, chi2 / 2.0)))
}

pub fn runs_test(bits: &BitStream) -> Result<f64> {
    require(bits, 100)?;
    let n = bits.len() as f64;
    let pi = bits.count_ones() as f64 / n;
    if (pi - 0.5).abs() >= 2.0 / n.sqrt() {
        // frequency prerequisite failed
        return Ok(0.0);
    }
    let transitions = bits.iter().zip(bits.iter().skip(1)).filter(|(a, b)| a != b).count();
    let v_obs = 1.0 + transitions as f64;
    let num = (v_obs - 2.0 * n * pi * (1.0 - pi)).abs();
    let den = 2.0 * (2.0 * n).sqrt() * pi * (1.0 - pi);
    Ok(clamp01(erfc(num / den)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CusumMode {
    Forward,
    Reverse,
}

pub fn cusum_test(bits: &BitStream) -> Result<f64> {
    cusum_test_mode(bits, CusumMode::Forward)
}

pub fn cusum_test_mode(bits: &BitStream, mode: CusumMode) -> Result<f64> {
    require(bits, 100)?;
    let n = bits.len();
    let mut s = 0i64;
    let mut z = 0i64;
    let mut walk = |b: bool| {
        s += if b { 1 } else { -1 };
        z = z.max(s.abs());
    };
    match mode {
        CusumMode::Forward => bits.iter().for_each(&mut walk),
        CusumMode::Reverse => (0..n).rev().for_each(|i| walk(bits.get(i))),
    }
    let z = z as f64;
    let nf = n as f64;
    let sqrt_n = nf.sqrt();
    let phi = Normal::standard();
    let cdf = |x: f64| phi.cdf(x);

    let mut sum1 = 0.0;
    let k_lo = ((-nf / z + 1.0) / 4.0).trunc() as i64;
    let k_hi = ((nf / z - 1.0) / 4.0).trunc() as i64;
    for k in k_lo..=k_hi {
        let k = k as f64;
        sum1 += cdf((4.0 * k + 1.0) * z / sqrt_n) - cdf((4.0 * k - 1.0) * z / sqrt_n);
    }
    let mut sum2 = 0.0;
    let k_lo = ((-nf / z - 3.0) / 4.0).trunc() as i64;
    for k in k_lo..=k_hi {
        let k = k as f64;
        sum2 += cdf((4.0 * k + 3.0) * z / sqrt_n) - cdf((4.0 * k + 1.0) * z / sqrt_n);
    }
    Ok(clamp01(1.0 - sum1 + sum2))
}

/// Rank of a 32x32 matrix over GF(2), one `u32` per row.
pub fn gf2_rank(rows: &mut [u32; RANK_DIM]) -> usize {
    let mut rank = 0;
    for col in (0..32).rev() {
        let bit = 1u32 << col;
        let Some(pivot) = (rank..RANK_DIM).find(|&r| rows[r] & bit != 0) else {
            continue;
        };
        rows.swap(rank, pivot);
        let p = rows[rank];
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && *row & bit != 0 {
                *row ^= p;
            }
        }
        rank += 1;
    }
    rank
}

/// Probability that a uniformly random `m x q` binary matrix has rank `r`.
pub fn rank_probability(r: usize, m: usize, q: usize) -> f64 {
    let exponent = (r * (q + m - r)) as f64 - (m * q) as f64;
    let mut prod = 1.0;
    for i in 0..r {
        let i = i as f64;
        prod *= (1.0 - 2f64.powf(i - q as f64)) * (1.0 - 2f64.powf(i - m as f64))
            / (1.0 - 2f64.powf(i - r as f64));
    }
    2f64.powf(exponent) * prod
}

pub fn rank_test(bits: &BitStream) -> Result<f64> {
    let per_matrix = RANK_DIM * RANK_DIM;
    require(bits, RANK_MIN_MATRICES * per_matrix)?;
    let n_matrices = bits.len() / per_matrix;
    let (mut full, mut minus_one) = (0usize, 0usize);
    for m in 0..n_matrices {
        let mut rows = [0u32; RANK_DIM];
        for (r, row) in rows.iter_mut().enumerate() {
            let base = m * per_matrix + r * RANK_DIM;
            *row = bits.range(base, base + RANK_DIM).fold(0u32, |acc, b| (acc << 1) | b as u32);
        }
        match gf2_rank(&mut rows) {
            32 => full += 1,
            31 => minus_one += 1,
            _ => {}
        }
    }
    let rest = n_matrices - full - minus_one;
    let p32 = rank_probability(32, 32, 32);
    let p31 = rank_probability(31, 32, 32);
    let p_rest = 1.0 - p32 - p31;
    let nf = n_matrices as f64;
    let term = |observed: usize, p: f64| {
        let e = nf * p;
        (observed as f64 - e).powi(2) / e
    };
    let chi2 = term(full, p32) + term(minus_one, p31) + term(rest, p_rest);
    Ok(clamp01((-chi2 / 2.0).exp()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestOutcome {
    pub name: &'static str,
    pub p_value: f64,
    pub passed: bool,
}

impl TestOutcome {
    fn new(name: &'static str, p_value: f64) -> Self {
        TestOutcome { name, p_value, passed: p_value >= SIGNIFICANCE }
    }
}

/// Block length used by the battery's block-frequency test.
pub const BATTERY_BLOCK_LEN: usize = 128;

/// Runs all five tests with the suite's default parameters.
pub fn run_battery(bits: &BitStream) -> Result<Vec<TestOutcome>> {
    Ok(vec![
        TestOutcome::new("Frequency", monobit_test(bits)?),
        TestOutcome::new("BlockFrequency", block_frequency_test(bits, BATTERY_BLOCK_LEN)?),
        TestOutcome::new("CumulativeSums", cusum_test(bits)?),
        TestOutcome::new("Runs", runs_test(bits)?),
        TestOutcome::new("Rank", rank_test(bits)?),
    ])
}

/// Text table in the style of the reference suite's final report.
pub fn render_battery(outcomes: &[TestOutcome]) -> String {
    let mut out = format!("{:<16} {:>10}  {}\n", "TEST", "P-VALUE", "RESULT");
    for o in outcomes {
        out.push_str(&format!(
            "{:<16} {:>10.6}  {}\n",
            o.name,
            o.p_value,
            if o.passed { "PASS" } else { "FAIL" }
        ));
    }
    out
}
