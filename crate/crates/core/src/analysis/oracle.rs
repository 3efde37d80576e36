use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::check_temperature;

/// Exact Gibbs averages of the nearest-neighbour model (`J = 1`) on a small torus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub side: usize,
    pub temperature: f64,
    pub e_per_spin: f64,
    pub m_abs: f64,
    pub m_signed: f64,
    /// `<M^2> / (T N)`.
    pub chi: f64,
    /// `(<M^2> - <|M|>^2) / (T N)`.
    pub chi_abs: f64,
    /// Specific heat per spin, `(<E^2> - <E>^2) / (T^2 N)`.
    pub heat_capacity: f64,
    pub log_z: f64,
    /// `(E, number of configurations)`, ascending in `E`.
    pub energy_histogram: Vec<(i64, u64)>,
}

/// Total energy and magnetisation of configuration `bits` (bit `i * L + j` set
/// means spin up), summing each site's right and down bonds.
fn energy_and_m(bits: u32, side: usize) -> (i64, i64) {
    let spin = |i: usize, j: usize| if bits >> (i * side + j) & 1 == 1 { 1i64 } else { -1 };
    let mut e = 0;
    let mut m = 0;
    for i in 0..side {
        for j in 0..side {
            let s = spin(i, j);
            m += s;
            e -= s * spin(i, (j + 1) % side);
            e -= s * spin((i + 1) % side, j);
        }
    }
    (e, m)
}

/// Enumerates all `2^(L^2)` states; `L` must be 2 or 4.
pub fn exhaustive_oracle(side: usize, temperature: f64) -> Result<OracleResult> {
    if side != 2 && side != 4 {
        return Err(Error::TooLarge(side));
    }
    check_temperature(temperature)?;
    let n = side * side;
    let mut counts = std::collections::BTreeMap::<(i64, i64), u64>::new();
    for bits in 0..(1u32 << n) {
        *counts.entry(energy_and_m(bits, side)).or_default() += 1;
    }
    let e_min = counts.keys().map(|k| k.0).min().unwrap_or(0);
    // Per energy level: degeneracy and integer moments of M.
    let mut levels = std::collections::BTreeMap::<i64, [i64; 4]>::new();
    for (&(e, m), &c) in &counts {
        let c = c as i64;
        let level = levels.entry(e).or_default();
        level[0] += c;
        level[1] += c * m;
        level[2] += c * m.abs();
        level[3] += c * m * m;
    }
    let (mut z, mut se, mut se2, mut sm, mut sabs, mut sm2) = (0.0f64, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (&e, level) in &levels {
        let w = (-((e - e_min) as f64) / temperature).exp();
        let e = e as f64;
        let c = level[0] as f64;
        z += w * c;
        se += w * c * e;
        se2 += w * c * e * e;
        sm += w * level[1] as f64;
        sabs += w * level[2] as f64;
        sm2 += w * level[3] as f64;
    }
    let (e_mean, e2, m_abs, m2) = (se / z, se2 / z, sabs / z, sm2 / z);
    let nf = n as f64;
    let histogram: Vec<(i64, u64)> = levels.iter().map(|(&e, l)| (e, l[0] as u64)).collect();
    Ok(OracleResult {
        side,
        temperature,
        e_per_spin: e_mean / nf,
        m_abs: m_abs / nf,
        m_signed: sm / z / nf,
        chi: m2 / (temperature * nf),
        chi_abs: (m2 - m_abs * m_abs) / (temperature * nf),
        heat_capacity: (e2 - e_mean * e_mean) / (temperature * temperature * nf),
        log_z: z.ln() - e_min as f64 / temperature,
        energy_histogram: histogram,
    })
}
