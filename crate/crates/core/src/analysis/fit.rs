use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default half-width of the fit window, in points on each side of the maximum.
pub const DEFAULT_WINDOW: usize = 3;

const MAX_ITERATIONS: usize = 50;
const REL_TOL: f64 = 1e-10;
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianFit {
    pub chi_max: f64,
    pub t_star: f64,
    pub w: f64,
    pub r2: f64,
    /// Temperature range of the points used.
    pub window: (f64, f64),
    pub n_points: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r2: f64,
    pub se_exponent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcFit {
    pub tc: f64,
    pub b: f64,
    pub r2: f64,
    pub se_tc: f64,
    pub se_b: f64,
}

/// `a / (1 + ((t - t_star) / w)^2)`.
pub fn lorentzian(t: f64, a: f64, t_star: f64, w: f64) -> f64 {
    let x = (t - t_star) / w;
    a / (1.0 + x * x)
}

fn ssr(points: &[(f64, f64)], p: &Vector3<f64>) -> f64 {
    points.iter().map(|&(t, y)| (y - lorentzian(t, p[0], p[1], p[2])).powi(2)).sum()
}

fn r_squared(ys: impl Iterator<Item = f64> + Clone, ssr: f64) -> f64 {
    let n = ys.clone().count() as f64;
    let mean = ys.clone().sum::<f64>() / n;
    let sst: f64 = ys.map(|y| (y - mean).powi(2)).sum();
    if sst == 0.0 {
        return if ssr == 0.0 { 1.0 } else { 0.0 };
    }
    (1.0 - ssr / sst).clamp(0.0, 1.0)
}

/// Indices of the `2 * half_width + 1` points centred on `imax`, shifted
/// inward at the ends of the data.
fn window_range(n: usize, imax: usize, half_width: usize) -> (usize, usize) {
    let len = (2 * half_width + 1).min(n);
    let start = imax.saturating_sub(half_width).min(n - len);
    (start, start + len)
}

fn initial_width(points: &[(f64, f64)], imax: usize) -> f64 {
    let (t0, a) = points[imax];
    let half = a / 2.0;
    let crossing = |k: usize| points[k].1 <= half;
    let dist = |k: usize| (points[k].0 - t0).abs();
    let left = (0..imax).rev().find(|&k| crossing(k)).map(dist);
    let right = (imax + 1..points.len()).find(|&k| crossing(k)).map(dist);
    match (left, right) {
        (Some(l), Some(r)) => (l + r) / 2.0,
        (Some(d), None) | (None, Some(d)) => d,
        (None, None) => {
            let span = points[points.len() - 1].0 - points[0].0;
            span.abs().max(f64::EPSILON) / 2.0
        }
    }
}

fn jacobian(points: &[(f64, f64)], p: &Vector3<f64>) -> Vec<[f64; 3]> {
    points
        .iter()
        .map(|&(t, _)| {
            let mut row = [0.0; 3];
            for (k, slot) in row.iter_mut().enumerate() {
                let h = 1e-7 * p[k].abs().max(1e-3);
                let (mut up, mut dn) = (*p, *p);
                up[k] += h;
                dn[k] -= h;
                *slot = (lorentzian(t, up[0], up[1], up[2]) - lorentzian(t, dn[0], dn[1], dn[2])) / (2.0 * h);
            }
            row
        })
        .collect()
}

/// Least-squares Lorentzian through the points around the discrete maximum.
///
/// Damped Gauss-Newton with a central-difference Jacobian: each step is
/// halved until the residual decreases.
pub fn lorentzian_fit(points: &[(f64, f64)], half_width: usize) -> Result<LorentzianFit> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    if sorted.iter().any(|&(t, y)| !t.is_finite() || !y.is_finite() || y <= 0.0) {
        return Err(Error::Domain("susceptibility values must be positive and finite".into()));
    }
    if sorted.is_empty() {
        return Err(Error::InsufficientData { needed: 5, got: 0 });
    }
    let imax = (0..sorted.len()).max_by(|&a, &b| sorted[a].1.total_cmp(&sorted[b].1)).unwrap_or(0);
    let (lo, hi) = window_range(sorted.len(), imax, half_width);
    let window = &sorted[lo..hi];
    if window.len() < 5 {
        return Err(Error::InsufficientData { needed: 5, got: window.len() });
    }

    let mut p = Vector3::new(sorted[imax].1, sorted[imax].0, initial_width(&sorted, imax));
    let mut cost = ssr(window, &p);
    let scale = window.iter().map(|&(_, y)| y * y).sum::<f64>();
    for iteration in 1..=MAX_ITERATIONS {
        let jac = jacobian(window, &p);
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for (row, &(t, y)) in jac.iter().zip(window) {
            let r = y - lorentzian(t, p[0], p[1], p[2]);
            let g = Vector3::from(*row);
            jtj += g * g.transpose();
            jtr += g * r;
        }
        let Some(step) = jtj.lu().solve(&jtr) else {
            return Err(Error::FitFailure { iterations: iteration, residual: cost });
        };

        let mut factor = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = p + step * factor;
            let c = ssr(window, &trial);
            if c.is_finite() && c < cost {
                accepted = Some((trial, c));
                break;
            }
            factor *= 0.5;
        }
        let Some((next, next_cost)) = accepted else {
            // No descent direction left: the residual is at its floor.
            return Ok(finish(window, p, cost, iteration));
        };
        let converged = cost - next_cost <= REL_TOL * cost.max(REL_TOL * scale)
            || step.norm() * factor <= REL_TOL * p.norm();
        p = next;
        cost = next_cost;
        if converged || cost <= f64::MIN_POSITIVE {
            return Ok(finish(window, p, cost, iteration));
        }
    }
    Err(Error::FitFailure { iterations: MAX_ITERATIONS, residual: cost })
}

fn finish(window: &[(f64, f64)], p: Vector3<f64>, cost: f64, iterations: usize) -> LorentzianFit {
    LorentzianFit {
        chi_max: p[0],
        t_star: p[1],
        w: p[2].abs(),
        r2: r_squared(window.iter().map(|&(_, y)| y), cost),
        window: (window[0].0, window[window.len() - 1].0),
        n_points: window.len(),
        iterations,
    }
}

struct Ols {
    slope: f64,
    intercept: f64,
    r2: f64,
    se_slope: f64,
    se_intercept: f64,
}

fn ols(xs: &[f64], ys: &[f64]) -> Result<Ols> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= f64::EPSILON * xs.iter().map(|x| x * x).sum::<f64>() {
        return Err(Error::Domain("degenerate design: all sizes are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let sigma2 = if xs.len() > 2 { ssr / (n - 2.0) } else { 0.0 };
    Ok(Ols {
        slope,
        intercept,
        r2: r_squared(ys.iter().copied(), ssr),
        se_slope: (sigma2 / sxx).sqrt(),
        se_intercept: (sigma2 * (1.0 / n + mx * mx / sxx)).sqrt(),
    })
}

fn check_sizes(sizes: &[usize], values: &[f64]) -> Result<()> {
    if sizes.len() != values.len() {
        return Err(Error::InvalidParameter(format!(
            "{} sizes but {} values",
            sizes.len(),
            values.len()
        )));
    }
    if sizes.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: sizes.len() });
    }
    if sizes.contains(&0) {
        return Err(Error::Domain("lattice sizes must be positive".into()));
    }
    Ok(())
}

/// Slope of `ln chi_max` against `ln L`.
pub fn power_law_fit(sizes: &[usize], chi_max: &[f64]) -> Result<ScalingFit> {
    check_sizes(sizes, chi_max)?;
    if chi_max.iter().any(|&c| !(c > 0.0) || !c.is_finite()) {
        return Err(Error::Domain("peak heights must be positive".into()));
    }
    let xs: Vec<f64> = sizes.iter().map(|&l| (l as f64).ln()).collect();
    let ys: Vec<f64> = chi_max.iter().map(|c| c.ln()).collect();
    let fit = ols(&xs, &ys)?;
    Ok(ScalingFit { exponent: fit.slope, intercept: fit.intercept, r2: fit.r2, se_exponent: fit.se_slope })
}

/// `T*(L) = Tc + b / L` by least squares.
pub fn tc_extrapolate(sizes: &[usize], t_star: &[f64]) -> Result<TcFit> {
    check_sizes(sizes, t_star)?;
    if t_star.iter().any(|t| !t.is_finite()) {
        return Err(Error::Domain("peak temperatures must be finite".into()));
    }
    let xs: Vec<f64> = sizes.iter().map(|&l| 1.0 / l as f64).collect();
    let fit = ols(&xs, t_star)?;
    Ok(TcFit { tc: fit.intercept, b: fit.slope, r2: fit.r2, se_tc: fit.se_intercept, se_b: fit.se_slope })
}
