use crate::error::{Error, Result};

/// `2 / ln(1 + sqrt 2)`.
pub const CRITICAL_TEMPERATURE: f64 = 2.269_185_314_213_022;

/// Spontaneous magnetisation per spin of the infinite square lattice (`J = 1`).
pub fn onsager_m(temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::InvalidTemperature(temperature));
    }
    if temperature >= CRITICAL_TEMPERATURE {
        return Ok(0.0);
    }
    let s = (2.0 / temperature).sinh();
    Ok((1.0 - s.powi(-4)).max(0.0).powf(0.125))
}
