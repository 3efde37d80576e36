//! Critical-behaviour analysis: exact reference values, peak fits and
//! finite-size scaling.

mod fit;
mod onsager;
mod oracle;

pub use fit::{lorentzian, lorentzian_fit, power_law_fit, tc_extrapolate, LorentzianFit, ScalingFit, TcFit, DEFAULT_WINDOW};
pub use onsager::{onsager_m, CRITICAL_TEMPERATURE};
pub use oracle::{exhaustive_oracle, OracleResult};
