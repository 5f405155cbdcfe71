//! Fixed-power, fixed-time-fraction benchmark.

use crate::channel::EpochChannel;
use crate::error::{Error, Result};
use crate::ratefns::{self, EpochAllocation};
use crate::solution::SchemeSolution;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FptaConfig {
    pub tau0: f64,
    /// Relay output power used in every epoch.
    pub p0: f64,
}

impl FptaConfig {
    pub fn new(tau0: f64, p0: f64) -> Result<Self> {
        if !(tau0 > 0.0 && tau0 < 1.0) {
            return Err(Error::invalid("tau0", format!("must lie in (0, 1), got {tau0}")));
        }
        if !(p0 >= 0.0) || !p0.is_finite() {
            return Err(Error::invalid("p0", format!("must be non-negative, got {p0}")));
        }
        Ok(Self { tau0, p0 })
    }

    /// Spends the average budget `p_bar` exactly: `p0 = 2 p_bar / (1 + tau0)`.
    pub fn from_budget(tau0: f64, p_bar: f64) -> Result<Self> {
        Self::new(tau0, 2.0 * p_bar / (1.0 + tau0))
    }
}

/// `(1 - tau0)/(2M) * sum ln(1 + p0 min(y, a tau0 / (1 - tau0)))`
pub fn benchmark_rate(epochs: &[EpochChannel], config: &FptaConfig) -> Result<f64> {
    if epochs.is_empty() {
        return Err(Error::Empty("epochs"));
    }
    let odds = config.tau0 / (1.0 - config.tau0);
    let mean_log = ratefns::mean(
        epochs
            .iter()
            .map(|ch| (config.p0 * ch.y.min(ch.a * odds)).ln_1p()),
    );
    Ok(0.5 * (1.0 - config.tau0) * mean_log)
}

pub fn run(epochs: &[EpochChannel], config: &FptaConfig) -> Result<SchemeSolution> {
    if epochs.is_empty() {
        return Err(Error::Empty("epochs"));
    }
    let allocations = epochs
        .iter()
        .map(|ch| EpochAllocation::new(config.tau0, config.p0, ch, 1.0))
        .collect::<Result<Vec<_>>>()?;
    SchemeSolution::assemble(epochs, allocations, None, Some(config.tau0))
}
