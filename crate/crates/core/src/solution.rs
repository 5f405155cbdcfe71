use crate::channel::EpochChannel;
use crate::error::Result;
use crate::ratefns::{self, epoch_rate, EpochAllocation, EpochRate};

/// Outcome of running one allocation scheme over a set of epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSolution {
    /// Fitted multiplier on the average-power constraint; `None` for schemes
    /// without one.
    pub lambda: Option<f64>,
    /// Fixed time fraction, for the schemes that use one.
    pub tau0: Option<f64>,
    pub allocations: Vec<EpochAllocation>,
    pub rates: Vec<EpochRate>,
    /// Mean of `min(c1, c2)` over epochs, nats per channel use.
    pub avg_rate: f64,
    /// Mean of `p (1 + tau) / 2` over epochs, watts.
    pub avg_power: f64,
}

impl SchemeSolution {
    pub(crate) fn assemble(
        epochs: &[EpochChannel],
        allocations: Vec<EpochAllocation>,
        lambda: Option<f64>,
        tau0: Option<f64>,
    ) -> Result<Self> {
        let rates: Vec<EpochRate> = epochs
            .iter()
            .zip(&allocations)
            .map(|(ch, alloc)| epoch_rate(alloc, ch))
            .collect();
        let avg_rate = ratefns::average_rate(&rates)?;
        let avg_power = ratefns::mean(allocations.iter().map(|a| a.e));
        Ok(Self {
            lambda,
            tau0,
            allocations,
            rates,
            avg_rate,
            avg_power,
        })
    }

    pub fn avg_rate_bits(&self) -> f64 {
        self.avg_rate / std::f64::consts::LN_2
    }
}
