//! Block-fading channel model for the source-relay and relay-destination links.
//!
//! Gains are normalized by the noise power: `x = x'/N0`, `y = y'/N0`. The
//! energy-harvesting cascade (relay -> source power transfer, then source ->
//! relay information) sees the effective coefficient `a = 2 N0 x^2`.
//!
//! Note on the density of `a`: the change of variables from `x` gives
//! `f_A(a) = f_X(sqrt(a / (2 N0))) / (2 sqrt(2 N0 a))`. The argument of `f_X`
//! is `sqrt(a / (2 N0))`, not `sqrt(a) / (2 N0)`; the sampling-vs-density
//! tests pin this down.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Deterministic distance-based pathloss used to derive mean link gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pathloss {
    pub distance_m: f64,
    pub exponent: f64,
    pub ref_loss_db: f64,
}

impl Pathloss {
    /// `10^(-ref_loss_db / 10) * distance^(-exponent)`
    pub fn mean_gain(&self) -> f64 {
        10f64.powf(-self.ref_loss_db / 10.0) * self.distance_m.powf(-self.exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// AWGN power `N0` in watts.
    pub noise_power: f64,
    /// `E[x']`, mean source-relay power gain (not normalized).
    pub mean_gain_sr: f64,
    /// `E[y']`, mean relay-destination power gain (not normalized).
    pub mean_gain_rd: f64,
    /// Set when the means came from [`ChannelParams::from_pathloss`].
    pub pathloss: Option<Pathloss>,
    /// Epoch duration `T` in seconds.
    pub block_duration: f64,
}

impl ChannelParams {
    pub fn new(noise_power: f64, mean_gain_sr: f64, mean_gain_rd: f64) -> Result<Self> {
        let params = Self {
            noise_power,
            mean_gain_sr,
            mean_gain_rd,
            pathloss: None,
            block_duration: 1.0,
        };
        params.validate()?;
        Ok(params)
    }

    /// Both links share the same geometry (all nodes `distance_m` apart).
    pub fn from_pathloss(
        distance_m: f64,
        pathloss_exponent: f64,
        ref_pathloss_db: f64,
        noise_power: f64,
    ) -> Result<Self> {
        if !(distance_m > 0.0) || !distance_m.is_finite() {
            return Err(Error::invalid("distance_m", format!("must be positive, got {distance_m}")));
        }
        if !(pathloss_exponent > 0.0) || !pathloss_exponent.is_finite() {
            return Err(Error::invalid(
                "pathloss_exponent",
                format!("must be positive, got {pathloss_exponent}"),
            ));
        }
        if !ref_pathloss_db.is_finite() {
            return Err(Error::invalid("ref_pathloss_db", "must be finite"));
        }
        let pathloss = Pathloss {
            distance_m,
            exponent: pathloss_exponent,
            ref_loss_db: ref_pathloss_db,
        };
        let mean = pathloss.mean_gain();
        let mut params = Self::new(noise_power, mean, mean)?;
        params.pathloss = Some(pathloss);
        Ok(params)
    }

    pub fn with_block_duration(mut self, seconds: f64) -> Result<Self> {
        self.block_duration = seconds;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_power > 0.0) || !self.noise_power.is_finite() {
            return Err(Error::invalid("noise_power", format!("must be positive, got {}", self.noise_power)));
        }
        if !(self.mean_gain_sr > 0.0) || !self.mean_gain_sr.is_finite() {
            return Err(Error::invalid("mean_gain_sr", format!("must be positive, got {}", self.mean_gain_sr)));
        }
        if !(self.mean_gain_rd > 0.0) || !self.mean_gain_rd.is_finite() {
            return Err(Error::invalid("mean_gain_rd", format!("must be positive, got {}", self.mean_gain_rd)));
        }
        if !(self.block_duration > 0.0) || !self.block_duration.is_finite() {
            return Err(Error::invalid(
                "block_duration",
                format!("must be positive, got {}", self.block_duration),
            ));
        }
        Ok(())
    }

    /// Normalized mean source-relay gain `E[x'] / N0`.
    pub fn omega_x(&self) -> f64 {
        self.mean_gain_sr / self.noise_power
    }

    /// Normalized mean relay-destination gain `E[y'] / N0`.
    pub fn omega_y(&self) -> f64 {
        self.mean_gain_rd / self.noise_power
    }

    /// `E[a] = 2 N0 E[x^2] = 4 N0 omega_x^2` under Rayleigh fading.
    pub fn mean_a(&self) -> f64 {
        4.0 * self.noise_power * self.omega_x() * self.omega_x()
    }

    /// Density of the normalized relay-destination gain `y`.
    pub fn pdf_y(&self, y: f64) -> f64 {
        if y < 0.0 {
            return 0.0;
        }
        let omega = self.omega_y();
        (-y / omega).exp() / omega
    }

    /// Density of the normalized source-relay gain `x`.
    pub fn pdf_x(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let omega = self.omega_x();
        (-x / omega).exp() / omega
    }

    /// Density of `a = 2 N0 x^2`.
    pub fn pdf_a(&self, a: f64) -> f64 {
        if !(a > 0.0) {
            return 0.0;
        }
        let two_n0 = 2.0 * self.noise_power;
        self.pdf_x((a / two_n0).sqrt()) / (2.0 * (two_n0 * a).sqrt())
    }

    /// `P(A > threshold)`.
    pub fn survival_a(&self, threshold: f64) -> f64 {
        if threshold <= 0.0 {
            return 1.0;
        }
        (-(threshold / (2.0 * self.noise_power)).sqrt() / self.omega_x()).exp()
    }

    /// `P(Y > threshold)`.
    pub fn survival_y(&self, threshold: f64) -> f64 {
        if threshold <= 0.0 {
            return 1.0;
        }
        (-threshold / self.omega_y()).exp()
    }
}

/// One fading block's normalized gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochChannel {
    pub x: f64,
    pub y: f64,
    pub a: f64,
}

impl EpochChannel {
    pub fn from_gains(x: f64, y: f64, noise_power: f64) -> Self {
        Self {
            x,
            y,
            a: 2.0 * noise_power * x * x,
        }
    }

    /// Builds an epoch directly from `(a, y)`, taking `N0 = 1` so that
    /// `x = sqrt(a / 2)`. The allocation schemes only ever read `a` and `y`.
    pub fn from_coefficients(a: f64, y: f64) -> Self {
        Self {
            x: (a / 2.0).sqrt(),
            y,
            a,
        }
    }
}

/// Distribution of a link's power gain given its mean.
pub trait FadingModel: Send + Sync {
    fn sample_gain(&self, mean: f64, rng: &mut dyn RngCore) -> f64;
}

/// Rayleigh amplitude, i.e. exponentially distributed power gain.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rayleigh;

impl FadingModel for Rayleigh {
    fn sample_gain(&self, mean: f64, rng: &mut dyn RngCore) -> f64 {
        let e: f64 = Exp1.sample(rng);
        mean * e
    }
}

/// Rayleigh block-fading realizations for epochs `0..count`.
pub fn sample_epochs(params: &ChannelParams, count: usize, seed: u64) -> Result<Vec<EpochChannel>> {
    sample_epochs_with(&Rayleigh, params, 0..count, seed)
}

/// Realizations for an arbitrary index range. Epoch `i` depends only on
/// `(seed, i)`, so any partition of the index space yields the same values.
pub fn sample_epochs_with<M: FadingModel>(
    model: &M,
    params: &ChannelParams,
    range: std::ops::Range<usize>,
    seed: u64,
) -> Result<Vec<EpochChannel>> {
    params.validate()?;
    if range.is_empty() {
        return Err(Error::invalid("count", "need at least one epoch"));
    }
    let (omega_x, omega_y, n0) = (params.omega_x(), params.omega_y(), params.noise_power);
    Ok(range
        .into_par_iter()
        .map(|i| {
            let mut rng = epoch_rng(seed, i as u64);
            let x = model.sample_gain(omega_x, &mut rng);
            let y = model.sample_gain(omega_y, &mut rng);
            EpochChannel::from_gains(x, y, n0)
        })
        .collect())
}

fn epoch_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
