//! Optimal relay power allocation for a fixed time fraction `tau0`.
//!
//! For fixed `tau0` each epoch is limited by whichever link is weaker,
//! independent of power: the harvesting link when `y >= a tau0 / (1 - tau0)`,
//! the relay link otherwise. The optimal powers are water-filling levels
//! `(1/lambda - threshold)^+` on the corresponding effective gain.
//!
//! The multiplier is fitted either on the sampled epochs or, for Rayleigh
//! fading, from the closed-form statistics with one-dimensional quadrature.
//!
//! `lambda` here is the water level's reciprocal as it appears in the
//! allocation formula. Relative to the multiplier `nu` on the averaged
//! constraint `(1 + tau0)/2 * mean(p) <= P`, it is `lambda = nu (1 + tau0) /
//! (1 - tau0)`, and the stationarity condition reads
//! `d/dp min(C1, C2) = lambda (1 - tau0) / 2`.

use std::sync::Mutex;

use rayon::prelude::*;

use crate::channel::{ChannelParams, EpochChannel};
use crate::error::{Error, Result};
use crate::jopta::intersection_tau;
use crate::numerics::{self, integrate_semiinf, Bracket, SolverSettings, Tail};
use crate::ratefns::{self, EpochAllocation};
use crate::solution::SchemeSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LambdaRoute {
    /// Fit on the sampled epochs (any fading model).
    #[default]
    Samples,
    /// Fit from Rayleigh-fading statistics by quadrature.
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpaConfig {
    pub tau0: f64,
    pub p_bar: f64,
    pub lambda_route: LambdaRoute,
}

impl OpaConfig {
    pub fn new(tau0: f64, p_bar: f64, lambda_route: LambdaRoute) -> Result<Self> {
        check_tau0(tau0)?;
        if !(p_bar >= 0.0) || !p_bar.is_finite() {
            return Err(Error::invalid("p_bar", format!("must be non-negative, got {p_bar}")));
        }
        Ok(Self {
            tau0,
            p_bar,
            lambda_route,
        })
    }
}

fn check_tau0(tau0: f64) -> Result<()> {
    if !(tau0 > 0.0 && tau0 < 1.0) {
        return Err(Error::invalid("tau0", format!("must lie in (0, 1), got {tau0}")));
    }
    Ok(())
}

/// True when the harvesting link is the bottleneck, `tau0 <= y / (a + y)`.
#[inline]
pub fn harvest_limited(ch: &EpochChannel, tau0: f64) -> bool {
    tau0 <= intersection_tau(ch.a, ch.y)
}

/// Water-filling threshold (inverse effective gain) of an epoch.
#[inline]
pub fn threshold(ch: &EpochChannel, tau0: f64) -> f64 {
    if harvest_limited(ch, tau0) {
        if ch.a > 0.0 {
            (1.0 - tau0) / (ch.a * tau0)
        } else {
            f64::INFINITY
        }
    } else if ch.y > 0.0 {
        1.0 / ch.y
    } else {
        f64::INFINITY
    }
}

pub fn power_alloc(ch: &EpochChannel, tau0: f64, lambda: f64) -> f64 {
    (1.0 / lambda - threshold(ch, tau0)).max(0.0)
}

/// `(1 + tau0)/2 * mean(p)` at multiplier `lambda`.
fn sample_consumption(thresholds: &[f64], tau0: f64, lambda: f64) -> f64 {
    let inv = 1.0 / lambda;
    0.5 * (1.0 + tau0) * ratefns::mean(thresholds.iter().map(|&t| (inv - t).max(0.0)))
}

pub fn solve_lambda_samples(
    epochs: &[EpochChannel],
    tau0: f64,
    p_bar: f64,
    settings: &SolverSettings,
) -> Result<f64> {
    check_tau0(tau0)?;
    if epochs.is_empty() {
        return Err(Error::Empty("epochs"));
    }
    if !(p_bar > 0.0) || !p_bar.is_finite() {
        return Err(Error::invalid("p_bar", format!("must be positive, got {p_bar}")));
    }
    let thresholds: Vec<f64> = epochs.par_iter().map(|ch| threshold(ch, tau0)).collect();
    let min_threshold = thresholds.iter().copied().fold(f64::INFINITY, f64::min);
    if !min_threshold.is_finite() {
        return Err(Error::Infeasible("no epoch can carry information at this tau0".into()));
    }
    // Every epoch is off once 1/lambda <= min threshold.
    numerics::solve_monotone(
        |l| sample_consumption(&thresholds, tau0, l),
        p_bar,
        1.0 / min_threshold,
        settings,
    )
}

/// Expected relay power `E[p]` under Rayleigh fading at multiplier `lambda`.
pub fn expected_power_quadrature(
    params: &ChannelParams,
    tau0: f64,
    lambda: f64,
    settings: &SolverSettings,
) -> Result<f64> {
    let odds = tau0 / (1.0 - tau0);
    let inv = 1.0 / lambda;
    let harvest = integrate_semiinf(
        |a| (inv - 1.0 / (a * odds)) * params.survival_y(a * odds) * params.pdf_a(a),
        lambda / odds,
        a_tail(params),
        settings,
    )?;
    let relay = integrate_semiinf(
        |y| (inv - 1.0 / y) * params.survival_a(y / odds) * params.pdf_y(y),
        lambda,
        y_tail(params),
        settings,
    )?;
    Ok(harvest.value + relay.value)
}

fn a_tail(params: &ChannelParams) -> Tail {
    Tail::StretchedExponential {
        scale: params.mean_a() / 2.0,
    }
}

fn y_tail(params: &ChannelParams) -> Tail {
    Tail::Exponential {
        scale: params.omega_y(),
    }
}

pub fn solve_lambda_quadrature(
    params: &ChannelParams,
    tau0: f64,
    p_bar: f64,
    settings: &SolverSettings,
) -> Result<f64> {
    check_tau0(tau0)?;
    params.validate()?;
    if !(p_bar > 0.0) || !p_bar.is_finite() {
        return Err(Error::invalid("p_bar", format!("must be positive, got {p_bar}")));
    }
    let quad = SolverSettings::quadrature();
    let target = 2.0 * p_bar / (1.0 + tau0);
    let scale = params.mean_a() * tau0 / (1.0 - tau0) + params.omega_y();
    numerics::try_solve_monotone(
        |l| expected_power_quadrature(params, tau0, l, &quad),
        target,
        scale,
        settings,
    )
}

/// Average rate under Rayleigh fading for a given `(tau0, lambda)`.
pub fn rate_quadrature(params: &ChannelParams, tau0: f64, lambda: f64) -> Result<f64> {
    check_tau0(tau0)?;
    if !(lambda > 0.0) {
        return Err(Error::invalid("lambda", format!("must be positive, got {lambda}")));
    }
    let quad = SolverSettings::quadrature();
    let odds = tau0 / (1.0 - tau0);
    let harvest = integrate_semiinf(
        |a| (a * odds / lambda).ln() * params.survival_y(a * odds) * params.pdf_a(a),
        lambda / odds,
        a_tail(params),
        &quad,
    )?;
    let relay = integrate_semiinf(
        |y| (y / lambda).ln() * params.survival_a(y / odds) * params.pdf_y(y),
        lambda,
        y_tail(params),
        &quad,
    )?;
    Ok(0.5 * (1.0 - tau0) * (harvest.value + relay.value))
}

/// Mean of `min(C1, C2)` over the epochs with the allocation fixed by `lambda`.
pub fn rate_samples(epochs: &[EpochChannel], tau0: f64, lambda: f64) -> Result<f64> {
    check_tau0(tau0)?;
    if epochs.is_empty() {
        return Err(Error::Empty("epochs"));
    }
    let rates: Vec<f64> = epochs
        .par_iter()
        .map(|ch| {
            let p = power_alloc(ch, tau0, lambda);
            ratefns::c1(tau0, p, ch.a).min(ratefns::c2(tau0, p, ch.y))
        })
        .collect();
    Ok(ratefns::mean(rates))
}

/// What the outer time-fraction search evaluates the rate curve on.
#[derive(Debug, Clone, Copy)]
pub enum RateSource<'a> {
    Samples(&'a [EpochChannel]),
    Quadrature(&'a ChannelParams),
}

impl RateSource<'_> {
    /// Optimal average rate at `tau0` after refitting `lambda`.
    pub fn rate_at(&self, tau0: f64, p_bar: f64, settings: &SolverSettings) -> Result<f64> {
        match *self {
            RateSource::Samples(epochs) => {
                let lambda = solve_lambda_samples(epochs, tau0, p_bar, settings)?;
                rate_samples(epochs, tau0, lambda)
            }
            RateSource::Quadrature(params) => {
                let lambda = solve_lambda_quadrature(params, tau0, p_bar, settings)?;
                rate_quadrature(params, tau0, lambda)
            }
        }
    }
}

/// Grid of time fractions scanned before refinement: 0.01, 0.02, ..., 0.99.
pub fn tau0_grid() -> Vec<f64> {
    (1..=99).map(|k| k as f64 / 100.0).collect()
}

/// Time fraction maximizing the OPA rate, with the rate it achieves.
///
/// Scans [`tau0_grid`], then golden-section refines between the neighbours of
/// the best grid point. With sampled epochs every evaluation reuses the same
/// realizations.
pub fn optimize_tau0(source: RateSource<'_>, p_bar: f64, settings: &SolverSettings) -> Result<(f64, f64)> {
    if !(p_bar > 0.0) || !p_bar.is_finite() {
        return Err(Error::invalid("p_bar", format!("must be positive, got {p_bar}")));
    }
    let grid = tau0_grid();
    let values = grid
        .par_iter()
        .map(|&t| source.rate_at(t, p_bar, settings))
        .collect::<Result<Vec<f64>>>()?;

    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let objective = |t: f64| match source.rate_at(t, p_bar, settings) {
        Ok(v) => v,
        Err(e) => {
            failure.lock().expect("poisoned").get_or_insert(e);
            f64::NEG_INFINITY
        }
    };
    let refine = SolverSettings {
        abs_tol: 1e-5,
        rel_tol: 1e-9,
        max_iters: settings.max_iters,
    };
    let best = numerics::refine_around_best(&objective, &grid, &values, &refine)?;
    if let Some(e) = failure.into_inner().expect("poisoned") {
        return Err(e);
    }
    Ok(best)
}

/// The curve `tau0 -> optimal rate` on an arbitrary set of points.
pub fn rate_curve(source: RateSource<'_>, taus: &[f64], p_bar: f64, settings: &SolverSettings) -> Result<Vec<f64>> {
    taus.par_iter().map(|&t| source.rate_at(t, p_bar, settings)).collect()
}

pub fn run(
    epochs: &[EpochChannel],
    config: &OpaConfig,
    channel: Option<&ChannelParams>,
    settings: &SolverSettings,
) -> Result<SchemeSolution> {
    if epochs.is_empty() {
        return Err(Error::Empty("epochs"));
    }
    let tau0 = config.tau0;
    check_tau0(tau0)?;
    if config.p_bar == 0.0 {
        let allocations = vec![EpochAllocation::idle(tau0); epochs.len()];
        return SchemeSolution::assemble(epochs, allocations, Some(f64::INFINITY), Some(tau0));
    }
    let lambda = match config.lambda_route {
        LambdaRoute::Samples => solve_lambda_samples(epochs, tau0, config.p_bar, settings)?,
        LambdaRoute::Quadrature => {
            let params = channel.ok_or_else(|| {
                Error::invalid("lambda_route", "quadrature route needs the channel statistics")
            })?;
            solve_lambda_quadrature(params, tau0, config.p_bar, settings)?
        }
    };
    let allocations = epochs
        .par_iter()
        .map(|ch| EpochAllocation::new(tau0, power_alloc(ch, tau0, lambda), ch, 1.0))
        .collect::<Result<Vec<_>>>()?;
    SchemeSolution::assemble(epochs, allocations, Some(lambda), Some(tau0))
}

/// Resolution of the one-dimensional power oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOracleGrid {
    pub points: usize,
    pub zoom_levels: usize,
    pub zoom_factor: f64,
}

impl Default for PowerOracleGrid {
    fn default() -> Self {
        Self {
            points: 2001,
            zoom_levels: 4,
            zoom_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOracleResult {
    pub p: f64,
    pub value: f64,
    pub p_step: f64,
}

/// Per-epoch objective `min(C1, C2) - lambda (1 - tau0)/2 * p`.
pub fn power_objective(ch: &EpochChannel, tau0: f64, p: f64, lambda: f64) -> f64 {
    ratefns::c1(tau0, p, ch.a).min(ratefns::c2(tau0, p, ch.y)) - 0.5 * lambda * (1.0 - tau0) * p
}

/// Grid search of [`power_objective`] over `p in [0, 3/lambda]` with local
/// zooms. Independent of the water-filling formula.
pub fn oracle_power(ch: &EpochChannel, tau0: f64, lambda: f64, grid: &PowerOracleGrid) -> PowerOracleResult {
    let n = grid.points.max(3);
    let (mut lo, mut hi) = (0.0, 3.0 / lambda);
    let mut best = (0.0, f64::NEG_INFINITY);
    let mut p_step = 0.0;
    for level in 0..=grid.zoom_levels {
        if level > 0 {
            let half = 0.5 * (hi - lo) / grid.zoom_factor;
            lo = (best.0 - half).max(0.0);
            hi = best.0 + half;
        }
        p_step = (hi - lo) / (n - 1) as f64;
        for p in numerics::linspace(lo, hi, n) {
            let v = power_objective(ch, tau0, p, lambda);
            if v > best.1 {
                best = (p, v);
            }
        }
    }
    PowerOracleResult {
        p: best.0,
        value: best.1,
        p_step,
    }
}

/// Rate curve sampled on `[lo, hi]`; convenience for plotting and boundary
/// checks.
pub fn rate_on_bracket(
    source: RateSource<'_>,
    bracket: Bracket,
    points: usize,
    p_bar: f64,
    settings: &SolverSettings,
) -> Result<Vec<(f64, f64)>> {
    let taus = numerics::linspace(bracket.lo, bracket.hi, points);
    let rates = rate_curve(source, &taus, p_bar, settings)?;
    Ok(taus.into_iter().zip(rates).collect())
}
