use rayon::prelude::*;

use super::config::{Scheme, ScenarioConfig};
use crate::channel::{sample_epochs, EpochChannel};
use crate::error::Result;
use crate::fpta::{self, FptaConfig};
use crate::jopta;
use crate::numerics::SolverSettings;
use crate::opa::{self, LambdaRoute, OpaConfig, RateSource};
use crate::solution::SchemeSolution;

/// One `(scheme, budget)` result.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scheme: Scheme,
    pub p_bar: f64,
    pub tau0: Option<f64>,
    pub lambda: Option<f64>,
    pub avg_rate_nats: f64,
    pub avg_rate_bits: f64,
    pub avg_power: f64,
    pub epochs_m: usize,
    pub seed: u64,
}

impl SweepRow {
    fn from_solution(scheme: Scheme, p_bar: f64, sol: &SchemeSolution, cfg: &ScenarioConfig) -> Self {
        Self {
            scheme,
            p_bar,
            tau0: sol.tau0,
            lambda: sol.lambda,
            avg_rate_nats: sol.avg_rate,
            avg_rate_bits: sol.avg_rate_bits(),
            avg_power: sol.avg_power,
            epochs_m: cfg.epochs_m,
            seed: cfg.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowFailure {
    pub scheme: Scheme,
    pub p_bar: f64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepOutcome {
    /// Successful rows in grid order, schemes in canonical order per budget.
    pub rows: Vec<SweepRow>,
    pub failures: Vec<RowFailure>,
}

/// Runs every selected scheme at every budget on one shared epoch set.
///
/// OPA's time fraction is optimized per budget and handed to FPTA. Scheme
/// failures are collected rather than aborting the sweep.
pub fn sweep(cfg: &ScenarioConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    let epochs = sample_epochs(&cfg.channel, cfg.epochs_m, cfg.seed)?;
    let settings = SolverSettings::default();
    let per_budget: Vec<(Vec<SweepRow>, Vec<RowFailure>)> = cfg
        .p_bar_grid
        .par_iter()
        .map(|&p_bar| run_budget(cfg, &epochs, p_bar, &settings))
        .collect();
    let mut outcome = SweepOutcome::default();
    for (rows, failures) in per_budget {
        outcome.rows.extend(rows);
        outcome.failures.extend(failures);
    }
    Ok(outcome)
}

fn run_budget(
    cfg: &ScenarioConfig,
    epochs: &[EpochChannel],
    p_bar: f64,
    settings: &SolverSettings,
) -> (Vec<SweepRow>, Vec<RowFailure>) {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut record = |scheme: Scheme, res: Result<SchemeSolution>| match res {
        Ok(sol) => rows.push(SweepRow::from_solution(scheme, p_bar, &sol, cfg)),
        Err(e) => failures.push(RowFailure {
            scheme,
            p_bar,
            message: e.to_string(),
        }),
    };

    if cfg.schemes.contains(&Scheme::Jopta) {
        record(Scheme::Jopta, jopta::run(epochs, p_bar, settings));
    }

    let mut opa_tau0 = None;
    if cfg.schemes.contains(&Scheme::Opa) {
        let res = opa_at_best_tau0(cfg, epochs, p_bar, settings);
        if let Ok(sol) = &res {
            opa_tau0 = sol.tau0;
        }
        record(Scheme::Opa, res);
    }

    if cfg.schemes.contains(&Scheme::Fpta) {
        let res = match opa_tau0.or(cfg.fpta_tau0) {
            Some(tau0) => FptaConfig::from_budget(tau0, p_bar).and_then(|c| fpta::run(epochs, &c)),
            None => Err(crate::Error::Infeasible(
                "no time fraction for FPTA: OPA failed at this budget".into(),
            )),
        };
        record(Scheme::Fpta, res);
    }
    (rows, failures)
}

fn opa_at_best_tau0(
    cfg: &ScenarioConfig,
    epochs: &[EpochChannel],
    p_bar: f64,
    settings: &SolverSettings,
) -> Result<SchemeSolution> {
    let source = match cfg.opa_lambda_route {
        LambdaRoute::Samples => RateSource::Samples(epochs),
        LambdaRoute::Quadrature => RateSource::Quadrature(&cfg.channel),
    };
    let (tau0, _) = opa::optimize_tau0(source, p_bar, settings)?;
    let opa_cfg = OpaConfig::new(tau0, p_bar, cfg.opa_lambda_route)?;
    opa::run(epochs, &opa_cfg, Some(&cfg.channel), settings)
}

/// Time fraction maximizing the OPA rate for one budget, using the route the
/// scenario selects.
pub fn tau_search(cfg: &ScenarioConfig, p_bar: f64) -> Result<(f64, f64)> {
    let settings = SolverSettings::default();
    match cfg.opa_lambda_route {
        LambdaRoute::Samples => {
            let epochs = sample_epochs(&cfg.channel, cfg.epochs_m, cfg.seed)?;
            opa::optimize_tau0(RateSource::Samples(&epochs), p_bar, &settings)
        }
        LambdaRoute::Quadrature => opa::optimize_tau0(RateSource::Quadrature(&cfg.channel), p_bar, &settings),
    }
}
