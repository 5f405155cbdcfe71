//! Self-checks comparing the closed-form solvers against independent
//! brute-force oracles and alternative computation routes.

use std::fmt;

use rayon::prelude::*;

use super::config::ScenarioConfig;
use crate::channel::{sample_epochs, EpochChannel};
use crate::error::Result;
use crate::fpta::{self, FptaConfig};
use crate::jopta::{self, OracleGrid};
use crate::numerics::SolverSettings;
use crate::opa::{self, PowerOracleGrid};

/// Oracle objective values must match the closed form to this absolute error.
pub const ORACLE_VALUE_TOL: f64 = 1e-5;
/// Allowed distance between oracle and closed-form time fraction, in final
/// oracle grid steps.
pub const ORACLE_TAU_STEPS: f64 = 2.0;
/// Relative agreement between the sample and quadrature routes.
pub const ROUTE_REL_TOL: f64 = 0.01;
/// Relative agreement between the two FPTA rate expressions.
pub const IDENTITY_REL_TOL: f64 = 1e-12;

/// Epochs used by the per-epoch oracle checks.
pub const ORACLE_EPOCHS: usize = 200;
/// Minimum sample count for the route cross-check to be meaningful.
pub const ROUTE_MIN_EPOCHS: usize = 1000;
/// Sample count used for the route cross-check when the scenario asks for
/// fewer.
pub const ROUTE_EPOCHS: usize = 1_000_000;

const LAMBDA_SCALES: [f64; 3] = [0.1, 1.0, 10.0];
const OPA_TAU0S: [f64; 3] = [0.2, 0.5, 0.8];
const ROUTE_TAU0: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default)]
pub struct ValidateOptions {
    /// Replaces the intersection-point rule inside the JOPTA check. Used to
    /// confirm that the harness notices a wrong formula.
    pub corrupt_tau2: Option<fn(f64, f64) -> f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CheckStatus {
    Passed,
    Failed,
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub status: CheckStatus,
    /// Largest deviation observed, in the check's own units.
    pub max_deviation: f64,
    pub tolerance: f64,
    pub cases: usize,
}

impl CheckResult {
    fn judge(name: &'static str, max_deviation: f64, tolerance: f64, cases: usize, extra_ok: bool) -> Self {
        let status = if max_deviation <= tolerance && extra_ok {
            CheckStatus::Passed
        } else {
            CheckStatus::Failed
        };
        Self {
            name,
            status,
            max_deviation,
            tolerance,
            cases,
        }
    }

    fn skipped(name: &'static str, tolerance: f64, reason: String) -> Self {
        Self {
            name,
            status: CheckStatus::Skipped(reason),
            max_deviation: 0.0,
            tolerance,
            cases: 0,
        }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.status {
            CheckStatus::Skipped(reason) => write!(f, "SKIP {}: {}", self.name, reason),
            status => write!(
                f,
                "{} {}: max deviation {:.3e} (tolerance {:.1e}, {} cases)",
                if *status == CheckStatus::Passed { "PASS" } else { "FAIL" },
                self.name,
                self.max_deviation,
                self.tolerance,
                self.cases
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    /// True when no check failed; skipped checks do not count as failures.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Failed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

pub fn validate(cfg: &ScenarioConfig) -> Result<ValidationReport> {
    validate_with(cfg, &ValidateOptions::default())
}

pub fn validate_with(cfg: &ScenarioConfig, options: &ValidateOptions) -> Result<ValidationReport> {
    cfg.validate()?;
    let settings = SolverSettings::default();
    let epochs = sample_epochs(&cfg.channel, cfg.epochs_m, cfg.seed)?;
    let oracle_epochs = &epochs[..epochs.len().min(ORACLE_EPOCHS)];
    let mean_a = cfg.channel.mean_a();

    let checks = vec![
        check_jopta_oracle(oracle_epochs, mean_a, options, &settings)?,
        check_opa_oracle(oracle_epochs, mean_a),
        check_routes(cfg, &settings)?,
        check_fpta_identity(&epochs, cfg)?,
    ];
    Ok(ValidationReport { checks })
}

/// JOPTA per-epoch solution against the 2-D grid oracle.
///
/// The deviation is the objective gap; the time fraction must also agree to
/// within [`ORACLE_TAU_STEPS`] oracle steps whenever the relay transmits.
pub fn check_jopta_oracle(
    epochs: &[EpochChannel],
    mean_a: f64,
    options: &ValidateOptions,
    settings: &SolverSettings,
) -> Result<CheckResult> {
    let tau2_rule = options.corrupt_tau2.unwrap_or(jopta::intersection_tau);
    let grid = OracleGrid::default();
    let cases: Vec<(EpochChannel, f64)> = LAMBDA_SCALES
        .iter()
        .flat_map(|&s| epochs.iter().map(move |ch| (*ch, s * mean_a)))
        .collect();
    let outcomes = cases
        .par_iter()
        .map(|(ch, lambda)| {
            let sol = jopta::solve_epoch_with_tau2(ch, *lambda, settings, tau2_rule)?;
            let closed = jopta::dual_objective(ch, sol.tau_star, sol.energy(), *lambda);
            let oracle = jopta::oracle_epoch(ch, *lambda, &grid);
            let tau_ok = sol.p_star == 0.0 || (oracle.tau - sol.tau_star).abs() <= ORACLE_TAU_STEPS * oracle.tau_step;
            Ok(((oracle.value - closed).abs(), tau_ok))
        })
        .collect::<Result<Vec<(f64, bool)>>>()?;
    let max_dev = outcomes.iter().map(|o| o.0).fold(0.0, f64::max);
    let tau_ok = outcomes.iter().all(|o| o.1);
    Ok(CheckResult::judge(
        "jopta-vs-grid-oracle",
        max_dev,
        ORACLE_VALUE_TOL,
        cases.len(),
        tau_ok,
    ))
}

/// OPA water-filling power against the 1-D grid oracle at several fixed
/// time fractions. The multiplier is scaled so the water level sits among
/// the typical thresholds.
pub fn check_opa_oracle(epochs: &[EpochChannel], mean_a: f64) -> CheckResult {
    let grid = PowerOracleGrid::default();
    let cases: Vec<(EpochChannel, f64, f64)> = OPA_TAU0S
        .iter()
        .flat_map(|&t| {
            let lambda = mean_a * t / (1.0 - t);
            epochs.iter().map(move |ch| (*ch, t, lambda))
        })
        .collect();
    let max_dev = cases
        .par_iter()
        .map(|(ch, tau0, lambda)| {
            let p = opa::power_alloc(ch, *tau0, *lambda);
            let closed = opa::power_objective(ch, *tau0, p, *lambda);
            (opa::oracle_power(ch, *tau0, *lambda, &grid).value - closed).abs()
        })
        .reduce(|| 0.0, f64::max);
    CheckResult::judge("opa-vs-grid-oracle", max_dev, ORACLE_VALUE_TOL, cases.len(), true)
}

/// Multiplier and rate of OPA computed from samples and from the fading
/// statistics. The deviation is the largest relative gap over all budgets
/// in the grid.
pub fn check_routes(cfg: &ScenarioConfig, settings: &SolverSettings) -> Result<CheckResult> {
    let name = "opa-samples-vs-quadrature";
    if cfg.epochs_m < ROUTE_MIN_EPOCHS {
        return Ok(CheckResult::skipped(
            name,
            ROUTE_REL_TOL,
            format!("needs epochs_m >= {ROUTE_MIN_EPOCHS}, scenario has {}", cfg.epochs_m),
        ));
    }
    let epochs = sample_epochs(&cfg.channel, cfg.epochs_m.max(ROUTE_EPOCHS), cfg.seed)?;
    let mut max_dev = 0.0f64;
    for &p_bar in &cfg.p_bar_grid {
        let l_samples = opa::solve_lambda_samples(&epochs, ROUTE_TAU0, p_bar, settings)?;
        let l_quad = opa::solve_lambda_quadrature(&cfg.channel, ROUTE_TAU0, p_bar, settings)?;
        let r_samples = opa::rate_samples(&epochs, ROUTE_TAU0, l_quad)?;
        let r_quad = opa::rate_quadrature(&cfg.channel, ROUTE_TAU0, l_quad)?;
        max_dev = max_dev
            .max(rel_gap(l_samples, l_quad))
            .max(rel_gap(r_samples, r_quad));
    }
    Ok(CheckResult::judge(
        name,
        max_dev,
        ROUTE_REL_TOL,
        cfg.p_bar_grid.len(),
        true,
    ))
}

/// The closed FPTA rate sum against the generic per-epoch evaluation.
pub fn check_fpta_identity(epochs: &[EpochChannel], cfg: &ScenarioConfig) -> Result<CheckResult> {
    let tau0 = cfg.fpta_tau0.unwrap_or(ROUTE_TAU0);
    let mut max_dev = 0.0f64;
    for &p_bar in &cfg.p_bar_grid {
        let fc = FptaConfig::from_budget(tau0, p_bar)?;
        let direct = fpta::benchmark_rate(epochs, &fc)?;
        let generic = fpta::run(epochs, &fc)?.avg_rate;
        max_dev = max_dev.max(rel_gap(direct, generic));
    }
    Ok(CheckResult::judge(
        "fpta-closed-sum-identity",
        max_dev,
        IDENTITY_REL_TOL,
        cfg.p_bar_grid.len(),
        true,
    ))
}

fn rel_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
