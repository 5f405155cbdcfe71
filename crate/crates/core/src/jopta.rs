//! Jointly optimal relay power and time-fraction allocation.
//!
//! With `e = p (1 + tau) / 2` the average-power constraint becomes
//! `mean(e) <= P`, and dualizing it splits the problem into independent
//! per-epoch maximizations of `min(C1, C2) - lambda e` over `(tau, e)`.
//! Each epoch's optimum is either the unconstrained maximum of the
//! energy-harvesting link (`tau1`) or the point where both links carry the
//! same rate (`tau2 = y / (a + y)`), whichever has the smaller time fraction.

use rayon::prelude::*;

use crate::channel::EpochChannel;
use crate::error::{Error, Result};
use crate::numerics::{self, Bracket, SolverSettings};
use crate::ratefns::{self, EpochAllocation};
use crate::solution::SchemeSolution;

/// Offset keeping the root bracket away from the trivial root and from 1.
const ROOT_EDGE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `tau1 <= tau2`: the harvesting link is the bottleneck at its own optimum.
    C1Max,
    /// `tau1 > tau2`: both links are balanced at `tau2`.
    Intersection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JoptaEpochSolution {
    pub tau1: f64,
    pub tau2: f64,
    /// Larger root of the stationarity equation, present iff `a / lambda > 2`
    /// and the root could be bracketed.
    pub tau0_root: Option<f64>,
    pub tau_star: f64,
    pub p1: f64,
    pub p2: f64,
    pub p_star: f64,
    pub branch: Branch,
}

impl JoptaEpochSolution {
    pub fn energy(&self) -> f64 {
        ratefns::energy(self.tau_star, self.p_star)
    }
}

/// Stationarity residual for the time fraction, with `ratio = a / lambda`:
///
/// `g(tau) = 1 + ratio tau^2 / (1 + tau^2) * ln z - z`, `z = ratio tau / (1 + tau)`.
///
/// It vanishes at the trivial root `1 / (ratio - 1)` and, for `ratio > 2`, at
/// one larger root in `(1 / (ratio - 1), 1)`.
pub fn stationarity_residual(tau: f64, ratio: f64) -> f64 {
    let z = ratio * tau / (1.0 + tau);
    1.0 + ratio * tau * tau / (1.0 + tau * tau) * z.ln() - z
}

/// The smaller root `1 / (a/lambda - 1)`, which yields zero relay power.
pub fn trivial_root(ratio: f64) -> f64 {
    1.0 / (ratio - 1.0)
}

/// Larger root of [`stationarity_residual`] for `ratio = a / lambda`, or
/// `None` when `ratio <= 2` (the harvesting link's optimum sits at `tau = 1`).
pub fn tau0_root(a: f64, lambda: f64, settings: &SolverSettings) -> Result<Option<f64>> {
    if !(a > 0.0) || !(lambda > 0.0) {
        return Ok(None);
    }
    let ratio = a / lambda;
    if !(ratio > 2.0) {
        return Ok(None);
    }
    let g = |t: f64| stationarity_residual(t, ratio);
    let mut lo = trivial_root(ratio) + ROOT_EDGE;
    let hi = 1.0 - ROOT_EDGE;
    if lo >= hi {
        return Ok(None);
    }
    // g(hi) > 0 for any ratio > 2; g just past the trivial root is negative
    // unless the two roots nearly coincide (ratio close to 2).
    if !(g(lo) < 0.0) {
        match numerics::linspace(lo, hi, 65).into_iter().find(|&t| g(t) < 0.0) {
            Some(t) => lo = t,
            None if ratio < 2.0 + 1e-3 => return Ok(None),
            None => return Err(Error::Tau0Root { ratio }),
        }
    }
    if !(g(hi) > 0.0) {
        if ratio < 2.0 + 1e-3 {
            return Ok(None);
        }
        return Err(Error::Tau0Root { ratio });
    }
    let root_settings = SolverSettings {
        rel_tol: f64::EPSILON,
        ..*settings
    };
    numerics::bisect_root(g, Bracket::new(lo, hi)?, &root_settings)
        .map(Some)
        .map_err(|_| Error::Tau0Root { ratio })
}

/// Time fraction at which both links carry the same rate for any power.
pub fn intersection_tau(a: f64, y: f64) -> f64 {
    if a + y > 0.0 {
        y / (a + y)
    } else {
        0.0
    }
}

/// Per-epoch optimum of `min(C1, C2) - lambda e` for a given multiplier.
pub fn solve_epoch(ch: &EpochChannel, lambda: f64, settings: &SolverSettings) -> Result<JoptaEpochSolution> {
    solve_epoch_with_tau2(ch, lambda, settings, intersection_tau)
}

/// [`solve_epoch`] with a substitute rule for the intersection point. Exists
/// so the validation harness can demonstrate that it detects a broken rule.
#[doc(hidden)]
pub fn solve_epoch_with_tau2(
    ch: &EpochChannel,
    lambda: f64,
    settings: &SolverSettings,
    tau2_rule: fn(f64, f64) -> f64,
) -> Result<JoptaEpochSolution> {
    if !(lambda > 0.0) {
        return Err(Error::invalid("lambda", format!("must be positive, got {lambda}")));
    }
    let (a, y) = (ch.a, ch.y);
    let tau2 = tau2_rule(a, y);
    let tau0 = tau0_root(a, lambda, settings)?;
    let tau1 = tau0.unwrap_or(1.0);

    let p1 = if tau1 < 1.0 {
        (1.0 - tau1) / (1.0 + tau1) * (1.0 / lambda - (1.0 + tau1) / (a * tau1)).max(0.0)
    } else {
        0.0
    };
    let p2 = if a > 0.0 && y > 0.0 && tau2 < 1.0 {
        (1.0 - tau2) / (1.0 + tau2) * (1.0 / lambda - 2.0 / a - 1.0 / y).max(0.0)
    } else {
        0.0
    };
    let (branch, tau_star, p_star) = if tau1 <= tau2 {
        (Branch::C1Max, tau1, p1)
    } else {
        (Branch::Intersection, tau2, p2)
    };
    Ok(JoptaEpochSolution {
        tau1,
        tau2,
        tau0_root: tau0,
        tau_star,
        p1,
        p2,
        p_star,
        branch,
    })
}

/// Per-epoch dual objective `min(C1, C2) - lambda e` with `p = 2e / (1 + tau)`.
pub fn dual_objective(ch: &EpochChannel, tau: f64, e: f64, lambda: f64) -> f64 {
    let p = 2.0 * e / (1.0 + tau);
    ratefns::c1(tau, p, ch.a).min(ratefns::c2(tau, p, ch.y)) - lambda * e
}

/// Mean relay consumption `mean(e*)` at multiplier `lambda`.
pub fn consumption(epochs: &[EpochChannel], lambda: f64, settings: &SolverSettings) -> Result<f64> {
    let energies = epochs
        .par_iter()
        .map(|ch| solve_epoch(ch, lambda, settings).map(|s| s.energy()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(ratefns::mean(energies))
}

/// Multiplier at which the mean consumption equals `p_bar`.
pub fn solve_lambda(epochs: &[EpochChannel], p_bar: f64, settings: &SolverSettings) -> Result<f64> {
    if epochs.is_empty() {
        return Err(Error::Empty("epochs"));
    }
    if !(p_bar > 0.0) || !p_bar.is_finite() {
        return Err(Error::invalid("p_bar", format!("must be positive, got {p_bar}")));
    }
    // No epoch consumes power once lambda >= a/2 for every epoch.
    let max_a = epochs.iter().map(|c| c.a).fold(0.0f64, f64::max);
    if !(max_a > 0.0) {
        return Err(Error::Infeasible("every epoch has a = 0; no power can be used".into()));
    }
    numerics::try_solve_monotone(|l| consumption(epochs, l, settings), p_bar, max_a, settings)
}

pub fn run(epochs: &[EpochChannel], p_bar: f64, settings: &SolverSettings) -> Result<SchemeSolution> {
    if epochs.is_empty() {
        return Err(Error::Empty("epochs"));
    }
    if p_bar == 0.0 {
        let allocations = epochs
            .iter()
            .map(|ch| EpochAllocation::idle(intersection_tau(ch.a, ch.y).min(1.0 - ROOT_EDGE)))
            .collect();
        return SchemeSolution::assemble(epochs, allocations, Some(f64::INFINITY), None);
    }
    let lambda = solve_lambda(epochs, p_bar, settings)?;
    let allocations = epochs
        .par_iter()
        .map(|ch| {
            let s = solve_epoch(ch, lambda, settings)?;
            if s.p_star > 0.0 {
                EpochAllocation::new(s.tau_star, s.p_star, ch, 1.0)
            } else {
                Ok(EpochAllocation::idle(s.tau_star.min(1.0 - ROOT_EDGE)))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    SchemeSolution::assemble(epochs, allocations, Some(lambda), None)
}

/// Resolution of the brute-force per-epoch oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleGrid {
    /// Time-fraction points at every level.
    pub points: usize,
    /// Energy points per level of the inner search at each time fraction.
    pub energy_points: usize,
    /// Number of zoom-in passes after the initial full-range grid, on each
    /// axis.
    pub zoom_levels: usize,
    /// Each zoom shrinks the search window by this factor around the
    /// incumbent.
    pub zoom_factor: f64,
    /// Upper end of the energy axis, in units of `1 / lambda`.
    pub e_max_over_inv_lambda: f64,
}

impl Default for OracleGrid {
    fn default() -> Self {
        Self {
            points: 401,
            energy_points: 61,
            zoom_levels: 3,
            zoom_factor: 10.0,
            e_max_over_inv_lambda: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub tau: f64,
    pub e: f64,
    pub value: f64,
    /// Spacing of the final time-fraction grid.
    pub tau_step: f64,
}

/// Brute-force maximization of [`dual_objective`] over
/// `tau in [1e-9, 1 - 1e-9]`, `e in [0, e_max / lambda]`. Shares nothing with
/// [`solve_epoch`] beyond the capacity formulas.
///
/// Every time fraction is scored by its best energy, found with a zoomed
/// grid whose first pass is geometric (the optimal energy can be orders of
/// magnitude below `e_max` when `a / lambda` is small). The time-fraction
/// axis is then searched with a zoomed grid of its own. Profiling the energy
/// out keeps the search on the ridge of optimal energies, which can be very
/// steep in `tau`.
pub fn oracle_epoch(ch: &EpochChannel, lambda: f64, grid: &OracleGrid) -> OracleResult {
    let n = grid.points.max(3);
    let e_max = grid.e_max_over_inv_lambda / lambda;
    let (mut lo, mut hi) = (ROOT_EDGE, 1.0 - ROOT_EDGE);
    let mut best = OracleResult {
        tau: lo,
        e: 0.0,
        value: f64::NEG_INFINITY,
        tau_step: 0.0,
    };
    for level in 0..=grid.zoom_levels {
        if level > 0 {
            let half = 0.5 * (hi - lo) / grid.zoom_factor;
            lo = (best.tau - half).max(ROOT_EDGE);
            hi = (best.tau + half).min(1.0 - ROOT_EDGE);
        }
        best.tau_step = (hi - lo) / (n - 1) as f64;
        for t in numerics::linspace(lo, hi, n) {
            let (e, v) = best_energy(ch, t, lambda, e_max, grid);
            if v > best.value {
                best = OracleResult { tau: t, e, value: v, ..best };
            }
        }
    }
    best
}

/// Zoomed grid search over the energy at a fixed time fraction.
fn best_energy(ch: &EpochChannel, tau: f64, lambda: f64, e_max: f64, grid: &OracleGrid) -> (f64, f64) {
    let m = grid.energy_points.max(3);
    let mut es = vec![0.0];
    es.extend(geomspace(e_max * ORACLE_E_SPAN, e_max, m - 1));
    let mut best = (0.0, f64::NEG_INFINITY);
    let mut best_j = 0;
    for (j, &e) in es.iter().enumerate() {
        let v = dual_objective(ch, tau, e, lambda);
        if v > best.1 {
            best = (e, v);
            best_j = j;
        }
    }
    // Bracket the incumbent by its geometric neighbours, then zoom linearly.
    let (mut lo, mut hi) = (es[best_j.saturating_sub(1)], es[(best_j + 1).min(m - 1)]);
    for level in 0..=grid.zoom_levels {
        if level > 0 {
            let half = 0.5 * (hi - lo) / grid.zoom_factor;
            lo = (best.0 - half).max(0.0);
            hi = best.0 + half;
        }
        for e in numerics::linspace(lo, hi, m) {
            let v = dual_objective(ch, tau, e, lambda);
            if v > best.1 {
                best = (e, v);
            }
        }
    }
    best
}

/// Smallest nonzero energy on the oracle's first pass, relative to `e_max`.
const ORACLE_E_SPAN: f64 = 1e-9;

fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    numerics::linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect()
}
