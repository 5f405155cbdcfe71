//! Acceptance criteria. Each test writes one `PASS`/`FAIL` line with the
//! measured values before asserting. The line goes straight to the stderr
//! handle, which the test harness does not capture, so it shows up in plain
//! `cargo test` output.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ehrelay::channel::sample_epochs;
use ehrelay::experiment::validate::{check_jopta_oracle, check_opa_oracle, ValidateOptions};
use ehrelay::experiment::{sweep, ScenarioConfig, Scheme};
use ehrelay::fpta::{self, FptaConfig};
use ehrelay::jopta;
use ehrelay::opa::{self, LambdaRoute, OpaConfig, RateSource};
use ehrelay::ratefns;
use ehrelay::{ChannelParams, EpochChannel, SolverSettings};

const SEED: u64 = 0;
const SWEEP_EPOCHS: usize = 100_000;
const ROUTE_EPOCHS: usize = 1_000_000;

fn report(criterion: u32, ok: bool, detail: String) {
    let line = format!("{} criterion {criterion}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    std::io::stderr().write_all(line.as_bytes()).expect("stderr is writable");
    assert!(ok, "criterion {criterion} failed: {detail}");
}

fn scenario() -> ScenarioConfig {
    ScenarioConfig {
        epochs_m: SWEEP_EPOCHS,
        seed: SEED,
        ..ScenarioConfig::default()
    }
}

fn channel() -> ChannelParams {
    scenario().channel
}

fn settings() -> SolverSettings {
    SolverSettings::default()
}

#[test]
fn criterion_1_optimal_time_fraction() {
    let epochs = sample_epochs(&channel(), SWEEP_EPOCHS, SEED).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for (p_bar, expected) in [(1.0, 0.34), (10.0, 0.26)] {
        let start = Instant::now();
        let (tau0, rate) = opa::optimize_tau0(RateSource::Samples(&epochs), p_bar, &settings()).unwrap();
        let secs = start.elapsed().as_secs_f64();
        ok &= (tau0 - expected).abs() <= 0.03 && secs < 120.0;
        parts.push(format!(
            "p_bar {p_bar} W -> tau0* {tau0:.4} (expected {expected} +- 0.03, rate {rate:.5} nats, {secs:.1} s)"
        ));
    }
    report(1, ok, parts.join("; "));
}

#[test]
fn criterion_2_scheme_ordering() {
    let outcome = sweep(&scenario()).unwrap();
    assert!(outcome.failures.is_empty(), "{:?}", outcome.failures);
    let mut ok = true;
    let mut parts = Vec::new();
    for &p_bar in &scenario().p_bar_grid {
        let rate = |s: Scheme| {
            outcome
                .rows
                .iter()
                .find(|r| r.scheme == s && r.p_bar == p_bar)
                .map(|r| r.avg_rate_nats)
                .expect("row present")
        };
        let (j, o, f) = (rate(Scheme::Jopta), rate(Scheme::Opa), rate(Scheme::Fpta));
        ok &= j >= o && o >= f;
        parts.push(format!(
            "p_bar {p_bar}: JOPTA {j:.5} OPA {o:.5} FPTA {f:.5} (JOPTA-OPA gap {:.2}%)",
            100.0 * (j - o) / o
        ));
    }
    report(2, ok, parts.join("; "));
}

#[test]
fn criterion_3_joint_allocation_matches_grid_oracle() {
    let epochs = sample_epochs(&channel(), 200, SEED).unwrap();
    let start = Instant::now();
    let check = check_jopta_oracle(&epochs, channel().mean_a(), &ValidateOptions::default(), &settings()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let ok = check.status == ehrelay::experiment::validate::CheckStatus::Passed && secs < 60.0;
    report(3, ok, format!("{check}; {secs:.1} s"));
}

#[test]
fn criterion_4_power_allocation_matches_grid_oracle() {
    let epochs = sample_epochs(&channel(), 200, SEED).unwrap();
    let check = check_opa_oracle(&epochs, channel().mean_a());
    let ok = check.status == ehrelay::experiment::validate::CheckStatus::Passed;
    report(4, ok, check.to_string());
}

#[test]
fn criterion_5_sample_and_quadrature_routes_agree() {
    let params = channel();
    let epochs = sample_epochs(&params, ROUTE_EPOCHS, SEED).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for p_bar in [1.0, 10.0] {
        for tau0 in [0.3, 0.5] {
            let l_s = opa::solve_lambda_samples(&epochs, tau0, p_bar, &settings()).unwrap();
            let l_q = opa::solve_lambda_quadrature(&params, tau0, p_bar, &settings()).unwrap();
            let r_s = opa::rate_samples(&epochs, tau0, l_q).unwrap();
            let r_q = opa::rate_quadrature(&params, tau0, l_q).unwrap();
            let dl = (l_s - l_q).abs() / l_q;
            let dr = (r_s - r_q).abs() / r_q;
            ok &= dl <= 0.01 && dr <= 0.01;
            parts.push(format!(
                "p_bar {p_bar} tau0 {tau0}: lambda gap {:.3}%, rate gap {:.3}%",
                100.0 * dl,
                100.0 * dr
            ));
        }
    }
    report(5, ok, parts.join("; "));
}

#[test]
fn criterion_6_power_constraint_is_tight() {
    let cfg = scenario();
    let epochs = sample_epochs(&cfg.channel, cfg.epochs_m, SEED).unwrap();
    let mut worst: f64 = 0.0;
    for &p_bar in &cfg.p_bar_grid {
        let j = jopta::run(&epochs, p_bar, &settings()).unwrap();
        let tau0 = 0.4;
        let o = opa::run(
            &epochs,
            &OpaConfig::new(tau0, p_bar, LambdaRoute::Samples).unwrap(),
            None,
            &settings(),
        )
        .unwrap();
        let f = fpta::run(&epochs, &FptaConfig::from_budget(tau0, p_bar).unwrap()).unwrap();
        for power in [j.avg_power, o.avg_power, f.avg_power] {
            worst = worst.max((power - p_bar).abs() / p_bar);
        }
    }
    report(6, worst <= 1e-3, format!("largest relative budget deviation {worst:.2e} (limit 1e-3)"));
}

#[test]
fn criterion_7_stationarity_root_certificates() {
    let mut ok = true;
    let mut parts = Vec::new();
    for ratio in [3.0, 4.0, 10.0] {
        let trivial = jopta::trivial_root(ratio);
        let g_trivial = jopta::stationarity_residual(trivial, ratio).abs();
        let root = jopta::tau0_root(ratio, 1.0, &settings()).unwrap().expect("root exists above ratio 2");
        let g_root = jopta::stationarity_residual(root, ratio).abs();
        ok &= g_trivial <= 1e-10 && root > trivial && root < 1.0 && g_root <= 1e-10;
        if ratio == 4.0 {
            ok &= (root - 0.690).abs() <= 1e-3;
        }
        parts.push(format!(
            "a/lambda {ratio}: |g(trivial)| {g_trivial:.1e}, root {root:.6}, |g(root)| {g_root:.1e}"
        ));
    }
    report(7, ok, parts.join("; "));
}

#[test]
fn criterion_8_structural_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst_tie: f64 = 0.0;
    // Gains within two decades of each other keep tau = y/(a+y) away from 0
    // and 1, where rounding tau alone costs eps/(1 - tau) relative accuracy.
    for _ in 0..10_000 {
        let a = 10f64.powf(rng.random_range(-1.0..1.0));
        let y = 10f64.powf(rng.random_range(-1.0..1.0));
        let p = 10f64.powf(rng.random_range(-3.0..3.0));
        let tau = jopta::intersection_tau(a, y);
        let (c1, c2) = (ratefns::c1(tau, p, a), ratefns::c2(tau, p, y));
        worst_tie = worst_tie.max((c1 - c2).abs() / c1.max(c2));
    }

    let epochs = sample_epochs(&channel(), 10_000, SEED).unwrap();
    let cfg = FptaConfig::from_budget(0.4, 1.0).unwrap();
    let direct = fpta::benchmark_rate(&epochs, &cfg).unwrap();
    let generic = fpta::run(&epochs, &cfg).unwrap().avg_rate;
    let fpta_gap = (direct - generic).abs() / direct;

    let mut idle_below_two = true;
    for _ in 0..1_000 {
        let ratio = rng.random_range(0.0..=2.0);
        let ch = EpochChannel::from_coefficients(ratio, 10f64.powf(rng.random_range(-3.0..3.0)));
        idle_below_two &= jopta::solve_epoch(&ch, 1.0, &settings()).unwrap().p_star == 0.0;
    }

    let ok = worst_tie <= 1e-12 && fpta_gap <= 1e-12 && idle_below_two;
    report(
        8,
        ok,
        format!(
            "tie residual {worst_tie:.1e}, benchmark identity {fpta_gap:.1e}, zero power below ratio 2: {idle_below_two}"
        ),
    );
}

#[test]
fn criterion_9_rate_vanishes_at_time_fraction_edges() {
    let epochs = sample_epochs(&channel(), SWEEP_EPOCHS, SEED).unwrap();
    let source = RateSource::Samples(&epochs);
    let p_bar = 1.0;
    let (tau_star, best) = opa::optimize_tau0(source, p_bar, &settings()).unwrap();
    let mut ok = true;
    let mut parts = vec![format!("rate at tau0* {tau_star:.3}: {best:.5}")];
    for tau0 in [0.001, 0.999] {
        let r = source.rate_at(tau0, p_bar, &settings()).unwrap();
        ok &= r < 0.01 * best;
        parts.push(format!("tau0 {tau0}: {r:.3e} ({:.2}% of peak, limit 1%)", 100.0 * r / best));
    }
    report(9, ok, parts.join("; "));
}
