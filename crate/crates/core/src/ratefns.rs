//! Per-epoch rate model. Rates are in nats per channel use; the `(1 - tau)/2`
//! prefactor accounts for the two information-transfer phases sharing what is
//! left of the epoch after harvesting.

use crate::channel::EpochChannel;
use crate::error::{Error, Result};

/// Relative tolerance under which `c1` and `c2` count as tied.
pub const TIE_REL_TOL: f64 = 1e-12;

/// Decision variables of one epoch plus the quantities they imply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochAllocation {
    /// Fraction of the epoch spent harvesting.
    pub tau: f64,
    /// Relay output power.
    pub p: f64,
    /// Energy variable `p (1 + tau) / 2`, the relay's consumption per unit time.
    pub e: f64,
    /// Energy collected by the source, `N0 p x tau T`.
    pub harvested_energy: f64,
    /// Source transmit power during the first information phase.
    pub source_power: f64,
}

impl EpochAllocation {
    pub fn new(tau: f64, p: f64, ch: &EpochChannel, block_duration: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&tau) {
            return Err(Error::invalid("tau", format!("must lie in [0, 1), got {tau}")));
        }
        if !(p >= 0.0) || !p.is_finite() {
            return Err(Error::invalid("p", format!("must be non-negative, got {p}")));
        }
        // N0 x = a / (2x), so the channel alone fixes the harvested energy.
        let n0_x = if ch.x > 0.0 { ch.a / (2.0 * ch.x) } else { 0.0 };
        let harvested_energy = if p * tau == 0.0 { 0.0 } else { n0_x * p * tau * block_duration };
        let source_power = if p * tau == 0.0 { 0.0 } else { 2.0 * n0_x * p * tau / (1.0 - tau) };
        Ok(Self {
            tau,
            p,
            e: energy(tau, p),
            harvested_energy,
            source_power,
        })
    }

    pub fn idle(tau: f64) -> Self {
        Self {
            tau,
            p: 0.0,
            e: 0.0,
            harvested_energy: 0.0,
            source_power: 0.0,
        }
    }
}

/// `e = p (1 + tau) / 2`
#[inline]
pub fn energy(tau: f64, p: f64) -> f64 {
    p * (1.0 + tau) / 2.0
}

/// Source power `2 N0 p x tau / (1 - tau)` when it spends everything it
/// harvested during the first information phase.
pub fn source_tx_power(p: f64, x: f64, tau: f64, noise_power: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::invalid("tau", format!("must lie in [0, 1), got {tau}")));
    }
    if !(p >= 0.0) {
        return Err(Error::invalid("p", format!("must be non-negative, got {p}")));
    }
    Ok(2.0 * noise_power * p * x * tau / (1.0 - tau))
}

/// Source -> relay capacity, `(1 - tau)/2 * ln(1 + p a tau / (1 - tau))`.
/// Takes its limit 0 at `tau = 1`.
#[inline]
pub fn c1(tau: f64, p: f64, a: f64) -> f64 {
    if tau >= 1.0 || p * a * tau == 0.0 {
        return 0.0;
    }
    let one_minus = 1.0 - tau;
    0.5 * one_minus * (p * a * tau / one_minus).ln_1p()
}

/// Relay -> destination capacity, `(1 - tau)/2 * ln(1 + p y)`.
#[inline]
pub fn c2(tau: f64, p: f64, y: f64) -> f64 {
    if tau >= 1.0 {
        return 0.0;
    }
    0.5 * (1.0 - tau) * (p * y).ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bottleneck {
    /// The harvest-powered source -> relay hop limits the rate.
    EhLink,
    RelayLink,
    Tie,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRate {
    pub c1: f64,
    pub c2: f64,
    pub rate: f64,
    pub bottleneck: Bottleneck,
}

impl EpochRate {
    pub fn from_capacities(c1: f64, c2: f64) -> Self {
        let scale = c1.max(c2);
        let bottleneck = if (c1 - c2).abs() <= TIE_REL_TOL * scale {
            Bottleneck::Tie
        } else if c1 < c2 {
            Bottleneck::EhLink
        } else {
            Bottleneck::RelayLink
        };
        Self {
            c1,
            c2,
            rate: c1.min(c2),
            bottleneck,
        }
    }
}

pub fn epoch_rate(alloc: &EpochAllocation, ch: &EpochChannel) -> EpochRate {
    EpochRate::from_capacities(c1(alloc.tau, alloc.p, ch.a), c2(alloc.tau, alloc.p, ch.y))
}

/// Arithmetic mean of the epoch rates.
pub fn average_rate(rates: &[EpochRate]) -> Result<f64> {
    if rates.is_empty() {
        return Err(Error::Empty("epoch rates"));
    }
    Ok(mean(rates.iter().map(|r| r.rate)))
}

/// Compensated (Neumaier) mean; insensitive to summation order at the
/// 1e-12 level even for millions of terms.
pub(crate) fn mean<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut n = 0usize;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
        n += 1;
    }
    if n == 0 {
        f64::NAN
    } else {
        (sum + comp) / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    #[test]
    fn source_power_values() {
        assert_eq!(source_tx_power(2.0, 3.0, 0.5, 1.0).unwrap(), 12.0);
        assert_eq!(source_tx_power(0.0, 3.0, 0.5, 1.0).unwrap(), 0.0);
        assert!(source_tx_power(1.0, 1.0, 1e-12, 1.0).unwrap() < 1e-11);
        assert!(source_tx_power(1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn capacity_values() {
        assert_abs_diff_eq!(c1(0.5, 2.0, 4.0), 0.25 * 9f64.ln(), epsilon = 1e-15);
        assert_eq!(c1(0.0, 2.0, 4.0), 0.0);
        assert_eq!(c1(0.5, 0.0, 4.0), 0.0);
        assert_abs_diff_eq!(c2(0.5, 3.0, 1.0), 0.25 * 4f64.ln(), epsilon = 1e-15);
        assert!(c2(1.0 - 1e-12, 3.0, 1.0) < 1e-11);
        assert_eq!(c2(0.5, 0.0, 1.0), 0.0);
    }

    #[test]
    fn epoch_rate_cases() {
        let ch = EpochChannel::from_coefficients(4.0, 1.0);
        let alloc = EpochAllocation::new(0.5, 1.0, &ch, 1.0).unwrap();
        let r = epoch_rate(&alloc, &ch);
        assert_abs_diff_eq!(r.c1, 0.25 * 5f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(r.c2, 0.25 * 2f64.ln(), epsilon = 1e-15);
        assert_eq!(r.rate, r.c2);
        assert_eq!(r.bottleneck, Bottleneck::RelayLink);

        let tau = ch.y / (ch.a + ch.y);
        let r = epoch_rate(&EpochAllocation::new(tau, 0.7, &ch, 1.0).unwrap(), &ch);
        assert_eq!(r.bottleneck, Bottleneck::Tie);

        let r = epoch_rate(&EpochAllocation::new(0.5, 0.0, &ch, 1.0).unwrap(), &ch);
        assert_eq!(r.rate, 0.0);
    }

    #[test]
    fn allocation_bookkeeping() {
        let ch = EpochChannel::from_gains(3.0, 1.0, 1.0);
        let alloc = EpochAllocation::new(0.5, 2.0, &ch, 1.0).unwrap();
        assert_eq!(alloc.e, 1.5);
        assert_relative_eq!(alloc.harvested_energy, 3.0, max_relative = 1e-15);
        assert_relative_eq!(alloc.source_power, 12.0, max_relative = 1e-15);
        let idle = EpochAllocation::new(0.0, 2.0, &ch, 1.0).unwrap();
        assert_eq!(idle.harvested_energy, 0.0);
        let off = EpochAllocation::new(0.5, 0.0, &ch, 1.0).unwrap();
        assert_eq!((off.e, off.harvested_energy), (0.0, 0.0));
        assert!(EpochAllocation::new(1.0, 1.0, &ch, 1.0).is_err());
        assert!(EpochAllocation::new(0.5, -1.0, &ch, 1.0).is_err());
    }

    #[test]
    fn averages() {
        assert!(average_rate(&[]).is_err());
        let zero = EpochRate::from_capacities(0.0, 0.0);
        assert_eq!(average_rate(&[zero, zero]).unwrap(), 0.0);
        let a = EpochRate::from_capacities(0.2, 0.3);
        assert_eq!(average_rate(&[a]).unwrap(), 0.2);
        let b = EpochRate::from_capacities(0.5, 0.4);
        assert_abs_diff_eq!(average_rate(&[a, b]).unwrap(), 0.3, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn capacities_meet_at_intersection(la in -4.0f64..3.0, ly in -4.0f64..3.0, p in 0.0f64..1e3) {
            let (a, y) = (10f64.powf(la), 10f64.powf(ly));
            let tau = y / (a + y);
            let (u, v) = (c1(tau, p, a), c2(tau, p, y));
            // Rounding tau costs eps / (1 - tau) relative accuracy in the
            // odds tau / (1 - tau); nothing downstream can recover it.
            let tol = 1e-12f64.max(4.0 * f64::EPSILON / (1.0 - tau));
            prop_assert!((u - v).abs() <= tol * u.max(v).max(f64::MIN_POSITIVE));
        }

        #[test]
        fn capacities_concave_nondecreasing_in_p(tau in 0.01f64..0.99, a in 0.01f64..10.0, y in 0.01f64..10.0, p in 0.0f64..50.0) {
            let h = 1e-2;
            let curves = [
                [c1(tau, p, a), c1(tau, p + h, a), c1(tau, p + 2.0 * h, a)],
                [c2(tau, p, y), c2(tau, p + h, y), c2(tau, p + 2.0 * h, y)],
            ];
            for [lo, mid, hi] in curves {
                prop_assert!(mid >= lo && hi >= mid);
                prop_assert!(hi - 2.0 * mid + lo <= 1e-9);
            }
        }

        #[test]
        fn average_is_permutation_invariant(values in proptest::collection::vec(0.0f64..5.0, 1..200), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let rates: Vec<_> = values.iter().map(|&v| EpochRate::from_capacities(v, v + 1.0)).collect();
            let mut shuffled = rates.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let (x, y) = (average_rate(&rates).unwrap(), average_rate(&shuffled).unwrap());
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300));
        }

        #[test]
        fn energy_identity(tau in 0.0f64..0.999, p in 0.0f64..100.0) {
            let ch = EpochChannel::from_coefficients(1.0, 1.0);
            let alloc = EpochAllocation::new(tau, p, &ch, 1.0).unwrap();
            prop_assert_eq!(alloc.e, p * (1.0 + tau) / 2.0);
            prop_assert_eq!(alloc.p == 0.0, alloc.e == 0.0);
        }
    }
}
