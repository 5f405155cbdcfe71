//! Scalar numerical machinery shared by the allocation schemes.
//!
//! Everything here works on plain `Fn(f64) -> f64` maps. Maps handed to these
//! routines must be pure; the solvers may evaluate them in any order.

use crate::error::{Error, Result};

/// A closed search interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::invalid("bracket", format!("non-finite end in [{lo}, {hi}]")));
        }
        if lo >= hi {
            return Err(Error::invalid("bracket", format!("need lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iters: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_iters: 200,
        }
    }
}

impl SolverSettings {
    /// Settings for [`integrate_semiinf`]: relative target 1e-8, up to 2000
    /// interval subdivisions.
    pub fn quadrature() -> Self {
        Self {
            abs_tol: 1e-15,
            rel_tol: 1e-8,
            max_iters: 2000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::invalid("settings", "tolerances must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("settings", "max_iters must be at least 1"));
        }
        Ok(())
    }
}

/// Bisection on a certified sign change.
///
/// Stops once the bracket is narrower than `abs_tol + rel_tol * |mid|` and
/// returns its midpoint; the sign change is certified within that distance.
pub fn bisect_root<F>(f: F, bracket: Bracket, settings: &SolverSettings) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    settings.validate()?;
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if !(f_lo * f_hi < 0.0) {
        return Err(Error::Bracket { lo, hi, f_lo, f_hi });
    }
    let lo_negative = f_lo < 0.0;
    for _ in 0..settings.max_iters {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= settings.abs_tol + settings.rel_tol * mid.abs() {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence {
        iters: settings.max_iters,
        last: 0.5 * (lo + hi),
    })
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section refinement of a maximum inside `bracket`, assuming the map is
/// unimodal there. Returns `(argmax, max)`.
pub fn golden_refine<F>(f: F, bracket: Bracket, settings: &SolverSettings) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    settings.validate()?;
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..settings.max_iters {
        let mid = 0.5 * (a + b);
        if b - a <= settings.abs_tol + settings.rel_tol * mid.abs() {
            let (x, fx) = if fc >= fd { (c, fc) } else { (d, fd) };
            return Ok((x, fx));
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    Err(Error::NoConvergence {
        iters: settings.max_iters,
        last: 0.5 * (a + b),
    })
}

/// Maximizes `f` on `bracket`: a 101-point pre-scan locates the best cell,
/// then golden-section search refines within the neighbouring cells.
pub fn golden_max<F>(f: F, bracket: Bracket, settings: &SolverSettings) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let grid = linspace(bracket.lo, bracket.hi, 101);
    let values: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
    refine_around_best(&f, &grid, &values, settings)
}

/// Golden refinement around the best point of an already evaluated grid.
pub(crate) fn refine_around_best<F>(
    f: &F,
    grid: &[f64],
    values: &[f64],
    settings: &SolverSettings,
) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let best = argmax(values).ok_or(Error::Empty("grid"))?;
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    if lo >= hi {
        return Ok((grid[best], values[best]));
    }
    let (x, fx) = golden_refine(f, Bracket::new(lo, hi)?, settings)?;
    if fx >= values[best] {
        Ok((x, fx))
    } else {
        Ok((grid[best], values[best]))
    }
}

fn argmax(values: &[f64]) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_nan())
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

/// Finds `lambda > 0` with `g(lambda) = target` for a non-increasing `g`.
///
/// The bracket starts at `[initial_hi / 2, initial_hi]`; `hi` is doubled until
/// `g(hi) < target` and `lo` halved until `g(lo) >= target`. The result
/// carries the certificate `g(lambda - d) >= target >= g(lambda + d)` with
/// `d = rel_tol * lambda`.
pub fn solve_monotone<G>(g: G, target: f64, initial_hi: f64, settings: &SolverSettings) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    try_solve_monotone(|l| Ok(g(l)), target, initial_hi, settings)
}

/// [`solve_monotone`] for maps that can fail; the first error aborts the search.
pub fn try_solve_monotone<G>(g: G, target: f64, initial_hi: f64, settings: &SolverSettings) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    settings.validate()?;
    if !(target > 0.0) || !target.is_finite() {
        return Err(Error::invalid("target", format!("must be positive and finite, got {target}")));
    }
    if !(initial_hi > 0.0) || !initial_hi.is_finite() {
        return Err(Error::invalid("initial_hi", format!("must be positive, got {initial_hi}")));
    }
    // Enough doublings/halvings to sweep the whole f64 exponent range.
    const MAX_EXPANSIONS: usize = 2100;

    let mut hi = initial_hi;
    let mut expansions = 0;
    while g(hi)? >= target {
        hi *= 2.0;
        expansions += 1;
        if expansions > MAX_EXPANSIONS || !hi.is_finite() {
            return Err(Error::Infeasible(format!(
                "g stays above target {target} for every lambda"
            )));
        }
    }
    let mut lo = hi * 0.5;
    expansions = 0;
    while g(lo)? < target {
        hi = lo;
        lo *= 0.5;
        expansions += 1;
        if expansions > MAX_EXPANSIONS || lo <= f64::MIN_POSITIVE {
            return Err(Error::Infeasible(format!(
                "g stays below target {target} for every lambda > 0"
            )));
        }
    }

    // Geometric midpoints while the bracket spans decades, arithmetic after.
    let max_iters = settings.max_iters.max(200);
    for _ in 0..max_iters {
        let mid = if hi > 4.0 * lo { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if hi - lo <= settings.rel_tol * mid {
            return Ok(mid);
        }
        if g(mid)? >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence {
        iters: max_iters,
        last: 0.5 * (lo + hi),
    })
}

/// Shape of an integrand's tail, used to pick the substitution that maps
/// `[lower, inf)` onto `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// Tails like `exp(-t / scale)`: `t = lower - scale * ln u`.
    Exponential { scale: f64 },
    /// Tails like `exp(-sqrt(t / scale))`: `t = lower + scale * (ln u)^2`.
    /// Also absorbs an integrable `1/sqrt(t - lower)` singularity at the
    /// lower end.
    StretchedExponential { scale: f64 },
}

impl Tail {
    fn scale(&self) -> f64 {
        match *self {
            Tail::Exponential { scale } | Tail::StretchedExponential { scale } => scale,
        }
    }

    /// Returns `(t, dt/du)` magnitude for `u` in `(0, 1)`.
    #[inline]
    fn map(&self, lower: f64, u: f64) -> (f64, f64) {
        let ln_u = u.ln();
        match *self {
            Tail::Exponential { scale } => (lower - scale * ln_u, scale / u),
            Tail::StretchedExponential { scale } => {
                (lower + scale * ln_u * ln_u, -2.0 * scale * ln_u / u)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// Adaptive Gauss-Kronrod (7/15) quadrature of `f` over `[lower, inf)`.
///
/// The interval is mapped onto `(0, 1]` according to `tail`, then the
/// subinterval with the largest error estimate is bisected until the total
/// estimate drops below `max(abs_tol, rel_tol * |value|)`. `max_iters` bounds
/// the number of subdivisions.
pub fn integrate_semiinf<F>(f: F, lower: f64, tail: Tail, settings: &SolverSettings) -> Result<Integral>
where
    F: Fn(f64) -> f64,
{
    settings.validate()?;
    if !lower.is_finite() {
        return Err(Error::invalid("lower", "must be finite"));
    }
    if !(tail.scale() > 0.0) || !tail.scale().is_finite() {
        return Err(Error::invalid("tail scale", format!("must be positive, got {}", tail.scale())));
    }
    let g = |u: f64| {
        let (t, jac) = tail.map(lower, u);
        if !t.is_finite() || !jac.is_finite() {
            return 0.0;
        }
        let v = f(t);
        if v == 0.0 {
            0.0
        } else {
            v * jac
        }
    };

    let mut segments = vec![gk15(&g, 0.0, 1.0)];
    let mut value = segments[0].value;
    let mut error = segments[0].error;
    for _ in 0..settings.max_iters {
        if !value.is_finite() {
            break;
        }
        if error <= settings.abs_tol.max(settings.rel_tol * value.abs()) {
            return Ok(Integral { value, error });
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .map(|(i, _)| i)
            .expect("segments never empty");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // Interval exhausted at machine resolution.
            segments.push(Segment { error: 0.0, ..seg });
        } else {
            segments.push(gk15(&g, seg.a, mid));
            segments.push(gk15(&g, mid, seg.b));
        }
        value = segments.iter().map(|s| s.value).sum();
        error = segments.iter().map(|s| s.error).sum();
    }
    if value.is_finite() && error <= settings.abs_tol.max(settings.rel_tol * value.abs()) {
        return Ok(Integral { value, error });
    }
    Err(Error::Quadrature { estimate: value, error })
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd Kronrod nodes (indices 1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = g(center);
    let mut kronrod = f_center * WGK[7];
    let mut gauss = f_center * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = g(center - dx) + g(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}
