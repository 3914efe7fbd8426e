//! Closed-form quantities of the deterministic logistic map and the
//! comparison functions used to reason about the stochastic one.
//!
//! Everything here is a pure function of its arguments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{step_unchecked, ParameterDistribution, LAMBDA_MAX};

/// Period-doubling from the fixed point to the 2-cycle.
pub const LAMBDA_C2: f64 = 3.0;
/// `1 + √6`, period-2 to period-4.
pub const LAMBDA_C4: f64 = 3.449_489_742_783_178;
/// End of the period-4 window (as tabulated, no further digits known).
pub const LAMBDA_C4_END: f64 = 3.54409;
/// Accumulation point of the period-doubling cascade.
pub const LAMBDA_CASCADE: f64 = 3.56995;
/// Onset of the period-3 window.
pub const LAMBDA_C3: f64 = 3.8284;
/// `1 + √5`, where the smaller period-2 point equals the critical point 1/2.
pub const LAMBDA_CRITICAL_P2: f64 = 3.236_067_977_499_79;

/// Non-zero fixed point `(λ - 1) / λ`.
pub fn nonzero_fixed_point(lambda: f64) -> f64 {
    (lambda - 1.0) / lambda
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=LAMBDA_MAX).contains(&lambda) {
        return Err(Error::Domain(format!("lambda = {lambda} outside [0, 4]")));
    }
    Ok(())
}

/// Fixed points of `S_λ` in `[0, 1]`.
pub fn fixed_points(lambda: f64) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    if lambda <= 1.0 {
        Ok(vec![0.0])
    } else {
        Ok(vec![0.0, nonzero_fixed_point(lambda)])
    }
}

/// The period-2 orbit `{p, q}` of `S_λ`, `p ≤ q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Period2Pair {
    pub p: f64,
    pub q: f64,
    pub lambda: f64,
}

impl Period2Pair {
    pub fn average(&self) -> f64 {
        0.5 * (self.p + self.q)
    }
}

pub fn period2_points(lambda: f64) -> Result<Period2Pair> {
    check_lambda(lambda)?;
    if lambda < LAMBDA_C2 {
        return Err(Error::Domain(format!(
            "period-2 points need lambda >= 3 (real discriminant), got {lambda}"
        )));
    }
    let disc = ((lambda - 3.0) * (lambda + 1.0)).sqrt();
    Ok(Period2Pair {
        p: ((lambda + 1.0) - disc) / (2.0 * lambda),
        q: ((lambda + 1.0) + disc) / (2.0 * lambda),
        lambda,
    })
}

/// Mean of the period-2 orbit, `(λ + 1) / (2λ)`.
pub fn period2_average(lambda: f64) -> Result<f64> {
    period2_points(lambda)?;
    Ok((lambda + 1.0) / (2.0 * lambda))
}

/// Dynamical regime of the deterministic map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Extinction,
    Period1,
    Period2,
    Period4,
    CascadeOrBeyond,
}

impl Regime {
    pub fn of(lambda: f64) -> Regime {
        if lambda <= 1.0 {
            Regime::Extinction
        } else if lambda <= LAMBDA_C2 {
            Regime::Period1
        } else if lambda <= LAMBDA_C4 {
            Regime::Period2
        } else if lambda <= LAMBDA_C4_END {
            Regime::Period4
        } else {
            Regime::CascadeOrBeyond
        }
    }

    /// Period of the attracting cycle, when the regime has one.
    pub fn period(&self) -> Option<usize> {
        match self {
            Regime::Extinction | Regime::Period1 => Some(1),
            Regime::Period2 => Some(2),
            Regime::Period4 => Some(4),
            Regime::CascadeOrBeyond => None,
        }
    }

    /// Upper boundary of this regime (`None` for the last one).
    fn upper_boundary(&self) -> Option<f64> {
        match self {
            Regime::Extinction => Some(1.0),
            Regime::Period1 => Some(LAMBDA_C2),
            Regime::Period2 => Some(LAMBDA_C4),
            Regime::Period4 => Some(LAMBDA_C4_END),
            Regime::CascadeOrBeyond => None,
        }
    }
}

/// Classifies `[lo, hi]`; intervals crossing a regime boundary are rejected.
pub fn classify_regime(lambda_lo: f64, lambda_hi: f64) -> Result<Regime> {
    check_lambda(lambda_lo)?;
    check_lambda(lambda_hi)?;
    if lambda_lo > lambda_hi {
        return Err(Error::Domain(format!(
            "empty parameter interval [{lambda_lo}, {lambda_hi}]"
        )));
    }
    let lo = Regime::of(lambda_lo);
    let hi = Regime::of(lambda_hi);
    if lo != hi {
        return Err(Error::Straddle {
            lo: lambda_lo,
            hi: lambda_hi,
            boundary: lo.upper_boundary().unwrap_or(LAMBDA_MAX),
        });
    }
    Ok(lo)
}

pub const DETECT_BURN_IN: usize = 10_000;
pub const DETECT_TOL: f64 = 1e-9;
pub const MAX_DETECT_PERIOD: usize = 64;

/// Smallest `k ≤ 64` such that the orbit of the critical point repeats with
/// period `k` to within `tol` over a full window of 64 consecutive states.
pub fn detect_period(lambda: f64, tol: f64, max_iter: usize) -> Result<usize> {
    check_lambda(lambda)?;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be > 0, got {tol}")));
    }
    let mut x = 0.5;
    for _ in 0..DETECT_BURN_IN {
        x = step_unchecked(lambda, x);
    }
    const WINDOW: usize = 2 * MAX_DETECT_PERIOD;
    let mut buf = Vec::with_capacity(WINDOW);
    let mut used = 0;
    while used < max_iter {
        buf.clear();
        for _ in 0..WINDOW {
            x = step_unchecked(lambda, x);
            buf.push(x);
        }
        used += WINDOW;
        let found = (1..=MAX_DETECT_PERIOD)
            .find(|&k| (0..MAX_DETECT_PERIOD).all(|i| (buf[i + k] - buf[i]).abs() < tol));
        if let Some(k) = found {
            return Ok(k);
        }
    }
    Err(Error::NoConvergence { lambda, max_iter })
}

/// Points of the attracting cycle of the given period, ascending.
///
/// The cycle is reached by iterating the critical point, then each point is
/// polished with Newton steps on `S^period(x) - x`.
pub fn periodic_orbit(lambda: f64, period: usize) -> Result<Vec<f64>> {
    let detected = detect_period(lambda, DETECT_TOL, 1_000_000)?;
    if detected != period {
        return Err(Error::PeriodMismatch {
            lambda,
            expected: period,
            detected,
        });
    }
    let mut x = 0.5;
    for _ in 0..DETECT_BURN_IN + 5_000 {
        x = step_unchecked(lambda, x);
    }
    for _ in 0..8 {
        let (mut y, mut dy) = (x, 1.0);
        for _ in 0..period {
            dy *= lambda * (1.0 - 2.0 * y);
            y = step_unchecked(lambda, y);
        }
        let denom = dy - 1.0;
        if denom == 0.0 {
            break;
        }
        let next = x - (y - x) / denom;
        if !(0.0..=1.0).contains(&next) || next == x {
            break;
        }
        x = next;
    }
    let mut points = Vec::with_capacity(period);
    for _ in 0..period {
        points.push(x);
        x = step_unchecked(lambda, x);
    }
    points.sort_by(f64::total_cmp);
    Ok(points)
}

/// Mean over one period of the attracting cycle.
pub fn cycle_mean(lambda: f64, period: usize) -> Result<f64> {
    let pts = periodic_orbit(lambda, period)?;
    Ok(pts.iter().sum::<f64>() / pts.len() as f64)
}

/// Position of the noise window relative to `1 + √5`, decided by where the
/// critical point sits relative to `[p₊, p₋]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowCase {
    /// `p₊ ≤ p₋ < 1/2`: the map is increasing on `[p₊, p₋]`.
    LambdaAbove,
    /// `1/2 < p₊ ≤ p₋`: the map is decreasing on `[p₊, p₋]`.
    LambdaBelow,
    /// `1/2 ∈ [p₊, p₋]`.
    LambdaEqual,
}

/// Two disjoint closed intervals bounding the support of the invariant
/// measure in the period-2 regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportIntervals {
    pub p_lo: f64,
    pub p_hi: f64,
    pub q_lo: f64,
    pub q_hi: f64,
    pub case: WindowCase,
}

impl SupportIntervals {
    pub fn contains(&self, x: f64, slack: f64) -> bool {
        (self.p_lo - slack..=self.p_hi + slack).contains(&x)
            || (self.q_lo - slack..=self.q_hi + slack).contains(&x)
    }
}

fn check_period2_window(lambda_bar: f64, delta_lambda: f64) -> Result<(f64, f64)> {
    if !(delta_lambda >= 0.0) {
        return Err(Error::Domain(format!(
            "half-width must be >= 0, got {delta_lambda}"
        )));
    }
    let (a, b) = (lambda_bar - delta_lambda, lambda_bar + delta_lambda);
    if !(a > LAMBDA_C2 && b < LAMBDA_C4) {
        return Err(Error::Regime(format!(
            "window [{a}, {b}] must lie inside the period-2 regime (3, 1+√6)"
        )));
    }
    Ok((a, b))
}

/// `I_p = [S_a(q₊), S_b(q₋)]` and `I_q = [min{q₋, S_a(p₊)}, max S_b(·)]`
/// where the max runs over `p₊`, `p₋` and, when it lies in `[p₊, p₋]`, the
/// critical point.
pub fn support_intervals(lambda_bar: f64, delta_lambda: f64) -> Result<SupportIntervals> {
    let (a, b) = check_period2_window(lambda_bar, delta_lambda)?;
    let plus = period2_points(b)?;
    let minus = period2_points(a)?;
    let (p_plus, q_plus) = (plus.p, plus.q);
    let (p_minus, q_minus) = (minus.p, minus.q);

    let case = if p_minus < 0.5 {
        WindowCase::LambdaAbove
    } else if p_plus > 0.5 {
        WindowCase::LambdaBelow
    } else {
        WindowCase::LambdaEqual
    };

    let p_lo = step_unchecked(a, q_plus);
    let p_hi = step_unchecked(b, q_minus);
    let q_lo = q_minus.min(step_unchecked(a, p_plus));
    let mut q_hi = step_unchecked(b, p_plus).max(step_unchecked(b, p_minus));
    if case == WindowCase::LambdaEqual {
        q_hi = q_hi.max(b / 4.0);
    }
    Ok(SupportIntervals {
        p_lo,
        p_hi,
        q_lo,
        q_hi,
        case,
    })
}

/// One labeled value of the ordering chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Labeled {
    pub label: &'static str,
    pub value: f64,
}

/// Evaluates and checks
/// `p₊ < p₋ ≤ x_{p,max} < x*(a) < x*(b) < x_{q,min} ≤ q₋ < q₊`.
///
/// For `Δλ = 0` the strict links between `±` quantities collapse to
/// equalities and are checked as `≤` up to a few ulp.
pub fn check_ordering(lambda_bar: f64, delta_lambda: f64) -> Result<Vec<Labeled>> {
    let (a, b) = check_period2_window(lambda_bar, delta_lambda)?;
    let iv = support_intervals(lambda_bar, delta_lambda)?;
    let plus = period2_points(b)?;
    let minus = period2_points(a)?;
    let chain = vec![
        Labeled {
            label: "p_plus",
            value: plus.p,
        },
        Labeled {
            label: "p_minus",
            value: minus.p,
        },
        Labeled {
            label: "x_p_max",
            value: iv.p_hi,
        },
        Labeled {
            label: "x_star_minus",
            value: nonzero_fixed_point(a),
        },
        Labeled {
            label: "x_star_plus",
            value: nonzero_fixed_point(b),
        },
        Labeled {
            label: "x_q_min",
            value: iv.q_lo,
        },
        Labeled {
            label: "q_minus",
            value: minus.q,
        },
        Labeled {
            label: "q_plus",
            value: plus.q,
        },
    ];
    // links 1 and 5 are non-strict in general
    let degenerate = delta_lambda == 0.0;
    for (i, w) in chain.windows(2).enumerate() {
        let (l, r) = (w[0].value, w[1].value);
        let loose = i == 1 || i == 5 || (degenerate && i != 2 && i != 4);
        let ok = if loose {
            l <= r + 8.0 * f64::EPSILON * r.abs().max(l.abs())
        } else {
            l < r
        };
        if !ok {
            return Err(Error::Ordering(format!(
                "{} = {l} must be {} {} = {r} (lambda_bar = {lambda_bar}, delta = {delta_lambda})",
                w[0].label,
                if loose { "<=" } else { "<" },
                w[1].label
            )));
        }
    }
    Ok(chain)
}

/// Values of the comparison functions at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonValues {
    /// `F(x) = S²(x) - x`
    pub f: f64,
    /// `h(x) = λ̄x(1-x) - λ̄²(x(1-x))² + ε`
    pub h: f64,
    /// `H(x) = λ̄h(x) - x`
    pub big_h: f64,
}

pub fn comparison_functions(lambda_bar: f64, epsilon: f64, x: f64) -> ComparisonValues {
    let s = step_unchecked(lambda_bar, x);
    let f = step_unchecked(lambda_bar, s) - x;
    let h = h_value(lambda_bar, epsilon, x);
    ComparisonValues {
        f,
        h,
        big_h: lambda_bar * h - x,
    }
}

// factored as S(x)(1 - S(x)) + ε; the expanded form cancels badly near x = 1/2
fn h_value(lambda_bar: f64, epsilon: f64, x: f64) -> f64 {
    let s = step_unchecked(lambda_bar, x);
    s * (1.0 - s) + epsilon
}

fn big_h_value(lambda_bar: f64, epsilon: f64, x: f64) -> f64 {
    lambda_bar * h_value(lambda_bar, epsilon, x) - x
}

/// `h''(x) = -2(λ̄ + λ̄²) + 12λ̄²(x - x²)`; independent of `ε`.
pub fn h_second_derivative(lambda_bar: f64, x: f64) -> f64 {
    -2.0 * (lambda_bar + lambda_bar * lambda_bar) + 12.0 * lambda_bar * lambda_bar * (x - x * x)
}

/// Whether `h'' > 0` on all of `[lo, hi]`. `h''` is concave in `x`, so its
/// minimum over an interval sits at an endpoint.
pub fn convexity_on_interval(lambda_bar: f64, interval: (f64, f64)) -> Result<bool> {
    let (lo, hi) = interval;
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(Error::Domain(format!(
            "interval [{lo}, {hi}] must be a sub-interval of [0, 1]"
        )));
    }
    let min = h_second_derivative(lambda_bar, lo).min(h_second_derivative(lambda_bar, hi));
    Ok(min > 0.0)
}

/// Zeros of `H`, ascending: `(z_H, p_H, x*_H, q_H)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HRoots {
    pub z: f64,
    pub p: f64,
    pub x_star: f64,
    pub q: f64,
}

const ROOT_SCAN_LO: f64 = -0.5;
const ROOT_SCAN_HI: f64 = 1.2;
const ROOT_SCAN_CELLS: usize = 10_000;
const ROOT_TOL: f64 = 1e-12;

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Real zeros of `f` on `[lo, hi]` from sign changes over `cells` subintervals.
fn bracketed_roots(f: impl Fn(f64) -> f64 + Copy, lo: f64, hi: f64, cells: usize) -> Vec<f64> {
    let dx = (hi - lo) / cells as f64;
    let mut roots = Vec::new();
    let mut x0 = lo;
    let mut f0 = f(x0);
    let mut skip_next = false;
    for i in 1..=cells {
        let x1 = lo + dx * i as f64;
        let f1 = f(x1);
        if f0 == 0.0 {
            if !skip_next {
                roots.push(x0);
            }
            skip_next = false;
        } else if f1 == 0.0 {
            roots.push(x1);
            skip_next = true;
        } else if (f0 < 0.0) != (f1 < 0.0) {
            roots.push(bisect(f, x0, x1));
        }
        x0 = x1;
        f0 = f1;
    }
    if f0 == 0.0 && !skip_next {
        roots.push(x0);
    }
    roots
}

pub fn h_function_roots(lambda_bar: f64, epsilon: f64) -> Result<HRoots> {
    if !(epsilon >= 0.0) {
        return Err(Error::Domain(format!(
            "epsilon must be >= 0, got {epsilon}"
        )));
    }
    let roots = bracketed_roots(
        |x| big_h_value(lambda_bar, epsilon, x),
        ROOT_SCAN_LO,
        ROOT_SCAN_HI,
        ROOT_SCAN_CELLS,
    );
    if roots.len() != 4 {
        return Err(Error::RootCount { found: roots.len() });
    }
    Ok(HRoots {
        z: roots[0],
        p: roots[1],
        x_star: roots[2],
        q: roots[3],
    })
}

/// Inputs to the stability-in-distribution criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityPreconditions {
    pub e_log_lambda: f64,
    pub finite_log4_term: bool,
}

impl StabilityPreconditions {
    pub fn holds(&self) -> bool {
        self.e_log_lambda > 0.0 && self.finite_log4_term
    }
}

fn x_log_x(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// `E[log λ]` in closed form, and whether `E[|log(4 - λ)|]` is finite.
pub fn stability_preconditions(dist: &ParameterDistribution) -> StabilityPreconditions {
    let (a, b) = (dist.lower(), dist.upper());
    if dist.is_degenerate() {
        return StabilityPreconditions {
            e_log_lambda: a.ln(),
            finite_log4_term: a < LAMBDA_MAX,
        };
    }
    // ∫ ln λ dλ = λ ln λ - λ; the log-singularity at 4 is integrable
    let e_log_lambda = (x_log_x(b) - x_log_x(a) - (b - a)) / (b - a);
    StabilityPreconditions {
        e_log_lambda,
        finite_log4_term: true,
    }
}

/// Center and width of the trapping band `[x*(λ̄-Δλ), x*(λ̄+Δλ)]` in the
/// period-1 regime.
pub fn band_geometry(lambda_bar: f64, delta_lambda: f64) -> Result<(f64, f64)> {
    let (a, b) = (lambda_bar - delta_lambda, lambda_bar + delta_lambda);
    if !(delta_lambda >= 0.0 && a > 1.0 && b < LAMBDA_C2) {
        return Err(Error::Regime(format!(
            "window [{a}, {b}] must lie inside the period-1 regime (1, 3)"
        )));
    }
    let l2 = lambda_bar * lambda_bar;
    let d2 = delta_lambda * delta_lambda;
    let center = (l2 - lambda_bar - d2) / (l2 - d2);
    let width = 2.0 * delta_lambda / (b * a);
    Ok((center, width))
}
