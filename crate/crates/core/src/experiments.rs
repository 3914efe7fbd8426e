//! End-to-end experiments: bifurcation diagrams, evolution of the state
//! distribution, stochastic-vs-deterministic mean comparisons, the
//! period-2 verification suite and the flip-flop scanner.
//!
//! Every experiment is a pure function of its configuration and seed.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{
    self, check_ordering, classify_regime, convexity_on_interval, cycle_mean, detect_period,
    h_function_roots, h_second_derivative, nonzero_fixed_point, period2_points, support_intervals,
    HRoots, Regime, SupportIntervals, LAMBDA_C4_END, LAMBDA_CASCADE,
};
use crate::error::{Error, Result};
use crate::map::{keyed_rng, step_unchecked, ParameterDistribution};
use crate::measure::{
    converged_ensemble, moments_of, right_derivative_profile, split_peaks, uniform_ensemble,
    Ensemble, Histogram, McConfig, Moments, ProfilePoint,
};

/// Evenly spaced parameter values `from, from + step, ..., ≤ to`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

impl LambdaGrid {
    pub fn new(from: f64, to: f64, step: f64) -> Result<Self> {
        if !(from.is_finite() && to.is_finite() && step.is_finite()) {
            return Err(Error::Domain("grid bounds must be finite".into()));
        }
        if !(step > 0.0) || from > to {
            return Err(Error::Domain(format!(
                "grid needs from <= to and step > 0, got from={from} to={to} step={step}"
            )));
        }
        Ok(Self { from, to, step })
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.to - self.from) / self.step + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|i| {
                let v = self.from + i as f64 * self.step;
                ((v * 1e12).round() / 1e12).min(self.to)
            })
            .collect()
    }
}

pub const BIFURCATION_STEP: f64 = 0.001;
pub const BIFURCATION_ITERATIONS: usize = 1000;
pub const BIFURCATION_INITIALS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BifurcationKind {
    Deterministic,
    Stochastic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationRow {
    pub parameter: f64,
    pub terminal_states: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationDataset {
    pub kind: BifurcationKind,
    pub grid: LambdaGrid,
    pub delta_lambda: f64,
    pub initials: usize,
    pub iterations: usize,
    pub seed: u64,
    pub rows: Vec<BifurcationRow>,
}

impl BifurcationDataset {
    /// Long-format CSV: `parameter,initial,state`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "parameter,initial,state")?;
        for row in &self.rows {
            for (j, x) in row.terminal_states.iter().enumerate() {
                writeln!(w, "{:?},{j},{x:?}", row.parameter)?;
            }
        }
        Ok(())
    }
}

/// Column `c` draws its initial states first and then, initial by initial,
/// the parameters of its stochastic orbit, all from stream `c` of `seed`.
/// With a point-mass law this reproduces the deterministic column exactly.
fn bifurcation_column(
    dist: &ParameterDistribution,
    column: usize,
    initials: usize,
    iterations: usize,
    seed: u64,
) -> Vec<f64> {
    let mut rng = keyed_rng(seed, column as u64, 0);
    let x0: Vec<f64> = (0..initials).map(|_| rng.random::<f64>()).collect();
    x0.into_iter()
        .map(|mut x| {
            for _ in 0..iterations {
                x = step_unchecked(dist.sample(&mut rng), x);
            }
            x
        })
        .collect()
}

fn deterministic_column(
    lambda: f64,
    column: usize,
    initials: usize,
    iterations: usize,
    seed: u64,
) -> Vec<f64> {
    let mut rng = keyed_rng(seed, column as u64, 0);
    let x0: Vec<f64> = (0..initials).map(|_| rng.random::<f64>()).collect();
    x0.into_iter()
        .map(|mut x| {
            for _ in 0..iterations {
                x = step_unchecked(lambda, x);
            }
            x
        })
        .collect()
}

fn check_initials(initials: usize) -> Result<()> {
    if initials == 0 {
        return Err(Error::Size(
            "a bifurcation column needs at least one initial state".into(),
        ));
    }
    Ok(())
}

/// Terminal states of `initials` uniform starting points after `iterations`
/// steps, for each parameter on the grid.
pub fn deterministic_bifurcation(
    grid: LambdaGrid,
    initials: usize,
    iterations: usize,
    seed: u64,
) -> Result<BifurcationDataset> {
    check_initials(initials)?;
    if grid.from < 0.0 || grid.to > 4.0 {
        return Err(Error::Domain(format!(
            "grid [{}, {}] must lie in [0, 4]",
            grid.from, grid.to
        )));
    }
    let rows = grid
        .points()
        .into_par_iter()
        .enumerate()
        .map(|(c, lambda)| BifurcationRow {
            parameter: lambda,
            terminal_states: deterministic_column(lambda, c, initials, iterations, seed),
        })
        .collect();
    Ok(BifurcationDataset {
        kind: BifurcationKind::Deterministic,
        grid,
        delta_lambda: 0.0,
        initials,
        iterations,
        seed,
        rows,
    })
}

/// As [`deterministic_bifurcation`], with `λ ~ U[λ̄ - Δλ, λ̄ + Δλ]` drawn
/// independently at every step of every orbit.
pub fn stochastic_bifurcation(
    grid: LambdaGrid,
    delta_lambda: f64,
    initials: usize,
    iterations: usize,
    seed: u64,
) -> Result<BifurcationDataset> {
    check_initials(initials)?;
    let dists = grid
        .points()
        .into_iter()
        .map(|lb| ParameterDistribution::uniform(lb, delta_lambda))
        .collect::<Result<Vec<_>>>()?;
    let rows = dists
        .into_par_iter()
        .enumerate()
        .map(|(c, dist)| BifurcationRow {
            parameter: dist.lambda_bar(),
            terminal_states: bifurcation_column(&dist, c, initials, iterations, seed),
        })
        .collect();
    Ok(BifurcationDataset {
        kind: BifurcationKind::Stochastic,
        grid,
        delta_lambda,
        initials,
        iterations,
        seed,
        rows,
    })
}

/// Checkpoints shown for the evolution of a uniform initial distribution.
pub const EVOLUTION_CHECKPOINTS: [u64; 6] = [0, 1, 10, 50, 100, 10_000];
pub const EVOLUTION_PARTICLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub generation: u64,
    pub moments: Moments,
    pub histogram: Histogram,
}

/// Histograms of a uniform ensemble at each checkpoint generation.
pub fn distribution_evolution(
    dist: &ParameterDistribution,
    particles: usize,
    checkpoints: &[u64],
    bins: usize,
    seed: u64,
) -> Result<Vec<Snapshot>> {
    if checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(
            "checkpoints must be strictly ascending".into(),
        ));
    }
    let mut e = uniform_ensemble(particles, seed)?;
    let mut out = Vec::with_capacity(checkpoints.len());
    for &g in checkpoints {
        e = e.pf_iterate(dist, g - e.generation());
        out.push(Snapshot {
            generation: g,
            moments: moments_of(e.particles())?,
            histogram: Histogram::from_samples(bins, e.particles())?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Desk,
    Paper,
}

/// Settings of a mean comparison run.
///
/// The stochastic mean averages each particle over the last `window`
/// generations, so `window` must be a multiple of the cycle period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonConfig {
    pub particles: usize,
    pub generations: u64,
    pub window: u64,
    pub seed: u64,
}

impl ComparisonConfig {
    pub fn for_scale(scale: Scale, seed: u64) -> Self {
        match scale {
            Scale::Desk => Self {
                particles: 2_000,
                generations: 2_000,
                window: 1_000,
                seed,
            },
            Scale::Paper => Self {
                particles: 20_000,
                generations: 10_000,
                window: 1_000,
                seed,
            },
        }
    }
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        Self::for_scale(Scale::Desk, crate::DEFAULT_SEED)
    }
}

pub const Z_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    StochasticGreater,
    StochasticLess,
    Inconclusive,
}

impl Verdict {
    pub fn from_z(z: f64) -> Self {
        if z >= Z_THRESHOLD {
            Verdict::StochasticGreater
        } else if z <= -Z_THRESHOLD {
            Verdict::StochasticLess
        } else {
            Verdict::Inconclusive
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub lambda_bar: f64,
    pub delta_lambda: f64,
    pub regime: Regime,
    pub period: usize,
    pub stochastic_mean: f64,
    pub stochastic_se: f64,
    pub deterministic_mean: f64,
    pub difference: f64,
    pub z_score: f64,
    pub verdict: Verdict,
    pub particles: usize,
    pub generations: u64,
    pub window: u64,
    pub seed: u64,
}

fn z_score(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

fn check_run_size(cfg: &ComparisonConfig, period: usize) -> Result<()> {
    if cfg.particles == 0 {
        return Err(Error::Size(
            "a comparison needs at least one particle".into(),
        ));
    }
    if cfg.window == 0 || cfg.window > cfg.generations {
        return Err(Error::Domain(format!(
            "averaging window {} must be in 1..={}",
            cfg.window, cfg.generations
        )));
    }
    if !cfg.window.is_multiple_of(period as u64) {
        return Err(Error::Domain(format!(
            "averaging window {} must be a multiple of the cycle period {period}",
            cfg.window
        )));
    }
    Ok(())
}

fn compare_with_period(
    dist: &ParameterDistribution,
    regime: Regime,
    period: usize,
    cfg: &ComparisonConfig,
) -> Result<(ComparisonReport, Ensemble)> {
    check_run_size(cfg, period)?;
    let deterministic_mean = cycle_mean(dist.lambda_bar(), period)?;
    let e =
        uniform_ensemble(cfg.particles, cfg.seed)?.pf_iterate(dist, cfg.generations - cfg.window);
    let (last, averages) = e.pf_iterate_averaged(dist, cfg.window);
    let m = moments_of(&averages)?;
    let difference = m.mean - deterministic_mean;
    let z = z_score(difference, m.std_error);
    let report = ComparisonReport {
        lambda_bar: dist.lambda_bar(),
        delta_lambda: dist.delta_lambda(),
        regime,
        period,
        stochastic_mean: m.mean,
        stochastic_se: m.std_error,
        deterministic_mean,
        difference,
        z_score: z,
        verdict: Verdict::from_z(z),
        particles: cfg.particles,
        generations: cfg.generations,
        window: cfg.window,
        seed: cfg.seed,
    };
    Ok((report, last))
}

/// Like [`mean_comparison`], also returning the final ensemble.
pub fn run_comparison(
    lambda_bar: f64,
    delta_lambda: f64,
    cfg: &ComparisonConfig,
) -> Result<(ComparisonReport, Ensemble)> {
    let (dist, regime, period) = comparison_preconditions(lambda_bar, delta_lambda, cfg)?;
    compare_with_period(&dist, regime, period, cfg)
}

/// Everything [`mean_comparison`] checks before it simulates: the law, a
/// window inside one periodic regime, and the run sizes.
pub fn comparison_preconditions(
    lambda_bar: f64,
    delta_lambda: f64,
    cfg: &ComparisonConfig,
) -> Result<(ParameterDistribution, Regime, usize)> {
    let dist = ParameterDistribution::uniform(lambda_bar, delta_lambda)?;
    let regime = classify_regime(dist.lower(), dist.upper())?;
    let period = regime.period().ok_or_else(|| {
        Error::Regime(format!(
            "window [{}, {}] has no stable cycle to compare against",
            dist.lower(),
            dist.upper()
        ))
    })?;
    check_run_size(cfg, period)?;
    Ok((dist, regime, period))
}

/// Stochastic long-term mean against the mean of the attracting cycle at
/// `λ̄`.
pub fn mean_comparison(
    lambda_bar: f64,
    delta_lambda: f64,
    cfg: &ComparisonConfig,
) -> Result<ComparisonReport> {
    run_comparison(lambda_bar, delta_lambda, cfg).map(|(r, _)| r)
}

/// Settings of [`lemma_suite`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaConfig {
    pub mc: McConfig,
    pub h_values: Vec<f64>,
    pub epsilon: f64,
}

pub const DEFAULT_H_VALUES: [f64; 4] = [0.05, 0.025, 0.0125, 0.00625];

/// The left-peak shift at `Δλ = 0.024` is a few `1e-4`, which needs about
/// `10⁵` particles to resolve at `z ≥ 3`.
pub const LEMMA_PARTICLES: usize = 100_000;

impl Default for LemmaConfig {
    fn default() -> Self {
        Self {
            mc: McConfig {
                particles: LEMMA_PARTICLES,
                ..McConfig::default()
            },
            h_values: DEFAULT_H_VALUES.to_vec(),
            epsilon: 1e-6,
        }
    }
}

/// Support intervals, their ordering, and whether a converged ensemble
/// actually stays inside them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportCheck {
    pub intervals: SupportIntervals,
    pub ordering_holds: bool,
    pub ordering_error: Option<String>,
    pub particles: usize,
    pub generation: u64,
    pub outside: usize,
    /// Largest distance of a particle from `I_p ∪ I_q`.
    pub max_excursion: f64,
    pub passed: bool,
}

/// `E_right[X]` against `λ̄ (E_left[X] - E_left[X²])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub right_mean: f64,
    pub left_image_mean: f64,
    pub difference: f64,
    pub combined_se: f64,
    pub z: f64,
    pub passed: bool,
}

/// `E_left[X] - p(λ̄)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftCheck {
    pub left_mean: f64,
    pub p: f64,
    pub gap: f64,
    pub se: f64,
    pub z: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    pub profile: Vec<ProfilePoint>,
    /// `(h, (x_{q,max} - x_{q,min})² / h)`
    pub bound: Vec<(f64, f64)>,
    pub ratios_decreasing: bool,
    pub bound_decreasing: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootsCheck {
    pub epsilon: f64,
    pub roots: HRoots,
    pub chain_holds: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityCheck {
    pub interval: (f64, f64),
    pub min_second_derivative: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lambda_bar: f64,
    pub delta_lambda: f64,
    pub support: SupportCheck,
    pub identity: IdentityCheck,
    pub left_shift: ShiftCheck,
    pub decay: DecayCheck,
    pub h_roots: RootsCheck,
    pub convexity: ConvexityCheck,
}

impl LemmaReport {
    pub fn all_passed(&self) -> bool {
        self.support.passed
            && self.identity.passed
            && self.left_shift.passed
            && self.decay.passed
            && self.h_roots.passed
            && self.convexity.passed
    }

    /// `(name, passed)` per check, in report order.
    pub fn summary(&self) -> Vec<(&'static str, bool)> {
        vec![
            ("support", self.support.passed),
            ("identity", self.identity.passed),
            ("left_shift", self.left_shift.passed),
            ("decay", self.decay.passed),
            ("h_roots", self.h_roots.passed),
            ("convexity", self.convexity.passed),
        ]
    }
}

pub const SUPPORT_SLACK: f64 = 1e-9;

fn distance_outside(iv: &SupportIntervals, x: f64) -> f64 {
    let dp = if x < iv.p_lo {
        iv.p_lo - x
    } else if x > iv.p_hi {
        x - iv.p_hi
    } else {
        0.0
    };
    let dq = if x < iv.q_lo {
        iv.q_lo - x
    } else if x > iv.q_hi {
        x - iv.q_hi
    } else {
        0.0
    };
    dp.min(dq)
}

/// Containment of a converged ensemble in `I_p ∪ I_q` (inflated by
/// [`SUPPORT_SLACK`]) together with the ordering chain.
pub fn support_check(lambda_bar: f64, delta_lambda: f64, e: &Ensemble) -> Result<SupportCheck> {
    let intervals = support_intervals(lambda_bar, delta_lambda)?;
    let ordering = check_ordering(lambda_bar, delta_lambda);
    let (mut outside, mut max_excursion) = (0, 0.0f64);
    for &x in e.particles() {
        let d = distance_outside(&intervals, x);
        if d > SUPPORT_SLACK {
            outside += 1;
        }
        max_excursion = max_excursion.max(d);
    }
    let ordering_holds = ordering.is_ok();
    Ok(SupportCheck {
        intervals,
        ordering_holds,
        ordering_error: ordering.err().map(|e| e.to_string()),
        particles: e.len(),
        generation: e.generation(),
        outside,
        max_excursion,
        passed: ordering_holds && outside == 0,
    })
}

/// With `Δλ = 0` the peaks are point masses and the checks reduce to
/// equalities up to rounding.
const EXACT_TOL: f64 = 1e-9;

pub fn identity_check(lambda_bar: f64, delta_lambda: f64, e: &Ensemble) -> Result<IdentityCheck> {
    let split = split_peaks(e, lambda_bar)?;
    let right = moments_of(split.right.particles())?;
    let image: Vec<f64> = split
        .left
        .particles()
        .iter()
        .map(|&x| lambda_bar * (x - x * x))
        .collect();
    let image = moments_of(&image)?;
    let difference = right.mean - image.mean;
    let combined_se = right.std_error.hypot(image.std_error);
    let z = z_score(difference, combined_se);
    let passed = if delta_lambda > 0.0 {
        z.abs() <= 4.0
    } else {
        difference.abs() <= EXACT_TOL
    };
    Ok(IdentityCheck {
        right_mean: right.mean,
        left_image_mean: image.mean,
        difference,
        combined_se,
        z,
        passed,
    })
}

pub fn shift_check(lambda_bar: f64, delta_lambda: f64, e: &Ensemble) -> Result<ShiftCheck> {
    let split = split_peaks(e, lambda_bar)?;
    let left = moments_of(split.left.particles())?;
    let p = period2_points(lambda_bar)?.p;
    let gap = left.mean - p;
    let z = z_score(gap, left.std_error);
    let passed = if delta_lambda > 0.0 {
        z >= Z_THRESHOLD
    } else {
        gap.abs() <= EXACT_TOL
    };
    Ok(ShiftCheck {
        left_mean: left.mean,
        p,
        gap,
        se: left.std_error,
        z,
        passed,
    })
}

/// `V(h)/h` must not increase by more than one combined standard error from
/// one half-width to the next, and the crude analytic bound must decrease.
pub fn decay_check(lambda_bar: f64, h_values: &[f64], mc: &McConfig) -> Result<DecayCheck> {
    let profile = right_derivative_profile(lambda_bar, h_values, mc)?;
    let bound = h_values
        .iter()
        .map(|&h| {
            let iv = support_intervals(lambda_bar, h)?;
            Ok((h, (iv.q_hi - iv.q_lo).powi(2) / h))
        })
        .collect::<Result<Vec<_>>>()?;
    let ratios_decreasing = profile
        .windows(2)
        .all(|w| w[1].ratio <= w[0].ratio + w[0].ratio_se.hypot(w[1].ratio_se));
    let bound_decreasing = bound.windows(2).all(|w| w[1].1 < w[0].1);
    Ok(DecayCheck {
        profile,
        bound,
        ratios_decreasing,
        bound_decreasing,
        passed: ratios_decreasing && bound_decreasing,
    })
}

/// Zeros of `H` in the order `z_H < 0 < p < p_H < x*_H < x* < q < q_H < 1`.
pub fn roots_check(lambda_bar: f64, epsilon: f64) -> Result<RootsCheck> {
    let roots = h_function_roots(lambda_bar, epsilon)?;
    let pair = period2_points(lambda_bar)?;
    let xs = nonzero_fixed_point(lambda_bar);
    let chain = [
        roots.z,
        0.0,
        pair.p,
        roots.p,
        roots.x_star,
        xs,
        pair.q,
        roots.q,
        1.0,
    ];
    let chain_holds = if epsilon > 0.0 {
        chain.windows(2).all(|w| w[0] < w[1])
    } else {
        (roots.z.abs() < EXACT_TOL)
            && (roots.p - pair.p).abs() < EXACT_TOL
            && (roots.x_star - xs).abs() < EXACT_TOL
            && (roots.q - pair.q).abs() < EXACT_TOL
    };
    Ok(RootsCheck {
        epsilon,
        roots,
        chain_holds,
        passed: chain_holds,
    })
}

pub fn convexity_check(lambda_bar: f64, delta_lambda: f64) -> Result<ConvexityCheck> {
    let iv = support_intervals(lambda_bar, delta_lambda)?;
    let interval = (iv.p_lo, iv.p_hi);
    let passed = convexity_on_interval(lambda_bar, interval)?;
    Ok(ConvexityCheck {
        interval,
        min_second_derivative: h_second_derivative(lambda_bar, iv.p_lo)
            .min(h_second_derivative(lambda_bar, iv.p_hi)),
        passed,
    })
}

/// Runs the six period-2 checks at `(λ̄, Δλ)`. Half-widths in
/// `cfg.h_values` whose window leaves the period-2 regime are skipped.
pub fn lemma_suite(lambda_bar: f64, delta_lambda: f64, cfg: &LemmaConfig) -> Result<LemmaReport> {
    let h_values = lemma_preconditions(lambda_bar, delta_lambda, cfg)?;
    let dist = ParameterDistribution::uniform(lambda_bar, delta_lambda)?;
    let e = converged_ensemble(&dist, &cfg.mc)?;
    Ok(LemmaReport {
        lambda_bar,
        delta_lambda,
        support: support_check(lambda_bar, delta_lambda, &e)?,
        identity: identity_check(lambda_bar, delta_lambda, &e)?,
        left_shift: shift_check(lambda_bar, delta_lambda, &e)?,
        decay: decay_check(lambda_bar, &h_values, &cfg.mc)?,
        h_roots: roots_check(lambda_bar, cfg.epsilon)?,
        convexity: convexity_check(lambda_bar, delta_lambda)?,
    })
}

/// Checks made by [`lemma_suite`] before it simulates. Returns the
/// half-widths of `cfg.h_values` that fit the regime.
pub fn lemma_preconditions(
    lambda_bar: f64,
    delta_lambda: f64,
    cfg: &LemmaConfig,
) -> Result<Vec<f64>> {
    support_intervals(lambda_bar, delta_lambda)?;
    if cfg.mc.particles == 0 {
        return Err(Error::Size(
            "the lemma checks need at least one particle".into(),
        ));
    }
    if !(cfg.epsilon >= 0.0) {
        return Err(Error::Domain(format!(
            "epsilon must be >= 0, got {}",
            cfg.epsilon
        )));
    }
    if cfg.h_values.iter().any(|&h| !(h > 0.0)) || cfg.h_values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain(format!(
            "half-widths {:?} must be positive and strictly decreasing",
            cfg.h_values
        )));
    }
    let h_values: Vec<f64> = cfg
        .h_values
        .iter()
        .copied()
        .filter(|&h| support_intervals(lambda_bar, h).is_ok())
        .collect();
    if h_values.len() < 2 {
        return Err(Error::Regime(format!(
            "fewer than two half-widths in {:?} fit the period-2 regime around {lambda_bar}",
            cfg.h_values
        )));
    }
    Ok(h_values)
}

const WINDOW_SCAN_STEP: f64 = 1e-5;
const WINDOW_SCAN_MAX_ITER: usize = 20_000;

fn has_period(lambda: f64, period: usize) -> bool {
    matches!(
        detect_period(lambda, analytic::DETECT_TOL, WINDOW_SCAN_MAX_ITER),
        Ok(k) if k == period
    )
}

/// Finds `(λ̄, Δλ)` with `λ̄ ± Δλ` and `λ̄` all showing an attracting cycle of
/// the given period, scanning the cascade region `(λ_c4_end, λ_∞)`.
///
/// `λ̄` is the middle of the longest run of scan points with that period;
/// `Δλ` starts at `max_delta` (capped to the run) and is halved until both
/// endpoints report the period.
pub fn locate_period_window(period: usize, max_delta: f64) -> Result<(f64, f64)> {
    if !(max_delta > 0.0) {
        return Err(Error::Domain(format!(
            "half-width must be > 0, got {max_delta}"
        )));
    }
    let n = ((LAMBDA_CASCADE - LAMBDA_C4_END) / WINDOW_SCAN_STEP) as usize;
    let hits: Vec<bool> = (0..=n)
        .into_par_iter()
        .map(|i| has_period(LAMBDA_C4_END + i as f64 * WINDOW_SCAN_STEP, period))
        .collect();
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for (i, &hit) in hits.iter().chain(std::iter::once(&false)).enumerate() {
        match (hit, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if best.is_none_or(|(a, b)| i - 1 - s > b - a) {
                    best = Some((s, i - 1));
                }
                start = None;
            }
            _ => {}
        }
    }
    let (a, b) = best.ok_or_else(|| Error::WindowNotFound {
        period,
        reason: format!("no parameter in ({LAMBDA_C4_END}, {LAMBDA_CASCADE}) has that period"),
    })?;
    let lo = LAMBDA_C4_END + a as f64 * WINDOW_SCAN_STEP;
    let hi = LAMBDA_C4_END + b as f64 * WINDOW_SCAN_STEP;
    let center = 0.5 * (lo + hi);
    let mut delta = max_delta.min(0.5 * (hi - lo));
    while delta > WINDOW_SCAN_STEP {
        if has_period(center - delta, period) && has_period(center + delta, period) {
            return Ok((center, delta));
        }
        delta *= 0.5;
    }
    Err(Error::WindowNotFound {
        period,
        reason: format!("run [{lo}, {hi}] is too narrow for a noise window"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipflopRow {
    pub rho: u32,
    pub period: usize,
    pub lambda_bar: f64,
    pub delta_lambda: f64,
    pub deterministic_mean: f64,
    pub stochastic_mean: f64,
    pub stochastic_se: f64,
    pub difference: f64,
    pub z_score: f64,
    /// `+1`, `-1`, or `0` when inconclusive.
    pub sign: i8,
    pub verdict: Verdict,
    /// Sign predicted by alternation: `+` for odd `ρ`, `-` for even `ρ`.
    pub conjectured_sign: i8,
    /// Rows with `ρ ≥ 3` are reported, not asserted.
    pub exploratory: bool,
}

/// Reference parameter for the period-2^ρ regime with a known noise window.
fn reference_window(rho: u32, delta_lambda: f64) -> Result<(f64, f64)> {
    match rho {
        0 => Ok((1.508, delta_lambda)),
        1 => Ok((3.208, delta_lambda)),
        2 => Ok((3.508, delta_lambda)),
        _ => locate_period_window(1usize << rho, delta_lambda),
    }
}

/// Sign of (stochastic mean - deterministic cycle mean) across successive
/// period-doubling regimes.
pub fn flipflop_scan(
    rho_values: &[u32],
    delta_lambda: f64,
    cfg: &ComparisonConfig,
) -> Result<Vec<FlipflopRow>> {
    flipflop_preconditions(rho_values, &[delta_lambda], cfg)?;
    rho_values
        .iter()
        .map(|&rho| {
            let period = 1usize << rho;
            let (lambda_bar, delta) = reference_window(rho, delta_lambda)?;
            let dist = ParameterDistribution::uniform(lambda_bar, delta)?;
            let regime = classify_regime(dist.lower(), dist.upper())?;
            let mut run_cfg = *cfg;
            run_cfg.window -= run_cfg.window % period as u64;
            let (r, _) = compare_with_period(&dist, regime, period, &run_cfg)?;
            let sign = match r.verdict {
                Verdict::StochasticGreater => 1,
                Verdict::StochasticLess => -1,
                Verdict::Inconclusive => 0,
            };
            Ok(FlipflopRow {
                rho,
                period,
                lambda_bar,
                delta_lambda: delta,
                deterministic_mean: r.deterministic_mean,
                stochastic_mean: r.stochastic_mean,
                stochastic_se: r.stochastic_se,
                difference: r.difference,
                z_score: r.z_score,
                sign,
                verdict: r.verdict,
                conjectured_sign: if rho % 2 == 1 { 1 } else { -1 },
                exploratory: rho >= 3,
            })
        })
        .collect()
}

/// Checks made before any flip-flop simulation.
pub fn flipflop_preconditions(
    rho_values: &[u32],
    deltas: &[f64],
    cfg: &ComparisonConfig,
) -> Result<()> {
    if rho_values.is_empty() {
        return Err(Error::Size("at least one rho is required".into()));
    }
    if deltas.is_empty() {
        return Err(Error::Size("at least one half-width is required".into()));
    }
    if rho_values.iter().any(|&r| r > 6) {
        return Err(Error::Domain("rho must be at most 6".into()));
    }
    if let Some(d) = deltas.iter().find(|&&d| !(d > 0.0)) {
        return Err(Error::Domain(format!("half-width must be > 0, got {d}")));
    }
    let largest = 1u64 << rho_values.iter().max().copied().unwrap_or(0);
    if cfg.particles == 0 || cfg.window < largest || cfg.window > cfg.generations {
        return Err(Error::Size(format!(
            "need particles >= 1 and {largest} <= window <= generations, got {} particles, window {}, {} generations",
            cfg.particles, cfg.window, cfg.generations
        )));
    }
    Ok(())
}

/// [`flipflop_scan`] at each half-width in turn; rows are grouped by
/// half-width.
pub fn flipflop_sweep(
    rho_values: &[u32],
    deltas: &[f64],
    cfg: &ComparisonConfig,
) -> Result<Vec<FlipflopRow>> {
    flipflop_preconditions(rho_values, deltas, cfg)?;
    let mut rows = Vec::new();
    for &d in deltas {
        rows.extend(flipflop_scan(rho_values, d, cfg)?);
    }
    Ok(rows)
}

/// Per `ρ`, in first-seen order: whether every row carries the same
/// non-zero sign.
pub fn sign_stability(rows: &[FlipflopRow]) -> Vec<(u32, bool)> {
    let mut out: Vec<(u32, i8, bool)> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|(rho, _, _)| *rho == r.rho) {
            Some((_, sign, stable)) => *stable &= r.sign == *sign,
            None => out.push((r.rho, r.sign, r.sign != 0)),
        }
    }
    out.into_iter()
        .map(|(rho, _, stable)| (rho, stable))
        .collect()
}
