//! Monte-Carlo realization of the Perron-Frobenius operator.
//!
//! An [`Ensemble`] is a set of equal-weight particles standing in for a
//! probability measure on `[0, 1]`. One application of `P*` moves every
//! particle through `S_λ` with its own parameter draw; particle `i` at
//! generation `g` always uses the draw keyed by `(base_seed, i, g)`.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{self, nonzero_fixed_point, LAMBDA_C2, LAMBDA_C4};
use crate::error::{Error, Result};
use crate::map::{keyed_rng, step_unchecked, ParameterDistribution, SamplePath};

/// Stream reserved for drawing initial particle positions.
const INIT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    particles: Vec<f64>,
    generation: u64,
    base_seed: u64,
}

impl Ensemble {
    pub fn from_particles(particles: Vec<f64>, generation: u64, base_seed: u64) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::Size("ensemble needs at least one particle".into()));
        }
        if let Some(x) = particles.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::Domain(format!("particle {x} outside [0, 1]")));
        }
        Ok(Self {
            particles,
            generation,
            base_seed,
        })
    }

    pub fn particles(&self) -> &[f64] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    /// Applies `P*` once.
    pub fn pf_step(&self, dist: &ParameterDistribution) -> Ensemble {
        self.pf_iterate(dist, 1)
    }

    /// Applies `P*` `n` times.
    pub fn pf_iterate(&self, dist: &ParameterDistribution, n: u64) -> Ensemble {
        let (seed, gen) = (self.base_seed, self.generation);
        let particles = self
            .particles
            .par_iter()
            .enumerate()
            .map(|(i, &x0)| {
                let mut rng = keyed_rng(seed, i as u64, gen);
                let mut x = x0;
                for _ in 0..n {
                    x = step_unchecked(dist.sample(&mut rng), x);
                }
                x
            })
            .collect();
        Ensemble {
            particles,
            generation: gen + n,
            base_seed: seed,
        }
    }

    /// Applies `P*` `n` times and returns, per particle, the average of its
    /// states over the `n` new generations.
    ///
    /// Particles evolve independently, so these averages are i.i.d. and
    /// their spread gives an honest standard error for the time-and-ensemble
    /// mean.
    pub fn pf_iterate_averaged(
        &self,
        dist: &ParameterDistribution,
        n: u64,
    ) -> (Ensemble, Vec<f64>) {
        assert!(n > 0, "averaging window must be non-empty");
        let (seed, gen) = (self.base_seed, self.generation);
        let (particles, averages): (Vec<f64>, Vec<f64>) = self
            .particles
            .par_iter()
            .enumerate()
            .map(|(i, &x0)| {
                let mut rng = keyed_rng(seed, i as u64, gen);
                let mut x = x0;
                let mut sum = 0.0;
                for _ in 0..n {
                    x = step_unchecked(dist.sample(&mut rng), x);
                    sum += x;
                }
                (x, sum / n as f64)
            })
            .unzip();
        (
            Ensemble {
                particles,
                generation: gen + n,
                base_seed: seed,
            },
            averages,
        )
    }

    /// Writes `index,x` rows with round-trip precision.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# generation={} base_seed={}",
            self.generation, self.base_seed
        )?;
        writeln!(w, "index,x")?;
        for (i, x) in self.particles.iter().enumerate() {
            writeln!(w, "{i},{x:?}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut generation = 0;
        let mut base_seed = 0;
        let mut particles = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let bad = |what: &str| Error::Parse(format!("line {}: {what}", lineno + 1));
            if let Some(meta) = line.strip_prefix('#') {
                for kv in meta.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("generation", v)) => {
                            generation = v.parse().map_err(|_| bad("bad generation"))?
                        }
                        Some(("base_seed", v)) => {
                            base_seed = v.parse().map_err(|_| bad("bad base_seed"))?
                        }
                        _ => return Err(bad("unknown metadata")),
                    }
                }
                continue;
            }
            if line == "index,x" || line.is_empty() {
                continue;
            }
            let (_, x) = line
                .split_once(',')
                .ok_or_else(|| bad("expected index,x"))?;
            particles.push(x.parse::<f64>().map_err(|_| bad("bad value"))?);
        }
        Ensemble::from_particles(particles, generation, base_seed)
    }
}

/// `n` i.i.d. uniform particles on `(0, 1)` at generation 0.
pub fn uniform_ensemble(n: usize, seed: u64) -> Result<Ensemble> {
    if n == 0 {
        return Err(Error::Size("ensemble needs at least one particle".into()));
    }
    let mut rng = keyed_rng(seed, INIT_STREAM, 0);
    let particles = (0..n)
        .map(|_| loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                break u;
            }
        })
        .collect();
    Ok(Ensemble {
        particles,
        generation: 0,
        base_seed: seed,
    })
}

/// Sample moments of a set of values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub second_moment: f64,
    /// `E[X²] - E[X]²` (population form).
    pub variance: f64,
    /// Standard error of the mean, `s / √n` with the unbiased `s`.
    pub std_error: f64,
}

pub fn moments_of(values: &[f64]) -> Result<Moments> {
    if values.is_empty() {
        return Err(Error::Size("moments of an empty sample".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let second_moment = values.iter().map(|x| x * x).sum::<f64>() / n;
    let ss = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    let variance = ss / n;
    let std_error = if values.len() > 1 {
        (ss / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Ok(Moments {
        n: values.len(),
        mean,
        second_moment,
        variance,
        std_error,
    })
}

pub fn moments(e: &Ensemble) -> Result<Moments> {
    moments_of(&e.particles)
}

/// Ensemble split at `(λ̄ - 1)/λ̄` into the left and right peaks, each read
/// as a conditional (renormalized) measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakSplit {
    pub left: Ensemble,
    pub right: Ensemble,
    pub threshold: f64,
}

pub fn split_peaks(e: &Ensemble, lambda_bar: f64) -> Result<PeakSplit> {
    if !(lambda_bar > LAMBDA_C2 && lambda_bar < LAMBDA_C4) {
        return Err(Error::Regime(format!(
            "peak split needs lambda_bar in the period-2 regime (3, 1+√6), got {lambda_bar}"
        )));
    }
    let threshold = nonzero_fixed_point(lambda_bar);
    let (left, right): (Vec<f64>, Vec<f64>) = e.particles.iter().partition(|&&x| x <= threshold);
    if left.is_empty() || right.is_empty() {
        return Err(Error::EmptyPeak(format!(
            "{} particles left and {} right of {threshold}",
            left.len(),
            right.len()
        )));
    }
    Ok(PeakSplit {
        left: Ensemble {
            particles: left,
            generation: e.generation,
            base_seed: e.base_seed,
        },
        right: Ensemble {
            particles: right,
            generation: e.generation,
            base_seed: e.base_seed,
        },
        threshold,
    })
}

/// Bootstrap standard error of the population variance.
pub fn bootstrap_variance_se(values: &[f64], resamples: usize, seed: u64) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::Size("bootstrap needs at least two values".into()));
    }
    if resamples < 2 {
        return Err(Error::Size("bootstrap needs at least two resamples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = values.len();
    let mut buf = vec![0.0; n];
    let estimates: Vec<f64> = (0..resamples)
        .map(|_| {
            for slot in buf.iter_mut() {
                *slot = values[rng.random_range(0..n)];
            }
            moments_of(&buf).expect("non-empty").variance
        })
        .collect();
    let m = moments_of(&estimates)?;
    Ok((m.variance * resamples as f64 / (resamples as f64 - 1.0)).sqrt())
}

/// Monte-Carlo settings shared by the ensemble experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub particles: usize,
    pub generations: u64,
    pub seed: u64,
    pub bootstrap_resamples: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            particles: 10_000,
            generations: 2_000,
            seed: crate::DEFAULT_SEED,
            bootstrap_resamples: 200,
        }
    }
}

pub const MIN_CONVERGED_GENERATIONS: u64 = 2_000;
const DRIFT_LAG: u64 = 100;
const MAX_EXTRA_GENERATIONS: u64 = 20_000;

/// Iterates a fresh uniform ensemble to convergence: at least
/// `max(cfg.generations, 2000)` generations, then in steps of 100 until the
/// snapshot mean moved by less than 3 combined standard errors over the last
/// 100 (same-parity) generations.
pub fn converged_ensemble(dist: &ParameterDistribution, cfg: &McConfig) -> Result<Ensemble> {
    let start = cfg.generations.max(MIN_CONVERGED_GENERATIONS);
    let e = uniform_ensemble(cfg.particles, cfg.seed)?;
    let mut prev = e.pf_iterate(dist, start - DRIFT_LAG);
    let mut cur = prev.pf_iterate(dist, DRIFT_LAG);
    loop {
        let (a, b) = (moments(&prev)?, moments(&cur)?);
        let se = a.std_error.hypot(b.std_error);
        if (b.mean - a.mean).abs() <= 3.0 * se {
            return Ok(cur);
        }
        if cur.generation >= start + MAX_EXTRA_GENERATIONS {
            return Err(Error::NotConverged {
                generations: cur.generation,
            });
        }
        prev = cur;
        cur = prev.pf_iterate(dist, DRIFT_LAG);
    }
}

/// Variance of the right peak, `V(Δλ)`, with a bootstrap standard error.
pub fn variance_of_right_peak(
    lambda_bar: f64,
    delta_lambda: f64,
    cfg: &McConfig,
) -> Result<(f64, f64)> {
    analytic::support_intervals(lambda_bar, delta_lambda)?;
    let dist = ParameterDistribution::uniform(lambda_bar, delta_lambda)?;
    let e = converged_ensemble(&dist, cfg)?;
    let split = split_peaks(&e, lambda_bar)?;
    let right = split.right.particles();
    let v = moments_of(right)?.variance;
    let se = bootstrap_variance_se(right, cfg.bootstrap_resamples, cfg.seed ^ 0x5eed)?;
    Ok((v, se))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub h: f64,
    pub variance: f64,
    pub variance_se: f64,
    /// `V(h) / h`
    pub ratio: f64,
    pub ratio_se: f64,
}

/// `V(h)/h` along a positive, decreasing sequence of half-widths.
pub fn right_derivative_profile(
    lambda_bar: f64,
    h_values: &[f64],
    cfg: &McConfig,
) -> Result<Vec<ProfilePoint>> {
    if h_values.is_empty() {
        return Err(Error::Size("empty half-width sequence".into()));
    }
    if h_values.iter().any(|&h| !(h > 0.0)) {
        return Err(Error::Domain("half-widths must be positive".into()));
    }
    if h_values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain(
            "half-widths must be strictly decreasing".into(),
        ));
    }
    h_values
        .iter()
        .map(|&h| {
            let (v, se) = variance_of_right_peak(lambda_bar, h, cfg)?;
            Ok(ProfilePoint {
                h,
                variance: v,
                variance_se: se,
                ratio: v / h,
                ratio_se: se / h,
            })
        })
        .collect()
}

/// States produced after the first `burn_in` steps: `X_{burn_in+1}..=X_n`.
fn post_burn_in(path: &SamplePath, burn_in: usize) -> Result<&[f64]> {
    if path.len() <= burn_in {
        return Err(Error::Length {
            len: path.len(),
            burn_in,
        });
    }
    Ok(&path.states[burn_in + 1..])
}

/// Cesàro mean of the `n - burn_in` states that follow the burn-in.
pub fn time_average(path: &SamplePath, burn_in: usize) -> Result<f64> {
    let tail = post_burn_in(path, burn_in)?;
    Ok(tail.iter().sum::<f64>() / tail.len() as f64)
}

/// Time average with a batch-means standard error over `batches` equal
/// consecutive batches of the post-burn-in states.
pub fn time_average_with_se(
    path: &SamplePath,
    burn_in: usize,
    batches: usize,
) -> Result<(f64, f64)> {
    let tail = post_burn_in(path, burn_in)?;
    if batches < 2 || tail.len() < batches {
        return Err(Error::Size(format!(
            "cannot form {batches} batches from {} states",
            tail.len()
        )));
    }
    let len = tail.len() / batches;
    let means: Vec<f64> = tail
        .chunks_exact(len)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / len as f64)
        .collect();
    let m = moments_of(&means)?;
    Ok((m.mean, m.std_error))
}

/// Fraction of post-burn-in states inside the closed interval.
pub fn occupation_fraction(path: &SamplePath, interval: (f64, f64), burn_in: usize) -> Result<f64> {
    let tail = post_burn_in(path, burn_in)?;
    let (lo, hi) = interval;
    let hits = tail.iter().filter(|&&x| lo <= x && x <= hi).count();
    Ok(hits as f64 / tail.len() as f64)
}

/// Fixed-bin histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    edges: Vec<f64>,
    counts: Vec<u64>,
    total: u64,
}

pub const DEFAULT_BINS: usize = 200;

impl Histogram {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::Size("histogram needs at least one bin".into()));
        }
        if edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain(
                "histogram edges must be strictly increasing".into(),
            ));
        }
        let counts = vec![0; edges.len() - 1];
        Ok(Self {
            edges,
            counts,
            total: 0,
        })
    }

    /// `bins` equal-width bins on `[lo, hi]`.
    pub fn uniform(bins: usize, lo: f64, hi: f64) -> Result<Self> {
        if bins == 0 {
            return Err(Error::Size("histogram needs at least one bin".into()));
        }
        let edges = (0..=bins)
            .map(|i| lo + (hi - lo) * i as f64 / bins as f64)
            .collect();
        Self::new(edges)
    }

    pub fn from_samples(bins: usize, samples: &[f64]) -> Result<Self> {
        let mut h = Self::uniform(bins, 0.0, 1.0)?;
        h.extend(samples);
        Ok(h)
    }

    /// Adds samples; values outside the edges are dropped and the last bin
    /// is closed on the right.
    pub fn extend(&mut self, samples: &[f64]) {
        let lo = self.edges[0];
        let hi = *self.edges.last().unwrap();
        for &x in samples {
            if !(lo..=hi).contains(&x) {
                continue;
            }
            let idx = self.edges.partition_point(|&e| e <= x).saturating_sub(1);
            let idx = idx.min(self.counts.len() - 1);
            self.counts[idx] += 1;
            self.total += 1;
        }
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin(&self, i: usize) -> (f64, f64) {
        (self.edges[i], self.edges[i + 1])
    }

    /// Probability density of bin `i`.
    pub fn density(&self, i: usize) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let (lo, hi) = self.bin(i);
        self.counts[i] as f64 / (self.total as f64 * (hi - lo))
    }

    /// Fraction of the total mass in bins that intersect `[lo, hi]`.
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let hits: u64 = (0..self.bins())
            .filter(|&i| {
                let (a, b) = self.bin(i);
                b >= lo && a <= hi
            })
            .map(|i| self.counts[i])
            .sum();
        hits as f64 / self.total as f64
    }

    /// Maximal runs of occupied bins, as `(first, last)` bin indices.
    pub fn occupied_runs(&self) -> Vec<(usize, usize)> {
        let mut runs = Vec::new();
        let mut start = None;
        for (i, &c) in self.counts.iter().enumerate() {
            match (c > 0, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    runs.push((s, i - 1));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push((s, self.counts.len() - 1));
        }
        runs
    }

    /// Index of the fullest bin in `[first, last]`.
    pub fn argmax_in(&self, first: usize, last: usize) -> usize {
        (first..=last)
            .max_by_key(|&i| (self.counts[i], std::cmp::Reverse(i)))
            .unwrap_or(first)
    }

    /// CSV with columns `bin_lo,bin_hi,count,density`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "bin_lo,bin_hi,count,density")?;
        for i in 0..self.bins() {
            let (lo, hi) = self.bin(i);
            writeln!(w, "{lo:?},{hi:?},{},{:?}", self.counts[i], self.density(i))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::period2_points;
    use crate::map::generate_path;

    #[test]
    fn uniform_ensemble_basics() {
        let a = uniform_ensemble(4, 17).unwrap();
        let b = uniform_ensemble(4, 17).unwrap();
        assert_eq!(a, b);
        assert!(a.particles().iter().all(|&x| x > 0.0 && x < 1.0));
        assert_eq!(a.generation(), 0);
        assert!(matches!(uniform_ensemble(0, 1), Err(Error::Size(_))));
    }

    #[test]
    fn uniform_ensemble_mean() {
        let n = 1_000_000;
        let e = uniform_ensemble(n, 3).unwrap();
        let m = moments(&e).unwrap();
        assert!((m.mean - 0.5).abs() < 3.0 / (12.0 * n as f64).sqrt());
        assert!((m.variance - 1.0 / 12.0).abs() < 1e-3);
    }

    #[test]
    fn pf_step_point_mass_maps_p_to_q() {
        let d = ParameterDistribution::point(3.2).unwrap();
        let pair = period2_points(3.2).unwrap();
        let e = Ensemble::from_particles(vec![pair.p], 0, 1).unwrap();
        let next = e.pf_step(&d);
        assert!((next.particles()[0] - pair.q).abs() < 1e-14);
        assert_eq!(next.generation(), 1);
    }

    #[test]
    fn pf_step_point_mass_is_pointwise_logistic() {
        let d = ParameterDistribution::point(2.7).unwrap();
        let e = uniform_ensemble(100, 2).unwrap();
        let next = e.pf_step(&d);
        for (x, y) in e.particles().iter().zip(next.particles()) {
            assert_eq!(*y, 2.7 * x * (1.0 - x));
        }
    }

    #[test]
    fn period_one_trapping_interval() {
        let d = ParameterDistribution::uniform(1.5, 0.01).unwrap();
        let e = uniform_ensemble(2000, 5).unwrap().pf_iterate(&d, 500);
        let (lo, hi) = (nonzero_fixed_point(1.49), nonzero_fixed_point(1.51));
        assert!(e
            .particles()
            .iter()
            .all(|&x| lo - 1e-9 <= x && x <= hi + 1e-9));
    }

    #[test]
    fn pf_iterate_composes_and_is_identity_at_zero() {
        let d = ParameterDistribution::uniform(3.6, 0.2).unwrap();
        let e = uniform_ensemble(300, 8).unwrap();
        assert_eq!(e.pf_iterate(&d, 0), e);
        let whole = e.pf_iterate(&d, 37);
        let parts = e.pf_iterate(&d, 12).pf_iterate(&d, 25);
        assert_eq!(whole, parts);
        let stepped = (0..37).fold(e.clone(), |acc, _| acc.pf_step(&d));
        assert_eq!(whole, stepped);
    }

    #[test]
    fn averaged_iteration_tracks_plain_iteration() {
        let d = ParameterDistribution::uniform(3.3, 0.05).unwrap();
        let e = uniform_ensemble(50, 4).unwrap();
        let (after, avgs) = e.pf_iterate_averaged(&d, 10);
        assert_eq!(after, e.pf_iterate(&d, 10));
        let mut manual = vec![0.0; 50];
        let mut cur = e.clone();
        for _ in 0..10 {
            cur = cur.pf_step(&d);
            for (m, x) in manual.iter_mut().zip(cur.particles()) {
                *m += x;
            }
        }
        for (m, a) in manual.iter().zip(&avgs) {
            assert!((m / 10.0 - a).abs() < 1e-15);
        }
    }

    #[test]
    fn mass_is_preserved() {
        let d = ParameterDistribution::uniform(3.9, 0.1).unwrap();
        let e = uniform_ensemble(777, 1).unwrap().pf_iterate(&d, 100);
        assert_eq!(e.len(), 777);
        assert!(e.particles().iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn moment_examples() {
        let m = moments_of(&[0.3; 10]).unwrap();
        assert!((m.mean - 0.3).abs() < 1e-16);
        assert!((m.second_moment - 0.09).abs() < 1e-16);
        assert!(m.variance.abs() < 1e-30);

        let pair = period2_points(3.2).unwrap();
        let m = moments_of(&[pair.p, pair.q]).unwrap();
        assert!((m.mean - 0.65625).abs() < 1e-15);

        assert!(moments_of(&[]).is_err());
    }

    #[test]
    fn split_threshold_and_errors() {
        let e = Ensemble::from_particles(vec![0.5, 0.8], 0, 0).unwrap();
        let s = split_peaks(&e, 3.208).unwrap();
        assert!((s.threshold - 0.6882793).abs() < 1e-7);
        assert_eq!(s.left.particles(), &[0.5]);
        assert_eq!(s.right.particles(), &[0.8]);

        let e = Ensemble::from_particles(vec![0.5, 0.6], 0, 0).unwrap();
        assert!(matches!(split_peaks(&e, 3.208), Err(Error::EmptyPeak(_))));
        assert!(matches!(split_peaks(&e, 2.5), Err(Error::Regime(_))));
    }

    #[test]
    fn converged_period2_peaks_are_balanced_over_a_generation_pair() {
        let d = ParameterDistribution::uniform(3.208, 0.024).unwrap();
        let cfg = McConfig {
            particles: 20_000,
            ..McConfig::default()
        };
        let e = converged_ensemble(&d, &cfg).unwrap();
        let next = e.pf_step(&d);
        let a = split_peaks(&e, 3.208).unwrap();
        let b = split_peaks(&next, 3.208).unwrap();
        // every particle alternates, so the left counts of consecutive
        // generations add up to the whole ensemble
        assert_eq!(a.left.len() + b.left.len(), e.len());
    }

    #[test]
    fn degenerate_split_is_two_point_masses() {
        let d = ParameterDistribution::point(3.2).unwrap();
        let cfg = McConfig {
            particles: 500,
            ..McConfig::default()
        };
        let e = converged_ensemble(&d, &cfg).unwrap();
        let s = split_peaks(&e, 3.2).unwrap();
        let pair = period2_points(3.2).unwrap();
        assert!(s
            .left
            .particles()
            .iter()
            .all(|x| (x - pair.p).abs() < 1e-12));
        assert!(s
            .right
            .particles()
            .iter()
            .all(|x| (x - pair.q).abs() < 1e-12));
    }

    #[test]
    fn alternation_between_peaks() {
        let d = ParameterDistribution::uniform(3.2, 0.05).unwrap();
        let cfg = McConfig {
            particles: 5000,
            ..McConfig::default()
        };
        let e = converged_ensemble(&d, &cfg).unwrap();
        let s = split_peaks(&e, 3.2).unwrap();
        let left_next = s.left.pf_step(&d);
        assert!(left_next.particles().iter().all(|&x| x > s.threshold));
        let right_next = s.right.pf_step(&d);
        assert!(right_next.particles().iter().all(|&x| x <= s.threshold));
    }

    #[test]
    fn right_peak_variance_examples() {
        let cfg = McConfig {
            particles: 4000,
            ..McConfig::default()
        };
        let (v0, _) = variance_of_right_peak(3.2, 0.0, &cfg).unwrap();
        assert!(v0 < 1e-24);

        let (v, se) = variance_of_right_peak(3.2, 0.05, &cfg).unwrap();
        let iv = analytic::support_intervals(3.2, 0.05).unwrap();
        assert!(v > 0.0 && se > 0.0);
        assert!(v <= (iv.q_hi - iv.q_lo).powi(2));

        assert!(matches!(
            variance_of_right_peak(3.3, 0.2, &cfg),
            Err(Error::Regime(_))
        ));
    }

    #[test]
    fn profile_rejects_bad_sequences() {
        let cfg = McConfig::default();
        assert!(right_derivative_profile(3.2, &[0.01, 0.0], &cfg).is_err());
        assert!(right_derivative_profile(3.2, &[0.01, 0.02], &cfg).is_err());
        assert!(right_derivative_profile(3.2, &[], &cfg).is_err());
    }

    #[test]
    fn time_average_examples() {
        let p = SamplePath {
            x0: 0.25,
            states: vec![0.25; 10],
            lambdas: vec![0.3; 9],
            seed: 0,
        };
        assert_eq!(time_average(&p, 3).unwrap(), 0.25);
        assert!(matches!(time_average(&p, 10), Err(Error::Length { .. })));

        let d = ParameterDistribution::point(3.2).unwrap();
        let path = generate_path(&d, 0.3, 10_000, 1).unwrap();
        assert!((time_average(&path, 1000).unwrap() - 0.65625).abs() < 1e-6);
    }

    #[test]
    fn occupation_examples() {
        let d = ParameterDistribution::uniform(3.2, 0.05).unwrap();
        let path = generate_path(&d, 0.3, 100_000, 9).unwrap();
        assert_eq!(occupation_fraction(&path, (0.0, 1.0), 100).unwrap(), 1.0);
        let gap = occupation_fraction(&path, (0.6, 0.75), 1000).unwrap();
        assert_eq!(gap, 0.0);
        let left = occupation_fraction(&path, (0.0, nonzero_fixed_point(3.2)), 1000).unwrap();
        assert!((left - 0.5).abs() < 1e-4);
    }

    #[test]
    fn histogram_counts_and_csv() {
        let mut h = Histogram::uniform(4, 0.0, 1.0).unwrap();
        h.extend(&[0.0, 0.1, 0.3, 0.5, 1.0, 1.5]);
        assert_eq!(h.counts(), &[2, 1, 1, 1]);
        assert_eq!(h.total(), 5);
        assert!((h.density(0) - 2.0 / (5.0 * 0.25)).abs() < 1e-15);
        assert_eq!(h.occupied_runs(), vec![(0, 3)]);
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("bin_lo,bin_hi,count,density"));
        assert_eq!(text.lines().count(), 5);
        assert!(Histogram::new(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn ensemble_csv_roundtrip() {
        let d = ParameterDistribution::uniform(3.7, 0.1).unwrap();
        let e = uniform_ensemble(64, 12).unwrap().pf_iterate(&d, 3);
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        let back = Ensemble::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn bootstrap_se_is_reasonable() {
        let e = uniform_ensemble(4000, 6).unwrap();
        let se = bootstrap_variance_se(e.particles(), 200, 1).unwrap();
        // for U(0,1): Var(s²) ≈ (μ4 - σ⁴)/n = (1/80 - 1/144)/n
        let expected = ((1.0 / 80.0 - 1.0 / 144.0) / 4000.0f64).sqrt();
        assert!(
            (se / expected - 1.0).abs() < 0.25,
            "se={se} expected={expected}"
        );
    }
}
