//! The logistic map and its stochastic skew-product extension.
//!
//! A stochastic orbit consumes one parameter draw per step:
//! `x_{n+1} = λ_{n+1} x_n (1 - x_n)` with `λ_i` i.i.d. from a
//! [`ParameterDistribution`]. Randomness is keyed by `(seed, stream, step)`
//! through [`keyed_rng`], so paths and ensembles are reproducible regardless
//! of how work is split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest parameter value for which `[0, 1]` is invariant.
pub const LAMBDA_MAX: f64 = 4.0;

/// Sampler family for the growth parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Uniform,
}

/// Law of the growth parameter: uniform on `[λ̄ - Δλ, λ̄ + Δλ]`, or a point
/// mass at `λ̄` when `Δλ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterDistribution {
    lambda_bar: f64,
    delta_lambda: f64,
    kind: SamplerKind,
}

impl ParameterDistribution {
    pub fn uniform(lambda_bar: f64, delta_lambda: f64) -> Result<Self> {
        if !lambda_bar.is_finite() || !delta_lambda.is_finite() {
            return Err(Error::Domain(format!(
                "parameter distribution needs finite values, got lambda_bar={lambda_bar}, delta={delta_lambda}"
            )));
        }
        if delta_lambda < 0.0 {
            return Err(Error::Domain(format!(
                "half-width must be >= 0, got {delta_lambda}"
            )));
        }
        let (lo, hi) = (lambda_bar - delta_lambda, lambda_bar + delta_lambda);
        if lo < 0.0 || hi > LAMBDA_MAX {
            return Err(Error::Domain(format!(
                "parameter support [{lo}, {hi}] must lie in [0, 4] for the unit interval to be invariant"
            )));
        }
        Ok(Self {
            lambda_bar,
            delta_lambda,
            kind: SamplerKind::Uniform,
        })
    }

    /// Point mass at `lambda`.
    pub fn point(lambda: f64) -> Result<Self> {
        Self::uniform(lambda, 0.0)
    }

    pub fn lambda_bar(&self) -> f64 {
        self.lambda_bar
    }

    pub fn delta_lambda(&self) -> f64 {
        self.delta_lambda
    }

    pub fn kind(&self) -> SamplerKind {
        self.kind
    }

    pub fn lower(&self) -> f64 {
        self.lambda_bar - self.delta_lambda
    }

    pub fn upper(&self) -> f64 {
        self.lambda_bar + self.delta_lambda
    }

    pub fn is_degenerate(&self) -> bool {
        self.delta_lambda == 0.0
    }

    /// Density `g(λ)`; `None` for the point mass, which has no density.
    pub fn density(&self, lambda: f64) -> Option<f64> {
        if self.is_degenerate() {
            return None;
        }
        if (self.lower()..=self.upper()).contains(&lambda) {
            Some(1.0 / (2.0 * self.delta_lambda))
        } else {
            Some(0.0)
        }
    }

    pub fn mean(&self) -> f64 {
        self.lambda_bar
    }

    pub fn variance(&self) -> f64 {
        self.delta_lambda * self.delta_lambda / 3.0
    }

    /// Draws one parameter value. Exactly one `u64` is consumed per call,
    /// including for the point mass.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        match self.kind {
            SamplerKind::Uniform => {
                if self.is_degenerate() {
                    self.lambda_bar
                } else {
                    let v = self.lambda_bar + self.delta_lambda * (2.0 * u - 1.0);
                    v.clamp(self.lower(), self.upper())
                }
            }
        }
    }
}

/// Generator for stream `stream` of `seed`, positioned at step `step`.
///
/// Each step owns one `u64` of the stream, so a particle can be advanced one
/// generation at a time or many at once with identical draws.
pub fn keyed_rng(seed: u64, stream: u64, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(2 * step as u128);
    rng
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=LAMBDA_MAX).contains(&lambda) {
        return Err(Error::Domain(format!(
            "lambda = {lambda} outside [0, 4]; the unit interval is not invariant"
        )));
    }
    Ok(())
}

fn check_state(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("state x = {x} outside [0, 1]")));
    }
    Ok(())
}

#[inline]
pub(crate) fn step_unchecked(lambda: f64, x: f64) -> f64 {
    lambda * x * (1.0 - x)
}

/// `S_λ(x) = λ x (1 - x)`.
pub fn logistic_step(lambda: f64, x: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_state(x)?;
    Ok(step_unchecked(lambda, x))
}

/// Orbit `x0, S(x0), ..., S^n(x0)` (length `n + 1`).
pub fn iterate_deterministic(lambda: f64, x0: f64, n: usize) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    check_state(x0)?;
    let mut out = Vec::with_capacity(n + 1);
    let mut x = x0;
    out.push(x);
    for _ in 0..n {
        x = step_unchecked(lambda, x);
        out.push(x);
    }
    Ok(out)
}

/// One step of the skew product: draw `λ`, then apply `S_λ`.
pub fn stochastic_step<R: Rng + ?Sized>(
    dist: &ParameterDistribution,
    x: f64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    check_state(x)?;
    let lambda = dist.sample(rng);
    Ok((lambda, step_unchecked(lambda, x)))
}

/// One realization of the stochastic orbit together with the parameters it
/// consumed. `lambdas[i]` produced `states[i + 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub x0: f64,
    pub states: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub seed: u64,
}

impl SamplePath {
    /// Number of steps taken.
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Current state (the `Π` projection of the skew product).
    pub fn state(&self) -> f64 {
        *self.states.last().expect("path always holds x0")
    }
}

/// Stochastic orbit of `x0` of `n` steps drawn from stream 0 of `seed`.
pub fn generate_path(
    dist: &ParameterDistribution,
    x0: f64,
    n: usize,
    seed: u64,
) -> Result<SamplePath> {
    check_state(x0)?;
    let mut rng = keyed_rng(seed, 0, 0);
    let mut states = Vec::with_capacity(n + 1);
    let mut lambdas = Vec::with_capacity(n);
    let mut x = x0;
    states.push(x);
    for _ in 0..n {
        let lambda = dist.sample(&mut rng);
        x = step_unchecked(lambda, x);
        lambdas.push(lambda);
        states.push(x);
    }
    Ok(SamplePath {
        x0,
        states,
        lambdas,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn step_examples() {
        assert_eq!(logistic_step(2.0, 0.5).unwrap(), 0.5);
        assert_eq!(logistic_step(4.0, 0.5).unwrap(), 1.0);
        assert!((logistic_step(2.1, 0.12).unwrap() - 0.22176).abs() < 1e-15);
    }

    #[test]
    fn step_rejects_out_of_domain() {
        assert!(matches!(logistic_step(4.1, 0.5), Err(Error::Domain(_))));
        assert!(matches!(logistic_step(-0.1, 0.5), Err(Error::Domain(_))));
        assert!(matches!(logistic_step(2.0, 1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn deterministic_orbits() {
        assert_eq!(iterate_deterministic(2.0, 0.5, 3).unwrap(), vec![0.5; 4]);

        let orbit = iterate_deterministic(1.5, 0.2, 2000).unwrap();
        assert!((orbit[2000] - 1.0 / 3.0).abs() < 1e-12);

        let orbit = iterate_deterministic(3.2, 0.3, 5000).unwrap();
        let (a, b) = (orbit[4999], orbit[5000]);
        let (lo, hi) = (a.min(b), a.max(b));
        assert!((lo - 0.5130445).abs() < 1e-6);
        assert!((hi - 0.7994555).abs() < 1e-6);
    }

    #[test]
    fn distribution_validation() {
        assert!(ParameterDistribution::uniform(3.95, 0.1).is_err());
        assert!(ParameterDistribution::uniform(0.05, 0.1).is_err());
        assert!(ParameterDistribution::uniform(2.0, -0.1).is_err());
        assert!(ParameterDistribution::uniform(f64::NAN, 0.1).is_err());
        assert!(ParameterDistribution::uniform(3.9, 0.1).is_ok());
        let d = ParameterDistribution::uniform(2.0, 0.25).unwrap();
        assert_eq!(d.density(2.1), Some(2.0));
        assert_eq!(d.density(2.5), Some(0.0));
        assert_eq!(
            ParameterDistribution::point(2.0).unwrap().density(2.0),
            None
        );
    }

    #[test]
    fn point_mass_sampling_consumes_one_draw() {
        let d = ParameterDistribution::point(3.2).unwrap();
        let mut a = keyed_rng(9, 0, 0);
        for _ in 0..5 {
            assert_eq!(d.sample(&mut a), 3.2);
        }
        let b = keyed_rng(9, 0, 5);
        assert_eq!(a.get_word_pos(), b.get_word_pos());
    }

    #[test]
    fn uniform_sample_mean() {
        let d = ParameterDistribution::uniform(2.0, 0.5).unwrap();
        let mut rng = keyed_rng(1, 0, 0);
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let v = d.sample(&mut rng);
            assert!((1.5..=2.5).contains(&v));
            sum += v;
        }
        let tol = 3.0 * 0.5 / (3.0 * n as f64).sqrt();
        assert!((sum / n as f64 - 2.0).abs() < tol);
    }

    #[test]
    fn stochastic_step_examples() {
        let mut rng = keyed_rng(3, 0, 0);
        let d = ParameterDistribution::point(2.0).unwrap();
        assert_eq!(stochastic_step(&d, 0.5, &mut rng).unwrap(), (2.0, 0.5));

        let d = ParameterDistribution::uniform(3.2, 0.1).unwrap();
        let (lambda, x) = stochastic_step(&d, 0.0, &mut rng).unwrap();
        assert!((3.1..=3.3).contains(&lambda));
        assert_eq!(x, 0.0);
    }

    #[test]
    fn period_two_path_returns() {
        let d = ParameterDistribution::point(3.2).unwrap();
        let p = (4.2 - (0.2f64 * 4.2).sqrt()) / 6.4;
        let path = generate_path(&d, p, 2, 1).unwrap();
        assert!((path.states[2] - p).abs() < 1e-12);
    }

    #[test]
    fn zero_is_absorbing() {
        let d = ParameterDistribution::uniform(3.2, 0.2).unwrap();
        let path = generate_path(&d, 0.0, 50, 4).unwrap();
        assert!(path.states.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn paths_are_reproducible() {
        let d = ParameterDistribution::uniform(3.6, 0.3).unwrap();
        let a = generate_path(&d, 0.3, 500, 77).unwrap();
        let b = generate_path(&d, 0.3, 500, 77).unwrap();
        assert_eq!(a, b);
        let c = generate_path(&d, 0.3, 500, 78).unwrap();
        assert_ne!(a.states, c.states);
    }

    #[test]
    fn keyed_rng_positions_agree_with_sequential_draws() {
        let d = ParameterDistribution::uniform(3.0, 0.5).unwrap();
        let mut seq = keyed_rng(11, 4, 0);
        let draws: Vec<f64> = (0..10).map(|_| d.sample(&mut seq)).collect();
        for (step, &v) in draws.iter().enumerate() {
            let mut r = keyed_rng(11, 4, step as u64);
            assert_eq!(d.sample(&mut r), v);
        }
    }

    proptest! {
        #[test]
        fn unit_interval_is_invariant(lambda in 0.0f64..=4.0, x in 0.0f64..=1.0) {
            let y = logistic_step(lambda, x).unwrap();
            prop_assert!((0.0..=1.0).contains(&y));
            prop_assert!(y <= lambda / 4.0 + 1e-15);
        }

        #[test]
        fn fixed_point_identity(lambda in 1.0001f64..=4.0) {
            let xs = (lambda - 1.0) / lambda;
            let y = logistic_step(lambda, xs).unwrap();
            prop_assert!((y - xs).abs() <= 2.0 * f64::EPSILON * xs);
        }

        #[test]
        fn path_satisfies_recurrence(seed in any::<u64>(), x0 in 0.0f64..=1.0) {
            let d = ParameterDistribution::uniform(3.5, 0.4).unwrap();
            let path = generate_path(&d, x0, 64, seed).unwrap();
            for i in 0..path.len() {
                let l = path.lambdas[i];
                prop_assert!((d.lower()..=d.upper()).contains(&l));
                prop_assert_eq!(path.states[i + 1], l * path.states[i] * (1.0 - path.states[i]));
                prop_assert!(path.states[i + 1] <= d.upper() / 4.0);
            }
        }

        #[test]
        fn first_iterate_depends_only_on_first_parameter(x in 0.0f64..=1.0, l1 in 3.0f64..3.4, l2 in 3.0f64..3.4, l3 in 3.0f64..3.4) {
            // two parameter streams agreeing in position 1
            let a = [l1, l2];
            let b = [l1, l3];
            prop_assert_eq!(step_unchecked(a[0], x), step_unchecked(b[0], x));
        }
    }
}
