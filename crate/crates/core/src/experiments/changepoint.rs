//! Piecewise-stationary linear regression data.
//!
//! `Y_t = X_tᵀ β_t + ε_t` with `X_t ~ N(0, I_d)` and `ε_t ~ N(0, σ²)`, where
//! `β_t` is constant within each segment.
//!
//! Randomness comes from ChaCha8 seeded with `ChangepointSpec::seed`; segment `k` reads
//! from ChaCha stream `k`, so a segment's draws do not depend on the lengths of
//! the segments before it. Within a step the `d` feature coordinates are drawn
//! first, then the noise. Normals use the ziggurat sampler of `rand_distr`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::forecasters::Observation;

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub len: usize,
    pub beta: Vec<f64>,
}

impl Segment {
    pub fn new(len: usize, beta: Vec<f64>) -> Self {
        Self { len, beta }
    }
}

/// How feature vectors are produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Features {
    /// i.i.d. standard normal coordinates.
    Gaussian,
    /// The same vector at every step.
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChangepointSpec {
    pub segments: Vec<Segment>,
    pub noise_sd: f64,
    pub features: Features,
    pub seed: u64,
}

impl Default for ChangepointSpec {
    /// Three regimes over 2000 steps with switches after steps 500 and 1500.
    fn default() -> Self {
        Self {
            segments: vec![
                Segment::new(500, vec![2.0, 1.0, 0.0, 0.0]),
                Segment::new(1000, vec![0.0, -2.0, -1.0, 0.0]),
                Segment::new(500, vec![0.0, 0.0, 2.0, 1.0]),
            ],
            noise_sd: 1.0,
            features: Features::Gaussian,
            seed: 0,
        }
    }
}

impl ChangepointSpec {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn dim(&self) -> usize {
        self.segments.first().map_or(0, |s| s.beta.len())
    }

    pub fn len(&self) -> usize {
        self.segments.iter().map(|s| s.len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// 0-based indices at which a new segment starts (excluding 0).
    pub fn boundaries(&self) -> Vec<usize> {
        self.segments
            .iter()
            .scan(0, |acc, s| {
                *acc += s.len;
                Some(*acc)
            })
            .take(self.segments.len().saturating_sub(1))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::InvalidParameter("segment list is empty".into()));
        }
        let d = self.dim();
        if d == 0 {
            return Err(Error::InvalidParameter("coefficient vectors are empty".into()));
        }
        for s in &self.segments {
            if s.len == 0 {
                return Err(Error::InvalidParameter("segment length must be positive".into()));
            }
            if s.beta.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: s.beta.len(),
                });
            }
        }
        if let Features::Fixed(x) = &self.features {
            if x.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: x.len(),
                });
            }
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise standard deviation must be nonnegative, got {}",
                self.noise_sd
            )));
        }
        Ok(())
    }
}

pub fn generate_changepoint(spec: &ChangepointSpec) -> Result<Vec<Observation>> {
    spec.validate()?;
    let d = spec.dim();
    let mut out = Vec::with_capacity(spec.len());
    for (k, seg) in spec.segments.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(k as u64);
        for _ in 0..seg.len {
            let x: Vec<f64> = match &spec.features {
                Features::Gaussian => (0..d).map(|_| rng.sample(StandardNormal)).collect(),
                Features::Fixed(x) => x.clone(),
            };
            let eps: f64 = rng.sample(StandardNormal);
            let y = x.iter().zip(&seg.beta).map(|(a, b)| a * b).sum::<f64>() + spec.noise_sd * eps;
            out.push(Observation::new(x, y));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout() {
        let spec = ChangepointSpec::default();
        assert_eq!(spec.len(), 2000);
        assert_eq!(spec.boundaries(), vec![500, 1500]);
        assert_eq!(generate_changepoint(&spec).unwrap().len(), 2000);
    }

    #[test]
    fn noiseless_projection() {
        let spec = ChangepointSpec {
            noise_sd: 0.0,
            features: Features::Fixed(vec![1.0, 0.0, 0.0, 0.0]),
            ..ChangepointSpec::default()
        };
        let data = generate_changepoint(&spec).unwrap();
        assert!(data[..500].iter().all(|o| o.y == 2.0));
        assert!(data[500..1500].iter().all(|o| o.y == 0.0));
        assert!(data[1500..].iter().all(|o| o.y == 0.0));
    }

    #[test]
    fn pure_function_of_spec_and_seed() {
        let a = generate_changepoint(&ChangepointSpec::default().with_seed(9)).unwrap();
        let b = generate_changepoint(&ChangepointSpec::default().with_seed(9)).unwrap();
        let c = generate_changepoint(&ChangepointSpec::default().with_seed(10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn segment_draws_do_not_depend_on_earlier_lengths() {
        let mut short = ChangepointSpec::default().with_seed(3);
        short.segments[0].len = 100;
        let a = generate_changepoint(&ChangepointSpec::default().with_seed(3)).unwrap();
        let b = generate_changepoint(&short).unwrap();
        assert_eq!(a[500..], b[100..]);
    }

    #[test]
    fn invalid_specs() {
        let empty = ChangepointSpec {
            segments: vec![],
            ..ChangepointSpec::default()
        };
        assert!(generate_changepoint(&empty).is_err());
        let mut ragged = ChangepointSpec::default();
        ragged.segments[1].beta.pop();
        assert!(generate_changepoint(&ragged).is_err());
        let mut zero = ChangepointSpec::default();
        zero.segments[2].len = 0;
        assert!(generate_changepoint(&zero).is_err());
    }

    #[test]
    fn first_segment_variance_matches_analytic_value() {
        // Var(y) = βᵀβ + σ² = 6 for β = (2, 1, 0, 0), σ = 1
        let within = (0..200u64)
            .filter(|&seed| {
                let data = generate_changepoint(&ChangepointSpec::default().with_seed(seed)).unwrap();
                let ys: Vec<f64> = data[..500].iter().map(|o| o.y).collect();
                let mean = ys.iter().sum::<f64>() / 500.0;
                let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / 499.0;
                (var - 6.0).abs() <= 0.15 * 6.0
            })
            .count();
        // sd of the sample variance is about 6·√(2/499) ≈ 0.38, so 0.9 is ~2.4 sd
        assert!(within >= 190, "{within} of 200 seeds within 15%");
    }
}
