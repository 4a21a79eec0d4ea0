//! The online conformal loop.
//!
//! Each round: emit `[Ŷ_t − s_t, Ŷ_t + s_t]` from the current radius, observe
//! `Y_t`, score it as `S_t = |Y_t − Ŷ_t|`, take the pinball subgradient at
//! `s_t` and advance the updater once.
//!
//! A radius may go negative under the betting updaters. The trace keeps the
//! signed value, the emitted interval is empty and its width is 0.

use crate::error::{Error, Result};
use crate::forecasters::{Forecaster, Observation};
use crate::quantile_loss::{pinball_subgradient, QuantileLevel};
use crate::updaters::{Updater, UpdaterSpec};

/// Configuration for one conformal stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamConfig {
    /// Target miscoverage level, in `(0, 1/2)`.
    pub alpha: f64,
    pub updater: UpdaterSpec,
    /// Number of steps ahead, one radius per step.
    pub horizon: usize,
    /// Leading steps excluded from summary metrics.
    pub burn_in: usize,
}

impl StreamConfig {
    pub const DEFAULT_BURN_IN: usize = 50;

    pub fn new(alpha: f64, updater: UpdaterSpec) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1/2), got {alpha}"
            )));
        }
        // surface bad updater parameters at construction time
        updater.reset()?;
        Ok(Self {
            alpha,
            updater,
            horizon: 1,
            burn_in: Self::DEFAULT_BURN_IN,
        })
    }

    pub fn with_horizon(mut self, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        self.horizon = horizon;
        Ok(self)
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    /// Quantile level `1 − α` of the pinball loss.
    pub fn level(&self) -> QuantileLevel {
        QuantileLevel::from_miscoverage(self.alpha).expect("alpha validated")
    }
}

/// Symmetric interval around a point forecast.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionInterval {
    pub center: f64,
    pub radius: f64,
    pub lower: f64,
    pub upper: f64,
}

impl PredictionInterval {
    pub fn new(center: f64, radius: f64) -> Self {
        Self {
            center,
            radius,
            lower: center - radius,
            upper: center + radius,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.radius < 0.0
    }

    pub fn width(&self) -> f64 {
        2.0 * self.radius.max(0.0)
    }

    /// Membership, decided on the score `|y − center| ≤ radius`.
    pub fn contains(&self, y: f64) -> bool {
        (y - self.center).abs() <= self.radius
    }
}

/// One row of a stream's history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepTrace {
    /// 1-based observation index.
    pub t: usize,
    pub y: f64,
    pub y_hat: f64,
    pub score: f64,
    /// Signed radius used for this step.
    pub radius: f64,
    pub covered: bool,
    pub width: f64,
    pub g: f64,
    /// Bettor wealth after the update; `None` for non-betting updaters.
    pub wealth: Option<f64>,
}

impl StepTrace {
    pub fn interval(&self) -> PredictionInterval {
        PredictionInterval::new(self.y_hat, self.radius)
    }
}

/// State of a single conformal stream.
#[derive(Debug, Clone)]
pub struct ConformalStream {
    level: QuantileLevel,
    updater: Updater,
    steps: usize,
    faulted_at: Option<usize>,
}

impl ConformalStream {
    pub fn new(config: &StreamConfig) -> Result<Self> {
        Ok(Self {
            level: config.level(),
            updater: config.updater.reset()?,
            steps: 0,
            faulted_at: None,
        })
    }

    pub fn radius(&self) -> f64 {
        self.updater.radius()
    }

    pub fn updater(&self) -> &Updater {
        &self.updater
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_faulted(&self) -> bool {
        self.faulted_at.is_some()
    }

    /// Interval that would be emitted for forecast `y_hat` right now.
    pub fn interval(&self, y_hat: f64) -> PredictionInterval {
        PredictionInterval::new(y_hat, self.radius())
    }

    fn fault(&mut self, what: &'static str, value: f64) -> Error {
        let step = self.steps + 1;
        self.faulted_at = Some(step);
        Error::NonFinite { step, what, value }
    }

    /// One round with an externally produced forecast.
    pub fn step(&mut self, y_hat: f64, y: f64) -> Result<(PredictionInterval, StepTrace)> {
        if let Some(at) = self.faulted_at {
            return Err(Error::Faulted(at));
        }
        if !y_hat.is_finite() {
            return Err(self.fault("forecast", y_hat));
        }
        if !y.is_finite() {
            return Err(self.fault("response", y));
        }
        let interval = self.interval(y_hat);
        let radius = interval.radius;
        let score = (y - y_hat).abs();
        if !score.is_finite() {
            return Err(self.fault("score", score));
        }
        let covered = score <= radius;
        let g = pinball_subgradient(radius, score, self.level);
        let mut next = self.updater;
        next.update(g)?;
        if !next.radius().is_finite() {
            return Err(self.fault("radius", next.radius()));
        }
        self.updater = next;
        self.steps += 1;
        let trace = StepTrace {
            t: self.steps,
            y,
            y_hat,
            score,
            radius,
            covered,
            width: interval.width(),
            g,
            wealth: self.updater.wealth(),
        };
        Ok((interval, trace))
    }

    /// Score-only round: the score is treated as a response around a zero
    /// forecast, so `S = |score − 0|`.
    pub fn step_score(&mut self, score: f64) -> Result<(PredictionInterval, StepTrace)> {
        if score < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "nonconformity scores must be nonnegative, got {score}"
            )));
        }
        self.step(0.0, score)
    }
}

/// A conformal stream that owns its forecaster.
#[derive(Debug, Clone)]
pub struct ForecastingStream<F> {
    pub stream: ConformalStream,
    pub forecaster: F,
}

impl<F: Forecaster> ForecastingStream<F> {
    pub fn new(config: &StreamConfig, forecaster: F) -> Result<Self> {
        Ok(Self {
            stream: ConformalStream::new(config)?,
            forecaster,
        })
    }

    /// Forecast from `x`, close the round on `y`, then let the forecaster learn.
    pub fn step(&mut self, x: &[f64], y: f64) -> Result<(PredictionInterval, StepTrace)> {
        let y_hat = self.forecaster.predict(x);
        let out = self.stream.step(y_hat, y)?;
        self.forecaster.observe(x, y);
        Ok(out)
    }
}

/// Drive a forecasting stream over a whole data source.
pub fn run_stream<F, I>(config: &StreamConfig, forecaster: F, data: I) -> Result<Vec<StepTrace>>
where
    F: Forecaster,
    I: IntoIterator<Item = Observation>,
{
    let mut stream = ForecastingStream::new(config, forecaster)?;
    data.into_iter()
        .enumerate()
        .map(|(i, o)| stream.step(&o.x, o.y).map(|(_, tr)| tr).map_err(|e| e.at(i)))
        .collect()
}

/// Drive a stream over precomputed `(forecast, response)` pairs.
pub fn run_forecasts<I>(config: &StreamConfig, pairs: I) -> Result<Vec<StepTrace>>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut stream = ConformalStream::new(config)?;
    pairs
        .into_iter()
        .enumerate()
        .map(|(i, (y_hat, y))| stream.step(y_hat, y).map(|(_, tr)| tr).map_err(|e| e.at(i)))
        .collect()
}

/// Drive a stream over nonconformity scores directly.
pub fn run_scores<I>(config: &StreamConfig, scores: I) -> Result<Vec<StepTrace>>
where
    I: IntoIterator<Item = f64>,
{
    let mut stream = ConformalStream::new(config)?;
    scores
        .into_iter()
        .enumerate()
        .map(|(i, s)| stream.step_score(s).map(|(_, tr)| tr).map_err(|e| e.at(i)))
        .collect()
}

/// One independently updated radius per step of a forecast horizon.
#[derive(Debug, Clone)]
pub struct MultiHorizonStream {
    streams: Vec<ConformalStream>,
    observed: usize,
}

impl MultiHorizonStream {
    pub fn new(config: &StreamConfig) -> Result<Self> {
        let streams = (0..config.horizon)
            .map(|_| ConformalStream::new(config))
            .collect::<Result<_>>()?;
        Ok(Self { streams, observed: 0 })
    }

    pub fn horizon(&self) -> usize {
        self.streams.len()
    }

    /// Radius currently assigned to each step ahead.
    pub fn radii(&self) -> Vec<f64> {
        self.streams.iter().map(ConformalStream::radius).collect()
    }

    pub fn stream(&self, k: usize) -> &ConformalStream {
        &self.streams[k]
    }

    /// Close one block. `forecasts[k]` is the `(k+1)`-step-ahead forecast made
    /// before any response in the block was revealed. The last block of a
    /// series may be shorter than the horizon.
    ///
    /// Trace rows carry the global observation index.
    pub fn step_block(&mut self, responses: &[f64], forecasts: &[f64]) -> Result<Vec<(PredictionInterval, StepTrace)>> {
        if responses.len() != forecasts.len() || responses.len() > self.horizon() || responses.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: self.horizon(),
                got: responses.len().max(forecasts.len()),
            });
        }
        if let Some(bad) = self.streams.iter().find_map(|s| s.faulted_at) {
            return Err(Error::Faulted(bad));
        }
        let intervals: Vec<_> = forecasts
            .iter()
            .zip(&self.streams)
            .map(|(&f, s)| s.interval(f))
            .collect();
        let mut out = Vec::with_capacity(responses.len());
        for (k, (&y, &f)) in responses.iter().zip(forecasts).enumerate() {
            let (interval, mut trace) = self.streams[k].step(f, y)?;
            debug_assert_eq!(interval, intervals[k]);
            trace.t = self.observed + k + 1;
            out.push((interval, trace));
        }
        self.observed += responses.len();
        Ok(out)
    }
}

/// Recursive multi-step AR forecasting with one radius per step.
///
/// Forecasts for each block of `config.horizon` observations are made from the
/// data before the block; the model refits every `refit_every` observations.
pub fn run_multi_horizon_ar(
    config: &StreamConfig,
    series: &[f64],
    order: usize,
    refit_every: usize,
) -> Result<Vec<StepTrace>> {
    let h = config.horizon;
    let mut manager = MultiHorizonStream::new(config)?;
    let mut model = crate::forecasters::OnlineAr::new(order, refit_every)?;
    let mut out = Vec::with_capacity(series.len());
    for (b, block) in series.chunks(h).enumerate() {
        let forecasts = model.forecast(block.len());
        let rows = manager.step_block(block, &forecasts).map_err(|e| e.at(b * h))?;
        out.extend(rows.into_iter().map(|(_, tr)| tr));
        for &y in block {
            model.push(y);
        }
    }
    Ok(out)
}
