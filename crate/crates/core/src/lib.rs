//! Parameter-free online conformal prediction.
//!
//! A conformal predictor emits `[Ŷ_t − s_t, Ŷ_t + s_t]` around a point forecast
//! and adjusts the radius `s_t` online so that, over time, the fraction of
//! misses approaches a target `α`. Adjusting the radius amounts to online
//! quantile estimation under the pinball loss.
//!
//! This crate treats that estimation as a coin-betting game. The
//! Krichevsky–Trofimov and online-Newton-step bettors need no learning rate,
//! while online gradient descent and its scale-free variant are included as
//! tuned baselines.
//!
//! ```
//! use betting_conformal::{run_scores, StreamConfig, UpdaterSpec};
//!
//! let config = StreamConfig::new(0.1, UpdaterSpec::Kt)?;
//! let scores = (0..10_000).map(|i| ((i * 7919) % 1000) as f64 / 1000.0);
//! let trace = run_scores(&config, scores)?;
//! let coverage = trace.iter().filter(|r| r.covered).count() as f64 / trace.len() as f64;
//! assert!((coverage - 0.9).abs() < 0.02);
//! # Ok::<(), betting_conformal::Error>(())
//! ```
//!
//! The `book/` directory at the repository root walks through each piece; its
//! code listings are compiled and run as doc-tests of this crate.

pub mod csv_io;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod forecasters;
pub mod quantile_loss;
pub mod updaters;

pub use engine::{
    run_forecasts, run_multi_horizon_ar, run_scores, run_stream, ConformalStream, ForecastingStream,
    MultiHorizonStream, PredictionInterval, StepTrace, StreamConfig,
};
pub use error::{Error, Result};
pub use forecasters::{
    ar_fit, ols_fit, persistence_forecast, wls_fit, ArModel, Forecaster, LinearModel, Observation, OnlineAr,
    OnlineLinear, Persistence, WeightedLinearModel,
};
pub use quantile_loss::{pinball_loss, pinball_subgradient, QuantileLevel};
pub use updaters::{FixedState, KtState, OgdState, OnsState, SfOgdState, Updater, UpdaterSpec};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/pinball-loss.md")]
    mod pinball_loss {}
    #[doc = include_str!("../../../book/src/coin-betting.md")]
    mod coin_betting {}
    #[doc = include_str!("../../../book/src/gradient-baselines.md")]
    mod gradient_baselines {}
    #[doc = include_str!("../../../book/src/conformal-loop.md")]
    mod conformal_loop {}
    #[doc = include_str!("../../../book/src/forecasters.md")]
    mod forecasters {}
    #[doc = include_str!("../../../book/src/changepoint.md")]
    mod changepoint {}
    #[doc = include_str!("../../../book/src/probe.md")]
    mod probe {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
