//! Multi-seed comparison of updaters on changepoint data.
//!
//! For each seed the data and the forecasts are produced once; every method
//! then runs its own conformal stream over the same `(Ŷ_t, Y_t)` pairs. Seeds
//! run in parallel and are folded into per-method summaries in seed order, so
//! results do not depend on thread scheduling.

use rayon::prelude::*;

use crate::engine::{run_forecasts, StepTrace, StreamConfig};
use crate::error::Result;
use crate::experiments::changepoint::{generate_changepoint, ChangepointSpec};
use crate::experiments::metrics::{
    coverage_metrics, mean, width_deviation, DEFAULT_COVERAGE_WINDOW, DEFAULT_DEVIATION_WINDOW,
};
use crate::forecasters::{Forecaster, OnlineLinear, DEFAULT_DECAY};
use crate::updaters::UpdaterSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForecasterKind {
    Ols,
    Wls { decay: f64 },
}

impl ForecasterKind {
    pub fn wls() -> Self {
        ForecasterKind::Wls { decay: DEFAULT_DECAY }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ForecasterKind::Ols => "ols",
            ForecasterKind::Wls { .. } => "wls",
        }
    }

    fn build(&self, dim: usize) -> Result<OnlineLinear> {
        match *self {
            ForecasterKind::Ols => Ok(OnlineLinear::ols(dim)),
            ForecasterKind::Wls { decay } => OnlineLinear::wls(dim, decay),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChangepointExperiment {
    pub spec: ChangepointSpec,
    pub forecaster: ForecasterKind,
    pub methods: Vec<UpdaterSpec>,
    pub alpha: f64,
    pub seeds: Vec<u64>,
    pub burn_in: usize,
    pub window: usize,
    pub deviation_window: usize,
}

impl ChangepointExperiment {
    /// Defaults: OLS, α = 0.1, seeds `0..n`, burn-in 50.
    pub fn new(methods: Vec<UpdaterSpec>, seeds: usize) -> Self {
        Self {
            spec: ChangepointSpec::default(),
            forecaster: ForecasterKind::Ols,
            methods,
            alpha: 0.1,
            seeds: (0..seeds as u64).collect(),
            burn_in: StreamConfig::DEFAULT_BURN_IN,
            window: DEFAULT_COVERAGE_WINDOW,
            deviation_window: DEFAULT_DEVIATION_WINDOW,
        }
    }

    /// Forecasts and traces for a single seed, one trace per method.
    pub fn run_seed(&self, seed: u64) -> Result<SeedRun> {
        let spec = self.spec.clone().with_seed(seed);
        let data = generate_changepoint(&spec)?;
        let mut forecaster = self.forecaster.build(spec.dim())?;
        let pairs: Vec<(f64, f64)> = data
            .iter()
            .map(|o| {
                let y_hat = forecaster.predict(&o.x);
                forecaster.observe(&o.x, o.y);
                (y_hat, o.y)
            })
            .collect();
        let traces = self
            .methods
            .iter()
            .map(|&m| {
                let cfg = StreamConfig::new(self.alpha, m)?.with_burn_in(self.burn_in);
                run_forecasts(&cfg, pairs.iter().copied())
            })
            .collect::<Result<_>>()?;
        Ok(SeedRun { seed, traces })
    }

    pub fn summarize_seed(&self, run: &SeedRun) -> Result<Vec<SeedSummary>> {
        run.traces
            .iter()
            .map(|trace| {
                SeedSummary::compute(
                    &trace[self.burn_in.min(trace.len())..],
                    self.window,
                    self.deviation_window,
                )
            })
            .collect()
    }

    pub fn run(&self) -> Result<ExperimentReport> {
        let per_seed: Vec<Vec<SeedSummary>> = self
            .seeds
            .par_iter()
            .map(|&seed| self.run_seed(seed).and_then(|run| self.summarize_seed(&run)))
            .collect::<Result<_>>()?;
        Ok(self.aggregate(per_seed))
    }

    /// Fold per-seed summaries (indexed `[seed][method]`) into a report.
    pub fn aggregate(&self, per_seed: Vec<Vec<SeedSummary>>) -> ExperimentReport {
        let methods = self
            .methods
            .iter()
            .enumerate()
            .map(|(m, &method)| {
                let rows: Vec<&SeedSummary> = per_seed.iter().map(|s| &s[m]).collect();
                MethodSummary::fold(method, &rows)
            })
            .collect();
        ExperimentReport {
            forecaster: self.forecaster,
            seeds: self.seeds.clone(),
            methods,
            per_seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub traces: Vec<Vec<StepTrace>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedSummary {
    pub coverage: f64,
    pub mean_width: f64,
    pub mean_width_deviation: f64,
    pub rolling_coverage: Vec<f64>,
    pub rolling_width: Vec<f64>,
    pub width_deviation: Vec<f64>,
}

impl SeedSummary {
    pub fn compute(trace: &[StepTrace], window: usize, deviation_window: usize) -> Result<Self> {
        let cov = coverage_metrics(trace, window)?;
        let dev = width_deviation(trace, deviation_window)?;
        Ok(Self {
            coverage: cov.coverage,
            mean_width: cov.mean_width,
            mean_width_deviation: mean(&dev),
            rolling_coverage: cov.rolling_coverage,
            rolling_width: cov.rolling_width,
            width_deviation: dev,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: UpdaterSpec,
    pub coverage: f64,
    pub coverage_sd: f64,
    pub mean_width: f64,
    pub mean_width_deviation: f64,
    /// Seed-averaged rolling series.
    pub rolling_coverage: Vec<f64>,
    pub rolling_width: Vec<f64>,
    pub width_deviation: Vec<f64>,
}

fn average_series<'a>(series: impl Iterator<Item = &'a Vec<f64>>, n: usize) -> Vec<f64> {
    let mut acc: Vec<f64> = Vec::new();
    for s in series {
        if acc.is_empty() {
            acc = vec![0.0; s.len()];
        }
        for (a, v) in acc.iter_mut().zip(s) {
            *a += v;
        }
    }
    acc.iter().map(|a| a / n as f64).collect()
}

impl MethodSummary {
    fn fold(method: UpdaterSpec, rows: &[&SeedSummary]) -> Self {
        let n = rows.len().max(1);
        let cov: Vec<f64> = rows.iter().map(|r| r.coverage).collect();
        let coverage = mean(&cov);
        let coverage_sd = if cov.len() > 1 {
            (cov.iter().map(|c| (c - coverage).powi(2)).sum::<f64>() / (cov.len() - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            method,
            coverage,
            coverage_sd,
            mean_width: mean(&rows.iter().map(|r| r.mean_width).collect::<Vec<_>>()),
            mean_width_deviation: mean(&rows.iter().map(|r| r.mean_width_deviation).collect::<Vec<_>>()),
            rolling_coverage: average_series(rows.iter().map(|r| &r.rolling_coverage), n),
            rolling_width: average_series(rows.iter().map(|r| &r.rolling_width), n),
            width_deviation: average_series(rows.iter().map(|r| &r.width_deviation), n),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub forecaster: ForecasterKind,
    pub seeds: Vec<u64>,
    pub methods: Vec<MethodSummary>,
    /// `[seed][method]`.
    pub per_seed: Vec<Vec<SeedSummary>>,
}

impl ExperimentReport {
    pub fn method(&self, spec: UpdaterSpec) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_seed_ordered() {
        let exp = ChangepointExperiment::new(vec![UpdaterSpec::Kt, UpdaterSpec::Ogd { eta: 1.0 }], 4);
        let a = exp.run().unwrap();
        let b = exp.run().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.per_seed.len(), 4);
        let seed2 = exp.summarize_seed(&exp.run_seed(2).unwrap()).unwrap();
        assert_eq!(a.per_seed[2], seed2);
    }

    #[test]
    fn methods_share_forecasts() {
        let exp = ChangepointExperiment::new(vec![UpdaterSpec::Kt, UpdaterSpec::Ons], 1);
        let run = exp.run_seed(7).unwrap();
        let (kt, ons) = (&run.traces[0], &run.traces[1]);
        assert_eq!(kt.len(), 2000);
        assert!(kt
            .iter()
            .zip(ons)
            .all(|(a, b)| a.y_hat == b.y_hat && a.score == b.score));
        // unfitted model predicts zero for the first d observations
        assert!(kt[..4].iter().all(|r| r.y_hat == 0.0));
        assert!(kt[4].y_hat != 0.0);
    }
}
