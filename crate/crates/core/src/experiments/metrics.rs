//! Coverage, width and regret summaries of a trace.
//!
//! Rolling statistics use trailing windows: entry `i` summarises rows
//! `i ..= i + w − 1`, so a series of length `T` yields `T − w + 1` values.

use crate::engine::StepTrace;
use crate::error::{Error, Result};
use crate::quantile_loss::{pinball_loss, QuantileLevel};

/// Default rolling window for local coverage.
pub const DEFAULT_COVERAGE_WINDOW: usize = 100;
/// Default rolling window for local width deviation.
pub const DEFAULT_DEVIATION_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageSummary {
    pub coverage: f64,
    pub mean_width: f64,
    pub rolling_coverage: Vec<f64>,
    pub rolling_width: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport {
    /// Grid radius with the smallest cumulative pinball loss.
    pub best_radius: f64,
    /// `R_t(s°)` for `t = 1..=T`.
    pub curve: Vec<f64>,
}

impl RegretReport {
    pub fn total(&self) -> f64 {
        self.curve.last().copied().unwrap_or(0.0)
    }

    /// Average regret `R_T / T`.
    pub fn average(&self) -> f64 {
        if self.curve.is_empty() {
            0.0
        } else {
            self.total() / self.curve.len() as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub coverage: f64,
    pub mean_width: f64,
    pub rolling_coverage: Vec<f64>,
    pub rolling_width: Vec<f64>,
    pub width_deviation: Vec<f64>,
    pub regret: RegretReport,
}

impl MetricsReport {
    /// All metrics with the default regret grid.
    pub fn compute(trace: &[StepTrace], alpha: f64, window: usize, deviation_window: usize) -> Result<Self> {
        let cov = coverage_metrics(trace, window)?;
        let level = QuantileLevel::from_miscoverage(alpha)?;
        Ok(Self {
            coverage: cov.coverage,
            mean_width: cov.mean_width,
            rolling_coverage: cov.rolling_coverage,
            rolling_width: cov.rolling_width,
            width_deviation: width_deviation(trace, deviation_window)?,
            regret: regret(trace, &default_grid(trace), level)?,
        })
    }

    pub fn mean_width_deviation(&self) -> f64 {
        mean(&self.width_deviation)
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn check_window(window: usize, len: usize) -> Result<()> {
    if window == 0 {
        return Err(Error::InvalidParameter("window must be positive".into()));
    }
    if window > len {
        return Err(Error::WindowTooLarge { window, len });
    }
    Ok(())
}

/// Trailing rolling mean.
pub fn rolling_mean(xs: &[f64], window: usize) -> Result<Vec<f64>> {
    check_window(window, xs.len())?;
    let mut out = Vec::with_capacity(xs.len() - window + 1);
    let mut sum: f64 = xs[..window].iter().sum();
    out.push(sum / window as f64);
    for i in window..xs.len() {
        sum += xs[i] - xs[i - window];
        out.push(sum / window as f64);
    }
    Ok(out)
}

/// Trailing rolling sample standard deviation (denominator `w − 1`).
pub fn rolling_std(xs: &[f64], window: usize) -> Result<Vec<f64>> {
    check_window(window, xs.len())?;
    if window < 2 {
        return Err(Error::InvalidParameter(
            "standard deviation needs a window of at least 2".into(),
        ));
    }
    Ok(xs
        .windows(window)
        .map(|w| {
            let m = mean(w);
            (w.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (window - 1) as f64).sqrt()
        })
        .collect())
}

pub fn coverage_metrics(trace: &[StepTrace], window: usize) -> Result<CoverageSummary> {
    if trace.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let covered: Vec<f64> = trace.iter().map(|r| f64::from(u8::from(r.covered))).collect();
    let widths: Vec<f64> = trace.iter().map(|r| r.width).collect();
    Ok(CoverageSummary {
        coverage: mean(&covered),
        mean_width: mean(&widths),
        rolling_coverage: rolling_mean(&covered, window)?,
        rolling_width: rolling_mean(&widths, window)?,
    })
}

/// Rolling sample standard deviation of interval widths.
pub fn width_deviation(trace: &[StepTrace], window: usize) -> Result<Vec<f64>> {
    let widths: Vec<f64> = trace.iter().map(|r| r.width).collect();
    rolling_std(&widths, window)
}

/// Uniform grid of `points` radii over `[0, max]`.
pub fn uniform_grid(max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n).map(|i| max * i as f64 / (n - 1) as f64).collect(),
    }
}

/// 1001 points over `[0, 1.5 · max score]`.
pub fn default_grid(trace: &[StepTrace]) -> Vec<f64> {
    let max_score = trace.iter().map(|r| r.score).fold(0.0, f64::max);
    uniform_grid(1.5 * max_score, 1001)
}

/// Regret of the trace's radii against the best fixed radius on `grid`.
///
/// Ties go to the smaller radius.
pub fn regret(trace: &[StepTrace], grid: &[f64], level: QuantileLevel) -> Result<RegretReport> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("regret grid is empty".into()));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best = (f64::INFINITY, sorted[0]);
    for &s in &sorted {
        let loss: f64 = trace.iter().map(|r| pinball_loss(s, r.score, level)).sum();
        if loss < best.0 {
            best = (loss, s);
        }
    }
    let best_radius = best.1;
    let curve = trace
        .iter()
        .scan(0.0, |acc, r| {
            *acc += pinball_loss(r.radius, r.score, level) - pinball_loss(best_radius, r.score, level);
            Some(*acc)
        })
        .collect();
    Ok(RegretReport { best_radius, curve })
}
