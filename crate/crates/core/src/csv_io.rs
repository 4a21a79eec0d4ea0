//! CSV formats for input series, traces and reports.
//!
//! Input files carry one header line and one of three layouts:
//!
//! ```text
//! t,y
//! t,y,x1,...,xd
//! t,score
//! ```
//!
//! Trace files always use
//!
//! ```text
//! t,y,y_hat,score,radius,lower,upper,covered,width,g,wealth
//! ```
//!
//! with `covered` written as `0`/`1` and `wealth` left empty for updaters that
//! do not bet. Floats use Rust's shortest round-trip formatting.

use std::io::{Read, Write};

use crate::engine::StepTrace;
use crate::error::{Error, Result};
use crate::experiments::{ExperimentReport, ProbeReport};
use crate::forecasters::Observation;

pub const TRACE_HEADER: [&str; 11] = [
    "t", "y", "y_hat", "score", "radius", "lower", "upper", "covered", "width", "g", "wealth",
];

/// A parsed input file.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSeries {
    /// `t,y` or `t,y,x1..xd`; `x` is empty for the former.
    Responses(Vec<Observation>),
    /// A `score` column.
    Scores(Vec<f64>),
}

impl InputSeries {
    pub fn len(&self) -> usize {
        match self {
            InputSeries::Responses(v) => v.len(),
            InputSeries::Scores(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Feature dimension (0 for `t,y` and score files).
    pub fn dim(&self) -> usize {
        match self {
            InputSeries::Responses(v) => v.first().map_or(0, |o| o.x.len()),
            InputSeries::Scores(_) => 0,
        }
    }
}

fn parse_value(field: &str, line: u64, column: &str) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::Malformed {
        line,
        message: format!("column `{column}`: cannot parse {field:?} as a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Malformed {
            line,
            message: format!("column `{column}`: non-finite value {field:?}"),
        });
    }
    Ok(v)
}

/// Read an input series.
///
/// With `scores_only` any file with a `score` column is accepted, so a trace
/// file can be fed back in directly. Otherwise the header must be exactly
/// `t,y` or `t,y,x1,...,xd`; a bare `t,score` header is also recognised.
pub fn read_input(reader: impl Read, scores_only: bool) -> Result<InputSeries> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let is_scores = headers == ["t", "score"];

    if scores_only || is_scores {
        let col = headers
            .iter()
            .position(|h| h == "score")
            .ok_or_else(|| Error::Malformed {
                line: 1,
                message: "header has no `score` column".into(),
            })?;
        let mut scores = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let field = rec.get(col).ok_or_else(|| Error::Malformed {
                line,
                message: "missing `score` field".into(),
            })?;
            let v = parse_value(field, line, "score")?;
            if v < 0.0 {
                return Err(Error::Malformed {
                    line,
                    message: format!("negative score {v}"),
                });
            }
            scores.push(v);
        }
        return Ok(InputSeries::Scores(scores));
    }

    let valid = headers.len() >= 2
        && headers[0] == "t"
        && headers[1] == "y"
        && headers[2..]
            .iter()
            .enumerate()
            .all(|(i, h)| *h == format!("x{}", i + 1));
    if !valid {
        return Err(Error::Malformed {
            line: 1,
            message: format!(
                "expected header `t,y`, `t,y,x1,...,xd` or `t,score`, got `{}`",
                headers.join(",")
            ),
        });
    }
    let d = headers.len() - 2;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let y = parse_value(&rec[1], line, "y")?;
        let x = (0..d)
            .map(|j| parse_value(&rec[j + 2], line, &headers[j + 2]))
            .collect::<Result<Vec<_>>>()?;
        rows.push(Observation::new(x, y));
    }
    Ok(InputSeries::Responses(rows))
}

fn num(v: f64) -> String {
    format!("{v}")
}

pub fn write_trace(writer: impl Write, trace: &[StepTrace]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRACE_HEADER)?;
    for r in trace {
        let iv = r.interval();
        w.write_record([
            r.t.to_string(),
            num(r.y),
            num(r.y_hat),
            num(r.score),
            num(r.radius),
            num(iv.lower),
            num(iv.upper),
            if r.covered { "1" } else { "0" }.to_string(),
            num(r.width),
            num(r.g),
            r.wealth.map(num).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a trace file written by [`write_trace`].
pub fn read_trace(reader: impl Read) -> Result<Vec<StepTrace>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if headers != TRACE_HEADER {
        return Err(Error::Malformed {
            line: 1,
            message: "not a trace header".into(),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let f = |i: usize| parse_value(&rec[i], line, TRACE_HEADER[i]);
        let t = rec[0].parse().map_err(|_| Error::Malformed {
            line,
            message: format!("bad step index {:?}", &rec[0]),
        })?;
        let covered = match &rec[7] {
            "1" => true,
            "0" => false,
            other => {
                return Err(Error::Malformed {
                    line,
                    message: format!("covered must be 0 or 1, got {other:?}"),
                })
            }
        };
        let wealth = if rec[10].is_empty() { None } else { Some(f(10)?) };
        out.push(StepTrace {
            t,
            y: f(1)?,
            y_hat: f(2)?,
            score: f(3)?,
            radius: f(4)?,
            covered,
            width: f(8)?,
            g: f(9)?,
            wealth,
        });
    }
    Ok(out)
}

/// Per-step summary of a (possibly multi-horizon) trace.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSummary {
    /// Step ahead, 1-based; `None` for the pooled row.
    pub step: Option<usize>,
    pub observations: usize,
    pub coverage: f64,
    pub mean_width: f64,
}

/// Coverage and mean width per step ahead, plus a pooled row.
///
/// Row `i` of the trace belongs to step `i mod horizon + 1`. `burn_in` leading
/// rows are dropped first.
pub fn step_summaries(trace: &[StepTrace], horizon: usize, burn_in: usize) -> Vec<StepSummary> {
    let horizon = horizon.max(1);
    let summarize = |rows: Vec<&StepTrace>, step| {
        let n = rows.len();
        let (cov, width) = rows
            .iter()
            .fold((0usize, 0.0), |(c, w), r| (c + usize::from(r.covered), w + r.width));
        StepSummary {
            step,
            observations: n,
            coverage: if n == 0 { f64::NAN } else { cov as f64 / n as f64 },
            mean_width: if n == 0 { f64::NAN } else { width / n as f64 },
        }
    };
    let kept = || trace.iter().enumerate().skip(burn_in.min(trace.len()));
    let mut out: Vec<StepSummary> = (0..horizon)
        .map(|k| {
            summarize(
                kept().filter(|(i, _)| i % horizon == k).map(|(_, r)| r).collect(),
                Some(k + 1),
            )
        })
        .collect();
    if horizon > 1 {
        out.push(summarize(kept().map(|(_, r)| r).collect(), None));
    }
    out
}

pub fn write_step_summaries(writer: impl Write, rows: &[StepSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["step", "observations", "coverage", "mean_width"])?;
    for r in rows {
        w.write_record([
            r.step.map_or_else(|| "all".to_string(), |k| k.to_string()),
            r.observations.to_string(),
            num(r.coverage),
            num(r.mean_width),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per method with seed-aggregated metrics.
pub fn write_experiment_summary(writer: impl Write, report: &ExperimentReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "method",
        "updater",
        "eta",
        "forecaster",
        "seeds",
        "coverage",
        "coverage_sd",
        "mean_width",
        "mean_width_deviation",
    ])?;
    for m in &report.methods {
        w.write_record([
            m.method.to_string(),
            m.method.id().to_string(),
            m.method.eta().map(num).unwrap_or_default(),
            report.forecaster.name().to_string(),
            report.seeds.len().to_string(),
            num(m.coverage),
            num(m.coverage_sd),
            num(m.mean_width),
            num(m.mean_width_deviation),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Seed-averaged rolling series in long format.
///
/// `t` is the 1-based index, after burn-in, of the last row in each window.
pub fn write_experiment_rolling(
    writer: impl Write,
    report: &ExperimentReport,
    window: usize,
    deviation_window: usize,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["method", "series", "t", "value"])?;
    for m in &report.methods {
        let label = m.method.to_string();
        for (name, series, win) in [
            ("rolling_coverage", &m.rolling_coverage, window),
            ("rolling_width", &m.rolling_width, window),
            ("width_deviation", &m.width_deviation, deviation_window),
        ] {
            for (i, v) in series.iter().enumerate() {
                w.write_record([label.clone(), name.to_string(), (i + win).to_string(), num(*v)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per invariant with its status.
pub fn write_probe_report(writer: impl Write, report: &ProbeReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["invariant", "status", "checked", "violations", "first_violation"])?;
    let bounded = report.config.adversary.is_bounded();
    for c in &report.checks {
        let status = match (bounded, c.violations) {
            (false, _) => "not_applicable",
            (true, 0) => "pass",
            (true, _) => "fail",
        };
        w.write_record([
            c.invariant.name().to_string(),
            status.to_string(),
            c.checked.to_string(),
            c.violations.to_string(),
            c.first_violation.map(|s| s.to_string()).unwrap_or_default(),
        ])?;
    }
    let cov_status = if bounded {
        "info"
    } else if report.passed() {
        "expected_by_necessity_argument"
    } else {
        "fail"
    };
    w.write_record([
        "miscoverage".to_string(),
        cov_status.to_string(),
        report.steps_run.to_string(),
        num(report.miscoverage),
        String::new(),
    ])?;
    w.flush()?;
    Ok(())
}

/// Per-step radii, wealth and running extrema.
pub fn write_probe_rows(writer: impl Write, report: &ProbeReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "t",
        "score",
        "radius",
        "covered",
        "wealth",
        "step_change",
        "max_abs_radius",
        "max_step_change",
        "min_wealth",
    ])?;
    for r in &report.rows {
        w.write_record([
            r.t.to_string(),
            num(r.score),
            num(r.radius),
            if r.covered { "1" } else { "0" }.to_string(),
            num(r.wealth),
            num(r.step_change),
            num(r.max_abs_radius),
            num(r.max_step_change),
            num(r.min_wealth),
        ])?;
    }
    w.flush()?;
    Ok(())
}
