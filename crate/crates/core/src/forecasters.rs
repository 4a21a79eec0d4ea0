//! Point forecasters that produce the interval centres `Ŷ_t`.
//!
//! Batch fits ([`ols_fit`], [`wls_fit`], [`ar_fit`]) solve the normal equations
//! with a Cholesky factorization. If the Gram matrix is not positive definite a
//! small ridge jitter is added to its diagonal and the solve is retried, so a
//! degenerate design still yields a deterministic fit instead of an error.
//!
//! The online forecasters implementing [`Forecaster`] keep the normal equations
//! as running sums, which makes a refit after every observation cheap.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative ridge added to the Gram diagonal when Cholesky fails.
pub const RIDGE_JITTER: f64 = 1e-8;

/// Default geometric decay for weighted least squares.
pub const DEFAULT_DECAY: f64 = 0.99;

/// One row of a regression history.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub x: Vec<f64>,
    pub y: f64,
}

impl Observation {
    pub fn new(x: Vec<f64>, y: f64) -> Self {
        Self { x, y }
    }
}

/// Running `XᵀWX` and `XᵀWy`.
#[derive(Debug, Clone)]
pub struct NormalEquations {
    gram: DMatrix<f64>,
    moment: DVector<f64>,
    rows: usize,
}

impl NormalEquations {
    pub fn new(dim: usize) -> Self {
        Self {
            gram: DMatrix::zeros(dim, dim),
            moment: DVector::zeros(dim),
            rows: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.moment.len()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn add(&mut self, x: &[f64], y: f64, weight: f64) {
        debug_assert_eq!(x.len(), self.dim());
        let d = self.dim();
        for i in 0..d {
            let wxi = weight * x[i];
            self.moment[i] += wxi * y;
            for (j, &xj) in x.iter().enumerate() {
                self.gram[(i, j)] += wxi * xj;
            }
        }
        self.rows += 1;
    }

    /// Multiply every accumulated weight by `factor`.
    pub fn scale(&mut self, factor: f64) {
        self.gram *= factor;
        self.moment *= factor;
    }

    pub fn solve(&self) -> Result<Vec<f64>> {
        let d = self.dim();
        if let Some(chol) = self.gram.clone().cholesky() {
            return Ok(chol.solve(&self.moment).iter().copied().collect());
        }
        let scale = (self.gram.trace() / d as f64).max(1.0);
        let mut jitter = RIDGE_JITTER * scale;
        // escalate only if rounding defeats the first jitter
        for _ in 0..8 {
            let mut gram = self.gram.clone();
            for i in 0..d {
                gram[(i, i)] += jitter;
            }
            if let Some(chol) = gram.cholesky() {
                return Ok(chol.solve(&self.moment).iter().copied().collect());
            }
            jitter *= 10.0;
        }
        Err(Error::InvalidParameter("normal equations are not solvable".into()))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

fn check_history(history: &[Observation]) -> Result<usize> {
    let d = history
        .first()
        .map(|o| o.x.len())
        .ok_or(Error::InsufficientData { needed: 1, got: 0 })?;
    if let Some(bad) = history.iter().find(|o| o.x.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: bad.x.len(),
        });
    }
    if history.len() < d {
        return Err(Error::InsufficientData {
            needed: d,
            got: history.len(),
        });
    }
    Ok(d)
}

/// Linear predictor `xᵀβ̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    coefficients: Vec<f64>,
    fitted: bool,
}

impl LinearModel {
    pub fn unfitted(dim: usize) -> Self {
        Self {
            coefficients: vec![0.0; dim],
            fitted: false,
        }
    }

    pub fn from_coefficients(coefficients: Vec<f64>) -> Self {
        Self {
            coefficients,
            fitted: true,
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn is_fitted(&self) -> bool {
        self.fitted
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if !self.fitted {
            return Err(Error::NotFitted);
        }
        if x.len() != self.coefficients.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coefficients.len(),
                got: x.len(),
            });
        }
        Ok(dot(x, &self.coefficients))
    }
}

/// Linear model fitted with geometrically decaying weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedLinearModel {
    pub model: LinearModel,
    pub decay: f64,
}

/// Ordinary least squares.
pub fn ols_fit(history: &[Observation]) -> Result<LinearModel> {
    let d = check_history(history)?;
    let mut eq = NormalEquations::new(d);
    for o in history {
        eq.add(&o.x, o.y, 1.0);
    }
    Ok(LinearModel::from_coefficients(eq.solve()?))
}

/// Weighted least squares with `w_i = decay^(t+1−i)` for rows `i = 1..=t`.
pub fn wls_fit(history: &[Observation], decay: f64) -> Result<WeightedLinearModel> {
    check_decay(decay)?;
    let d = check_history(history)?;
    let t = history.len();
    let mut eq = NormalEquations::new(d);
    for (i, o) in history.iter().enumerate() {
        let w = decay.powi((t - i) as i32);
        eq.add(&o.x, o.y, w);
    }
    Ok(WeightedLinearModel {
        model: LinearModel::from_coefficients(eq.solve()?),
        decay,
    })
}

fn check_decay(decay: f64) -> Result<()> {
    if decay > 0.0 && decay < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "decay must lie in (0, 1), got {decay}"
        )))
    }
}

/// Autoregressive model `y_t = c + φ_1 y_{t−1} + … + φ_p y_{t−p}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArModel {
    intercept: f64,
    /// `coefficients[k]` multiplies lag `k + 1`.
    coefficients: Vec<f64>,
}

impl ArModel {
    pub fn new(intercept: f64, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidParameter("AR order must be positive".into()));
        }
        Ok(Self {
            intercept,
            coefficients,
        })
    }

    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// One-step prediction from `recent`, ordered oldest to newest.
    pub fn predict_next(&self, recent: &[f64]) -> f64 {
        let p = self.order();
        debug_assert!(recent.len() >= p);
        let n = recent.len();
        self.intercept
            + self
                .coefficients
                .iter()
                .enumerate()
                .map(|(k, phi)| phi * recent[n - 1 - k])
                .sum::<f64>()
    }

    /// Recursive multi-step forecast: forecasts are fed back as lags.
    ///
    /// `recent` holds the last `p` values, oldest first.
    pub fn forecast(&self, recent: &[f64], horizon: usize) -> Result<Vec<f64>> {
        let p = self.order();
        if recent.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: recent.len(),
            });
        }
        let mut window = recent.to_vec();
        let mut out = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let next = self.predict_next(&window);
            out.push(next);
            window.remove(0);
            window.push(next);
        }
        Ok(out)
    }
}

fn lag_row(series: &[f64], t: usize, p: usize, row: &mut [f64]) {
    row[0] = 1.0;
    for k in 0..p {
        row[k + 1] = series[t - 1 - k];
    }
}

/// Least-squares AR(p) fit with intercept.
pub fn ar_fit(series: &[f64], order: usize) -> Result<ArModel> {
    if order == 0 {
        return Err(Error::InvalidParameter("AR order must be positive".into()));
    }
    if series.len() < order + 2 {
        return Err(Error::InsufficientData {
            needed: order + 2,
            got: series.len(),
        });
    }
    let mut eq = NormalEquations::new(order + 1);
    let mut row = vec![0.0; order + 1];
    for t in order..series.len() {
        lag_row(series, t, order, &mut row);
        eq.add(&row, series[t], 1.0);
    }
    let beta = eq.solve()?;
    ArModel::new(beta[0], beta[1..].to_vec())
}

/// Last observed value, or 0 for an empty history.
pub fn persistence_forecast(history: &[f64]) -> f64 {
    history.last().copied().unwrap_or(0.0)
}

/// An online point forecaster.
///
/// `predict` sees only information available before `y` is revealed; `observe`
/// then hands over the realised response.
pub trait Forecaster {
    fn predict(&self, x: &[f64]) -> f64;
    fn observe(&mut self, x: &[f64], y: f64);
}

/// Repeats the last response.
#[derive(Debug, Clone, Default)]
pub struct Persistence {
    last: Option<f64>,
}

impl Persistence {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Forecaster for Persistence {
    fn predict(&self, _x: &[f64]) -> f64 {
        self.last.unwrap_or(0.0)
    }

    fn observe(&mut self, _x: &[f64], y: f64) {
        self.last = Some(y);
    }
}

/// Least-squares regression refitted on all data seen so far.
///
/// With a decay the weights follow `w_i = decay^(t+1−i)`. Predicts 0 until at
/// least `dim` rows have been observed.
#[derive(Debug, Clone)]
pub struct OnlineLinear {
    eq: NormalEquations,
    decay: Option<f64>,
    refit_every: usize,
    since_refit: usize,
    model: LinearModel,
}

impl OnlineLinear {
    pub fn ols(dim: usize) -> Self {
        Self {
            eq: NormalEquations::new(dim),
            decay: None,
            refit_every: 1,
            since_refit: 0,
            model: LinearModel::unfitted(dim),
        }
    }

    pub fn wls(dim: usize, decay: f64) -> Result<Self> {
        check_decay(decay)?;
        Ok(Self {
            decay: Some(decay),
            ..Self::ols(dim)
        })
    }

    pub fn with_refit_every(mut self, every: usize) -> Self {
        self.refit_every = every.max(1);
        self
    }

    pub fn model(&self) -> &LinearModel {
        &self.model
    }
}

impl Forecaster for OnlineLinear {
    fn predict(&self, x: &[f64]) -> f64 {
        self.model.predict(x).unwrap_or(0.0)
    }

    fn observe(&mut self, x: &[f64], y: f64) {
        match self.decay {
            // existing rows gain one more power of the decay; the new row enters at decay^1
            Some(rho) => {
                self.eq.add(x, y, 1.0);
                self.eq.scale(rho);
            }
            None => self.eq.add(x, y, 1.0),
        }
        self.since_refit += 1;
        if self.eq.rows() >= self.eq.dim() && self.since_refit >= self.refit_every {
            if let Ok(beta) = self.eq.solve() {
                self.model = LinearModel::from_coefficients(beta);
            }
            self.since_refit = 0;
        }
    }
}

/// AR(p) forecaster refitted every `refit_every` observations.
///
/// Falls back to persistence until a fit exists.
#[derive(Debug, Clone)]
pub struct OnlineAr {
    order: usize,
    refit_every: usize,
    since_refit: usize,
    history: Vec<f64>,
    eq: NormalEquations,
    model: Option<ArModel>,
}

impl OnlineAr {
    pub fn new(order: usize, refit_every: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter("AR order must be positive".into()));
        }
        Ok(Self {
            order,
            refit_every: refit_every.max(1),
            since_refit: 0,
            history: Vec::new(),
            eq: NormalEquations::new(order + 1),
            model: None,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn model(&self) -> Option<&ArModel> {
        self.model.as_ref()
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }

    /// Forecast the next `horizon` values from the current model.
    pub fn forecast(&self, horizon: usize) -> Vec<f64> {
        let n = self.history.len();
        match &self.model {
            Some(m) if n >= self.order => m
                .forecast(&self.history[n - self.order..], horizon)
                .expect("window has model order"),
            _ => vec![persistence_forecast(&self.history); horizon],
        }
    }

    pub fn push(&mut self, y: f64) {
        self.history.push(y);
        let t = self.history.len() - 1;
        if t >= self.order {
            let mut row = vec![0.0; self.order + 1];
            lag_row(&self.history, t, self.order, &mut row);
            self.eq.add(&row, y, 1.0);
        }
        self.since_refit += 1;
        if self.history.len() >= self.order + 2 && self.since_refit >= self.refit_every {
            if let Ok(beta) = self.eq.solve() {
                self.model = ArModel::new(beta[0], beta[1..].to_vec()).ok();
            }
            self.since_refit = 0;
        }
    }
}

impl Forecaster for OnlineAr {
    fn predict(&self, _x: &[f64]) -> f64 {
        self.forecast(1)[0]
    }

    fn observe(&mut self, _x: &[f64], y: f64) {
        self.push(y);
    }
}
