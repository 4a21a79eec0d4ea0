//! Online rules that turn a stream of pinball subgradients into radii.
//!
//! Two of them are parameter-free coin bettors. The bettor starts with unit
//! wealth and at round `t` wagers `s_t = λ_t W_{t−1}` on the coin `c_t = −g_t`,
//! so wealth evolves as `W_t = W_{t−1} − g_t s_t`. The wager *is* the radius.
//!
//! * [`KtState`] picks the betting fraction with the Krichevsky–Trofimov
//!   estimator, `λ_{t+1} = −(g_1 + … + g_t)/(t + 1)`.
//! * [`OnsState`] picks it with a clipped online Newton step.
//!
//! The other two are learning-rate driven baselines: plain online subgradient
//! descent ([`OgdState`]) and its scale-free variant ([`SfOgdState`]).
//! [`FixedState`] never moves and serves as a regret comparator.
//!
//! Updaters only ever see subgradients. They know nothing about scores,
//! responses or forecasts.

use std::fmt;

use crate::error::{Error, Result};

/// `2 / (2 − ln 3)`, the ONS step constant.
pub fn ons_step_constant() -> f64 {
    2.0 / (2.0 - 3f64.ln())
}

fn check_coin(g: f64) -> Result<()> {
    if g.abs() <= 1.0 {
        Ok(())
    } else {
        Err(Error::SubgradientOutOfRange(g))
    }
}

/// Krichevsky–Trofimov bettor state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KtState {
    /// Wealth at the end of the last completed round.
    pub wealth: f64,
    /// Betting fraction for the current round.
    pub fraction: f64,
    /// Index of the current round, starting at 1.
    pub round: u64,
    /// Radius for the current round, `fraction * wealth`.
    pub radius: f64,
}

impl Default for KtState {
    fn default() -> Self {
        Self {
            wealth: 1.0,
            fraction: 0.0,
            round: 1,
            radius: 0.0,
        }
    }
}

impl KtState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn step(self, g: f64) -> Result<Self> {
        check_coin(g)?;
        let t = self.round as f64;
        let wealth = self.wealth - g * self.radius;
        let fraction = t / (t + 1.0) * self.fraction - g / (t + 1.0);
        Ok(Self {
            wealth,
            fraction,
            round: self.round + 1,
            radius: fraction * wealth,
        })
    }
}

/// Online Newton step bettor state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnsState {
    pub wealth: f64,
    /// Betting fraction, kept in `[-1/2, 1/2]`.
    pub fraction: f64,
    /// Running `1 + Σ z_i²`.
    pub accumulator: f64,
    pub radius: f64,
}

impl Default for OnsState {
    fn default() -> Self {
        Self {
            wealth: 1.0,
            fraction: 0.0,
            accumulator: 1.0,
            radius: 0.0,
        }
    }
}

impl OnsState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn step(self, g: f64) -> Result<Self> {
        check_coin(g)?;
        let z = g / (1.0 - self.fraction * g);
        let accumulator = self.accumulator + z * z;
        let fraction = (self.fraction - ons_step_constant() * z / accumulator).clamp(-0.5, 0.5);
        let wealth = self.wealth - g * self.radius;
        Ok(Self {
            wealth,
            fraction,
            accumulator,
            radius: fraction * wealth,
        })
    }
}

/// Online subgradient descent on the radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OgdState {
    pub radius: f64,
    pub eta: f64,
}

impl OgdState {
    pub fn new(eta: f64) -> Result<Self> {
        check_eta(eta)?;
        Ok(Self { radius: 0.0, eta })
    }

    pub fn step(self, g: f64) -> Self {
        Self {
            radius: self.radius - self.eta * g,
            ..self
        }
    }
}

/// Scale-free online gradient descent: the step is divided by `√Σ g²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfOgdState {
    pub radius: f64,
    pub eta: f64,
    pub grad_square_sum: f64,
}

impl SfOgdState {
    pub fn new(eta: f64) -> Result<Self> {
        check_eta(eta)?;
        Ok(Self {
            radius: 0.0,
            eta,
            grad_square_sum: 0.0,
        })
    }

    pub fn step(self, g: f64) -> Self {
        let grad_square_sum = self.grad_square_sum + g * g;
        let radius = if grad_square_sum > 0.0 {
            self.radius - self.eta * g / grad_square_sum.sqrt()
        } else {
            self.radius
        };
        Self {
            radius,
            grad_square_sum,
            ..self
        }
    }
}

/// A radius that never changes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedState {
    pub radius: f64,
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "learning rate must be positive and finite, got {eta}"
        )))
    }
}

/// Which strategy to run, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpdaterSpec {
    Kt,
    Ons,
    Ogd { eta: f64 },
    SfOgd { eta: f64 },
    Fixed { radius: f64 },
}

impl UpdaterSpec {
    /// Short strategy id: `kt`, `ons`, `ogd`, `sfogd` or `fixed`.
    pub fn id(&self) -> &'static str {
        match self {
            UpdaterSpec::Kt => "kt",
            UpdaterSpec::Ons => "ons",
            UpdaterSpec::Ogd { .. } => "ogd",
            UpdaterSpec::SfOgd { .. } => "sfogd",
            UpdaterSpec::Fixed { .. } => "fixed",
        }
    }

    pub fn eta(&self) -> Option<f64> {
        match *self {
            UpdaterSpec::Ogd { eta } | UpdaterSpec::SfOgd { eta } => Some(eta),
            _ => None,
        }
    }

    /// Fresh state for this strategy.
    pub fn reset(&self) -> Result<Updater> {
        Ok(match *self {
            UpdaterSpec::Kt => Updater::Kt(KtState::new()),
            UpdaterSpec::Ons => Updater::Ons(OnsState::new()),
            UpdaterSpec::Ogd { eta } => Updater::Ogd(OgdState::new(eta)?),
            UpdaterSpec::SfOgd { eta } => Updater::SfOgd(SfOgdState::new(eta)?),
            UpdaterSpec::Fixed { radius } => {
                if !radius.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "fixed radius must be finite, got {radius}"
                    )));
                }
                Updater::Fixed(FixedState { radius })
            }
        })
    }
}

impl fmt::Display for UpdaterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UpdaterSpec::Ogd { eta } | UpdaterSpec::SfOgd { eta } => {
                write!(f, "{}(eta={eta})", self.id())
            }
            UpdaterSpec::Fixed { radius } => write!(f, "fixed(radius={radius})"),
            _ => f.write_str(self.id()),
        }
    }
}

/// Mutable state of any strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Updater {
    Kt(KtState),
    Ons(OnsState),
    Ogd(OgdState),
    SfOgd(SfOgdState),
    Fixed(FixedState),
}

impl Updater {
    /// Radius to use for the current round.
    pub fn radius(&self) -> f64 {
        match self {
            Updater::Kt(s) => s.radius,
            Updater::Ons(s) => s.radius,
            Updater::Ogd(s) => s.radius,
            Updater::SfOgd(s) => s.radius,
            Updater::Fixed(s) => s.radius,
        }
    }

    /// Bettor wealth; `None` for the gradient methods and the fixed radius.
    pub fn wealth(&self) -> Option<f64> {
        match self {
            Updater::Kt(s) => Some(s.wealth),
            Updater::Ons(s) => Some(s.wealth),
            _ => None,
        }
    }

    /// Advance by one subgradient. On error the state is left untouched.
    pub fn update(&mut self, g: f64) -> Result<()> {
        *self = match *self {
            Updater::Kt(s) => Updater::Kt(s.step(g)?),
            Updater::Ons(s) => Updater::Ons(s.step(g)?),
            Updater::Ogd(s) => Updater::Ogd(s.step(g)),
            Updater::SfOgd(s) => Updater::SfOgd(s.step(g)),
            Updater::Fixed(s) => Updater::Fixed(s),
        };
        Ok(())
    }
}
