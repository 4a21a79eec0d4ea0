//! Empirical checks of the KT predictor's coverage argument.
//!
//! With scores in `[0, D]` and `α < 1/2` the KT radius sequence satisfies, at
//! every step:
//!
//! * wealth stays nonnegative and equals `1 − Σ g_i s_i`;
//! * consecutive radii differ by at most `2D + 1`;
//! * every radius lies in `[−(3D + 1), 3D + 1]`;
//! * a radius above `D` is followed by a strictly smaller one;
//! * a sign flip from `s_i ≥ 0` to `s_{i+1} < 0` is followed by `s_{i+2} > 0`.
//!
//! [`theorem_probe`] drives a KT stream with an adversary and counts
//! violations of each property. The unbounded adversary always places the
//! score just outside the interval; it is the counterexample showing that the
//! boundedness assumption cannot be dropped, and its expected outcome is a
//! miscoverage rate of one.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{ConformalStream, StreamConfig};
use crate::error::{Error, Result};
use crate::updaters::{Updater, UpdaterSpec};

/// Relative tolerance of the wealth identity.
pub const WEALTH_IDENTITY_TOL: f64 = 1e-9;

/// Score generator for the probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Adversary {
    /// `S_t = D · 1{s_t ≥ D/2}`: scores jump to the bound when the radius is large.
    Flipper,
    /// `S_t = c · D` for a fixed `c ∈ [0, 1]`.
    Constant(f64),
    /// i.i.d. Uniform[0, D].
    Uniform,
    /// `0` or `D` with probability 1/2 each.
    Bernoulli,
    /// Uniform on `[0, D·m]` with `m` redrawn from `[0, 1]` every 500 steps.
    RegimeSwitch,
    /// `S_t = max(s_t, 0) + D`: always just outside the interval.
    Unbounded,
}

impl Adversary {
    pub fn name(&self) -> &'static str {
        match self {
            Adversary::Flipper => "flipper",
            Adversary::Constant(_) => "constant",
            Adversary::Uniform => "uniform",
            Adversary::Bernoulli => "bernoulli",
            Adversary::RegimeSwitch => "regime-switch",
            Adversary::Unbounded => "unbounded",
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, Adversary::Unbounded)
    }

    /// Random bounded adversary family for stream number `index`.
    pub fn random_bounded(index: usize, rng: &mut impl Rng) -> Self {
        match index % 5 {
            0 => Adversary::Uniform,
            1 => Adversary::Bernoulli,
            2 => Adversary::RegimeSwitch,
            3 => Adversary::Constant(rng.random::<f64>()),
            _ => Adversary::Flipper,
        }
    }
}

impl fmt::Display for Adversary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    /// Score bound `D`.
    pub bound: f64,
    pub alpha: f64,
    pub steps: usize,
    pub adversary: Adversary,
    pub seed: u64,
}

impl ProbeConfig {
    pub fn new(bound: f64, alpha: f64, steps: usize, adversary: Adversary) -> Result<Self> {
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "score bound must be positive, got {bound}"
            )));
        }
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1/2), got {alpha}"
            )));
        }
        Ok(Self {
            bound,
            alpha,
            steps,
            adversary,
            seed: 0,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// The properties the probe checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Invariant {
    WealthNonnegative,
    WealthIdentity,
    ConsecutiveStep,
    IterateBound,
    OvershootDecay,
    SignRecovery,
}

impl Invariant {
    pub const ALL: [Invariant; 6] = [
        Invariant::WealthNonnegative,
        Invariant::WealthIdentity,
        Invariant::ConsecutiveStep,
        Invariant::IterateBound,
        Invariant::OvershootDecay,
        Invariant::SignRecovery,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Invariant::WealthNonnegative => "wealth_nonnegative",
            Invariant::WealthIdentity => "wealth_identity",
            Invariant::ConsecutiveStep => "consecutive_step_le_2d_plus_1",
            Invariant::IterateBound => "iterate_abs_le_3d_plus_1",
            Invariant::OvershootDecay => "overshoot_decay",
            Invariant::SignRecovery => "sign_recovery",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantCheck {
    pub invariant: Invariant,
    pub checked: usize,
    pub violations: usize,
    /// 1-based step of the first violation.
    pub first_violation: Option<usize>,
}

impl InvariantCheck {
    fn new(invariant: Invariant) -> Self {
        Self {
            invariant,
            checked: 0,
            violations: 0,
            first_violation: None,
        }
    }

    fn record(&mut self, step: usize, ok: bool) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            self.first_violation.get_or_insert(step);
        }
    }
}

/// Per-step record with running extrema.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeRow {
    pub t: usize,
    pub score: f64,
    pub radius: f64,
    pub covered: bool,
    /// Wealth at the end of step `t`.
    pub wealth: f64,
    /// `|s_{t+1} − s_t|`.
    pub step_change: f64,
    pub max_abs_radius: f64,
    pub max_step_change: f64,
    pub min_wealth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub config: ProbeConfig,
    pub steps_run: usize,
    /// The run stopped early because floating point could not represent the next step.
    pub truncated: bool,
    pub miscoverage: f64,
    pub checks: Vec<InvariantCheck>,
    pub rows: Vec<ProbeRow>,
}

impl ProbeReport {
    /// Bounded adversaries pass with zero violations; the unbounded one passes
    /// when every step is missed.
    pub fn passed(&self) -> bool {
        if self.config.adversary.is_bounded() {
            self.total_violations() == 0
        } else {
            self.steps_run > 0 && self.miscoverage == 1.0
        }
    }

    pub fn total_violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn check(&self, invariant: Invariant) -> &InvariantCheck {
        self.checks
            .iter()
            .find(|c| c.invariant == invariant)
            .expect("every invariant is checked")
    }

    pub fn max_abs_radius(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.max_abs_radius)
    }

    pub fn max_step_change(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.max_step_change)
    }
}

/// Run the KT predictor against `config.adversary` and check every property.
pub fn theorem_probe(config: &ProbeConfig) -> Result<ProbeReport> {
    let ProbeConfig {
        bound: d,
        alpha,
        steps,
        adversary,
        seed,
    } = *config;
    let stream_cfg = StreamConfig::new(alpha, UpdaterSpec::Kt)?;
    let mut stream = ConformalStream::new(&stream_cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut regime = 1.0;

    let mut checks: Vec<InvariantCheck> = Invariant::ALL.iter().map(|&i| InvariantCheck::new(i)).collect();
    let mut rows = Vec::with_capacity(steps);
    let mut radii = vec![stream.radius()];
    let mut sum_gs = 0.0;
    let mut sum_abs_gs = 0.0;
    let mut misses = 0usize;
    let mut truncated = false;
    let (mut max_abs_radius, mut max_step_change, mut min_wealth) = (stream.radius().abs(), 0.0f64, 1.0f64);

    for t in 1..=steps {
        let s = stream.radius();
        let score = match adversary {
            Adversary::Flipper => {
                if s >= d / 2.0 {
                    d
                } else {
                    0.0
                }
            }
            Adversary::Constant(c) => c.clamp(0.0, 1.0) * d,
            Adversary::Uniform => d * rng.random::<f64>(),
            Adversary::Bernoulli => {
                if rng.random::<bool>() {
                    d
                } else {
                    0.0
                }
            }
            Adversary::RegimeSwitch => {
                if (t - 1) % 500 == 0 {
                    regime = rng.random::<f64>();
                }
                d * regime * rng.random::<f64>()
            }
            Adversary::Unbounded => s.max(0.0) + d,
        };
        // past 2^53·D the adversary can no longer place a score outside the interval
        if !score.is_finite() || (!adversary.is_bounded() && score <= s) {
            truncated = true;
            break;
        }
        let (_, tr) = match stream.step_score(score) {
            Ok(out) => out,
            Err(Error::NonFinite { .. }) => {
                truncated = true;
                break;
            }
            Err(e) => return Err(e),
        };
        if !tr.covered {
            misses += 1;
        }
        sum_gs += tr.g * tr.radius;
        sum_abs_gs += (tr.g * tr.radius).abs();
        let wealth = match stream.updater() {
            Updater::Kt(kt) => kt.wealth,
            _ => unreachable!("probe runs the KT updater"),
        };
        let next = stream.radius();
        radii.push(next);
        let change = (next - s).abs();
        max_abs_radius = max_abs_radius.max(next.abs());
        max_step_change = max_step_change.max(change);
        min_wealth = min_wealth.min(wealth);
        rows.push(ProbeRow {
            t,
            score,
            radius: s,
            covered: tr.covered,
            wealth,
            step_change: change,
            max_abs_radius,
            max_step_change,
            min_wealth,
        });

        if adversary.is_bounded() {
            let [c_nonneg, c_identity, c_step, c_iter, c_decay, c_sign] = &mut checks[..] else {
                unreachable!()
            };
            c_nonneg.record(t, wealth >= 0.0);
            let identity_scale = 1.0f64.max(wealth.abs()).max(sum_abs_gs);
            c_identity.record(
                t,
                (wealth - (1.0 - sum_gs)).abs() <= WEALTH_IDENTITY_TOL * identity_scale,
            );
            c_step.record(t, change <= 2.0 * d + 1.0);
            c_iter.record(t, next.abs() <= 3.0 * d + 1.0);
            if s > d {
                c_decay.record(t, next < s);
            }
            // radii[t - 2] = s_{t-1}, radii[t - 1] = s_t, radii[t] = s_{t+1}
            if t >= 2 && radii[t - 2] >= 0.0 && radii[t - 1] < 0.0 {
                c_sign.record(t, radii[t] > 0.0);
            }
        }
    }

    let steps_run = rows.len();
    Ok(ProbeReport {
        config: *config,
        steps_run,
        truncated,
        miscoverage: if steps_run == 0 {
            0.0
        } else {
            misses as f64 / steps_run as f64
        },
        checks,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flipper_respects_every_bound() {
        let cfg = ProbeConfig::new(1.0, 0.1, 10_000, Adversary::Flipper).unwrap();
        let report = theorem_probe(&cfg).unwrap();
        assert_eq!(report.steps_run, 10_000);
        assert!(report.passed(), "{:?}", report.checks);
        assert!(report.max_abs_radius() <= 4.0);
        // the flipper does provoke sign flips and overshoots
        assert!(
            report.check(Invariant::SignRecovery).checked > 0 || report.check(Invariant::OvershootDecay).checked > 0
        );
    }

    #[test]
    fn constant_scores_hold_trivially() {
        let cfg = ProbeConfig::new(1.0, 0.1, 5_000, Adversary::Constant(1.0)).unwrap();
        assert!(theorem_probe(&cfg).unwrap().passed());
    }

    #[test]
    fn unbounded_adversary_misses_every_step() {
        let cfg = ProbeConfig::new(1.0, 0.1, 10_000, Adversary::Unbounded).unwrap();
        let report = theorem_probe(&cfg).unwrap();
        assert!(report.steps_run > 0);
        assert_eq!(report.miscoverage, 1.0);
        assert!(report.passed());
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ProbeConfig::new(1.0, 0.6, 10, Adversary::Flipper).is_err());
        assert!(ProbeConfig::new(1.0, 0.5, 10, Adversary::Flipper).is_err());
        assert!(ProbeConfig::new(0.0, 0.1, 10, Adversary::Flipper).is_err());
    }

    #[test]
    fn random_families_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for i in 0..10 {
            let adv = Adversary::random_bounded(i, &mut rng);
            let cfg = ProbeConfig::new(10.0, 0.2, 2_000, adv).unwrap().with_seed(i as u64);
            let report = theorem_probe(&cfg).unwrap();
            assert!(report.passed(), "{adv}: {:?}", report.checks);
        }
    }
}
