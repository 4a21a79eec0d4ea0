//! Pinball (quantile) loss and the subgradient every radius updater consumes.
//!
//! For a quantile level `β` the loss of a radius `s` against a nonconformity
//! score `S` is
//!
//! ```text
//! ℓ_β(s, S) = max{ β (S − s), (1 − β)(s − S) }
//! ```
//!
//! and its subgradient away from the kink is `1{S ≤ s} − β`. For conformal use
//! the level is `β = 1 − α`, so the subgradient is `α` on a covered step and
//! `α − 1` on a miss.

use crate::error::{Error, Result};

/// A quantile level `β ∈ (0, 1)`.
///
/// The complement `1 − β` is stored alongside so that a level built from a
/// miscoverage `α` yields subgradients exactly equal to `α` and `α − 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileLevel {
    beta: f64,
    complement: f64,
}

impl QuantileLevel {
    pub fn new(beta: f64) -> Result<Self> {
        if beta > 0.0 && beta < 1.0 {
            Ok(Self {
                beta,
                complement: 1.0 - beta,
            })
        } else {
            Err(Error::InvalidParameter(format!(
                "quantile level must lie in (0, 1), got {beta}"
            )))
        }
    }

    /// The level `1 − α` targeted by a conformal predictor with miscoverage `α`.
    pub fn from_miscoverage(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Self {
                beta: 1.0 - alpha,
                complement: alpha,
            })
        } else {
            Err(Error::InvalidParameter(format!(
                "miscoverage level must lie in (0, 1), got {alpha}"
            )))
        }
    }

    pub fn beta(self) -> f64 {
        self.beta
    }

    /// `1 − β`.
    pub fn complement(self) -> f64 {
        self.complement
    }

    /// Lipschitz constant of the loss in its first argument.
    pub fn lipschitz(self) -> f64 {
        self.beta.max(self.complement)
    }
}

/// Pinball loss of radius `s` against `score`.
pub fn pinball_loss(s: f64, score: f64, level: QuantileLevel) -> f64 {
    (level.beta * (score - s)).max(level.complement * (s - score))
}

/// Subgradient `1{score ≤ s} − β`.
///
/// At the kink `s == score` this selects `1 − β`, the element matching a closed
/// interval that counts the boundary as covered. The comparison is exact.
pub fn pinball_subgradient(s: f64, score: f64, level: QuantileLevel) -> f64 {
    if score <= s {
        level.complement
    } else {
        -level.beta
    }
}
