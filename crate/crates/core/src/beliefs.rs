//! The censored belief that attains the optimistic value.
//!
//! Given an action and optimism level `alpha`, the optimal distorted belief
//! removes all mass below the `alpha`-quantile of the utility and rescales
//! the remaining tail by `1/(1-alpha)`:
//!
//! ```text
//! G(z) = (F(z) - alpha) / (1 - alpha)   for z >= Q_alpha,   0 otherwise.
//! ```
//!
//! Beliefs live in utility space (the law of `u(a, w)`), which is all the
//! formulas need. The density ratio `g/f` is `1/(1-alpha)` on the tail and 0
//! below, so the threshold distortion cost of this belief is zero.

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::quad::{self, DEFAULT_BUDGET};
use crate::superquantile::{action_quantile, Action, OptimismLevel};

/// Belief `G_alpha` obtained by censoring an action's utility law.
#[derive(Debug, Clone, PartialEq)]
pub struct CensoredBelief {
    action: Action,
    alpha: OptimismLevel,
    threshold: f64,
    law: Distribution,
}

impl CensoredBelief {
    pub fn action(&self) -> &Action {
        &self.action
    }

    pub fn alpha(&self) -> OptimismLevel {
        self.alpha
    }

    /// The censoring point, `Q_alpha` of the utility law.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Utility law the belief distorts.
    pub fn prior(&self) -> &Distribution {
        &self.law
    }

    fn tail(&self) -> f64 {
        1.0 - self.alpha.value()
    }

    /// `1 - G(z)`; computed from the prior's survival function so that it
    /// stays accurate deep in the tail.
    pub fn sf(&self, z: f64) -> f64 {
        if z < self.threshold {
            1.0
        } else {
            (self.law.sf(z) / self.tail()).clamp(0.0, 1.0)
        }
    }

    /// Density of the belief, `f(z) / (1 - alpha)` on the tail.
    pub fn pdf(&self, z: f64) -> Result<f64> {
        if z < self.threshold {
            Ok(0.0)
        } else {
            Ok(self.law.pdf(z)? / self.tail())
        }
    }

    /// Likelihood ratio `g/f` at `z`.
    pub fn likelihood_ratio(&self, z: f64) -> f64 {
        if z < self.threshold {
            0.0
        } else {
            1.0 / self.tail()
        }
    }

    /// Essential supremum of the likelihood ratio.
    pub fn max_likelihood_ratio(&self) -> f64 {
        1.0 / self.tail()
    }
}

/// Builds the censored belief for `alpha` in `(0, 1)`.
///
/// Empirical laws are rejected: with atoms at the threshold the censored
/// formula no longer integrates to the superquantile. A degenerate law is a
/// point mass and censors to itself.
pub fn censor(a: &Action, alpha: OptimismLevel) -> Result<CensoredBelief> {
    if alpha.is_zero() {
        return Err(Error::domain(
            "alpha = 0 censors nothing; the prior itself is the belief",
        ));
    }
    let law = a.utility_law();
    if matches!(law, Distribution::Empirical(_)) {
        return Err(Error::Unsupported {
            operation: "belief censoring",
            family: law.family_name(),
        });
    }
    let threshold = action_quantile(a, alpha)?;
    Ok(CensoredBelief {
        action: a.clone(),
        alpha,
        threshold,
        law,
    })
}

/// `G_alpha(z)`.
pub fn censored_cdf(b: &CensoredBelief, z: f64) -> f64 {
    if z < b.threshold {
        return 0.0;
    }
    let alpha = b.alpha.value();
    let g = if alpha > 0.5 {
        1.0 - b.law.sf(z) / b.tail()
    } else {
        (b.law.cdf(z) - alpha) / b.tail()
    };
    g.clamp(0.0, 1.0)
}

/// Mean of the belief, `threshold + int_threshold^sup (1 - G(z)) dz`.
pub fn belief_mean(b: &CensoredBelief, tol: f64) -> Result<f64> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    if let Distribution::Degenerate(d) = &b.law {
        return Ok(d.value());
    }
    let (_, sup) = b.law.support();
    if sup <= b.threshold {
        return Ok(b.threshold);
    }
    let tail = b.tail();
    let r = quad::integrate_pieces(
        |z| b.law.sf(z),
        b.threshold,
        sup,
        &b.law.breakpoints(),
        b.law.spread(),
        tol * tail,
        DEFAULT_BUDGET,
    )?;
    Ok(b.threshold + r.value / tail)
}

/// Value of the threshold distortion cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistortionCost {
    Zero,
    Infinite,
}

impl DistortionCost {
    pub fn is_feasible(self) -> bool {
        self == DistortionCost::Zero
    }
}

/// Threshold cost of a belief whose density ratio to the prior has
/// essential supremum `max_ratio`: zero iff `max_ratio <= 1/(1-alpha)`.
/// The boundary is feasible; a `1e-12` relative slack absorbs roundoff.
pub fn distortion_cost(max_ratio: f64, alpha: OptimismLevel) -> Result<DistortionCost> {
    if !(max_ratio >= 0.0) {
        return Err(Error::domain(format!(
            "likelihood ratio must be nonnegative, got {max_ratio}"
        )));
    }
    let bound = 1.0 / (1.0 - alpha.value());
    if max_ratio <= bound + 1e-12 * bound {
        Ok(DistortionCost::Zero)
    } else {
        Ok(DistortionCost::Infinite)
    }
}
