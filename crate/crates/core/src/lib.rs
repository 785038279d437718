//! Optimistic (wishful-thinking) choice as superquantile-utility maximization.
//!
//! An agent with optimism level `alpha` in `[0, 1)` evaluates each action by
//! the superquantile of its utility law, the mean of the upper `1 - alpha`
//! tail. The crate provides
//!
//! - [`distributions`]: outcome laws with cdf, quantile, sampling and
//!   closed-form superquantiles;
//! - [`superquantile`]: four interchangeable engines for `Q_alpha` and
//!   `Qbar_alpha`, plus the `alpha`-derivative and limit diagnostics;
//! - [`beliefs`]: the censored belief that attains the optimistic value;
//! - [`choice`]: deterministic choice rules (general, additive, Pareto, CARA);
//! - [`stochastic`]: logit choice probabilities along an `alpha` sweep;
//! - [`entry`]: market-entry decisions and optimism thresholds;
//! - [`scenario`]: the scenario file format driving the `optimist` binary.

pub mod distributions;
pub mod error;
pub mod quad;
pub mod roots;
pub mod special;
pub mod superquantile;
pub mod beliefs;
pub mod choice;
pub mod stochastic;
pub mod entry;
pub mod scenario;

pub use distributions::{AffineTransform, Distribution, ParetoFactor};
pub use error::{Error, Result};
