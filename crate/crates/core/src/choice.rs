//! Deterministic optimistic choice: pick the action with the largest
//! superquantile utility.
//!
//! Besides the general rule this module carries the specialisations worked
//! out for additive shocks, Pareto-skewed shocks and CARA utility with
//! Gaussian shocks, and a quantile-maximizing baseline that shows how the
//! two criteria can rank the same menu differently.
//!
//! Ties within [`TIE_TOLERANCE`] go to the action listed first.

use std::collections::HashSet;

use indexmap::IndexMap;
use rayon::prelude::*;

use crate::distributions::{Distribution, ParetoFactor};
use crate::error::{Error, Result};
use crate::special;
use crate::superquantile::{action_quantile, superquantile, Action, EngineConfig, OptimismLevel};

/// Values within this distance of the maximum count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Mean of an additive shock may deviate this much from zero silently.
pub const ZERO_MEAN_TOLERANCE: f64 = 1e-6;

/// A menu of actions evaluated at a common optimism level.
#[derive(Debug, Clone)]
pub struct ChoiceProblem {
    actions: Vec<Action>,
    alpha: OptimismLevel,
    config: EngineConfig,
}

impl ChoiceProblem {
    pub fn new(actions: Vec<Action>, alpha: OptimismLevel, config: EngineConfig) -> Result<Self> {
        check_labels(actions.iter().map(Action::label))?;
        Ok(ChoiceProblem {
            actions,
            alpha,
            config,
        })
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn alpha(&self) -> OptimismLevel {
        self.alpha
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }
}

fn check_labels<'a>(labels: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = HashSet::new();
    let mut count = 0;
    for label in labels {
        count += 1;
        if !seen.insert(label) {
            return Err(Error::domain(format!("duplicate action label '{label}'")));
        }
    }
    if count == 0 {
        return Err(Error::domain("the menu must contain at least one action"));
    }
    Ok(())
}

/// Outcome of a choice rule.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceResult {
    pub winner: String,
    /// Criterion value per action, in menu order.
    pub values: IndexMap<String, f64>,
    /// Every label within [`TIE_TOLERANCE`] of the maximum, in menu order.
    pub ties: Vec<String>,
    /// Non-fatal diagnostics (e.g. shocks without zero mean).
    pub warnings: Vec<String>,
}

/// Applies the tie rule to criterion values listed in menu order.
pub fn argmax(values: IndexMap<String, f64>) -> Result<ChoiceResult> {
    if let Some((label, v)) = values.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::numeric(format!("value of '{label}' is not finite"), *v).for_action(label));
    }
    let best = values
        .values()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return Err(Error::domain("the menu must contain at least one action"));
    }
    let ties: Vec<String> = values
        .iter()
        .filter(|(_, v)| **v >= best - TIE_TOLERANCE)
        .map(|(l, _)| l.clone())
        .collect();
    Ok(ChoiceResult {
        winner: ties[0].clone(),
        values,
        ties,
        warnings: Vec::new(),
    })
}

fn collect(labels: impl Iterator<Item = String>, values: Vec<Result<f64>>) -> Result<IndexMap<String, f64>> {
    labels
        .zip(values)
        .map(|(label, v)| v.map(|v| (label.clone(), v)).map_err(|e| e.for_action(&label)))
        .collect()
}

/// Superquantile value of every action, in menu order.
pub fn evaluate(p: &ChoiceProblem) -> Result<IndexMap<String, f64>> {
    let values: Vec<Result<f64>> = p
        .actions
        .par_iter()
        .map(|a| superquantile(a, p.alpha, &p.config).map(|r| r.value))
        .collect();
    collect(p.actions.iter().map(|a| a.label().to_string()), values)
}

/// Maximizes the superquantile utility.
pub fn choose(p: &ChoiceProblem) -> Result<ChoiceResult> {
    argmax(evaluate(p)?)
}

/// Baseline that maximizes the `alpha`-quantile instead.
pub fn quantile_choose(p: &ChoiceProblem) -> Result<ChoiceResult> {
    if p.alpha.is_zero() {
        return Err(Error::domain("quantile choice needs alpha in (0,1)"));
    }
    let values: Vec<Result<f64>> = p
        .actions
        .par_iter()
        .map(|a| action_quantile(a, p.alpha))
        .collect();
    argmax(collect(p.actions.iter().map(|a| a.label().to_string()), values)?)
}

/// Menu item with utility `u + shock`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveItem {
    pub label: String,
    pub u: f64,
    pub shock: Distribution,
}

impl AdditiveItem {
    pub fn new(label: impl Into<String>, u: f64, shock: Distribution) -> Self {
        AdditiveItem {
            label: label.into(),
            u,
            shock,
        }
    }
}

/// Maximizes `u + Qbar_alpha(shock)`. Shocks are expected to have mean zero;
/// a violation is reported as a warning, not an error.
pub fn additive_choose(items: &[AdditiveItem], alpha: OptimismLevel, config: EngineConfig) -> Result<ChoiceResult> {
    let actions = items
        .iter()
        .map(|i| Action::additive(i.label.clone(), i.u, i.shock.clone()))
        .collect::<Result<Vec<_>>>()?;
    let warnings = items
        .iter()
        .filter(|i| i.shock.mean().abs() > ZERO_MEAN_TOLERANCE)
        .map(|i| format!("shock of '{}' has mean {} (expected 0)", i.label, i.shock.mean()))
        .collect();
    let mut result = choose(&ChoiceProblem::new(actions, alpha, config)?)?;
    result.warnings = warnings;
    Ok(result)
}

/// Menu item with utility `u + w`, `w ~ Pareto(scale, shape)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoItem<'a> {
    pub label: &'a str,
    pub u: f64,
    pub scale: f64,
    pub shape: f64,
}

/// `u + Qbar_alpha` for a Pareto shock: `Q_alpha = scale (1-alpha)^(-1/shape)`
/// times the selected factor.
pub fn pareto_value(item: &ParetoItem<'_>, alpha: OptimismLevel, factor: ParetoFactor) -> Result<f64> {
    if !(item.shape > 1.0) {
        return Err(Error::domain(format!(
            "Pareto shape {} <= 1: the superquantile is not well defined",
            item.shape
        )));
    }
    let law = Distribution::pareto(item.scale, item.shape)?;
    let q = law.quantile_at(alpha.value().max(0.0));
    Ok(item.u + q * factor.factor(item.shape))
}

pub fn pareto_choose(items: &[ParetoItem<'_>], alpha: OptimismLevel, factor: ParetoFactor) -> Result<ChoiceResult> {
    check_labels(items.iter().map(|i| i.label))?;
    let values = items
        .iter()
        .map(|i| Ok((i.label.to_string(), pareto_value(i, alpha, factor).map_err(|e| e.for_action(i.label))?)))
        .collect::<Result<IndexMap<_, _>>>()?;
    argmax(values)
}

/// Utility `u - exp(-r w)` with shock `w ~ Normal(0, sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaraSpec {
    u: f64,
    r: f64,
    sigma: f64,
}

impl CaraSpec {
    pub fn new(u: f64, r: f64, sigma: f64) -> Result<Self> {
        if !u.is_finite() {
            return Err(Error::invalid("cara", "u must be finite"));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid("cara", "risk aversion r must be positive"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("cara", "sigma must be positive"));
        }
        Ok(CaraSpec { u, r, sigma })
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// `u - exp(r^2 sigma^2 / 2) (1 - Phi(r sigma + z_alpha)) / (1 - alpha)`,
/// the superquantile of the CARA utility; `alpha = 0` gives the expected
/// utility `u - exp(r^2 sigma^2 / 2)`.
pub fn cara_value(spec: &CaraSpec, alpha: OptimismLevel) -> f64 {
    let rs = spec.r * spec.sigma;
    let scale = (0.5 * rs * rs).exp();
    if alpha.is_zero() {
        return spec.u - scale;
    }
    let a = alpha.value();
    let z = special::norm_quantile(a);
    spec.u - scale * special::norm_sf(rs + z) / (1.0 - a)
}

/// Maximizes [`cara_value`]; the risk aversion `r` must be shared by all
/// items (it is a trait of the decision maker), `sigma` may differ.
pub fn cara_choose(items: &[(&str, CaraSpec)], alpha: OptimismLevel) -> Result<ChoiceResult> {
    check_labels(items.iter().map(|(l, _)| *l))?;
    let r = items[0].1.r;
    if let Some((label, _)) = items.iter().find(|(_, s)| s.r != r) {
        return Err(Error::domain(format!(
            "risk aversion of '{label}' differs from the menu's common r = {r}"
        )));
    }
    argmax(
        items
            .iter()
            .map(|(l, s)| (l.to_string(), cara_value(s, alpha)))
            .collect(),
    )
}
