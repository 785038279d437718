//! Quantiles and superquantiles of an action's utility law.
//!
//! For optimism level `alpha` the optimistic value of an action is the
//! superquantile `V_alpha = Qbar_alpha = E[u | u >= Q_alpha]`. Four engines
//! compute it by different routes and are expected to agree:
//!
//! - closed form, where the family has one;
//! - quantile averaging, `(1/(1-alpha)) int_alpha^1 Q_theta dtheta`;
//! - the one-dimensional dual `min_l { l + E[(u - l)+] / (1 - alpha) }`,
//!   whose minimizer is the `alpha`-quantile;
//! - the conditional tail mean `E[u | u >= Q_alpha]` by quadrature;
//!
//! plus a sample estimator (average of the top `ceil((1-alpha) n)` order
//! statistics) used for empirical laws and as a Monte Carlo check.
//!
//! `alpha = 0` is admitted everywhere and means the plain expectation.

use std::fmt;
use std::str::FromStr;

use crate::distributions::{order_index, Distribution, ParetoFactor};
use crate::error::{Error, Result};
use crate::quad::{self, DEFAULT_BUDGET};
use crate::roots;

/// Default absolute tolerance of the numerical engines.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default Monte Carlo sample size.
pub const DEFAULT_MC_SAMPLES: usize = 200_000;
/// Default finite-difference step for the `alpha`-derivative.
pub const DEFAULT_STEP: f64 = 1e-4;

/// How an action's utility depends on the random state.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionForm {
    /// Utility with an arbitrary law `F_a`.
    General { utility_law: Distribution },
    /// Utility `u + shock`.
    Additive { u: f64, shock: Distribution },
}

/// A labelled alternative.
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    label: String,
    form: ActionForm,
}

impl Action {
    pub fn general(label: impl Into<String>, utility_law: Distribution) -> Self {
        Action {
            label: label.into(),
            form: ActionForm::General { utility_law },
        }
    }

    pub fn additive(label: impl Into<String>, u: f64, shock: Distribution) -> Result<Self> {
        if !u.is_finite() {
            return Err(Error::domain("deterministic utility must be finite"));
        }
        Ok(Action {
            label: label.into(),
            form: ActionForm::Additive { u, shock },
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn form(&self) -> &ActionForm {
        &self.form
    }

    /// Law of the utility, materializing `u + shock` for additive actions.
    pub fn utility_law(&self) -> Distribution {
        match &self.form {
            ActionForm::General { utility_law } => utility_law.clone(),
            ActionForm::Additive { u, shock } => shock
                .shifted(*u)
                .expect("a validated law shifted by a finite amount is valid"),
        }
    }

    /// The law the engines work on and the translation added afterwards.
    pub(crate) fn parts(&self) -> (&Distribution, f64) {
        match &self.form {
            ActionForm::General { utility_law } => (utility_law, 0.0),
            ActionForm::Additive { u, shock } => (shock, *u),
        }
    }

    pub fn mean(&self) -> f64 {
        let (law, shift) = self.parts();
        law.mean() + shift
    }

    pub fn ess_sup(&self) -> f64 {
        let (law, shift) = self.parts();
        law.ess_sup() + shift
    }
}

/// Degree of optimism `alpha` in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct OptimismLevel(f64);

impl OptimismLevel {
    pub fn new(alpha: f64) -> Result<Self> {
        if (0.0..1.0).contains(&alpha) {
            Ok(OptimismLevel(alpha))
        } else {
            Err(Error::domain(format!("alpha must lie in [0,1), got {alpha}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }
}

/// Which route produced a superquantile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    ClosedForm,
    QuantileAverage,
    Rockafellar,
    ConditionalTail,
    MonteCarlo,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::ClosedForm => "closed_form",
            Engine::QuantileAverage => "quantile_average",
            Engine::Rockafellar => "rockafellar",
            Engine::ConditionalTail => "conditional_tail",
            Engine::MonteCarlo => "monte_carlo",
        })
    }
}

/// Engine selector; `Auto` prefers a closed form, then the conditional tail
/// for continuous laws, then the sample estimator for empirical laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Auto,
    Closed,
    Average,
    Rockafellar,
    Conditional,
    MonteCarlo,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "auto" => Ok(Method::Auto),
            "closed" => Ok(Method::Closed),
            "average" => Ok(Method::Average),
            "rockafellar" => Ok(Method::Rockafellar),
            "conditional" => Ok(Method::Conditional),
            "mc" => Ok(Method::MonteCarlo),
            other => Err(Error::Parse(format!(
                "unknown method '{other}' (expected auto|closed|average|rockafellar|conditional|mc)"
            ))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Auto => "auto",
            Method::Closed => "closed",
            Method::Average => "average",
            Method::Rockafellar => "rockafellar",
            Method::Conditional => "conditional",
            Method::MonteCarlo => "mc",
        })
    }
}

/// Engine settings shared by every evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub method: Method,
    pub tol: f64,
    pub mc_samples: usize,
    pub seed: u64,
    pub pareto: ParetoFactor,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            method: Method::Auto,
            tol: DEFAULT_TOL,
            mc_samples: DEFAULT_MC_SAMPLES,
            seed: 0,
            pareto: ParetoFactor::Corrected,
        }
    }
}

impl EngineConfig {
    pub fn with_method(method: Method) -> Self {
        EngineConfig {
            method,
            ..EngineConfig::default()
        }
    }
}

/// A superquantile together with the optimal dual multiplier (the quantile).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperquantileResult {
    pub value: f64,
    pub multiplier: f64,
    pub engine: Engine,
    pub error_bound: f64,
}

impl SuperquantileResult {
    fn shifted(self, by: f64) -> Self {
        SuperquantileResult {
            value: self.value + by,
            multiplier: self.multiplier + by,
            ..self
        }
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("tolerance must be positive, got {tol}")))
    }
}

/// Result for `alpha = 0`: the mean, with the lower support end as multiplier.
fn at_zero(law: &Distribution, engine: Engine) -> SuperquantileResult {
    SuperquantileResult {
        value: law.mean(),
        multiplier: law.support().0,
        engine,
        error_bound: 0.0,
    }
}

/// `alpha`-quantile of the action's utility.
pub fn action_quantile(a: &Action, alpha: OptimismLevel) -> Result<f64> {
    let (law, shift) = a.parts();
    if alpha.is_zero() {
        let lower = law.support().0;
        if lower.is_finite() {
            return Ok(lower + shift);
        }
        return Err(Error::domain(
            "the 0-quantile of a law unbounded below is undefined",
        ));
    }
    Ok(law.quantile_at(alpha.value()) + shift)
}

/// Closed-form engine; `Unsupported` when the family has no closed form.
pub fn superquantile_closed_form(
    a: &Action,
    alpha: OptimismLevel,
    pareto: ParetoFactor,
) -> Result<SuperquantileResult> {
    let (law, shift) = a.parts();
    let value = law
        .closed_form_superquantile_with(alpha.value(), pareto)
        .ok_or(Error::Unsupported {
            operation: "closed-form superquantile",
            family: law.family_name(),
        })?;
    let multiplier = if alpha.is_zero() {
        law.support().0
    } else {
        law.quantile_at(alpha.value())
    };
    Ok(SuperquantileResult {
        value,
        multiplier,
        engine: Engine::ClosedForm,
        error_bound: 0.0,
    }
    .shifted(shift))
}

/// Averages the quantile function over `(alpha, 1)`.
///
/// The substitution `theta = 1 - (1 - alpha) e^{-t}` turns the integral into
/// `int_0^inf Q_{theta(t)} e^{-t} dt`, which stays bounded for power-law
/// tails. Empirical laws are integrated exactly (their quantile function is
/// a step function).
pub fn superquantile_quantile_average(
    a: &Action,
    alpha: OptimismLevel,
    tol: f64,
) -> Result<SuperquantileResult> {
    check_tol(tol)?;
    let (law, shift) = a.parts();
    Ok(quantile_average(law, alpha.value(), tol)?.shifted(shift))
}

fn quantile_average(law: &Distribution, alpha: f64, tol: f64) -> Result<SuperquantileResult> {
    if alpha == 0.0 {
        return Ok(at_zero(law, Engine::QuantileAverage));
    }
    let multiplier = law.quantile_at(alpha);
    let tail = 1.0 - alpha;
    let value = match law {
        Distribution::Degenerate(d) => d.value(),
        Distribution::Empirical(e) => {
            let xs = e.sorted();
            let n = xs.len() as f64;
            let total: f64 = xs
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    let lo = (i as f64 / n).max(alpha);
                    let hi = (i as f64 + 1.0) / n;
                    if hi > lo {
                        x * (hi - lo)
                    } else {
                        0.0
                    }
                })
                .sum();
            total / tail
        }
        _ => {
            let integrand = |t: f64| {
                let weight = (-t).exp();
                let q = tail * weight;
                if q <= 0.0 {
                    0.0
                } else {
                    law.upper_quantile(q) * weight
                }
            };
            // a density kink at x sits at t = ln(tail / P(X > x)) after the substitution
            let breaks: Vec<f64> = law
                .breakpoints()
                .iter()
                .map(|x| law.sf(*x))
                .filter(|p| *p > 0.0 && *p < tail)
                .map(|p| (tail / p).ln())
                .collect();
            let value =
                quad::integrate_pieces(integrand, 0.0, f64::INFINITY, &breaks, 1.0, tol, DEFAULT_BUDGET)?.value;
            check_truncated_tail(&integrand, tail, tol, value)?;
            value
        }
    };
    Ok(SuperquantileResult {
        value,
        multiplier,
        engine: Engine::QuantileAverage,
        error_bound: tol,
    })
}

/// The substituted integrand vanishes once `tail * e^-t` underflows, which
/// silently drops the mass beyond `Q_(1 - 1e-300)`. Tails that decay like
/// `e^(-kappa t)` leave a remainder of about `f(t_cut) / kappa`; refuse the
/// estimate when that is not negligible (tails barely heavier than `1/x^2`).
fn check_truncated_tail(integrand: &impl Fn(f64) -> f64, tail: f64, tol: f64, value: f64) -> Result<()> {
    const SPAN: f64 = 10.0;
    let t_cut = (tail * 1e300).ln();
    let (near, far) = (integrand(t_cut - SPAN).abs(), integrand(t_cut).abs());
    if !(near.is_finite() && far.is_finite()) {
        return Err(Error::numeric("quantile tail is not finite at the truncation point", value));
    }
    if far == 0.0 {
        return Ok(());
    }
    let kappa = (near / far).ln() / SPAN;
    if !(kappa > 0.0) || far / kappa > tol.max(tol * value.abs()) {
        return Err(Error::numeric(
            format!("tail too heavy for the quantile average (truncated mass about {:e})", far / kappa.max(f64::MIN_POSITIVE)),
            value,
        ));
    }
    Ok(())
}

/// Solves the one-dimensional dual by locating its minimizer from the
/// first-order condition `P(u <= l) = alpha` (bisection on the monotone
/// cdf), then evaluating the objective there. The expected excess
/// `E[(u - l)+]` is the tail integral of the survival function for
/// continuous laws and an exact sample average otherwise.
pub fn superquantile_rockafellar(
    a: &Action,
    alpha: OptimismLevel,
    tol: f64,
) -> Result<SuperquantileResult> {
    check_tol(tol)?;
    let (law, shift) = a.parts();
    Ok(rockafellar(law, alpha.value(), tol)?.shifted(shift))
}

/// Minimizer of the dual objective: the smallest `l` with `F(l) >= alpha`.
fn dual_multiplier(law: &Distribution, alpha: f64) -> Result<f64> {
    let tail = 1.0 - alpha;
    let below = |l: f64| {
        if alpha > 0.5 {
            law.sf(l) > tail
        } else {
            law.cdf(l) < alpha
        }
    };
    let centre = law.mean();
    let (lo, hi) = roots::grow_bracket(below, centre, law.spread())?;
    let (_, hi) = roots::bisect(below, lo, hi, 1e-12 * hi.abs().max(lo.abs()).max(1.0), 200);
    Ok(match law {
        Distribution::Degenerate(d) => d.value(),
        Distribution::Empirical(e) => {
            let xs = e.sorted();
            let idx = xs.partition_point(|&x| x <= hi);
            xs[idx.max(1) - 1]
        }
        _ => hi,
    })
}

/// `E[(X - l)+]` for the law.
pub(crate) fn expected_excess_at(law: &Distribution, l: f64, tol: f64) -> Result<f64> {
    match law {
        Distribution::Degenerate(d) => Ok((d.value() - l).max(0.0)),
        Distribution::Empirical(e) => {
            let xs = e.sorted();
            Ok(xs.iter().map(|x| (x - l).max(0.0)).sum::<f64>() / xs.len() as f64)
        }
        _ => {
            let (_, sup) = law.support();
            if sup <= l {
                return Ok(0.0);
            }
            let r = quad::integrate_pieces(
                |x| law.sf(x),
                l,
                sup,
                &law.breakpoints(),
                law.spread(),
                tol,
                DEFAULT_BUDGET,
            )?;
            Ok(r.value)
        }
    }
}

fn rockafellar(law: &Distribution, alpha: f64, tol: f64) -> Result<SuperquantileResult> {
    if alpha == 0.0 {
        return Ok(at_zero(law, Engine::Rockafellar));
    }
    let tail = 1.0 - alpha;
    let multiplier = dual_multiplier(law, alpha)?;
    let excess = expected_excess_at(law, multiplier, tol * tail)?;
    Ok(SuperquantileResult {
        value: multiplier + excess / tail,
        multiplier,
        engine: Engine::Rockafellar,
        error_bound: tol,
    })
}

/// Conditional mean above the quantile, `(1/(1-alpha)) int_{Q}^inf x f(x) dx`.
/// Not available for empirical laws (atoms break the identity; use the
/// sample estimator instead).
pub fn superquantile_conditional_tail(
    a: &Action,
    alpha: OptimismLevel,
    tol: f64,
) -> Result<SuperquantileResult> {
    check_tol(tol)?;
    let (law, shift) = a.parts();
    Ok(conditional_tail(law, alpha.value(), tol)?.shifted(shift))
}

fn conditional_tail(law: &Distribution, alpha: f64, tol: f64) -> Result<SuperquantileResult> {
    match law {
        Distribution::Empirical(_) => {
            return Err(Error::Unsupported {
                operation: "conditional-tail superquantile",
                family: law.family_name(),
            })
        }
        Distribution::Degenerate(d) => {
            return Ok(SuperquantileResult {
                value: d.value(),
                multiplier: d.value(),
                engine: Engine::ConditionalTail,
                error_bound: 0.0,
            })
        }
        _ => {}
    }
    if alpha == 0.0 {
        return Ok(at_zero(law, Engine::ConditionalTail));
    }
    let tail = 1.0 - alpha;
    let q = law.quantile_at(alpha);
    let (_, sup) = law.support();
    let r = quad::integrate_pieces(
        |x| x * law.pdf(x).unwrap_or(0.0),
        q,
        sup,
        &law.breakpoints(),
        law.spread(),
        tol * tail,
        DEFAULT_BUDGET,
    )?;
    Ok(SuperquantileResult {
        value: r.value / tail,
        multiplier: q,
        engine: Engine::ConditionalTail,
        error_bound: tol,
    })
}

/// Sample estimator: mean of the top `ceil((1-alpha) n)` order statistics,
/// with the standard error of that block as error bound.
pub fn superquantile_monte_carlo(samples: &[f64], alpha: OptimismLevel) -> Result<SuperquantileResult> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::domain("sample is empty"));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let alpha = alpha.value();
    let below = if alpha == 0.0 {
        0
    } else {
        let x = alpha * n as f64;
        let r = x.round();
        if (x - r).abs() <= 1e-12 * x.max(1.0) {
            r as usize
        } else {
            x.floor() as usize
        }
    };
    if below >= n {
        return Err(Error::domain(format!(
            "tail block is empty: need at least {} samples at alpha = {alpha}",
            (1.0 / (1.0 - alpha)).ceil()
        )));
    }
    let top = &xs[below..];
    let m = top.len() as f64;
    let value = top.iter().sum::<f64>() / m;
    let error_bound = if top.len() > 1 {
        let var = top.iter().map(|x| (x - value) * (x - value)).sum::<f64>() / (m - 1.0);
        (var / m).sqrt()
    } else {
        0.0
    };
    let multiplier = if alpha == 0.0 {
        xs[0]
    } else {
        xs[order_index(alpha, n) - 1]
    };
    Ok(SuperquantileResult {
        value,
        multiplier,
        engine: Engine::MonteCarlo,
        error_bound,
    })
}

/// Sample estimator on `n` seeded draws of the action's utility (or on the
/// data itself for empirical laws).
pub fn superquantile_monte_carlo_action(
    a: &Action,
    alpha: OptimismLevel,
    n: usize,
    seed: u64,
) -> Result<SuperquantileResult> {
    let (law, shift) = a.parts();
    let r = match law {
        Distribution::Empirical(e) => superquantile_monte_carlo(e.sorted(), alpha)?,
        _ => superquantile_monte_carlo(&law.sample(n, seed), alpha)?,
    };
    Ok(r.shifted(shift))
}

/// Superquantile by the configured engine.
pub fn superquantile(a: &Action, alpha: OptimismLevel, cfg: &EngineConfig) -> Result<SuperquantileResult> {
    let (law, _) = a.parts();
    match cfg.method {
        Method::Closed => superquantile_closed_form(a, alpha, cfg.pareto),
        Method::Average => superquantile_quantile_average(a, alpha, cfg.tol),
        Method::Rockafellar => superquantile_rockafellar(a, alpha, cfg.tol),
        Method::Conditional => superquantile_conditional_tail(a, alpha, cfg.tol),
        Method::MonteCarlo => superquantile_monte_carlo_action(a, alpha, cfg.mc_samples, cfg.seed),
        Method::Auto => {
            if law
                .closed_form_superquantile_with(alpha.value(), cfg.pareto)
                .is_some()
            {
                superquantile_closed_form(a, alpha, cfg.pareto)
            } else if matches!(law, Distribution::Empirical(_)) {
                superquantile_monte_carlo_action(a, alpha, cfg.mc_samples, cfg.seed)
            } else {
                superquantile_conditional_tail(a, alpha, cfg.tol)
            }
        }
    }
}

/// `dV_alpha/dalpha` by the identity `(Qbar - Q)/(1 - alpha)`, with a central
/// finite difference computed alongside as a check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaDerivative {
    pub analytic: f64,
    pub finite_difference: f64,
    /// Step actually used after clipping into `(0, 1)`.
    pub step: f64,
    /// Agreement threshold `max(1e-4, 10 h^2)`.
    pub tolerance: f64,
    /// False when the two routes disagree beyond `tolerance`.
    pub consistent: bool,
}

pub fn superquantile_dalpha(
    a: &Action,
    alpha: OptimismLevel,
    h: f64,
    cfg: &EngineConfig,
) -> Result<AlphaDerivative> {
    let x = alpha.value();
    if x == 0.0 || !(h > 0.0) {
        return Err(Error::domain("derivative needs alpha in (0,1) and a positive step"));
    }
    let h = h.min(0.5 * x).min(0.5 * (1.0 - x));
    let centre = superquantile(a, alpha, cfg)?;
    let q = action_quantile(a, alpha)?;
    let analytic = (centre.value - q) / (1.0 - x);
    let up = superquantile(a, OptimismLevel(x + h), cfg)?.value;
    let down = superquantile(a, OptimismLevel(x - h), cfg)?.value;
    let finite_difference = (up - down) / (2.0 * h);
    let tolerance = 1e-4f64.max(10.0 * h * h);
    Ok(AlphaDerivative {
        analytic,
        finite_difference,
        step: h,
        tolerance,
        consistent: (analytic - finite_difference).abs() <= tolerance,
    })
}

/// `(V_eps, V_{1-eps})`: the expectation and best-case limits.
pub fn limit_report(a: &Action, eps: f64, cfg: &EngineConfig) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps < 0.1) {
        return Err(Error::domain(format!("eps must lie in (0, 0.1), got {eps}")));
    }
    let low = superquantile(a, OptimismLevel(eps), cfg)?.value;
    let high = superquantile(a, OptimismLevel(1.0 - eps), cfg)?.value;
    Ok((low, high))
}
