//! Market entry under optimism.
//!
//! A firm facing a mean-zero profit shock `pi` and entry cost `k > 0` never
//! enters when it maximizes expected profit, but an optimistic firm enters
//! iff `Qbar_alpha(pi) > k`. Since `Qbar_alpha` is nondecreasing in `alpha`
//! there is a threshold `alpha_hat` with `Qbar_alpha_hat(pi) = k` above which
//! every firm enters. At the threshold itself the strict inequality fails and
//! the firm stays out.
//!
//! For Pareto shocks the entry rule reduces to a cutoff on the quantile,
//! `Q_alpha > k (beta - 1) / beta`.

use crate::distributions::{Distribution, ParetoFactor};
use crate::error::{Error, Result};
use crate::superquantile::{superquantile, Action, EngineConfig, OptimismLevel};

/// Shock means further than this from zero produce a warning.
pub const ZERO_MEAN_TOLERANCE: f64 = 1e-6;

/// Default bracket width for the threshold bisection.
pub const DEFAULT_THRESHOLD_TOL: f64 = 1e-10;

/// Optimism levels probed, in order, when looking for an upper bracket.
const UPPER_PROBES: [f64; 6] = [0.9, 0.99, 1.0 - 1e-4, 1.0 - 1e-6, 1.0 - 1e-9, 1.0 - 1e-12];

#[derive(Debug, Clone, PartialEq)]
pub struct EntryProblem {
    shock: Distribution,
    k: f64,
}

impl EntryProblem {
    pub fn new(shock: Distribution, k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::invalid("entry", format!("entry cost k must be positive, got {k}")));
        }
        Ok(EntryProblem { shock, k })
    }

    pub fn shock(&self) -> &Distribution {
        &self.shock
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Warning text when the shock does not have mean zero.
    pub fn mean_warning(&self) -> Option<String> {
        let m = self.shock.mean();
        (m.abs() > ZERO_MEAN_TOLERANCE).then(|| format!("profit shock has mean {m} (expected 0)"))
    }

    fn action(&self) -> Action {
        Action::general("entry", self.shock.clone())
    }

    /// `Qbar_alpha(pi) - k`.
    pub fn gap(&self, alpha: OptimismLevel, cfg: &EngineConfig) -> Result<f64> {
        Ok(superquantile(&self.action(), alpha, cfg)?.value - self.k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryDecision {
    Enter,
    StayOut,
}

impl EntryDecision {
    pub fn as_str(self) -> &'static str {
        match self {
            EntryDecision::Enter => "enter",
            EntryDecision::StayOut => "stay_out",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntryOutcome {
    pub decision: EntryDecision,
    /// `Qbar_alpha(pi)`.
    pub value: f64,
    /// `Qbar_alpha(pi) - k`.
    pub gap: f64,
}

/// Enter iff `Qbar_alpha(pi) > k`.
pub fn entry_decision(p: &EntryProblem, alpha: OptimismLevel, cfg: &EngineConfig) -> Result<EntryOutcome> {
    let gap = p.gap(alpha, cfg)?;
    Ok(EntryOutcome {
        decision: if gap > 0.0 {
            EntryDecision::Enter
        } else {
            EntryDecision::StayOut
        },
        value: gap + p.k,
        gap,
    })
}

/// Solves `Qbar_alpha(pi) = k` for `alpha` by bisection to bracket width `tol`.
///
/// Fails with [`Error::NoRoot`] when `k` does not exceed the mean (every
/// firm enters) or exceeds every attainable superquantile.
pub fn entry_threshold(p: &EntryProblem, tol: f64, cfg: &EngineConfig) -> Result<f64> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::domain(format!("tolerance must lie in (0,1), got {tol}")));
    }
    let gap = |x: f64| p.gap(OptimismLevel::new(x)?, cfg);
    if gap(0.0)? >= 0.0 {
        return Err(Error::NoRoot(format!(
            "entry cost {} does not exceed the mean profit {}",
            p.k,
            p.shock.mean()
        )));
    }
    let mut lo = 0.0;
    let mut hi = None;
    for probe in UPPER_PROBES {
        if gap(probe)? > 0.0 {
            hi = Some(probe);
            break;
        }
        lo = probe;
    }
    let Some(mut hi) = hi else {
        return Err(Error::NoRoot(format!(
            "entry cost {} exceeds the superquantile at every optimism level (sup = {})",
            p.k,
            p.shock.ess_sup()
        )));
    };
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Quantile cutoffs of the Pareto entry rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoCutoff {
    /// `k (beta - 1) / beta`, from `Qbar = Q beta / (beta - 1)`.
    pub corrected: f64,
    /// `k beta / (beta - 1)`, the published cutoff.
    pub printed: f64,
}

impl ParetoCutoff {
    pub fn select(&self, factor: ParetoFactor) -> f64 {
        match factor {
            ParetoFactor::Corrected => self.corrected,
            ParetoFactor::Printed => self.printed,
        }
    }
}

pub fn pareto_entry_cutoff(beta: f64, k: f64) -> Result<ParetoCutoff> {
    if !(beta > 1.0) {
        return Err(Error::domain(format!(
            "Pareto shape {beta} <= 1: the superquantile is not well defined"
        )));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::domain(format!("entry cost k must be positive, got {k}")));
    }
    Ok(ParetoCutoff {
        corrected: k * (beta - 1.0) / beta,
        printed: k * beta / (beta - 1.0),
    })
}

/// Entry verdict from the quantile cutoff for the shock `pi = W + shift`
/// with `W ~ Pareto(scale, beta)`: enter iff `Q_alpha(W) > cutoff(k - shift)`.
pub fn pareto_cutoff_decision(
    scale: f64,
    beta: f64,
    shift: f64,
    k: f64,
    alpha: OptimismLevel,
    factor: ParetoFactor,
) -> Result<EntryDecision> {
    let law = Distribution::pareto(scale, beta)?;
    let cutoff = pareto_entry_cutoff(beta, k - shift)?.select(factor);
    let q = if alpha.is_zero() { scale } else { law.quantile_at(alpha.value()) };
    Ok(if q > cutoff {
        EntryDecision::Enter
    } else {
        EntryDecision::StayOut
    })
}
