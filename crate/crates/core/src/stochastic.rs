//! Optimistic stochastic choice.
//!
//! With Gumbel utility errors the probability of picking an action is the
//! logit (Luce) share of its optimistic value `V_alpha`. For two actions this
//! is `e^{V(a1)} / (e^{V(a1)} + e^{V(a2)})`; menus of three or more use the
//! usual multinomial softmax. Sweeping `alpha` gives choice curves; whether
//! such a curve rises is governed by the expected excess
//! `E[(u - Q_alpha)+]` of the two actions.
//!
//! Monotonicity is necessarily checked on a finite grid of `alpha` values;
//! verdicts are relative to that grid.

use std::collections::HashSet;

use indexmap::IndexMap;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::superquantile::{
    action_quantile, expected_excess_at, superquantile, Action, EngineConfig, OptimismLevel,
};

/// Tolerance for the curve monotonicity audit.
pub const AUDIT_TOLERANCE: f64 = 1e-9;

/// `{0.01, 0.02, ..., 0.99}`.
pub fn default_grid() -> Vec<f64> {
    (1..=99).map(|i| f64::from(i) / 100.0).collect()
}

/// `count` evenly spaced points from `start` to `stop` inclusive.
pub fn linear_grid(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| {
                if i + 1 == count {
                    stop
                } else {
                    start + (stop - start) * i as f64 / (count - 1) as f64
                }
            })
            .collect(),
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::domain("alpha grid is empty"));
    }
    if let Some(x) = grid.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
        return Err(Error::domain(format!("grid point {x} is outside (0,1)")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("alpha grid must be strictly increasing"));
    }
    Ok(())
}

/// Softmax of the values, computed after subtracting the maximum.
pub fn luce_probs(values: &IndexMap<String, f64>) -> Result<IndexMap<String, f64>> {
    if values.len() < 2 {
        return Err(Error::domain("logit choice needs at least two actions"));
    }
    if let Some((label, v)) = values.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::domain(format!("value of '{label}' is not finite ({v})")));
    }
    let top = values.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = values.values().map(|v| (v - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(values
        .keys()
        .zip(weights)
        .map(|(l, w)| (l.clone(), w / total))
        .collect())
}

/// Values and logit probabilities of a menu along an `alpha` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LuceCurve {
    pub alphas: Vec<f64>,
    /// `V_alpha` per label, aligned with `alphas`.
    pub values: IndexMap<String, Vec<f64>>,
    /// Choice probability per label, aligned with `alphas`.
    pub probs: IndexMap<String, Vec<f64>>,
}

impl LuceCurve {
    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

/// Evaluates every action at every grid point (grid points in parallel) and
/// converts the values into logit probabilities.
pub fn luce_curve(actions: &[Action], grid: &[f64], cfg: &EngineConfig) -> Result<LuceCurve> {
    check_grid(grid)?;
    let mut seen = HashSet::new();
    if let Some(a) = actions.iter().find(|a| !seen.insert(a.label())) {
        return Err(Error::domain(format!("duplicate action label '{}'", a.label())));
    }
    let rows: Vec<Result<IndexMap<String, f64>>> = grid
        .par_iter()
        .map(|&x| {
            let alpha = OptimismLevel::new(x)?;
            actions
                .iter()
                .map(|a| {
                    superquantile(a, alpha, cfg)
                        .map(|r| (a.label().to_string(), r.value))
                        .map_err(|e| e.for_action(&format!("{} at alpha = {x}", a.label())))
                })
                .collect()
        })
        .collect();
    let mut values: IndexMap<String, Vec<f64>> = actions
        .iter()
        .map(|a| (a.label().to_string(), Vec::with_capacity(grid.len())))
        .collect();
    let mut probs = values.clone();
    for row in rows {
        let row = row?;
        let p = luce_probs(&row)?;
        for (label, v) in row {
            values[&label].push(v);
        }
        for (label, q) in p {
            probs[&label].push(q);
        }
    }
    Ok(LuceCurve {
        alphas: grid.to_vec(),
        values,
        probs,
    })
}

/// `E[(u - Q_alpha)+] = (Qbar_alpha - Q_alpha)(1 - alpha)`.
pub fn expected_excess(a: &Action, alpha: OptimismLevel, cfg: &EngineConfig) -> Result<f64> {
    if alpha.is_zero() {
        return Err(Error::domain("expected excess needs alpha in (0,1)"));
    }
    let v = superquantile(a, alpha, cfg)?.value;
    let q = action_quantile(a, alpha)?;
    Ok(((v - q) * (1.0 - alpha.value())).max(0.0))
}

/// `E[(u - Q_alpha)+]` by direct quadrature of the survival function above
/// the quantile (exact sample average for empirical laws).
pub fn expected_excess_direct(a: &Action, alpha: OptimismLevel, tol: f64) -> Result<f64> {
    if alpha.is_zero() {
        return Err(Error::domain("expected excess needs alpha in (0,1)"));
    }
    let (law, shift) = a.parts();
    let q = action_quantile(a, alpha)? - shift;
    expected_excess_at(law, q, tol)
}

/// Grid verdict of the pairwise monotonicity condition.
#[derive(Debug, Clone, PartialEq)]
pub struct PairVerdict {
    pub monotone: bool,
    /// `(alpha, excess of a, excess of b)` wherever the condition fails.
    pub violations: Vec<(f64, f64, f64)>,
    /// Number of grid points examined.
    pub grid_points: usize,
}

/// Checks `E[(u_a - Q_alpha(a))+] >= E[(u_b - Q_alpha(b))+] - tol` at every
/// grid point: the condition under which the probability of choosing `a`
/// over `b` rises with optimism.
pub fn monotone_pair_check(
    a: &Action,
    b: &Action,
    grid: &[f64],
    tol: f64,
    cfg: &EngineConfig,
) -> Result<PairVerdict> {
    check_grid(grid)?;
    let rows: Vec<Result<(f64, f64, f64)>> = grid
        .par_iter()
        .map(|&x| {
            let alpha = OptimismLevel::new(x)?;
            let lhs = expected_excess(a, alpha, cfg).map_err(|e| e.for_action(a.label()))?;
            let rhs = expected_excess(b, alpha, cfg).map_err(|e| e.for_action(b.label()))?;
            Ok((x, lhs, rhs))
        })
        .collect();
    let mut violations = Vec::new();
    for row in rows {
        let (x, lhs, rhs) = row?;
        if lhs < rhs - tol {
            violations.push((x, lhs, rhs));
        }
    }
    Ok(PairVerdict {
        monotone: violations.is_empty(),
        violations,
        grid_points: grid.len(),
    })
}

/// Result of auditing a choice curve for monotonicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveVerdict {
    pub monotone: bool,
    /// Grid index at which the probability first drops.
    pub first_violation: Option<usize>,
}

/// Binary logit probability of `first` against `second` along the curve.
pub fn pair_probabilities(curve: &LuceCurve, first: &str, second: &str) -> Result<Vec<f64>> {
    let get = |l: &str| {
        curve
            .values
            .get(l)
            .ok_or_else(|| Error::domain(format!("label '{l}' is not on the curve")))
    };
    let (v1, v2) = (get(first)?, get(second)?);
    Ok(v1
        .iter()
        .zip(v2)
        .map(|(x, y)| 1.0 / (1.0 + (y - x).exp()))
        .collect())
}

/// Asserts that the binary probability of `pair.0` against `pair.1` is
/// nondecreasing along the grid within [`AUDIT_TOLERANCE`].
pub fn curve_monotonicity_audit(curve: &LuceCurve, pair: (&str, &str)) -> Result<CurveVerdict> {
    let p = pair_probabilities(curve, pair.0, pair.1)?;
    let first_violation = p
        .windows(2)
        .position(|w| w[1] < w[0] - AUDIT_TOLERANCE)
        .map(|i| i + 1);
    Ok(CurveVerdict {
        monotone: first_violation.is_none(),
        first_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Distribution;

    fn alpha(x: f64) -> OptimismLevel {
        OptimismLevel::new(x).unwrap()
    }

    fn map(pairs: &[(&str, f64)]) -> IndexMap<String, f64> {
        pairs.iter().map(|(l, v)| (l.to_string(), *v)).collect()
    }

    fn figure_menu() -> Vec<Action> {
        vec![
            Action::additive("a1", 0.0, Distribution::normal(0.0, 1.0).unwrap()).unwrap(),
            Action::additive("a2", 1.0, Distribution::degenerate(0.0).unwrap()).unwrap(),
        ]
    }

    #[test]
    fn luce_examples() {
        let p = luce_probs(&map(&[("A", 0.3), ("B", 0.3)])).unwrap();
        assert_eq!((p["A"], p["B"]), (0.5, 0.5));
        let p = luce_probs(&map(&[("A", 0.0), ("B", 1.0)])).unwrap();
        assert!((p["A"] - 0.268_941_421_369_995_1).abs() < 1e-15);
        let p = luce_probs(&map(&[("A", 10.0), ("B", -10.0)])).unwrap();
        assert!((p["B"] - 2.061_153_618_190_204e-9).abs() < 1e-20);
        assert!((p["A"] + p["B"] - 1.0).abs() < 1e-15);
        let p = luce_probs(&map(&[("A", 1000.0), ("B", 999.0), ("C", -1000.0)])).unwrap();
        assert!(p.values().all(|q| q.is_finite()));
        assert!(luce_probs(&map(&[("A", f64::NAN), ("B", 0.0)])).is_err());
        assert!(luce_probs(&map(&[("A", 0.0)])).is_err());
    }

    #[test]
    fn figure_curve() {
        let grid = default_grid();
        let curve = luce_curve(&figure_menu(), &grid, &EngineConfig::default()).unwrap();
        let p = &curve.probs["a1"];
        for (i, q) in p.iter().enumerate() {
            assert!((q + curve.probs["a2"][i] - 1.0).abs() < 1e-12);
        }
        assert!(p[0] > 0.2689 && p[0] < 0.3);
        assert!(p[98] > 0.84 && p[98] > p[97]);
        assert!(curve_monotonicity_audit(&curve, ("a1", "a2")).unwrap().monotone);
        let swapped = curve_monotonicity_audit(&curve, ("a2", "a1")).unwrap();
        assert_eq!(swapped.first_violation, Some(1));
        let cross = grid.iter().zip(p).find(|(_, q)| **q >= 0.5).unwrap().0;
        assert_eq!(*cross, 0.62);
    }

    #[test]
    fn identical_actions_are_flat() {
        let n = Distribution::normal(0.0, 1.0).unwrap();
        let menu = vec![Action::general("x", n.clone()), Action::general("y", n)];
        let curve = luce_curve(&menu, &[0.1, 0.5, 0.9], &EngineConfig::default()).unwrap();
        assert!(curve.probs["x"].iter().all(|p| *p == 0.5));
        assert!(curve_monotonicity_audit(&curve, ("x", "y")).unwrap().monotone);
    }

    #[test]
    fn grid_validation() {
        let cfg = EngineConfig::default();
        assert!(luce_curve(&figure_menu(), &[0.5, 0.4], &cfg).is_err());
        assert!(luce_curve(&figure_menu(), &[0.0, 0.4], &cfg).is_err());
        assert!(luce_curve(&figure_menu(), &[], &cfg).is_err());
        let g = linear_grid(0.01, 0.99, 99);
        assert_eq!((g[0], g[98]), (0.01, 0.99));
        for (x, y) in g.iter().zip(default_grid()) {
            assert!((x - y).abs() < 1e-15);
        }
        assert_eq!(linear_grid(0.3, 0.4, 1), vec![0.3]);
    }

    #[test]
    fn excess_examples() {
        let cfg = EngineConfig::default();
        let tri = Distribution::triangular(0.0, 0.0, 2.0).unwrap();
        let a1 = Action::general("a=1", Distribution::affine(tri, 1.0, -1.0).unwrap());
        let e = expected_excess(&a1, alpha(0.8), &cfg).unwrap();
        assert!((e - 0.0596).abs() < 2e-4);
        assert!((e - expected_excess_direct(&a1, alpha(0.8), 1e-12).unwrap()).abs() < 1e-8);
        let c = Action::general("c", Distribution::degenerate(4.0).unwrap());
        assert_eq!(expected_excess(&c, alpha(0.3), &cfg).unwrap(), 0.0);
        let n = Action::general("n", Distribution::normal(0.0, 1.0).unwrap());
        let e = expected_excess(&n, alpha(0.5), &cfg).unwrap();
        assert!((e - 0.398_942_280_401_432_7).abs() < 1e-12);
        assert!((e - expected_excess_direct(&n, alpha(0.5), 1e-12).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn pair_checks() {
        let cfg = EngineConfig::default();
        let grid = default_grid();
        let menu = figure_menu();
        assert!(monotone_pair_check(&menu[0], &menu[1], &grid, 1e-12, &cfg).unwrap().monotone);
        assert!(monotone_pair_check(&menu[0], &menu[0], &grid, 0.0, &cfg).unwrap().monotone);
        let wide = Action::general("w", Distribution::normal(0.0, 2.0).unwrap());
        let v = monotone_pair_check(&menu[0], &wide, &grid, 1e-12, &cfg).unwrap();
        assert!(!v.monotone);
        assert_eq!(v.violations.len(), 99);
        assert_eq!(v.grid_points, 99);
    }
}
