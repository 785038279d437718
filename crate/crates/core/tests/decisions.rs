mod common;

use common::*;
use indexmap::IndexMap;
use optimist::beliefs::{belief_mean, censor, censored_cdf, distortion_cost, DistortionCost};
use optimist::choice::{
    additive_choose, cara_choose, cara_value, choose, pareto_choose, pareto_value, AdditiveItem, CaraSpec,
    ChoiceProblem, ParetoItem,
};
use optimist::entry::{
    entry_decision, entry_threshold, pareto_cutoff_decision, EntryDecision, EntryProblem, DEFAULT_THRESHOLD_TOL,
};
use optimist::stochastic::{
    curve_monotonicity_audit, default_grid, expected_excess, expected_excess_direct, linear_grid, luce_curve,
    luce_probs, monotone_pair_check,
};
use optimist::superquantile::{superquantile, Action, EngineConfig};
use optimist::{Distribution, Error, ParetoFactor};
use proptest::prelude::*;

fn cfg() -> EngineConfig {
    EngineConfig::default()
}

#[test]
fn example_menu_switches_with_optimism() {
    let menu = example_menu();
    let pick = |x: f64| choose(&ChoiceProblem::new(menu.clone(), alpha(x), cfg()).unwrap()).unwrap();
    // risk neutral: both actions have the same mean, so they tie
    let neutral = pick(0.0);
    assert_eq!(neutral.ties, vec!["a=1", "a=-1"]);
    assert_eq!(pick(0.8).winner, "a=1");
    assert_eq!(pick(0.95).winner, "a=1");
}

#[test]
fn figure_curve_crosses_over() {
    let curve = luce_curve(&figure_menu(), &default_grid(), &cfg()).unwrap();
    let p = &curve.probs["a1"];
    assert!(p[0] < 0.5 && p[98] > 0.5);
    let verdict = curve_monotonicity_audit(&curve, ("a1", "a2")).unwrap();
    assert!(verdict.monotone, "{verdict:?}");
    for (i, x) in curve.alphas.iter().enumerate() {
        let total: f64 = curve.probs.values().map(|v| v[i]).sum();
        assert!((total - 1.0).abs() < 1e-12, "alpha {x}: {total}");
    }
}

#[test]
fn excess_condition_fails_when_the_sure_option_dominates() {
    // a sure payoff has zero excess, so a risky action always satisfies the check against it
    let menu = figure_menu();
    let grid = linear_grid(0.05, 0.95, 19);
    assert!(monotone_pair_check(&menu[0], &menu[1], &grid, 1e-12, &cfg()).unwrap().monotone);
    let reverse = monotone_pair_check(&menu[1], &menu[0], &grid, 1e-12, &cfg()).unwrap();
    assert!(!reverse.monotone);
    assert_eq!(reverse.violations.len(), 19);
}

#[test]
fn cara_closed_form_matches_quadrature() {
    let (u, r, sigma) = (0.5, 1.3, 0.7);
    let spec = CaraSpec::new(u, r, sigma).unwrap();
    let shock = Distribution::normal(0.0, sigma).unwrap();
    for x in [0.1, 0.5, 0.9] {
        // midpoint rule on the utility quantile u - exp(-r Q_p(w)), p in (alpha, 1)
        let n = 400_000;
        let h = (1.0 - x) / n as f64;
        let total: f64 = (0..n)
            .map(|i| {
                let p = x + (i as f64 + 0.5) * h;
                u - (-r * shock.quantile(p).unwrap()).exp()
            })
            .sum();
        let oracle = total / n as f64;
        let v = cara_value(&spec, alpha(x));
        assert!((v - oracle).abs() < 1e-6, "alpha {x}: {v} vs {oracle}");
    }
    assert!((cara_value(&spec, alpha(0.0)) - (u - (0.5 * (r * sigma).powi(2)).exp())).abs() < 1e-15);
}

#[test]
fn cara_menu_needs_a_common_risk_aversion() {
    let a = CaraSpec::new(0.0, 1.0, 1.0).unwrap();
    let b = CaraSpec::new(0.0, 2.0, 0.5).unwrap();
    assert!(cara_choose(&[("a", a), ("b", b)], alpha(0.5)).is_err());
    // with a shared r, more risk wins once optimism is high
    let safe = CaraSpec::new(0.0, 1.0, 0.2).unwrap();
    let risky = CaraSpec::new(0.0, 1.0, 1.5).unwrap();
    let items = [("safe", safe), ("risky", risky)];
    assert_eq!(cara_choose(&items, alpha(0.0)).unwrap().winner, "safe");
    assert_eq!(cara_choose(&items, alpha(0.95)).unwrap().winner, "risky");
}

#[test]
fn pareto_menu_uses_the_selected_factor() {
    let items = [
        ParetoItem { label: "heavy", u: 0.0, scale: 1.0, shape: 2.0 },
        ParetoItem { label: "light", u: 0.0, scale: 1.0, shape: 3.0 },
    ];
    let general: Vec<Action> = items
        .iter()
        .map(|i| Action::general(i.label, Distribution::pareto(i.scale, i.shape).unwrap()))
        .collect();
    for x in [0.0, 0.3, 0.75, 0.99] {
        for (item, a) in items.iter().zip(&general) {
            let closed = pareto_value(item, alpha(x), ParetoFactor::Corrected).unwrap();
            let numeric = superquantile(a, alpha(x), &cfg()).unwrap().value;
            assert!((closed - numeric).abs() < 1e-6 * numeric, "{} at {x}", item.label);
        }
    }
    let corrected = pareto_choose(&items, alpha(0.75), ParetoFactor::Corrected).unwrap();
    assert_eq!(corrected.winner, "heavy");
    assert!((corrected.values["heavy"] - 4.0).abs() < 1e-12);
    let printed = pareto_choose(&items, alpha(0.75), ParetoFactor::Printed).unwrap();
    assert!((printed.values["heavy"] - 1.0).abs() < 1e-12);
    let bad = ParetoItem { label: "x", u: 0.0, scale: 1.0, shape: 1.0 };
    assert!(matches!(pareto_value(&bad, alpha(0.5), ParetoFactor::Corrected), Err(Error::Domain(_))));
}

#[test]
fn corrected_pareto_cutoff_matches_the_superquantile_rule() {
    let cfg = cfg();
    for (beta, shift, k) in [(2.0, -1.0, 1.5), (3.0, 0.0, 2.0), (1.5, -2.0, 0.5)] {
        let shock = Distribution::affine(Distribution::pareto(1.0, beta).unwrap(), 1.0, shift).unwrap();
        let p = EntryProblem::new(shock, k).unwrap();
        for x in linear_grid(0.02, 0.98, 49) {
            let direct = entry_decision(&p, alpha(x), &cfg).unwrap().decision;
            let cutoff = pareto_cutoff_decision(1.0, beta, shift, k, alpha(x), ParetoFactor::Corrected).unwrap();
            assert_eq!(direct, cutoff, "beta {beta}, shift {shift}, k {k}, alpha {x}");
        }
    }
}

#[test]
fn entry_threshold_fails_without_a_crossing() {
    let cfg = cfg();
    let below_mean = EntryProblem::new(Distribution::normal(1.0, 1.0).unwrap(), 0.5).unwrap();
    assert!(matches!(entry_threshold(&below_mean, DEFAULT_THRESHOLD_TOL, &cfg), Err(Error::NoRoot(_))));
    let bounded = EntryProblem::new(Distribution::triangular(-1.0, 0.0, 1.0).unwrap(), 2.0).unwrap();
    assert!(matches!(entry_threshold(&bounded, DEFAULT_THRESHOLD_TOL, &cfg), Err(Error::NoRoot(_))));
}

fn shock_strategy() -> impl Strategy<Value = Distribution> {
    prop_oneof![
        (0.2..3.0f64).prop_map(|s| Distribution::normal(0.0, s).unwrap()),
        (0.2..2.0f64).prop_map(|s| Distribution::logistic(0.0, s).unwrap()),
        (3.0..20.0f64).prop_map(|df| Distribution::student_t(df, 1.0, 0.0).unwrap()),
        (0.5..3.0f64).prop_map(|w| Distribution::triangular(-w, 0.0, w).unwrap()),
    ]
}

fn action_strategy() -> impl Strategy<Value = Action> {
    (-2.0..2.0f64, shock_strategy()).prop_map(|(u, w)| Action::additive("x", u, w).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn entry_has_a_single_crossing(shock in shock_strategy(), k in 0.05..0.8f64) {
        let cfg = cfg();
        let w = shock.quantile(0.999).unwrap();
        let p = EntryProblem::new(shock, k * w).unwrap();
        let hat = entry_threshold(&p, DEFAULT_THRESHOLD_TOL, &cfg).unwrap();
        prop_assert!(p.gap(alpha(hat), &cfg).unwrap().abs() < 1e-6);
        let decisions: Vec<EntryDecision> = linear_grid(0.01, 0.99, 50)
            .into_iter()
            .map(|x| entry_decision(&p, alpha(x), &cfg).unwrap().decision)
            .collect();
        let first_enter = decisions.iter().position(|d| *d == EntryDecision::Enter).unwrap_or(decisions.len());
        prop_assert!(decisions[first_enter..].iter().all(|d| *d == EntryDecision::Enter));
        for (x, d) in linear_grid(0.01, 0.99, 50).into_iter().zip(&decisions) {
            if (x - hat).abs() > 1e-6 {
                prop_assert_eq!(*d == EntryDecision::Enter, x > hat, "alpha {} vs threshold {}", x, hat);
            }
        }
    }

    #[test]
    fn probabilities_sum_to_one_and_follow_labels(
        values in proptest::collection::vec(-50.0..50.0f64, 2..8),
        rotate in 0usize..8,
    ) {
        let map: IndexMap<String, f64> = values.iter().enumerate().map(|(i, v)| (format!("l{i}"), *v)).collect();
        let p = luce_probs(&map).unwrap();
        prop_assert!((p.values().sum::<f64>() - 1.0).abs() < 1e-12);
        let mut pairs: Vec<(String, f64)> = map.into_iter().collect();
        let r = rotate % pairs.len();
        pairs.rotate_left(r);
        let q = luce_probs(&pairs.into_iter().collect()).unwrap();
        for (label, v) in &p {
            prop_assert!((v - q[label]).abs() < 1e-15);
        }
    }

    #[test]
    fn choice_ignores_a_common_translation(
        us in proptest::collection::vec(-2.0..2.0f64, 2..5),
        scales in proptest::collection::vec(0.2..3.0f64, 5),
        c in -10.0..10.0f64,
        x in 0.0..0.99f64,
    ) {
        let items: Vec<AdditiveItem> = us
            .iter()
            .zip(&scales)
            .enumerate()
            .map(|(i, (u, s))| AdditiveItem::new(format!("a{i}"), *u, Distribution::normal(0.0, *s).unwrap()))
            .collect();
        let shifted: Vec<AdditiveItem> = us
            .iter()
            .zip(&scales)
            .enumerate()
            .map(|(i, (u, s))| AdditiveItem::new(format!("a{i}"), u + c, Distribution::normal(0.0, *s).unwrap()))
            .collect();
        let base = additive_choose(&items, alpha(x), cfg()).unwrap();
        let moved = additive_choose(&shifted, alpha(x), cfg()).unwrap();
        prop_assert_eq!(&base.ties, &moved.ties);
        let (p, q) = (luce_probs(&base.values).unwrap(), luce_probs(&moved.values).unwrap());
        for (label, v) in &p {
            prop_assert!((v - q[label]).abs() < 1e-9);
        }
    }

    #[test]
    fn menu_order_does_not_change_the_values(wa in shock_strategy(), wb in shock_strategy(), x in 0.0..0.99f64) {
        let a = Action::additive("a", 0.0, wa).unwrap();
        let b = Action::additive("b", 1.0, wb).unwrap();
        let forward = choose(&ChoiceProblem::new(vec![a.clone(), b.clone()], alpha(x), cfg()).unwrap()).unwrap();
        let backward = choose(&ChoiceProblem::new(vec![b, a], alpha(x), cfg()).unwrap()).unwrap();
        prop_assert_eq!(forward.values["a"], backward.values["a"]);
        prop_assert_eq!(forward.values["b"], backward.values["b"]);
        let mut f = forward.ties.clone();
        let mut g = backward.ties.clone();
        f.sort();
        g.sort();
        prop_assert_eq!(f, g);
    }

    #[test]
    fn excess_routes_agree(a in action_strategy(), x in 0.01..0.99f64) {
        let via_value = expected_excess(&a, alpha(x), &cfg()).unwrap();
        let direct = expected_excess_direct(&a, alpha(x), 1e-10).unwrap();
        prop_assert!(via_value >= -1e-12);
        prop_assert!((via_value - direct).abs() < 1e-7, "{} vs {}", via_value, direct);
    }

    #[test]
    fn censored_belief_is_feasible_and_recovers_the_value(a in action_strategy(), x in 0.01..0.99f64) {
        let b = censor(&a, alpha(x)).unwrap();
        let t = b.threshold();
        prop_assert_eq!(censored_cdf(&b, t - 1e-9), 0.0);
        for z in [t + 0.1, t + 0.5, t + 2.0] {
            let g = censored_cdf(&b, z);
            prop_assert!((0.0..=1.0).contains(&g));
            prop_assert!((g + b.sf(z) - 1.0).abs() < 1e-12);
        }
        prop_assert!((b.max_likelihood_ratio() - 1.0 / (1.0 - x)).abs() < 1e-9 / (1.0 - x));
        prop_assert_eq!(distortion_cost(b.max_likelihood_ratio(), alpha(x)).unwrap(), DistortionCost::Zero);
        let mean = belief_mean(&b, 1e-10).unwrap();
        let v = superquantile(&a, alpha(x), &cfg()).unwrap().value;
        prop_assert!((mean - v).abs() < 1e-7, "{} vs {}", mean, v);
    }
}
