mod common;

use common::*;
use optimist::superquantile::{
    action_quantile, superquantile, superquantile_dalpha, Action, EngineConfig, Method, DEFAULT_STEP,
};
use optimist::Distribution;
use proptest::prelude::*;
use rayon::prelude::*;

const NUMERIC: [Method; 3] = [Method::Average, Method::Rockafellar, Method::Conditional];

fn value(a: &Action, x: f64, method: Method) -> f64 {
    superquantile(a, alpha(x), &EngineConfig::with_method(method)).unwrap().value
}

#[test]
fn engines_agree_beyond_the_matrix() {
    let laws = vec![
        Distribution::gev(0.5, 2.0, 0.25).unwrap(),
        Distribution::gev(0.0, 1.0, -0.4).unwrap(),
        Distribution::student_t(2.5, 0.5, 1.0).unwrap(),
        Distribution::affine(Distribution::logistic(1.0, 0.5).unwrap(), -2.0, 0.3).unwrap(),
        Distribution::affine(Distribution::triangular(-1.0, 0.5, 3.0).unwrap(), -1.5, 0.0).unwrap(),
        Distribution::affine(Distribution::gpd(0.2, 1.0).unwrap(), 3.0, -1.0).unwrap(),
    ];
    for law in laws {
        let a = Action::general(law.to_string(), law.clone());
        for x in [0.05, 0.3, 0.7, 0.99] {
            let vals: Vec<f64> = NUMERIC.iter().map(|m| value(&a, x, *m)).collect();
            if let Some(cf) = law.closed_form_superquantile(x) {
                assert!((cf - vals[0]).abs() < 1e-6, "{law} at {x}: closed {cf} vs {vals:?}");
            }
            let spread = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - vals.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(spread < 1e-6, "{law} at {x}: {vals:?}");
        }
    }
}

#[test]
fn empirical_engines_agree_exactly() {
    let law = Distribution::empirical(vec![3.0, -1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0]).unwrap();
    let a = Action::general("e", law);
    for x in [0.0, 0.1, 0.25, 0.5, 0.6, 0.875, 0.9] {
        let avg = value(&a, x, Method::Average);
        let rk = value(&a, x, Method::Rockafellar);
        assert!((avg - rk).abs() < 1e-12, "{x}: {avg} vs {rk}");
    }
    // the sample estimator keeps whole atoms, so it matches only where alpha * n is an integer
    for x in [0.0, 0.25, 0.5, 0.875] {
        let avg = value(&a, x, Method::Average);
        let mc = value(&a, x, Method::MonteCarlo);
        assert!((avg - mc).abs() < 1e-12, "{x}: {avg} vs {mc}");
    }
    // at alpha = 0.1 the lowest atom keeps weight 0.025 of the 0.9 tail
    assert!((value(&a, 0.1, Method::Average) - 3.725 / 0.9).abs() < 1e-12);
    // top quarter of eight points is {6, 9}
    assert_eq!(value(&a, 0.75, Method::Auto), 7.5);
}

#[test]
fn increments_follow_the_alpha_derivative() {
    let cfg = EngineConfig::default();
    for a in matrix_actions() {
        let h = 1e-3;
        for x in [0.2, 0.5, 0.8] {
            let d0 = superquantile_dalpha(&a, alpha(x), DEFAULT_STEP, &cfg).unwrap().analytic;
            let d1 = superquantile_dalpha(&a, alpha(x + h), DEFAULT_STEP, &cfg).unwrap().analytic;
            let step = value(&a, x + h, Method::Auto) - value(&a, x, Method::Auto);
            let trapezoid = 0.5 * h * (d0 + d1);
            assert!(step >= 0.0, "{} at {x}: {step}", a.label());
            // trapezoid error is O(h^3), far below this relative slack
            assert!((step - trapezoid).abs() < 1e-5 * step, "{} at {x}: {step} vs {trapezoid}", a.label());
        }
    }
}

#[test]
fn parallel_sweep_is_deterministic() {
    let grid = default_grid_values();
    let actions = matrix_actions();
    let cfg = EngineConfig::with_method(Method::Average);
    let sweep = || -> Vec<Vec<f64>> {
        grid.par_iter()
            .map(|x| actions.iter().map(|a| superquantile(a, alpha(*x), &cfg).unwrap().value).collect())
            .collect()
    };
    let serial: Vec<Vec<f64>> = grid
        .iter()
        .map(|x| actions.iter().map(|a| superquantile(a, alpha(*x), &cfg).unwrap().value).collect())
        .collect();
    assert_eq!(sweep(), serial);
    assert_eq!(sweep(), sweep());
}

fn default_grid_values() -> Vec<f64> {
    (1..=99).map(|i| f64::from(i) / 100.0).collect()
}

#[test]
fn monte_carlo_is_reproducible_from_the_seed() {
    let a = Action::general("t", Distribution::student_t(4.0, 1.0, 0.0).unwrap());
    let cfg = EngineConfig { method: Method::MonteCarlo, mc_samples: 50_000, seed: 99, ..EngineConfig::default() };
    let first = superquantile(&a, alpha(0.9), &cfg).unwrap();
    assert_eq!(first, superquantile(&a, alpha(0.9), &cfg).unwrap());
    let other = EngineConfig { seed: 100, ..cfg };
    assert_ne!(first.value, superquantile(&a, alpha(0.9), &other).unwrap().value);
}

fn law_strategy() -> impl Strategy<Value = Distribution> {
    prop_oneof![
        (-3.0..3.0f64, 0.1..3.0f64).prop_map(|(m, s)| Distribution::normal(m, s).unwrap()),
        (-3.0..3.0f64, 0.1..2.0f64).prop_map(|(m, s)| Distribution::logistic(m, s).unwrap()),
        (2.5..30.0f64, 0.2..2.0f64).prop_map(|(df, s)| Distribution::student_t(df, s, 0.0).unwrap()),
        (0.5..3.0f64, 1.5..6.0f64).prop_map(|(w, b)| Distribution::pareto(w, b).unwrap()),
        (-0.6..0.6f64, 0.3..2.0f64)
            .prop_filter("shape away from 0", |(xi, _)| xi.abs() > 0.02)
            .prop_map(|(xi, b)| Distribution::gpd(xi, b).unwrap()),
        (-2.0..0.0f64, 0.0..1.0f64, 0.5..3.0f64)
            .prop_map(|(lo, t, w)| Distribution::triangular(lo, lo + t * w, lo + w).unwrap()),
    ]
}

/// Exact `Qbar_alpha` of Triangular(a, c, b) from polynomial antiderivatives of `x f(x)`.
fn triangular_oracle(a: f64, c: f64, b: f64, alpha: f64) -> f64 {
    let k1 = 2.0 / ((b - a) * (c - a));
    let k2 = 2.0 / ((b - a) * (b - c));
    let left = |x: f64| k1 * (x.powi(3) / 3.0 - a * x * x / 2.0);
    let right = |x: f64| k2 * (b * x * x / 2.0 - x.powi(3) / 3.0);
    let fc = (c - a) / (b - a);
    let (q, mass) = if alpha < fc {
        let q = a + (alpha * (b - a) * (c - a)).sqrt();
        (q, left(c) - left(q) + right(b) - right(c))
    } else {
        let q = b - ((1.0 - alpha) * (b - a) * (b - c)).sqrt();
        (q, right(b) - right(q))
    };
    assert!(q.is_finite());
    mass / (1.0 - alpha)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 512, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn triangular_engines_match_exact_values(
        a in -2.0..2.0f64,
        width in 0.1..3.0f64,
        // modes packed near either end put the kink close to a panel edge
        t in prop_oneof![0.001..0.05f64, 0.05..0.95f64, 0.95..0.999f64],
        x in 0.01..0.99f64,
    ) {
        let (c, b) = (a + t * width, a + width);
        let want = triangular_oracle(a, c, b, x);
        let law = Distribution::triangular(a, c, b).unwrap();
        for shift in [0.0, -1.3] {
            let act = Action::general("x", Distribution::affine(law.clone(), 1.0, shift).unwrap());
            for m in [Method::Auto, Method::Average, Method::Rockafellar, Method::Conditional] {
                let v = value(&act, x, m) - shift;
                prop_assert!((v - want).abs() < 1e-9 * (1.0 + want.abs()), "{} shift {}: {} vs {}", m, shift, v, want);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn value_is_nondecreasing_in_alpha(law in law_strategy(), x in 0.0..0.98f64, dx in 0.0..0.02f64) {
        let a = Action::general("x", law);
        for m in NUMERIC {
            prop_assert!(value(&a, x, m) <= value(&a, x + dx, m) + 1e-9);
        }
    }

    #[test]
    fn value_dominates_quantile(law in law_strategy(), x in 0.01..0.99f64) {
        let a = Action::general("x", law);
        let q = action_quantile(&a, alpha(x)).unwrap();
        for m in [Method::Auto, Method::Average, Method::Rockafellar, Method::Conditional] {
            let r = superquantile(&a, alpha(x), &EngineConfig::with_method(m)).unwrap();
            prop_assert!(r.value >= r.multiplier - 1e-9 && r.value >= q - 1e-9);
        }
    }

    #[test]
    fn additive_form_is_a_translation(law in law_strategy(), u in -5.0..5.0f64, x in 0.0..0.99f64) {
        let add = Action::additive("x", u, law.clone()).unwrap();
        let base = Action::general("x", law.clone());
        let general = Action::general("x", Distribution::affine(law, 1.0, u).unwrap());
        for m in [Method::Auto, Method::Average, Method::Rockafellar, Method::Conditional] {
            let v = value(&add, x, m);
            prop_assert!((v - (u + value(&base, x, m))).abs() < 1e-9);
            prop_assert!((v - value(&general, x, m)).abs() < 1e-9);
        }
    }

    #[test]
    fn numeric_engines_agree(law in law_strategy(), x in 0.0..0.99f64) {
        let a = Action::general("x", law.clone());
        let vals: Vec<f64> = NUMERIC.iter().map(|m| value(&a, x, *m)).collect();
        if let Some(cf) = law.closed_form_superquantile(x) {
            prop_assert!((cf - vals[0]).abs() < 1e-6, "closed {} vs {:?}", cf, vals);
        }
        prop_assert!((vals[0] - vals[1]).abs() < 1e-6 && (vals[0] - vals[2]).abs() < 1e-6, "{:?}", vals);
    }
}
