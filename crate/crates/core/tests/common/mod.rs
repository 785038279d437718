#![allow(dead_code)]

use optimist::superquantile::{Action, OptimismLevel};
use optimist::Distribution;

pub const MATRIX_ALPHAS: [f64; 4] = [0.1, 0.5, 0.8, 0.95];

pub fn alpha(x: f64) -> OptimismLevel {
    OptimismLevel::new(x).unwrap()
}

/// The engine test matrix.
pub fn matrix_laws() -> Vec<(&'static str, Distribution)> {
    vec![
        ("normal", Distribution::normal(0.0, 1.0).unwrap()),
        ("logistic", Distribution::logistic(0.0, 1.0).unwrap()),
        ("student_t5", Distribution::student_t(5.0, 1.0, 0.0).unwrap()),
        ("pareto2", Distribution::pareto(1.0, 2.0).unwrap()),
        ("gpd+0.3", Distribution::gpd(0.3, 1.0).unwrap()),
        ("gpd-0.3", Distribution::gpd(-0.3, 1.0).unwrap()),
        ("triangular", Distribution::triangular(0.0, 0.0, 2.0).unwrap()),
    ]
}

pub fn matrix_actions() -> Vec<Action> {
    matrix_laws()
        .into_iter()
        .map(|(name, law)| Action::general(name, law))
        .collect()
}

/// Example menu: state `w ~ Triangular(0, 0, 2)`, utility `(w - 2/3) a - 1/3`.
pub fn example_action(a: f64) -> Action {
    let prior = Distribution::triangular(0.0, 0.0, 2.0).unwrap();
    let law = Distribution::affine(prior, a, -(2.0 * a + 1.0) / 3.0).unwrap();
    Action::general(format!("a={a}"), law)
}

pub fn example_menu() -> Vec<Action> {
    vec![example_action(1.0), example_action(-1.0)]
}

/// Figure setup: normal shock with `u = 0` against a sure `u = 1`.
pub fn figure_menu() -> Vec<Action> {
    vec![
        Action::additive("a1", 0.0, Distribution::normal(0.0, 1.0).unwrap()).unwrap(),
        Action::additive("a2", 1.0, Distribution::degenerate(0.0).unwrap()).unwrap(),
    ]
}

pub fn bundled_scenarios() -> Vec<std::path::PathBuf> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "scn"))
        .collect();
    files.sort();
    files
}

/// The `command = ...` value of a scenario file.
pub fn scenario_command(path: &std::path::Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .find_map(|l| l.trim().strip_prefix("command").map(|r| r.trim_start_matches([' ', '=']).trim().to_string()))
        .expect("bundled scenarios name their command")
}
