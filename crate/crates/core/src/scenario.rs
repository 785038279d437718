//! Scenario files and the commands that run them.
//!
//! A scenario is a flat list of `key = value` lines; `#` starts a comment.
//! Actions are declared one per line:
//!
//! ```text
//! command = choose
//! alpha = 0.8
//! action a=1:  dist=affine(triangular(lower=0, mode=0, upper=2), scale=1, shift=-1)
//! action safe: u=1, dist=degenerate(value=0)
//! ```
//!
//! With `u=` the action is additive (`u + shock`), otherwise `dist` is the
//! utility law itself. Recognised keys:
//!
//! | key | value |
//! |-----|-------|
//! | `command` | `choose`, `sweep`, `entry`, `belief` or `superquantile` |
//! | `alpha` | a level in `[0,1)` or `grid(start, stop, count)` |
//! | `method` | `auto`, `closed`, `average`, `rockafellar`, `conditional`, `mc` |
//! | `seed` | unsigned 64-bit Monte Carlo seed (default 0) |
//! | `samples` | Monte Carlo sample size (default 200000) |
//! | `tol` | engine tolerance (default 1e-10) |
//! | `paper_variant_pareto` | `true` to use the published Pareto factor |
//! | `output` | CSV path (default: standard output) |
//! | `k` | entry cost, for `entry` |
//! | `shock` | profit shock law, for `entry` |
//! | `z_grid` | `grid(start, stop, count)` of utilities, for `belief` |
//!
//! Unknown or repeated keys are errors that name the offending line.
//! Numbers in the CSV output carry 9 significant digits.

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::beliefs::{censor, censored_cdf};
use crate::choice::{choose, ChoiceProblem, ZERO_MEAN_TOLERANCE};
use crate::distributions::{parse_number, Distribution, ParetoFactor};
use crate::entry::{entry_decision, entry_threshold, EntryProblem, DEFAULT_THRESHOLD_TOL};
use crate::error::Error;
use crate::stochastic::{default_grid, linear_grid, luce_curve};
use crate::superquantile::{
    action_quantile, superquantile, Action, EngineConfig, Method, OptimismLevel, DEFAULT_MC_SAMPLES,
    DEFAULT_TOL,
};

/// Failure of a command-line run, mapped onto process exit codes.
#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Library(#[from] Error),

    #[error("usage: {0}")]
    Usage(String),

    #[error("cannot access '{path}': {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl RunError {
    /// 1 for bad input, 2 for numerical failure, 3 for filesystem errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Library(e) if e.is_numeric() => 2,
            RunError::Library(_) | RunError::Usage(_) => 1,
            RunError::Io { .. } => 3,
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        RunError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Choose,
    Sweep,
    Entry,
    Belief,
    Superquantile,
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim() {
            "choose" => Ok(Command::Choose),
            "sweep" => Ok(Command::Sweep),
            "entry" => Ok(Command::Entry),
            "belief" => Ok(Command::Belief),
            "superquantile" => Ok(Command::Superquantile),
            other => Err(Error::Parse(format!(
                "unknown command '{other}' (expected choose|sweep|entry|belief|superquantile)"
            ))),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Choose => "choose",
            Command::Sweep => "sweep",
            Command::Entry => "entry",
            Command::Belief => "belief",
            Command::Superquantile => "superquantile",
        })
    }
}

/// `grid(start, stop, count)`: `count` evenly spaced points, both ends included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        linear_grid(self.start, self.stop, self.count)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "grid({}, {}, {})", self.start, self.stop, self.count)
    }
}

fn parse_grid(text: &str) -> Result<GridSpec, String> {
    let inner = text
        .trim()
        .strip_prefix("grid(")
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| format!("expected grid(start, stop, count), got '{text}'"))?;
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    let [start, stop, count] = parts[..] else {
        return Err(format!("grid takes three arguments, got {}", parts.len()));
    };
    let start = parse_number(start).map_err(|e| e.to_string())?;
    let stop = parse_number(stop).map_err(|e| e.to_string())?;
    let count: usize = count
        .parse()
        .map_err(|_| format!("grid count '{count}' is not a positive integer"))?;
    if count == 0 {
        return Err("grid count must be positive".into());
    }
    if count > 1 && !(stop > start) {
        return Err(format!("grid needs start < stop, got {start} and {stop}"));
    }
    Ok(GridSpec { start, stop, count })
}

/// Optimism levels requested by a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaSpec {
    Single(f64),
    Grid(GridSpec),
}

impl AlphaSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            AlphaSpec::Single(a) => vec![*a],
            AlphaSpec::Grid(g) => g.points(),
        }
    }
}

/// One `action` line.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpec {
    pub label: String,
    pub u: Option<f64>,
    pub dist: Distribution,
}

impl ActionSpec {
    pub fn to_action(&self) -> Result<Action, Error> {
        match self.u {
            Some(u) => Action::additive(self.label.clone(), u, self.dist.clone()),
            None => Ok(Action::general(self.label.clone(), self.dist.clone())),
        }
    }
}

impl fmt::Display for ActionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "action {}: ", self.label)?;
        if let Some(u) = self.u {
            write!(f, "u={u}, ")?;
        }
        write!(f, "dist={}", self.dist)
    }
}

/// A parsed, validated scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub command: Option<Command>,
    pub actions: Vec<ActionSpec>,
    pub alpha: Option<AlphaSpec>,
    pub method: Method,
    pub seed: u64,
    pub samples: usize,
    pub tol: f64,
    pub paper_variant_pareto: bool,
    pub output: Option<PathBuf>,
    pub k: Option<f64>,
    pub shock: Option<Distribution>,
    pub z_grid: Option<GridSpec>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            command: None,
            actions: Vec::new(),
            alpha: None,
            method: Method::Auto,
            seed: 0,
            samples: DEFAULT_MC_SAMPLES,
            tol: DEFAULT_TOL,
            paper_variant_pareto: false,
            output: None,
            k: None,
            shock: None,
            z_grid: None,
        }
    }
}

impl Scenario {
    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            method: self.method,
            tol: self.tol,
            mc_samples: self.samples,
            seed: self.seed,
            pareto: ParetoFactor::from_paper_variant(self.paper_variant_pareto),
        }
    }

    pub fn build_actions(&self) -> Result<Vec<Action>, Error> {
        self.actions.iter().map(ActionSpec::to_action).collect()
    }
}

const KEYS: [&str; 11] = [
    "command",
    "alpha",
    "method",
    "seed",
    "samples",
    "tol",
    "paper_variant_pareto",
    "output",
    "k",
    "shock",
    "z_grid",
];

fn parse_action(body: &str) -> Result<ActionSpec, String> {
    let (label, rest) = body
        .split_once(':')
        .ok_or("action lines look like 'action <label>: u=<real>, dist=<law>'")?;
    let label = label.trim();
    if label.is_empty() {
        return Err("action label is empty".into());
    }
    let mut rest = rest.trim();
    let mut u = None;
    if let Some(after) = rest.strip_prefix('u') {
        let after = after.trim_start();
        if let Some(after) = after.strip_prefix('=') {
            let (value, tail) = after
                .split_once(',')
                .ok_or(format!("action '{label}': expected ', dist=' after u"))?;
            u = Some(parse_number(value).map_err(|e| format!("action '{label}': u: {e}"))?);
            rest = tail.trim();
        }
    }
    let dist = rest
        .strip_prefix("dist")
        .map(str::trim_start)
        .and_then(|r| r.strip_prefix('='))
        .ok_or(format!("action '{label}': expected dist=<law>"))?;
    let dist = dist
        .trim()
        .parse::<Distribution>()
        .map_err(|e| format!("action '{label}': {e}"))?;
    Ok(ActionSpec {
        label: label.to_string(),
        u,
        dist,
    })
}

fn parse_bool(text: &str) -> Result<bool, String> {
    match text {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("expected true or false, got '{other}'")),
    }
}

fn apply(s: &mut Scenario, key: &str, value: &str) -> Result<(), String> {
    let err = |e: Error| e.to_string();
    match key {
        "command" => s.command = Some(value.parse().map_err(err)?),
        "alpha" => {
            s.alpha = Some(if value.starts_with("grid") {
                let g = parse_grid(value)?;
                for a in [g.start, g.stop] {
                    OptimismLevel::new(a).map_err(err)?;
                }
                AlphaSpec::Grid(g)
            } else {
                let a = parse_number(value).map_err(err)?;
                OptimismLevel::new(a).map_err(err)?;
                AlphaSpec::Single(a)
            })
        }
        "method" => s.method = value.parse().map_err(err)?,
        "seed" => s.seed = value.parse().map_err(|_| format!("'{value}' is not an unsigned 64-bit integer"))?,
        "samples" => {
            s.samples = value
                .parse()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| format!("'{value}' is not a positive integer"))?
        }
        "tol" => {
            let t = parse_number(value).map_err(err)?;
            if !(t > 0.0) {
                return Err(format!("tolerance must be positive, got {t}"));
            }
            s.tol = t;
        }
        "paper_variant_pareto" => s.paper_variant_pareto = parse_bool(value)?,
        "output" => s.output = Some(PathBuf::from(value)),
        "k" => {
            let k = parse_number(value).map_err(err)?;
            if !(k > 0.0) {
                return Err(format!("entry cost k must be positive, got {k}"));
            }
            s.k = Some(k);
        }
        "shock" => s.shock = Some(value.parse().map_err(err)?),
        "z_grid" => s.z_grid = Some(parse_grid(value)?),
        _ => unreachable!("keys are checked against KEYS"),
    }
    Ok(())
}

/// Parses scenario text; errors name the line and the key.
pub fn parse_scenario(text: &str) -> Result<Scenario, Error> {
    let mut s = Scenario::default();
    let mut seen: Vec<&str> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(body) = line.strip_prefix("action").filter(|b| b.starts_with(char::is_whitespace)) {
            let spec = parse_action(body).map_err(|m| Error::Parse(format!("line {n}: {m}")))?;
            if s.actions.iter().any(|a| a.label == spec.label) {
                return Err(Error::Parse(format!(
                    "line {n}: duplicate action label '{}'",
                    spec.label
                )));
            }
            s.actions.push(spec);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {n}: expected 'key = value', got '{line}'")))?;
        let (key, value) = (key.trim(), value.trim());
        let Some(&key) = KEYS.iter().find(|k| **k == key) else {
            return Err(Error::Parse(format!("line {n}: unknown key '{key}'")));
        };
        if seen.contains(&key) {
            return Err(Error::Parse(format!("line {n}: key '{key}' given twice")));
        }
        seen.push(key);
        apply(&mut s, key, value).map_err(|m| Error::Parse(format!("line {n}: key '{key}': {m}")))?;
    }
    Ok(s)
}

/// Reads and parses a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    Ok(parse_scenario(&text)?)
}

/// Command-line overrides applied on top of a scenario.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub command: Option<Command>,
    /// Replace the `alpha` (or `z`) grid by this many points.
    pub grid: Option<usize>,
    pub method: Option<Method>,
    pub paper_variant_pareto: bool,
}

/// CSV text produced by a run, plus non-fatal diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub csv: String,
    pub warnings: Vec<String>,
}

/// Formats with 9 significant digits, `%g`-style, independent of locale.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let digits = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.digits$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new() -> Self {
        Table {
            writer: csv::WriterBuilder::new()
                .flexible(true)
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new()),
        }
    }

    fn row<I, S>(&mut self, fields: I) -> Result<(), RunError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer
            .write_record(fields)
            .map_err(|e| RunError::Library(Error::Parse(e.to_string())))
    }

    fn finish(self) -> String {
        let bytes = self.writer.into_inner().expect("in-memory writer cannot fail");
        String::from_utf8(bytes).expect("records are UTF-8")
    }
}

fn alpha_of(x: f64) -> Result<OptimismLevel, RunError> {
    Ok(OptimismLevel::new(x)?)
}

/// `N` interior points `i / (N + 1)`; `N = 99` gives `{0.01, ..., 0.99}`.
fn interior_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}

fn sweep_grid(s: &Scenario, opts: &RunOptions) -> Vec<f64> {
    match (opts.grid, s.alpha) {
        (Some(n), _) => interior_grid(n),
        (None, Some(spec)) => spec.values(),
        (None, None) => default_grid(),
    }
}

fn single_alpha(s: &Scenario, command: Command) -> Result<OptimismLevel, RunError> {
    match s.alpha {
        Some(AlphaSpec::Single(a)) => alpha_of(a),
        Some(AlphaSpec::Grid(_)) => Err(RunError::Usage(format!(
            "'{command}' needs a single alpha, not a grid"
        ))),
        None => Err(RunError::Usage(format!("'{command}' needs 'alpha = <level>'"))),
    }
}

fn additive_warnings(s: &Scenario) -> Vec<String> {
    s.actions
        .iter()
        .filter(|a| a.u.is_some() && a.dist.mean().abs() > ZERO_MEAN_TOLERANCE)
        .map(|a| format!("shock of '{}' has mean {} (expected 0)", a.label, a.dist.mean()))
        .collect()
}

fn quantile_or_floor(a: &Action, alpha: OptimismLevel) -> Result<f64, Error> {
    if alpha.is_zero() {
        let (law, shift) = a.parts();
        return Ok(law.support().0 + shift);
    }
    action_quantile(a, alpha)
}

fn run_choose(s: &Scenario, cfg: EngineConfig) -> Result<RunOutput, RunError> {
    let alpha = single_alpha(s, Command::Choose)?;
    let actions = s.build_actions()?;
    let result = choose(&ChoiceProblem::new(actions.clone(), alpha, cfg)?)?;
    let mut t = Table::new();
    t.row(["label", "quantile", "superquantile", "winner"])?;
    for a in &actions {
        let q = quantile_or_floor(a, alpha).map_err(|e| e.for_action(a.label()))?;
        let winner = if a.label() == result.winner { "1" } else { "0" };
        t.row([
            a.label().to_string(),
            format_number(q),
            format_number(result.values[a.label()]),
            winner.to_string(),
        ])?;
    }
    Ok(RunOutput {
        csv: t.finish(),
        warnings: additive_warnings(s),
    })
}

fn run_sweep(s: &Scenario, opts: &RunOptions, cfg: EngineConfig) -> Result<RunOutput, RunError> {
    let grid = sweep_grid(s, opts);
    let curve = luce_curve(&s.build_actions()?, &grid, &cfg)?;
    let mut t = Table::new();
    t.row(["alpha", "label", "V_alpha", "prob"])?;
    for (i, a) in curve.alphas.iter().enumerate() {
        for (label, values) in &curve.values {
            t.row([
                format_number(*a),
                label.clone(),
                format_number(values[i]),
                format_number(curve.probs[label][i]),
            ])?;
        }
    }
    Ok(RunOutput {
        csv: t.finish(),
        warnings: additive_warnings(s),
    })
}

fn run_entry(s: &Scenario, opts: &RunOptions, cfg: EngineConfig) -> Result<RunOutput, RunError> {
    let shock = s
        .shock
        .clone()
        .ok_or_else(|| RunError::Usage("'entry' needs 'shock = <law>'".into()))?;
    let k = s
        .k
        .ok_or_else(|| RunError::Usage("'entry' needs 'k = <cost>'".into()))?;
    let problem = EntryProblem::new(shock, k)?;
    let alpha_hat = entry_threshold(&problem, DEFAULT_THRESHOLD_TOL, &cfg)?;
    let mut t = Table::new();
    t.row(["alpha_hat".to_string(), format_number(alpha_hat)])?;
    t.row(["alpha", "superquantile", "gap", "decision"])?;
    for x in sweep_grid(s, opts) {
        let o = entry_decision(&problem, alpha_of(x)?, &cfg)?;
        t.row([
            format_number(x),
            format_number(o.value),
            format_number(o.gap),
            o.decision.as_str().to_string(),
        ])?;
    }
    Ok(RunOutput {
        csv: t.finish(),
        warnings: problem.mean_warning().into_iter().collect(),
    })
}

fn run_belief(s: &Scenario, opts: &RunOptions) -> Result<RunOutput, RunError> {
    let alpha = single_alpha(s, Command::Belief)?;
    let [spec] = &s.actions[..] else {
        return Err(RunError::Usage(format!(
            "'belief' needs exactly one action, got {}",
            s.actions.len()
        )));
    };
    let action = spec.to_action()?;
    let belief = censor(&action, alpha).map_err(|e| e.for_action(&spec.label))?;
    let law = belief.prior();
    let mut grid = s.z_grid.unwrap_or_else(|| GridSpec {
        start: law.quantile_at(0.001),
        stop: law.quantile_at(0.999),
        count: 101,
    });
    if grid.stop <= grid.start {
        grid.count = 1;
    }
    if let Some(n) = opts.grid {
        grid.count = n.max(1);
    }
    let mut t = Table::new();
    t.row(["z", "G"])?;
    for z in grid.points() {
        t.row([format_number(z), format_number(censored_cdf(&belief, z))])?;
    }
    Ok(RunOutput {
        csv: t.finish(),
        warnings: Vec::new(),
    })
}

fn run_superquantile(s: &Scenario, opts: &RunOptions, cfg: EngineConfig) -> Result<RunOutput, RunError> {
    let alphas = match (opts.grid, s.alpha) {
        (None, Some(spec)) => spec.values(),
        _ => sweep_grid(s, opts),
    };
    let actions = s.build_actions()?;
    if actions.is_empty() {
        return Err(RunError::Usage("'superquantile' needs at least one action".into()));
    }
    let mut t = Table::new();
    t.row(["label", "alpha", "engine", "quantile", "superquantile", "error_bound"])?;
    for a in &actions {
        for &x in &alphas {
            let alpha = alpha_of(x)?;
            let r = superquantile(a, alpha, &cfg).map_err(|e| e.for_action(a.label()))?;
            let q = quantile_or_floor(a, alpha).map_err(|e| e.for_action(a.label()))?;
            t.row([
                a.label().to_string(),
                format_number(x),
                r.engine.to_string(),
                format_number(q),
                format_number(r.value),
                format_number(r.error_bound),
            ])?;
        }
    }
    Ok(RunOutput {
        csv: t.finish(),
        warnings: additive_warnings(s),
    })
}

/// Runs a scenario and returns its CSV text.
pub fn run(s: &Scenario, opts: &RunOptions) -> Result<RunOutput, RunError> {
    let command = match (opts.command, s.command) {
        (Some(c), Some(d)) if c != d => {
            return Err(RunError::Usage(format!(
                "command '{c}' does not match the scenario's 'command = {d}'"
            )))
        }
        (Some(c), _) | (None, Some(c)) => c,
        (None, None) => return Err(RunError::Usage("no command given".into())),
    };
    if opts.grid == Some(0) {
        return Err(RunError::Usage("--grid must be positive".into()));
    }
    let mut cfg = s.engine_config();
    if let Some(m) = opts.method {
        cfg.method = m;
    }
    if opts.paper_variant_pareto {
        cfg.pareto = ParetoFactor::Printed;
    }
    match command {
        Command::Choose => run_choose(s, cfg),
        Command::Sweep => run_sweep(s, opts, cfg),
        Command::Entry => run_entry(s, opts, cfg),
        Command::Belief => run_belief(s, opts),
        Command::Superquantile => run_superquantile(s, opts, cfg),
    }
}

/// Runs a scenario and writes the CSV to `out` (or the scenario's `output`,
/// or standard output when neither is set). Returns the warnings.
pub fn execute(s: &Scenario, opts: &RunOptions, out: Option<&Path>) -> Result<Vec<String>, RunError> {
    let output = run(s, opts)?;
    match out.or(s.output.as_deref()) {
        Some(path) => std::fs::write(path, &output.csv).map_err(|e| RunError::io(path, e))?,
        None => {
            use io::Write;
            io::stdout()
                .write_all(output.csv.as_bytes())
                .map_err(|e| RunError::io(Path::new("<stdout>"), e))?;
        }
    }
    Ok(output.warnings)
}
