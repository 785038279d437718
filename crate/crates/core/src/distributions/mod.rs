//! Outcome distributions: evaluation, inversion, sampling and per-family
//! closed-form superquantiles.
//!
//! Every law is validated when it is built; afterwards all operations are
//! pure functions of immutable data. Quantiles are available from both ends
//! (`quantile(p)` and `upper_quantile(q) = Q_{1-q}`) so that tail integrals
//! keep full precision when `1 - p` is tiny.

mod parse;

pub(crate) use parse::parse_number;
pub use parse::read_values;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::roots;
use crate::special;

/// Which factor to use for the Pareto superquantile.
///
/// `Corrected` is `Q_alpha * beta / (beta - 1)`, the value of the
/// quantile-averaging integral. `Printed` reproduces the published
/// `(1 - 1/beta) * Q_alpha` criterion for replication audits; it is smaller
/// than the quantile itself and is not a superquantile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParetoFactor {
    #[default]
    Corrected,
    Printed,
}

impl ParetoFactor {
    pub fn from_paper_variant(flag: bool) -> Self {
        if flag {
            ParetoFactor::Printed
        } else {
            ParetoFactor::Corrected
        }
    }

    /// Multiplier applied to `Q_alpha` for shape `beta`.
    pub fn factor(self, beta: f64) -> f64 {
        match self {
            ParetoFactor::Corrected => beta / (beta - 1.0),
            ParetoFactor::Printed => 1.0 - 1.0 / beta,
        }
    }
}

fn finite(family: &'static str, name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(family, format!("{name} must be finite")))
    }
}

fn positive(family: &'static str, name: &str, v: f64) -> Result<()> {
    finite(family, name, v)?;
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(family, format!("{name} must be positive")))
    }
}

/// Normal law with mean `mean` and standard deviation `sd`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normal {
    mean: f64,
    sd: f64,
}

impl Normal {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        finite("normal", "mean", mean)?;
        positive("normal", "sd", sd)?;
        Ok(Normal { mean, sd })
    }
    pub fn mean(&self) -> f64 {
        self.mean
    }
    pub fn sd(&self) -> f64 {
        self.sd
    }
}

/// Logistic law with location `loc` and scale `scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Logistic {
    loc: f64,
    scale: f64,
}

impl Logistic {
    pub fn new(loc: f64, scale: f64) -> Result<Self> {
        finite("logistic", "loc", loc)?;
        positive("logistic", "scale", scale)?;
        Ok(Logistic { loc, scale })
    }
    pub fn loc(&self) -> f64 {
        self.loc
    }
    pub fn scale(&self) -> f64 {
        self.scale
    }
}

/// Location-scale Student-t law; `df > 1` keeps the mean finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudentT {
    df: f64,
    scale: f64,
    loc: f64,
}

impl StudentT {
    pub fn new(df: f64, scale: f64, loc: f64) -> Result<Self> {
        finite("student_t", "df", df)?;
        if df <= 1.0 {
            return Err(Error::invalid("student_t", "df must exceed 1"));
        }
        positive("student_t", "scale", scale)?;
        finite("student_t", "loc", loc)?;
        Ok(StudentT { df, scale, loc })
    }
    pub fn df(&self) -> f64 {
        self.df
    }
    pub fn scale(&self) -> f64 {
        self.scale
    }
    pub fn loc(&self) -> f64 {
        self.loc
    }

    fn std_pdf(&self, t: f64) -> f64 {
        let nu = self.df;
        (special::ln_gamma(0.5 * (nu + 1.0))
            - special::ln_gamma(0.5 * nu)
            - 0.5 * (nu * std::f64::consts::PI).ln()
            - 0.5 * (nu + 1.0) * ln_1p_square(t / nu.sqrt()))
        .exp()
    }

    /// Upper tail `P(T > t)` of the standardized law for `t >= 0`.
    fn std_upper_tail(&self, t: f64) -> f64 {
        let nu = self.df;
        let s = t / nu.sqrt();
        if s > LARGE_T {
            // I_x(nu/2, 1/2) ~ x^(nu/2) / ((nu/2) B(nu/2, 1/2)) with x = 1/(1+s^2);
            // the relative error is O(x), and the logs avoid overflowing s^2.
            let (a, b) = (0.5 * nu, 0.5);
            let ln_beta = special::ln_gamma(a) + special::ln_gamma(b) - special::ln_gamma(a + b);
            return 0.5 * (-nu * s.ln() - a.ln() - ln_beta).exp();
        }
        let s2 = s * s;
        0.5 * special::inc_beta(0.5 * nu, 0.5, 1.0 / (1.0 + s2), s2 / (1.0 + s2))
    }

    fn std_cdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            self.std_upper_tail(-t)
        } else {
            1.0 - self.std_upper_tail(t)
        }
    }

    fn std_sf(&self, t: f64) -> f64 {
        if t < 0.0 {
            1.0 - self.std_upper_tail(-t)
        } else {
            self.std_upper_tail(t)
        }
    }

    /// The `t >= 0` with `P(T > t) = q`, for `q` in `(0, 1/2]`.
    fn std_upper_inverse(&self, q: f64) -> f64 {
        if q >= 0.5 {
            return 0.0;
        }
        let mut hi = 1.0;
        while self.std_upper_tail(hi) > q && hi < f64::MAX / 4.0 {
            hi *= 2.0;
        }
        roots::newton_bisect(
            |t| q - self.std_upper_tail(t),
            |t| self.std_pdf(t),
            0.0,
            hi,
            1e-15,
        )
    }

    fn std_quantile(&self, p: f64) -> f64 {
        if p < 0.5 {
            -self.std_upper_inverse(p)
        } else {
            self.std_upper_inverse(1.0 - p)
        }
    }
}

/// Beyond this standardized `t` the Student-t tail uses its power-law limit.
const LARGE_T: f64 = 1e100;

/// `ln(1 + s^2)` without overflowing `s^2`.
fn ln_1p_square(s: f64) -> f64 {
    let s = s.abs();
    if s > LARGE_T {
        2.0 * s.ln()
    } else {
        (s * s).ln_1p()
    }
}

/// Pareto (type I) law with minimum `scale` and tail index `shape > 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pareto {
    scale: f64,
    shape: f64,
}

impl Pareto {
    pub fn new(scale: f64, shape: f64) -> Result<Self> {
        positive("pareto", "scale", scale)?;
        finite("pareto", "shape", shape)?;
        if shape <= 1.0 {
            return Err(Error::invalid("pareto", "shape must exceed 1"));
        }
        Ok(Pareto { scale, shape })
    }
    pub fn scale(&self) -> f64 {
        self.scale
    }
    pub fn shape(&self) -> f64 {
        self.shape
    }
}

/// Generalized Pareto law on `[0, ...)` with shape `xi` in `(-inf,0) U (0,1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gpd {
    shape: f64,
    scale: f64,
}

impl Gpd {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        finite("gpd", "shape", shape)?;
        if shape == 0.0 || shape >= 1.0 {
            return Err(Error::invalid(
                "gpd",
                "shape must lie in (-inf, 0) or (0, 1)",
            ));
        }
        positive("gpd", "scale", scale)?;
        Ok(Gpd { shape, scale })
    }
    pub fn shape(&self) -> f64 {
        self.shape
    }
    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn upper_quantile(&self, q: f64) -> f64 {
        (self.scale / self.shape) * (-self.shape * q.ln()).exp_m1()
    }
}

/// Generalized extreme value law; `shape < 1`, `shape == 0` is Gumbel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gev {
    loc: f64,
    scale: f64,
    shape: f64,
}

impl Gev {
    pub fn new(loc: f64, scale: f64, shape: f64) -> Result<Self> {
        finite("gev", "loc", loc)?;
        positive("gev", "scale", scale)?;
        finite("gev", "shape", shape)?;
        if shape >= 1.0 {
            return Err(Error::invalid("gev", "shape must be below 1"));
        }
        Ok(Gev { loc, scale, shape })
    }
    pub fn loc(&self) -> f64 {
        self.loc
    }
    pub fn scale(&self) -> f64 {
        self.scale
    }
    pub fn shape(&self) -> f64 {
        self.shape
    }

    /// `t(x)` with `F(x) = exp(-t(x))`; `None` outside the support.
    fn t(&self, x: f64) -> Option<f64> {
        let z = (x - self.loc) / self.scale;
        if self.shape == 0.0 {
            Some((-z).exp())
        } else {
            let base = 1.0 + self.shape * z;
            if base <= 0.0 {
                None
            } else {
                Some((-(base.ln()) / self.shape).exp())
            }
        }
    }

    /// Quantile expressed through `y = -ln F`, i.e. `Q = mu + s((y)^{-xi} - 1)/xi`.
    fn quantile_from_log(&self, y: f64) -> f64 {
        if self.shape == 0.0 {
            self.loc - self.scale * y.ln()
        } else {
            self.loc + (self.scale / self.shape) * (-self.shape * y.ln()).exp_m1()
        }
    }
}

/// Triangular law on `[lower, upper]` with peak at `mode`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangular {
    lower: f64,
    mode: f64,
    upper: f64,
}

impl Triangular {
    pub fn new(lower: f64, mode: f64, upper: f64) -> Result<Self> {
        finite("triangular", "lower", lower)?;
        finite("triangular", "mode", mode)?;
        finite("triangular", "upper", upper)?;
        if !(lower <= mode && mode <= upper && lower < upper) {
            return Err(Error::invalid(
                "triangular",
                "requires lower <= mode <= upper and lower < upper",
            ));
        }
        Ok(Triangular { lower, mode, upper })
    }
    pub fn lower(&self) -> f64 {
        self.lower
    }
    pub fn mode(&self) -> f64 {
        self.mode
    }
    pub fn upper(&self) -> f64 {
        self.upper
    }

    fn cdf(&self, x: f64) -> f64 {
        let (a, c, b) = (self.lower, self.mode, self.upper);
        if x <= a {
            0.0
        } else if x >= b {
            1.0
        } else if x <= c {
            (x - a) * (x - a) / ((b - a) * (c - a))
        } else {
            1.0 - (b - x) * (b - x) / ((b - a) * (b - c))
        }
    }

    fn sf(&self, x: f64) -> f64 {
        let (a, c, b) = (self.lower, self.mode, self.upper);
        if x <= a {
            1.0
        } else if x >= b {
            0.0
        } else if x <= c {
            1.0 - (x - a) * (x - a) / ((b - a) * (c - a))
        } else {
            (b - x) * (b - x) / ((b - a) * (b - c))
        }
    }

    fn pdf(&self, x: f64) -> f64 {
        let (a, c, b) = (self.lower, self.mode, self.upper);
        if x < a || x > b {
            0.0
        } else if x < c {
            2.0 * (x - a) / ((b - a) * (c - a))
        } else if x == c {
            2.0 / (b - a)
        } else {
            2.0 * (b - x) / ((b - a) * (b - c))
        }
    }

    /// Quantile given both `p` and `q = 1 - p`, so either tail stays exact.
    fn quantile_pq(&self, p: f64, q: f64) -> f64 {
        let (a, c, b) = (self.lower, self.mode, self.upper);
        let split = (c - a) / (b - a);
        if p <= split {
            a + (p * (b - a) * (c - a)).sqrt()
        } else {
            b - (q * (b - a) * (b - c)).sqrt()
        }
    }
}

/// Point mass at `value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Degenerate {
    value: f64,
}

impl Degenerate {
    pub fn new(value: f64) -> Result<Self> {
        finite("degenerate", "value", value)?;
        Ok(Degenerate { value })
    }
    pub fn value(&self) -> f64 {
        self.value
    }
}

/// Empirical law of a finite sample (stored sorted).
#[derive(Debug, Clone, PartialEq)]
pub struct Empirical {
    sorted: Vec<f64>,
}

impl Empirical {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("empirical", "needs at least one value"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("empirical", "values must be finite"));
        }
        values.sort_by(f64::total_cmp);
        Ok(Empirical { sorted: values })
    }

    /// Sample values in ascending order.
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// Left-continuous inverse: the `ceil(p n)`-th order statistic.
    fn quantile(&self, p: f64) -> f64 {
        let n = self.sorted.len();
        let k = order_index(p, n);
        self.sorted[k - 1]
    }
}

/// `ceil(p n)` clamped to `[1, n]`; products within 1e-12 (relative) of an
/// integer are treated as that integer so that e.g. `0.7 * 10` gives 7.
pub(crate) fn order_index(p: f64, n: usize) -> usize {
    let x = p * n as f64;
    let r = x.round();
    let k = if (x - r).abs() <= 1e-12 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    };
    (k as usize).clamp(1, n)
}

/// Law of `scale * X + shift` for a continuous base law `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineTransform {
    base: Box<Distribution>,
    scale: f64,
    shift: f64,
}

impl AffineTransform {
    pub fn new(base: Distribution, scale: f64, shift: f64) -> Result<Self> {
        finite("affine", "scale", scale)?;
        finite("affine", "shift", shift)?;
        if scale == 0.0 {
            return Err(Error::invalid("affine", "scale must be nonzero"));
        }
        if !base.is_continuous() {
            return Err(Error::Unsupported {
                operation: "affine wrapping",
                family: base.family_name(),
            });
        }
        Ok(AffineTransform {
            base: Box::new(base),
            scale,
            shift,
        })
    }
    pub fn base(&self) -> &Distribution {
        &self.base
    }
    pub fn scale(&self) -> f64 {
        self.scale
    }
    pub fn shift(&self) -> f64 {
        self.shift
    }
}

/// An outcome law: the prior over utility of an action.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Normal(Normal),
    Logistic(Logistic),
    StudentT(StudentT),
    Pareto(Pareto),
    Gpd(Gpd),
    Gev(Gev),
    Triangular(Triangular),
    Degenerate(Degenerate),
    Empirical(Empirical),
    Affine(AffineTransform),
}

impl Distribution {
    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        Normal::new(mean, sd).map(Distribution::Normal)
    }
    pub fn logistic(loc: f64, scale: f64) -> Result<Self> {
        Logistic::new(loc, scale).map(Distribution::Logistic)
    }
    pub fn student_t(df: f64, scale: f64, loc: f64) -> Result<Self> {
        StudentT::new(df, scale, loc).map(Distribution::StudentT)
    }
    pub fn pareto(scale: f64, shape: f64) -> Result<Self> {
        Pareto::new(scale, shape).map(Distribution::Pareto)
    }
    pub fn gpd(shape: f64, scale: f64) -> Result<Self> {
        Gpd::new(shape, scale).map(Distribution::Gpd)
    }
    pub fn gev(loc: f64, scale: f64, shape: f64) -> Result<Self> {
        Gev::new(loc, scale, shape).map(Distribution::Gev)
    }
    pub fn triangular(lower: f64, mode: f64, upper: f64) -> Result<Self> {
        Triangular::new(lower, mode, upper).map(Distribution::Triangular)
    }
    pub fn degenerate(value: f64) -> Result<Self> {
        Degenerate::new(value).map(Distribution::Degenerate)
    }
    pub fn empirical(values: Vec<f64>) -> Result<Self> {
        Empirical::new(values).map(Distribution::Empirical)
    }

    /// Law of `scale * X + shift`. Point masses and samples are mapped
    /// directly and nested transforms are composed, so the result is an
    /// `Affine` only when the base is continuous.
    pub fn affine(base: Distribution, scale: f64, shift: f64) -> Result<Self> {
        finite("affine", "scale", scale)?;
        finite("affine", "shift", shift)?;
        if scale == 0.0 {
            return Err(Error::invalid("affine", "scale must be nonzero"));
        }
        match base {
            Distribution::Degenerate(d) => Distribution::degenerate(scale * d.value + shift),
            Distribution::Empirical(e) => {
                Distribution::empirical(e.sorted.iter().map(|v| scale * v + shift).collect())
            }
            Distribution::Affine(inner) => Distribution::affine(
                *inner.base,
                scale * inner.scale,
                scale * inner.shift + shift,
            ),
            other => AffineTransform::new(other, scale, shift).map(Distribution::Affine),
        }
    }

    /// The same law translated by `shift`.
    pub fn shifted(&self, shift: f64) -> Result<Self> {
        Distribution::affine(self.clone(), 1.0, shift)
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Distribution::Normal(_) => "normal",
            Distribution::Logistic(_) => "logistic",
            Distribution::StudentT(_) => "student_t",
            Distribution::Pareto(_) => "pareto",
            Distribution::Gpd(_) => "gpd",
            Distribution::Gev(_) => "gev",
            Distribution::Triangular(_) => "triangular",
            Distribution::Degenerate(_) => "degenerate",
            Distribution::Empirical(_) => "empirical",
            Distribution::Affine(_) => "affine",
        }
    }

    /// True for laws with a density (everything but point masses and samples).
    pub fn is_continuous(&self) -> bool {
        !matches!(self, Distribution::Degenerate(_) | Distribution::Empirical(_))
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Distribution::Normal(d) => special::norm_cdf((x - d.mean) / d.sd),
            Distribution::Logistic(d) => {
                let z = (x - d.loc) / d.scale;
                1.0 / (1.0 + (-z).exp())
            }
            Distribution::StudentT(d) => d.std_cdf((x - d.loc) / d.scale),
            Distribution::Pareto(d) => {
                if x <= d.scale {
                    0.0
                } else {
                    -(d.shape * (d.scale / x).ln()).exp_m1()
                }
            }
            Distribution::Gpd(d) => {
                if x <= 0.0 {
                    0.0
                } else {
                    let base = d.shape * x / d.scale;
                    if base <= -1.0 {
                        1.0
                    } else {
                        -(-base.ln_1p() / d.shape).exp_m1()
                    }
                }
            }
            Distribution::Gev(d) => match d.t(x) {
                Some(t) => (-t).exp(),
                None => {
                    if d.shape > 0.0 {
                        0.0
                    } else {
                        1.0
                    }
                }
            },
            Distribution::Triangular(d) => d.cdf(x),
            Distribution::Degenerate(d) => {
                if x >= d.value {
                    1.0
                } else {
                    0.0
                }
            }
            Distribution::Empirical(e) => e.cdf(x),
            Distribution::Affine(a) => {
                let y = (x - a.shift) / a.scale;
                if a.scale > 0.0 {
                    a.base.cdf(y)
                } else {
                    a.base.sf(y)
                }
            }
        }
    }

    /// `P(X > x)`, computed directly in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        match self {
            Distribution::Normal(d) => special::norm_sf((x - d.mean) / d.sd),
            Distribution::Logistic(d) => {
                let z = (x - d.loc) / d.scale;
                1.0 / (1.0 + z.exp())
            }
            Distribution::StudentT(d) => d.std_sf((x - d.loc) / d.scale),
            Distribution::Pareto(d) => {
                if x <= d.scale {
                    1.0
                } else {
                    (d.shape * (d.scale / x).ln()).exp()
                }
            }
            Distribution::Gpd(d) => {
                if x <= 0.0 {
                    1.0
                } else {
                    let base = d.shape * x / d.scale;
                    if base <= -1.0 {
                        0.0
                    } else {
                        (-base.ln_1p() / d.shape).exp()
                    }
                }
            }
            Distribution::Gev(d) => match d.t(x) {
                Some(t) => -(-t).exp_m1(),
                None => {
                    if d.shape > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
            },
            Distribution::Triangular(d) => d.sf(x),
            Distribution::Degenerate(d) => {
                if x < d.value {
                    1.0
                } else {
                    0.0
                }
            }
            Distribution::Empirical(e) => 1.0 - e.cdf(x),
            Distribution::Affine(a) => {
                let y = (x - a.shift) / a.scale;
                if a.scale > 0.0 {
                    a.base.sf(y)
                } else {
                    a.base.cdf(y)
                }
            }
        }
    }

    /// Density at `x`; point masses and samples have none.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        let v = match self {
            Distribution::Normal(d) => special::norm_pdf((x - d.mean) / d.sd) / d.sd,
            Distribution::Logistic(d) => {
                let e = (-((x - d.loc) / d.scale).abs()).exp();
                e / (d.scale * (1.0 + e) * (1.0 + e))
            }
            Distribution::StudentT(d) => d.std_pdf((x - d.loc) / d.scale) / d.scale,
            Distribution::Pareto(d) => {
                if x < d.scale {
                    0.0
                } else {
                    d.shape / d.scale * (-(d.shape + 1.0) * (x / d.scale).ln()).exp()
                }
            }
            Distribution::Gpd(d) => {
                let base = d.shape * x / d.scale;
                if x < 0.0 || base <= -1.0 {
                    0.0
                } else {
                    (-(1.0 / d.shape + 1.0) * base.ln_1p()).exp() / d.scale
                }
            }
            Distribution::Gev(d) => match d.t(x) {
                Some(t) => {
                    if t == 0.0 || t.is_infinite() {
                        0.0
                    } else {
                        ((d.shape + 1.0) * t.ln() - t).exp() / d.scale
                    }
                }
                None => 0.0,
            },
            Distribution::Triangular(d) => d.pdf(x),
            Distribution::Degenerate(_) | Distribution::Empirical(_) => {
                return Err(Error::Unsupported {
                    operation: "pdf",
                    family: self.family_name(),
                })
            }
            Distribution::Affine(a) => a.base.pdf((x - a.shift) / a.scale)? / a.scale.abs(),
        };
        Ok(v)
    }

    /// `min { z : F(z) >= alpha }` for `alpha` in `(0, 1)`.
    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!(
                "quantile level must lie in (0,1), got {alpha}"
            )));
        }
        Ok(self.quantile_at(alpha))
    }

    /// Quantile without the range check; `p` must lie in `(0, 1)`.
    pub(crate) fn quantile_at(&self, p: f64) -> f64 {
        match self {
            Distribution::Normal(d) => d.mean + d.sd * special::norm_quantile(p),
            Distribution::Logistic(d) => d.loc + d.scale * (p.ln() - (-p).ln_1p()),
            Distribution::StudentT(d) => d.loc + d.scale * d.std_quantile(p),
            Distribution::Pareto(d) => d.scale * (-(-p).ln_1p() / d.shape).exp(),
            Distribution::Gpd(d) => (d.scale / d.shape) * (-d.shape * (-p).ln_1p()).exp_m1(),
            Distribution::Gev(d) => d.quantile_from_log(-p.ln()),
            Distribution::Triangular(d) => d.quantile_pq(p, 1.0 - p),
            Distribution::Degenerate(d) => d.value,
            Distribution::Empirical(e) => e.quantile(p),
            Distribution::Affine(a) => {
                if a.scale > 0.0 {
                    a.scale * a.base.quantile_at(p) + a.shift
                } else {
                    a.scale * a.base.upper_quantile(p) + a.shift
                }
            }
        }
    }

    /// `Q_{1-q}` computed from the tail probability `q` in `(0, 1)`.
    pub fn upper_quantile(&self, q: f64) -> f64 {
        match self {
            Distribution::Normal(d) => d.mean + d.sd * special::norm_upper_quantile(q),
            Distribution::Logistic(d) => d.loc + d.scale * ((-q).ln_1p() - q.ln()),
            Distribution::StudentT(d) => {
                let t = if q <= 0.5 {
                    d.std_upper_inverse(q)
                } else {
                    -d.std_upper_inverse(1.0 - q)
                };
                d.loc + d.scale * t
            }
            Distribution::Pareto(d) => d.scale * (-q.ln() / d.shape).exp(),
            Distribution::Gpd(d) => d.upper_quantile(q),
            Distribution::Gev(d) => d.quantile_from_log(-(-q).ln_1p()),
            Distribution::Triangular(d) => d.quantile_pq(1.0 - q, q),
            Distribution::Degenerate(d) => d.value,
            Distribution::Empirical(e) => e.quantile(1.0 - q),
            Distribution::Affine(a) => {
                if a.scale > 0.0 {
                    a.scale * a.base.upper_quantile(q) + a.shift
                } else {
                    a.scale * a.base.quantile_at(q) + a.shift
                }
            }
        }
    }

    /// Exact mean of the law.
    pub fn mean(&self) -> f64 {
        match self {
            Distribution::Normal(d) => d.mean,
            Distribution::Logistic(d) => d.loc,
            Distribution::StudentT(d) => d.loc,
            Distribution::Pareto(d) => d.scale * d.shape / (d.shape - 1.0),
            Distribution::Gpd(d) => d.scale / (1.0 - d.shape),
            Distribution::Gev(d) => {
                if d.shape == 0.0 {
                    d.loc + d.scale * EULER_GAMMA
                } else {
                    d.loc + d.scale * (special::gamma(1.0 - d.shape) - 1.0) / d.shape
                }
            }
            Distribution::Triangular(d) => (d.lower + d.mode + d.upper) / 3.0,
            Distribution::Degenerate(d) => d.value,
            Distribution::Empirical(e) => e.sorted.iter().sum::<f64>() / e.sorted.len() as f64,
            Distribution::Affine(a) => a.scale * a.base.mean() + a.shift,
        }
    }

    /// Closed support interval `(lower, upper)`, possibly infinite.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Distribution::Normal(_) | Distribution::Logistic(_) | Distribution::StudentT(_) => {
                (f64::NEG_INFINITY, f64::INFINITY)
            }
            Distribution::Pareto(d) => (d.scale, f64::INFINITY),
            Distribution::Gpd(d) => {
                if d.shape < 0.0 {
                    (0.0, -d.scale / d.shape)
                } else {
                    (0.0, f64::INFINITY)
                }
            }
            Distribution::Gev(d) => {
                if d.shape > 0.0 {
                    (d.loc - d.scale / d.shape, f64::INFINITY)
                } else if d.shape < 0.0 {
                    (f64::NEG_INFINITY, d.loc - d.scale / d.shape)
                } else {
                    (f64::NEG_INFINITY, f64::INFINITY)
                }
            }
            Distribution::Triangular(d) => (d.lower, d.upper),
            Distribution::Degenerate(d) => (d.value, d.value),
            Distribution::Empirical(e) => (e.sorted[0], e.sorted[e.sorted.len() - 1]),
            Distribution::Affine(a) => {
                let (lo, hi) = a.base.support();
                let (x, y) = (a.scale * lo + a.shift, a.scale * hi + a.shift);
                if a.scale > 0.0 {
                    (x, y)
                } else {
                    (y, x)
                }
            }
        }
    }

    /// Interior points where the density is not smooth (the triangular
    /// mode), in increasing order. Integrators split there so that no panel
    /// straddles a kink.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Distribution::Triangular(d) if d.lower < d.mode && d.mode < d.upper => vec![d.mode],
            Distribution::Affine(a) => {
                let mut points: Vec<f64> = a.base.breakpoints().iter().map(|x| a.scale * x + a.shift).collect();
                points.sort_by(f64::total_cmp);
                points
            }
            _ => Vec::new(),
        }
    }

    /// Essential supremum of the law (`+inf` when unbounded above).
    pub fn ess_sup(&self) -> f64 {
        self.support().1
    }

    /// A length scale for the law (interquartile range, or 1 when degenerate).
    pub fn spread(&self) -> f64 {
        let iqr = self.quantile_at(0.75) - self.quantile_at(0.25);
        if iqr > 0.0 && iqr.is_finite() {
            iqr
        } else {
            1.0
        }
    }

    /// `n` i.i.d. draws by inverse transform of a ChaCha8 uniform stream.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let u = uniform_open(rng.next_u64());
                if u <= 0.5 {
                    self.quantile_at(u)
                } else {
                    self.upper_quantile(1.0 - u)
                }
            })
            .collect()
    }

    /// Closed-form `E[X | X >= Q_alpha]`, when the family has one.
    pub fn closed_form_superquantile(&self, alpha: f64) -> Option<f64> {
        self.closed_form_superquantile_with(alpha, ParetoFactor::Corrected)
    }

    /// As [`Self::closed_form_superquantile`], choosing the Pareto factor.
    pub fn closed_form_superquantile_with(&self, alpha: f64, pareto: ParetoFactor) -> Option<f64> {
        if !(0.0..1.0).contains(&alpha) {
            return None;
        }
        let tail = 1.0 - alpha;
        match self {
            Distribution::Normal(d) => {
                if alpha == 0.0 {
                    return Some(d.mean);
                }
                let z = special::norm_quantile(alpha);
                Some(d.mean + d.sd * special::norm_pdf(z) / tail)
            }
            Distribution::Logistic(d) => {
                let h = if alpha == 0.0 {
                    0.0
                } else {
                    -alpha * alpha.ln() - tail * tail.ln()
                };
                Some(d.loc + d.scale * h / tail)
            }
            Distribution::StudentT(d) => {
                if alpha == 0.0 {
                    return Some(d.loc);
                }
                let t = d.std_quantile(alpha);
                let nu = d.df;
                Some(d.loc + d.scale * (nu + t * t) / ((nu - 1.0) * tail) * d.std_pdf(t))
            }
            Distribution::Pareto(d) => {
                let q = if alpha == 0.0 {
                    d.scale
                } else {
                    self.quantile_at(alpha)
                };
                Some(q * pareto.factor(d.shape))
            }
            Distribution::Gpd(d) => {
                let q = if alpha == 0.0 { 0.0 } else { d.upper_quantile(tail) };
                Some((q + d.scale) / (1.0 - d.shape))
            }
            Distribution::Gev(d) => {
                if d.shape == 0.0 {
                    return None;
                }
                if alpha == 0.0 {
                    return Some(self.mean());
                }
                let partial = special::lower_gamma(1.0 - d.shape, -alpha.ln());
                Some(d.loc + d.scale / (d.shape * tail) * (partial - tail))
            }
            Distribution::Triangular(_) | Distribution::Degenerate(_) | Distribution::Empirical(_) => None,
            Distribution::Affine(a) => {
                if a.scale > 0.0 {
                    let base = a.base.closed_form_superquantile_with(alpha, pareto)?;
                    Some(a.scale * base + a.shift)
                } else if a.base.is_symmetric() {
                    // -X is the same family reflected about its centre.
                    let base = a.base.closed_form_superquantile_with(alpha, pareto)?;
                    let centre = a.base.mean();
                    Some(a.scale.abs() * (base - centre) + a.scale * centre + a.shift)
                } else {
                    None
                }
            }
        }
    }

    fn is_symmetric(&self) -> bool {
        matches!(
            self,
            Distribution::Normal(_) | Distribution::Logistic(_) | Distribution::StudentT(_)
        )
    }
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Maps 64 random bits to the open interval `(0, 1)`.
fn uniform_open(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}
