//! Text form of a distribution: `family(key=value, ...)`.
//!
//! `affine` takes its base law as the first, positional argument and
//! `empirical` takes either `path=<file>` (one decimal per line) or inline
//! `values=<v1 v2 ...>`. Numbers may be written as decimals or as simple
//! fractions such as `1/3`. `Display` prints the canonical form, which parses
//! back to an equal value.

use std::fmt;
use std::str::FromStr;

use super::Distribution;
use crate::error::{Error, Result};

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

enum Arg {
    Law(Distribution),
    Pair(String, String),
}

impl<'a> Parser<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(Error::Parse(format!(
                "expected '{c}' at offset {} in \"{}\"",
                self.pos, self.src
            )))
        }
    }

    fn ident(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let rest = self.rest();
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        if len == 0 {
            return Err(Error::Parse(format!(
                "expected a name at offset {} in \"{}\"",
                self.pos, self.src
            )));
        }
        self.pos += len;
        Ok(&rest[..len])
    }

    /// Raw value text up to the next top-level ',' or ')'.
    fn raw_value(&mut self) -> &'a str {
        let rest = self.rest();
        let len = rest.find([',', ')']).unwrap_or(rest.len());
        self.pos += len;
        rest[..len].trim()
    }

    fn law(&mut self) -> Result<Distribution> {
        let family = self.ident()?.to_ascii_lowercase();
        self.expect('(')?;
        let mut args = Vec::new();
        if !self.eat(')') {
            loop {
                args.push(self.arg()?);
                if self.eat(')') {
                    break;
                }
                self.expect(',')?;
            }
        }
        build(&family, args)
    }

    fn arg(&mut self) -> Result<Arg> {
        self.skip_ws();
        let save = self.pos;
        let name = self.ident()?;
        if self.eat('=') {
            self.skip_ws();
            Ok(Arg::Pair(name.to_ascii_lowercase(), self.raw_value().to_string()))
        } else {
            self.pos = save;
            Ok(Arg::Law(self.law()?))
        }
    }
}

/// Parses a decimal or a `p/q` fraction.
pub(crate) fn parse_number(text: &str) -> Result<f64> {
    let text = text.trim();
    let bad = || Error::Parse(format!("'{text}' is not a number"));
    let value = match text.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| bad())?;
            let den: f64 = den.trim().parse().map_err(|_| bad())?;
            num / den
        }
        None => text.parse().map_err(|_| bad())?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}

struct Params {
    family: &'static str,
    pairs: Vec<(String, String)>,
}

impl Params {
    fn take_raw(&mut self, key: &str) -> Option<String> {
        let idx = self.pairs.iter().position(|(k, _)| k == key)?;
        Some(self.pairs.remove(idx).1)
    }

    fn number(&mut self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.take_raw(key) {
            Some(text) => parse_number(&text).map_err(|e| match e {
                Error::Parse(msg) => Error::Parse(format!("{}: {key}: {msg}", self.family)),
                other => other,
            }),
            None => default.ok_or_else(|| {
                Error::Parse(format!("{}: missing parameter '{key}'", self.family))
            }),
        }
    }

    fn finish(self) -> Result<()> {
        match self.pairs.first() {
            Some((k, _)) => Err(Error::Parse(format!(
                "{}: unknown parameter '{k}'",
                self.family
            ))),
            None => Ok(()),
        }
    }
}

fn family_tag(name: &str) -> Option<&'static str> {
    Some(match name {
        "normal" => "normal",
        "logistic" => "logistic",
        "student_t" => "student_t",
        "pareto" => "pareto",
        "gpd" => "gpd",
        "gev" => "gev",
        "triangular" => "triangular",
        "degenerate" => "degenerate",
        "empirical" => "empirical",
        "affine" => "affine",
        _ => return None,
    })
}

fn build(family: &str, args: Vec<Arg>) -> Result<Distribution> {
    let tag = family_tag(family)
        .ok_or_else(|| Error::Parse(format!("unknown distribution family '{family}'")))?;
    let mut base = None;
    let mut pairs: Vec<(String, String)> = Vec::new();
    for arg in args {
        match arg {
            Arg::Law(d) if tag == "affine" && base.is_none() && pairs.is_empty() => base = Some(d),
            Arg::Law(_) => {
                return Err(Error::Parse(format!(
                    "{tag}: unexpected positional argument"
                )))
            }
            Arg::Pair(k, v) => {
                if pairs.iter().any(|(seen, _)| *seen == k) {
                    return Err(Error::Parse(format!("{tag}: duplicate parameter '{k}'")));
                }
                pairs.push((k, v));
            }
        }
    }
    let mut p = Params { family: tag, pairs };
    let law = match tag {
        "normal" => {
            let mean = p.number("mean", Some(0.0))?;
            let sd = p.number("sd", Some(1.0))?;
            p.finish()?;
            Distribution::normal(mean, sd)?
        }
        "logistic" => {
            let loc = p.number("loc", Some(0.0))?;
            let scale = p.number("scale", Some(1.0))?;
            p.finish()?;
            Distribution::logistic(loc, scale)?
        }
        "student_t" => {
            let df = p.number("df", None)?;
            let scale = p.number("scale", Some(1.0))?;
            let loc = p.number("loc", Some(0.0))?;
            p.finish()?;
            Distribution::student_t(df, scale, loc)?
        }
        "pareto" => {
            let scale = p.number("scale", Some(1.0))?;
            let shape = p.number("shape", None)?;
            p.finish()?;
            Distribution::pareto(scale, shape)?
        }
        "gpd" => {
            let shape = p.number("shape", None)?;
            let scale = p.number("scale", Some(1.0))?;
            p.finish()?;
            Distribution::gpd(shape, scale)?
        }
        "gev" => {
            let loc = p.number("loc", Some(0.0))?;
            let scale = p.number("scale", Some(1.0))?;
            let shape = p.number("shape", None)?;
            p.finish()?;
            Distribution::gev(loc, scale, shape)?
        }
        "triangular" => {
            let lower = p.number("lower", None)?;
            let mode = p.number("mode", None)?;
            let upper = p.number("upper", None)?;
            p.finish()?;
            Distribution::triangular(lower, mode, upper)?
        }
        "degenerate" => {
            let value = p.number("value", None)?;
            p.finish()?;
            Distribution::degenerate(value)?
        }
        "empirical" => {
            let values = match (p.take_raw("path"), p.take_raw("values")) {
                (Some(path), None) => read_values(&path)?,
                (None, Some(list)) => list
                    .split_whitespace()
                    .map(parse_number)
                    .collect::<Result<Vec<_>>>()?,
                _ => {
                    return Err(Error::Parse(
                        "empirical: give exactly one of 'path' or 'values'".into(),
                    ))
                }
            };
            p.finish()?;
            Distribution::empirical(values)?
        }
        "affine" => {
            let base = base.ok_or_else(|| Error::Parse("affine: missing base law".into()))?;
            let scale = p.number("scale", Some(1.0))?;
            let shift = p.number("shift", Some(0.0))?;
            p.finish()?;
            Distribution::affine(base, scale, shift)?
        }
        _ => unreachable!("family tags are exhaustive"),
    };
    Ok(law)
}

/// Reads a newline-delimited list of decimals; blank lines and `#` comments
/// are skipped.
pub fn read_values(path: &str) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("empirical: cannot read '{path}': {e}")))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(parse_number)
        .collect()
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parser = Parser { src: s, pos: 0 };
        let law = parser.law()?;
        parser.skip_ws();
        if parser.pos != s.len() {
            return Err(Error::Parse(format!(
                "trailing text after distribution: \"{}\"",
                parser.rest()
            )));
        }
        Ok(law)
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distribution::Normal(d) => write!(f, "normal(mean={}, sd={})", d.mean, d.sd),
            Distribution::Logistic(d) => write!(f, "logistic(loc={}, scale={})", d.loc, d.scale),
            Distribution::StudentT(d) => write!(
                f,
                "student_t(df={}, scale={}, loc={})",
                d.df, d.scale, d.loc
            ),
            Distribution::Pareto(d) => write!(f, "pareto(scale={}, shape={})", d.scale, d.shape),
            Distribution::Gpd(d) => write!(f, "gpd(shape={}, scale={})", d.shape, d.scale),
            Distribution::Gev(d) => write!(
                f,
                "gev(loc={}, scale={}, shape={})",
                d.loc, d.scale, d.shape
            ),
            Distribution::Triangular(d) => write!(
                f,
                "triangular(lower={}, mode={}, upper={})",
                d.lower, d.mode, d.upper
            ),
            Distribution::Degenerate(d) => write!(f, "degenerate(value={})", d.value),
            Distribution::Empirical(e) => {
                write!(f, "empirical(values=")?;
                for (i, v) in e.sorted.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ")")
            }
            Distribution::Affine(a) => write!(
                f,
                "affine({}, scale={}, shift={})",
                a.base, a.scale, a.shift
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_every_family() {
        let cases = [
            "normal(mean=0, sd=1)",
            "logistic(loc=1, scale=2)",
            "student_t(df=5)",
            "pareto(scale=1, shape=2)",
            "gpd(shape=-0.3, scale=1)",
            "gev(shape=0.2)",
            "triangular(lower=0, mode=0, upper=2)",
            "degenerate(value=3)",
            "empirical(values=3 1 2)",
            "affine(triangular(lower=0, mode=0, upper=2), scale=-1, shift=1/3)",
        ];
        for text in cases {
            let d: Distribution = text.parse().unwrap_or_else(|e| panic!("{text}: {e}"));
            let again: Distribution = d.to_string().parse().unwrap();
            assert_eq!(d, again, "{text}");
        }
    }

    #[test]
    fn fractions_parse_exactly() {
        let d: Distribution = "affine(normal(), shift=1/3)".parse().unwrap();
        match d {
            Distribution::Affine(a) => assert_eq!(a.shift(), 1.0 / 3.0),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn reports_bad_input() {
        let err = "pareto(scale=1, shape=0.5)".parse::<Distribution>().unwrap_err();
        assert!(err.to_string().contains("shape must exceed 1"), "{err}");
        assert!("normal(mu=0)".parse::<Distribution>().is_err());
        assert!("normal(mean=0, mean=1)".parse::<Distribution>().is_err());
        assert!("weibull(k=1)".parse::<Distribution>().is_err());
        assert!("normal(mean=abc)".parse::<Distribution>().is_err());
        assert!("normal(mean=0".parse::<Distribution>().is_err());
        assert!("normal() x".parse::<Distribution>().is_err());
        assert!("empirical()".parse::<Distribution>().is_err());
    }

    #[test]
    fn reads_empirical_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("xs.txt");
        std::fs::write(&path, "1.5\n# comment\n\n-2\n3e1\n").unwrap();
        let d: Distribution = format!("empirical(path={})", path.display()).parse().unwrap();
        assert_eq!(d, Distribution::empirical(vec![-2.0, 1.5, 30.0]).unwrap());
    }

    proptest! {
        #[test]
        fn display_round_trips(mean in -1e6f64..1e6, sd in 1e-6f64..1e6, scale in prop_oneof![-1e3f64..-1e-3, 1e-3f64..1e3], shift in -1e3f64..1e3) {
            let base = Distribution::normal(mean, sd).unwrap();
            let d = Distribution::affine(Distribution::logistic(mean, sd).unwrap(), scale, shift).unwrap();
            for law in [base, d] {
                let back: Distribution = law.to_string().parse().unwrap();
                prop_assert_eq!(back, law);
            }
        }
    }
}
