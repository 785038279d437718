//! Globally adaptive 15-point Gauss–Kronrod quadrature.
//!
//! The worst subinterval (by Kronrod-vs-Gauss error estimate) is bisected
//! until the summed error estimate falls below the requested absolute
//! tolerance or the evaluation budget runs out. Semi-infinite ranges are
//! mapped onto `[0, 1)` first; the rule never evaluates interval endpoints,
//! so integrable endpoint singularities are tolerated.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Default evaluation budget for a single integral.
pub const DEFAULT_BUDGET: usize = 1_000_000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the nodes `XGK[1]`, `XGK[3]`, `XGK[5]`, `XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Value and error estimate of an integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 15-point Kronrod panel with the QUADPACK error estimate: the raw
/// `|K15 - G7|` is rescaled by the panel's mean absolute deviation, which
/// keeps a lucky cancellation near a kink from passing as convergence.
fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut values = [(0.0, 0.0); 7];
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let (f1, f2) = (f(center - dx), f(center + dx));
        values[j] = (f1, f2);
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let deviation = WGK[7] * (fc - mean).abs()
        + (0..7)
            .map(|j| WGK[j] * ((values[j].0 - mean).abs() + (values[j].1 - mean).abs()))
            .sum::<f64>();
    let deviation = deviation * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if deviation != 0.0 && error != 0.0 {
        error = deviation * (200.0 * error / deviation).powf(1.5).min(1.0);
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error,
    }
}

/// Integrates `f` over the finite interval `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, budget: usize) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain("integration bounds must be finite"));
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let first = kronrod15(&f, a, b);
    let mut evaluations = 15;
    if !first.value.is_finite() {
        return Err(Error::numeric("integrand is not finite", first.value));
    }
    let mut heap = BinaryHeap::new();
    let mut value = first.value;
    let mut error = first.error;
    heap.push(first);

    while error > tol {
        if evaluations + 30 > budget {
            return Err(Error::numeric(
                format!("quadrature did not reach tolerance {tol:e} (estimated error {error:e})"),
                value,
            ));
        }
        let worst = match heap.pop() {
            Some(s) => s,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further in floating point.
            heap.push(Segment {
                error: 0.0,
                ..worst
            });
            error -= worst.error;
            continue;
        }
        let left = kronrod15(&f, worst.a, mid);
        let right = kronrod15(&f, mid, worst.b);
        evaluations += 30;
        if !(left.value.is_finite() && right.value.is_finite()) {
            return Err(Error::numeric("integrand is not finite", value));
        }
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        if heap.len() % 64 == 0 {
            // Re-sum to shed accumulated cancellation in the running totals.
            value = heap.iter().map(|s| s.value).sum();
            error = heap.iter().map(|s| s.error).sum();
        }
    }
    let value = heap.iter().map(|s| s.value).sum();
    let error = heap.iter().map(|s| s.error).sum();
    Ok(Integral {
        value,
        error,
        evaluations,
    })
}

/// Integrates `f` over `[a, inf)` using `x = a + scale * t / (1 - t)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    scale: f64,
    tol: f64,
    budget: usize,
) -> Result<Integral> {
    let mapped = |t: f64| {
        let gap = 1.0 - t;
        let x = a + scale * t / gap;
        if !x.is_finite() {
            return 0.0;
        }
        let fx = f(x);
        if fx == 0.0 {
            0.0
        } else {
            fx * scale / (gap * gap)
        }
    };
    integrate(mapped, 0.0, 1.0, tol, budget)
}

/// Integrates `f` over `[a, b]`, where `b` may be `+inf`.
pub fn integrate_upper<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    scale: f64,
    tol: f64,
    budget: usize,
) -> Result<Integral> {
    if b.is_finite() {
        integrate(f, a, b, tol, budget)
    } else {
        integrate_to_infinity(f, a, scale, tol, budget)
    }
}

/// Integrates `f` over `[a, b]` (`b` may be `+inf`), splitting at the given
/// interior points so that known kinks fall on panel edges. The tolerance is
/// shared evenly between the pieces.
pub fn integrate_pieces<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    scale: f64,
    tol: f64,
    budget: usize,
) -> Result<Integral> {
    let mut edges = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|x| *x > a && *x < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    edges.extend(inner);
    edges.push(b);
    let share = tol / (edges.len() - 1) as f64;
    let mut total = Integral {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    for w in edges.windows(2) {
        let piece = integrate_upper(&f, w[0], w[1], scale, share, budget)?;
        total.value += piece.value;
        total.error += piece.error;
        total.evaluations += piece.evaluations;
    }
    Ok(total)
}
