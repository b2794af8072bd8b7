//! Generating functions, singularities and Boltzmann tuning.
//!
//! Sizes here are unit sizes: the generating functions count the term `0`
//! at `z^0`. Reported expected sizes are natural sizes, i.e. the Boltzmann
//! expectation for the shifted series `z·A(z)`, which is `1 + x·A'(x)/A(x)`.
//!
//! Plain terms satisfy `L = D + zL + z²L²` with `D = 1/(1-z)` counting the
//! indices. Normal forms `N` and neutral terms `M` satisfy `N = M + zN` and
//! `M = z²MN + D`, which eliminates to `z²N² - N + 1/(1-z)² = 0`.
//! Both quadratics are solved in the rationalized form `2c/(b + sqrt(b² - 4ac))`,
//! which is regular at `z = 0`.

use std::fmt;
use std::ops::{Add, Div, Mul, Sub};
use std::sync::OnceLock;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// plain terms, sampled by the typed sampler
    Plain,
    /// normal forms, sampled by the typed normal-form sampler
    NormalForm,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Plain => "plain",
            Family::NormalForm => "nf",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" => Ok(Family::Plain),
            "nf" => Ok(Family::NormalForm),
            other => Err(format!("unknown family `{other}` (expected plain or nf)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("z = {z} outside the domain [0, {rho}) of the {family} generating function")]
    Domain { family: Family, z: f64, rho: f64 },
    #[error("no parameter in (0, {rho}) has expected size {target} (closest: {achieved})")]
    NoSolution {
        target: f64,
        achieved: f64,
        rho: f64,
    },
}

/// Arithmetic the closed forms need. Implemented for `f64`; tests also
/// evaluate the same formulas over truncated power series.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    fn constant(c: f64) -> Self;
    fn sqrt(self) -> Self;
}

impl Scalar for f64 {
    fn constant(c: f64) -> Self {
        c
    }

    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
}

fn plain_radicand<T: Scalar>(z: T) -> T {
    let one = T::constant(1.0);
    // (1-z)² - 4z²/(1-z) = (1-3z-z²-z³)/(1-z)
    (one - T::constant(3.0) * z - z * z - z * z * z) / (one - z)
}

fn nf_radicand<T: Scalar>(z: T) -> T {
    let one = T::constant(1.0);
    // 1 - 4z²/(1-z)² = (1-3z)(1+z)/(1-z)²
    (one - T::constant(3.0) * z) * (one + z) / ((one - z) * (one - z))
}

/// `L(z)`, plain terms by unit size.
pub fn plain_gf<T: Scalar>(z: T) -> T {
    let one = T::constant(1.0);
    let d = one / (one - z);
    T::constant(2.0) * d / ((one - z) + plain_radicand(z).sqrt())
}

/// `N(z)`, normal forms by unit size.
pub fn nf_gf<T: Scalar>(z: T) -> T {
    let one = T::constant(1.0);
    let e = one / ((one - z) * (one - z));
    T::constant(2.0) * e / (one + nf_radicand(z).sqrt())
}

/// `M(z) = (1-z)·N(z)`, neutral terms by unit size.
pub fn neutral_gf<T: Scalar>(z: T) -> T {
    (T::constant(1.0) - z) * nf_gf(z)
}

/// A generating function and its first two derivatives at `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenFunValue {
    pub z: f64,
    pub value: f64,
    pub derivative: f64,
    pub second: f64,
}

impl GenFunValue {
    /// Boltzmann expected unit size `z·A'/A`.
    fn mean_units(&self) -> f64 {
        self.z * self.derivative / self.value
    }

    fn std_dev(&self) -> f64 {
        let (z, a, a1, a2) = (self.z, self.value, self.derivative, self.second);
        let mean = z * a1 / a;
        ((z * z * a2 + z * a1) / a - mean * mean).max(0.0).sqrt()
    }
}

fn check_domain(family: Family, z: f64) -> Result<f64, AnalyticError> {
    let rho = dominant_singularity(family);
    let radicand = match family {
        Family::Plain => plain_radicand(z),
        Family::NormalForm => nf_radicand(z),
    };
    if !(0.0..rho).contains(&z) || radicand.is_nan() || radicand <= 0.0 {
        return Err(AnalyticError::Domain { family, z, rho });
    }
    Ok(radicand.sqrt())
}

/// `L` with derivatives from implicit differentiation of
/// `F(z, L) = z²L² - (1-z)L + 1/(1-z)`, using `∂F/∂L = -sqrt(radicand)`.
pub fn eval_l(z: f64) -> Result<GenFunValue, AnalyticError> {
    let s = check_domain(Family::Plain, z)?;
    let w = 1.0 - z;
    let d = 1.0 / w;
    let d1 = d * d;
    let d2 = 2.0 * d * d * d;
    let l = 2.0 * d / (w + s);
    let fz = 2.0 * z * l * l + l + d1;
    let l1 = fz / s;
    let fzz = 2.0 * l * l + d2;
    let fzl = 4.0 * z * l + 1.0;
    let fll = 2.0 * z * z;
    let l2 = (fzz + 2.0 * fzl * l1 + fll * l1 * l1) / s;
    Ok(GenFunValue {
        z,
        value: l,
        derivative: l1,
        second: l2,
    })
}

/// `(N, M)` with derivatives, from `G(z, N) = z²N² - N + 1/(1-z)²`.
pub fn eval_nf(z: f64) -> Result<(GenFunValue, GenFunValue), AnalyticError> {
    let t = check_domain(Family::NormalForm, z)?;
    let w = 1.0 - z;
    let e = 1.0 / (w * w);
    let e1 = 2.0 * e / w;
    let e2 = 3.0 * e1 / w;
    let n = 2.0 * e / (1.0 + t);
    let gz = 2.0 * z * n * n + e1;
    let n1 = gz / t;
    let gzz = 2.0 * n * n + e2;
    let gzn = 4.0 * z * n;
    let gnn = 2.0 * z * z;
    let n2 = (gzz + 2.0 * gzn * n1 + gnn * n1 * n1) / t;
    let nf = GenFunValue {
        z,
        value: n,
        derivative: n1,
        second: n2,
    };
    let neutral = GenFunValue {
        z,
        value: w * n,
        derivative: w * n1 - n,
        second: w * n2 - 2.0 * n1,
    };
    Ok((nf, neutral))
}

fn eval(family: Family, z: f64) -> Result<GenFunValue, AnalyticError> {
    match family {
        Family::Plain => eval_l(z),
        Family::NormalForm => eval_nf(z).map(|(n, _)| n),
    }
}

fn bisect_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    // f(lo) > 0 > f(hi); run until the bracket stops shrinking
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return lo;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Radius of convergence: the smallest positive root of the radicand
/// (`1-3z-z²-z³` for plain terms, `(1-z)² - 4z²` for normal forms).
/// Returned as the largest double at which the radicand is still positive.
pub fn dominant_singularity(family: Family) -> f64 {
    static PLAIN: OnceLock<f64> = OnceLock::new();
    static NF: OnceLock<f64> = OnceLock::new();
    match family {
        Family::Plain => {
            *PLAIN.get_or_init(|| bisect_root(|z| 1.0 - 3.0 * z - z * z - z * z * z, 0.0, 0.5))
        }
        Family::NormalForm => {
            *NF.get_or_init(|| bisect_root(|z| (1.0 - z) * (1.0 - z) - 4.0 * z * z, 0.0, 0.5))
        }
    }
}

/// Expected natural size of a Boltzmann sample with parameter `x`.
pub fn expected_size(family: Family, x: f64) -> Result<f64, AnalyticError> {
    let v = eval(family, x)?;
    Ok(1.0 + v.mean_units())
}

/// Standard deviation of the size of a Boltzmann sample with parameter `x`.
pub fn std_dev_size(family: Family, x: f64) -> Result<f64, AnalyticError> {
    Ok(eval(family, x)?.std_dev())
}

/// Branching thresholds for one decision, compared against a single uniform
/// draw in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Thresholds {
    /// One state. `r < index` picks an index, `r < lambda` an abstraction,
    /// anything else an application. Within an index, `r < leaf` stops at `0`.
    Plain { index: f64, lambda: f64, leaf: f64 },
    /// Two states. In the normal-form state `r < lambda` picks an
    /// abstraction, otherwise a neutral term follows. In the neutral state
    /// `r < index` picks an index, otherwise an application.
    NormalForm { lambda: f64, index: f64, leaf: f64 },
}

impl Thresholds {
    pub fn family(&self) -> Family {
        match self {
            Thresholds::Plain { .. } => Family::Plain,
            Thresholds::NormalForm { .. } => Family::NormalForm,
        }
    }

    pub fn leaf(&self) -> f64 {
        match *self {
            Thresholds::Plain { leaf, .. } | Thresholds::NormalForm { leaf, .. } => leaf,
        }
    }

    /// Every threshold lies in (0, 1) and the cumulative plain thresholds
    /// increase.
    pub fn is_valid(&self) -> bool {
        let unit = |p: f64| p > 0.0 && p < 1.0;
        match *self {
            Thresholds::Plain {
                index,
                lambda,
                leaf,
            } => unit(index) && unit(lambda) && unit(leaf) && index < lambda,
            Thresholds::NormalForm {
                lambda,
                index,
                leaf,
            } => unit(lambda) && unit(index) && unit(leaf),
        }
    }
}

/// Branch probabilities at `x`.
///
/// Plain: index `D/L`, abstraction `x`, application `x²L`; inside an index
/// the leaf `0` has probability `1/D = 1-x`. Normal forms: abstraction `x`
/// versus neutral `M/N = 1-x`; inside a neutral term index `D/M` versus
/// application `x²N`; leaf `1-x`.
pub fn branching_thresholds(family: Family, x: f64) -> Result<Thresholds, AnalyticError> {
    if x <= 0.0 {
        return Err(AnalyticError::Domain {
            family,
            z: x,
            rho: dominant_singularity(family),
        });
    }
    let d = 1.0 / (1.0 - x);
    match family {
        Family::Plain => {
            let l = eval_l(x)?.value;
            let index = d / l;
            Ok(Thresholds::Plain {
                index,
                lambda: index + x,
                leaf: 1.0 - x,
            })
        }
        Family::NormalForm => {
            let (_, m) = eval_nf(x)?;
            Ok(Thresholds::NormalForm {
                lambda: x,
                index: d / m.value,
                leaf: 1.0 - x,
            })
        }
    }
}

/// A calibrated sampler parameter and everything derived from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningResult {
    pub family: Family,
    pub target: f64,
    pub x: f64,
    pub rho: f64,
    pub expected_size: f64,
    pub std_dev: f64,
    pub thresholds: Thresholds,
}

pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// Find `x` whose expected natural size is `target`, by bisection on
/// `(0, ρ)` (the expectation increases from 1 to infinity there).
pub fn solve_for_target(
    family: Family,
    target: f64,
    tolerance: f64,
) -> Result<TuningResult, AnalyticError> {
    let rho = dominant_singularity(family);
    if target.is_nan() || target <= 1.0 || !target.is_finite() {
        return Err(AnalyticError::NoSolution {
            target,
            achieved: 1.0,
            rho,
        });
    }
    let (mut lo, mut hi) = (0.0f64, rho);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match expected_size(family, mid) {
            Ok(e) if e < target => lo = mid,
            _ => hi = mid,
        }
    }
    // pick whichever end of the final bracket is closer
    let candidates = [lo, hi]
        .into_iter()
        .filter(|&x| x > 0.0)
        .filter_map(|x| expected_size(family, x).ok().map(|e| (x, e)));
    let (x, achieved) = candidates
        .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
        .ok_or(AnalyticError::NoSolution {
            target,
            achieved: f64::INFINITY,
            rho,
        })?;
    if (achieved - target).abs() >= tolerance {
        return Err(AnalyticError::NoSolution {
            target,
            achieved,
            rho,
        });
    }
    Ok(TuningResult {
        family,
        target,
        x,
        rho,
        expected_size: achieved,
        std_dev: std_dev_size(family, x)?,
        thresholds: branching_thresholds(family, x)?,
    })
}

impl TuningResult {
    /// `key=value` lines understood by [`parse_config`].
    pub fn to_config(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("family={}\n", self.family));
        out.push_str(&format!("target_size={}\n", self.target));
        out.push_str(&format!("x={}\n", self.x));
        out.push_str(&format!("rho={}\n", self.rho));
        out.push_str(&format!("expected_size={}\n", self.expected_size));
        out.push_str(&format!("std_dev={}\n", self.std_dev));
        out.push_str(&thresholds_config(&self.thresholds));
        out
    }
}

pub fn thresholds_config(t: &Thresholds) -> String {
    match *t {
        Thresholds::Plain {
            index,
            lambda,
            leaf,
        } => format!("boltzmann_index={index}\nboltzmann_lambda={lambda}\nboltzmann_leaf={leaf}\n"),
        Thresholds::NormalForm {
            lambda,
            index,
            leaf,
        } => format!(
            "boltzmann_nf_lambda={lambda}\nboltzmann_nf_index={index}\nboltzmann_nf_leaf={leaf}\n"
        ),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("config line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

/// Read thresholds back from `key=value` lines. Blank lines and `#`
/// comments are skipped; keys other than the thresholds and `family` are
/// informational and ignored.
pub fn parse_config(text: &str) -> Result<Thresholds, ConfigError> {
    let mut family = None;
    let mut values = std::collections::HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| ConfigError {
            line: i + 1,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected key=value, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key == "family" {
            family = Some(value.parse::<Family>().map_err(err)?);
        } else if key.starts_with("boltzmann_") {
            let v: f64 = value
                .parse()
                .map_err(|_| err(format!("`{value}` is not a number")))?;
            values.insert(key.to_string(), v);
        }
    }
    let get = |k: &str| {
        values.get(k).copied().ok_or_else(|| ConfigError {
            line: 0,
            message: format!("missing `{k}`"),
        })
    };
    let family = family.ok_or_else(|| ConfigError {
        line: 0,
        message: "missing `family`".into(),
    })?;
    let t = match family {
        Family::Plain => Thresholds::Plain {
            index: get("boltzmann_index")?,
            lambda: get("boltzmann_lambda")?,
            leaf: get("boltzmann_leaf")?,
        },
        Family::NormalForm => Thresholds::NormalForm {
            lambda: get("boltzmann_nf_lambda")?,
            index: get("boltzmann_nf_index")?,
            leaf: get("boltzmann_nf_leaf")?,
        },
    };
    if !t.is_valid() {
        return Err(ConfigError {
            line: 0,
            message: "thresholds must lie in (0,1) and increase".into(),
        });
    }
    Ok(t)
}

/// Parameters of `[z^n] ~ C·ρ^-n·n^(-3/2)` for plain terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticParams {
    pub rho: f64,
    pub c: f64,
}

/// Published rounded values of the plain-term asymptotics.
pub const PUBLISHED_PLAIN_ASYMPTOTICS: AsymptoticParams = AsymptoticParams {
    rho: 0.29560,
    c: 0.60676,
};

pub fn plain_asymptotics() -> AsymptoticParams {
    AsymptoticParams {
        rho: dominant_singularity(Family::Plain),
        c: PUBLISHED_PLAIN_ASYMPTOTICS.c,
    }
}

/// Asymptotic estimate of the number of plain terms of natural size `n`.
pub fn asymptotic_count(n: u32) -> f64 {
    let p = plain_asymptotics();
    let n = f64::from(n);
    (1.0 / p.rho).powf(n) * p.c / n.powf(1.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    const X_PLAIN: f64 = 0.29558095907;
    const X_NF: f64 = 0.3333158264186935;

    #[test]
    fn values_at_zero() {
        let l = eval_l(0.0).unwrap();
        assert_eq!(l.value, 1.0);
        assert!((l.derivative - 2.0).abs() < 1e-12);
        let (n, m) = eval_nf(0.0).unwrap();
        assert_eq!((n.value, m.value), (1.0, 1.0));
    }

    #[test]
    fn singularities() {
        let rho = dominant_singularity(Family::Plain);
        assert!((rho - 0.29560).abs() < 1e-4);
        assert!((1.0 / rho - 3.38298).abs() < 1e-4);
        assert!((dominant_singularity(Family::NormalForm) - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn domain_errors() {
        assert!(eval_l(-0.1).is_err());
        assert!(eval_l(0.3).is_err());
        assert!(eval_nf(1.0 / 3.0).is_err());
        assert!(expected_size(Family::Plain, 0.0).is_ok());
        assert!(branching_thresholds(Family::Plain, 0.0).is_err());
        assert!(solve_for_target(Family::Plain, 1.0, DEFAULT_TOLERANCE).is_err());
    }

    #[test]
    fn calibrated_expectations() {
        assert!((expected_size(Family::Plain, X_PLAIN).unwrap() - 120.0).abs() < 0.5);
        assert!((expected_size(Family::NormalForm, X_NF).unwrap() - 120.0).abs() < 0.5);
    }

    #[test]
    fn expectation_increases() {
        for family in [Family::Plain, Family::NormalForm] {
            let rho = dominant_singularity(family);
            let mut prev = 1.0;
            for i in 1..1000 {
                let x = rho * f64::from(i) / 1000.0;
                let e = expected_size(family, x).unwrap();
                assert!(e > prev, "{family} at {x}");
                prev = e;
            }
            assert!(expected_size(family, 1e-9).unwrap() - 1.0 < 1e-6);
        }
    }

    #[test]
    fn solver_inverts_forward_map() {
        for family in [Family::Plain, Family::NormalForm] {
            let rho = dominant_singularity(family);
            for frac in [0.1, 0.5, 0.9, 0.99, 0.9999] {
                let x0 = rho * frac;
                let target = expected_size(family, x0).unwrap();
                let r = solve_for_target(family, target, DEFAULT_TOLERANCE).unwrap();
                assert!((r.x - x0).abs() < 1e-9, "{family} {frac}: {} vs {x0}", r.x);
                let again = solve_for_target(family, r.expected_size, DEFAULT_TOLERANCE).unwrap();
                assert!((again.x - r.x).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn branch_probabilities_sum_to_one() {
        for x in [0.01, 0.1, 0.2, 0.29, X_PLAIN] {
            let l = eval_l(x).unwrap().value;
            let d = 1.0 / (1.0 - x);
            assert!((d / l + x + x * x * l - 1.0).abs() < 1e-9);
            assert!(branching_thresholds(Family::Plain, x).unwrap().is_valid());
        }
        for x in [0.01, 0.1, 0.3, X_NF] {
            let (n, m) = eval_nf(x).unwrap();
            let d = 1.0 / (1.0 - x);
            assert!((m.value - (1.0 - x) * n.value).abs() < 1e-9);
            assert!((d / m.value + x * x * n.value - 1.0).abs() < 1e-9);
            assert!(branching_thresholds(Family::NormalForm, x)
                .unwrap()
                .is_valid());
        }
    }

    fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn derivatives_match_central_differences() {
        let rho = dominant_singularity(Family::Plain);
        for x in [0.05, 0.2, 0.29, X_PLAIN] {
            let v = eval_l(x).unwrap();
            let h = 1e-4 * (rho - x);
            let fd = central_difference(|z| eval_l(z).unwrap().value, x, h);
            assert!((fd / v.derivative - 1.0).abs() < 1e-6, "L' at {x}");
            let fd2 = central_difference(|z| eval_l(z).unwrap().derivative, x, h);
            assert!((fd2 / v.second - 1.0).abs() < 1e-5, "L'' at {x}");
        }
        let rho = dominant_singularity(Family::NormalForm);
        for x in [0.05, 0.2, 0.33, X_NF] {
            let (n, m) = eval_nf(x).unwrap();
            let h = 1e-4 * (rho - x);
            let fd = central_difference(|z| eval_nf(z).unwrap().0.value, x, h);
            assert!((fd / n.derivative - 1.0).abs() < 1e-6, "N' at {x}");
            let fd2 = central_difference(|z| eval_nf(z).unwrap().0.derivative, x, h);
            assert!((fd2 / n.second - 1.0).abs() < 1e-5, "N'' at {x}");
            let fdm = central_difference(|z| eval_nf(z).unwrap().1.value, x, h);
            assert!((fdm / m.derivative - 1.0).abs() < 1e-6, "M' at {x}");
        }
    }

    #[test]
    fn config_round_trip() {
        for family in [Family::Plain, Family::NormalForm] {
            let r = solve_for_target(family, 120.0, DEFAULT_TOLERANCE).unwrap();
            assert_eq!(parse_config(&r.to_config()).unwrap(), r.thresholds);
        }
        assert_eq!(
            parse_config("family=plain\nnonsense\n").unwrap_err().line,
            2
        );
        assert!(parse_config("family=plain\nboltzmann_index=0.5\n").is_err());
        assert!(parse_config(
            "family=plain\nboltzmann_index=0.7\nboltzmann_lambda=0.6\nboltzmann_leaf=0.5\n"
        )
        .is_err());
    }

    #[test]
    fn asymptotics_echo_and_growth() {
        assert_eq!(PUBLISHED_PLAIN_ASYMPTOTICS.c, 0.60676);
        assert_eq!(PUBLISHED_PLAIN_ASYMPTOTICS.rho, 0.29560);
        let inv = 1.0 / plain_asymptotics().rho;
        for n in [75, 100, 200] {
            let r = asymptotic_count(n + 1) / asymptotic_count(n);
            assert!((r / inv - 1.0).abs() < 0.02);
        }
    }
}
