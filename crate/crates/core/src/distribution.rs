//! Critical offspring distributions and the ratio machinery behind the estimator.
//!
//! A distribution is stored as a finite pmf vector `p[0..=K]`. Families with
//! infinite support are truncated once the retained mass reaches
//! `1 - tail_epsilon`. Explicitly specified pmfs (and the binomial, uniform-set
//! and geometric families) also carry an exact rational copy of the pmf, which
//! the oracle and the exact estimator paths use.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};
use serde_json::Value;

use crate::error::{Error, Result};

pub const DEFAULT_TAIL_EPSILON: f64 = 1e-12;
pub const CRITICALITY_TOLERANCE: f64 = 1e-9;
pub const MASS_TOLERANCE: f64 = 1e-12;
/// Relative tolerance for declaring two floating-point ratios tied.
pub const RATIO_TIE_TOLERANCE: f64 = 1e-12;

const MAX_TRUNCATED_SUPPORT: usize = 10_000_000;
const FEASIBILITY_DP_LIMIT: usize = 64;

/// A nonnegative ratio that may be infinite (a special integer).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ratio<T = f64> {
    Finite(T),
    Infinite,
}

impl Ratio<f64> {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Ratio::Infinite)
    }

    /// Plain `f64` view; `Infinite` maps to `f64::INFINITY`.
    pub fn value(&self) -> f64 {
        match *self {
            Ratio::Finite(x) => x,
            Ratio::Infinite => f64::INFINITY,
        }
    }
}

impl<T: fmt::Display> fmt::Display for Ratio<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Finite(x) => write!(f, "{x}"),
            Ratio::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Ratio<f64> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Ratio::Finite(x) => serializer.serialize_f64(*x),
            Ratio::Infinite => serializer.serialize_str("inf"),
        }
    }
}

/// Parametric family a distribution was built from.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Binomial(k, 1/k): uniform random k-ary trees.
    Binomial { k: usize },
    /// Poisson(1): Cayley trees.
    Poisson,
    /// Geometric(1/2), `p_i = 2^{-(i+1)}`: planted plane trees.
    Geometric,
    /// Uniform over a finite set of offspring counts.
    UniformSet { values: Vec<usize> },
    /// `p_i = theta / (i+1)^alpha` for `i >= 1`, with `theta` and `p_0` fixed by criticality.
    PolynomialTail { alpha: f64 },
    Explicit,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Binomial { k } => write!(f, "binomial(k={k})"),
            Family::Poisson => f.write_str("poisson(1)"),
            Family::Geometric => f.write_str("geometric(1/2)"),
            Family::UniformSet { values } => {
                let v: Vec<String> = values.iter().map(|x| x.to_string()).collect();
                write!(f, "uniform-set{{{}}}", v.join(","))
            }
            Family::PolynomialTail { alpha } => write!(f, "polynomial-tail(alpha={alpha})"),
            Family::Explicit => f.write_str("explicit"),
        }
    }
}

/// A validated critical offspring law.
#[derive(Debug, Clone)]
pub struct OffspringDistribution {
    pmf: Vec<f64>,
    exact: Option<Vec<BigRational>>,
    family: Family,
    mean: f64,
    variance: f64,
    // ratios[i] = R_i for 0 <= i <= pmf.len(); beyond that R_i = 0.
    ratios: Vec<Ratio>,
    exact_ratios: Option<Vec<Ratio<BigRational>>>,
    special: Vec<usize>,
    period: usize,
    sup_ratio_nonspecial: f64,
}

impl OffspringDistribution {
    /// Builds a member of a parametric family.
    pub fn make_family(family: &Family, tail_epsilon: f64) -> Result<Self> {
        match family {
            Family::Binomial { k } => binomial(*k),
            Family::Poisson => {
                check_tail_epsilon(tail_epsilon)?;
                poisson(tail_epsilon)
            }
            Family::Geometric => {
                check_tail_epsilon(tail_epsilon)?;
                geometric(tail_epsilon)
            }
            Family::UniformSet { values } => uniform_set(values),
            Family::PolynomialTail { alpha } => {
                check_tail_epsilon(tail_epsilon)?;
                polynomial_tail(*alpha, tail_epsilon)
            }
            Family::Explicit => Err(Error::InvalidParams(
                "explicit distributions are built from a pmf".into(),
            )),
        }
    }

    pub fn binomial(k: usize) -> Result<Self> {
        binomial(k)
    }

    pub fn poisson() -> Result<Self> {
        poisson(DEFAULT_TAIL_EPSILON)
    }

    pub fn geometric() -> Result<Self> {
        geometric(DEFAULT_TAIL_EPSILON)
    }

    pub fn uniform_set(values: &[usize]) -> Result<Self> {
        uniform_set(values)
    }

    pub fn polynomial_tail(alpha: f64) -> Result<Self> {
        polynomial_tail(alpha, DEFAULT_TAIL_EPSILON)
    }

    /// Explicit pmf with exact rational probabilities.
    pub fn from_exact_pmf(pmf: Vec<BigRational>) -> Result<Self> {
        Self::build(None, Some(pmf), Family::Explicit, None)
    }

    /// Explicit pmf given in floating point only.
    pub fn from_pmf(pmf: Vec<f64>) -> Result<Self> {
        Self::build(Some(pmf), None, Family::Explicit, None)
    }

    fn build(
        pmf: Option<Vec<f64>>,
        exact: Option<Vec<BigRational>>,
        family: Family,
        ratio_override: Option<&dyn Fn(usize) -> f64>,
    ) -> Result<Self> {
        let mut exact = exact;
        if let Some(e) = exact.as_mut() {
            trim_zeros_exact(e);
            if e.is_empty() {
                return Err(Error::InvalidParams("empty pmf".into()));
            }
            if e.iter().any(|p| p.is_negative()) {
                return Err(Error::InvalidParams("negative probability".into()));
            }
        }
        let mut pmf = match (pmf, &exact) {
            (Some(p), _) => p,
            (None, Some(e)) => e.iter().map(|p| p.to_f64().unwrap_or(f64::NAN)).collect(),
            (None, None) => return Err(Error::InvalidParams("empty pmf".into())),
        };
        while pmf.len() > 1 && pmf.last() == Some(&0.0) {
            pmf.pop();
        }
        if pmf.is_empty() {
            return Err(Error::InvalidParams("empty pmf".into()));
        }
        if pmf.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidParams("probabilities must be finite and nonnegative".into()));
        }

        let total = match &exact {
            Some(e) => e.iter().fold(BigRational::zero(), |acc, p| acc + p).to_f64().unwrap_or(f64::NAN),
            None => pmf.iter().sum(),
        };
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidParams(format!("probabilities sum to {total}, not 1")));
        }
        let mean: f64 = pmf.iter().enumerate().map(|(i, p)| i as f64 * p).sum();
        if (mean - 1.0).abs() > CRITICALITY_TOLERANCE {
            return Err(Error::CriticalityViolated { mean });
        }
        let second: f64 = pmf.iter().enumerate().map(|(i, p)| (i * i) as f64 * p).sum();
        let variance = second - mean * mean;
        if pmf[0] == 0.0 || pmf.get(1).copied() == Some(1.0) || variance <= 0.0 {
            return Err(Error::Degenerate);
        }

        let positive = |i: usize| pmf.get(i).is_some_and(|p| *p > 0.0);
        let special: Vec<usize> = (1..pmf.len()).filter(|&i| positive(i) && !positive(i - 1)).collect();
        let period = (1..pmf.len()).filter(|&i| positive(i)).fold(0usize, |g, i| g.gcd(&i));

        let exact_ratios = exact.as_ref().map(|e| {
            (0..=e.len())
                .map(|i| {
                    let p_i = e.get(i).cloned().unwrap_or_else(BigRational::zero);
                    if i == 0 || p_i.is_zero() {
                        Ratio::Finite(BigRational::zero())
                    } else if e[i - 1].is_zero() {
                        Ratio::Infinite
                    } else {
                        Ratio::Finite(BigRational::from_integer(BigInt::from(i)) * p_i / &e[i - 1])
                    }
                })
                .collect::<Vec<_>>()
        });
        let ratios: Vec<Ratio> = (0..=pmf.len())
            .map(|i| {
                let p_i = pmf.get(i).copied().unwrap_or(0.0);
                if i == 0 || p_i == 0.0 {
                    Ratio::Finite(0.0)
                } else if pmf[i - 1] == 0.0 {
                    Ratio::Infinite
                } else if let Some(f) = ratio_override {
                    Ratio::Finite(f(i))
                } else if let Some(er) = &exact_ratios {
                    match &er[i] {
                        Ratio::Finite(r) => Ratio::Finite(r.to_f64().unwrap_or(f64::NAN)),
                        Ratio::Infinite => Ratio::Infinite,
                    }
                } else {
                    Ratio::Finite(i as f64 * p_i / pmf[i - 1])
                }
            })
            .collect();
        let sup_ratio_nonspecial = (1..pmf.len())
            .filter(|&i| positive(i - 1))
            .map(|i| pmf[i] / pmf[i - 1])
            .fold(0.0, f64::max);

        Ok(Self {
            pmf,
            exact,
            family,
            mean,
            variance,
            ratios,
            exact_ratios,
            special,
            period,
            sup_ratio_nonspecial,
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// `p_i`; zero outside the stored support.
    pub fn p(&self, i: usize) -> f64 {
        self.pmf.get(i).copied().unwrap_or(0.0)
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// Exact rational pmf, when the distribution is rational-backed.
    pub fn exact_pmf(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Exact `p_i`, when rational-backed.
    pub fn p_exact(&self, i: usize) -> Option<BigRational> {
        self.exact.as_ref().map(|e| e.get(i).cloned().unwrap_or_else(BigRational::zero))
    }

    /// Largest offspring count with positive mass.
    pub fn max_support(&self) -> usize {
        self.pmf.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// `R_i = i p_i / p_{i-1}` with `0/0 = 0`; infinite exactly on special integers.
    /// `R_0` is taken to be 0.
    pub fn ratio(&self, i: usize) -> Ratio {
        self.ratios.get(i).copied().unwrap_or(Ratio::Finite(0.0))
    }

    /// Exact counterpart of [`ratio`](Self::ratio), when rational-backed.
    pub fn ratio_exact(&self, i: usize) -> Option<Ratio<BigRational>> {
        self.exact_ratios
            .as_ref()
            .map(|r| r.get(i).cloned().unwrap_or(Ratio::Finite(BigRational::zero())))
    }

    /// Orders `R_i` against `R_j`: exactly when rational-backed, otherwise with
    /// relative tie tolerance [`RATIO_TIE_TOLERANCE`].
    pub fn ratio_cmp(&self, i: usize, j: usize) -> Ordering {
        if let (Some(a), Some(b)) = (self.ratio_exact(i), self.ratio_exact(j)) {
            return match (a, b) {
                (Ratio::Infinite, Ratio::Infinite) => Ordering::Equal,
                (Ratio::Infinite, _) => Ordering::Greater,
                (_, Ratio::Infinite) => Ordering::Less,
                (Ratio::Finite(x), Ratio::Finite(y)) => x.cmp(&y),
            };
        }
        match (self.ratio(i), self.ratio(j)) {
            (Ratio::Infinite, Ratio::Infinite) => Ordering::Equal,
            (Ratio::Infinite, _) => Ordering::Greater,
            (_, Ratio::Infinite) => Ordering::Less,
            (Ratio::Finite(x), Ratio::Finite(y)) => {
                if (x - y).abs() <= RATIO_TIE_TOLERANCE * x.abs().max(y.abs()) {
                    Ordering::Equal
                } else {
                    x.partial_cmp(&y).unwrap_or(Ordering::Equal)
                }
            }
        }
    }

    /// Special integers: `i >= 1` with `p_i > 0` and `p_{i-1} = 0`.
    pub fn special_integers(&self) -> &[usize] {
        &self.special
    }

    pub fn is_special(&self, i: usize) -> bool {
        self.special.binary_search(&i).is_ok()
    }

    /// `sum_{i in S} i p_i`, the limiting success probability when `S` is nonempty.
    pub fn special_mass(&self) -> f64 {
        self.special.iter().map(|&i| i as f64 * self.pmf[i]).sum()
    }

    /// `h = gcd{i >= 1 : p_i > 0}`.
    pub fn period(&self) -> usize {
        self.period
    }

    /// `sup p_i / p_{i-1}` over non-special `i` (finite by construction).
    pub fn sup_ratio_nonspecial(&self) -> f64 {
        self.sup_ratio_nonspecial
    }

    /// `sup_{i >= 1} R_i` over the untruncated law, `None` when infinite
    /// (special integers present, or an unbounded family such as geometric).
    pub fn sup_ratio(&self) -> Option<f64> {
        if !self.special.is_empty() {
            return None;
        }
        match self.family {
            Family::Geometric | Family::PolynomialTail { .. } => None,
            _ => Some(self.ratios.iter().map(Ratio::value).fold(0.0, f64::max)),
        }
    }

    /// Whether a conditional tree of size `n` exists for this law.
    pub fn check_feasible(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::InfeasibleSize { n, reason: "size must be positive".into() });
        }
        if n == 1 {
            return Ok(());
        }
        if !(n - 1).is_multiple_of(self.period) {
            return Err(Error::InfeasibleSize {
                n,
                reason: format!("n - 1 must be a multiple of the period {}", self.period),
            });
        }
        if n <= FEASIBILITY_DP_LIMIT && !self.composition_exists(n) {
            return Err(Error::InfeasibleSize {
                n,
                reason: format!("{} cannot be written as a sum of {n} support values", n - 1),
            });
        }
        Ok(())
    }

    // reachable[s] after j rounds: some j support values sum to s.
    fn composition_exists(&self, n: usize) -> bool {
        let target = n - 1;
        let support: Vec<usize> = (0..=self.max_support().min(target)).filter(|&i| self.pmf[i] > 0.0).collect();
        let mut reachable = vec![false; target + 1];
        reachable[0] = true;
        for _ in 0..n {
            let mut next = vec![false; target + 1];
            for s in (0..=target).filter(|&s| reachable[s]) {
                for &d in &support {
                    if s + d <= target {
                        next[s + d] = true;
                    }
                }
            }
            reachable = next;
        }
        reachable[target]
    }
}

fn check_tail_epsilon(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1e-6 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("tail_epsilon {eps} must lie in (0, 1e-6]")))
    }
}

fn trim_zeros_exact(p: &mut Vec<BigRational>) {
    while p.len() > 1 && p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
}

fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn binomial(k: usize) -> Result<OffspringDistribution> {
    if k < 2 {
        return Err(if k == 1 {
            Error::Degenerate
        } else {
            Error::InvalidParams("binomial requires k >= 2".into())
        });
    }
    let kb = BigInt::from(k);
    let q = BigRational::new(BigInt::from(k - 1), kb.clone());
    let p = BigRational::new(BigInt::one(), kb);
    let mut choose = BigInt::one();
    let pmf = (0..=k)
        .map(|i| {
            if i > 0 {
                choose = &choose * BigInt::from(k - i + 1) / BigInt::from(i);
            }
            BigRational::from_integer(choose.clone()) * pow(&p, i) * pow(&q, k - i)
        })
        .collect();
    OffspringDistribution::build(None, Some(pmf), Family::Binomial { k }, None)
}

fn pow(x: &BigRational, e: usize) -> BigRational {
    (0..e).fold(BigRational::one(), |acc, _| acc * x)
}

fn poisson(eps: f64) -> Result<OffspringDistribution> {
    let mut pmf = vec![(-1.0f64).exp()];
    let mut cumulative = pmf[0];
    let mut i = 1;
    while cumulative < 1.0 - eps {
        let next = pmf[i - 1] / i as f64;
        if next == 0.0 {
            break;
        }
        pmf.push(next);
        cumulative += next;
        i += 1;
    }
    let total: f64 = pmf.iter().sum();
    pmf.iter_mut().for_each(|p| *p /= total);
    // p_i / p_{i-1} = 1/i survives truncation and renormalisation, so R_i = 1.
    OffspringDistribution::build(Some(pmf), None, Family::Poisson, Some(&|_| 1.0))
}

fn geometric(eps: f64) -> Result<OffspringDistribution> {
    // Keep p_0..p_K with 2^{-(K+1)} <= eps.
    let mut k = 0usize;
    while 0.5f64.powi(k as i32 + 1) > eps {
        k += 1;
    }
    let retained = BigRational::one() - pow(&rational(1, 2), k + 1);
    let pmf = (0..=k).map(|i| pow(&rational(1, 2), i + 1) / &retained).collect();
    OffspringDistribution::build(None, Some(pmf), Family::Geometric, None)
}

fn uniform_set(values: &[usize]) -> Result<OffspringDistribution> {
    let mut values = values.to_vec();
    values.sort_unstable();
    values.dedup();
    if values.is_empty() {
        return Err(Error::InvalidParams("uniform-set needs at least one value".into()));
    }
    let max = *values.last().unwrap();
    let mut pmf = vec![BigRational::zero(); max + 1];
    let share = rational(1, values.len() as i64);
    for &v in &values {
        pmf[v] = share.clone();
    }
    OffspringDistribution::build(None, Some(pmf), Family::UniformSet { values }, None)
}

fn polynomial_tail(alpha: f64, eps: f64) -> Result<OffspringDistribution> {
    if alpha.is_nan() || alpha <= 3.0 || !alpha.is_finite() {
        return Err(Error::InvalidParams(format!(
            "polynomial tail needs alpha > 3 for finite variance, got {alpha}"
        )));
    }
    let weight = |i: usize| ((i + 1) as f64).powf(-alpha);
    // Estimate theta for the untruncated law to locate the cutoff.
    const PILOT: usize = 100_000;
    let mut first_moment: f64 = (1..=PILOT).map(|i| i as f64 * weight(i)).sum();
    first_moment += (PILOT as f64 + 1.5).powf(2.0 - alpha) / (alpha - 2.0);
    let theta_estimate = 1.0 / first_moment;
    let cutoff = (theta_estimate / ((alpha - 1.0) * eps)).powf(1.0 / (alpha - 1.0)) - 1.5;
    let cutoff = cutoff.ceil().max(2.0);
    if cutoff > MAX_TRUNCATED_SUPPORT as f64 {
        return Err(Error::InvalidParams(format!(
            "alpha = {alpha} needs support beyond {MAX_TRUNCATED_SUPPORT} for tail mass {eps}"
        )));
    }
    let cutoff = cutoff as usize;

    // theta and p_0 are recomputed on the truncated support so the mean is exactly 1.
    let weights: Vec<f64> = (1..=cutoff).map(weight).collect();
    let mass: f64 = weights.iter().sum();
    let first: f64 = weights.iter().enumerate().map(|(j, w)| (j + 1) as f64 * w).sum();
    let theta = 1.0 / first;
    let mut pmf = Vec::with_capacity(cutoff + 1);
    pmf.push(1.0 - theta * mass);
    pmf.extend(weights.iter().map(|w| theta * w));
    OffspringDistribution::build(Some(pmf), None, Family::PolynomialTail { alpha }, None)
}

/// Parses `"a/b"`, `"0.25"`, `"3"` or `"1.5e-3"` into an exact rational.
pub fn parse_probability(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Config(format!("cannot parse probability {s:?}"));
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(num, den));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits = format!("{int_part}{frac_part}");
    if digits.is_empty() || digits == "-" || digits == "+" {
        return Err(bad());
    }
    let value: BigInt = digits.parse().map_err(|_| bad())?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let factor = num_traits::pow(ten, scale.unsigned_abs() as usize);
    Ok(if scale >= 0 {
        BigRational::from_integer(value * factor)
    } else {
        BigRational::new(value, factor)
    })
}

/// Distribution config: `{"family": "...", "params": {...}}` or `{"pmf": {"0": "1/4", ...}}`.
pub fn from_config(config: &Value) -> Result<OffspringDistribution> {
    let obj = config
        .as_object()
        .ok_or_else(|| Error::Config("distribution config must be a JSON object".into()))?;
    if let Some(pmf) = obj.get("pmf") {
        return pmf_from_json(pmf);
    }
    let name = obj
        .get("family")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Config("expected a \"family\" or \"pmf\" key".into()))?;
    let empty = serde_json::Map::new();
    let params = match obj.get("params") {
        Some(Value::Object(m)) => m,
        Some(Value::Null) | None => &empty,
        Some(_) => return Err(Error::Config("\"params\" must be an object".into())),
    };
    let eps = match obj.get("tail_epsilon").or_else(|| params.get("tail_epsilon")) {
        Some(v) => v.as_f64().ok_or_else(|| Error::Config("tail_epsilon must be a number".into()))?,
        None => DEFAULT_TAIL_EPSILON,
    };
    let family = family_from_name(name, params)?;
    OffspringDistribution::make_family(&family, eps)
}

fn family_from_name(name: &str, params: &serde_json::Map<String, Value>) -> Result<Family> {
    let int_param = |key: &str| {
        params
            .get(key)
            .and_then(Value::as_u64)
            .map(|v| v as usize)
            .ok_or_else(|| Error::Config(format!("family {name} needs integer parameter {key:?}")))
    };
    Ok(match name {
        "binomial" | "k-ary" => Family::Binomial { k: int_param("k")? },
        "poisson" | "cayley" => Family::Poisson,
        "geometric" | "planted-plane" => Family::Geometric,
        "uniform-set" | "uniform" => {
            let values = params
                .get("values")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Config("uniform-set needs a \"values\" array".into()))?
                .iter()
                .map(|v| v.as_u64().map(|x| x as usize))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::Config("uniform-set values must be nonnegative integers".into()))?;
            Family::UniformSet { values }
        }
        "full-binary" => Family::UniformSet { values: vec![0, 2] },
        "motzkin" => Family::UniformSet { values: vec![0, 1, 2] },
        "polynomial-tail" => Family::PolynomialTail {
            alpha: params
                .get("alpha")
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::Config("polynomial-tail needs numeric \"alpha\"".into()))?,
        },
        other => return Err(Error::Config(format!("unknown family {other:?}"))),
    })
}

fn pmf_from_json(pmf: &Value) -> Result<OffspringDistribution> {
    let entries: BTreeMap<usize, &Value> = match pmf {
        Value::Object(m) => m
            .iter()
            .map(|(k, v)| {
                k.trim()
                    .parse::<usize>()
                    .map(|i| (i, v))
                    .map_err(|_| Error::Config(format!("pmf key {k:?} is not a degree")))
            })
            .collect::<Result<_>>()?,
        Value::Array(a) => a.iter().enumerate().collect(),
        _ => return Err(Error::Config("pmf must be an object or array".into())),
    };
    let len = entries.keys().next_back().map_or(0, |m| m + 1);
    if entries.values().all(|v| v.is_string()) {
        let mut exact = vec![BigRational::zero(); len];
        for (i, v) in entries {
            exact[i] = parse_probability(v.as_str().unwrap())?;
        }
        OffspringDistribution::from_exact_pmf(exact)
    } else {
        let mut values = vec![0.0; len];
        for (i, v) in entries {
            values[i] = match v {
                Value::Number(x) => x.as_f64().unwrap_or(f64::NAN),
                Value::String(s) => parse_probability(s)?.to_f64().unwrap_or(f64::NAN),
                _ => return Err(Error::Config("pmf values must be numbers or strings".into())),
            };
        }
        OffspringDistribution::from_pmf(values)
    }
}

/// Config JSON describing this distribution (explicit pmfs are written as
/// rational strings when exact).
pub fn to_config(dist: &OffspringDistribution) -> Value {
    use serde_json::json;
    match dist.family() {
        Family::Binomial { k } => json!({"family": "binomial", "params": {"k": k}}),
        Family::Poisson => json!({"family": "poisson"}),
        Family::Geometric => json!({"family": "geometric"}),
        Family::UniformSet { values } => json!({"family": "uniform-set", "params": {"values": values}}),
        Family::PolynomialTail { alpha } => json!({"family": "polynomial-tail", "params": {"alpha": alpha}}),
        Family::Explicit => {
            let mut map = serde_json::Map::new();
            for (i, p) in dist.pmf().iter().enumerate() {
                let v = match dist.p_exact(i) {
                    Some(r) => Value::String(r.to_string()),
                    None => json!(p),
                };
                map.insert(i.to_string(), v);
            }
            json!({ "pmf": map })
        }
    }
}
