//! Radial harmonic analysis on `V` and its dual.
//!
//! A [`RadialSequence`] assigns `φ_n` to the dual shell `V_n^⊥ ∖ V_{n-1}^⊥`;
//! its transform is the [`RadialFunction`] `F(l) = Σ_{n≤l} (φ_n − φ_{n+1}) M(n)`
//! on the shells `V_l ∖ V_{l+1}`. Individual characters are never built: all
//! quantities here depend on a character only through its level.

use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::rational::{format_rational, parse_rational};
use crate::real::{Precision, Real};
use crate::tower::{haar_ball, index_M, shell_measure, ExpoScalar, TowerProfile};

/// Scalars that can populate radial data: exact q-power sums or floats.
pub trait RadialScalar: Clone + fmt::Debug {
    fn zero_like(&self) -> Self;
    fn plus(&self, rhs: &Self) -> Self;
    fn minus(&self, rhs: &Self) -> Self;
    /// Multiplication by an exact weight such as `M(n)` or `μ(V_n)`.
    fn weighted(&self, weight: &ExpoScalar) -> Self;
    fn to_real(&self, prec: Precision) -> Real;
}

impl RadialScalar for ExpoScalar {
    fn zero_like(&self) -> Self {
        ExpoScalar::zero(self.base())
    }
    fn plus(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn minus(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn weighted(&self, weight: &ExpoScalar) -> Self {
        self * weight
    }
    fn to_real(&self, prec: Precision) -> Real {
        ExpoScalar::to_real(self, prec)
    }
}

impl RadialScalar for Real {
    fn zero_like(&self) -> Self {
        Real::zero(self.precision())
    }
    fn plus(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn minus(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn weighted(&self, weight: &ExpoScalar) -> Self {
        self * &weight.to_real(self.precision())
    }
    fn to_real(&self, _prec: Precision) -> Real {
        self.clone()
    }
}

/// Dual-side radial data `φ_0, …, φ_N`; entries beyond `N` are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialSequence<S> {
    values: Vec<S>,
}

/// Primal-side radial data `F(0), …, F(Lf)`, with `F(Lf)` the constant
/// value on all of `V_{Lf}`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialFunction<S> {
    values: Vec<S>,
}

impl<S: RadialScalar> RadialSequence<S> {
    pub fn new(values: Vec<S>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySequence);
        }
        Ok(RadialSequence { values })
    }

    /// Highest stored level `N`.
    pub fn support(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    /// `φ_n`, zero past the stored range.
    pub fn get(&self, n: usize) -> S {
        self.values
            .get(n)
            .cloned()
            .unwrap_or_else(|| self.values[0].zero_like())
    }
}

impl<S: RadialScalar> RadialFunction<S> {
    pub fn new(values: Vec<S>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySequence);
        }
        Ok(RadialFunction { values })
    }

    pub fn resolution(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    /// Value on the shell `V_l ∖ V_{l+1}` (or on `V_{Lf}` for `l ≥ Lf`).
    pub fn at_level(&self, l: usize) -> &S {
        &self.values[l.min(self.resolution())]
    }
}

impl RadialSequence<ExpoScalar> {
    pub fn from_rationals(profile: &TowerProfile, values: &[BigRational]) -> Result<Self> {
        Self::new(values.iter().map(|v| profile.scalar(v.clone())).collect())
    }

    /// Reads a JSON array of rational (`"num/den"`) or decimal strings.
    pub fn from_json(profile: &TowerProfile, json: &Value) -> Result<Self> {
        Self::new(scalars_from_json(profile, json)?)
    }

    pub fn to_json(&self, prec: Precision) -> Value {
        scalars_to_json(&self.values, prec)
    }
}

impl RadialFunction<ExpoScalar> {
    pub fn from_json(profile: &TowerProfile, json: &Value) -> Result<Self> {
        Self::new(scalars_from_json(profile, json)?)
    }

    pub fn to_json(&self, prec: Precision) -> Value {
        scalars_to_json(&self.values, prec)
    }
}

fn scalars_from_json(profile: &TowerProfile, json: &Value) -> Result<Vec<ExpoScalar>> {
    let items = json
        .as_array()
        .ok_or_else(|| Error::Parse("radial data must be a JSON array".into()))?;
    items
        .iter()
        .map(|item| match item {
            Value::String(s) => Ok(profile.scalar(parse_rational(s)?)),
            Value::Number(n) => Ok(profile.scalar(parse_rational(&n.to_string())?)),
            other => Err(Error::Parse(format!("unexpected radial entry {other}"))),
        })
        .collect()
}

/// Rational entries as `"num/den"`, irrational ones as decimal strings.
pub fn scalar_to_string(value: &ExpoScalar, prec: Precision) -> String {
    match value.as_rational() {
        Some(r) => format_rational(&r),
        None => value.to_real(prec).to_sci_string(prec.digits() as usize),
    }
}

fn scalars_to_json(values: &[ExpoScalar], prec: Precision) -> Value {
    Value::Array(
        values
            .iter()
            .map(|v| Value::String(scalar_to_string(v, prec)))
            .collect(),
    )
}

/// Bookkeeping for one dual shell `V_n^⊥ ∖ V_{n-1}^⊥`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualShell {
    pub level: usize,
    /// `M(n) − M(n−1)`, with `M(−1) = 0`.
    pub multiplicity: BigUint,
    /// Every character in `V_n^⊥` has ramification invariant at most this.
    pub r_bound: BigRational,
}

pub fn dual_shells(profile: &TowerProfile, upto: usize) -> Result<Vec<DualShell>> {
    profile.level(upto)?;
    let mut prev = BigUint::zero();
    (0..=upto)
        .map(|n| {
            let m = profile.index_integer(profile.level(n)?);
            let shell = DualShell {
                level: n,
                multiplicity: &m - &prev,
                r_bound: BigRational::from_integer(n.into()),
            };
            prev = m;
            Ok(shell)
        })
        .collect()
}

fn indices(profile: &TowerProfile, upto: usize) -> Result<Vec<ExpoScalar>> {
    (0..=upto).map(|n| index_M(profile, n)).collect()
}

/// `F(l) = Σ_{n=0}^{l} (φ_n − φ_{n+1}) q^{n m_n}` for `l = 0..=N`.
pub fn radial_fourier<S: RadialScalar>(
    profile: &TowerProfile,
    phi: &RadialSequence<S>,
) -> Result<RadialFunction<S>> {
    let top = phi.support();
    let m = indices(profile, top)?;
    let mut acc = phi.values[0].zero_like();
    let mut out = Vec::with_capacity(top + 1);
    for (l, weight) in m.iter().enumerate() {
        let step = phi.get(l).minus(&phi.get(l + 1)).weighted(weight);
        acc = acc.plus(&step);
        out.push(acc.clone());
    }
    RadialFunction::new(out)
}

/// Recovers the dual coefficients: `φ_n = Σ_{l=n}^{Lf} (F(l) − F(l−1)) / M(l)`
/// with `F(−1) = 0`, and `φ_n = 0` beyond `Lf`.
pub fn inverse_radial_fourier<S: RadialScalar>(
    profile: &TowerProfile,
    f: &RadialFunction<S>,
) -> Result<RadialSequence<S>> {
    let top = f.resolution();
    profile.level(top)?;
    let zero = f.values[0].zero_like();
    let mut acc = zero.clone();
    let mut out = vec![zero.clone(); top + 1];
    for n in (0..=top).rev() {
        let below = if n == 0 { zero.clone() } else { f.values[n - 1].clone() };
        acc = acc.plus(&f.values[n].minus(&below).weighted(&haar_ball(profile, n)?));
        out[n] = acc.clone();
    }
    RadialSequence::new(out)
}

pub(crate) fn check_alpha(alpha: &BigRational) -> Result<()> {
    if alpha.is_positive() {
        Ok(())
    } else {
        Err(Error::NonPositiveAlpha(alpha.clone()))
    }
}

pub(crate) fn check_time(t: &BigRational) -> Result<()> {
    if t.is_negative() {
        Err(Error::NegativeTime(format_rational(t)))
    } else {
        Ok(())
    }
}

/// `φ_n^{(α)} = q^{α n m_n}` for `n ≥ 1`, `0` for `n = 0`, for any rational `α`.
pub fn symbol(profile: &TowerProfile, alpha: &BigRational, n: usize) -> Result<ExpoScalar> {
    let level = profile.level(n)?;
    if n == 0 {
        return Ok(profile.zero());
    }
    Ok(profile.q_power(&(alpha * BigRational::from_integer(profile.nm(level)))))
}

/// Eigenvalue of `D^α` on the dual shell of level `n`.
pub fn eigenvalue(profile: &TowerProfile, alpha: &BigRational, n: usize) -> Result<ExpoScalar> {
    check_alpha(alpha)?;
    symbol(profile, alpha, n)
}

/// The symbol sequence truncated after level `top`.
pub fn symbol_sequence(
    profile: &TowerProfile,
    alpha: &BigRational,
    top: usize,
) -> Result<RadialSequence<ExpoScalar>> {
    RadialSequence::new((0..=top).map(|n| symbol(profile, alpha, n)).collect::<Result<_>>()?)
}

/// Jump density `F^{(α)}(l) = −q^α + Σ_{n=1}^{l} (q^{α n m_n} − q^{α(n+1) m_{n+1}}) q^{n m_n}`.
pub fn jump_density(profile: &TowerProfile, alpha: &BigRational, l: usize) -> Result<ExpoScalar> {
    profile.level(l + 1)?;
    let mut acc = -profile.q_power(alpha);
    for n in 1..=l {
        let bracket = symbol(profile, alpha, n)? - symbol(profile, alpha, n + 1)?;
        acc = acc + bracket * index_M(profile, n)?;
    }
    Ok(acc)
}

/// `e^{−t φ_n^{(α)}}` for `n = 0..=upto`.
fn decay_factors(
    profile: &TowerProfile,
    alpha: &BigRational,
    t: &BigRational,
    upto: usize,
    prec: Precision,
) -> Result<Vec<Real>> {
    let t = Real::from_rational(t, prec);
    (0..=upto)
        .map(|n| {
            let phi = symbol(profile, alpha, n)?.to_real(prec);
            Ok((-(&t * &phi)).exp())
        })
        .collect()
}

/// Heat kernel `G_α(t, l) = Σ_{n=0}^{l} (e^{−tφ_n} − e^{−tφ_{n+1}}) q^{n m_n}`
/// on the shell `V_l ∖ V_{l+1}`.
pub fn heat_kernel(
    profile: &TowerProfile,
    alpha: &BigRational,
    t: &BigRational,
    l: usize,
    prec: Precision,
) -> Result<Real> {
    check_alpha(alpha)?;
    check_time(t)?;
    profile.level(l + 1)?;
    let decay = decay_factors(profile, alpha, t, l + 1, prec)?;
    kernel_from_decay(profile, &decay, l, prec)
}

fn kernel_from_decay(profile: &TowerProfile, decay: &[Real], l: usize, prec: Precision) -> Result<Real> {
    let mut acc = Real::zero(prec);
    for n in 0..=l {
        let bracket = &decay[n] - &decay[n + 1];
        acc = acc + bracket * index_M(profile, n)?.to_real(prec);
    }
    Ok(acc)
}

/// `P(ξ_α(t) ∈ V_n) = μ(V_n) Σ_{j=0}^{n} (M(j) − M(j−1)) e^{−tφ_j}`.
pub fn ball_probability(
    profile: &TowerProfile,
    alpha: &BigRational,
    t: &BigRational,
    n: usize,
    prec: Precision,
) -> Result<Real> {
    check_alpha(alpha)?;
    check_time(t)?;
    profile.level(n)?;
    let decay = decay_factors(profile, alpha, t, n, prec)?;
    let shells = dual_shells(profile, n)?;
    let mut acc = Real::zero(prec);
    for (d, shell) in decay.iter().zip(&shells) {
        let mult = Real::from_bigint(&shell.multiplicity.clone().into(), prec);
        acc = acc + d * &mult;
    }
    Ok(acc * haar_ball(profile, n)?.to_real(prec))
}

/// Applies `e^{−tD^α}` to a locally constant radial function through its
/// dual coefficients. The resolution is preserved.
pub fn apply_semigroup<S: RadialScalar>(
    profile: &TowerProfile,
    alpha: &BigRational,
    t: &BigRational,
    u: &RadialFunction<S>,
    prec: Precision,
) -> Result<RadialFunction<Real>> {
    check_alpha(alpha)?;
    check_time(t)?;
    let coeffs = inverse_radial_fourier(profile, u)?;
    let decay = decay_factors(profile, alpha, t, coeffs.support(), prec)?;
    let damped = coeffs
        .values()
        .iter()
        .zip(&decay)
        .map(|(c, d)| c.to_real(prec) * d)
        .collect();
    radial_fourier(profile, &RadialSequence::new(damped)?)
}

/// Outcome of the truncated check `Σ_l G_α(t, l) μ(V_l ∖ V_{l+1}) = 1`.
#[derive(Clone, Debug)]
pub struct NormalizationCheck {
    /// Levels `l < truncation` are summed shell by shell; `V_truncation` is
    /// taken as one ball with the kernel frozen at its level value.
    pub truncation: usize,
    pub sum: Real,
    /// First omitted series term `e^{−tφ_{L+1}} M(L+1)`.
    pub first_omitted: Real,
    /// Bound on `|Σ_{all l} − sum|`: twice the first omitted term times `μ(V_L)`.
    pub tail_bound: Real,
}

/// Truncates the normalization series at the first level `L` with
/// `e^{−tφ_{L+1}} M(L+1) < ε/2` and successive-term ratio below `1/2`.
pub fn kernel_normalization(
    profile: &TowerProfile,
    alpha: &BigRational,
    t: &BigRational,
    epsilon: f64,
    prec: Precision,
) -> Result<NormalizationCheck> {
    check_alpha(alpha)?;
    check_time(t)?;
    if t.is_zero() {
        return Err(Error::InvalidArgument(
            "the kernel at t = 0 is a point mass; normalization needs t > 0".into(),
        ));
    }
    let depth = profile.depth();
    let decay = decay_factors(profile, alpha, t, depth, prec)?;
    let terms: Vec<Real> = (0..=depth)
        .map(|n| Ok(&decay[n] * &index_M(profile, n)?.to_real(prec)))
        .collect::<Result<_>>()?;
    let half_eps = Real::from_f64(epsilon / 2.0, prec);
    let two = Real::from_f64(2.0, prec);
    let truncation = (0..depth)
        .find(|&l| terms[l + 1] < half_eps && &terms[l + 1] * &two < terms[l])
        .ok_or_else(|| Error::TruncationNotReached {
            depth,
            t: format_rational(t),
        })?;
    let mut sum = Real::zero(prec);
    for l in 0..truncation {
        let g = kernel_from_decay(profile, &decay, l, prec)?;
        sum = sum + g * shell_measure(profile, l)?.to_real(prec);
    }
    let ball = haar_ball(profile, truncation)?.to_real(prec);
    sum = sum + kernel_from_decay(profile, &decay, truncation, prec)? * &ball;
    let first_omitted = terms[truncation + 1].clone();
    let tail_bound = &(&first_omitted * &two) * &ball;
    Ok(NormalizationCheck {
        truncation,
        sum,
        first_omitted,
        tail_bound,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Summability {
    L1,
    L2,
}

impl Summability {
    fn power(self) -> u32 {
        match self {
            Summability::L1 => 1,
            Summability::L2 => 2,
        }
    }
}

/// Where the dual-side sequence comes from.
#[derive(Clone, Debug)]
pub enum SymbolSource<'a> {
    Finite(&'a RadialSequence<ExpoScalar>),
    /// The power symbol `φ_n = q^{α n m_n}` (`φ_0 = 0`), unbounded in `n`.
    Power(BigRational),
}

#[derive(Clone, Debug)]
pub struct SummabilityReport {
    /// `Σ_{n≤N} |φ_n|^k q^{n m_n}` for each available `N`.
    pub partial_sums: Vec<Real>,
    pub summable: bool,
}

/// `f ∈ l_1(V')` iff `Σ |φ_n| q^{n m_n} < ∞`; `l_2` with `|φ_n|^2`.
pub fn summability_check(
    profile: &TowerProfile,
    source: &SymbolSource<'_>,
    mode: Summability,
    prec: Precision,
) -> Result<SummabilityReport> {
    let k = mode.power();
    let (values, summable) = match source {
        SymbolSource::Finite(seq) => {
            profile.level(seq.support())?;
            (seq.values().to_vec(), true)
        }
        SymbolSource::Power(alpha) => {
            let values = (0..=profile.depth())
                .map(|n| symbol(profile, alpha, n))
                .collect::<Result<Vec<_>>>()?;
            // Terms are q^{(kα + 1) n m_n} with n m_n → ∞.
            let exponent = alpha * BigRational::from_integer(k.into()) + BigRational::from_integer(1.into());
            (values, exponent.is_negative())
        }
    };
    let mut acc = Real::zero(prec);
    let mut partial_sums = Vec::with_capacity(values.len());
    for (n, v) in values.iter().enumerate() {
        let mut magnitude = v.abs();
        if k == 2 {
            magnitude = &magnitude * &magnitude;
        }
        acc = acc + (magnitude * index_M(profile, n)?).to_real(prec);
        partial_sums.push(acc.clone());
    }
    Ok(SummabilityReport {
        partial_sums,
        summable,
    })
}
