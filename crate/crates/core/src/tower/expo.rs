//! Exact sums of rational multiples of rational powers of a prime.
//!
//! Every quantity polynomial in `q^{a + αb}` (with `q = p^κ` and rational `α`)
//! lives here. Terms are stored over the prime `p` with the exponent reduced
//! to its fractional part in `[0, 1)`. Because `x^d - p` is irreducible, the
//! powers `p^{k/d}` for `0 <= k < d` are linearly independent over the
//! rationals, so two values are equal exactly when their canonical term maps
//! are equal.
//!
//! Coefficients are kept as `(num / den) · p^shift` with `p` dividing neither
//! `num` nor `den`. Tower quantities carry integer powers of `p` with hundreds
//! of thousands of digits; holding those in the shift keeps denominators
//! small, so every gcd taken here pairs a large number with a small one.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

use crate::rational::{floor_and_fraction, format_rational};
use crate::real::{Precision, Real};

/// A nonzero rational `(num / den) · p^shift` in lowest terms, `den > 0`,
/// with `p` dividing neither `num` nor `den`.
#[derive(Clone, PartialEq, Eq, Hash)]
struct Coeff {
    num: BigInt,
    den: BigInt,
    shift: i64,
}

/// Euclid with remainders: against a small operand the first step already
/// reduces the large one.
fn gcd(a: &BigInt, b: &BigInt) -> BigInt {
    let (mut a, mut b) = (a.abs(), b.abs());
    if a < b {
        std::mem::swap(&mut a, &mut b);
    }
    while !b.is_zero() {
        let r = &a % &b;
        a = b;
        b = r;
    }
    a
}

fn strip_prime(x: &mut BigInt, p: u64) -> i64 {
    if p == 2 {
        let tz = x.trailing_zeros().unwrap_or(0);
        *x >>= tz;
        return tz as i64;
    }
    let p = BigInt::from(p);
    let mut count = 0;
    loop {
        let (q, r) = x.div_rem(&p);
        if !r.is_zero() {
            return count;
        }
        *x = q;
        count += 1;
    }
}

fn prime_power(p: u64, e: i64) -> BigInt {
    debug_assert!(e >= 0);
    if p == 2 {
        BigInt::one() << (e as u64)
    } else {
        Pow::pow(BigInt::from(p), e as u64)
    }
}

impl Coeff {
    fn normalized(p: u64, mut num: BigInt, mut den: BigInt, mut shift: i64) -> Option<Coeff> {
        assert!(!den.is_zero(), "zero denominator");
        if num.is_zero() {
            return None;
        }
        if den.sign() == Sign::Minus {
            num = -num;
            den = -den;
        }
        shift += strip_prime(&mut num, p);
        shift -= strip_prime(&mut den, p);
        if !den.is_one() {
            let g = gcd(&num, &den);
            if !g.is_one() {
                num /= &g;
                den /= &g;
            }
        }
        Some(Coeff { num, den, shift })
    }

    fn from_rational(p: u64, value: &BigRational, shift: i64) -> Option<Coeff> {
        Self::normalized(p, value.numer().clone(), value.denom().clone(), shift)
    }

    fn mul(&self, other: &Coeff) -> Coeff {
        let cross = |n: &BigInt, d: &BigInt| if d.is_one() { BigInt::one() } else { gcd(n, d) };
        let g1 = cross(&self.num, &other.den);
        let g2 = cross(&other.num, &self.den);
        Coeff {
            num: (&self.num / &g1) * (&other.num / &g2),
            den: (&self.den / &g2) * (&other.den / &g1),
            shift: self.shift + other.shift,
        }
    }

    fn add(&self, other: &Coeff, p: u64) -> Option<Coeff> {
        let shift = self.shift.min(other.shift);
        let lift = |c: &Coeff| {
            let k = c.shift - shift;
            if k == 0 {
                c.num.clone()
            } else {
                &c.num * prime_power(p, k)
            }
        };
        let (a, b) = (lift(self), lift(other));
        if self.den == other.den {
            Self::normalized(p, a + b, self.den.clone(), shift)
        } else {
            Self::normalized(p, a * &other.den + b * &self.den, &self.den * &other.den, shift)
        }
    }

    fn neg(&self) -> Coeff {
        Coeff {
            num: -&self.num,
            den: self.den.clone(),
            shift: self.shift,
        }
    }

    fn is_negative(&self) -> bool {
        self.num.is_negative()
    }

    fn to_rational(&self, p: u64) -> BigRational {
        if self.shift >= 0 {
            BigRational::new_raw(&self.num * prime_power(p, self.shift), self.den.clone())
        } else {
            BigRational::new_raw(self.num.clone(), &self.den * prime_power(p, -self.shift))
        }
    }

    /// `(num / den) · p^{shift + frac}`.
    fn to_real(&self, p: u64, frac: &BigRational, prec: Precision) -> Real {
        let mut value = Real::from_bigint(&self.num, prec);
        if !self.den.is_one() {
            value = &value / &Real::from_bigint(&self.den, prec);
        }
        let base = Real::from_bigint(&BigInt::from(p), prec);
        if self.shift != 0 {
            value = &value * &base.powi(self.shift);
        }
        if !frac.is_zero() {
            value = &value * &base.pow(&Real::from_rational(frac, prec));
        }
        value
    }
}

/// `Σ coeff · p^{exponent}` with pairwise distinct exponents in `[0, 1)` and
/// nonzero coefficients. The empty sum is zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExpoScalar {
    base: u64,
    terms: BTreeMap<BigRational, Coeff>,
}

impl ExpoScalar {
    pub fn zero(base: u64) -> Self {
        assert!(base >= 2, "ExpoScalar base must be at least 2");
        ExpoScalar {
            base,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(base: u64) -> Self {
        Self::from_rational(base, BigRational::one())
    }

    pub fn from_rational(base: u64, value: BigRational) -> Self {
        let mut out = Self::zero(base);
        out.add_term(value, BigRational::zero());
        out
    }

    pub fn from_integer(base: u64, value: impl Into<BigInt>) -> Self {
        Self::from_rational(base, BigRational::from_integer(value.into()))
    }

    /// `base^exponent` exactly.
    pub fn power(base: u64, exponent: &BigRational) -> Self {
        let mut out = Self::zero(base);
        out.add_term(BigRational::one(), exponent.clone());
        out
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Canonical `(coefficient, exponent)` pairs, exponents ascending in `[0, 1)`.
    pub fn terms(&self) -> impl Iterator<Item = (BigRational, &BigRational)> + '_ {
        self.terms.iter().map(|(e, c)| (c.to_rational(self.base), e))
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// The value as a rational, if it has no irrational part.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&BigRational::zero()).map(|c| c.to_rational(self.base)),
            _ => None,
        }
    }

    fn add_term(&mut self, coeff: BigRational, exponent: BigRational) {
        let (whole, frac) = floor_and_fraction(&exponent);
        let shift = whole.to_i64().expect("power exponent beyond 64 bits");
        if let Some(c) = Coeff::from_rational(self.base, &coeff, shift) {
            self.accumulate(frac, c);
        }
    }

    fn accumulate(&mut self, frac: BigRational, coeff: Coeff) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(frac) {
            Entry::Vacant(v) => {
                v.insert(coeff);
            }
            Entry::Occupied(mut o) => match o.get().add(&coeff, self.base) {
                Some(sum) => *o.get_mut() = sum,
                None => {
                    o.remove();
                }
            },
        }
    }

    fn check_base(&self, other: &Self) {
        assert_eq!(
            self.base, other.base,
            "ExpoScalar arithmetic across different bases"
        );
    }

    /// Multiplies by `base^exponent` without building an intermediate scalar.
    pub fn scale_by_power(&self, exponent: &BigRational) -> Self {
        &ExpoScalar::power(self.base, exponent) * self
    }

    pub fn scale(&self, factor: &BigRational) -> Self {
        &ExpoScalar::from_rational(self.base, factor.clone()) * self
    }

    /// Evaluation at `prec` together with an absolute error bound. Terms are
    /// summed from the smallest magnitude up.
    fn evaluate_with_bound(&self, prec: Precision) -> (Real, Real) {
        let mut terms: Vec<(f64, Real)> = self
            .terms
            .iter()
            .map(|(e, c)| {
                let value = c.to_real(self.base, e, prec);
                (value.log2_magnitude().unwrap_or(f64::NEG_INFINITY), value)
            })
            .collect();
        terms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        let mut sum = Real::zero(prec);
        let mut abs_sum = Real::zero(prec);
        for (_, t) in &terms {
            abs_sum = &abs_sum + &t.abs();
            sum = &sum + t;
        }
        // Each term carries conversion, a repeated-squaring power, a
        // fractional power and products; each addition adds one more ulp
        // relative to the running absolute sum.
        let ulps = BigInt::from(160 + 2 * terms.len());
        let eps = Real::from_rational(
            &BigRational::new(ulps, BigInt::one() << (prec.bits() - 1)),
            prec,
        );
        (sum, &abs_sum * &eps)
    }

    /// Floating evaluation at `prec`. Precision is raised internally until the
    /// sign of the result is certain, so positive exact values always
    /// evaluate positive.
    pub fn to_real(&self, prec: Precision) -> Real {
        if self.is_zero() {
            return Real::zero(prec);
        }
        if self.terms.len() == 1 {
            let (e, c) = self.terms.iter().next().expect("one term");
            return c.to_real(self.base, e, prec);
        }
        let mut working = prec;
        for _ in 0..12 {
            let (value, bound) = self.evaluate_with_bound(working);
            if value.abs() > bound {
                return value;
            }
            working = working.scaled(2);
        }
        unreachable!("a nonzero canonical ExpoScalar always separates from zero")
    }

    pub fn to_f64(&self) -> f64 {
        self.to_real(Precision::default()).to_f64()
    }

    /// Exact sign, decided by adaptive-precision evaluation.
    pub fn signum(&self) -> Ordering {
        match self.terms.len() {
            0 => Ordering::Equal,
            1 => {
                let c = self.terms.values().next().expect("one term");
                if c.is_negative() {
                    Ordering::Less
                } else {
                    Ordering::Greater
                }
            }
            _ => {
                if self.to_real(Precision::from_digits(20)).is_negative() {
                    Ordering::Less
                } else {
                    Ordering::Greater
                }
            }
        }
    }

    pub fn abs(&self) -> Self {
        if self.signum() == Ordering::Less {
            -self
        } else {
            self.clone()
        }
    }
}

impl PartialOrd for ExpoScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Orders by numeric value.
impl Ord for ExpoScalar {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum()
    }
}

impl Add<&ExpoScalar> for &ExpoScalar {
    type Output = ExpoScalar;
    fn add(self, rhs: &ExpoScalar) -> ExpoScalar {
        self.check_base(rhs);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.accumulate(e.clone(), c.clone());
        }
        out
    }
}

impl Sub<&ExpoScalar> for &ExpoScalar {
    type Output = ExpoScalar;
    fn sub(self, rhs: &ExpoScalar) -> ExpoScalar {
        self.check_base(rhs);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.accumulate(e.clone(), c.neg());
        }
        out
    }
}

impl Mul<&ExpoScalar> for &ExpoScalar {
    type Output = ExpoScalar;
    fn mul(self, rhs: &ExpoScalar) -> ExpoScalar {
        self.check_base(rhs);
        let mut out = ExpoScalar::zero(self.base);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let mut c = c1.mul(c2);
                let mut e = e1 + e2;
                if e >= BigRational::one() {
                    e -= BigRational::one();
                    c.shift += 1;
                }
                out.accumulate(e, c);
            }
        }
        out
    }
}

impl Neg for &ExpoScalar {
    type Output = ExpoScalar;
    fn neg(self) -> ExpoScalar {
        ExpoScalar {
            base: self.base,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.neg())).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($trait:ident, $method:ident) => {
        impl $trait<ExpoScalar> for ExpoScalar {
            type Output = ExpoScalar;
            fn $method(self, rhs: ExpoScalar) -> ExpoScalar {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&ExpoScalar> for ExpoScalar {
            type Output = ExpoScalar;
            fn $method(self, rhs: &ExpoScalar) -> ExpoScalar {
                (&self).$method(rhs)
            }
        }
        impl $trait<ExpoScalar> for &ExpoScalar {
            type Output = ExpoScalar;
            fn $method(self, rhs: ExpoScalar) -> ExpoScalar {
                self.$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for ExpoScalar {
    type Output = ExpoScalar;
    fn neg(self) -> ExpoScalar {
        -&self
    }
}

/// Terms print as `num/den*p^(exponent)`, keeping huge powers symbolic.
impl fmt::Display for ExpoScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            let mantissa = BigRational::new_raw(c.num.clone(), c.den.clone());
            let exponent = e + BigRational::from_integer(c.shift.into());
            if exponent.is_zero() {
                write!(f, "{}", format_rational(&mantissa))?;
            } else {
                write!(f, "{}*{}^({})", format_rational(&mantissa), self.base, format_rational(&exponent))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for ExpoScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExpoScalar[{self}]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn integer_parts_fold_into_coefficients() {
        let a = ExpoScalar::power(2, &r(1, 1)).scale(&r(2, 1));
        let b = ExpoScalar::power(2, &r(2, 1));
        assert_eq!(a, b);
        assert_eq!(a.as_rational(), Some(r(4, 1)));
        let c = ExpoScalar::power(2, &r(27, 2));
        assert_eq!(c, ExpoScalar::power(2, &r(1, 2)).scale(&r(8192, 1)));
    }

    #[test]
    fn cancellation_gives_canonical_zero() {
        let s = ExpoScalar::power(3, &r(5, 4));
        let z = &s - &s;
        assert!(z.is_zero());
        assert_eq!(z, ExpoScalar::zero(3));
        assert_eq!(z.term_count(), 0);
    }

    #[test]
    fn sqrt_two_squared_is_two() {
        let s = ExpoScalar::power(2, &r(1, 2));
        assert_eq!(&s * &s, ExpoScalar::from_integer(2, 2));
        assert!((s.to_f64() - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn near_cancellation_keeps_sign() {
        // 2^{1/2} * 2^60 - floor(sqrt(2) * 2^60): tiny positive remainder.
        let big = ExpoScalar::power(2, &r(121, 2));
        let floor = BigInt::parse_bytes(b"1630477228166597776", 10).unwrap();
        let diff = &big - &ExpoScalar::from_integer(2, floor);
        assert_eq!(diff.signum(), Ordering::Greater);
        assert!(diff.to_real(Precision::default()).is_positive());
        assert_eq!((-diff).signum(), Ordering::Less);
    }

    #[test]
    fn huge_powers_stay_cheap() {
        let big = ExpoScalar::power(2, &r(649_541, 2));
        let diff = &big - &ExpoScalar::power(2, &r(649_537, 2));
        assert_eq!(diff, ExpoScalar::power(2, &r(649_537, 2)).scale(&r(3, 1)));
        assert_eq!(diff.signum(), Ordering::Greater);
        let third = ExpoScalar::power(3, &r(-200_001, 3));
        let sum = &third + &ExpoScalar::from_rational(3, r(1, 7));
        assert!((sum.to_f64() - 1.0 / 7.0).abs() < 1e-15);
        assert_eq!(format!("{}", ExpoScalar::power(2, &r(27, 2))), "1/1*2^(27/2)");
    }

    #[test]
    fn ordering_is_numeric() {
        let a = ExpoScalar::power(2, &r(1, 2));
        let b = ExpoScalar::from_rational(2, r(3, 2));
        assert!(a < b);
        assert!(ExpoScalar::power(2, &r(27, 2)) > ExpoScalar::from_integer(2, 11585));
    }

    fn arb_scalar() -> impl Strategy<Value = ExpoScalar> {
        prop::collection::vec((-20i64..20, 1i64..6, -6i64..6, 1i64..4), 0..5).prop_map(|ts| {
            let mut s = ExpoScalar::zero(2);
            for (cn, cd, en, ed) in ts {
                s = &s + &ExpoScalar::power(2, &r(en, ed)).scale(&r(cn, cd));
            }
            s
        })
    }

    proptest! {
        #[test]
        fn addition_is_associative(a in arb_scalar(), b in arb_scalar(), c in arb_scalar()) {
            prop_assert_eq!((&a + &b) + &c, &a + &(&b + &c));
        }

        #[test]
        fn multiplication_distributes(a in arb_scalar(), b in arb_scalar(), c in arb_scalar()) {
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        }

        #[test]
        fn canonicalisation_is_idempotent(a in arb_scalar()) {
            let mut again = ExpoScalar::zero(2);
            for (c, e) in a.terms() {
                again.add_term(c, e.clone());
            }
            prop_assert_eq!(&again, &a);
            prop_assert!(a.terms().all(|(c, e)| !c.is_zero() && e >= &BigRational::zero() && e < &BigRational::one()));
        }

        #[test]
        fn float_evaluation_is_additive(a in arb_scalar(), b in arb_scalar()) {
            let p = Precision::default();
            let lhs = (&a + &b).to_real(p).to_f64();
            let rhs = a.to_real(p).to_f64() + b.to_real(p).to_f64();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }
    }
}
