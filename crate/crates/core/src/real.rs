//! High-precision binary floating point for the transcendental parts of the
//! theory (exponentials, fractional powers of q). Everything polynomial in
//! q-powers stays exact in [`crate::ExpoScalar`]; values only land here at
//! the end.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};
use num_bigint::{BigInt, Sign as BigSign};
use num_rational::BigRational;

const RM: RoundingMode = RoundingMode::ToEven;
const LOG2_10: f64 = std::f64::consts::LOG2_10;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constants cache"));
}

fn with_consts<T>(f: impl FnOnce(&mut Consts) -> T) -> T {
    CONSTS.with(|cc| f(&mut cc.borrow_mut()))
}

/// Working precision, stored in bits and specified in significant decimal digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Precision {
    digits: u32,
}

impl Precision {
    pub const DEFAULT_DIGITS: u32 = 34;

    pub fn from_digits(digits: u32) -> Self {
        Precision {
            digits: digits.max(1),
        }
    }

    pub fn digits(self) -> u32 {
        self.digits
    }

    /// Mantissa bits, including a 32-bit guard, rounded up to whole words.
    pub fn bits(self) -> usize {
        let raw = (self.digits as f64 * LOG2_10).ceil() as usize + 32;
        raw.div_ceil(64) * 64
    }

    pub(crate) fn scaled(self, factor: u32) -> Self {
        Precision {
            digits: self.digits.saturating_mul(factor),
        }
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision::from_digits(Self::DEFAULT_DIGITS)
    }
}

/// A real number carried at a fixed binary precision.
#[derive(Clone)]
pub struct Real {
    value: BigFloat,
    bits: usize,
}

impl Real {
    fn wrap(value: BigFloat, bits: usize) -> Self {
        debug_assert!(!value.is_nan(), "NaN escaped a Real operation");
        Real { value, bits }
    }

    pub fn zero(prec: Precision) -> Self {
        Self::wrap(BigFloat::from_word(0, prec.bits()), prec.bits())
    }

    pub fn one(prec: Precision) -> Self {
        Self::wrap(BigFloat::from_word(1, prec.bits()), prec.bits())
    }

    pub fn from_f64(x: f64, prec: Precision) -> Self {
        Self::wrap(BigFloat::from_f64(x, prec.bits()), prec.bits())
    }

    pub fn from_bigint(n: &BigInt, prec: Precision) -> Self {
        let bits = prec.bits();
        let (sign, words) = n.to_u64_digits();
        if words.is_empty() {
            return Self::zero(prec);
        }
        let sign = if sign == BigSign::Minus { Sign::Neg } else { Sign::Pos };
        let exponent = i32::try_from(words.len() * 64).expect("integer too large for a Real");
        let mut value = BigFloat::from_words(&words, sign, exponent);
        if value.precision().unwrap_or(0) > bits {
            value
                .set_precision(bits, RM)
                .expect("rounding an integer to working precision");
        }
        Self::wrap(value, bits)
    }

    pub fn from_rational(r: &BigRational, prec: Precision) -> Self {
        let num = Self::from_bigint(r.numer(), prec);
        if r.denom() == &BigInt::from(1) {
            return num;
        }
        let den = Self::from_bigint(r.denom(), prec);
        &num / &den
    }

    pub fn precision(&self) -> Precision {
        Precision::from_digits(((self.bits.saturating_sub(32)) as f64 / LOG2_10).floor() as u32)
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        !self.is_zero() && self.value.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        !self.is_zero() && !self.value.is_negative()
    }

    pub fn abs(&self) -> Real {
        if self.value.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    /// `e^self`; arguments far below the representable range flush to zero.
    pub fn exp(&self) -> Real {
        if let Some(log2) = self.log2_magnitude() {
            if self.value.is_negative() && log2 > 40.0 {
                return Real::zero(self.precision_spec());
            }
            assert!(
                self.value.is_negative() || log2 <= 40.0,
                "exp argument too large: 2^{log2}"
            );
        }
        let v = with_consts(|cc| self.value.exp(self.bits, RM, cc));
        Self::wrap(v, self.bits)
    }

    /// Natural logarithm; panics on nonpositive input.
    pub fn ln(&self) -> Real {
        assert!(self.is_positive(), "ln of a nonpositive value");
        let v = with_consts(|cc| self.value.ln(self.bits, RM, cc));
        Self::wrap(v, self.bits)
    }

    /// `self^exponent` for positive `self`.
    pub fn pow(&self, exponent: &Real) -> Real {
        assert!(self.is_positive(), "pow of a nonpositive base");
        let bits = self.bits.max(exponent.bits);
        let v = with_consts(|cc| self.value.pow(&exponent.value, bits, RM, cc));
        Self::wrap(v, bits)
    }

    /// `self^n` by repeated squaring, for nonzero `self` when `n < 0`.
    pub fn powi(&self, n: i64) -> Real {
        let v = self.value.powi(n.unsigned_abs() as usize, self.bits, RM);
        let v = Self::wrap(v, self.bits);
        if n < 0 {
            &Real::one(self.precision_spec()) / &v
        } else {
            v
        }
    }

    /// Approximate `log2 |self|`, or `None` for zero.
    pub fn log2_magnitude(&self) -> Option<f64> {
        let (words, _, _, exponent, _) = self.value.as_raw_parts()?;
        if self.is_zero() {
            return None;
        }
        let top = *words.last()? as f64 / 18_446_744_073_709_551_616.0;
        Some(exponent as f64 + top.log2())
    }

    /// Nearest `f64` (to within one ulp); saturates to `±inf` or `0`.
    pub fn to_f64(&self) -> f64 {
        let Some((words, _, sign, exponent, _)) = self.value.as_raw_parts() else {
            return f64::NAN;
        };
        if self.is_zero() {
            return 0.0;
        }
        let mut mantissa = 0.0f64;
        for w in words.iter().rev().take(2) {
            mantissa = mantissa * 18_446_744_073_709_551_616.0 + *w as f64;
        }
        let consumed = 64 * words.len().min(2) as i64;
        let e = exponent as i64 - consumed;
        let magnitude = if e > 2200 {
            f64::INFINITY
        } else if e < -2300 {
            0.0
        } else {
            let half = (e / 2) as i32;
            mantissa * 2f64.powi(half) * 2f64.powi(e as i32 - half)
        };
        if sign == Sign::Neg {
            -magnitude
        } else {
            magnitude
        }
    }

    /// Scientific notation with `digits` significant decimal digits, e.g. `1.4142e0`.
    pub fn to_sci_string(&self, digits: usize) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let digits = digits.max(1);
        let converted = with_consts(|cc| self.value.convert_to_radix(Radix::Dec, RM, cc));
        let Ok((sign, mut mantissa, mut exponent)) = converted else {
            return format!("{}", self.value);
        };
        // value = 0.d1 d2 d3 ... * 10^exponent
        if mantissa.len() > digits {
            let round_up = mantissa[digits] >= 5;
            mantissa.truncate(digits);
            if round_up {
                let mut i = digits;
                loop {
                    if i == 0 {
                        mantissa.insert(0, 1);
                        mantissa.truncate(digits);
                        exponent += 1;
                        break;
                    }
                    i -= 1;
                    if mantissa[i] == 9 {
                        mantissa[i] = 0;
                    } else {
                        mantissa[i] += 1;
                        break;
                    }
                }
            }
        }
        while mantissa.len() > 1 && mantissa.last() == Some(&0) {
            mantissa.pop();
        }
        let mut out = String::new();
        if sign == Sign::Neg {
            out.push('-');
        }
        out.push((b'0' + mantissa[0]) as char);
        if mantissa.len() > 1 {
            out.push('.');
            out.extend(mantissa[1..].iter().map(|d| (b'0' + d) as char));
        }
        out.push_str(&format!("e{}", exponent as i64 - 1));
        out
    }

    /// Like [`Real::to_sci_string`], but positional (`0.00123`, `8`, `1234.5`)
    /// when the decimal exponent lies in `[-7, 20]`.
    pub fn to_decimal_string(&self, digits: usize) -> String {
        let sci = self.to_sci_string(digits);
        let Some((mantissa, exponent)) = sci.split_once('e') else {
            return sci;
        };
        let Ok(exponent) = exponent.parse::<i64>() else {
            return sci;
        };
        if !(-7..=20).contains(&exponent) {
            return sci;
        }
        let (sign, mantissa) = match mantissa.strip_prefix('-') {
            Some(rest) => ("-", rest),
            None => ("", mantissa),
        };
        let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
        let point = exponent + 1;
        let body = if point <= 0 {
            format!("0.{}{digits}", "0".repeat((-point) as usize))
        } else if point as usize >= digits.len() {
            format!("{digits}{}", "0".repeat(point as usize - digits.len()))
        } else {
            let (a, b) = digits.split_at(point as usize);
            format!("{a}.{b}")
        };
        format!("{sign}{body}")
    }

    fn precision_spec(&self) -> Precision {
        self.precision()
    }

    fn bits_with(&self, other: &Real) -> usize {
        self.bits.max(other.bits)
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(self.precision().digits() as usize);
        f.write_str(&self.to_sci_string(digits))
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Real({})", self.to_sci_string(20))
    }
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value.cmp(&other.value).map(|c| c.cmp(&0))
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:ident) => {
        impl $trait<&Real> for &Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                let bits = self.bits_with(rhs);
                Real::wrap(self.value.$op(&rhs.value, bits, RM), bits)
            }
        }
        impl $trait<Real> for Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Real> for Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                (&self).$method(rhs)
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);
binop!(Div, div, div);

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real::wrap(BigFloat::neg(&self.value), self.bits)
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        -&self
    }
}

impl std::iter::Sum for Real {
    fn sum<I: Iterator<Item = Real>>(iter: I) -> Real {
        let mut iter = iter.peekable();
        let prec = iter
            .peek()
            .map(Real::precision)
            .unwrap_or_default();
        iter.fold(Real::zero(prec), |acc, x| acc + x)
    }
}
