//! Digit-string labels for the cosets of `V / V_N`.
//!
//! `d_j ∈ [0, s_j)` names the coset of `V_j` inside `V_{j-1}`; the all-zero
//! string is the identity. Digits stay machine words unless the alphabet
//! itself exceeds `u64`.

use std::fmt;

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, ToPrimitive};
use rand::Rng;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Digit {
    Small(u64),
    /// Only used for values that do not fit in a `u64`.
    Big(BigUint),
}

impl Digit {
    pub const ZERO: Digit = Digit::Small(0);

    pub fn from_biguint(value: BigUint) -> Self {
        match value.to_u64() {
            Some(v) => Digit::Small(v),
            None => Digit::Big(value),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Digit::Small(0))
    }

    pub fn to_biguint(&self) -> BigUint {
        match self {
            Digit::Small(v) => BigUint::from(*v),
            Digit::Big(v) => v.clone(),
        }
    }
}

impl fmt::Display for Digit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Digit::Small(v) => write!(f, "{v}"),
            Digit::Big(v) => write!(f, "{v}"),
        }
    }
}

impl fmt::Debug for Digit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// The alphabet `[0, s)` of one digit position, `s ≥ 2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Alphabet {
    Small(u64),
    Big(BigUint),
}

impl Alphabet {
    /// Returns `None` for alphabets with fewer than two letters.
    pub fn new(size: &BigUint) -> Option<Self> {
        if *size < BigUint::from(2u8) {
            return None;
        }
        Some(match size.to_u64() {
            Some(s) => Alphabet::Small(s),
            None => Alphabet::Big(size.clone()),
        })
    }

    pub fn size(&self) -> BigUint {
        match self {
            Alphabet::Small(s) => BigUint::from(*s),
            Alphabet::Big(s) => s.clone(),
        }
    }

    pub fn contains(&self, digit: &Digit) -> bool {
        match (self, digit) {
            (Alphabet::Small(s), Digit::Small(d)) => d < s,
            (Alphabet::Small(_), Digit::Big(_)) => false,
            (Alphabet::Big(_), Digit::Small(_)) => true,
            (Alphabet::Big(s), Digit::Big(d)) => d < s,
        }
    }

    /// A uniform letter.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Digit {
        match self {
            Alphabet::Small(s) => Digit::Small(rng.gen_range(0..*s)),
            Alphabet::Big(s) => Digit::from_biguint(rng.gen_biguint_below(s)),
        }
    }

    /// A uniform letter different from `current`: draw from `s − 1` letters
    /// and step over `current`.
    pub fn sample_other<R: Rng + ?Sized>(&self, rng: &mut R, current: &Digit) -> Digit {
        match (self, current) {
            (Alphabet::Small(s), Digit::Small(c)) => {
                let x = rng.gen_range(0..*s - 1);
                Digit::Small(if x >= *c { x + 1 } else { x })
            }
            (Alphabet::Big(s), _) => {
                let x = rng.gen_biguint_below(&(s - BigUint::one()));
                let c = current.to_biguint();
                Digit::from_biguint(if x >= c { x + BigUint::one() } else { x })
            }
            (Alphabet::Small(_), Digit::Big(_)) => unreachable!("digit outside its alphabet"),
        }
    }
}

/// A point of `V / V_N` as the digit string `d_1 … d_N`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DigitState {
    digits: Vec<Digit>,
}

impl DigitState {
    pub fn identity(levels: usize) -> Self {
        DigitState {
            digits: vec![Digit::ZERO; levels],
        }
    }

    pub fn from_digits(digits: Vec<Digit>) -> Self {
        DigitState { digits }
    }

    pub fn digits(&self) -> &[Digit] {
        &self.digits
    }

    pub fn levels(&self) -> usize {
        self.digits.len()
    }

    /// `min{j : d_j ≠ 0} − 1`, or `None` when the state is the identity
    /// (level at least `N`).
    pub fn level(&self) -> Option<usize> {
        self.digits.iter().position(|d| !d.is_zero())
    }

    /// Whether the state lies in `V_n`, i.e. `d_1 = … = d_n = 0`.
    pub fn in_ball(&self, n: usize) -> bool {
        self.level().is_none_or(|l| l >= n)
    }

    pub fn prefix(&self, n: usize) -> &[Digit] {
        &self.digits[..n]
    }

    /// Overwrites positions `shell + 1 ..= N` (1-based) and returns the
    /// previous values.
    pub fn replace_from(&mut self, shell: usize, digits: &[Digit]) -> Vec<Digit> {
        let tail = &mut self.digits[shell..];
        assert_eq!(tail.len(), digits.len(), "replacement must cover every deeper digit");
        tail.iter_mut()
            .zip(digits)
            .map(|(slot, new)| std::mem::replace(slot, new.clone()))
            .collect()
    }

    /// Rewrites positions after `shell` in place without reporting the old values.
    pub fn assign_from(&mut self, shell: usize, digits: &[Digit]) {
        self.digits[shell..].clone_from_slice(digits);
    }

    pub fn is_identity(&self) -> bool {
        self.digits.iter().all(Digit::is_zero)
    }

    /// Whether every digit is within the alphabet of its position.
    pub fn is_valid(&self, alphabets: &[Alphabet]) -> bool {
        self.digits.len() == alphabets.len()
            && self.digits.iter().zip(alphabets).all(|(d, a)| a.contains(d))
    }
}

impl Default for Digit {
    fn default() -> Self {
        Digit::ZERO
    }
}
