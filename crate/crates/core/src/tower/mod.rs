//! Tower profiles: the arithmetic skeleton `(p, κ, q, m_1..m_L)` and the
//! exact index and measure bookkeeping of the filtration `V = V_0 ⊃ V_1 ⊃ …`.

mod expo;

pub use expo::ExpoScalar;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Pow;
use serde::{Deserialize, Serialize};

use crate::error::{Error, ProfileError, Result};

/// Growth rule `m_n = ratio^{n-1}` for `n = 1..=count`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthRule {
    pub ratio: u64,
    pub count: usize,
}

/// Unvalidated profile, as read from a profile file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawProfile {
    pub p: u64,
    pub kappa: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_rule: Option<GrowthRule>,
}

impl RawProfile {
    pub fn explicit(p: u64, kappa: u32, m: Vec<u64>) -> Self {
        RawProfile {
            p,
            kappa,
            m: Some(m),
            m_rule: None,
        }
    }

    pub fn rule(p: u64, kappa: u32, ratio: u64, count: usize) -> Self {
        RawProfile {
            p,
            kappa,
            m: None,
            m_rule: Some(GrowthRule { ratio, count }),
        }
    }
}

/// A validated tower profile of finite depth `L`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct TowerProfile {
    p: u64,
    kappa: u32,
    q: u64,
    m: Vec<u64>,
}

/// A level `n` of the filtration that is known to be within a profile's depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LevelIndex(usize);

impl LevelIndex {
    pub fn get(self) -> usize {
        self.0
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) || n.is_multiple_of(3) {
        return false;
    }
    let mut d = 5u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) || n.is_multiple_of(d + 2) {
            return false;
        }
        d += 6;
    }
    true
}

/// Checks every tower invariant and expands a growth rule into the explicit
/// ramification sequence.
pub fn validate_profile(raw: &RawProfile) -> Result<TowerProfile, ProfileError> {
    if !is_prime(raw.p) {
        return Err(ProfileError::NotPrime(raw.p));
    }
    if raw.kappa == 0 {
        return Err(ProfileError::ZeroKappa);
    }
    let q = raw.p.checked_pow(raw.kappa).ok_or(ProfileError::QOverflow {
        p: raw.p,
        kappa: raw.kappa,
    })?;
    let m = match (&raw.m, &raw.m_rule) {
        (Some(m), None) => m.clone(),
        (None, Some(rule)) => {
            if rule.ratio < 2 {
                return Err(ProfileError::RuleRatio(rule.ratio));
            }
            if rule.count == 0 {
                return Err(ProfileError::RuleCount);
            }
            let mut m = Vec::with_capacity(rule.count);
            let mut value = 1u64;
            for n in 1..=rule.count {
                m.push(value);
                if n < rule.count {
                    value = value
                        .checked_mul(rule.ratio)
                        .ok_or(ProfileError::IndexOverflow(n + 1))?;
                }
            }
            m
        }
        _ => return Err(ProfileError::AmbiguousSequence),
    };
    if m.is_empty() {
        return Err(ProfileError::EmptySequence);
    }
    if m[0] != 1 {
        return Err(ProfileError::FirstIndexNotOne(m[0]));
    }
    for (i, pair) in m.windows(2).enumerate() {
        let n = i + 1;
        let (prev, next) = (pair[0], pair[1]);
        if next % prev != 0 {
            return Err(ProfileError::NotDivisible { n, prev, next });
        }
        if next / prev < 2 {
            return Err(ProfileError::RatioTooSmall {
                n,
                ratio: next / prev,
            });
        }
    }
    for (i, &mn) in m.iter().enumerate() {
        let g = mn.gcd(&raw.p);
        if g != 1 {
            return Err(ProfileError::WildRamification { n: i + 1, gcd: g });
        }
    }
    Ok(TowerProfile {
        p: raw.p,
        kappa: raw.kappa,
        q,
        m,
    })
}

/// Parses and validates a profile JSON document.
pub fn parse_profile_json(text: &str) -> Result<TowerProfile> {
    let raw: RawProfile = serde_json::from_str(text)?;
    Ok(validate_profile(&raw)?)
}

impl TowerProfile {
    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn kappa(&self) -> u32 {
        self.kappa
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    /// The depth `L`: number of stored ramification indices.
    pub fn depth(&self) -> usize {
        self.m.len()
    }

    pub fn ramification(&self) -> &[u64] {
        &self.m
    }

    pub fn level(&self, n: usize) -> Result<LevelIndex> {
        if n > self.depth() {
            return Err(Error::depth(n, self.depth()));
        }
        Ok(LevelIndex(n))
    }

    /// `m_n`, with `m_0 = 0`.
    pub fn m(&self, n: LevelIndex) -> u64 {
        match n.0 {
            0 => 0,
            k => self.m[k - 1],
        }
    }

    /// `n · m_n`, the base-`q` exponent of `M(n)`.
    pub fn nm(&self, n: LevelIndex) -> BigInt {
        BigInt::from(n.0) * BigInt::from(self.m(n))
    }

    /// `q^{exponent}` as an exact scalar.
    pub fn q_power(&self, exponent: &BigRational) -> ExpoScalar {
        ExpoScalar::power(self.p, &(exponent * BigRational::from_integer(self.kappa.into())))
    }

    pub fn zero(&self) -> ExpoScalar {
        ExpoScalar::zero(self.p)
    }

    pub fn scalar(&self, value: BigRational) -> ExpoScalar {
        ExpoScalar::from_rational(self.p, value)
    }

    /// `M(n) = q^{n m_n}` as an unbounded integer.
    pub fn index_integer(&self, n: LevelIndex) -> BigUint {
        let e: u64 = (self.nm(n)).try_into().expect("index exponent beyond 64 bits");
        Pow::pow(BigUint::from(self.q), e)
    }

    pub fn to_raw(&self) -> RawProfile {
        RawProfile::explicit(self.p, self.kappa, self.m.clone())
    }
}

/// `M(n) = [V : V_n] = q^{n m_n}`.
#[allow(non_snake_case)]
pub fn index_M(profile: &TowerProfile, n: usize) -> Result<ExpoScalar> {
    let n = profile.level(n)?;
    Ok(profile.q_power(&BigRational::from_integer(profile.nm(n))))
}

/// `μ(V_n) = q^{-n m_n}`.
pub fn haar_ball(profile: &TowerProfile, n: usize) -> Result<ExpoScalar> {
    let n = profile.level(n)?;
    Ok(profile.q_power(&BigRational::from_integer(-profile.nm(n))))
}

/// `μ(V_l ∖ V_{l+1}) = q^{-l m_l} - q^{-(l+1) m_{l+1}}`.
pub fn shell_measure(profile: &TowerProfile, l: usize) -> Result<ExpoScalar> {
    profile.level(l + 1)?;
    Ok(haar_ball(profile, l)? - haar_ball(profile, l + 1)?)
}

/// `s_n = [V_{n-1} : V_n] = q^{n m_n - (n-1) m_{n-1}}`.
pub fn digit_alphabet(profile: &TowerProfile, n: usize) -> Result<BigUint> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "digit alphabets are indexed from level 1".into(),
        ));
    }
    let level = profile.level(n)?;
    let prev = LevelIndex(n - 1);
    let e = profile.nm(level) - profile.nm(prev);
    let e: u64 = e.try_into().expect("alphabet exponent beyond 64 bits");
    Ok(Pow::pow(BigUint::from(profile.q()), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn profile(p: u64, m: &[u64]) -> TowerProfile {
        validate_profile(&RawProfile::explicit(p, 1, m.to_vec())).unwrap()
    }

    #[test]
    fn accepts_the_reference_tower() {
        let t = profile(2, &[1, 3, 9, 27]);
        assert_eq!(t.q(), 2);
        assert_eq!(t.depth(), 4);
    }

    #[test]
    fn expands_growth_rules() {
        let t = validate_profile(&RawProfile::rule(2, 1, 3, 4)).unwrap();
        assert_eq!(t.ramification(), &[1, 3, 9, 27]);
    }

    #[test]
    fn rejects_each_violated_invariant() {
        let check = |raw: RawProfile, expect: ProfileError| {
            assert_eq!(validate_profile(&raw).unwrap_err(), expect);
        };
        check(
            RawProfile::explicit(3, 1, vec![1, 3, 9]),
            ProfileError::WildRamification { n: 2, gcd: 3 },
        );
        check(RawProfile::explicit(4, 1, vec![1, 3]), ProfileError::NotPrime(4));
        check(RawProfile::explicit(2, 1, vec![3, 9]), ProfileError::FirstIndexNotOne(3));
        check(
            RawProfile::explicit(2, 1, vec![1, 3, 7]),
            ProfileError::NotDivisible { n: 2, prev: 3, next: 7 },
        );
        check(
            RawProfile::explicit(5, 1, vec![1, 1]),
            ProfileError::RatioTooSmall { n: 1, ratio: 1 },
        );
        check(RawProfile::rule(2, 1, 1, 3), ProfileError::RuleRatio(1));
        check(RawProfile::explicit(2, 0, vec![1]), ProfileError::ZeroKappa);
        check(RawProfile::explicit(2, 1, vec![]), ProfileError::EmptySequence);
        check(
            RawProfile {
                p: 2,
                kappa: 1,
                m: Some(vec![1]),
                m_rule: Some(GrowthRule { ratio: 3, count: 2 }),
            },
            ProfileError::AmbiguousSequence,
        );
    }

    #[test]
    fn wild_message_names_the_invariant() {
        let e = validate_profile(&RawProfile::explicit(3, 1, vec![1, 3])).unwrap_err();
        assert_eq!(e.to_string(), "gcd(m_2, p) = 3 != 1: ramification must be tame");
    }

    #[test]
    fn index_and_ball_values() {
        let t = profile(2, &[1, 3, 9]);
        assert_eq!(index_M(&t, 2).unwrap().as_rational(), Some(r(64, 1)));
        assert_eq!(index_M(&t, 0).unwrap().as_rational(), Some(r(1, 1)));
        assert_eq!(haar_ball(&t, 1).unwrap().as_rational(), Some(r(1, 2)));
        assert_eq!(haar_ball(&t, 2).unwrap().as_rational(), Some(r(1, 64)));
        assert_eq!(haar_ball(&t, 0).unwrap().as_rational(), Some(r(1, 1)));
        let t3 = profile(3, &[1, 2, 4]);
        assert_eq!(index_M(&t3, 3).unwrap().as_rational(), Some(r(531_441, 1)));
        assert!(matches!(index_M(&t, 4), Err(Error::DepthExceeded { requested: 4, available: 3 })));
    }

    #[test]
    fn shells_and_alphabets() {
        let t = profile(2, &[1, 3, 9]);
        assert_eq!(shell_measure(&t, 0).unwrap().as_rational(), Some(r(1, 2)));
        assert_eq!(shell_measure(&t, 1).unwrap().as_rational(), Some(r(31, 64)));
        assert!(shell_measure(&t, 3).is_err());
        assert_eq!(digit_alphabet(&t, 1).unwrap(), BigUint::from(2u32));
        assert_eq!(digit_alphabet(&t, 2).unwrap(), BigUint::from(32u32));
        assert_eq!(digit_alphabet(&t, 3).unwrap(), BigUint::from(2_097_152u32));
        let deep = profile(2, &[1, 3, 9, 27]);
        assert_eq!(digit_alphabet(&deep, 4).unwrap(), BigUint::one() << 81usize);
    }

    #[test]
    fn measure_identities_hold_exactly() {
        for t in [profile(2, &[1, 3, 9, 27, 81]), profile(3, &[1, 2, 4, 8, 16, 32]), profile(5, &[1, 2, 6])] {
            let l = t.depth();
            let mut total = t.zero();
            let mut product = BigUint::one();
            for n in 0..=l {
                let m = index_M(&t, n).unwrap();
                assert_eq!(&m * &haar_ball(&t, n).unwrap(), ExpoScalar::one(t.p()));
                if n >= 1 {
                    let s = digit_alphabet(&t, n).unwrap();
                    product *= &s;
                    let ratio = index_M(&t, n).unwrap() * haar_ball(&t, n - 1).unwrap();
                    assert_eq!(ratio, t.scalar(BigRational::from_integer(BigInt::from(s))));
                    assert_eq!(product, t.index_integer(t.level(n).unwrap()));
                }
                if n < l {
                    let s = shell_measure(&t, n).unwrap();
                    assert_eq!(s.signum(), std::cmp::Ordering::Greater);
                    total = &total + &s;
                }
            }
            total = &total + &haar_ball(&t, l).unwrap();
            assert_eq!(total, ExpoScalar::one(t.p()));
        }
    }

    #[test]
    fn prime_power_q_uses_p_as_exact_base() {
        let t = validate_profile(&RawProfile::explicit(2, 2, vec![1, 3])).unwrap();
        assert_eq!(t.q(), 4);
        // q^{1/2} = 2 is rational.
        assert_eq!(t.q_power(&r(1, 2)).as_rational(), Some(r(2, 1)));
    }

    #[test]
    fn parses_both_profile_file_forms() {
        let a = parse_profile_json(r#"{"p":2,"kappa":1,"m":[1,3,9,27]}"#).unwrap();
        let b = parse_profile_json(r#"{"p":2,"kappa":1,"m_rule":{"ratio":3,"count":4}}"#).unwrap();
        assert_eq!(a, b);
        assert!(parse_profile_json(r#"{"p":3,"kappa":1,"m":[1,3]}"#).is_err());
    }
}
