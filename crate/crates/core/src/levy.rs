//! The Lévy measure of the process: radial shell densities, tails, their
//! asymptotics, and the first-exit ratio behind the dimension theorem.

use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::{Precision, Real};
use crate::spectral::{check_alpha, symbol};
use crate::tower::{digit_alphabet, haar_ball, index_M, shell_measure, ExpoScalar, TowerProfile};

fn q_alpha(profile: &TowerProfile, alpha: &BigRational) -> ExpoScalar {
    profile.q_power(alpha)
}

/// `ν_n = q^α + Σ_{l=1}^{n} q^{l m_l} (q^{α(l+1)m_{l+1}} − q^{α l m_l})`, the
/// density of the Lévy measure on `V_n ∖ V_{n+1}`.
pub fn shell_density(profile: &TowerProfile, alpha: &BigRational, n: usize) -> Result<ExpoScalar> {
    check_alpha(alpha)?;
    profile.level(n + 1)?;
    let mut acc = q_alpha(profile, alpha);
    for l in 1..=n {
        let step = symbol(profile, alpha, l + 1)? - symbol(profile, alpha, l)?;
        acc = acc + index_M(profile, l)? * step;
    }
    Ok(acc)
}

/// The same density after summation by parts:
/// `q^α + q^{n m_n}(q^{α(n+1)m_{n+1}} − q^α) − Σ_{i=1}^{n−1} (M(i+1) − M(i))(q^{α(i+1)m_{i+1}} − q^α)`.
pub fn shell_density_abel(profile: &TowerProfile, alpha: &BigRational, n: usize) -> Result<ExpoScalar> {
    check_alpha(alpha)?;
    profile.level(n + 1)?;
    let qa = q_alpha(profile, alpha);
    let mut acc = &qa + &(index_M(profile, n)? * (symbol(profile, alpha, n + 1)? - &qa));
    for i in 1..n {
        let jump = index_M(profile, i + 1)? - index_M(profile, i)?;
        acc = acc - jump * (symbol(profile, alpha, i + 1)? - &qa);
    }
    Ok(acc)
}

/// `ν(V ∖ V_n) = Σ_{j<n} ν_j μ(V_j ∖ V_{j+1})`; `tail(0) = 0`.
pub fn tail(profile: &TowerProfile, alpha: &BigRational, n: usize) -> Result<ExpoScalar> {
    check_alpha(alpha)?;
    profile.level(n)?;
    let mut acc = profile.zero();
    for j in 0..n {
        acc = acc + shell_density(profile, alpha, j)? * shell_measure(profile, j)?;
    }
    Ok(acc)
}

/// Ratios that tend to one along the tower.
#[derive(Clone, Debug)]
pub struct AsymptoticRecord {
    pub n: usize,
    /// `tail(n) / q^{α n m_n}`; absent for `n = 0` where the tail vanishes.
    pub tail_ratio: Option<Real>,
    /// `ν_n / q^{n m_n + α(n+1) m_{n+1}}`.
    pub nu_ratio: Real,
}

pub fn asymptotic_diagnostics(
    profile: &TowerProfile,
    alpha: &BigRational,
    n_max: usize,
    prec: Precision,
) -> Result<Vec<AsymptoticRecord>> {
    check_alpha(alpha)?;
    profile.level(n_max + 1)?;
    let mut running_tail = profile.zero();
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let nu = shell_density(profile, alpha, n)?;
        let tail_ratio = (n > 0).then(|| {
            let scale = symbol(profile, alpha, n).expect("level checked");
            running_tail.to_real(prec) / scale.to_real(prec)
        });
        let scale = index_M(profile, n)? * symbol(profile, alpha, n + 1)?;
        out.push(AsymptoticRecord {
            n,
            tail_ratio,
            nu_ratio: nu.to_real(prec) / scale.to_real(prec),
        });
        running_tail = running_tail + nu * shell_measure(profile, n)?;
    }
    Ok(out)
}

/// How the Evans ratio bears on the dimension theorem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvansVerdict {
    /// `α < 1` and the ratio is below one.
    Supported,
    /// `α < 1` but the ratio at this level is at least one.
    RatioNotBelowOne,
    /// `α ≥ 1`: the trend exponent does not decay, nothing is claimed.
    NotEstablished,
}

impl fmt::Display for EvansVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvansVerdict::Supported => "ratio below one",
            EvansVerdict::RatioNotBelowOne => "ratio not below one",
            EvansVerdict::NotEstablished => "condition not established",
        })
    }
}

#[derive(Clone, Debug)]
pub struct EvansReport {
    pub n: usize,
    /// `[tail(n) / M(n)] · [M(n−1) / tail(n−1)]`.
    pub ratio: Real,
    /// `q^{(α−1)(n m_n − (n−1) m_{n−1})}`, the closed-form leading behaviour.
    pub trend: Real,
    pub verdict: EvansVerdict,
}

pub fn evans_ratio(
    profile: &TowerProfile,
    alpha: &BigRational,
    n: usize,
    prec: Precision,
) -> Result<EvansReport> {
    check_alpha(alpha)?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "the exit ratio needs n >= 2 (got {n})"
        )));
    }
    let level = profile.level(n)?;
    let prev = profile.level(n - 1)?;
    let upper = tail(profile, alpha, n)? * haar_ball(profile, n)?;
    let lower = tail(profile, alpha, n - 1)? * haar_ball(profile, n - 1)?;
    let ratio = upper.to_real(prec) / lower.to_real(prec);
    let gap = BigRational::from_integer(profile.nm(level) - profile.nm(prev));
    let trend = profile
        .q_power(&((alpha - BigRational::one()) * gap))
        .to_real(prec);
    let verdict = if *alpha >= BigRational::one() {
        EvansVerdict::NotEstablished
    } else if ratio < Real::one(prec) {
        EvansVerdict::Supported
    } else {
        EvansVerdict::RatioNotBelowOne
    };
    Ok(EvansReport {
        n,
        ratio,
        trend,
        verdict,
    })
}

/// Exact per-shell data for levels `l < N`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShellRecord {
    pub level: usize,
    pub density: ExpoScalar,
    pub measure: ExpoScalar,
    /// `r_l = ν_l μ(V_l ∖ V_{l+1})`, the rate of jumps landing in shell `l`.
    pub rate: ExpoScalar,
}

/// Everything the quotient simulator needs for `V / V_N`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShellTable {
    profile: TowerProfile,
    alpha: BigRational,
    records: Vec<ShellRecord>,
    /// `tails[n] = ν(V ∖ V_n)` for `n = 0..=N`.
    tails: Vec<ExpoScalar>,
    alphabets: Vec<BigUint>,
}

impl ShellTable {
    pub fn profile(&self) -> &TowerProfile {
        &self.profile
    }

    pub fn alpha(&self) -> &BigRational {
        &self.alpha
    }

    /// The quotient depth `N`.
    pub fn levels(&self) -> usize {
        self.records.len()
    }

    pub fn records(&self) -> &[ShellRecord] {
        &self.records
    }

    pub fn tail(&self, n: usize) -> Option<&ExpoScalar> {
        self.tails.get(n)
    }

    /// `λ_N = ν(V ∖ V_N)`, the total jump rate of the quotient chain.
    pub fn total_rate(&self) -> &ExpoScalar {
        self.tails.last().expect("tails start at level 0")
    }

    /// `s_1, …, s_N`.
    pub fn alphabets(&self) -> &[BigUint] {
        &self.alphabets
    }
}

pub fn build_shell_table(profile: &TowerProfile, alpha: &BigRational, levels: usize) -> Result<ShellTable> {
    check_alpha(alpha)?;
    if levels == 0 {
        return Err(Error::InvalidArgument("a shell table needs N >= 1".into()));
    }
    profile.level(levels)?;
    let mut records = Vec::with_capacity(levels);
    let mut tails = vec![profile.zero()];
    for l in 0..levels {
        let density = shell_density(profile, alpha, l)?;
        let measure = shell_measure(profile, l)?;
        let rate = &density * &measure;
        tails.push(tails[l].clone() + &rate);
        records.push(ShellRecord {
            level: l,
            density,
            measure,
            rate,
        });
    }
    let alphabets = (1..=levels)
        .map(|j| digit_alphabet(profile, j))
        .collect::<Result<_>>()?;
    Ok(ShellTable {
        profile: profile.clone(),
        alpha: alpha.clone(),
        records,
        tails,
        alphabets,
    })
}
