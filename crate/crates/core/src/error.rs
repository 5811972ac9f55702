use num_rational::BigRational;
use thiserror::Error;

use crate::rational::format_rational;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Violations of the tower-profile invariants.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error("p = {0} is not prime")]
    NotPrime(u64),
    #[error("kappa must be at least 1")]
    ZeroKappa,
    #[error("q = p^kappa does not fit in 64 bits (p = {p}, kappa = {kappa})")]
    QOverflow { p: u64, kappa: u32 },
    #[error("exactly one of `m` and `m_rule` must be given")]
    AmbiguousSequence,
    #[error("ramification sequence is empty")]
    EmptySequence,
    #[error("m_1 must be 1 (got {0})")]
    FirstIndexNotOne(u64),
    #[error("m_{n} = {prev} does not divide m_{next_n} = {next}", next_n = .n + 1)]
    NotDivisible { n: usize, prev: u64, next: u64 },
    #[error("m_{next_n}/m_{n} = {ratio} is below 2", next_n = .n + 1)]
    RatioTooSmall { n: usize, ratio: u64 },
    #[error("gcd(m_{n}, p) = {gcd} != 1: ramification must be tame")]
    WildRamification { n: usize, gcd: u64 },
    #[error("growth rule ratio must be at least 2 (got {0})")]
    RuleRatio(u64),
    #[error("growth rule count must be at least 1")]
    RuleCount,
    #[error("ramification index m_{0} overflows 64 bits")]
    IndexOverflow(usize),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tower profile: {0}")]
    Profile(#[from] ProfileError),
    #[error("level {requested} exceeds the available depth {available}")]
    DepthExceeded { requested: usize, available: usize },
    #[error("alpha must be positive (got {})", format_rational(.0))]
    NonPositiveAlpha(BigRational),
    #[error("time must be nonnegative (got {0})")]
    NegativeTime(String),
    #[error("radial data must hold at least the level-0 value")]
    EmptySequence,
    #[error(
        "kernel series did not reach the truncation threshold within depth {depth}; \
         the profile is too shallow for t = {t}"
    )]
    TruncationNotReached { depth: usize, t: String },
    #[error("expected {expected:.1} events exceeds the event budget {budget}")]
    BudgetTooSmall { expected: f64, budget: u64 },
    #[error("path {path} exceeded the event budget {budget} before t = {t}")]
    EventBudget { path: u64, budget: u64, t: f64 },
    #[error("empty path set")]
    EmptyPathSet,
    #[error("degenerate fit: every ball count equals 1")]
    DegenerateFit,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn depth(requested: usize, available: usize) -> Self {
        Error::DepthExceeded {
            requested,
            available,
        }
    }
}
