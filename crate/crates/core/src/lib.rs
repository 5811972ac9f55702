//! Spectral objects, Lévy measures and exact quotient simulation for the
//! fractional differentiation operator on the projective-limit unit group of
//! a tamely ramified tower of local fields.

pub mod error;
pub mod rational;
pub mod levy;
pub mod process;
pub mod real;
pub mod spectral;
pub mod tower;

pub use error::{Error, ProfileError, Result};
pub use real::{Precision, Real};
pub use tower::{
    digit_alphabet, haar_ball, index_M, parse_profile_json, shell_measure, validate_profile,
    ExpoScalar, GrowthRule, LevelIndex, RawProfile, TowerProfile,
};
