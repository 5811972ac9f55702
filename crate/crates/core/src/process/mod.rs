//! Exact simulation of the process projected onto `V / V_N`.
//!
//! Why the projection is an autonomous Markov chain: the Lévy measure has
//! constant density against Haar measure on each shell `V_j ∖ V_{j+1}`. A jump
//! by an element of that shell leaves the coset modulo `V_j` unchanged and,
//! because translation by a Haar-uniform element of `V_j ∖ V_{j+1}` is uniform
//! over the non-identity cosets of `V_{j+1}` in `V_j` and uniform on `V_{j+1}`
//! below, it moves `d_{j+1}` to a uniform different letter and re-randomizes
//! `d_{j+2}, …, d_N`. Jumps into `V_N` do not change the state modulo `V_N`, so
//! dropping them is exact. The group law of the underlying units is never
//! needed.

mod digits;
mod sampler;
mod stats;
mod trajectory;

pub use digits::{Alphabet, Digit, DigitState};
pub use sampler::{
    sample_path, JumpEvent, PathConfig, PathSampler, QuotientChain, Simulator, StopRule,
    DEFAULT_EVENT_BUDGET,
};
pub use stats::{
    ball_count, ball_counts, dimension_estimate, empirical_ball_probability, exit_record,
    exit_statistics, fit_dimension, mean_and_stderr, BinomialEstimate, DimensionEstimate,
    ExitRecord, ExitStatistics, MetricNormalization,
};
pub use trajectory::{EventRecord, Trajectory, TrajectoryMeta};
