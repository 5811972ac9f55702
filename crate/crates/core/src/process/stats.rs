//! Monte-Carlo estimators over sets of trajectories.
//!
//! Every estimator consumes its paths as an iterator, so large ensembles can
//! be generated lazily and dropped one path at a time.

use std::borrow::Borrow;
use std::collections::HashSet;

use serde::Serialize;

use super::digits::{Digit, DigitState};
use super::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::tower::TowerProfile;

/// Successes out of trials, with the usual binomial summaries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BinomialEstimate {
    pub successes: u64,
    pub trials: u64,
}

impl BinomialEstimate {
    pub fn record(&mut self, success: bool) {
        self.trials += 1;
        self.successes += u64::from(success);
    }

    pub fn merge(self, other: BinomialEstimate) -> BinomialEstimate {
        BinomialEstimate {
            successes: self.successes + other.successes,
            trials: self.trials + other.trials,
        }
    }

    pub fn mean(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    /// `sqrt(p̂ (1 − p̂) / n)`.
    pub fn stderr(&self) -> f64 {
        let p = self.mean();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// Wilson score lower bound at normal quantile `z`.
    pub fn wilson_lower(&self, z: f64) -> f64 {
        let n = self.trials as f64;
        let p = self.mean();
        let z2 = z * z;
        let centre = p + z2 / (2.0 * n);
        let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        (centre - spread) / (1.0 + z2 / n)
    }
}

fn check_level(traj: &Trajectory, n: usize) -> Result<()> {
    if n > traj.meta().levels {
        return Err(Error::depth(n, traj.meta().levels));
    }
    Ok(())
}

/// Fraction of paths with `ξ(t) ∈ V_n`.
pub fn empirical_ball_probability<I, T>(paths: I, t: f64, n: usize) -> Result<BinomialEstimate>
where
    I: IntoIterator<Item = T>,
    T: Borrow<Trajectory>,
{
    let mut est = BinomialEstimate::default();
    for path in paths {
        let path = path.borrow();
        check_level(path, n)?;
        est.record(path.state_at(t)?.in_ball(n));
    }
    if est.trials == 0 {
        return Err(Error::EmptyPathSet);
    }
    Ok(est)
}

/// For each requested level `n`, the number of distinct prefixes
/// `(d_1, …, d_n)` visited during `[0, t_window]`.
pub fn ball_counts(traj: &Trajectory, t_window: f64, levels: &[usize]) -> Result<Vec<usize>> {
    traj.check_time(t_window)?;
    for &n in levels {
        check_level(traj, n)?;
    }
    let mut seen: Vec<HashSet<Vec<Digit>>> = levels.iter().map(|_| HashSet::new()).collect();
    let mut state = traj.initial_state();
    let mut visit = |state: &DigitState, only_deeper_than: Option<usize>| {
        for (set, &n) in seen.iter_mut().zip(levels) {
            if only_deeper_than.is_none_or(|shell| shell < n) {
                set.insert(state.prefix(n).to_vec());
            }
        }
    };
    visit(&state, None);
    for e in traj.events_until(t_window) {
        state.assign_from(e.shell, &e.new_digits);
        visit(&state, Some(e.shell));
    }
    Ok(seen.iter().map(HashSet::len).collect())
}

pub fn ball_count(traj: &Trajectory, t_window: f64, n: usize) -> Result<usize> {
    Ok(ball_counts(traj, t_window, &[n])?[0])
}

/// The metric convention `diam(V_n) = M(n)^{−c}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricNormalization {
    pub exponent: f64,
}

impl Default for MetricNormalization {
    fn default() -> Self {
        MetricNormalization { exponent: 1.0 }
    }
}

impl MetricNormalization {
    /// `log(1 / diam(V_n)) = c · n m_n · log q`.
    pub fn log_inverse_diameter(&self, profile: &TowerProfile, n: usize) -> Result<f64> {
        let level = profile.level(n)?;
        let nm: f64 = profile.nm(level).to_string().parse().expect("integer text");
        Ok(self.exponent * nm * (profile.q() as f64).ln())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionEstimate {
    pub levels: Vec<usize>,
    /// Mean of the per-path slopes.
    pub slope: f64,
    /// Standard error of that mean; absent with fewer than two usable paths.
    pub stderr: Option<f64>,
    pub path_slopes: Vec<f64>,
    /// Mean ball count per level over the usable paths.
    pub mean_counts: Vec<f64>,
    /// Paths whose counts were all 1 and carry no slope information.
    pub degenerate: usize,
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Slope of `log ball_count(n)` against `log(1/diam V_n)` over `levels`,
/// fitted per path and averaged.
pub fn dimension_estimate<I, T>(
    paths: I,
    t: f64,
    levels: &[usize],
    metric: MetricNormalization,
) -> Result<DimensionEstimate>
where
    I: IntoIterator<Item = T>,
    T: Borrow<Trajectory>,
{
    check_fit_levels(levels)?;
    let mut profile = None;
    let mut counts = Vec::new();
    for path in paths {
        let path = path.borrow();
        profile.get_or_insert_with(|| path.meta().profile.clone());
        counts.push(ball_counts(path, t, levels)?);
    }
    let profile = profile.ok_or(Error::EmptyPathSet)?;
    fit_dimension(&profile, levels, counts, metric)
}

fn check_fit_levels(levels: &[usize]) -> Result<()> {
    let distinct: HashSet<_> = levels.iter().collect();
    if distinct.len() < 2 || levels.contains(&0) {
        return Err(Error::InvalidArgument(
            "the fit needs at least two distinct levels, all >= 1".into(),
        ));
    }
    Ok(())
}

/// The fit behind [`dimension_estimate`], from per-path ball counts already
/// taken at `levels`. Lets callers count on the fly and drop each path.
pub fn fit_dimension<I>(
    profile: &TowerProfile,
    levels: &[usize],
    counts: I,
    metric: MetricNormalization,
) -> Result<DimensionEstimate>
where
    I: IntoIterator<Item = Vec<usize>>,
{
    check_fit_levels(levels)?;
    let x = levels
        .iter()
        .map(|&n| metric.log_inverse_diameter(profile, n))
        .collect::<Result<Vec<_>>>()?;
    let mut slopes = Vec::new();
    let mut sums = vec![0.0; levels.len()];
    let mut degenerate = 0;
    let mut seen_any = false;
    for counts in counts {
        seen_any = true;
        if counts.len() != levels.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} ball counts per path, got {}",
                levels.len(),
                counts.len()
            )));
        }
        if counts.iter().all(|&c| c == 1) {
            degenerate += 1;
            continue;
        }
        let y: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
        slopes.push(least_squares_slope(&x, &y));
        for (s, c) in sums.iter_mut().zip(&counts) {
            *s += *c as f64;
        }
    }
    if !seen_any {
        return Err(Error::EmptyPathSet);
    }
    if slopes.is_empty() {
        return Err(Error::DegenerateFit);
    }
    let k = slopes.len() as f64;
    let slope = slopes.iter().sum::<f64>() / k;
    let stderr = (slopes.len() > 1).then(|| {
        let var = slopes.iter().map(|s| (s - slope).powi(2)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    });
    Ok(DimensionEstimate {
        levels: levels.to_vec(),
        slope,
        stderr,
        path_slopes: slopes,
        mean_counts: sums.iter().map(|s| s / k).collect(),
        degenerate,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExitStatistics {
    pub n: usize,
    pub outer: usize,
    /// `π(n)` for every path that left `V_n` within its record.
    pub inner_exits: Vec<f64>,
    /// `π(N_outer)` for every path that left `V_{N_outer}` within its record.
    pub outer_exits: Vec<f64>,
    /// `Q̂(n, N_outer)`: paths that stayed outside `V_n` on `[π(n), π(N_outer))`.
    pub avoidance: BinomialEstimate,
    /// Paths that never left `V_{N_outer}` before their horizon.
    pub excluded: usize,
}

/// Exit data of a single path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExitRecord {
    pub inner_exit: Option<f64>,
    pub outer_exit: Option<f64>,
    /// No return to `V_n` between the two exits; meaningful only when
    /// `outer_exit` is present.
    pub avoided: bool,
}

fn check_exit_levels(n: usize, outer: usize) -> Result<()> {
    if outer >= n {
        return Err(Error::InvalidArgument(format!(
            "need N_outer < n (got N_outer = {outer}, n = {n})"
        )));
    }
    Ok(())
}

/// First exits of one path from `V_n` and `V_{N_outer}` (`N_outer < n`).
pub fn exit_record(path: &Trajectory, n: usize, outer: usize) -> Result<ExitRecord> {
    check_exit_levels(n, outer)?;
    check_level(path, n)?;
    let mut state = path.initial_state();
    let mut record = ExitRecord {
        inner_exit: None,
        outer_exit: None,
        avoided: true,
    };
    for e in path.events_until(path.meta().horizon) {
        state.assign_from(e.shell, &e.new_digits);
        if record.inner_exit.is_none() {
            if !state.in_ball(n) {
                record.inner_exit = Some(e.time);
            }
        } else if state.in_ball(n) {
            record.avoided = false;
        }
        if !state.in_ball(outer) {
            record.outer_exit = Some(e.time);
            break;
        }
    }
    Ok(record)
}

impl ExitStatistics {
    pub fn from_records<I>(n: usize, outer: usize, records: I) -> Result<Self>
    where
        I: IntoIterator<Item = ExitRecord>,
    {
        check_exit_levels(n, outer)?;
        let mut stats = ExitStatistics {
            n,
            outer,
            inner_exits: Vec::new(),
            outer_exits: Vec::new(),
            avoidance: BinomialEstimate::default(),
            excluded: 0,
        };
        let mut seen_any = false;
        for record in records {
            seen_any = true;
            if let Some(t) = record.inner_exit {
                stats.inner_exits.push(t);
            }
            match record.outer_exit {
                Some(t) => {
                    stats.outer_exits.push(t);
                    stats.avoidance.record(record.avoided);
                }
                None => stats.excluded += 1,
            }
        }
        if !seen_any {
            return Err(Error::EmptyPathSet);
        }
        Ok(stats)
    }
}

/// First-exit times from `V_n` and `V_{N_outer}` (`N_outer < n`), and the
/// fraction of paths that never re-enter `V_n` in between.
pub fn exit_statistics<I, T>(paths: I, n: usize, outer: usize) -> Result<ExitStatistics>
where
    I: IntoIterator<Item = T>,
    T: Borrow<Trajectory>,
{
    check_exit_levels(n, outer)?;
    let records = paths
        .into_iter()
        .map(|p| exit_record(p.borrow(), n, outer))
        .collect::<Result<Vec<_>>>()?;
    ExitStatistics::from_records(n, outer, records)
}

/// Sample mean and its standard error.
pub fn mean_and_stderr(samples: &[f64]) -> Option<(f64, f64)> {
    if samples.len() < 2 {
        return None;
    }
    let k = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / k;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Some((mean, (var / k).sqrt()))
}
