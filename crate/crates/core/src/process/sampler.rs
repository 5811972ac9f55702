//! Event-driven sampler for the quotient chain on `V / V_N`.
//!
//! A jump lands in shell `j` with probability `r_j / λ_N`. It keeps `d_1..d_j`,
//! moves `d_{j+1}` to a uniform different letter and redraws every deeper
//! digit uniformly. Jumps into shells `≥ N` do not move the quotient state and
//! are not generated.
//!
//! Randomness is counter based: path `i` uses ChaCha8 stream `i` under the
//! master seed, and event `k` starts at word `k · 2^16` of that stream. The
//! fields of an event are drawn in a fixed order (waiting time, shell, new
//! digits), so any event can be regenerated in isolation.

use std::ops::Range;

use num_bigint::BigUint;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use super::digits::{Alphabet, Digit, DigitState};
use super::trajectory::{Trajectory, TrajectoryMeta};
use crate::error::{Error, Result};
use crate::levy::ShellTable;
use crate::real::{Precision, Real};
use crate::tower::TowerProfile;

/// Events allowed per path unless configured otherwise.
pub const DEFAULT_EVENT_BUDGET: u64 = 10_000_000;

const WORDS_PER_EVENT_LOG2: u32 = 16;

/// One jump of the quotient chain.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpEvent {
    pub index: u64,
    pub time: f64,
    /// The shell `j` of the jump increment; digits `d_1..d_j` are untouched.
    pub shell: usize,
    /// New values of `d_{j+1}, …, d_N`.
    pub new_digits: Vec<Digit>,
}

/// Rates and alphabets of the chain, ready for sampling.
#[derive(Clone, Debug)]
pub struct QuotientChain {
    alphabets: Vec<Alphabet>,
    total_rate: f64,
    /// Cumulative shell probabilities; the last entry is exactly 1.
    cumulative: Vec<f64>,
}

impl QuotientChain {
    /// Rates are kept exact in the table and rounded once, at `prec`.
    pub fn from_table(table: &ShellTable, prec: Precision) -> Result<Self> {
        let total = table.total_rate().to_real(prec);
        let mut running = Real::zero(prec);
        let mut cumulative = Vec::with_capacity(table.levels());
        for record in table.records() {
            running = running + record.rate.to_real(prec);
            cumulative.push((&running / &total).to_f64());
        }
        let alphabets = table
            .alphabets()
            .iter()
            .map(|s| Alphabet::new(s).expect("tower alphabets have at least q letters"))
            .collect();
        Self::assemble(alphabets, total.to_f64(), cumulative)
    }

    /// A chain with arbitrary shell rates, for testing against small models.
    pub fn from_rates(alphabets: &[BigUint], rates: &[f64]) -> Result<Self> {
        if alphabets.is_empty() || alphabets.len() != rates.len() {
            return Err(Error::InvalidArgument(
                "need one positive rate per digit position".into(),
            ));
        }
        if rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidArgument("shell rates must be positive".into()));
        }
        let alphabets = alphabets
            .iter()
            .map(|s| {
                Alphabet::new(s)
                    .ok_or_else(|| Error::InvalidArgument("alphabets need at least two letters".into()))
            })
            .collect::<Result<_>>()?;
        let total: f64 = rates.iter().sum();
        let cumulative = rates
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r;
                Some(*acc / total)
            })
            .collect();
        Self::assemble(alphabets, total, cumulative)
    }

    fn assemble(alphabets: Vec<Alphabet>, total_rate: f64, mut cumulative: Vec<f64>) -> Result<Self> {
        if !(total_rate.is_finite() && total_rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "total jump rate {total_rate} is not a positive finite number"
            )));
        }
        *cumulative.last_mut().expect("at least one shell") = 1.0;
        Ok(QuotientChain {
            alphabets,
            total_rate,
            cumulative,
        })
    }

    pub fn levels(&self) -> usize {
        self.alphabets.len()
    }

    pub fn alphabets(&self) -> &[Alphabet] {
        &self.alphabets
    }

    pub fn total_rate(&self) -> f64 {
        self.total_rate
    }

    /// `r_j / λ_N` for `j = 0..N`.
    pub fn shell_probabilities(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.cumulative
            .iter()
            .map(|c| {
                let p = c - prev;
                prev = *c;
                p
            })
            .collect()
    }

    fn pick_shell(&self, u: f64) -> usize {
        self.cumulative
            .iter()
            .position(|c| u < *c)
            .unwrap_or(self.cumulative.len() - 1)
    }

    /// The infinite event stream of path `path` from the identity.
    pub fn events(&self, seed: u64, path: u64) -> PathSampler<'_> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path);
        PathSampler {
            chain: self,
            rng,
            next_index: 0,
            time: 0.0,
            state: DigitState::identity(self.levels()),
        }
    }

    /// Events up to `config.t_end` (or the stop rule), with the budget enforced.
    pub fn sample_events(&self, config: &PathConfig, path: u64) -> Result<(Vec<JumpEvent>, f64)> {
        config.validate(self.total_rate)?;
        let mut events = Vec::new();
        let mut horizon = config.t_end;
        for event in self.events(config.seed, path) {
            if event.time > config.t_end {
                break;
            }
            if events.len() as u64 >= config.budget {
                return Err(Error::EventBudget {
                    path,
                    budget: config.budget,
                    t: config.t_end,
                });
            }
            let stop = config.stop.halts_after(&event);
            if stop {
                horizon = event.time;
            }
            events.push(event);
            if stop {
                break;
            }
        }
        Ok((events, horizon))
    }
}

/// Iterator over the jumps of one path. Also tracks the current state.
pub struct PathSampler<'a> {
    chain: &'a QuotientChain,
    rng: ChaCha8Rng,
    next_index: u64,
    time: f64,
    state: DigitState,
}

impl PathSampler<'_> {
    pub fn state(&self) -> &DigitState {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.time
    }
}

impl Iterator for PathSampler<'_> {
    type Item = JumpEvent;

    fn next(&mut self) -> Option<JumpEvent> {
        let index = self.next_index;
        self.next_index += 1;
        self.rng.set_word_pos(u128::from(index) << WORDS_PER_EVENT_LOG2);
        let wait: f64 = Exp1.sample(&mut self.rng);
        self.time += wait / self.chain.total_rate;
        let shell = self.chain.pick_shell(self.rng.gen::<f64>());
        let alphabets = &self.chain.alphabets[shell..];
        let current = &self.state.digits()[shell];
        let mut new_digits = Vec::with_capacity(alphabets.len());
        new_digits.push(alphabets[0].sample_other(&mut self.rng, current));
        new_digits.extend(alphabets[1..].iter().map(|a| a.sample(&mut self.rng)));
        self.state.assign_from(shell, &new_digits);
        Some(JumpEvent {
            index,
            time: self.time,
            shell,
            new_digits,
        })
    }
}

/// When to stop a path before `t_end`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StopRule {
    #[default]
    Never,
    /// Stop right after the first jump into a shell `< n`, i.e. at the first
    /// exit from `V_n` of a path started at the identity.
    ExitBall(usize),
}

impl StopRule {
    fn halts_after(self, event: &JumpEvent) -> bool {
        match self {
            StopRule::Never => false,
            StopRule::ExitBall(n) => event.shell < n,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathConfig {
    pub t_end: f64,
    pub seed: u64,
    pub budget: u64,
    pub stop: StopRule,
}

impl PathConfig {
    pub fn new(t_end: f64, seed: u64) -> Self {
        PathConfig {
            t_end,
            seed,
            budget: DEFAULT_EVENT_BUDGET,
            stop: StopRule::Never,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_stop(mut self, stop: StopRule) -> Self {
        self.stop = stop;
        self
    }

    fn validate(&self, total_rate: f64) -> Result<()> {
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "t_end must be positive and finite (got {})",
                self.t_end
            )));
        }
        // With a stop rule the run length is random; the budget is then only
        // enforced while sampling.
        let expected = total_rate * self.t_end;
        if self.stop == StopRule::Never && expected > self.budget as f64 {
            return Err(Error::BudgetTooSmall {
                expected,
                budget: self.budget,
            });
        }
        Ok(())
    }
}

/// A chain built from a shell table, which labels its trajectories.
#[derive(Clone, Debug)]
pub struct Simulator {
    chain: QuotientChain,
    profile: TowerProfile,
    alpha: BigRational,
    total_rate: String,
}

impl Simulator {
    pub fn new(table: &ShellTable, prec: Precision) -> Result<Self> {
        Ok(Simulator {
            chain: QuotientChain::from_table(table, prec)?,
            profile: table.profile().clone(),
            alpha: table.alpha().clone(),
            total_rate: table
                .total_rate()
                .to_real(prec)
                .to_sci_string(prec.digits() as usize),
        })
    }

    pub fn chain(&self) -> &QuotientChain {
        &self.chain
    }

    pub fn sample_path(&self, config: &PathConfig, path: u64) -> Result<Trajectory> {
        let (events, horizon) = self.chain.sample_events(config, path)?;
        let meta = TrajectoryMeta {
            profile: self.profile.clone(),
            alpha: self.alpha.clone(),
            levels: self.chain.levels(),
            seed: config.seed,
            path,
            t_end: config.t_end,
            horizon,
            total_rate: self.total_rate.clone(),
        };
        Ok(Trajectory::new(meta, events))
    }

    /// Paths sampled in parallel and returned in path-index order.
    pub fn sample_paths(&self, config: &PathConfig, paths: Range<u64>) -> Result<Vec<Trajectory>> {
        self.map_paths(config, paths, Ok::<_, Error>)
    }

    /// Samples each path, reduces it with `f` and drops it, so memory holds
    /// one trajectory per worker. Results are in path-index order.
    pub fn map_paths<R, E, F>(&self, config: &PathConfig, paths: Range<u64>, f: F) -> std::result::Result<Vec<R>, E>
    where
        R: Send,
        E: From<Error> + Send,
        F: Fn(Trajectory) -> std::result::Result<R, E> + Sync,
    {
        paths
            .into_par_iter()
            .map(|i| f(self.sample_path(config, i)?))
            .collect()
    }
}

/// Path 0 of the quotient chain for `table`, with the default budget.
pub fn sample_path(table: &ShellTable, t_end: f64, seed: u64) -> Result<Trajectory> {
    Simulator::new(table, Precision::default())?.sample_path(&PathConfig::new(t_end, seed), 0)
}
