//! Recorded paths of the quotient chain and their CSV form.

use std::io::Write;

use num_rational::BigRational;
use serde::Serialize;

use super::digits::{Digit, DigitState};
use super::sampler::JumpEvent;
use crate::error::{Error, Result};
use crate::rational::serde_rational;
use crate::tower::TowerProfile;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryMeta {
    pub profile: TowerProfile,
    #[serde(with = "serde_rational")]
    pub alpha: BigRational,
    /// The quotient depth `N`.
    pub levels: usize,
    pub seed: u64,
    pub path: u64,
    pub t_end: f64,
    /// The record is complete on `[0, horizon]`; below `t_end` only when a
    /// stop rule fired.
    pub horizon: f64,
    /// `λ_N` in decimal.
    pub total_rate: String,
}

/// A jump as exported: digit runs are decimal letters joined with `:`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventRecord {
    pub event_index: u64,
    pub time: f64,
    pub shell: usize,
    pub digits_changed_from: String,
    pub digits_changed_to: String,
}

/// A path from the identity: metadata plus the ordered jumps.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    meta: TrajectoryMeta,
    events: Vec<JumpEvent>,
}

impl Trajectory {
    pub fn new(meta: TrajectoryMeta, events: Vec<JumpEvent>) -> Self {
        Trajectory { meta, events }
    }

    pub fn meta(&self) -> &TrajectoryMeta {
        &self.meta
    }

    pub fn events(&self) -> &[JumpEvent] {
        &self.events
    }

    pub fn initial_state(&self) -> DigitState {
        DigitState::identity(self.meta.levels)
    }

    pub(crate) fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.meta.horizon).contains(&t) {
            return Err(Error::InvalidArgument(format!(
                "time {t} is outside the recorded window [0, {}] of path {}",
                self.meta.horizon, self.meta.path
            )));
        }
        Ok(())
    }

    /// Events with `time ≤ t`.
    pub fn events_until(&self, t: f64) -> &[JumpEvent] {
        let end = self.events.partition_point(|e| e.time <= t);
        &self.events[..end]
    }

    /// The state at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> Result<DigitState> {
        self.check_time(t)?;
        let mut state = self.initial_state();
        for e in self.events_until(t) {
            state.assign_from(e.shell, &e.new_digits);
        }
        Ok(state)
    }

    /// Number of jumps in the window `(t0, t1]`.
    pub fn jumps_between(&self, t0: f64, t1: f64) -> usize {
        self.events_until(t1).len() - self.events_until(t0).len()
    }

    /// One export row per jump, with the digits it overwrote.
    pub fn records(&self) -> Vec<EventRecord> {
        let mut state = self.initial_state();
        self.events
            .iter()
            .map(|e| {
                let old = state.replace_from(e.shell, &e.new_digits);
                EventRecord {
                    event_index: e.index,
                    time: e.time,
                    shell: e.shell,
                    digits_changed_from: join_digits(&old),
                    digits_changed_to: join_digits(&e.new_digits),
                }
            })
            .collect()
    }

    /// CSV with a `# {json}` metadata line, one row per jump. Digit runs are
    /// joined with `:`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# {}", serde_json::to_string(&self.meta)?)?;
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record([
            "event_index",
            "time",
            "shell",
            "digits_changed_from",
            "digits_changed_to",
        ])?;
        for r in self.records() {
            writer.write_record([
                r.event_index.to_string(),
                r.time.to_string(),
                r.shell.to_string(),
                r.digits_changed_from,
                r.digits_changed_to,
            ])?;
        }
        writer.flush()?;
        Ok(())
    }

    /// `{"meta": …, "events": [...]}`.
    pub fn to_json(&self) -> Result<serde_json::Value> {
        Ok(serde_json::json!({
            "meta": serde_json::to_value(&self.meta)?,
            "events": serde_json::to_value(self.records())?,
        }))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("CSV output is ASCII"))
    }
}

fn join_digits(digits: &[Digit]) -> String {
    digits
        .iter()
        .map(Digit::to_string)
        .collect::<Vec<_>>()
        .join(":")
}
