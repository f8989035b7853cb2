//! Adaptive threshold procedure over a [`LevelTable`].
//!
//! The session starts at the coarsest level and steps one level finer after
//! every correct answer. The first wrong answer re-presents the same level;
//! from then on each further wrong answer steps one level coarser and the
//! first correct answer ends the session at that level. A correct answer at
//! the finest level ends the session there, and two consecutive wrong answers
//! at the coarsest level end it outside limits.

use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{DisparityLevel, LevelTable};
use crate::renderer::Orientation;
use crate::{Acuity, Error, Result};

/// Wall time charged to each simulated trial.
pub const SIMULATED_TRIAL_MS: u64 = 2_500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Descending,
    PostFail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StaircaseOutcome {
    Threshold(DisparityLevel),
    OutsideLimits,
}

impl StaircaseOutcome {
    pub fn acuity(&self) -> Acuity {
        match self {
            StaircaseOutcome::Threshold(level) => Acuity::Arcsec(level.arcsec),
            StaircaseOutcome::OutsideLimits => Acuity::OutsideLimits,
        }
    }

    /// Rounded arcsec, the value shown to a clinician.
    pub fn arcsec_rounded(&self) -> Option<u32> {
        match self {
            StaircaseOutcome::Threshold(level) => Some(level.arcsec_rounded),
            StaircaseOutcome::OutsideLimits => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub level_index: usize,
    pub pixel_shift: u32,
    pub arcsec: f64,
    pub presented_orientation: Orientation,
    /// Absent when the outcome was forced by a simulated observer.
    pub response_orientation: Option<Orientation>,
    pub correct: bool,
    pub elapsed_ms: u64,
}

/// What the `trial`-th presentation of a session shows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub orientation: Orientation,
    /// Seed for the stimulus dot field.
    pub stimulus_seed: u64,
}

/// Uniform orientation and dot-field seed for trial `trial` of a session.
/// Each trial has its own ChaCha stream, so plans never depend on history.
pub fn trial_plan(session_seed: u64, trial: usize) -> TrialPlan {
    let mut rng = ChaCha8Rng::seed_from_u64(session_seed);
    rng.set_stream(trial as u64);
    let orientation = Orientation::from_index(rng.random_range(0..4usize));
    TrialPlan { orientation, stimulus_seed: rng.next_u64() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaircaseState {
    table: LevelTable,
    seed: u64,
    current_index: usize,
    phase: Phase,
    trials: Vec<TrialRecord>,
    outcome: Option<StaircaseOutcome>,
}

impl StaircaseState {
    pub fn new(table: LevelTable, seed: u64) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::EmptyTable);
        }
        let current_index = table.len();
        Ok(Self { table, seed, current_index, phase: Phase::Descending, trials: Vec::new(), outcome: None })
    }

    /// Rebuilds a session from its trial log, checking every trial against
    /// the transition rules and the seeded orientation sequence.
    pub fn replay(table: LevelTable, seed: u64, trials: &[TrialRecord]) -> Result<Self> {
        let mut state = Self::new(table, seed)?;
        for (i, trial) in trials.iter().enumerate() {
            let level = *state.current_level();
            let plan = state.pending().ok_or(Error::ReplayMismatch(i))?;
            let consistent = trial.level_index == level.index
                && trial.pixel_shift == level.pixel_shift
                && trial.presented_orientation == plan.orientation
                && trial.response_orientation.is_none_or(|r| (r == plan.orientation) == trial.correct);
            if !consistent {
                return Err(Error::ReplayMismatch(i));
            }
            state.record(trial.response_orientation, trial.correct, trial.elapsed_ms);
        }
        Ok(state)
    }

    pub fn table(&self) -> &LevelTable {
        &self.table
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn current_index(&self) -> usize {
        self.current_index
    }

    pub fn current_level(&self) -> &DisparityLevel {
        &self.table.levels[self.current_index - 1]
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn trials(&self) -> &[TrialRecord] {
        &self.trials
    }

    pub fn outcome(&self) -> Option<&StaircaseOutcome> {
        self.outcome.as_ref()
    }

    pub fn is_finished(&self) -> bool {
        self.outcome.is_some()
    }

    /// The presentation awaiting a response, or `None` once finished.
    pub fn pending(&self) -> Option<TrialPlan> {
        (!self.is_finished()).then(|| trial_plan(self.seed, self.trials.len()))
    }

    /// Total elapsed time over all recorded trials.
    pub fn elapsed_ms(&self) -> u64 {
        self.trials.iter().map(|t| t.elapsed_ms).sum()
    }

    /// Scores a 4AFC response to the pending trial. Returns whether it was
    /// correct.
    pub fn step(&mut self, response: Orientation) -> Result<bool> {
        self.step_timed(response, 0)
    }

    pub fn step_timed(&mut self, response: Orientation, elapsed_ms: u64) -> Result<bool> {
        let plan = self.pending().ok_or(Error::SessionFinished)?;
        let correct = response == plan.orientation;
        self.record(Some(response), correct, elapsed_ms);
        Ok(correct)
    }

    /// Records a trial whose correctness was decided without a response.
    pub fn step_forced(&mut self, correct: bool, elapsed_ms: u64) -> Result<()> {
        if self.is_finished() {
            return Err(Error::SessionFinished);
        }
        self.record(None, correct, elapsed_ms);
        Ok(())
    }

    fn record(&mut self, response: Option<Orientation>, correct: bool, elapsed_ms: u64) {
        let level = *self.current_level();
        let plan = trial_plan(self.seed, self.trials.len());
        self.trials.push(TrialRecord {
            level_index: level.index,
            pixel_shift: level.pixel_shift,
            arcsec: level.arcsec,
            presented_orientation: plan.orientation,
            response_orientation: response,
            correct,
            elapsed_ms,
        });
        self.advance(correct);
    }

    fn advance(&mut self, correct: bool) {
        let n = self.table.len();
        match (self.phase, correct) {
            (Phase::Descending, true) if self.current_index == 1 => {
                self.outcome = Some(StaircaseOutcome::Threshold(*self.current_level()));
            }
            (Phase::Descending, true) => self.current_index -= 1,
            (Phase::Descending, false) => self.phase = Phase::PostFail,
            (Phase::PostFail, true) => {
                self.outcome = Some(StaircaseOutcome::Threshold(*self.current_level()));
            }
            (Phase::PostFail, false) if self.current_index == n => {
                self.outcome = Some(StaircaseOutcome::OutsideLimits);
            }
            (Phase::PostFail, false) => self.current_index += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObserverKind {
    /// Correct exactly when the presented disparity reaches the threshold.
    Deterministic { threshold_arcsec: f64 },
    /// Logistic psychometric function above the 4AFC guess rate.
    Psychometric { threshold_arcsec: f64, slope: f64, lapse_rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulatedObserver {
    pub kind: ObserverKind,
    pub seed: u64,
}

impl SimulatedObserver {
    pub fn deterministic(threshold_arcsec: f64) -> Self {
        Self { kind: ObserverKind::Deterministic { threshold_arcsec }, seed: 0 }
    }

    pub fn psychometric(threshold_arcsec: f64, slope: f64, lapse_rate: f64, seed: u64) -> Self {
        Self { kind: ObserverKind::Psychometric { threshold_arcsec, slope, lapse_rate }, seed }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ObserverKind::Deterministic { threshold_arcsec } if threshold_arcsec.is_nan() => {
                Err(Error::InvalidObserver("threshold must be a number"))
            }
            ObserverKind::Deterministic { .. } => Ok(()),
            ObserverKind::Psychometric { threshold_arcsec, slope, lapse_rate } => {
                if !threshold_arcsec.is_finite() {
                    Err(Error::InvalidObserver("threshold must be finite"))
                } else if !(slope.is_finite() && slope > 0.0) {
                    Err(Error::InvalidObserver("slope must be positive"))
                } else if !(0.0..=0.75).contains(&lapse_rate) {
                    Err(Error::InvalidObserver("lapse rate must lie in [0, 0.75]"))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Probability of a correct answer at `arcsec`.
    pub fn p_correct(&self, arcsec: f64) -> f64 {
        match self.kind {
            ObserverKind::Deterministic { threshold_arcsec } => {
                if arcsec >= threshold_arcsec {
                    1.0
                } else {
                    0.0
                }
            }
            ObserverKind::Psychometric { threshold_arcsec, slope, lapse_rate } => {
                let logistic = 1.0 / (1.0 + libm::exp(-(arcsec - threshold_arcsec) / slope));
                0.25 + (0.75 - lapse_rate) * logistic
            }
        }
    }
}

/// Runs a full session against a simulated observer.
pub fn simulate(observer: &SimulatedObserver, table: &LevelTable, seed: u64) -> Result<StaircaseState> {
    observer.validate()?;
    let mut state = StaircaseState::new(table.clone(), seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(observer.seed);
    while !state.is_finished() {
        let p = observer.p_correct(state.current_level().arcsec);
        let correct = match observer.kind {
            ObserverKind::Deterministic { .. } => p >= 1.0,
            ObserverKind::Psychometric { .. } => rng.random::<f64>() < p,
        };
        state.step_forced(correct, SIMULATED_TRIAL_MS)?;
    }
    Ok(state)
}
