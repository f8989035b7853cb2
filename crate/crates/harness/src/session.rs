//! Persistable session records and their JSON-lines store.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use stereo_core::{Acuity, DisplayProfile, LevelTable, StaircaseOutcome, StaircaseState, TrialRecord};
use uuid::Uuid;

use crate::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: Uuid,
    pub created_at: DateTime<Utc>,
    pub profile: DisplayProfile,
    pub distance_m: f64,
    pub reference_m: f64,
    /// `None` in views of a running session: the seed fixes every upcoming
    /// orientation.
    pub seed: Option<u64>,
    pub trials: Vec<TrialRecord>,
    /// Rounded arcsec of the final level, or OL. Present once finished.
    pub outcome: Option<Acuity>,
    pub outcome_level: Option<usize>,
    pub level_table: LevelTable,
}

impl SessionRecord {
    pub fn from_state(session_id: Uuid, created_at: DateTime<Utc>, profile: DisplayProfile, state: &StaircaseState) -> Self {
        let table = state.table();
        let (outcome, outcome_level) = match state.outcome() {
            None => (None, None),
            Some(StaircaseOutcome::OutsideLimits) => (Some(Acuity::OutsideLimits), None),
            Some(StaircaseOutcome::Threshold(level)) => {
                (Some(Acuity::Arcsec(level.arcsec_rounded as f64)), Some(level.index))
            }
        };
        Self {
            session_id,
            created_at,
            profile,
            distance_m: table.distance_m,
            reference_m: table.reference_distance_m,
            seed: Some(state.seed()),
            trials: state.trials().to_vec(),
            outcome,
            outcome_level,
            level_table: table.clone(),
        }
    }

    pub fn is_finished(&self) -> bool {
        self.outcome.is_some()
    }

    /// The record as shown to clients: seed withheld until the session ends.
    pub fn public_view(&self) -> Self {
        let mut view = self.clone();
        if !self.is_finished() {
            view.seed = None;
        }
        view
    }

    /// Re-runs the trial log through the staircase and checks the stored
    /// outcome.
    pub fn replay(&self) -> Result<StaircaseState> {
        let seed = self.seed.ok_or_else(|| HarnessError::Usage("record has no seed to replay".into()))?;
        let state = StaircaseState::replay(self.level_table.clone(), seed, &self.trials)?;
        let rebuilt = Self::from_state(self.session_id, self.created_at, self.profile, &state);
        if rebuilt.outcome != self.outcome || rebuilt.outcome_level != self.outcome_level {
            return Err(HarnessError::Usage(format!("session {} replays to a different outcome", self.session_id)));
        }
        Ok(state)
    }

    /// Equal up to id, creation time and trial timings.
    pub fn same_transcript(&self, other: &Self) -> bool {
        let strip = |r: &Self| {
            let mut r = r.clone();
            r.session_id = Uuid::nil();
            r.created_at = DateTime::<Utc>::UNIX_EPOCH;
            for t in &mut r.trials {
                t.elapsed_ms = 0;
            }
            r
        };
        strip(self) == strip(other)
    }
}

/// Append-only JSON-lines log; the last line for an id is its current state.
#[derive(Debug)]
pub struct SessionStore {
    path: PathBuf,
    file: Mutex<File>,
}

impl SessionStore {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(|e| HarnessError::io(&path, e))?;
        Ok(Self { path, file: Mutex::new(file) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, record: &SessionRecord) -> Result<()> {
        let mut line = serde_json::to_vec(record)?;
        line.push(b'\n');
        let mut file = self.file.lock().expect("store lock poisoned");
        file.write_all(&line).and_then(|()| file.flush()).map_err(|e| HarnessError::io(&self.path, e))
    }

    pub fn load(&self) -> Result<BTreeMap<Uuid, SessionRecord>> {
        load(&self.path)
    }
}

pub fn load(path: &Path) -> Result<BTreeMap<Uuid, SessionRecord>> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut sessions = BTreeMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| HarnessError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SessionRecord = serde_json::from_str(&line)
            .map_err(|e| HarnessError::Usage(format!("{}:{}: {e}", path.display(), i + 1)))?;
        sessions.insert(record.session_id, record);
    }
    Ok(sessions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use stereo_core::geometry::build_level_table;

    fn finished_state(seed: u64) -> (DisplayProfile, StaircaseState) {
        let profile = DisplayProfile::new(264.0, 2048, 1536).unwrap();
        let mut state = StaircaseState::new(build_level_table(&profile, 0.5, 10).unwrap(), seed).unwrap();
        while !state.is_finished() {
            let shown = state.pending().unwrap().orientation;
            let answer = if state.current_level().arcsec >= 100.0 { shown } else { shown.rotated_cw() };
            state.step_timed(answer, 900).unwrap();
        }
        (profile, state)
    }

    #[test]
    fn replay_and_redaction() {
        let (profile, state) = finished_state(4);
        let record = SessionRecord::from_state(Uuid::new_v4(), Utc::now(), profile, &state);
        assert_eq!(record.outcome, Some(Acuity::Arcsec(119.0)));
        assert_eq!(record.public_view().seed, Some(4));
        assert_eq!(record.replay().unwrap(), state);

        let mut running = record.clone();
        running.outcome = None;
        running.outcome_level = None;
        assert_eq!(running.public_view().seed, None);
        assert!(running.replay().is_err());
    }

    #[test]
    fn transcripts_ignore_ids_and_timing() {
        let (profile, state) = finished_state(4);
        let a = SessionRecord::from_state(Uuid::new_v4(), Utc::now(), profile, &state);
        let mut b = SessionRecord::from_state(Uuid::new_v4(), Utc::now(), profile, &state);
        b.trials[0].elapsed_ms = 1;
        assert!(a.same_transcript(&b));
        b.seed = Some(5);
        assert!(!a.same_transcript(&b));
    }

    #[test]
    fn store_keeps_last_line() {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::open(dir.path().join("s.jsonl")).unwrap();
        let (profile, state) = finished_state(9);
        let mut record = SessionRecord::from_state(Uuid::new_v4(), Utc::now(), profile, &state);
        let done = record.clone();
        record.trials.truncate(2);
        record.outcome = None;
        store.append(&record).unwrap();
        store.append(&done).unwrap();
        let loaded = store.load().unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(loaded[&done.session_id], done);
    }
}
