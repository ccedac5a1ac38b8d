use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{binary_label, CurationError, Manifest, Split};
use crate::embedding::ObjectId;
use crate::io::{atomic_write, FormatError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    ManualInitial,
    UncertaintyReview,
    CaptionCorrection,
}

/// One label assignment. `timestamp` is a logical clock: the event's
/// 1-based position in its log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelEvent {
    pub object_id: ObjectId,
    #[serde(default)]
    pub old_label: Option<u8>,
    pub new_label: u8,
    #[serde(default)]
    pub cycle: u32,
    pub origin: Origin,
    #[serde(default)]
    pub timestamp: u64,
}

impl LabelEvent {
    pub fn request(object_id: ObjectId, new_label: u8, origin: Origin) -> Self {
        LabelEvent {
            object_id,
            old_label: None,
            new_label,
            cycle: 0,
            origin,
            timestamp: 0,
        }
    }
}

/// Applies one event in place. Unlabeled records join the train split in the
/// event's cycle; test records are never modified.
pub fn apply_event(manifest: &mut Manifest, event: &LabelEvent) -> Result<(), CurationError> {
    binary_label(event.new_label)?;
    let id = event.object_id.as_str();
    let rec = manifest
        .get_mut(id)
        .ok_or_else(|| CurationError::UnknownId(id.to_string()))?;
    match rec.split {
        Split::Test => return Err(CurationError::TestFrozen(id.to_string())),
        Split::Unlabeled => {
            rec.split = Split::Train;
            rec.cycle_added = event.cycle;
        }
        Split::Train => {}
    }
    rec.quality_label = Some(event.new_label);
    Ok(())
}

fn strip_predictions(manifest: &Manifest) -> Manifest {
    manifest
        .map_records(|r| r.predicted = None)
        .expect("clearing predictions keeps a valid manifest")
}

/// Rebuilds a manifest from its initial state and the full event log.
/// Each event's `old_label` must match the state it was applied to.
pub fn replay(initial: &Manifest, log: &[LabelEvent]) -> Result<Manifest, CurationError> {
    let mut m = strip_predictions(initial);
    for e in log {
        let found = m.get(e.object_id.as_str()).and_then(|r| r.quality_label);
        if m.get(e.object_id.as_str()).is_some() && found != e.old_label {
            return Err(CurationError::ReplayMismatch {
                id: e.object_id.to_string(),
                expected: e.old_label,
                found,
            });
        }
        apply_event(&mut m, e)?;
    }
    m.validate()?;
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    pub manifest: Manifest,
    /// Events to append to the log, stamped with cycle, old label and clock.
    pub appended: Vec<LabelEvent>,
    pub cycle: u32,
}

/// One refinement cycle: review results then caption corrections are applied
/// in order. The cycle number is one past the highest cycle seen in the
/// manifest or log. Predictions are dropped from the output. Nothing is
/// applied if any event is rejected.
pub fn refine_cycle(
    manifest: &Manifest,
    log: &[LabelEvent],
    reviewed: &[LabelEvent],
    corrections: &[LabelEvent],
) -> Result<RefineOutcome, CurationError> {
    let current = manifest
        .records()
        .iter()
        .map(|r| r.cycle_added)
        .chain(log.iter().map(|e| e.cycle))
        .max()
        .unwrap_or(0);
    let cycle = current + 1;
    let mut m = strip_predictions(manifest);
    let start = log.iter().map(|e| e.timestamp).max().unwrap_or(0) + 1;
    let mut appended = Vec::with_capacity(reviewed.len() + corrections.len());
    for (clock, e) in (start..).zip(reviewed.iter().chain(corrections)) {
        let old_label = m.get(e.object_id.as_str()).and_then(|r| r.quality_label);
        let stamped = LabelEvent {
            old_label,
            cycle,
            timestamp: clock,
            ..e.clone()
        };
        apply_event(&mut m, &stamped)?;
        appended.push(stamped);
    }
    m.validate()?;
    Ok(RefineOutcome {
        manifest: m,
        appended,
        cycle,
    })
}

pub fn events_to_jsonl(events: &[LabelEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("events serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_events(text: &str) -> Result<Vec<LabelEvent>, CurationError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CurationError::Parse {
                line: i + 1,
                msg: e.to_string(),
            })
        })
        .collect()
}

/// Reads a log; a missing file is an empty log.
pub fn read_events(path: &Path) -> Result<Vec<LabelEvent>, CurationError> {
    match std::fs::read_to_string(path) {
        Ok(text) => parse_events(&text),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(FormatError::from(e).into()),
    }
}

/// Appends by rewriting the whole log through one atomic rename, so readers
/// see either the old or the new log.
pub fn append_events(path: &Path, events: &[LabelEvent]) -> Result<(), CurationError> {
    let mut bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(FormatError::from(e).into()),
    };
    if bytes.last().is_some_and(|&b| b != b'\n') {
        bytes.push(b'\n');
    }
    bytes.extend_from_slice(events_to_jsonl(events).as_bytes());
    atomic_write(path, &bytes).map_err(FormatError::from)?;
    Ok(())
}
