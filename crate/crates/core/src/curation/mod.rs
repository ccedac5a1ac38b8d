//! Corpus manifest, quality rubric, caption categories, subset filters and
//! the label-event log that drives refinement cycles.

mod caption;
mod events;
mod filter;
mod manifest;

pub use caption::{caption_classify, keyword_hits, tokenize, CaptionTaxonomy};
pub use events::{
    append_events, apply_event, events_to_jsonl, parse_events, read_events, refine_cycle, replay,
    LabelEvent, Origin, RefineOutcome,
};
pub use filter::{
    axis_argmax, filter_caption_subset, find_misclassifications, Mismatch, MismatchReason,
    DEFAULT_MIN_HQ, GATE_THRESHOLD,
};
pub use manifest::{binary_label, Manifest, ManifestRecord, Prediction, Source, Split};

use thiserror::Error;

use crate::io::FormatError;

#[derive(Debug, Error)]
pub enum CurationError {
    #[error("quality label {0} outside 1..=5")]
    Label(i64),
    #[error("duplicate object id {0:?}")]
    DuplicateId(String),
    #[error("unknown object id {0:?}")]
    UnknownId(String),
    #[error("object {0:?} is in the frozen test split")]
    TestFrozen(String),
    #[error("object {0:?} is in split {1} without a quality label")]
    MissingLabel(String, &'static str),
    #[error("caption is empty and no external scores were given")]
    EmptyCaption,
    #[error("invalid caption score for {0:?}")]
    Score(String),
    #[error("invalid taxonomy: {0}")]
    Taxonomy(String),
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
    #[error("event for {id:?} expects old label {expected:?} but the manifest has {found:?}")]
    ReplayMismatch {
        id: String,
        expected: Option<u8>,
        found: Option<u8>,
    },
    #[error("split: {0}")]
    Split(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Format(#[from] FormatError),
}
