//! JSONL and JSON shapes exchanged with other tools and the review UI.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// One line of `classify` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionLine {
    pub object_id: String,
    pub probability: f64,
    pub label: u8,
}

/// Reference label, as used by oracles and ground-truth files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleLine {
    pub object_id: String,
    pub quality_label: u8,
}

/// Externally computed caption scores for one object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionScoresLine {
    pub object_id: String,
    pub scores: BTreeMap<String, f64>,
}

/// Queue entry served to the review UI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewItem {
    pub object_id: String,
    pub image_uris: Vec<String>,
    pub mean_probability: f64,
    pub entropy: f64,
    pub caption: Option<String>,
    pub current_label: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRequest {
    pub object_id: String,
    pub quality_label: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    /// Objects with an uncertainty report that may still be reviewed.
    pub total: usize,
    pub labeled: usize,
    pub remaining: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub error: String,
}
