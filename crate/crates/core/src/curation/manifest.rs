use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CurationError;
use crate::embedding::ObjectId;
use crate::io::{atomic_write, FormatError};
use crate::mixer::split_dataset;

/// Maps the 1–5 rubric to the binary target: 4 and 5 are high quality.
pub fn binary_label(q: u8) -> Result<u8, CurationError> {
    match q {
        1..=3 => Ok(0),
        4 | 5 => Ok(1),
        _ => Err(CurationError::Label(q as i64)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Sketchfab,
    Github,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    Unlabeled,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
            Split::Unlabeled => "unlabeled",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub probability: f64,
    pub label: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub object_id: ObjectId,
    pub source: Source,
    pub source_uri: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub license: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_label: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption_scores: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aesthetic_score: Option<f64>,
    pub split: Split,
    #[serde(default)]
    pub cycle_added: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted: Option<Prediction>,
}

impl ManifestRecord {
    pub fn new(object_id: ObjectId, source: Source, source_uri: impl Into<String>) -> Self {
        ManifestRecord {
            object_id,
            source,
            source_uri: source_uri.into(),
            license: None,
            quality_label: None,
            caption: None,
            caption_scores: None,
            aesthetic_score: None,
            split: Split::Unlabeled,
            cycle_added: 0,
            predicted: None,
        }
    }

    pub fn id(&self) -> &str {
        self.object_id.as_str()
    }

    pub fn binary(&self) -> Option<u8> {
        self.quality_label.and_then(|q| binary_label(q).ok())
    }

    pub fn validate(&self) -> Result<(), CurationError> {
        if let Some(q) = self.quality_label {
            binary_label(q)?;
        }
        if self.split != Split::Unlabeled && self.quality_label.is_none() {
            return Err(CurationError::MissingLabel(
                self.id().to_string(),
                self.split.as_str(),
            ));
        }
        Ok(())
    }
}

/// Records in file order with an id index. Serialized as JSONL, one record
/// per line with a fixed key order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    records: Vec<ManifestRecord>,
    index: HashMap<String, usize>,
}

impl Manifest {
    pub fn new(records: Vec<ManifestRecord>) -> Result<Self, CurationError> {
        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            r.validate()?;
            if index.insert(r.id().to_string(), i).is_some() {
                return Err(CurationError::DuplicateId(r.id().to_string()));
            }
        }
        Ok(Manifest { records, index })
    }

    pub fn records(&self) -> &[ManifestRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ManifestRecord> {
        self.index.get(id).map(|&i| &self.records[i])
    }

    /// Mutable access; callers must keep the record valid.
    pub(crate) fn get_mut(&mut self, id: &str) -> Option<&mut ManifestRecord> {
        self.index.get(id).map(|&i| &mut self.records[i])
    }

    pub fn validate(&self) -> Result<(), CurationError> {
        self.records.iter().try_for_each(ManifestRecord::validate)
    }

    /// Applies `f` to every record and re-validates.
    pub fn map_records(
        &self,
        f: impl FnMut(&mut ManifestRecord),
    ) -> Result<Manifest, CurationError> {
        let mut records = self.records.clone();
        records.iter_mut().for_each(f);
        Manifest::new(records)
    }

    pub fn count_split(&self, split: Split) -> usize {
        self.records.iter().filter(|r| r.split == split).count()
    }

    /// Labeled records of one split as (id, binary label), in file order.
    pub fn binary_labels(&self, split: Split) -> Vec<(String, u8)> {
        self.records
            .iter()
            .filter(|r| r.split == split)
            .filter_map(|r| r.binary().map(|b| (r.id().to_string(), b)))
            .collect()
    }

    /// Stratified train/test assignment of every labeled record; unlabeled
    /// records are untouched.
    pub fn assign_split(&self, fraction: f64, seed: u64) -> Result<Manifest, CurationError> {
        let labels: Vec<(String, u8)> = self
            .records
            .iter()
            .filter_map(|r| r.binary().map(|b| (r.id().to_string(), b)))
            .collect();
        let (train, _) = split_dataset(&labels, fraction, seed)
            .map_err(|e| CurationError::Split(e.to_string()))?;
        let train: HashSet<String> = train.into_iter().collect();
        self.map_records(|r| {
            if r.quality_label.is_some() {
                r.split = if train.contains(r.id()) {
                    Split::Train
                } else {
                    Split::Test
                };
            }
        })
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("manifest records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, CurationError> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r: ManifestRecord =
                serde_json::from_str(line).map_err(|e| CurationError::Parse {
                    line: i + 1,
                    msg: e.to_string(),
                })?;
            records.push(r);
        }
        Manifest::new(records)
    }

    pub fn read(path: &Path) -> Result<Self, CurationError> {
        let text = std::fs::read_to_string(path).map_err(FormatError::from)?;
        Self::from_jsonl(&text)
    }

    pub fn write(&self, path: &Path) -> Result<(), CurationError> {
        atomic_write(path, self.to_jsonl().as_bytes()).map_err(FormatError::from)?;
        Ok(())
    }
}
