use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{caption_classify, CaptionTaxonomy, CurationError, Manifest};
use crate::embedding::ObjectId;

pub const DEFAULT_MIN_HQ: f64 = 0.8;
/// Car-gate score below which a positive prediction is suspicious.
pub const GATE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MismatchReason {
    /// Predicted high quality, caption does not describe a car.
    CaptionMismatch,
    /// Predicted low quality, caption strongly indicates a high-quality car.
    MissedHighQuality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    pub object_id: ObjectId,
    pub reason: MismatchReason,
}

/// First category of `axis` with the highest score; None when any score is
/// missing.
pub fn axis_argmax<'a>(scores: &BTreeMap<String, f64>, axis: &'a [String]) -> Option<&'a str> {
    let mut best: Option<(&str, f64)> = None;
    for c in axis {
        let v = *scores.get(c)?;
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((c, v));
        }
    }
    best.map(|(c, _)| c)
}

/// Records whose prediction disagrees with their caption. Stored caption
/// scores are used when present, else the caption is scored on the fly.
/// Records without a prediction or any caption information are skipped.
pub fn find_misclassifications(manifest: &Manifest, taxonomy: &CaptionTaxonomy) -> Vec<Mismatch> {
    let mut out = Vec::new();
    for r in manifest.records() {
        let Some(pred) = &r.predicted else { continue };
        let scores = match &r.caption_scores {
            Some(s) => s.clone(),
            None => match caption_classify(r.caption.as_deref(), taxonomy, None) {
                Ok(s) => s,
                Err(_) => continue,
            },
        };
        let car = scores.get(taxonomy.car()).copied();
        let hq = scores.get(&taxonomy.high_quality).copied();
        let reason = match pred.label {
            1 if car.is_some_and(|c| c < GATE_THRESHOLD) => MismatchReason::CaptionMismatch,
            0 if hq.is_some_and(|h| h >= DEFAULT_MIN_HQ) => MismatchReason::MissedHighQuality,
            _ => continue,
        };
        out.push(Mismatch {
            object_id: r.object_id.clone(),
            reason,
        });
    }
    out.sort_by(|a, b| a.object_id.cmp(&b.object_id));
    out
}

/// Ids whose axis argmaxes include every required category and whose
/// high-quality score reaches `min_hq`, optionally also gated on aesthetic
/// score. Records without caption scores are excluded. Sorted by id.
pub fn filter_caption_subset(
    manifest: &Manifest,
    taxonomy: &CaptionTaxonomy,
    require: &[&str],
    min_hq: f64,
    min_aesthetic: Option<f64>,
) -> Result<Vec<ObjectId>, CurationError> {
    let axes = require
        .iter()
        .map(|c| {
            taxonomy
                .axis_of(c)
                .map(|a| (*c, a))
                .ok_or_else(|| CurationError::UnknownCategory(c.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut out: Vec<ObjectId> = manifest
        .records()
        .iter()
        .filter(|r| {
            let Some(scores) = &r.caption_scores else {
                return false;
            };
            let hq_ok = scores
                .get(&taxonomy.high_quality)
                .is_some_and(|&h| h >= min_hq);
            let aesthetic_ok = match min_aesthetic {
                None => true,
                Some(m) => r.aesthetic_score.is_some_and(|a| a >= m),
            };
            hq_ok
                && aesthetic_ok
                && axes
                    .iter()
                    .all(|(c, axis)| axis_argmax(scores, axis) == Some(*c))
        })
        .map(|r| r.object_id.clone())
        .collect();
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn argmax_ties_go_to_first() {
        let axis = vec!["a".to_string(), "b".to_string()];
        assert_eq!(
            axis_argmax(&scores(&[("a", 0.5), ("b", 0.5)]), &axis),
            Some("a")
        );
        assert_eq!(
            axis_argmax(&scores(&[("a", 0.4), ("b", 0.6)]), &axis),
            Some("b")
        );
        assert_eq!(axis_argmax(&scores(&[("a", 0.4)]), &axis), None);
    }
}
