mod common;

use std::collections::BTreeMap;

use common::{fixture, record, scores, REQUIRED};
use proptest::prelude::*;
use qcurate_core::curation::{
    filter_caption_subset, find_misclassifications, CaptionTaxonomy, Manifest, ManifestRecord,
    MismatchReason, Prediction, DEFAULT_MIN_HQ,
};
use qcurate_core::embedding::ObjectId;

fn ids(v: Vec<ObjectId>) -> Vec<String> {
    v.into_iter().map(String::from).collect()
}

#[test]
fn caption_subset_rule() {
    let t = CaptionTaxonomy::default();
    let got = filter_caption_subset(&fixture(), &t, &REQUIRED, DEFAULT_MIN_HQ, None).unwrap();
    assert_eq!(ids(got), ["r1", "r2", "r7", "r8", "r9"]);
}

#[test]
fn aesthetic_subset_rule() {
    let t = CaptionTaxonomy::default();
    let got = filter_caption_subset(&fixture(), &t, &REQUIRED, DEFAULT_MIN_HQ, Some(6.5)).unwrap();
    assert_eq!(ids(got), ["r1", "r8", "r9"]);
}

#[test]
fn unknown_category_is_rejected() {
    let t = CaptionTaxonomy::default();
    assert!(filter_caption_subset(&fixture(), &t, &["spaceship"], 0.8, None).is_err());
}

fn predicted(
    id: &str,
    caption: &str,
    label: u8,
    s: Option<BTreeMap<String, f64>>,
) -> ManifestRecord {
    let mut r = record(id, s, None);
    r.caption = Some(caption.into());
    r.predicted = Some(Prediction {
        probability: if label == 1 { 0.9 } else { 0.1 },
        label,
        entropy: None,
    });
    r
}

#[test]
fn mismatches_flagged_in_id_order() {
    let t = CaptionTaxonomy::default();
    let m = Manifest::new(vec![
        predicted("z-chair", "a chair", 1, None),
        predicted("car-ok", "a detailed realistic sports car", 1, None),
        predicted(
            "a-missed",
            "whatever",
            0,
            Some(scores((0, 0.7), (0, 0.8), 0.85)),
        ),
        predicted("low-ok", "a toy car", 0, None),
        record("no-pred", None, None),
    ])
    .unwrap();
    let got: Vec<(String, MismatchReason)> = find_misclassifications(&m, &t)
        .into_iter()
        .map(|x| (x.object_id.into(), x.reason))
        .collect();
    assert_eq!(
        got,
        [
            ("a-missed".to_string(), MismatchReason::MissedHighQuality),
            ("z-chair".to_string(), MismatchReason::CaptionMismatch)
        ]
    );
    assert!(find_misclassifications(&Manifest::default(), &t).is_empty());
}

proptest! {
    #[test]
    fn filter_is_monotone_in_thresholds(
        raw in prop::collection::vec((0usize..3, 0.34f64..1.0, 0usize..3, 0.34f64..1.0, 0.0f64..1.0, prop::option::of(0.0f64..10.0)), 0..40),
        hq in (0.0f64..1.0, 0.0f64..1.0),
        ae in (0.0f64..10.0, 0.0f64..10.0),
    ) {
        let t = CaptionTaxonomy::default();
        let records = raw
            .iter()
            .enumerate()
            .map(|(i, &(d, dw, r, rw, h, a))| record(&format!("o{i}"), Some(scores((d, dw), (r, rw), h)), a))
            .collect();
        let m = Manifest::new(records).unwrap();
        let (lo, hi) = if hq.0 <= hq.1 { hq } else { (hq.1, hq.0) };
        let (alo, ahi) = if ae.0 <= ae.1 { ae } else { (ae.1, ae.0) };
        let loose = filter_caption_subset(&m, &t, &REQUIRED, lo, Some(alo)).unwrap();
        let strict_hq = filter_caption_subset(&m, &t, &REQUIRED, hi, Some(alo)).unwrap();
        let strict_ae = filter_caption_subset(&m, &t, &REQUIRED, lo, Some(ahi)).unwrap();
        let unbounded = filter_caption_subset(&m, &t, &REQUIRED, lo, None).unwrap();
        prop_assert!(strict_hq.iter().all(|id| loose.contains(id)));
        prop_assert!(strict_ae.iter().all(|id| loose.contains(id)));
        prop_assert!(loose.iter().all(|id| unbounded.contains(id)));
    }
}
