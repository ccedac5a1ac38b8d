//! Synthetic corpora with known ground truth, used by tests, fixtures and
//! the `synth` command.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::curation::{binary_label, CurationError, Manifest, ManifestRecord, Source, Split};
use crate::embedding::{MultiViewEmbedding, ObjectId, CLASSIFIER_VIEWS, SEQ_LEN};
use crate::math::{derive_seed, DenseMatrix, RngStream};
use crate::mixer::LabeledInput;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub objects: usize,
    pub positive_rate: f64,
    /// SigLIP width and fused token width.
    pub width: usize,
    /// Raw DINOv2 values per view.
    pub raw_width: usize,
    /// Distance between class means per token, in noise standard deviations.
    pub separation: f64,
    /// Fraction of objects carrying a label in the initial manifest.
    pub labeled_fraction: f64,
    /// Labeled objects whose manifest label contradicts the truth.
    pub mislabeled: usize,
    /// Objects placed halfway between the classes.
    pub ambiguous: usize,
    pub split_fraction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            objects: 400,
            positive_rate: 0.06,
            width: 16,
            raw_width: 32,
            separation: 4.0,
            labeled_fraction: 0.5,
            mislabeled: 20,
            ambiguous: 20,
            split_fraction: 0.8,
            seed: 0,
        }
    }
}

pub fn synth_id(i: usize) -> String {
    format!("obj{i:04}")
}

/// Exact positive count: the rate rounded, at least two of each class.
pub fn positive_count(objects: usize, rate: f64) -> usize {
    ((objects as f64 * rate).round() as usize).clamp(2.min(objects), objects.saturating_sub(2))
}

/// Class labels with a fixed positive count at shuffled positions.
fn class_labels(objects: usize, rate: f64, seed: u64) -> Vec<u8> {
    let pos = positive_count(objects, rate);
    let mut y: Vec<u8> = (0..objects).map(|i| u8::from(i < pos)).collect();
    RngStream::new(derive_seed(seed, "classes"), 0).shuffle(&mut y);
    y
}

fn unit_vector(rng: &mut RngStream, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

/// Two-class Gaussian token sequences: every token is a shared offset plus
/// `separation` along a per-token direction for positives, plus unit noise.
pub fn gaussian_tokens(
    objects: usize,
    positive_rate: f64,
    width: usize,
    separation: f64,
    seed: u64,
) -> Vec<LabeledInput> {
    let labels = class_labels(objects, positive_rate, seed);
    let mut mean_rng = RngStream::new(derive_seed(seed, "means"), 0);
    let offsets: Vec<f64> = (0..SEQ_LEN * width).map(|_| mean_rng.normal()).collect();
    let dirs: Vec<Vec<f64>> = (0..SEQ_LEN)
        .map(|_| unit_vector(&mut mean_rng, width))
        .collect();
    labels
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let mut rng = RngStream::new(derive_seed(seed, "noise"), i as u64);
            let tokens = (0..SEQ_LEN * width)
                .map(|k| {
                    offsets[k]
                        + f64::from(y) * separation * dirs[k / width][k % width]
                        + rng.normal()
                })
                .collect();
            LabeledInput {
                id: synth_id(i),
                tokens,
                label: y,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub embeddings: Vec<MultiViewEmbedding>,
    pub manifest: Manifest,
    /// True 1–5 quality of every object.
    pub truth: BTreeMap<String, u8>,
    pub mislabeled: Vec<String>,
    pub ambiguous: Vec<String>,
}

const POSITIVE_CAPTIONS: [&str; 3] = [
    "a detailed realistic sports car",
    "a photorealistic luxury sedan",
    "a highly detailed realistic coupe with textured interior",
];
const NEGATIVE_CAPTIONS: [&str; 5] = [
    "a simple toy car",
    "a low poly blocky truck",
    "a wooden chair",
    "a cartoon airplane",
    "a broken car part",
];

/// Objects with SigLIP rows and raw DINOv2 rows drawn around class means,
/// plus a manifest whose labeled part is split into train and test.
/// Raw rows live near a low-dimensional class subspace so PCA keeps the
/// signal.
pub fn synth_corpus(cfg: &SynthConfig) -> Result<SynthCorpus, CurationError> {
    let n = cfg.objects;
    let (w, r) = (cfg.width, cfg.raw_width);
    let labels = class_labels(n, cfg.positive_rate, cfg.seed);
    let mut mean_rng = RngStream::new(derive_seed(cfg.seed, "means"), 0);
    let offsets: Vec<f64> = (0..CLASSIFIER_VIEWS * (w + r))
        .map(|_| mean_rng.normal())
        .collect();
    let dirs: Vec<Vec<f64>> = (0..2 * CLASSIFIER_VIEWS)
        .map(|k| unit_vector(&mut mean_rng, if k < 4 { w } else { r }))
        .collect();

    // Ambiguous and mislabeled objects come from disjoint shuffled pools.
    let mut order: Vec<usize> = (0..n).collect();
    RngStream::new(derive_seed(cfg.seed, "roles"), 0).shuffle(&mut order);
    let ambiguous: Vec<usize> = order.iter().copied().take(cfg.ambiguous.min(n)).collect();
    let rest: Vec<usize> = order.iter().copied().skip(cfg.ambiguous.min(n)).collect();
    let n_labeled = ((cfg.labeled_fraction * n as f64).round() as usize).min(n);
    let mut is_labeled = vec![false; n];
    for &i in order.iter().take(n_labeled) {
        is_labeled[i] = true;
    }
    let mislabeled: Vec<usize> = rest
        .iter()
        .copied()
        .filter(|&i| is_labeled[i])
        .take(cfg.mislabeled)
        .collect();

    let mut embeddings = Vec::with_capacity(n);
    let mut records = Vec::with_capacity(n);
    let mut truth = BTreeMap::new();
    for (i, &y) in labels.iter().enumerate() {
        let id = synth_id(i);
        let mut rng = RngStream::new(derive_seed(cfg.seed, "object"), i as u64);
        let shift = if ambiguous.contains(&i) {
            0.5
        } else {
            f64::from(y)
        };
        let mut siglip = Vec::with_capacity(CLASSIFIER_VIEWS * w);
        let mut raw = Vec::with_capacity(CLASSIFIER_VIEWS * r);
        for v in 0..CLASSIFIER_VIEWS {
            for j in 0..w {
                siglip.push(
                    (offsets[v * w + j] + shift * cfg.separation * dirs[v][j] + rng.normal())
                        as f32,
                );
            }
        }
        for v in 0..CLASSIFIER_VIEWS {
            for j in 0..r {
                let base = offsets[CLASSIFIER_VIEWS * w + v * r + j];
                raw.push(
                    (base + shift * cfg.separation * dirs[4 + v][j] + 0.5 * rng.normal()) as f32,
                );
            }
        }
        let oid = ObjectId::new(id.clone()).expect("synthetic ids are valid");
        embeddings.push(MultiViewEmbedding {
            object_id: oid.clone(),
            siglip: DenseMatrix::from_vec(CLASSIFIER_VIEWS, w, siglip).expect("finite"),
            dinov2_raw: Some(DenseMatrix::from_vec(CLASSIFIER_VIEWS, r, raw).expect("finite")),
            dinov2_pca: None,
        });

        let q = if y == 1 {
            4 + rng.below(2) as u8
        } else {
            1 + rng.below(3) as u8
        };
        truth.insert(id.clone(), q);
        let source = [Source::Sketchfab, Source::Github, Source::Other][i % 3];
        let mut rec = ManifestRecord::new(oid, source, format!("synthetic://{id}"));
        let captions: &[&str] = if y == 1 {
            &POSITIVE_CAPTIONS
        } else {
            &NEGATIVE_CAPTIONS
        };
        rec.caption = Some(captions[rng.below(captions.len() as u64) as usize].to_string());
        rec.aesthetic_score =
            Some(((if y == 1 { 6.0 } else { 3.5 }) + 3.0 * rng.uniform()).min(10.0));
        if is_labeled[i] {
            let mut label = q;
            if mislabeled.contains(&i) {
                label = if binary_label(q)? == 1 {
                    1 + rng.below(3) as u8
                } else {
                    4 + rng.below(2) as u8
                };
            }
            rec.quality_label = Some(label);
            rec.split = Split::Train;
        }
        records.push(rec);
    }
    let manifest = Manifest::new(records)?.assign_split(cfg.split_fraction, cfg.seed)?;
    let mut mislabeled: Vec<String> = mislabeled.into_iter().map(synth_id).collect();
    mislabeled.sort();
    let mut ambiguous: Vec<String> = ambiguous.into_iter().map(synth_id).collect();
    ambiguous.sort();
    Ok(SynthCorpus {
        embeddings,
        manifest,
        truth,
        mislabeled,
        ambiguous,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_positive_count() {
        assert_eq!(positive_count(400, 0.06), 24);
        let toks = gaussian_tokens(400, 0.06, 8, 4.0, 1);
        assert_eq!(toks.iter().filter(|e| e.label == 1).count(), 24);
        assert_eq!(toks[0].tokens.len(), SEQ_LEN * 8);
        assert_eq!(toks, gaussian_tokens(400, 0.06, 8, 4.0, 1));
    }

    #[test]
    fn corpus_shape_and_roles() {
        let c = synth_corpus(&SynthConfig::default()).unwrap();
        assert_eq!(c.embeddings.len(), 400);
        assert_eq!(c.manifest.len(), 400);
        assert_eq!(c.mislabeled.len(), 20);
        assert_eq!(c.ambiguous.len(), 20);
        assert!(c.mislabeled.iter().all(|id| !c.ambiguous.contains(id)));
        let labeled = c
            .manifest
            .records()
            .iter()
            .filter(|r| r.quality_label.is_some())
            .count();
        assert_eq!(labeled, 200);
        assert_eq!(
            c.manifest.count_split(Split::Train) + c.manifest.count_split(Split::Test),
            200
        );
        for id in &c.mislabeled {
            let rec = c.manifest.get(id).unwrap();
            assert_ne!(rec.binary(), Some(binary_label(c.truth[id]).unwrap()));
        }
        assert_eq!(c, synth_corpus(&SynthConfig::default()).unwrap());
    }
}
