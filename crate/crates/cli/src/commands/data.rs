use std::collections::HashSet;

use qcurate_core::curation::Split;
use qcurate_core::embedding::{compress_corpus, flatten_raw, mfeb_write, CLASSIFIER_VIEWS};
use qcurate_core::math::{derive_seed, pca_fit as fit, DenseMatrix, PcaModel, RngStream};
use qcurate_core::metadata::{render_cuboid, BBox2D, TireBox, TireDetection, METADATA_VIEWS};
use qcurate_core::synth::synth_corpus;
use serde::Serialize;

use super::{input_path, load_embeddings, load_manifest, Ctx};
use crate::args::{PcaApplyArgs, PcaFitArgs, SplitArgs, SynthArgs};
use crate::error::{Classify, CliError, CliResult, ResultExt};
use crate::files::{write_jsonl, write_png};
use crate::summary::RunSummary;

#[derive(Serialize)]
struct TruthLine<'a> {
    object_id: &'a str,
    quality_label: u8,
    mislabeled: bool,
    ambiguous: bool,
}

pub fn synth(ctx: &Ctx, a: &SynthArgs) -> CliResult<()> {
    let mut cfg = ctx.cfg.synth.clone();
    cfg.seed = ctx.seed;
    cfg.objects = a.objects.unwrap_or(cfg.objects);
    cfg.width = a.width.unwrap_or(cfg.width);
    cfg.raw_width = a.raw_width.unwrap_or(cfg.raw_width);
    let corpus = synth_corpus(&cfg).classified("generating corpus")?;
    std::fs::create_dir_all(&a.out_dir).or_internal(format!("creating {}", a.out_dir.display()))?;

    let emb = a.out_dir.join("embeddings.mfeb");
    mfeb_write(&corpus.embeddings, &emb).classified("writing embeddings")?;
    let manifest = a.out_dir.join("manifest.jsonl");
    corpus
        .manifest
        .write(&manifest)
        .classified("writing manifest")?;
    let truth = a.out_dir.join("truth.jsonl");
    let lines: Vec<TruthLine> = corpus
        .truth
        .iter()
        .map(|(id, &q)| TruthLine {
            object_id: id,
            quality_label: q,
            mislabeled: corpus.mislabeled.contains(id),
            ambiguous: corpus.ambiguous.contains(id),
        })
        .collect();
    write_jsonl(&truth, &lines)?;

    let mut summary = RunSummary::new("synth");
    summary.config(&cfg);
    summary.output("embeddings", &emb)?;
    summary.output("manifest", &manifest)?;
    summary.output("truth", &truth)?;
    if a.renders > 0 {
        let tires = render_objects(
            ctx.seed,
            &corpus.manifest.records()[..a.renders.min(cfg.objects)],
            a,
            &mut summary,
        )?;
        let tires_path = a.out_dir.join("tires.jsonl");
        write_jsonl(&tires_path, &tires)?;
        summary.output("tires", &tires_path)?;
    }
    summary.count("objects", cfg.objects);
    summary.count("train", corpus.manifest.count_split(Split::Train));
    summary.count("test", corpus.manifest.count_split(Split::Test));
    summary.count("unlabeled", corpus.manifest.count_split(Split::Unlabeled));
    summary.write_for(&a.out_dir.join("synth"))?;
    Ok(())
}

/// Cuboid stand-ins with per-object proportions: 32 orbital renders for
/// geometry, the four classification views for review, and tire boxes in
/// both side views.
fn render_objects(
    seed: u64,
    records: &[qcurate_core::curation::ManifestRecord],
    a: &SynthArgs,
    summary: &mut RunSummary,
) -> CliResult<Vec<TireDetection>> {
    let size = a.render_size;
    let mut tires = Vec::new();
    for (i, rec) in records.iter().enumerate() {
        let id = rec.id();
        let mut rng = RngStream::new(derive_seed(seed, "renders"), i as u64);
        let (l, w, h) = (
            3.8 + 1.2 * rng.uniform(),
            1.6 + 0.4 * rng.uniform(),
            1.2 + 0.4 * rng.uniform(),
        );
        let scale = 0.9 * size as f64 / (l * l + w * w).sqrt();
        for k in 0..METADATA_VIEWS {
            let img = render_cuboid(
                l,
                w,
                h,
                k as f64 * 360.0 / METADATA_VIEWS as f64,
                size,
                scale,
            );
            write_png(
                &a.out_dir
                    .join("renders")
                    .join(id)
                    .join(format!("{k:02}.png")),
                &img,
            )?;
            if k % (METADATA_VIEWS / CLASSIFIER_VIEWS) == 0 {
                let v = k / (METADATA_VIEWS / CLASSIFIER_VIEWS);
                write_png(
                    &a.out_dir
                        .join("views")
                        .join(id)
                        .join(format!("view_{v}.png")),
                    &img,
                )?;
            }
        }
        let c = size as f64 / 2.0;
        let r = (0.18 * h * scale).max(1.0);
        let bottom = c + h * scale / 2.0;
        let tire = |cx: f64| TireBox {
            bbox: BBox2D {
                x_min: (cx - r).round() as u32,
                y_min: (bottom - 2.0 * r).round() as u32,
                x_max: (cx + r).round() as u32,
                y_max: (bottom - 1.0).round() as u32,
            },
            confidence: 0.9,
        };
        for side in [METADATA_VIEWS / 4, 3 * METADATA_VIEWS / 4] {
            let boxes = vec![tire(c - 0.3 * l * scale), tire(c + 0.3 * l * scale)];
            tires.push(TireDetection {
                object_id: id.to_string(),
                azimuth_index: side,
                boxes,
            });
        }
    }
    summary.count("rendered_objects", records.len());
    Ok(tires)
}

pub fn split(ctx: &Ctx, a: &SplitArgs) -> CliResult<()> {
    let mpath = input_path(&a.manifest, &ctx.cfg.paths.manifest, "manifest")?;
    let manifest = load_manifest(&mpath)?;
    let fraction = a.fraction.unwrap_or(ctx.cfg.train.split_fraction);
    let out = manifest
        .assign_split(fraction, ctx.seed)
        .classified("assigning splits")?;
    out.write(&a.out).classified("writing manifest")?;
    let mut s = RunSummary::new("split");
    s.config(&serde_json::json!({ "fraction": fraction, "seed": ctx.seed }));
    s.input("manifest", &mpath)?;
    s.output("manifest", &a.out)?;
    s.count("train", out.count_split(Split::Train));
    s.count("test", out.count_split(Split::Test));
    s.write_for(&a.out)?;
    Ok(())
}

pub fn pca_fit(ctx: &Ctx, a: &PcaFitArgs) -> CliResult<()> {
    let epath = input_path(&a.embeddings, &ctx.cfg.paths.embeddings, "embeddings")?;
    let records = load_embeddings(&epath)?;
    let mut s = RunSummary::new("pca-fit");
    s.input("embeddings", &epath)?;
    let allowed: Option<HashSet<String>> = if a.whole_set {
        None
    } else {
        let mpath = input_path(&a.manifest, &ctx.cfg.paths.manifest, "manifest")?;
        s.input("manifest", &mpath)?;
        let m = load_manifest(&mpath)?;
        Some(
            m.records()
                .iter()
                .filter(|r| r.split == Split::Train)
                .map(|r| r.id().to_string())
                .collect(),
        )
    };
    let mut rows = Vec::new();
    let mut dim = None;
    for rec in &records {
        if allowed
            .as_ref()
            .is_some_and(|ids| !ids.contains(rec.object_id.as_str()))
        {
            continue;
        }
        match flatten_raw(rec) {
            Some(flat) => {
                if *dim.get_or_insert(flat.len()) != flat.len() {
                    return Err(CliError::invariant(format!(
                        "{} has a different raw width",
                        rec.object_id
                    )));
                }
                rows.extend_from_slice(flat);
            }
            None => s.skip(rec.object_id.to_string()),
        }
    }
    let dim =
        dim.ok_or_else(|| CliError::invariant("no records with raw DINOv2 features to fit"))?;
    let n = rows.len() / dim;
    let k = a
        .components
        .unwrap_or(CLASSIFIER_VIEWS * records[0].siglip.cols());
    let samples = DenseMatrix::from_vec(n, dim, rows).or_invariant("raw features")?;
    let model = fit(&samples, k).or_invariant(format!("fitting {k} components on {n}×{dim}"))?;
    model
        .write(&a.out)
        .or_internal(format!("writing {}", a.out.display()))?;
    s.config(&serde_json::json!({ "components": k, "whole_set": a.whole_set }));
    s.output("pca", &a.out)?;
    s.count("samples", n);
    s.count("input_dim", dim);
    s.count("total_evr", model.total_evr());
    s.write_for(&a.out)?;
    Ok(())
}

pub fn pca_apply(ctx: &Ctx, a: &PcaApplyArgs) -> CliResult<()> {
    let epath = input_path(&a.embeddings, &ctx.cfg.paths.embeddings, "embeddings")?;
    let ppath = input_path(&a.pca, &ctx.cfg.paths.pca_model, "PCA model")?;
    let records = load_embeddings(&epath)?;
    let model = PcaModel::read(&ppath).or_input(format!("PCA model {}", ppath.display()))?;
    let out = compress_corpus(&records, &model, !a.keep_raw).classified("compressing")?;
    mfeb_write(&out, &a.out).classified("writing embeddings")?;
    let mut s = RunSummary::new("pca-apply");
    s.config(&serde_json::json!({ "keep_raw": a.keep_raw }));
    s.input("embeddings", &epath)?;
    s.input("pca", &ppath)?;
    s.output("embeddings", &a.out)?;
    s.count("records", out.len());
    s.write_for(&a.out)?;
    Ok(())
}
