use std::collections::HashMap;

use qcurate_core::curation::{Manifest, Split};
use qcurate_core::embedding::{fuse, FusedInput, MultiViewEmbedding};
use qcurate_core::math::derive_seed;
use qcurate_core::mixer::{
    predict, read_checkpoint, train_on_split, write_checkpoint, LabeledInput, MixerParams,
};
use qcurate_core::uncertainty::{mc_predict, UncertaintyReport};
use serde::Serialize;

use super::{input_path, load_embeddings, load_manifest, Ctx};
use crate::args::{ClassifyArgs, TrainArgs, UncertaintyArgs};
use crate::error::{Classify, CliError, CliResult, ResultExt};
use crate::files::{write_jsonl, write_text};
use crate::schema::PredictionLine;
use crate::summary::RunSummary;

fn fused_by_id(records: &[MultiViewEmbedding]) -> CliResult<HashMap<String, FusedInput>> {
    records
        .iter()
        .map(|r| {
            Ok((
                r.object_id.to_string(),
                fuse(r).classified(format!("fusing {}", r.object_id))?,
            ))
        })
        .collect()
}

fn load_model(
    flag: &Option<std::path::PathBuf>,
    ctx: &Ctx,
    s: &mut RunSummary,
) -> CliResult<MixerParams> {
    let path = input_path(flag, &ctx.cfg.paths.checkpoint, "checkpoint")?;
    s.input("model", &path)?;
    read_checkpoint(&path).classified(format!("checkpoint {}", path.display()))
}

#[derive(Serialize)]
struct TrainReport<'a> {
    #[serde(flatten)]
    report: &'a qcurate_core::mixer::EvalReport,
    positive_class_weight: f64,
    train_examples: usize,
    test_examples: usize,
}

pub fn train(ctx: &Ctx, a: &TrainArgs) -> CliResult<()> {
    let epath = input_path(&a.embeddings, &ctx.cfg.paths.embeddings, "embeddings")?;
    let mpath = input_path(&a.manifest, &ctx.cfg.paths.manifest, "manifest")?;
    let fused = fused_by_id(&load_embeddings(&epath)?)?;
    let manifest = load_manifest(&mpath)?;
    let mut s = RunSummary::new("train");
    s.input("embeddings", &epath)?;
    s.input("manifest", &mpath)?;

    let (mut tr, mut te) = (Vec::new(), Vec::new());
    for rec in manifest.records() {
        let (Some(label), Some(set)) = (
            rec.binary(),
            match rec.split {
                Split::Train => Some(&mut tr),
                Split::Test => Some(&mut te),
                Split::Unlabeled => None,
            },
        ) else {
            continue;
        };
        match fused.get(rec.id()) {
            Some(f) => set.push(LabeledInput::from_fused(rec.id(), f, label)),
            None => s.skip(rec.id()),
        }
    }
    let width = tr
        .first()
        .map(|e: &LabeledInput| e.tokens.len() / ctx.cfg.mixer.seq_len)
        .ok_or_else(|| CliError::invariant("no training records with embeddings"))?;
    let mut mixer = ctx.cfg.mixer;
    mixer.channel_dim = width;
    let mut tcfg = ctx.cfg.train.clone();
    tcfg.seed = ctx.seed;
    tcfg.max_steps = a.max_steps.unwrap_or(tcfg.max_steps);

    let outcome = train_on_split(&tr, &te, mixer, &tcfg).classified("training")?;
    write_checkpoint(&outcome.params, &a.out).classified("writing checkpoint")?;

    let curve_path = a
        .curve
        .clone()
        .unwrap_or_else(|| with_suffix(&a.out, ".curve.csv"));
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in &outcome.curve {
        w.serialize(p).or_internal("serializing curve")?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::new(crate::error::ExitKind::Internal, anyhow::anyhow!("{e}")))?;
    write_text(
        &curve_path,
        &String::from_utf8(bytes).or_internal("curve text")?,
    )?;

    let report_path = a
        .report
        .clone()
        .unwrap_or_else(|| with_suffix(&a.out, ".report.json"));
    let report = TrainReport {
        report: &outcome.report,
        positive_class_weight: outcome.positive_class_weight,
        train_examples: tr.len(),
        test_examples: te.len(),
    };
    let mut text = serde_json::to_string_pretty(&report).or_internal("report")?;
    text.push('\n');
    write_text(&report_path, &text)?;

    s.config(&serde_json::json!({ "mixer": mixer, "train": tcfg }));
    s.output("checkpoint", &a.out)?;
    s.output("curve", &curve_path)?;
    s.output("report", &report_path)?;
    s.count("train", tr.len());
    s.count("test", te.len());
    s.count("test_accuracy", outcome.report.accuracy);
    s.count("test_recall", outcome.report.recall);
    s.write_for(&a.out)?;
    Ok(())
}

fn with_suffix(p: &std::path::Path, suffix: &str) -> std::path::PathBuf {
    let mut name = p.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    p.with_file_name(name)
}

pub fn classify(ctx: &Ctx, a: &ClassifyArgs) -> CliResult<()> {
    let mut s = RunSummary::new("classify");
    let params = load_model(&a.model, ctx, &mut s)?;
    let epath = input_path(&a.embeddings, &ctx.cfg.paths.embeddings, "embeddings")?;
    let mpath = input_path(&a.manifest, &ctx.cfg.paths.manifest, "manifest")?;
    s.input("embeddings", &epath)?;
    s.input("manifest", &mpath)?;
    let fused = fused_by_id(&load_embeddings(&epath)?)?;
    let manifest = load_manifest(&mpath)?;
    let threshold = a.threshold.unwrap_or(ctx.cfg.train.decision_threshold);
    let mut lines = Vec::new();
    for rec in manifest.records() {
        let Some(f) = fused.get(rec.id()) else {
            s.skip(rec.id());
            continue;
        };
        let (probability, label) =
            predict(&params, f, threshold).classified(format!("classifying {}", rec.id()))?;
        lines.push(PredictionLine {
            object_id: rec.id().to_string(),
            probability,
            label,
        });
    }
    write_jsonl(&a.out, &lines)?;
    s.config(&serde_json::json!({ "threshold": threshold }));
    s.output("predictions", &a.out)?;
    s.count("predicted", lines.len());
    s.count("positive", lines.iter().filter(|l| l.label == 1).count());
    s.write_for(&a.out)?;
    Ok(())
}

fn parse_split(s: &str) -> Split {
    match s {
        "train" => Split::Train,
        "test" => Split::Test,
        _ => Split::Unlabeled,
    }
}

pub fn uncertainty(ctx: &Ctx, a: &UncertaintyArgs) -> CliResult<()> {
    let mut s = RunSummary::new("uncertainty");
    let params = load_model(&a.model, ctx, &mut s)?;
    let epath = input_path(&a.embeddings, &ctx.cfg.paths.embeddings, "embeddings")?;
    s.input("embeddings", &epath)?;
    let mut fused: Vec<(String, FusedInput)> = fused_by_id(&load_embeddings(&epath)?)?
        .into_iter()
        .collect();
    fused.sort_by(|x, y| x.0.cmp(&y.0));

    if a.split.is_some() && a.manifest.is_none() && ctx.cfg.paths.manifest.is_none() {
        return Err(CliError::input("--split needs a manifest"));
    }
    let manifest: Option<Manifest> = match (&a.manifest, &a.split) {
        (None, None) => None,
        _ => {
            let mpath = input_path(&a.manifest, &ctx.cfg.paths.manifest, "manifest")?;
            s.input("manifest", &mpath)?;
            Some(load_manifest(&mpath)?)
        }
    };
    let split = a.split.as_deref().map(parse_split);
    if let Some(m) = &manifest {
        fused.retain(|(id, _)| {
            m.get(id)
                .is_some_and(|r| split.is_none_or(|sp| r.split == sp))
        });
    }

    let passes = a.passes.unwrap_or(ctx.cfg.uncertainty.passes);
    let seed = derive_seed(ctx.seed, "mc");
    let mut reports: Vec<UncertaintyReport> = Vec::with_capacity(fused.len());
    for (id, f) in &fused {
        let mut r = mc_predict(&params, f, id, passes, seed)
            .or_invariant(format!("uncertainty for {id}"))?;
        r.per_pass = None;
        reports.push(r);
    }
    write_jsonl(&a.out, &reports)?;
    s.config(&serde_json::json!({ "passes": passes, "split": a.split, "seed": ctx.seed }));
    s.output("reports", &a.out)?;
    s.count("reports", reports.len());
    s.write_for(&a.out)?;
    Ok(())
}
