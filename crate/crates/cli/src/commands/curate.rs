use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use qcurate_core::curation::{
    append_events, caption_classify, filter_caption_subset, find_misclassifications, read_events,
    refine_cycle, replay as replay_log, CaptionTaxonomy, CurationError, LabelEvent, Mismatch,
    Origin, Prediction, Split,
};
use qcurate_core::embedding::ObjectId;
use qcurate_core::uncertainty::{select_for_review, UncertaintyReport};

use super::{input_path, load_manifest, Ctx};
use crate::args::{CaptionsArgs, FilterArgs, FlagArgs, RefineArgs, ReplayArgs};
use crate::error::{Classify, CliError, CliResult, ResultExt};
use crate::files::{read_jsonl, require_file, write_jsonl, write_text};
use crate::schema::{CaptionScoresLine, OracleLine, PredictionLine};
use crate::summary::RunSummary;

pub fn captions(ctx: &Ctx, a: &CaptionsArgs) -> CliResult<()> {
    let mpath = input_path(&a.manifest, &ctx.cfg.paths.manifest, "manifest")?;
    let manifest = load_manifest(&mpath)?;
    let mut s = RunSummary::new("captions");
    s.input("manifest", &mpath)?;
    let mut external: HashMap<String, BTreeMap<String, f64>> = HashMap::new();
    if let Some(p) = &a.scores {
        s.input("scores", p)?;
        for line in read_jsonl::<CaptionScoresLine>(p)? {
            external.insert(line.object_id, line.scores);
        }
    }
    let taxonomy = CaptionTaxonomy::default();
    let mut scores = HashMap::new();
    for r in manifest.records() {
        match caption_classify(r.caption.as_deref(), &taxonomy, external.get(r.id())) {
            Ok(sc) => {
                scores.insert(r.id().to_string(), sc);
            }
            Err(CurationError::EmptyCaption) => s.skip(r.id()),
            Err(e) => return Err(e).classified(format!("caption scores for {}", r.id())),
        }
    }
    let scored = scores.len();
    let out = manifest
        .map_records(|r| {
            if let Some(sc) = scores.remove(r.id()) {
                r.caption_scores = Some(sc);
            }
        })
        .classified("scoring captions")?;
    out.write(&a.out).classified("writing manifest")?;
    s.output("manifest", &a.out)?;
    s.count("scored", scored);
    s.write_for(&a.out)?;
    Ok(())
}

pub fn flag_mismatches(ctx: &Ctx, a: &FlagArgs) -> CliResult<()> {
    let mpath = input_path(&a.manifest, &ctx.cfg.paths.manifest, "manifest")?;
    require_file(&a.predictions, "predictions")?;
    let manifest = load_manifest(&mpath)?;
    let preds: HashMap<String, PredictionLine> = read_jsonl::<PredictionLine>(&a.predictions)?
        .into_iter()
        .map(|p| (p.object_id.clone(), p))
        .collect();
    let mut s = RunSummary::new("flag-mismatches");
    s.input("manifest", &mpath)?;
    s.input("predictions", &a.predictions)?;
    let with_preds = manifest
        .map_records(|r| {
            if let Some(p) = preds.get(r.id()) {
                r.predicted = Some(Prediction {
                    probability: p.probability,
                    label: p.label,
                    entropy: None,
                });
            }
        })
        .classified("attaching predictions")?;
    let flags = find_misclassifications(&with_preds, &CaptionTaxonomy::default());
    write_jsonl(&a.out, &flags)?;
    s.output("flags", &a.out)?;
    s.count("flagged", flags.len());
    s.write_for(&a.out)?;
    Ok(())
}

fn oracle_labels(path: &Option<PathBuf>, s: &mut RunSummary) -> CliResult<HashMap<String, u8>> {
    let p = path
        .as_ref()
        .ok_or_else(|| CliError::input("scripted review needs --oracle"))?;
    require_file(p, "oracle")?;
    s.input("oracle", p)?;
    Ok(read_jsonl::<OracleLine>(p)?
        .into_iter()
        .map(|l| (l.object_id, l.quality_label))
        .collect())
}

fn oracle_event(oracle: &HashMap<String, u8>, id: &str, origin: Origin) -> CliResult<LabelEvent> {
    let label = *oracle
        .get(id)
        .ok_or_else(|| CliError::input(format!("oracle has no label for {id}")))?;
    let id = ObjectId::new(id).or_input("object id")?;
    Ok(LabelEvent::request(id, label, origin))
}

pub fn refine(ctx: &Ctx, a: &RefineArgs) -> CliResult<()> {
    let mpath = input_path(&a.manifest, &ctx.cfg.paths.manifest, "manifest")?;
    let log_path = a
        .log
        .clone()
        .or_else(|| ctx.cfg.paths.log.clone())
        .ok_or_else(|| CliError::input("no label log given (--log or config [paths])"))?;
    let manifest = load_manifest(&mpath)?;
    let log = read_events(&log_path).classified(format!("label log {}", log_path.display()))?;
    let mut s = RunSummary::new("refine");
    s.input("manifest", &mpath)?;

    let mut reviewed = Vec::new();
    if let Some(p) = &a.reviewed {
        require_file(p, "reviewed events")?;
        s.input("reviewed", p)?;
        reviewed.extend(read_jsonl::<LabelEvent>(p)?);
    }
    let budget = a.review_budget.or(ctx.cfg.review_budget);
    if let Some(p) = &a.uncertainty {
        require_file(p, "uncertainty reports")?;
        s.input("uncertainty", p)?;
        let budget =
            budget.ok_or_else(|| CliError::input("scripted review needs --review-budget"))?;
        let oracle = oracle_labels(&a.oracle, &mut s)?;
        let candidates: Vec<UncertaintyReport> = read_jsonl::<UncertaintyReport>(p)?
            .into_iter()
            .filter(|r| {
                manifest
                    .get(&r.object_id)
                    .is_some_and(|m| m.split == Split::Unlabeled)
            })
            .collect();
        for id in select_for_review(&candidates, budget) {
            reviewed.push(oracle_event(&oracle, &id, Origin::UncertaintyReview)?);
        }
    }

    let mut corrections = Vec::new();
    if let Some(p) = &a.corrections {
        require_file(p, "corrections")?;
        s.input("corrections", p)?;
        corrections.extend(read_jsonl::<LabelEvent>(p)?);
    }
    let mut frozen = 0usize;
    if let Some(p) = &a.flags {
        require_file(p, "flags")?;
        s.input("flags", p)?;
        let oracle = oracle_labels(&a.oracle, &mut s)?;
        for flag in read_jsonl::<Mismatch>(p)? {
            let Some(rec) = manifest.get(flag.object_id.as_str()) else {
                return Err(CliError::invariant(format!(
                    "flagged object {} is not in the manifest",
                    flag.object_id
                )));
            };
            if rec.split == Split::Test {
                frozen += 1;
                s.skip(rec.id());
                continue;
            }
            let ev = oracle_event(&oracle, rec.id(), Origin::CaptionCorrection)?;
            if rec.quality_label != Some(ev.new_label) {
                corrections.push(ev);
            }
        }
    }

    let before = manifest.count_split(Split::Train);
    let outcome = refine_cycle(&manifest, &log, &reviewed, &corrections)
        .classified("applying label events")?;
    append_events(&log_path, &outcome.appended).classified("appending to label log")?;
    outcome
        .manifest
        .write(&a.out)
        .classified("writing manifest")?;

    s.config(&serde_json::json!({ "review_budget": budget }));
    s.output("manifest", &a.out)?;
    s.output("log", &log_path)?;
    s.count("cycle", outcome.cycle);
    s.count("events", outcome.appended.len());
    s.count("reviewed", reviewed.len());
    s.count("corrections", corrections.len());
    s.count("flagged_test_skipped", frozen);
    s.count("train_before", before);
    s.count("train_after", outcome.manifest.count_split(Split::Train));
    s.count("test", outcome.manifest.count_split(Split::Test));
    s.write_for(&a.out)?;
    Ok(())
}

pub fn replay(ctx: &Ctx, a: &ReplayArgs) -> CliResult<()> {
    let log_path = input_path(&a.log, &ctx.cfg.paths.log, "label log")?;
    require_file(&a.manifest, "manifest")?;
    let initial = load_manifest(&a.manifest)?;
    let log = read_events(&log_path).classified(format!("label log {}", log_path.display()))?;
    let out = replay_log(&initial, &log).classified("replaying label log")?;
    out.write(&a.out).classified("writing manifest")?;
    let mut s = RunSummary::new("replay");
    s.input("manifest", &a.manifest)?;
    s.input("log", &log_path)?;
    s.output("manifest", &a.out)?;
    s.count("events", log.len());
    s.write_for(&a.out)?;
    Ok(())
}

pub const DEFAULT_REQUIRED: [&str; 2] = ["realistic car model", "detailed car model"];

pub fn filter_captions(ctx: &Ctx, a: &FilterArgs) -> CliResult<()> {
    let mpath = input_path(&a.manifest, &ctx.cfg.paths.manifest, "manifest")?;
    let manifest = load_manifest(&mpath)?;
    let require: Vec<&str> = if a.require.is_empty() {
        DEFAULT_REQUIRED.to_vec()
    } else {
        a.require.iter().map(String::as_str).collect()
    };
    let min_hq = a.min_hq.unwrap_or(ctx.cfg.thresholds.min_hq);
    let min_aesthetic = a.min_aesthetic.or(ctx.cfg.thresholds.min_aesthetic);
    let ids = filter_caption_subset(
        &manifest,
        &CaptionTaxonomy::default(),
        &require,
        min_hq,
        min_aesthetic,
    )
    .classified("filtering captions")?;
    let text: String = ids.iter().map(|id| format!("{id}\n")).collect();
    write_text(&a.out, &text)?;
    let mut s = RunSummary::new("filter-captions");
    s.config(&serde_json::json!({ "require": require, "min_hq": min_hq, "min_aesthetic": min_aesthetic }));
    s.input("manifest", &mpath)?;
    s.output("ids", &a.out)?;
    s.count("selected", ids.len());
    s.write_for(&a.out)?;
    Ok(())
}
