use qcurate_core::metadata::{alpha_bbox, estimate_vehicle, TireDetection, METADATA_VIEWS};

use super::Ctx;
use crate::args::MetadataArgs;
use crate::error::{CliError, CliResult, ResultExt};
use crate::files::{read_jsonl, read_png, require_file, write_jsonl};
use crate::summary::RunSummary;

pub fn metadata(ctx: &Ctx, a: &MetadataArgs) -> CliResult<()> {
    if !a.renders.is_dir() {
        return Err(CliError::input(format!(
            "renders directory {} does not exist",
            a.renders.display()
        )));
    }
    let mut s = RunSummary::new("metadata");
    let tires: Vec<TireDetection> = match &a.tires {
        Some(p) => {
            require_file(p, "tire detections")?;
            s.input("tires", p)?;
            read_jsonl(p)?
        }
        None => Vec::new(),
    };
    let mut dirs: Vec<_> = std::fs::read_dir(&a.renders)
        .or_input(format!("listing {}", a.renders.display()))?
        .filter_map(Result::ok)
        .filter(|e| e.path().is_dir())
        .map(|e| e.path())
        .collect();
    dirs.sort();

    let threshold = ctx.cfg.thresholds.alpha;
    let min_conf = ctx.cfg.thresholds.min_tire_confidence;
    let mut out = Vec::new();
    let mut notes = 0usize;
    for dir in &dirs {
        let id = dir
            .file_name()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        let mut boxes = Vec::with_capacity(METADATA_VIEWS);
        for k in 0..METADATA_VIEWS {
            let img = read_png(&dir.join(format!("{k:02}.png")))?;
            match alpha_bbox(&img, threshold) {
                Ok(b) => boxes.push(b),
                Err(_) => break,
            }
        }
        if boxes.len() != METADATA_VIEWS {
            s.skip(id);
            continue;
        }
        let meta = estimate_vehicle(&id, &boxes, &tires, min_conf)
            .or_invariant(format!("estimating {id}"))?;
        notes += usize::from(meta.wheelbase_note.is_some());
        out.push(meta);
    }
    write_jsonl(&a.out, &out)?;
    s.config(&serde_json::json!({ "alpha_threshold": threshold, "min_tire_confidence": min_conf }));
    s.output("metadata", &a.out)?;
    s.count("objects", out.len());
    s.count("without_wheelbase", notes);
    s.write_for(&a.out)?;
    Ok(())
}
