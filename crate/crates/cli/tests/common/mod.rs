#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

pub const SMALL_CONFIG: &str = "seed = 3
[mixer]
num_blocks = 1
token_hidden = 16
channel_hidden = 32
head_hidden = 32
[train]
max_steps = 200
learning_rate = 0.003
[uncertainty]
passes = 40
";

pub struct Run {
    pub code: i32,
    pub stderr: String,
}

pub fn qcurate(dir: &Path, args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_qcurate"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn qcurate");
    Run {
        code: out.status.code().unwrap_or(-1),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn ok(dir: &Path, args: &[&str]) {
    let r = qcurate(dir, args);
    assert_eq!(r.code, 0, "qcurate {args:?} failed: {}", r.stderr);
}

/// synth, split-free pipeline up to one refine cycle, all under `dir`.
pub fn pipeline(dir: &Path, objects: usize) -> Vec<PathBuf> {
    std::fs::write(dir.join("cfg.toml"), SMALL_CONFIG).unwrap();
    let n = objects.to_string();
    let steps: Vec<Vec<&str>> = vec![
        vec!["synth", "--out-dir", "d", "--objects", &n],
        vec![
            "split",
            "--manifest",
            "d/manifest.jsonl",
            "--out",
            "d/split.jsonl",
        ],
        vec![
            "pca-fit",
            "--embeddings",
            "d/embeddings.mfeb",
            "--manifest",
            "d/split.jsonl",
            "--out",
            "d/pca.mfpc",
        ],
        vec![
            "pca-apply",
            "--embeddings",
            "d/embeddings.mfeb",
            "--pca",
            "d/pca.mfpc",
            "--out",
            "d/comp.mfeb",
        ],
        vec![
            "train",
            "--embeddings",
            "d/comp.mfeb",
            "--manifest",
            "d/split.jsonl",
            "--out",
            "d/model.mfmx",
        ],
        vec![
            "classify",
            "--model",
            "d/model.mfmx",
            "--embeddings",
            "d/comp.mfeb",
            "--manifest",
            "d/split.jsonl",
            "--out",
            "d/pred.jsonl",
        ],
        vec![
            "uncertainty",
            "--model",
            "d/model.mfmx",
            "--embeddings",
            "d/comp.mfeb",
            "--manifest",
            "d/split.jsonl",
            "--split",
            "unlabeled",
            "--out",
            "d/unc.jsonl",
        ],
        vec![
            "captions",
            "--manifest",
            "d/split.jsonl",
            "--out",
            "d/capt.jsonl",
        ],
        vec![
            "flag-mismatches",
            "--manifest",
            "d/capt.jsonl",
            "--predictions",
            "d/pred.jsonl",
            "--out",
            "d/flags.jsonl",
        ],
        vec![
            "refine",
            "--manifest",
            "d/capt.jsonl",
            "--log",
            "d/log.jsonl",
            "--uncertainty",
            "d/unc.jsonl",
            "--flags",
            "d/flags.jsonl",
            "--oracle",
            "d/truth.jsonl",
            "--review-budget",
            "10",
            "--out",
            "d/refined.jsonl",
        ],
    ];
    for s in &steps {
        let mut args = vec!["--config", "cfg.toml"];
        args.extend(s);
        ok(dir, &args);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir.join("d"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files
}
