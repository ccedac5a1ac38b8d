mod common;

use std::collections::HashSet;

use common::{ok, pipeline, qcurate, SMALL_CONFIG};
use qcurate_cli::summary::digest;
use qcurate_core::curation::{read_events, Manifest, Split};

#[test]
fn pipeline_outputs_are_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let fa = pipeline(a.path(), 200);
    let fb = pipeline(b.path(), 200);
    let names = |fs: &[std::path::PathBuf]| {
        fs.iter()
            .map(|p| p.file_name().unwrap().to_owned())
            .collect::<Vec<_>>()
    };
    assert_eq!(names(&fa), names(&fb));
    assert!(fa.len() >= 20, "{} outputs", fa.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(
            std::fs::read(x).unwrap(),
            std::fs::read(y).unwrap(),
            "{} differs",
            x.display()
        );
    }
}

#[test]
fn refine_grows_train_and_keeps_test_then_replays() {
    let dir = tempfile::tempdir().unwrap();
    pipeline(dir.path(), 200);
    let d = dir.path().join("d");
    let before = Manifest::read(&d.join("capt.jsonl")).unwrap();
    let after = Manifest::read(&d.join("refined.jsonl")).unwrap();
    assert!(after.count_split(Split::Train) > before.count_split(Split::Train));
    let test = |m: &Manifest| {
        m.records()
            .iter()
            .filter(|r| r.split == Split::Test)
            .cloned()
            .collect::<Vec<_>>()
    };
    assert_eq!(test(&before), test(&after));

    let log = read_events(&d.join("log.jsonl")).unwrap();
    assert!(!log.is_empty());
    assert!(log.iter().all(|e| e.cycle == 1));
    let ids: HashSet<_> = log.iter().map(|e| e.object_id.as_str()).collect();
    assert_eq!(ids.len(), log.len(), "one event per object per cycle");

    ok(
        dir.path(),
        &[
            "replay",
            "--manifest",
            "d/capt.jsonl",
            "--log",
            "d/log.jsonl",
            "--out",
            "d/replayed.jsonl",
        ],
    );
    assert_eq!(
        std::fs::read(d.join("replayed.jsonl")).unwrap(),
        std::fs::read(d.join("refined.jsonl")).unwrap()
    );
}

#[test]
fn summaries_hash_their_outputs() {
    let dir = tempfile::tempdir().unwrap();
    pipeline(dir.path(), 200);
    let d = dir.path().join("d");
    let s: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d.join("model.mfmx.summary.json")).unwrap()).unwrap();
    assert_eq!(s["command"], "train");
    let expect = digest(&d.join("model.mfmx")).unwrap();
    assert_eq!(s["outputs"]["checkpoint"]["sha256"], expect.sha256);
    assert_eq!(s["inputs"]["manifest"]["file"], "split.jsonl");
    assert_eq!(s["config"]["train"]["seed"], 3);
    assert_eq!(s["config"]["mixer"]["channel_dim"], 16);
    let curve = std::fs::read_to_string(d.join("model.mfmx.curve.csv")).unwrap();
    assert!(curve.starts_with("step,loss,eval_accuracy\n"));
    assert_eq!(curve.lines().count(), 201);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.toml"), SMALL_CONFIG).unwrap();
    ok(
        dir.path(),
        &[
            "--config",
            "cfg.toml",
            "synth",
            "--out-dir",
            "a",
            "--objects",
            "30",
        ],
    );
    ok(
        dir.path(),
        &[
            "--config",
            "cfg.toml",
            "--seed",
            "3",
            "synth",
            "--out-dir",
            "b",
            "--objects",
            "30",
        ],
    );
    ok(
        dir.path(),
        &[
            "--config",
            "cfg.toml",
            "--seed",
            "4",
            "synth",
            "--out-dir",
            "c",
            "--objects",
            "30",
        ],
    );
    let read = |p: &str| std::fs::read(dir.path().join(p)).unwrap();
    assert_eq!(read("a/embeddings.mfeb"), read("b/embeddings.mfeb"));
    assert_ne!(read("a/embeddings.mfeb"), read("c/embeddings.mfeb"));
}

#[test]
fn missing_or_malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let r = qcurate(
        p,
        &["split", "--manifest", "nope.jsonl", "--out", "x.jsonl"],
    );
    assert_eq!(r.code, 2, "{}", r.stderr);
    assert!(r.stderr.contains("nope.jsonl"));

    std::fs::write(p.join("bad.jsonl"), "{\"object_id\": \"a\"\n").unwrap();
    assert_eq!(
        qcurate(p, &["split", "--manifest", "bad.jsonl", "--out", "x.jsonl"]).code,
        2
    );

    std::fs::write(p.join("bad.mfeb"), b"MFEBjunk").unwrap();
    assert_eq!(
        qcurate(
            p,
            &[
                "pca-fit",
                "--embeddings",
                "bad.mfeb",
                "--whole-set",
                "--out",
                "p.mfpc"
            ]
        )
        .code,
        2
    );

    std::fs::write(p.join("cfg.toml"), "sead = 1\n").unwrap();
    assert_eq!(
        qcurate(p, &["--config", "cfg.toml", "synth", "--out-dir", "s"]).code,
        2
    );

    ok(p, &["synth", "--out-dir", "s", "--objects", "20"]);
    let r = qcurate(
        p,
        &[
            "uncertainty",
            "--model",
            "s/manifest.jsonl",
            "--embeddings",
            "s/embeddings.mfeb",
            "--out",
            "u.jsonl",
        ],
    );
    assert_eq!(r.code, 2, "{}", r.stderr);
    assert!(!p.join("u.jsonl").exists());
}

#[test]
fn invariant_violations_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(p, &["synth", "--out-dir", "s", "--objects", "40"]);

    let r = qcurate(
        p,
        &[
            "filter-captions",
            "--manifest",
            "s/manifest.jsonl",
            "--require",
            "spaceship",
            "--out",
            "f.txt",
        ],
    );
    assert_eq!(r.code, 3, "{}", r.stderr);

    let m = Manifest::read(&p.join("s/manifest.jsonl")).unwrap();
    let test_id = m
        .records()
        .iter()
        .find(|r| r.split == Split::Test)
        .unwrap()
        .id()
        .to_string();
    let ev = format!("{{\"object_id\":\"{test_id}\",\"new_label\":5,\"cycle\":0,\"origin\":\"uncertainty-review\",\"timestamp\":0}}\n");
    std::fs::write(p.join("rev.jsonl"), ev).unwrap();
    let r = qcurate(
        p,
        &[
            "refine",
            "--manifest",
            "s/manifest.jsonl",
            "--log",
            "log.jsonl",
            "--reviewed",
            "rev.jsonl",
            "--out",
            "r.jsonl",
        ],
    );
    assert_eq!(r.code, 3, "{}", r.stderr);
    assert!(!p.join("r.jsonl").exists());
    assert!(!p.join("log.jsonl").exists());

    let r = qcurate(
        p,
        &[
            "pca-fit",
            "--embeddings",
            "s/embeddings.mfeb",
            "--manifest",
            "s/manifest.jsonl",
            "--out",
            "p.mfpc",
        ],
    );
    assert_eq!(r.code, 3, "{}", r.stderr);
    assert!(r.stderr.contains("components"));

    let text = std::fs::read_to_string(p.join("s/manifest.jsonl")).unwrap();
    let line = text
        .lines()
        .find(|l| l.contains("\"quality_label\":"))
        .unwrap();
    let start = line.find("\"quality_label\":").unwrap() + 16;
    let bad = text.replacen(
        line,
        &format!("{}9{}", &line[..start], &line[start + 1..]),
        1,
    );
    std::fs::write(p.join("bad.jsonl"), bad).unwrap();
    let r = qcurate(p, &["split", "--manifest", "bad.jsonl", "--out", "x.jsonl"]);
    assert_eq!(r.code, 3, "{}", r.stderr);
}

#[test]
fn scripted_review_requires_budget_and_oracle() {
    let dir = tempfile::tempdir().unwrap();
    pipeline(dir.path(), 200);
    let r = qcurate(
        dir.path(),
        &[
            "refine",
            "--manifest",
            "d/capt.jsonl",
            "--log",
            "d/l2.jsonl",
            "--uncertainty",
            "d/unc.jsonl",
            "--oracle",
            "d/truth.jsonl",
            "--out",
            "d/x.jsonl",
        ],
    );
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("review-budget"));
    let r = qcurate(
        dir.path(),
        &[
            "refine",
            "--manifest",
            "d/capt.jsonl",
            "--log",
            "d/l2.jsonl",
            "--uncertainty",
            "d/unc.jsonl",
            "--review-budget",
            "3",
            "--out",
            "d/x.jsonl",
        ],
    );
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("oracle"));
}

#[test]
fn metadata_from_rendered_cuboids() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(
        p,
        &[
            "synth",
            "--out-dir",
            "s",
            "--objects",
            "10",
            "--renders",
            "2",
            "--render-size",
            "96",
        ],
    );
    assert!(p.join("s/views/obj0001/view_3.png").exists());
    ok(
        p,
        &[
            "metadata",
            "--renders",
            "s/renders",
            "--tires",
            "s/tires.jsonl",
            "--out",
            "meta.jsonl",
        ],
    );
    let lines: Vec<serde_json::Value> = std::fs::read_to_string(p.join("meta.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    for l in &lines {
        assert_eq!(l["views"]["side"], serde_json::json!([8, 24]));
        assert_eq!(l["height"], 1.0);
        let (len, wb) = (
            l["length"].as_f64().unwrap(),
            l["wheelbase"].as_f64().unwrap(),
        );
        assert!(wb > 0.0 && wb < len, "{l}");
    }
}
