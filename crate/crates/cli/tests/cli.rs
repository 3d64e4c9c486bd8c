use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use moodloom::dataset::save_dataset;
use moodloom::synthetic::{generate, SyntheticConfig};
use moodloom::SongRecord;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_moodloom"))
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn tag_fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/tags")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("MOODLOOM_API_KEY").output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn synthetic_dataset(dir: &Path, songs: usize) -> PathBuf {
    let records: Vec<SongRecord> = generate(&SyntheticConfig {
        songs,
        seed: 3,
        ..SyntheticConfig::default()
    });
    let path = dir.join("data.jsonl");
    save_dataset(&path, &records).unwrap();
    path
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["train"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn lexicon_build_merges_with_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lex.csv");
    let f = fixtures();
    ok(&run(&[
        "lexicon",
        "build",
        "--anew",
        s(&f.join("anew.csv")),
        "--extended",
        s(&f.join("extended.csv")),
        "--synonyms",
        s(&f.join("synonyms.tsv")),
        "--out",
        s(&out),
    ]));
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "word,valence,arousal,source");
    let row = |w: &str| rows.iter().find(|r| r.starts_with(&format!("{w},"))).copied().unwrap();
    assert!(row("happy").ends_with("ANEW"));
    assert!(row("river").ends_with("EXTENDED"));
    assert!(row("cheerful").ends_with("SYNONYM_EXPANDED"));
    // glad is a synonym of both happy and sad: mean of their rescaled scores
    let glad: Vec<f64> = row("glad").split(',').skip(1).take(2).map(|x| x.parse().unwrap()).collect();
    let rescale = |x: f64| (x - 1.0) / 8.0 * 10.0;
    assert!((glad[0] - (rescale(8.21) + rescale(1.61)) / 2.0).abs() < 1e-6);
}

#[test]
fn analyze_prints_song_affect() {
    let out = ok(&run(&[
        "analyze",
        "--lyrics",
        s(&fixtures().join("lyrics/club_static__neon_floor.txt")),
    ]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["valence"].as_f64().unwrap() > 5.0);
    assert_eq!(v["sentences"].as_array().unwrap().len(), 4);
}

#[test]
fn unscorable_lyrics_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let lyrics = dir.path().join("l.txt");
    fs::write(&lyrics, "zzz qqq\nxyzzy plugh\n").unwrap();
    let out = run(&["analyze", "--lyrics", s(&lyrics)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let data = synthetic_dataset(dir.path(), 60);
    let model = dir.path().join("m.json");
    ok(&run(&["train", "--dataset", s(&data), "--out", s(&model)]));
    let song = dir.path().join("song.json");
    fs::write(
        &song,
        r#"{"artist":"A","title":"B","audio":{"bpm":100,"mode":"minor","loudness_db":-8,"danceability":0.5,"energy":0.5},"lyrics_text":"zzz qqq"}"#,
    )
    .unwrap();
    let out = run(&["classify", "--model", s(&model), "--song", s(&song)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn live_fetch_without_key_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "fetch",
        "--tags",
        s(&fixtures().join("tags.txt")),
        "--out",
        s(&dir.path().join("x.jsonl")),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn fetch_then_build_dataset_from_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let fetched = dir.path().join("fetched.jsonl");
    ok(&run(&[
        "fetch",
        "--tags",
        s(&fixtures().join("tags.txt")),
        "--limit",
        "3",
        "--fixtures",
        s(&tag_fixtures()),
        "--out",
        s(&fetched),
    ]));
    let lines: Vec<serde_json::Value> = fs::read_to_string(&fetched)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    // three mellow tracks, then the party track not already seen
    let titles: Vec<&str> = lines.iter().map(|v| v["title"].as_str().unwrap()).collect();
    assert_eq!(titles, ["Quiet River", "Evening Glass", "Soft Machines", "Neon Floor"]);
    assert_eq!(lines[0]["tags"][0]["tag"], "mellow");

    let data = dir.path().join("data.jsonl");
    let f = fixtures();
    ok(&run(&[
        "dataset",
        "build",
        "--songs",
        s(&fetched),
        "--audio",
        s(&f.join("audio.csv")),
        "--lyrics-dir",
        s(&f.join("lyrics")),
        "--out",
        s(&data),
    ]));
    let records: Vec<serde_json::Value> = fs::read_to_string(&data)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let ids: Vec<(&str, &str)> = records
        .iter()
        .map(|r| (r["artist"].as_str().unwrap(), r["title"].as_str().unwrap()))
        .collect();
    assert_eq!(
        ids,
        [
            ("Slow Harbor", "Quiet River"),
            ("Pale Lanterns", "Evening Glass"),
            ("Club Static", "Neon Floor")
        ]
    );
    assert_eq!(records[0]["classes"], serde_json::json!(["Calm", "Sad"]));
    assert_eq!(records[2]["classes"], serde_json::json!(["Energetic", "Dance"]));
    assert!(records.iter().all(|r| r["vector"].is_object()));
}

#[test]
fn split_train_classify_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_dataset(dir.path(), 180);
    let folds = dir.path().join("folds");
    ok(&run(&["dataset", "split", "--dataset", s(&data), "--seed", "5", "--out-dir", s(&folds)]));
    let fold = |i: usize| folds.join(format!("fold{i}.jsonl"));
    let model = dir.path().join("model.json");
    ok(&run(&[
        "train",
        "--dataset",
        s(&fold(1)),
        s(&fold(2)),
        s(&fold(3)),
        "--k",
        "20",
        "--threshold",
        "8",
        "--out",
        s(&model),
    ]));
    let saved: serde_json::Value = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(saved["k"], 20);
    assert_eq!(saved["weights"], serde_json::json!([1.0, 0.7, 1.0, 0.8, 1.0, 0.5, 0.9]));

    let report = ok(&run(&["evaluate", "--model", s(&model), "--test", s(&fold(4))]));
    let header = report.lines().next().unwrap();
    for col in ["Set", "Total Songs", "Incorrect", "Correct", "Accuracy (%)"] {
        assert!(header.contains(col), "{header}");
    }
    assert!(report.lines().any(|l| l.starts_with("fold4")));
    assert!(report.lines().any(|l| l.starts_with("All")));

    let json = dir.path().join("cv.json");
    let cv = ok(&run(&[
        "evaluate",
        "--folds",
        s(&fold(1)),
        s(&fold(2)),
        s(&fold(3)),
        s(&fold(4)),
        "--k",
        "20",
        "--threshold",
        "8",
        "--symmetrize-conflicts",
        "--json",
        s(&json),
    ]));
    for i in 1..=4 {
        assert!(cv.lines().any(|l| l.starts_with(&format!("Set {i} "))), "{cv}");
    }
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["all"]["total"], 180);

    // a training song classified against a model holding it keeps one of its classes
    let first: serde_json::Value =
        serde_json::from_str(fs::read_to_string(fold(1)).unwrap().lines().next().unwrap()).unwrap();
    let song = dir.path().join("song.json");
    fs::write(&song, first.to_string()).unwrap();
    let out: serde_json::Value = serde_json::from_str(&ok(&run(&[
        "classify",
        "--model",
        s(&model),
        "--song",
        s(&song),
        "--threshold",
        "1",
    ])))
    .unwrap();
    let assigned = out["classes"].as_array().unwrap();
    let own = first["classes"].as_array().unwrap();
    assert!(assigned.iter().any(|c| own.contains(c)));
    assert_eq!(out["effective_threshold"], 1);

    let bad = run(&["classify", "--model", s(&model), "--song", s(&song), "--threshold", "50"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn sweep_over_synthetic_grid() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("sweep.json");
    let out = ok(&run(&[
        "sweep",
        "--songs",
        "120",
        "--k",
        "10,30",
        "--thresholds",
        "1,13",
        "--weights",
        "1,1,1,1,1,1,1",
        "--json",
        s(&json),
    ]));
    // threshold 13 is skipped for k = 10
    assert_eq!(out.lines().count(), 1 + 3);
    let rows: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 3);
    assert_eq!(run(&["sweep", "--weights", "1,2,3"]).status.code(), Some(1));
}
