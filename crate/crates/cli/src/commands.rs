use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use moodloom::dataset::{load_dataset, read_jsonl, save_dataset, song_key, stratified_partition, Fold};
use moodloom::experiment::{cross_validate, evaluate_model, training_rows, RunParams};
use moodloom::lyrics::SegmentationConfig;
use moodloom::synthetic::{generate, SyntheticConfig};
use moodloom::tag_client::{fixture_key, FetchedSong, ServiceMode, TagServiceConfig};
use moodloom::{
    AccuracyReport, AnalysisConfig, Analyzer, AudioFeatures, ConflictTable, FeatureVector, FeatureWeights, KnnError,
    Lexicon, NativeScale, SongRecord, Source, SynonymMap, TagClient, Tagger, TrainedModel,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{
    AnalyzeArgs, ClassifyArgs, CliResult, DatasetBuildArgs, DatasetSplitArgs, EvaluateArgs, Failure, FetchArgs,
    LexiconBuildArgs, LyricArgs, ModelArgs, OrFail, SweepArgs, TrainArgs,
};

pub fn lexicon_build(a: LexiconBuildArgs) -> CliResult<()> {
    let anew = Lexicon::load(&a.anew, a.anew_scale, Source::Anew).or_data("loading ANEW lexicon")?;
    let extended = match &a.extended {
        Some(p) => Lexicon::load(p, a.extended_scale, Source::Extended).or_data("loading extended lexicon")?,
        None => Lexicon::new(),
    };
    let expanded = match &a.synonyms {
        Some(p) => anew.expand_with_synonyms(&SynonymMap::load(p).or_data("loading synonym map")?),
        None => Lexicon::new(),
    };
    let merged = Lexicon::merge([&anew, &extended, &expanded]);
    let file = File::create(&a.out).or_data(format!("creating {}", a.out.display()))?;
    merged.write_csv(BufWriter::new(file)).or_data("writing lexicon")?;
    eprintln!("{} words written to {}", merged.len(), a.out.display());
    Ok(())
}

fn analyzer(a: &LyricArgs) -> CliResult<Analyzer> {
    let lexicon = match &a.lexicon {
        Some(p) => Lexicon::load(p, NativeScale::UNIFIED, Source::Extended).or_data("loading lexicon")?,
        None => Lexicon::builtin(),
    };
    let tagger = match &a.pos_lexicon {
        Some(p) => Tagger::load(p).or_data("loading part-of-speech lexicon")?,
        None => Tagger::builtin(),
    };
    let config = AnalysisConfig {
        segmentation: SegmentationConfig::new(a.chorus_weight, a.verse_weight).or_usage("segment weights")?,
        verb_dominance: a.alpha,
        ..AnalysisConfig::default()
    };
    Analyzer::new(lexicon, tagger, config).or_usage("analysis settings")
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).or_data(format!("reading {}", path.display()))
}

fn print_json<V: Serialize>(value: &V) -> CliResult<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    serde_json::to_writer_pretty(&mut out, value).or_data("writing JSON")?;
    writeln!(out).or_data("writing JSON")
}

fn write_json<V: Serialize>(path: &Path, value: &V) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).or_data("serializing JSON")?;
    text.push('\n');
    fs::write(path, text).or_data(format!("writing {}", path.display()))
}

pub fn analyze(a: AnalyzeArgs) -> CliResult<()> {
    let analyzer = analyzer(&a.lyric)?;
    let text = read_text(&a.lyrics)?;
    let analysis = analyzer
        .analyze(&a.lyrics.display().to_string(), &text)
        .or_data(format!("analyzing {}", a.lyrics.display()))?;
    print_json(&analysis)
}

pub fn fetch(a: FetchArgs) -> CliResult<()> {
    let mut config = match &a.fixtures {
        Some(dir) => TagServiceConfig::fixture(dir),
        None => TagServiceConfig::live_from_env(),
    };
    if let Some(url) = &a.base_url {
        config.base_url = url.clone();
    }
    config.rate_limit = a.rate_limit;
    let client = TagClient::new(config).or_usage("tag service configuration")?;
    let tags: Vec<String> = read_text(&a.tags)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect();

    let mut seen = std::collections::HashSet::new();
    let mut songs = Vec::new();
    for tag in &tags {
        let tracks = client.fetch_top_tracks(tag, a.limit).or_fetch(format!("top tracks for `{tag}`"))?;
        for t in tracks {
            if !seen.insert(song_key(&t.artist, &t.title)) {
                continue;
            }
            let tags = client
                .fetch_top_tags(&t.artist, &t.title, a.tag_limit)
                .or_fetch(format!("top tags for `{} - {}`", t.artist, t.title))?;
            songs.push(FetchedSong {
                artist: t.artist,
                title: t.title,
                tags,
            });
        }
    }
    let file = File::create(&a.out).or_data(format!("creating {}", a.out.display()))?;
    moodloom::dataset::write_jsonl(file, &songs).or_data("writing songs")?;
    let mode = if client.config().mode == ServiceMode::Fixture { "fixture" } else { "live" };
    eprintln!("{} songs from {} tags ({mode} mode)", songs.len(), tags.len());
    Ok(())
}

/// One row of the audio feature CSV.
#[derive(Debug, Deserialize)]
struct AudioRow {
    artist: String,
    title: String,
    bpm: f64,
    mode: moodloom::Mode,
    loudness_db: f64,
    danceability: f64,
    energy: f64,
}

impl AudioRow {
    fn audio(&self) -> AudioFeatures {
        AudioFeatures {
            bpm: self.bpm,
            mode: self.mode,
            loudness_db: self.loudness_db,
            danceability: self.danceability,
            energy: self.energy,
        }
    }
}

/// Lyric file name for a song: `<artist>__<title>.txt`, lowercased with
/// non-alphanumeric runs replaced by `_`.
pub fn lyrics_file_name(artist: &str, title: &str) -> String {
    let key = fixture_key("", &[artist, title]);
    format!("{}.txt", key.trim_start_matches("__"))
}

enum BuildOutcome {
    Kept(Box<SongRecord>),
    Skipped(String),
}

pub fn dataset_build(a: DatasetBuildArgs) -> CliResult<()> {
    let analyzer = analyzer(&a.lyric)?;
    let fetched: Vec<FetchedSong> = read_jsonl(
        File::open(&a.songs).or_data(format!("opening {}", a.songs.display()))?,
        &a.songs.display().to_string(),
    )
    .or_data("reading fetched songs")?;

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(&a.audio)
        .or_data(format!("opening {}", a.audio.display()))?;
    let mut audio = HashMap::new();
    for (i, row) in reader.deserialize::<AudioRow>().enumerate() {
        let row = row.or_data(format!("{} row {}", a.audio.display(), i + 2))?;
        audio.entry(song_key(&row.artist, &row.title)).or_insert(row.audio());
    }

    let outcomes: Vec<BuildOutcome> = fetched
        .par_iter()
        .map(|song| {
            let id = moodloom::dataset::song_id(&song.artist, &song.title);
            let mut record = SongRecord {
                artist: song.artist.clone(),
                title: song.title.clone(),
                tags: song.tags.clone(),
                audio: match audio.get(&song_key(&song.artist, &song.title)) {
                    Some(x) => *x,
                    None => return BuildOutcome::Skipped(format!("{id}: no audio features")),
                },
                lyrics: None,
                classes: Default::default(),
                vector: None,
            };
            record.derive_classes(a.min_tag_weight);
            if record.classes.is_empty() {
                return BuildOutcome::Skipped(format!("{id}: no mood tag"));
            }
            if let Err(e) = record.audio.validate() {
                return BuildOutcome::Skipped(format!("{id}: {e}"));
            }
            let path = a.lyrics_dir.join(lyrics_file_name(&song.artist, &song.title));
            let text = match fs::read_to_string(&path) {
                Ok(t) => t,
                Err(_) => return BuildOutcome::Skipped(format!("{id}: no lyrics at {}", path.display())),
            };
            match analyzer.analyze(&id, &text) {
                Ok(analysis) => {
                    record.vector = Some(FeatureVector::assemble(analysis.song(), &record.audio));
                    record.lyrics = Some(path);
                    BuildOutcome::Kept(Box::new(record))
                }
                Err(e) => BuildOutcome::Skipped(format!("{id}: {e}")),
            }
        })
        .collect();

    let mut records = Vec::new();
    for o in outcomes {
        match o {
            BuildOutcome::Kept(r) => records.push(*r),
            BuildOutcome::Skipped(why) => eprintln!("skipped {why}"),
        }
    }
    let dropped = moodloom::dataset::dedupe(&mut records);
    save_dataset(&a.out, &records).or_data("writing dataset")?;
    eprintln!(
        "{} songs written to {} ({} duplicates dropped)",
        records.len(),
        a.out.display(),
        dropped
    );
    Ok(())
}

pub fn dataset_split(a: DatasetSplitArgs) -> CliResult<()> {
    let records: Vec<SongRecord> = load_dataset(&a.dataset).or_data("loading dataset")?;
    let folds = stratified_partition(&records, a.folds, a.seed).or_data("partitioning dataset")?;
    fs::create_dir_all(&a.out_dir).or_data(format!("creating {}", a.out_dir.display()))?;
    for f in &folds {
        let path = a.out_dir.join(format!("fold{}.jsonl", f.index));
        save_dataset(&path, &f.records).or_data(format!("writing {}", path.display()))?;
        eprintln!("{}: {} songs", path.display(), f.records.len());
    }
    Ok(())
}

fn knn_failure(e: KnnError, what: &str) -> Failure {
    match e {
        KnnError::ZeroK | KnnError::BadThreshold { .. } | KnnError::BadWeights => Failure::Usage(anyhow!(e).context(what.to_string())),
        other => Failure::Data(anyhow!(other).context(what.to_string())),
    }
}

fn load_records(paths: &[PathBuf]) -> CliResult<Vec<SongRecord>> {
    let mut all = Vec::new();
    for p in paths {
        all.extend(load_dataset(p).or_data(format!("loading {}", p.display()))?);
    }
    Ok(all)
}

pub fn train(a: TrainArgs) -> CliResult<()> {
    let records = load_records(&a.dataset)?;
    let rows = training_rows(&records).or_data("collecting training rows")?;
    let model = TrainedModel::train(
        rows,
        a.model.weights.unwrap_or_default(),
        a.model.k_or_default(),
        a.model.threshold_or_default(),
    )
    .map_err(|e| knn_failure(e, "training"))?;
    model.save(&a.out).or_data("saving model")?;
    eprintln!("model with {} songs written to {}", model.rows().len(), a.out.display());
    Ok(())
}

fn load_model(path: &Path, params: &ModelArgs) -> CliResult<TrainedModel> {
    let model = TrainedModel::load(path).or_data("loading model")?;
    if params.k.is_none() && params.threshold.is_none() && params.weights.is_none() {
        return Ok(model);
    }
    model
        .with_params(params.k, params.threshold, params.weights)
        .map_err(|e| knn_failure(e, "model parameters"))
}

/// Song description accepted by `classify`.
#[derive(Debug, Deserialize)]
struct SongInput {
    #[serde(default)]
    artist: String,
    #[serde(default)]
    title: String,
    audio: AudioFeatures,
    #[serde(default)]
    lyrics: Option<PathBuf>,
    #[serde(default)]
    lyrics_text: Option<String>,
    #[serde(default)]
    vector: Option<FeatureVector>,
}

#[derive(Debug, Serialize)]
struct ClassifyOutput {
    song: String,
    features: FeatureVector,
    #[serde(flatten)]
    result: moodloom::ClassificationResult,
}

pub fn classify(a: ClassifyArgs) -> CliResult<()> {
    let model = load_model(&a.model, &a.params)?;
    let song: SongInput = serde_json::from_str(&read_text(&a.song)?).or_data(format!("parsing {}", a.song.display()))?;
    song.audio.validate().or_data("song audio features")?;
    let id = moodloom::dataset::song_id(&song.artist, &song.title);
    let features = match song.vector {
        Some(v) => v,
        None => {
            let text = match (&song.lyrics_text, &song.lyrics) {
                (Some(t), _) => t.clone(),
                (None, Some(p)) => {
                    let base = a.song.parent().unwrap_or(Path::new("."));
                    read_text(&base.join(p))?
                }
                (None, None) => return Err(Failure::Data(anyhow!("song has no lyrics, lyrics_text or vector"))),
            };
            let analysis = analyzer(&a.lyric)?.analyze(&id, &text).or_data(format!("analyzing lyrics of `{id}`"))?;
            FeatureVector::assemble(analysis.song(), &song.audio)
        }
    };
    features.check_finite().or_data("song features")?;
    let result = model.classify_raw(&features);
    print_json(&ClassifyOutput {
        song: id,
        features,
        result,
    })
}

fn conflict_table(symmetric: bool) -> ConflictTable {
    ConflictTable::new(symmetric)
}

fn set_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn run_params(params: &ModelArgs) -> RunParams<f64> {
    RunParams {
        k: params.k_or_default(),
        threshold: params.threshold_or_default(),
        weights: params.weights.unwrap_or_default(),
    }
}

fn load_folds(paths: &[PathBuf]) -> CliResult<Vec<Fold<SongRecord>>> {
    paths
        .iter()
        .enumerate()
        .map(|(i, p)| {
            Ok(Fold {
                index: i + 1,
                records: load_dataset(p).or_data(format!("loading {}", p.display()))?,
            })
        })
        .collect()
}

pub fn evaluate(a: EvaluateArgs) -> CliResult<()> {
    let table = conflict_table(a.symmetrize_conflicts);
    let report = if let Some(model_path) = &a.model {
        let model = load_model(model_path, &a.params)?;
        let sets = a
            .test
            .par_iter()
            .map(|p| {
                let records = load_dataset(p).or_data(format!("loading {}", p.display()))?;
                let (eval, _) = evaluate_model(&model, &records, &table).or_data(format!("evaluating {}", p.display()))?;
                Ok((set_name(p), eval))
            })
            .collect::<CliResult<Vec<_>>>()?;
        AccuracyReport::from_sets(sets)
    } else if !a.folds.is_empty() {
        let folds = load_folds(&a.folds)?;
        cross_validate(&folds, &run_params(&a.params), &table).or_data("cross-validation")?
    } else {
        return Err(Failure::Usage(anyhow!("give either --model with --test, or --folds")));
    };
    print!("{}", report.render_table());
    if let Some(p) = &a.json {
        write_json(p, &report)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct SweepRow {
    k: usize,
    threshold: usize,
    weights: FeatureWeights,
    accuracy: f64,
    total: usize,
    incorrect: usize,
}

pub fn sweep(a: SweepArgs) -> CliResult<()> {
    let table = conflict_table(a.symmetrize_conflicts);
    let folds = if a.folds.is_empty() {
        let records: Vec<SongRecord> = generate(&SyntheticConfig {
            songs: a.songs,
            spread: a.spread,
            seed: a.seed,
            ..SyntheticConfig::default()
        });
        stratified_partition(&records, moodloom::DEFAULT_FOLDS, a.seed).or_data("partitioning synthetic dataset")?
    } else {
        load_folds(&a.folds)?
    };
    let weights = if a.weights.is_empty() {
        vec![FeatureWeights::default(), FeatureWeights::uniform()]
    } else {
        a.weights.clone()
    };
    let mut grid = Vec::new();
    for w in &weights {
        for &k in &a.k {
            for &threshold in a.thresholds.iter().filter(|&&t| t >= 1 && t <= k) {
                grid.push(RunParams { k, threshold, weights: *w });
            }
        }
    }
    if grid.is_empty() {
        return Err(Failure::Usage(anyhow!("empty parameter grid")));
    }
    let rows = grid
        .par_iter()
        .map(|p| {
            let report = cross_validate(&folds, p, &table).map_err(|e| match e {
                moodloom::experiment::ExperimentError::Knn(k) => knn_failure(k, "sweep"),
                other => Failure::Data(anyhow!(other)),
            })?;
            Ok(SweepRow {
                k: p.k,
                threshold: p.threshold,
                weights: p.weights,
                accuracy: report.all.accuracy,
                total: report.all.total,
                incorrect: report.all.incorrect,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;

    println!("{:>4}  {:>9}  {:<31}  {:>12}", "k", "threshold", "weights", "accuracy (%)");
    for r in &rows {
        let w: Vec<String> = r.weights.0.iter().map(|x| format!("{x}")).collect();
        println!("{:>4}  {:>9}  {:<31}  {:>12.2}", r.k, r.threshold, w.join(","), r.accuracy);
    }
    if let Some(p) = &a.json {
        write_json(p, &rows)?;
    }
    Ok(())
}
