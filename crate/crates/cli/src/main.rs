use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use moodloom::{FeatureWeights, NativeScale, DEFAULT_K, DEFAULT_MIN_TAG_WEIGHT, DEFAULT_THRESHOLD};

mod commands;

/// Lyric affect analysis and fuzzy kNN mood classification.
#[derive(Debug, Parser)]
#[command(name = "moodloom", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lexicon construction.
    #[command(subcommand)]
    Lexicon(LexiconCommand),
    /// Valence/arousal of a lyric file, as JSON.
    Analyze(AnalyzeArgs),
    /// Top tracks per tag and their top tags from the tag service.
    Fetch(FetchArgs),
    /// Dataset construction and splitting.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Train a kNN model on one or more dataset files.
    Train(TrainArgs),
    /// Classify one song, as JSON.
    Classify(ClassifyArgs),
    /// Conflict-based accuracy on held-out sets or by cross-validation.
    Evaluate(EvaluateArgs),
    /// Cross-validated accuracy over a grid of k, thresholds and weights.
    Sweep(SweepArgs),
}

#[derive(Debug, Subcommand)]
enum LexiconCommand {
    /// Merge ANEW, an extended lexicon and synonym expansion into one CSV.
    Build(LexiconBuildArgs),
}

#[derive(Debug, Args)]
struct LexiconBuildArgs {
    #[arg(long)]
    anew: PathBuf,
    #[arg(long)]
    extended: Option<PathBuf>,
    /// `word<TAB>syn1,syn2,...` lines; synonyms inherit ANEW scores.
    #[arg(long)]
    synonyms: Option<PathBuf>,
    /// Native score range of the ANEW file, `low,high`.
    #[arg(long, default_value = "1,9", value_parser = parse_scale)]
    anew_scale: NativeScale,
    /// Native score range of the extended file, `low,high`.
    #[arg(long, default_value = "1,9", value_parser = parse_scale)]
    extended_scale: NativeScale,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Clone)]
struct LyricArgs {
    /// Lexicon CSV on the 0-10 scale; the bundled lexicon when omitted.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// `word<TAB>TAG` part-of-speech lexicon; the bundled one when omitted.
    #[arg(long)]
    pos_lexicon: Option<PathBuf>,
    #[arg(long, default_value_t = 2.0)]
    chorus_weight: f64,
    #[arg(long, default_value_t = 1.0)]
    verse_weight: f64,
    /// Weight of verbs against the other words of a sentence.
    #[arg(long, default_value_t = moodloom::DEFAULT_VERB_DOMINANCE)]
    alpha: f64,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long)]
    lyrics: PathBuf,
    #[command(flatten)]
    lyric: LyricArgs,
}

#[derive(Debug, Args)]
struct FetchArgs {
    /// One tag per line.
    #[arg(long)]
    tags: PathBuf,
    /// Tracks requested per tag.
    #[arg(long, default_value_t = moodloom::tag_client::DEFAULT_TRACK_LIMIT)]
    limit: usize,
    /// Tags requested per track.
    #[arg(long, default_value_t = moodloom::tag_client::DEFAULT_TAG_LIMIT)]
    tag_limit: usize,
    /// Serve responses from this fixture directory instead of the network.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    #[arg(long)]
    base_url: Option<String>,
    /// Requests per second in live mode.
    #[arg(long, default_value_t = moodloom::tag_client::DEFAULT_RATE_LIMIT)]
    rate_limit: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum DatasetCommand {
    /// Join fetched tags, audio features and lyrics into a dataset.
    Build(DatasetBuildArgs),
    /// Class-stratified split into fold files.
    Split(DatasetSplitArgs),
}

#[derive(Debug, Args)]
struct DatasetBuildArgs {
    /// JSON Lines written by `fetch`.
    #[arg(long)]
    songs: PathBuf,
    /// CSV with columns artist,title,bpm,mode,loudness_db,danceability,energy.
    #[arg(long)]
    audio: PathBuf,
    /// Directory of `<artist>__<title>.txt` lyric files.
    #[arg(long)]
    lyrics_dir: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MIN_TAG_WEIGHT)]
    min_tag_weight: u32,
    #[command(flatten)]
    lyric: LyricArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DatasetSplitArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = moodloom::DEFAULT_FOLDS)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args, Clone, Default)]
struct ModelArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    threshold: Option<usize>,
    /// Seven comma-separated feature weights: danceability, loudness,
    /// valence, bpm, energy, mode, arousal.
    #[arg(long, value_parser = parse_weights)]
    weights: Option<FeatureWeights>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long, required = true, num_args = 1..)]
    dataset: Vec<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[arg(long)]
    model: PathBuf,
    /// JSON object with `audio` and either `lyrics` (a path), `lyrics_text`
    /// or a precomputed raw `vector`.
    #[arg(long)]
    song: PathBuf,
    #[command(flatten)]
    params: ModelArgs,
    #[command(flatten)]
    lyric: LyricArgs,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Trained model, evaluated on each `--test` file.
    #[arg(long, requires = "test")]
    model: Option<PathBuf>,
    #[arg(long, num_args = 1..)]
    test: Vec<PathBuf>,
    /// Fold files for leave-one-fold-out cross-validation.
    #[arg(long, num_args = 2.., conflicts_with_all = ["model", "test"])]
    folds: Vec<PathBuf>,
    #[command(flatten)]
    params: ModelArgs,
    /// Treat the conflict relation as symmetric.
    #[arg(long)]
    symmetrize_conflicts: bool,
    /// Also write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Fold files; a synthetic dataset is generated when omitted.
    #[arg(long, num_args = 2..)]
    folds: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "10,20,30,40")]
    k: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,5,9,13,17")]
    thresholds: Vec<usize>,
    /// Weight vectors to try; repeat the flag for each. Defaults to the
    /// tuned and the uniform weights.
    #[arg(long, value_parser = parse_weights)]
    weights: Vec<FeatureWeights>,
    #[arg(long, default_value_t = 400)]
    songs: usize,
    #[arg(long, default_value_t = 1.0)]
    spread: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    symmetrize_conflicts: bool,
    #[arg(long)]
    json: Option<PathBuf>,
}

fn parse_scale(s: &str) -> Result<NativeScale, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [low, high] = parts.as_slice() else {
        return Err("expected `low,high`".into());
    };
    let low: f64 = low.parse().map_err(|e| format!("{e}"))?;
    let high: f64 = high.parse().map_err(|e| format!("{e}"))?;
    NativeScale::new(low, high).map_err(|e| e.to_string())
}

fn parse_weights(s: &str) -> Result<FeatureWeights, String> {
    let values: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
        .collect::<Result<_, _>>()?;
    let arr: [f64; moodloom::FEATURE_COUNT] = values
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected 7 weights, got {}", v.len()))?;
    let w = moodloom::knn::FeatureWeights(arr);
    w.validate().map_err(|e| e.to_string())?;
    Ok(w)
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
    Fetch(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Fetch(_) => 3,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Data(e) | Failure::Fetch(e) => e,
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;

pub trait OrFail<T> {
    fn or_usage(self, what: impl Display) -> CliResult<T>;
    fn or_data(self, what: impl Display) -> CliResult<T>;
    fn or_fetch(self, what: impl Display) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> OrFail<T> for Result<T, E> {
    fn or_usage(self, what: impl Display) -> CliResult<T> {
        self.map_err(|e| Failure::Usage(e.into().context(what.to_string())))
    }

    fn or_data(self, what: impl Display) -> CliResult<T> {
        self.map_err(|e| Failure::Data(e.into().context(what.to_string())))
    }

    fn or_fetch(self, what: impl Display) -> CliResult<T> {
        self.map_err(|e| Failure::Fetch(e.into().context(what.to_string())))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Lexicon(LexiconCommand::Build(a)) => commands::lexicon_build(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Fetch(a) => commands::fetch(a),
        Command::Dataset(DatasetCommand::Build(a)) => commands::dataset_build(a),
        Command::Dataset(DatasetCommand::Split(a)) => commands::dataset_split(a),
        Command::Train(a) => commands::train(a),
        Command::Classify(a) => commands::classify(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Sweep(a) => commands::sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}

impl ModelArgs {
    fn k_or_default(&self) -> usize {
        self.k.unwrap_or(DEFAULT_K)
    }

    fn threshold_or_default(&self) -> usize {
        self.threshold.unwrap_or(DEFAULT_THRESHOLD)
    }
}
