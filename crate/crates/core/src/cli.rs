//! The `muler` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{self, GroupBy, Output, OutputFormat, XMeasure, YMeasure};
use crate::convert::parse_tagged;
use crate::corpus::{
    load_corpus, sidecar_path, validate_corpus, write_metadata, ParallelCorpus, Severity,
};
use crate::features::{
    builtin_feature, builtin_features, feature_stats, parse_feature_file, FeatureSpec, Side,
};
use crate::lexicon::{load_lexicon, Lexicon};
use crate::metrics::{MetricConfig, MetricKind, SimilarityMatrix, Smoothing};
use crate::scoring::{feature_report, feature_report_matrices, Evaluation, Scorer};
use crate::validation::{
    run_frequency, run_hybrid, run_specificity, ValidationBundle, POSITION_DEFINITION,
};
use crate::Error;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "muler",
    version,
    about = "Per-feature decomposition of reference-based metrics"
)]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    #[serde(skip)]
    pub parallel: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Score features of one corpus.
    Report(ReportArgs),
    /// Correlate MuLER with other measures across a directory of reports.
    Compare(CompareArgs),
    /// Run the hybrid, specificity and frequency experiments.
    Validate(ValidateArgs),
    /// Feature frequency and uniqueness.
    Stats(StatsArgs),
    /// Convert tagged TSV to corpus JSONL.
    Convert(ConvertArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct CorpusArgs {
    /// Corpus JSONL file.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Corpus metadata JSON (defaults to `<corpus>.meta.json` if present).
    #[arg(long)]
    pub meta: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct MetricArgs {
    /// bleu, rouge1, rouge2, rouge-l or masked-sim.
    #[arg(long, default_value = "bleu")]
    pub metric: String,
    #[arg(long, default_value_t = 4)]
    pub bleu_max_n: usize,
    /// add1 or none.
    #[arg(long, default_value = "add1")]
    pub smoothing: String,
    /// Compare tokens case-sensitively.
    #[arg(long)]
    pub no_case_fold: bool,
    /// Directory of similarity matrices named `<pair_id>.*`, for masked-sim.
    #[arg(long)]
    pub sim_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct OutArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// json, csv or tsv; guessed from the output extension when absent.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Comma-separated feature ids, or `all` for the built-in inventory.
    #[arg(long, default_value = "all")]
    pub features: String,
    /// JSON file with extra feature definitions.
    #[arg(long)]
    pub feature_file: Option<PathBuf>,
    #[command(flatten)]
    pub metric: MetricArgs,
    /// `name=path` or `name` (looked up in MULER_LEXICON_DIR); repeatable.
    #[arg(long = "lexicon")]
    pub lexicons: Vec<String>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    /// Directory of report JSON files, one per system.
    #[arg(long)]
    pub reports: PathBuf,
    /// bleu, indices-bleu or max-minus-min.
    #[arg(long, default_value = "bleu")]
    pub x: String,
    /// neg-muler or muler.
    #[arg(long, default_value = "neg-muler")]
    pub y: String,
    /// langs or year,langs.
    #[arg(long, default_value = "langs")]
    pub group_by: String,
    /// Also write the long-format points (language, feature, x, y) as TSV.
    #[arg(long)]
    pub points: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Comma-separated features for the hybrid and frequency experiments.
    #[arg(long, default_value = "POS:NOUN")]
    pub feature: String,
    /// Alphas for the hybrid curve.
    #[arg(long, value_delimiter = ',')]
    pub hybrid: Vec<f64>,
    /// Group counts for the specificity experiment.
    #[arg(long, value_delimiter = ',')]
    pub specificity: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    pub repeats: usize,
    /// Alphas for the frequency experiment.
    #[arg(long, value_delimiter = ',')]
    pub frequency: Vec<f64>,
    #[command(flatten)]
    pub metric: MetricArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct StatsArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, default_value = "all")]
    pub features: String,
    #[arg(long)]
    pub feature_file: Option<PathBuf>,
    /// ref, cand or both.
    #[arg(long, default_value = "both")]
    pub side: String,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ConvertArgs {
    /// Tagged TSV input.
    #[arg(long)]
    pub input: PathBuf,
    /// Corpus JSONL output; `<out>.meta.json` is written when metadata is given.
    #[arg(long)]
    pub out: PathBuf,
    /// Corpus metadata as `key=value`; repeatable.
    #[arg(long = "set-meta")]
    pub meta: Vec<String>,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

impl MetricArgs {
    fn config(&self) -> Result<MetricConfig, Error> {
        let kind: MetricKind = self.metric.parse()?;
        let bleu_smoothing = match self.smoothing.to_lowercase().as_str() {
            "add1" | "add1_on_zero" | "add1-on-zero" => Smoothing::Add1OnZero,
            "none" => Smoothing::None,
            other => return Err(usage(format!("unknown smoothing {other:?}"))),
        };
        let config = MetricConfig {
            kind,
            bleu_max_n: self.bleu_max_n,
            bleu_smoothing,
            case_fold: !self.no_case_fold,
        };
        config.validate()?;
        if kind == MetricKind::MaskedSim && self.sim_dir.is_none() {
            return Err(usage("masked-sim needs --sim-dir"));
        }
        Ok(config)
    }

    fn matrices(&self) -> Result<Option<BTreeMap<String, SimilarityMatrix>>, Error> {
        match (&self.sim_dir, self.metric.parse::<MetricKind>()?) {
            (Some(dir), MetricKind::MaskedSim) => Ok(Some(SimilarityMatrix::load_dir(dir)?)),
            _ => Ok(None),
        }
    }
}

fn select_features(list: &str, file: Option<&Path>) -> Result<Vec<FeatureSpec>, Error> {
    let mut features: Vec<FeatureSpec> = match list.trim() {
        "all" => builtin_features(),
        "" => Vec::new(),
        ids => ids
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(builtin_feature)
            .collect(),
    };
    if let Some(path) = file {
        let text =
            std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        for f in parse_feature_file(&text)? {
            match features.iter_mut().find(|g| g.feature_id == f.feature_id) {
                Some(slot) => *slot = f,
                None => features.push(f),
            }
        }
    }
    if features.is_empty() {
        return Err(usage("no features selected"));
    }
    Ok(features)
}

/// Resolves `name=path` or a bare `name` against MULER_LEXICON_DIR.
fn resolve_lexicon(binding: &str) -> Result<Lexicon, Error> {
    let (name, path) = match binding.split_once('=') {
        Some((n, p)) => (n.trim(), Some(PathBuf::from(p.trim()))),
        None => (binding.trim(), None),
    };
    if name.is_empty() {
        return Err(usage(format!("bad lexicon binding {binding:?}")));
    }
    let search = std::env::var_os("MULER_LEXICON_DIR").map(PathBuf::from);
    let mut candidates = Vec::new();
    if let Some(p) = &path {
        candidates.push(p.clone());
        if let Some(dir) = &search {
            candidates.push(dir.join(p));
        }
    } else if let Some(dir) = &search {
        candidates.push(dir.join(format!("{name}.tsv")));
        candidates.push(dir.join(name));
    }
    let found = candidates.iter().find(|p| p.is_file()).ok_or_else(|| {
        usage(format!(
            "lexicon {name}: file not found (set MULER_LEXICON_DIR or give name=path)"
        ))
    })?;
    Ok(load_lexicon(name, found)?)
}

fn load_checked(args: &CorpusArgs) -> Result<ParallelCorpus, Error> {
    let corpus = load_corpus(&args.corpus, args.meta.as_deref())?;
    for d in validate_corpus(&corpus) {
        match d.severity {
            Severity::Warning => log::warn!("{}: {}", d.pair_id, d.message),
            Severity::Error => return Err(usage(d.message)),
        }
    }
    Ok(corpus)
}

fn format_for(out: &OutArgs) -> Result<OutputFormat, Error> {
    Ok(match (&out.format, &out.out) {
        (Some(f), _) => f.parse()?,
        (None, Some(path)) => OutputFormat::from_path(path),
        (None, None) => OutputFormat::Json,
    })
}

/// Writes the whole output at once; a failed write leaves no file behind.
fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), Error> {
    let Some(path) = path else {
        std::io::stdout()
            .write_all(bytes)
            .map_err(|source| Error::Output {
                path: "<stdout>".into(),
                source,
            })?;
        return Ok(());
    };
    std::fs::write(path, bytes).map_err(|source| {
        let _ = std::fs::remove_file(path);
        Error::Output {
            path: path.display().to_string(),
            source,
        }
    })
}

fn config_echo(cli: &Cli) -> Value {
    serde_json::to_value(cli).unwrap_or(Value::Null)
}

fn report(cli: &Cli, args: &ReportArgs) -> Result<(), Error> {
    let format = format_for(&args.out)?;
    let metric = args.metric.config()?;
    let corpus = load_checked(&args.corpus)?;
    let features = select_features(&args.features, args.feature_file.as_deref())?;
    let lexicons = args
        .lexicons
        .iter()
        .map(|b| resolve_lexicon(b))
        .collect::<Result<Vec<_>, _>>()?;
    let mut report = match args.metric.matrices()? {
        Some(m) => feature_report_matrices(&corpus, &features, &m, &lexicons)?,
        None => feature_report(&corpus, &features, &metric, &lexicons)?,
    };
    report.meta.insert("config".into(), config_echo(cli));
    let bytes = analysis::serialize(Output::Report(&report), format)?;
    emit(args.out.out.as_deref(), &bytes)
}

fn compare(args: &CompareArgs) -> Result<(), Error> {
    let format = format_for(&args.out)?;
    let x: XMeasure = args.x.parse()?;
    let y: YMeasure = args.y.parse()?;
    let group_by: GroupBy = args.group_by.parse()?;
    let series = analysis::load_reports(&args.reports)?;
    let matrix = analysis::correlate(&series, x, y, group_by);
    let bytes = analysis::serialize(Output::Matrix(&matrix), format)?;
    let points = match &args.points {
        Some(_) => {
            let points = analysis::long_points(&series, x, y, group_by);
            Some(analysis::serialize(
                Output::Points(&points),
                OutputFormat::Tsv,
            )?)
        }
        None => None,
    };
    emit(args.out.out.as_deref(), &bytes)?;
    if let (Some(path), Some(tsv)) = (&args.points, points) {
        if let Err(e) = emit(Some(path), &tsv) {
            if let Some(out) = &args.out.out {
                let _ = std::fs::remove_file(out);
            }
            return Err(e);
        }
    }
    Ok(())
}

fn validate(cli: &Cli, args: &ValidateArgs) -> Result<(), Error> {
    let format = format_for(&args.out)?;
    let metric = args.metric.config()?;
    let corpus = load_checked(&args.corpus)?;
    let matrices = args.metric.matrices()?;
    let scorer = match &matrices {
        Some(m) => Scorer::Matrices(m),
        None => Scorer::Tokens(&metric),
    };
    let eval = Evaluation::new(&corpus, scorer)?;
    let features = select_features(&args.feature, None)?;

    let hybrid_alphas: Vec<f64> =
        if args.hybrid.is_empty() && args.specificity.is_empty() && args.frequency.is_empty() {
            (0..=10).map(|k| k as f64 / 10.0).collect()
        } else {
            args.hybrid.clone()
        };
    let mut bundle = ValidationBundle {
        config: config_echo(cli),
        hybrid: Vec::new(),
        specificity: BTreeMap::new(),
        frequency: Vec::new(),
        position_definition: POSITION_DEFINITION.to_string(),
    };
    let computation = |e: crate::validation::ValidationError| -> Error {
        match e {
            crate::validation::ValidationError::Scoring(s) => Error::Scoring(s),
            crate::validation::ValidationError::Feature(f) => Error::Feature(f),
            other => usage(other.to_string()),
        }
    };
    for f in &features {
        if !hybrid_alphas.is_empty() {
            bundle
                .hybrid
                .push(run_hybrid(&eval, f, &hybrid_alphas).map_err(computation)?);
        }
        if !args.frequency.is_empty() {
            bundle
                .frequency
                .push(run_frequency(&eval, f, &args.frequency).map_err(computation)?);
        }
    }
    for &p in &args.specificity {
        let result = run_specificity(&eval, p, args.repeats, cli.seed).map_err(computation)?;
        bundle.specificity.insert(p, result);
    }
    let bytes = analysis::serialize(Output::Validation(&bundle), format)?;
    emit(args.out.out.as_deref(), &bytes)
}

fn stats(args: &StatsArgs) -> Result<(), Error> {
    let format = format_for(&args.out)?;
    let side: Side =
        serde_json::from_value(Value::String(args.side.to_lowercase())).map_err(|_| {
            usage(format!(
                "unknown side {:?} (expected ref, cand or both)",
                args.side
            ))
        })?;
    let corpus = load_checked(&args.corpus)?;
    let features = select_features(&args.features, args.feature_file.as_deref())?;
    let stats: Vec<_> = features
        .iter()
        .map(|f| feature_stats(&corpus, f, side))
        .collect();
    let bytes = analysis::serialize(Output::Stats(&stats), format)?;
    emit(args.out.out.as_deref(), &bytes)
}

fn convert(args: &ConvertArgs) -> Result<(), Error> {
    let text = std::fs::read_to_string(&args.input).map_err(|source| {
        Error::Corpus(crate::corpus::CorpusError::Io {
            path: args.input.clone(),
            source,
        })
    })?;
    let mut metadata = BTreeMap::new();
    for kv in &args.meta {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| usage(format!("metadata must be key=value, got {kv:?}")))?;
        metadata.insert(k.trim().to_string(), v.trim().to_string());
    }
    let corpus = parse_tagged(&text, metadata)?;
    emit(Some(&args.out), corpus.to_jsonl().as_bytes())?;
    if !corpus.metadata.is_empty() {
        let side = sidecar_path(&args.out);
        write_metadata(&side, &corpus.metadata).map_err(|source| {
            let _ = std::fs::remove_file(&args.out);
            Error::Output {
                path: side.display().to_string(),
                source,
            }
        })?;
    }
    Ok(())
}

/// Runs one parsed command inside a pool of `cli.parallel` workers.
/// Outputs are written only after everything is computed, and a failed
/// write removes what it left.
pub fn dispatch(cli: &Cli) -> Result<(), Error> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.parallel as usize)
        .build()
        .map_err(|e| usage(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Report(a) => report(cli, a),
        Command::Compare(a) => compare(a),
        Command::Validate(a) => validate(cli, a),
        Command::Stats(a) => stats(a),
        Command::Convert(a) => convert(a),
    })
}

/// Parses arguments, runs the command, and returns the exit code. Errors
/// go to stderr as one JSON object.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return 0;
            }
            let body = json!({"error": "usage", "message": e.to_string().trim(), "exit_code": 2});
            eprintln!("{body}");
            return 2;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let code = e.exit_code();
            let body = json!({"error": e.kind(), "message": e.to_string(), "exit_code": code});
            eprintln!("{body}");
            code
        }
    }
}
