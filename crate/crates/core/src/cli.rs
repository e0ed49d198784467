//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 evaluation finished but
//! some dataset questions were skipped, 3 dataset validation failures.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::agreement::{blanc, Clustering};
use crate::analysis::{coverage_report, transform_question, TransformRule, TripleStore};
use crate::lexicon::{Lexicon, LexiconOptions};
use crate::metrics::{evaluate, render_table, EvalConfig, DEFAULT_ANSWER_LIST_CAP};
use crate::model::{parse_dataset, parse_predictions, validate_question, QuestionRecord};
use crate::similarity::vector::{DEFAULT_NOISE_VARIANCE, DEFAULT_THRESHOLD, JITTER_LADDER};
use crate::similarity::wordnet::PARTITION_CAP;
use crate::similarity::{Channel, EmbeddingStore, GpOptions, SimilarityKind, WordNetOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SKIPPED: i32 = 2;
pub const EXIT_INVALID: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "rankclust", version, about = "Score ranked answer lists against weighted answer clusters")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score predictions against a dataset
    Evaluate(EvaluateArgs),
    /// Check crowdsourced questions for top-8 cluster coverage
    Validate {
        dataset: PathBuf,
    },
    /// BLANC agreement between two clusterings
    Blanc {
        gold: PathBuf,
        response: PathBuf,
    },
    /// Fraction of answer clusters linked to their question by a triple
    Coverage {
        dataset: PathBuf,
        triples: PathBuf,
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
        #[arg(long)]
        no_timestamp: bool,
    },
    /// Rewrite questions (one per line) into completion prompts
    Transform {
        questions: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub dataset: PathBuf,
    pub predictions: PathBuf,
    #[arg(long, value_enum, default_value_t = SimilarityKind::Exact)]
    pub similarity: SimilarityKind,
    /// WordNet database directory or simplified lexicon file
    #[arg(long, value_name = "PATH")]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub morphology: bool,
    /// Score only all-singleton token splits
    #[arg(long)]
    pub no_partitions: bool,
    #[arg(long, value_name = "PATH")]
    pub embeddings: Option<PathBuf>,
    /// Fixed RBF lengthscale instead of the median pairwise distance
    #[arg(long)]
    pub lengthscale: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_NOISE_VARIANCE)]
    pub noise_variance: f64,
    #[arg(long = "max-answers", value_name = "K,K,...", value_delimiter = ',', default_value = "1,3,5,10")]
    pub max_answers: Vec<usize>,
    #[arg(long = "max-incorrect", value_name = "K,K,...", value_delimiter = ',', default_value = "1,3,5")]
    pub max_incorrect: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_ANSWER_LIST_CAP)]
    pub cap: usize,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LexiconEcho {
    pub source: String,
    pub version: Option<String>,
    pub morphology: bool,
    pub partitions: bool,
    pub partition_cap: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GpEcho {
    /// "median" or the fixed value.
    pub lengthscale: String,
    pub noise_variance: f64,
    pub threshold: f64,
    pub jitter_ladder: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub similarity: SimilarityKind,
    pub max_answers_ks: Vec<usize>,
    pub max_incorrect_ks: Vec<usize>,
    pub answer_list_cap: usize,
    pub lexicon: Option<LexiconEcho>,
    pub gp: Option<GpEcho>,
}

/// Provenance block embedded in every JSON report.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<ConfigEcho>,
    /// Input role → SHA-256 of the file (or of the concatenated index files
    /// for a WordNet directory).
    pub inputs: BTreeMap<String, String>,
    pub timestamp: Option<String>,
}

impl RunManifest {
    fn new(no_timestamp: bool) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: None,
            inputs: BTreeMap::new(),
            timestamp: (!no_timestamp).then(|| chrono::Utc::now().to_rfc3339()),
        }
    }

    fn digest(&mut self, role: &str, path: &Path) -> Result<()> {
        let mut hasher = Sha256::new();
        if path.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(path)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect();
            entries.sort();
            for p in entries {
                hasher.update(p.file_name().unwrap_or_default().to_string_lossy().as_bytes());
                hasher.update(fs::read(&p)?);
            }
        } else {
            hasher.update(fs::read(path).with_context(|| format!("reading {}", path.display()))?);
        }
        self.inputs.insert(role.to_string(), hex::encode(hasher.finalize()));
        Ok(())
    }
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    manifest: &'a RunManifest,
    #[serde(flatten)]
    body: &'a T,
}

fn write_json<T: Serialize>(path: &Path, manifest: &RunManifest, body: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&Report { manifest, body })?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_dataset(path: &Path) -> Result<Vec<QuestionRecord>> {
    let file = File::open(path).with_context(|| format!("opening dataset {}", path.display()))?;
    parse_dataset(BufReader::new(file)).with_context(|| format!("parsing dataset {}", path.display()))
}

fn usage_error(message: impl std::fmt::Display) -> i32 {
    eprintln!("error: {message}");
    EXIT_USAGE
}

/// Parses arguments and runs the selected command, returning the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Evaluate(args) => cmd_evaluate(&args),
        Command::Validate { dataset } => cmd_validate(&dataset),
        Command::Blanc { gold, response } => cmd_blanc(&gold, &response),
        Command::Coverage {
            dataset,
            triples,
            json,
            no_timestamp,
        } => cmd_coverage(&dataset, &triples, json.as_deref(), no_timestamp),
        Command::Transform { questions } => cmd_transform(&questions),
    };
    result.unwrap_or_else(|e| usage_error(format!("{e:#}")))
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<i32> {
    let config = EvalConfig {
        similarity: args.similarity,
        max_answers_ks: args.max_answers.clone(),
        max_incorrect_ks: args.max_incorrect.clone(),
        wordnet: WordNetOptions {
            partitions: !args.no_partitions,
            partition_cap: PARTITION_CAP,
        },
        vector: GpOptions {
            lengthscale: args.lengthscale,
            noise_variance: args.noise_variance,
            threshold: DEFAULT_THRESHOLD,
        },
        answer_list_cap: args.cap,
    };
    config.validate()?;
    if args.jobs == 0 {
        bail!("--jobs must be positive");
    }
    if args.lengthscale.is_some_and(|l| !(l > 0.0)) || !(args.noise_variance > 0.0) {
        bail!("--lengthscale and --noise-variance must be positive");
    }

    let mut manifest = RunManifest::new(args.no_timestamp);
    let dataset = load_dataset(&args.dataset)?;
    manifest.digest("dataset", &args.dataset)?;
    let predictions = parse_predictions(BufReader::new(
        File::open(&args.predictions)
            .with_context(|| format!("opening predictions {}", args.predictions.display()))?,
    ))
    .with_context(|| format!("parsing predictions {}", args.predictions.display()))?;
    manifest.digest("predictions", &args.predictions)?;

    let lexicon;
    let store;
    let mut echo = ConfigEcho {
        similarity: config.similarity,
        max_answers_ks: config.max_answers_ks.clone(),
        max_incorrect_ks: config.max_incorrect_ks.clone(),
        answer_list_cap: config.answer_list_cap,
        lexicon: None,
        gp: None,
    };
    let channel = match args.similarity {
        SimilarityKind::Exact => Channel::Exact,
        SimilarityKind::Wordnet => {
            let Some(path) = &args.lexicon else {
                bail!("--similarity wordnet requires --lexicon PATH");
            };
            lexicon = Lexicon::load(path, LexiconOptions { morphology: args.morphology })?;
            manifest.digest("lexicon", path)?;
            echo.lexicon = Some(LexiconEcho {
                source: if path.is_dir() { "wordnet".into() } else { "simplified".into() },
                version: lexicon.version().map(str::to_string),
                morphology: args.morphology,
                partitions: config.wordnet.partitions,
                partition_cap: config.wordnet.partition_cap,
            });
            Channel::WordNet(&lexicon, config.wordnet)
        }
        SimilarityKind::Vector => {
            let Some(path) = &args.embeddings else {
                bail!("--similarity vector requires --embeddings PATH");
            };
            let file = File::open(path).with_context(|| format!("opening embeddings {}", path.display()))?;
            store = EmbeddingStore::parse(BufReader::new(file))
                .with_context(|| format!("parsing embeddings {}", path.display()))?;
            manifest.digest("embeddings", path)?;
            echo.gp = Some(GpEcho {
                lengthscale: config
                    .vector
                    .lengthscale
                    .map_or_else(|| "median".to_string(), |l| l.to_string()),
                noise_variance: config.vector.noise_variance,
                threshold: config.vector.threshold,
                jitter_ladder: JITTER_LADDER.to_vec(),
            });
            Channel::Vector(&store, config.vector)
        }
    };
    manifest.config = Some(echo);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .context("starting worker pool")?;
    let report = pool.install(|| evaluate(&dataset, &predictions, &channel, &config))?;

    let table = render_table(&[&report]);
    print!("{table}");
    if let Some(path) = &args.table {
        fs::write(path, &table).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.json {
        write_json(path, &manifest, &report)?;
    }

    let d = &report.diagnostics;
    if !d.unknown_predictions.is_empty() {
        eprintln!(
            "warning: {} prediction id(s) not in dataset were ignored",
            d.unknown_predictions.len()
        );
    }
    if !d.truncated_lists.is_empty() {
        eprintln!(
            "warning: {} ranked list(s) truncated to {} answers",
            d.truncated_lists.len(),
            config.answer_list_cap
        );
    }
    if !d.missing_embeddings.is_empty() {
        eprintln!("warning: {} answer(s) had no embedding", d.missing_embeddings.len());
    }
    if report.question_count == 0 {
        eprintln!("warning: no questions were evaluated");
    }
    if report.skipped() > 0 {
        eprintln!("warning: {} dataset question(s) skipped:", report.skipped());
        for id in &d.missing_predictions {
            eprintln!("  {id}: no prediction");
        }
        for s in &d.skipped_missing_resources {
            eprintln!("  {}: {}", s.id, s.reason);
        }
        return Ok(EXIT_SKIPPED);
    }
    Ok(EXIT_OK)
}

pub fn cmd_validate(path: &Path) -> Result<i32> {
    let dataset = load_dataset(path)?;
    let mut failed = 0;
    for record in &dataset {
        let v = validate_question(record);
        if v.pass {
            println!("{}\tpass\ttop8={}\ttotal={}", v.id, v.top8_coverage, v.total_collected);
        } else {
            failed += 1;
            println!(
                "{}\tFAIL\ttop8={}\ttotal={}\t{}",
                v.id,
                v.top8_coverage,
                v.total_collected,
                v.reasons.join("; ")
            );
        }
    }
    eprintln!("{} question(s), {} failing", dataset.len(), failed);
    Ok(if failed == 0 { EXIT_OK } else { EXIT_INVALID })
}

fn load_clustering(path: &Path) -> Result<Clustering> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Clustering::parse(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

pub fn cmd_blanc(gold: &Path, response: &Path) -> Result<i32> {
    let g = load_clustering(gold)?;
    let r = load_clustering(response)?;
    let result = blanc(&g, &r)?;
    if !result.only_gold.is_empty() || !result.only_response.is_empty() {
        eprintln!(
            "note: {} gold-only and {} response-only item(s) excluded",
            result.only_gold.len(),
            result.only_response.len()
        );
    }
    eprintln!("BLANC with degenerate-case handling over {} common items", result.common_items);
    println!("{:.2}", result.blanc * 100.0);
    Ok(EXIT_OK)
}

pub fn cmd_coverage(dataset: &Path, triples: &Path, json: Option<&Path>, no_timestamp: bool) -> Result<i32> {
    let records = load_dataset(dataset)?;
    let file = File::open(triples).with_context(|| format!("opening triples {}", triples.display()))?;
    let store = TripleStore::load(BufReader::new(file))
        .with_context(|| format!("parsing triples {}", triples.display()))?;
    let report = coverage_report(&records, &store);
    for q in &report.questions {
        println!("{}\t{}/{}", q.id, q.covered, q.clusters);
    }
    println!(
        "covered {} of {} clusters: {:.1}%",
        report.covered,
        report.clusters,
        report.overall * 100.0
    );
    if let Some(path) = json {
        let mut manifest = RunManifest::new(no_timestamp);
        manifest.digest("dataset", dataset)?;
        manifest.digest("triples", triples)?;
        write_json(path, &manifest, &report)?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_transform(path: &Path) -> Result<i32> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut misses = 0;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let t = transform_question(line);
        if t.rule == TransformRule::Miss {
            misses += 1;
        }
        writeln!(out, "{}", t.prompt)?;
    }
    if misses > 0 {
        eprintln!("warning: {misses} question(s) matched no rewrite rule");
    }
    Ok(EXIT_OK)
}
