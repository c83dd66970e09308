//! The `cbt` command line: build, train, eval, sweep, report and selftest.
//!
//! Settings come from an optional flat `key = value` file (`--config`),
//! overridden by `--set key=value` and then by dedicated flags. Exit codes:
//! 0 on success, 1 when data or a check fails validation, 2 on usage errors.

mod config;
mod models;
mod selftest;

pub use config::RunConfig;
pub use models::{selfsup_config, train_model, Model, TrainData, MODEL_KEYS, TRAINABLE, UNTRAINED};
pub use selftest::{run_checks, Check};

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::baselines::corpus_sentences;
use crate::cbt::{build_dataset, parse_cbt, write_cbt, BuilderConfig, Question};
use crate::corpus::{load_books, parse_split_manifest, Book, Lexicon, SegmentConfig, Split, WordClass};
use crate::error::{Error, Result};
use crate::eval::{anonymize, dataset_hash, evaluate, parse_csv, sweep, Ensemble, EvalReport, EvalRow, ReportFormat};
use crate::predict::Predictor;
use crate::storybook::{self, StorybookConfig};
use crate::util::sha256_hex;

/// Settings read by `build`.
const BUILD_KEYS: &[&str] = &[
    "stride",
    "require_answer_in_context",
    "lexicon_dir",
    "abbreviations",
    "paragraph_breaks",
    "synthetic_books",
    "stories_per_book",
    "sentences_per_story",
    "characters_per_story",
    "name_pool",
    "second_destination",
];

#[derive(Parser, Debug)]
#[command(name = "cbt", version, about = "Cloze dataset construction, memory networks and baselines")]
struct Cli {
    /// Worker threads for data-parallel sections (results do not depend on it).
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Flat `key = value` settings file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Setting override, repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Seed for question sampling, training order and tie-breaks (setting `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// More logging; repeat for debug output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build cloze questions from books.
    Build(BuildArgs),
    /// Train one model on a built dataset.
    Train(TrainArgs),
    /// Evaluate checkpoints or untrained baselines.
    Eval(EvalArgs),
    /// Retrain and evaluate across values of one setting.
    Sweep(SweepArgs),
    /// Merge evaluation CSV files into one table.
    Report(ReportArgs),
    /// Gradient checks and invariant suites.
    Selftest,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct BookSource {
    /// Directory of `.txt` books with a `splits.txt` manifest.
    #[arg(long)]
    books: Option<PathBuf>,
    /// Generate storybook text instead of reading books.
    #[arg(long)]
    synthetic: bool,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[command(flatten)]
    source: BookSource,
    #[arg(long)]
    stride: Option<usize>,
    /// Comma-separated classes (NE,CN,V,P).
    #[arg(long, default_value = "NE,CN,V,P")]
    classes: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Directory written by `build`, or holding released CBT files.
    #[arg(long)]
    data: PathBuf,
    /// Restrict to one class; all classes when omitted.
    #[arg(long)]
    class: Option<String>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    model: String,
    #[command(flatten)]
    data: DataArgs,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ScoringArgs {
    /// Self-supervised models: best single window instead of the soft sum.
    #[arg(long)]
    hard: bool,
    /// Self-supervised models: skip windows whose candidate also occurs in the query.
    #[arg(long)]
    exclude_cooccurrences: bool,
    /// Replace entity names with per-question shuffled placeholders.
    #[arg(long)]
    anonymize: bool,
    #[arg(long, default_value = "valid")]
    split: String,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Checkpoint files or untrained baseline names.
    #[arg(required = true)]
    models: Vec<String>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    scoring: ScoringArgs,
    /// Average the members' distributions into one model.
    #[arg(long)]
    ensemble: bool,
    #[arg(long, default_value = "markdown")]
    format: String,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    model: String,
    /// Setting to vary.
    #[arg(long)]
    param: String,
    /// Comma-separated values.
    #[arg(long)]
    values: String,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    scoring: ScoringArgs,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// CSV files written by `eval --format csv`.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value = "markdown")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failures mapped to exit codes.
enum Failure {
    Usage(String),
    Invalid(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Usage(e.to_string()),
            e => Failure::Invalid(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.max(1)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {} worker threads: {e}", cli.jobs);
            return 2;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(Failure::Invalid(m)) => {
            eprintln!("error: {m}");
            1
        }
    }
}

fn settings(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for o in &cli.overrides {
        cfg.set_pair(o)?;
    }
    if let Some(s) = cli.seed {
        cfg.set("seed", s);
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    let mut cfg = settings(cli)?;
    match &cli.command {
        Command::Build(a) => build(a, &mut cfg),
        Command::Train(a) => train(a, &mut cfg),
        Command::Eval(a) => eval(a, &mut cfg),
        Command::Sweep(a) => run_sweep(a, &mut cfg),
        Command::Report(a) => report(a),
        Command::Selftest => self_test(),
    }
}

fn with_known(cfg: &RunConfig, groups: &[&[&str]]) -> Result<()> {
    let mut known = vec!["seed"];
    for g in groups {
        known.extend_from_slice(g);
    }
    cfg.check_known(&known)
}

fn log_config(command: &str, cfg: &RunConfig) {
    log::info!("{command} config {}:\n{}", cfg.hash(), cfg.canonical().trim_end());
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_classes(list: &str) -> Result<Vec<WordClass>> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

fn lexicon(cfg: &RunConfig) -> Result<Lexicon> {
    match cfg.raw("lexicon_dir") {
        Some(d) => Lexicon::load_dir(Path::new(d)),
        None => Ok(Lexicon::default()),
    }
}

fn segmenter(cfg: &RunConfig) -> Result<SegmentConfig> {
    let mut seg = SegmentConfig::default();
    if let Some(list) = cfg.raw("abbreviations") {
        seg.abbreviations = list.split(',').map(|s| s.trim().to_lowercase()).filter(|s| !s.is_empty()).collect();
    }
    seg.paragraph_breaks = cfg.get("paragraph_breaks", seg.paragraph_breaks)?;
    Ok(seg)
}

fn storybook_config(cfg: &RunConfig) -> Result<StorybookConfig> {
    let d = StorybookConfig::default();
    Ok(StorybookConfig {
        books: cfg.get("synthetic_books", d.books)?,
        stories_per_book: cfg.get("stories_per_book", d.stories_per_book)?,
        sentences_per_story: cfg.get("sentences_per_story", d.sentences_per_story)?,
        characters_per_story: cfg.get("characters_per_story", d.characters_per_story)?,
        name_pool: cfg.get("name_pool", d.name_pool)?,
        second_destination: cfg.get("second_destination", d.second_destination)?,
        seed: cfg.get("seed", d.seed)?,
    })
}

fn book_sentences(books: &[Book], split: Split) -> String {
    let mut out = String::new();
    for b in books.iter().filter(|b| b.split == split) {
        for s in &b.sentences {
            let words: Vec<String> = s.iter().map(|t| t.token.lower.clone()).collect();
            out.push_str(&words.join(" "));
            out.push('\n');
        }
    }
    out
}

fn build(a: &BuildArgs, cfg: &mut RunConfig) -> CliResult<()> {
    if let Some(s) = a.stride {
        cfg.set("stride", s);
    }
    with_known(cfg, &[BUILD_KEYS])?;
    log_config("build", cfg);
    let classes = parse_classes(&a.classes)?;
    let lex = lexicon(cfg)?;
    let seg = segmenter(cfg)?;
    let books = match (&a.source.books, a.source.synthetic) {
        (Some(dir), _) => {
            let manifest_path = dir.join("splits.txt");
            let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
            let manifest = parse_split_manifest(&text, &manifest_path.display().to_string())?;
            load_books(dir, &manifest, &lex, &seg)?
        }
        _ => {
            let generated = storybook::generate(&storybook_config(cfg)?)?;
            storybook::write_dir(&generated, &a.out.join("books"))?;
            storybook::to_books(&generated, &lex, &seg)
        }
    };
    if books.is_empty() {
        return Err(Failure::Invalid("no books to build from".into()));
    }
    let builder = BuilderConfig {
        stride: cfg.get("stride", 1)?,
        rng_seed: cfg.get("seed", 0)?,
        require_answer_in_context: cfg.get("require_answer_in_context", true)?,
        stopwords: lex.stopwords.clone(),
        ..Default::default()
    };
    let ds = build_dataset(&books, &classes, &builder)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let mut meta = format!("config_hash={}\n", cfg.hash());
    let mut all = Vec::new();
    for split in Split::ALL {
        for &class in &classes {
            let qs = ds.get(split, class);
            let path = a.out.join(format!("cbtest_{}_{}.txt", class.code(), split.name()));
            write_cbt(qs, &path)?;
            let _ = writeln!(meta, "{}={} questions={}", path_name(&path), dataset_hash(qs), qs.len());
            all.extend_from_slice(qs);
        }
    }
    let corpus = book_sentences(&books, Split::Train);
    let _ = writeln!(meta, "corpus_train.txt={}", &sha256_hex(corpus.as_bytes())[..16]);
    let hash = dataset_hash(&all);
    let _ = writeln!(meta, "dataset={hash}\nrejected={}", ds.rejected.values().sum::<usize>());
    write_file(&a.out.join("corpus_train.txt"), &corpus)?;
    write_file(&a.out.join("build_meta.txt"), &(meta + &cfg.canonical()))?;
    log::info!("{} questions from {} books", all.len(), books.len());
    println!("dataset {hash}");
    Ok(())
}

fn path_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Questions of `split`, from `cbtest_<CLASS>_<split>*.txt` files in `dir`.
fn load_split(dir: &Path, split: Split, class: Option<WordClass>) -> Result<Vec<Question>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = path_name(p);
            let Some(rest) = name.strip_prefix("cbtest_") else {
                return false;
            };
            let Some((code, tail)) = rest.split_once('_') else {
                return false;
            };
            let class_ok = match class {
                Some(c) => code == c.code(),
                None => code.parse::<WordClass>().is_ok_and(|c| WordClass::QUESTION_CLASSES.contains(&c)),
            };
            class_ok && tail.starts_with(split.name()) && name.ends_with(".txt")
        })
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        out.extend(parse_cbt(&p)?);
    }
    Ok(out)
}

struct Data {
    class: Option<WordClass>,
    train: Vec<Question>,
    valid: Vec<Question>,
    corpus: Vec<Vec<String>>,
}

fn load_training_data(d: &DataArgs) -> Result<Data> {
    let class = d.class.as_deref().map(str::parse).transpose()?;
    let train = load_split(&d.data, Split::Train, class)?;
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let valid = load_split(&d.data, Split::Valid, class)?;
    let corpus_path = d.data.join("corpus_train.txt");
    let corpus = if corpus_path.exists() {
        std::fs::read_to_string(&corpus_path)
            .map_err(|e| Error::io(&corpus_path, e))?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.split_whitespace().map(str::to_string).collect())
            .collect()
    } else {
        corpus_sentences(&train, 1)
    };
    Ok(Data {
        class,
        train,
        valid,
        corpus,
    })
}

fn train(a: &TrainArgs, cfg: &mut RunConfig) -> CliResult<()> {
    with_known(cfg, &[MODEL_KEYS])?;
    cfg.set("model", &a.model);
    log_config("train", cfg);
    if !TRAINABLE.contains(&a.model.as_str()) {
        return Err(Failure::Usage(format!(
            "`{}` is not trainable (trainable: {})",
            a.model,
            TRAINABLE.join(", ")
        )));
    }
    let data = load_training_data(&a.data)?;
    let dataset = dataset_hash(&data.train);
    log::info!("train {} valid {} dataset {dataset}", data.train.len(), data.valid.len());
    let model = train_model(
        &a.model,
        cfg,
        &TrainData {
            train: &data.train,
            valid: &data.valid,
            corpus: &data.corpus,
        },
    )?;
    let hash = cfg.hash();
    let class = data.class.map_or("all", WordClass::code);
    model.save(
        &a.out,
        &[("config_hash", &hash), ("dataset", &dataset), ("model", &a.model), ("class", class)],
    )?;
    println!("{} config {hash} dataset {dataset}", a.out.display());
    Ok(())
}

/// A loaded checkpoint or named baseline with its config hash.
struct Loaded {
    model: Model,
    config_hash: String,
}

fn load_model(spec: &str) -> Result<Loaded> {
    if UNTRAINED.contains(&spec) {
        return Ok(Loaded {
            model: Model::Untrained(spec.to_string()),
            config_hash: "-".into(),
        });
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Error::Config(format!(
            "`{spec}` is neither a file nor a baseline ({})",
            UNTRAINED.join(", ")
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let config_hash = text
        .lines()
        .take(64)
        .find_map(|l| {
            l.strip_prefix("# config_hash=")
                .or_else(|| l.strip_prefix("param config_hash "))
                .map(str::to_string)
        })
        .unwrap_or_else(|| "-".into());
    Ok(Loaded {
        model: Model::load(path)?,
        config_hash,
    })
}

fn scoring_config(s: &ScoringArgs, cfg: &mut RunConfig) {
    if s.hard {
        cfg.set("soft", false);
    }
    if s.exclude_cooccurrences {
        cfg.set("exclude_cooccurrences", true);
    }
}

fn eval_questions(d: &DataArgs, s: &ScoringArgs, seed: u64) -> Result<Vec<Question>> {
    let class = d.class.as_deref().map(str::parse).transpose()?;
    let split: Split = s.split.parse()?;
    let qs = load_split(&d.data, split, class)?;
    if qs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(if s.anonymize { anonymize(&qs, seed) } else { qs })
}

fn eval(a: &EvalArgs, cfg: &mut RunConfig) -> CliResult<()> {
    with_known(cfg, &[MODEL_KEYS])?;
    scoring_config(&a.scoring, cfg);
    log_config("eval", cfg);
    let format: ReportFormat = a.format.parse()?;
    let seed = cfg.get("seed", 0)?;
    let qs = eval_questions(&a.data, &a.scoring, seed)?;
    let loaded = a.models.iter().map(|m| load_model(m)).collect::<Result<Vec<_>>>()?;
    let predictors = loaded
        .iter()
        .map(|l| l.model.predictor(cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    if a.ensemble {
        let ensemble = Ensemble {
            members: predictors.iter().map(|p| &**p as &dyn Predictor).collect(),
        };
        let hashes: Vec<&str> = loaded.iter().map(|l| l.config_hash.as_str()).collect();
        rows.push(evaluate(&ensemble, &qs, seed, &hashes.join("+")));
    } else {
        for (p, l) in predictors.iter().zip(&loaded) {
            rows.push(evaluate(&**p, &qs, seed, &l.config_hash));
        }
    }
    let report = EvalReport {
        rows,
        seed,
        dataset_hash: dataset_hash(&qs),
    };
    log::info!("dataset {}", report.dataset_hash);
    emit(a.out.as_deref(), &format.render(&[report]))?;
    Ok(())
}

fn run_sweep(a: &SweepArgs, cfg: &mut RunConfig) -> CliResult<()> {
    with_known(cfg, &[MODEL_KEYS])?;
    if !MODEL_KEYS.contains(&a.param.as_str()) && a.param != "seed" {
        return Err(Failure::Usage(format!("cannot sweep unknown setting `{}`", a.param)));
    }
    scoring_config(&a.scoring, cfg);
    cfg.set("model", &a.model);
    log_config("sweep", cfg);
    let seed = cfg.get("seed", 0)?;
    let data = load_training_data(&a.data)?;
    let qs = eval_questions(&a.data, &a.scoring, seed)?;
    log::info!("sweep dataset {}", dataset_hash(&qs));
    let grid: Vec<String> = a.values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
    let result = sweep(&a.param, &grid, seed, |value| -> Result<Vec<EvalRow>> {
        let mut point = cfg.clone();
        point.set(&a.param, value);
        let model = train_model(
            &a.model,
            &point,
            &TrainData {
                train: &data.train,
                valid: &data.valid,
                corpus: &data.corpus,
            },
        )?;
        let p = model.predictor(&point)?;
        Ok(vec![evaluate(&*p, &qs, seed, &point.hash())])
    })?;
    for class in WordClass::QUESTION_CLASSES {
        if let Some((v, acc)) = result.peak(class) {
            log::info!("peak {class}: {}={v} accuracy {acc:.3}", a.param);
        }
    }
    emit(a.out.as_deref(), &result.to_csv())?;
    if result.failures() == grid.len() {
        return Err(Failure::Invalid("every sweep point failed".into()));
    }
    Ok(())
}

fn report(a: &ReportArgs) -> CliResult<()> {
    let format: ReportFormat = a.format.parse()?;
    let mut reports = Vec::new();
    for p in &a.inputs {
        let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        reports.extend(parse_csv(&text, &path_name(p))?);
    }
    emit(a.out.as_deref(), &format.render(&reports))?;
    Ok(())
}

fn self_test() -> CliResult<()> {
    let checks = run_checks()?;
    let mut failed = 0;
    for c in &checks {
        match &c.result {
            Ok(m) => println!("PASS {}: {m}", c.name),
            Err(m) => {
                failed += 1;
                println!("FAIL {}: {m}", c.name);
            }
        }
    }
    if failed > 0 {
        return Err(Failure::Invalid(format!("{failed} of {} checks failed", checks.len())));
    }
    Ok(())
}
