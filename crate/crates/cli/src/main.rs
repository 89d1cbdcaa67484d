use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand};
use senscommon::annotation::{
    aggregate_all, fleiss_kappa, label_proportions, read_labels_csv, read_rating_matrix_csv, write_labels_csv,
    AnnotationQuestion, Relation,
};
use senscommon::depgraph::{
    build_scene_pairs, parse_conllu, rank_paths_by_frequency, SceneLexicon, SoundDetector, DEFAULT_MIN_FREQ,
};
use senscommon::embeddings::EmbeddingTable;
use senscommon::experiments::{
    cross_validate, default_grid, evaluate, render_csv, render_markdown, split_dataset, train_on, LabeledDataset,
    DEFAULT_FOLDS,
};
use senscommon::jsonl;
use senscommon::mining::{
    bigram_fraction, extract_pattern_phrases, BigramFilter, CandidatePhrase, Corpus, NounLexicon, PatternSpec,
    PhraseKind, SoundSourcePair,
};
use senscommon::models::{load_checkpoint, save_checkpoint, FeatureMode, ModelConfig};
use senscommon_cli::pipeline::{build_contexts, build_questions, scene_candidates, SceneCandidate};
use senscommon_cli::{config, demo};
use senscommon_service::{AnnotationStore, AppState, StoreOptions, DATA_DIR_ENV, QUESTIONS_FILE};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "senscommon",
    version,
    about = "Mine, annotate and learn sound and smell relations"
)]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Cap the worker pool at N threads.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// TOML file with default flag values; explicit flags win.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract "sound of <y>" or "smell of <y>" phrases from a corpus.
    Mine(MineArgs),
    /// Turn two-word sound phrases into (sound, source) candidates.
    Pairs(PairsArgs),
    /// Find scene/sound co-mentions in parses and rank their dependency paths.
    Paths(PathsArgs),
    /// Generate annotation questions from mined candidates.
    Questions(QuestionsArgs),
    /// Run the annotation service.
    Serve(ServeArgs),
    /// Majority labels from an annotation store.
    Aggregate(AggregateArgs),
    /// Fleiss' kappa of a rating matrix CSV.
    Kappa(KappaArgs),
    /// Build a labelled dataset for one relation.
    Dataset(DatasetArgs),
    /// Train a model on the training side of a seeded split.
    Train(TrainArgs),
    /// Cross-validate the default grid for a model on the training split.
    Cv(CvArgs),
    /// Evaluate a checkpoint on the test side of a seeded split.
    Eval(EvalArgs),
    /// Run the full pipeline on bundled fixtures with simulated annotators.
    Demo(DemoArgs),
}

fn parse_relation(s: &str) -> Result<Relation, String> {
    s.parse()
        .map_err(|e: senscommon::annotation::AnnotationError| e.to_string())
}

fn parse_mode(s: &str) -> Result<FeatureMode, String> {
    s.parse().map_err(|e: senscommon::models::ModelError| e.to_string())
}

fn parse_kind(s: &str) -> Result<PhraseKind, String> {
    s.parse().map_err(|e: senscommon::mining::MiningError| e.to_string())
}

#[derive(Args)]
struct MineArgs {
    /// sound or smell
    #[arg(long, default_value = "sound", value_parser = parse_kind)]
    pattern: PhraseKind,
    /// Text file or directory of files.
    #[arg(long)]
    corpus: PathBuf,
    /// JSON-lines output.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = senscommon::mining::DEFAULT_CAPTURE_MAX_TOKENS)]
    max_capture: usize,
}

#[derive(Args)]
struct PairsArgs {
    /// Sound phrases from `mine`.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Noun lexicon (`word<TAB>noun|other`); defaults to the bundled one.
    #[arg(long)]
    lexicon: Option<PathBuf>,
}

#[derive(Args)]
struct PathsArgs {
    /// CoNLL-U parses.
    #[arg(long)]
    parses: PathBuf,
    /// Sound phrases from `mine` used to detect sound mentions.
    #[arg(long)]
    phrases: Option<PathBuf>,
    /// Scene lexicon, one scene per line; defaults to the bundled one.
    #[arg(long)]
    scenes: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MIN_FREQ)]
    min_freq: usize,
    /// Ranked path signatures (JSON lines).
    #[arg(long)]
    out: PathBuf,
    /// Plausible scene/sound pairs with context (JSON lines).
    #[arg(long)]
    pairs_out: Option<PathBuf>,
    /// Signatures to show in the summary.
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Args)]
struct QuestionsArgs {
    /// Sound-source pairs from `pairs`.
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Scene pairs from `paths --pairs-out`.
    #[arg(long)]
    scene_pairs: Option<PathBuf>,
    /// Smell phrases from `mine --pattern smell`.
    #[arg(long)]
    smell: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    /// Store directory.
    #[arg(long, env = DATA_DIR_ENV)]
    data_dir: PathBuf,
    /// Questions to seed a store that has none yet.
    #[arg(long)]
    questions: Option<PathBuf>,
    /// Built annotation UI to serve at `/`.
    #[arg(long)]
    static_dir: Option<PathBuf>,
    #[arg(long, default_value_t = senscommon::annotation::DEFAULT_RATERS)]
    raters: usize,
    #[arg(long, default_value_t = senscommon_service::DEFAULT_SERVE_TIMEOUT_MS)]
    timeout_ms: u64,
}

#[derive(Args)]
struct AggregateArgs {
    #[arg(long, env = DATA_DIR_ENV)]
    data_dir: PathBuf,
    /// Labels CSV (`relation,arg1,arg2,label`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KappaArgs {
    /// Rating matrix CSV: an export from the service or bare counts.
    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Args)]
struct DatasetArgs {
    #[arg(long, value_parser = parse_relation)]
    relation: Relation,
    /// Labels CSV from `aggregate`.
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long)]
    scene_pairs: Option<PathBuf>,
    #[arg(long)]
    smell: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct SplitArgs {
    /// Dataset JSON from `dataset`.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 100)]
    test_size: usize,
    /// Word vectors in word2vec text format; defaults to the bundled ones.
    #[arg(long)]
    embeddings: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    split: SplitArgs,
    #[arg(long, value_parser = parse_mode)]
    model: FeatureMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    hops: Option<usize>,
    #[arg(long)]
    embed_dim: Option<usize>,
    #[arg(long)]
    capacity: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Checkpoint path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CvArgs {
    #[command(flatten)]
    split: SplitArgs,
    #[arg(long, value_parser = parse_mode)]
    model: FeatureMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    folds: usize,
    /// Overrides the grid's epoch count.
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    split: SplitArgs,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Split seed; defaults to the checkpoint's training seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for report.md and report.csv.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value = "demo-out")]
    out: PathBuf,
}

struct Output {
    json: Value,
    text: String,
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    jsonl::read_records(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    jsonl::write_records(BufWriter::new(file), records).with_context(|| format!("writing {}", path.display()))
}

fn read_optional<T: DeserializeOwned>(path: &Option<PathBuf>) -> Result<Vec<T>> {
    path.as_deref().map_or(Ok(Vec::new()), read_jsonl)
}

fn embeddings(path: &Option<PathBuf>) -> Result<EmbeddingTable> {
    match path {
        Some(p) => EmbeddingTable::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(EmbeddingTable::bundled()),
    }
}

fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("reading dataset {}", path.display()))
}

fn mine(a: MineArgs) -> Result<Output> {
    let spec = PatternSpec::new(a.pattern, a.pattern.as_str(), "of", a.max_capture)?;
    let corpus = Corpus::open(&a.corpus)?;
    let phrases = extract_pattern_phrases(corpus.documents(), &spec)?;
    write_jsonl(&a.out, &phrases)?;
    let occurrences: usize = phrases.iter().map(|p| p.frequency).sum();
    let top: Vec<Value> = phrases.iter().take(10).map(|p| json!([p.text, p.frequency])).collect();
    let mut text = format!(
        "{} distinct {} phrases, {} occurrences\n",
        phrases.len(),
        a.pattern.as_str(),
        occurrences
    );
    for p in phrases.iter().take(10) {
        text.push_str(&format!("{:>6}  {}\n", p.frequency, p.text));
    }
    Ok(Output {
        json: json!({ "pattern": a.pattern, "phrases": phrases.len(), "occurrences": occurrences, "top": top }),
        text,
    })
}

fn pairs(a: PairsArgs) -> Result<Output> {
    let phrases: Vec<CandidatePhrase> = read_jsonl(&a.input)?;
    let filter = match &a.lexicon {
        Some(p) => BigramFilter::new(NounLexicon::parse(&fs::read_to_string(p)?)?),
        None => BigramFilter::default(),
    };
    let outcome = filter.filter(&phrases);
    write_jsonl(&a.out, &outcome.pairs)?;
    let share = bigram_fraction(&phrases, outcome.pairs.len());
    Ok(Output {
        json: json!({ "pairs": outcome.pairs.len(), "dropped": outcome.dropped, "bigram_fraction": share }),
        text: format!(
            "{} sound-source pairs from {} phrases ({} dropped, share {share:.3})\n",
            outcome.pairs.len(),
            phrases.len(),
            outcome.dropped
        ),
    })
}

fn paths(a: PathsArgs) -> Result<Output> {
    let file = File::open(&a.parses).with_context(|| format!("opening {}", a.parses.display()))?;
    let source = a
        .parses
        .file_stem()
        .map_or("parses".into(), |s| s.to_string_lossy().into_owned());
    let parsed = parse_conllu(BufReader::new(file), &source)?;
    let scenes = match &a.scenes {
        Some(p) => SceneLexicon::parse(&fs::read_to_string(p)?),
        None => SceneLexicon::bundled(),
    };
    let phrases: Vec<CandidatePhrase> = read_optional(&a.phrases)?;
    let detector = SoundDetector::from_phrases(phrases.iter().map(|p| p.text.as_str()));
    let comentions = build_scene_pairs(&parsed.graphs, &scenes, &detector);
    let ranking = rank_paths_by_frequency(&comentions, a.min_freq);
    write_jsonl(&a.out, &ranking.paths)?;
    let candidates = scene_candidates(&comentions, &ranking.plausible);
    if let Some(p) = &a.pairs_out {
        write_jsonl(p, &candidates)?;
    }
    let top: Vec<Value> = ranking
        .top(a.top)
        .iter()
        .map(|r| json!({ "signature": r.signature, "frequency": r.frequency, "occurrences": r.occurrences }))
        .collect();
    let mut text = format!(
        "{} sentences ({} skipped), {} co-mentions, {} signatures, {} plausible pairs\n",
        parsed.graphs.len(),
        parsed.skipped,
        comentions.len(),
        ranking.len(),
        ranking.plausible.len()
    );
    for r in ranking.top(a.top) {
        text.push_str(&format!("{:>4}  {}\n", r.frequency, r.signature));
    }
    Ok(Output {
        json: json!({
            "sentences": parsed.graphs.len(),
            "skipped": parsed.skipped,
            "co_mentions": comentions.len(),
            "signatures": ranking.len(),
            "plausible": ranking.plausible.len(),
            "top": top,
        }),
        text,
    })
}

fn questions(a: QuestionsArgs) -> Result<Output> {
    if a.pairs.is_none() && a.scene_pairs.is_none() && a.smell.is_none() {
        bail!("give at least one of --pairs, --scene-pairs, --smell");
    }
    let pairs: Vec<SoundSourcePair> = read_optional(&a.pairs)?;
    let scenes: Vec<SceneCandidate> = read_optional(&a.scene_pairs)?;
    let smells: Vec<CandidatePhrase> = read_optional(&a.smell)?;
    let qs = build_questions(&pairs, &scenes, &smells)?;
    write_jsonl(&a.out, &qs)?;
    let mut by_relation: BTreeMap<String, usize> = BTreeMap::new();
    for q in &qs {
        *by_relation.entry(q.relation.to_string()).or_default() += 1;
    }
    let text = by_relation
        .iter()
        .map(|(r, n)| format!("{r}: {n}\n"))
        .collect::<String>();
    Ok(Output {
        json: json!({ "questions": qs.len(), "by_relation": by_relation }),
        text: format!("{} questions\n{text}", qs.len()),
    })
}

fn serve(a: ServeArgs) -> Result<Output> {
    let options = StoreOptions {
        raters: a.raters,
        serve_timeout_ms: a.timeout_ms,
        ..StoreOptions::default()
    };
    let store = if a.data_dir.join(QUESTIONS_FILE).exists() {
        if a.questions.is_some() {
            bail!("{} already holds a store; drop --questions", a.data_dir.display());
        }
        AnnotationStore::open(&a.data_dir, options)?
    } else {
        let Some(q) = &a.questions else {
            bail!("{} has no store; seed it with --questions", a.data_dir.display());
        };
        let qs: Vec<AnnotationQuestion> = read_jsonl(q)?;
        AnnotationStore::create(&a.data_dir, &qs, options)?
    };
    let n = store.questions().len();
    let state = AppState::new(store, senscommon_service::system_clock());
    let addr = SocketAddr::new(a.host, a.port);
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?
        .block_on(senscommon_service::serve(state, addr, a.static_dir))?;
    Ok(Output {
        json: json!({ "questions": n, "stopped": true }),
        text: "stopped\n".into(),
    })
}

fn aggregate(a: AggregateArgs) -> Result<Output> {
    let store = AnnotationStore::open(&a.data_dir, StoreOptions::default())?;
    let labels = aggregate_all(store.questions(), &store.responses());
    if let Some(out) = &a.out {
        write_labels_csv(File::create(out)?, &labels)?;
    }
    let mut per_relation = BTreeMap::new();
    let mut text = format!("{} labelled questions\n", labels.len());
    for relation in Relation::ALL {
        let rows: Vec<_> = labels
            .iter()
            .filter(|l| l.relation == relation)
            .map(|l| &l.label)
            .collect();
        if rows.is_empty() {
            continue;
        }
        let props = label_proportions(rows.iter().copied());
        text.push_str(&format!("{relation} ({}):", rows.len()));
        for (k, v) in &props {
            text.push_str(&format!(" {k}={v:.3}"));
        }
        text.push('\n');
        per_relation.insert(
            relation.to_string(),
            json!({ "labels": rows.len(), "proportions": props }),
        );
    }
    Ok(Output {
        json: json!({ "labels": labels.len(), "relations": per_relation }),
        text,
    })
}

fn kappa(a: KappaArgs) -> Result<Output> {
    let file = File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let groups = read_rating_matrix_csv(file)?;
    let mut rows = Vec::new();
    let mut text = String::new();
    for (relation, matrix) in &groups {
        let k = fleiss_kappa(matrix)?;
        match relation {
            Some(r) => text.push_str(&format!("{r}: {k:?} ({} items)\n", matrix.len())),
            None => text.push_str(&format!("{k:?}\n")),
        }
        rows.push(json!({ "relation": relation, "items": matrix.len(), "kappa": k }));
    }
    let json = match rows.as_slice() {
        [single] => json!({ "kappa": single["kappa"], "groups": rows }),
        _ => json!({ "groups": rows }),
    };
    Ok(Output { json, text })
}

fn dataset(a: DatasetArgs) -> Result<Output> {
    let labels = read_labels_csv(File::open(&a.labels).with_context(|| format!("opening {}", a.labels.display()))?)?;
    let pairs: Vec<SoundSourcePair> = read_optional(&a.pairs)?;
    let scenes: Vec<SceneCandidate> = read_optional(&a.scene_pairs)?;
    let smells: Vec<CandidatePhrase> = read_optional(&a.smell)?;
    let contexts = build_contexts(&pairs, &scenes, &smells);
    let ds = senscommon::experiments::build_dataset(a.relation, &labels, &contexts);
    fs::write(&a.out, serde_json::to_string_pretty(&ds)? + "\n")?;
    let counts = ds.class_counts();
    Ok(Output {
        json: json!({
            "relation": a.relation,
            "examples": ds.len(),
            "class_counts": counts,
            "excluded": ds.excluded,
            "duplicates": ds.duplicates,
        }),
        text: format!(
            "{}: {} examples, class counts {:?}, {} excluded, {} duplicates\n",
            a.relation,
            ds.len(),
            counts,
            ds.excluded,
            ds.duplicates
        ),
    })
}

fn train(a: TrainArgs) -> Result<Output> {
    let ds = load_dataset(&a.split.dataset)?;
    let table = embeddings(&a.split.embeddings)?;
    let (train_set, _) = split_dataset(&ds, a.split.test_size, a.seed)?;
    let mut config = ModelConfig::new(a.model);
    config.seed = a.seed;
    config.n_classes = ds.relation.n_classes();
    if let Some(v) = a.hidden {
        config.hidden_size = v;
    }
    if let Some(v) = a.hops {
        config.hops = v;
    }
    if let Some(v) = a.embed_dim {
        config.embed_dim = v;
    }
    if let Some(v) = a.capacity {
        config.memory_capacity = v;
    }
    if let Some(v) = a.epochs {
        config.epochs = v;
    }
    if let Some(v) = a.lr {
        config.learning_rate = v;
    }
    let fitted = train_on(ds.relation, train_set.examples(), &config, &table)?;
    save_checkpoint(&a.out, &fitted.model)?;
    let final_loss = fitted.model.history.last().copied();
    Ok(Output {
        json: json!({
            "relation": ds.relation,
            "model": config.label(),
            "train_size": train_set.len(),
            "used": fitted.used,
            "dropped": fitted.dropped,
            "final_loss": final_loss,
        }),
        text: format!(
            "trained {} on {} examples ({} dropped), final loss {}\n",
            config.label(),
            fitted.used,
            fitted.dropped,
            final_loss.map_or("n/a".into(), |l| format!("{l:.4}"))
        ),
    })
}

fn cv(a: CvArgs) -> Result<Output> {
    let ds = load_dataset(&a.split.dataset)?;
    let table = embeddings(&a.split.embeddings)?;
    let (train_set, _) = split_dataset(&ds, a.split.test_size, a.seed)?;
    let mut base = ModelConfig::new(a.model);
    base.seed = a.seed;
    base.n_classes = ds.relation.n_classes();
    let mut grid = default_grid(&base);
    if let Some(e) = a.epochs {
        grid.iter_mut().for_each(|c| c.epochs = e);
    }
    let outcome = cross_validate(&train_set, &grid, a.folds, &table)?;
    let mut text = String::new();
    for (i, (c, s)) in grid.iter().zip(&outcome.scores).enumerate() {
        let mark = if i == outcome.best { "*" } else { " " };
        text.push_str(&format!("{mark} {s:.4}  {}\n", c.label()));
    }
    Ok(Output {
        json: serde_json::to_value(&outcome)?,
        text,
    })
}

fn eval(a: EvalArgs) -> Result<Output> {
    let model = load_checkpoint(&a.checkpoint)?;
    let ds = load_dataset(&a.split.dataset)?;
    let table = embeddings(&a.split.embeddings)?;
    let seed = a.seed.unwrap_or(model.config.seed);
    let (train_set, test_set) = split_dataset(&ds, a.split.test_size, seed)?;
    let mut report = evaluate(&model, &test_set, &table, train_set.len())?;
    report.model = model.config.label();
    report.seed = seed;
    let reports = [report];
    if let Some(dir) = &a.report {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.md"), render_markdown(ds.relation, &reports))?;
        fs::write(dir.join("report.csv"), render_csv(&reports))?;
    }
    let [report] = reports;
    let text = format!(
        "{}: accuracy {:.4} ({}/{}), {} dropped\n",
        report.model, report.accuracy, report.correct, report.total, report.dropped
    );
    Ok(Output {
        json: serde_json::to_value(&report)?,
        text,
    })
}

fn run_demo(a: DemoArgs) -> Result<Output> {
    let summary = demo::run(a.seed, &a.out)?;
    if !summary.kappa_agrees() {
        bail!("live and offline kappa disagree: {:?}", summary.kappa);
    }
    let mut text = format!(
        "demo seed {}: {} questions, {} responses; reports in {}\n",
        summary.seed,
        summary.questions,
        summary.responses,
        a.out.display()
    );
    for k in &summary.kappa {
        text.push_str(&format!(
            "kappa {}: live {:?} offline {:?}\n",
            k.relation, k.live, k.offline
        ));
    }
    for r in &summary.evaluations {
        text.push_str(&format!("{} / {}: {:.4}\n", r.relation, r.model, r.accuracy));
    }
    Ok(Output {
        json: json!({ "seed": summary.seed, "questions": summary.questions, "responses": summary.responses,
                      "kappa": summary.kappa, "out": a.out }),
        text,
    })
}

fn run(cli: Cli) -> Result<Output> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Mine(a) => mine(a),
        Command::Pairs(a) => pairs(a),
        Command::Paths(a) => paths(a),
        Command::Questions(a) => questions(a),
        Command::Serve(a) => serve(a),
        Command::Aggregate(a) => aggregate(a),
        Command::Kappa(a) => kappa(a),
        Command::Dataset(a) => dataset(a),
        Command::Train(a) => train(a),
        Command::Cv(a) => cv(a),
        Command::Eval(a) => eval(a),
        Command::Demo(a) => run_demo(a),
    }
}

fn fail(e: anyhow::Error) -> ExitCode {
    let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
    eprintln!("{}", json!({ "error": chain.join(": ") }));
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let mut args: Vec<String> = std::env::args().collect();
    if let Some(path) = config::config_path(&args) {
        match config::load(&path) {
            Ok(table) => args = config::merge(args, &table),
            Err(e) => return fail(e),
        }
    }
    let cli = Cli::parse_from(args);
    let json_mode = cli.json;
    match run(cli) {
        Ok(out) if json_mode => {
            println!("{}", out.json);
            ExitCode::SUCCESS
        }
        Ok(out) => {
            print!("{}", out.text);
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}
