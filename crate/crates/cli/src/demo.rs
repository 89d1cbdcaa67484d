//! The whole loop on bundled fixtures with simulated annotators.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use anyhow::{bail, Context as _, Result};
use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use senscommon::annotation::{
    aggregate_all, fleiss_kappa, read_rating_matrix_csv, write_labels_csv, AnnotationQuestion, Choice, Relation,
};
use senscommon::depgraph::{
    build_scene_pairs, parse_conllu_str, rank_paths_by_frequency, SceneLexicon, SoundDetector, DEFAULT_MIN_FREQ,
};
use senscommon::embeddings::EmbeddingTable;
use senscommon::experiments::{
    build_dataset, render_csv, render_markdown, run_lineup, split_dataset, standard_lineup, EvalReport,
};
use senscommon::fixtures;
use senscommon::jsonl;
use senscommon::mining::{extract_from_texts, filter_bigram_pairs, PatternSpec};
use senscommon::models::{FeatureMode, ModelConfig};
use senscommon_service::{router, AnnotationStore, AppState, Clock, Stats, StoreOptions};
use serde::Serialize;
use serde_json::{json, Value};
use tower::ServiceExt;

use crate::pipeline::{build_contexts, build_questions, parse_gold, scene_candidates, truth_of, Gold};

pub const WORKERS: usize = 3;
pub const WORKER_ACCURACY: f64 = 0.8;
const BATCH: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaCheck {
    pub relation: Relation,
    pub items: usize,
    pub live: Option<f64>,
    pub offline: Option<f64>,
    pub equal: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoSummary {
    pub seed: u64,
    pub sound_phrases: usize,
    pub smell_phrases: usize,
    pub sound_source_pairs: usize,
    pub co_mentions: usize,
    pub path_signatures: usize,
    pub plausible_scene_pairs: usize,
    pub questions: usize,
    pub responses: usize,
    pub kappa: Vec<KappaCheck>,
    pub datasets: BTreeMap<String, Value>,
    pub evaluations: Vec<EvalReport>,
    pub skipped: BTreeMap<String, String>,
}

impl DemoSummary {
    pub fn kappa_agrees(&self) -> bool {
        self.kappa.iter().all(|k| k.equal)
    }
}

fn logical_clock() -> Clock {
    let t = Arc::new(AtomicU64::new(1));
    Arc::new(move || t.fetch_add(1, Ordering::SeqCst))
}

async fn request(app: &Router, method: &str, uri: &str, body: Option<Value>) -> Result<Vec<u8>> {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))?,
        None => req.body(Body::empty())?,
    };
    let resp = app.clone().oneshot(req).await?;
    let status = resp.status();
    let bytes = resp.into_body().collect().await?.to_bytes().to_vec();
    if status != StatusCode::OK {
        bail!("{method} {uri} returned {status}: {}", String::from_utf8_lossy(&bytes));
    }
    Ok(bytes)
}

/// Simulated rater: the gold answer with probability `WORKER_ACCURACY`,
/// otherwise another option uniformly. Questions without gold get a
/// uniform option.
fn simulated_choice(rng: &mut ChaCha8Rng, gold: &Gold, q: &AnnotationQuestion) -> Choice {
    let options = q.relation.options();
    match truth_of(gold, q) {
        Some(truth) if rng.random_bool(WORKER_ACCURACY) => truth,
        Some(truth) => {
            let others: Vec<Choice> = options.iter().copied().filter(|&c| c != truth).collect();
            *others.choose(rng).expect("every relation has several options")
        }
        None => *options.choose(rng).expect("options are non-empty"),
    }
}

/// Workers take turns fetching a batch and answering it until no one gets
/// new questions.
async fn annotate(app: &Router, gold: &Gold, seed: u64) -> Result<usize> {
    let mut rngs: Vec<ChaCha8Rng> = (0..WORKERS)
        .map(|w| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(100 + w as u64);
            r
        })
        .collect();
    let mut answered = 0;
    loop {
        let mut progress = false;
        for (w, rng) in rngs.iter_mut().enumerate() {
            let worker = format!("sim{w}");
            let body: Value = serde_json::from_slice(
                &request(
                    app,
                    "GET",
                    &format!("/api/questions/next?worker={worker}&n={BATCH}"),
                    None,
                )
                .await?,
            )?;
            let batch: Vec<AnnotationQuestion> = serde_json::from_value(body["questions"].clone())?;
            for q in &batch {
                let choice = simulated_choice(rng, gold, q);
                let answer = json!({ "question_id": q.id, "worker_id": worker, "choice": choice.as_str() });
                request(app, "POST", "/api/answers", Some(answer)).await?;
                answered += 1;
                progress = true;
            }
        }
        if !progress {
            return Ok(answered);
        }
    }
}

fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut buf = Vec::new();
    jsonl::write_records(&mut buf, records)?;
    fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

/// Base configuration for the demo lineup: small enough to train in
/// seconds on the fixture data.
pub fn demo_config(seed: u64) -> ModelConfig {
    let mut c = ModelConfig::new(FeatureMode::Concat);
    c.hidden_size = 16;
    c.embed_dim = 16;
    c.epochs = 40;
    c.seed = seed;
    c
}

pub fn run(seed: u64, out: &Path) -> Result<DemoSummary> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let docs: Vec<(String, &str)> = fixtures::CORPUS
        .lines()
        .enumerate()
        .map(|(i, l)| (format!("corpus:{i}"), l))
        .collect();
    let texts = || docs.iter().map(|(id, t)| (id.as_str(), *t));
    let sound = extract_from_texts(texts(), &PatternSpec::sound());
    let smell = extract_from_texts(texts(), &PatternSpec::smell());
    let pairs = filter_bigram_pairs(&sound).pairs;
    write_jsonl(&out.join("phrases.sound.jsonl"), &sound)?;
    write_jsonl(&out.join("phrases.smell.jsonl"), &smell)?;
    write_jsonl(&out.join("pairs.jsonl"), &pairs)?;

    let parsed = parse_conllu_str(fixtures::PARSES, "fixtures")?;
    let detector = SoundDetector::from_phrases(sound.iter().map(|p| p.text.as_str()));
    let comentions = build_scene_pairs(&parsed.graphs, &SceneLexicon::bundled(), &detector);
    let ranking = rank_paths_by_frequency(&comentions, DEFAULT_MIN_FREQ);
    let scenes = scene_candidates(&comentions, &ranking.plausible);
    write_jsonl(&out.join("paths.jsonl"), &ranking.paths)?;
    write_jsonl(&out.join("scene_pairs.jsonl"), &scenes)?;

    let questions = build_questions(&pairs, &scenes, &smell)?;
    write_jsonl(&out.join("questions.jsonl"), &questions)?;

    let store = AnnotationStore::create(&out.join("store"), &questions, StoreOptions::default())?;
    let state = AppState::new(store, logical_clock());
    let app = router(state.clone(), None);
    let gold = parse_gold(fixtures::GOLD)?;
    let runtime = tokio::runtime::Builder::new_current_thread().build()?;
    let (responses, stats_bytes, export) = runtime.block_on(async {
        let n = annotate(&app, &gold, seed).await?;
        let stats = request(&app, "GET", "/api/stats", None).await?;
        let export = request(&app, "GET", "/api/export", None).await?;
        anyhow::Ok((n, stats, export))
    })?;
    fs::write(out.join("stats.json"), &stats_bytes)?;
    fs::write(out.join("export.csv"), &export)?;

    let stats: Stats = serde_json::from_slice(&stats_bytes)?;
    let offline: BTreeMap<Relation, (usize, Option<f64>)> = read_rating_matrix_csv(export.as_slice())?
        .into_iter()
        .filter_map(|(r, m)| Some((r?, (m.len(), fleiss_kappa(&m).ok()))))
        .collect();
    let kappa: Vec<KappaCheck> = stats
        .relations
        .iter()
        .filter(|r| r.questions > 0)
        .map(|r| {
            let (items, off) = offline.get(&r.relation).copied().unwrap_or((0, None));
            KappaCheck {
                relation: r.relation,
                items,
                live: r.kappa,
                offline: off,
                equal: r.kappa == off && items == r.fully_answered,
            }
        })
        .collect();

    let (store_questions, store_responses) = state.with_store(|s| (s.questions().to_vec(), s.responses()))?;
    let labels = aggregate_all(&store_questions, &store_responses);
    let mut buf = Vec::new();
    write_labels_csv(&mut buf, &labels)?;
    fs::write(out.join("labels.csv"), buf)?;

    let contexts = build_contexts(&pairs, &scenes, &smell);
    let table = EmbeddingTable::bundled();
    let mut datasets = BTreeMap::new();
    let mut evaluations = Vec::new();
    let mut skipped = BTreeMap::new();
    let mut markdown = String::new();
    for relation in [Relation::SoundSource, Relation::SoundScene, Relation::SmellSentiment] {
        let ds = build_dataset(relation, &labels, &contexts);
        datasets.insert(
            relation.to_string(),
            json!({ "examples": ds.len(), "class_counts": ds.class_counts(), "excluded": ds.excluded }),
        );
        let test_size = (ds.len() / 5).max(1);
        let result = split_dataset(&ds, test_size, seed)
            .map_err(anyhow::Error::from)
            .and_then(|(train, test)| {
                let mut base = demo_config(seed);
                base.n_classes = relation.n_classes();
                Ok(run_lineup(&train, &test, &standard_lineup(relation, &base), &table)?)
            });
        match result {
            Ok(reports) => {
                markdown.push_str(&render_markdown(relation, &reports));
                markdown.push('\n');
                evaluations.extend(reports);
            }
            Err(e) => {
                skipped.insert(relation.to_string(), e.to_string());
            }
        }
    }

    let summary = DemoSummary {
        seed,
        sound_phrases: sound.len(),
        smell_phrases: smell.len(),
        sound_source_pairs: pairs.len(),
        co_mentions: comentions.len(),
        path_signatures: ranking.len(),
        plausible_scene_pairs: ranking.plausible.len(),
        questions: questions.len(),
        responses,
        kappa,
        datasets,
        evaluations,
        skipped,
    };
    fs::write(out.join("report.md"), render_report(&summary, &markdown))?;
    fs::write(out.join("report.csv"), render_csv(&summary.evaluations))?;
    fs::write(out.join("report.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(summary)
}

fn fmt_kappa(k: Option<f64>) -> String {
    k.map_or("n/a".to_string(), |k| format!("{k:.4}"))
}

fn render_report(s: &DemoSummary, tables: &str) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(out, "# Demo run (seed {})\n", s.seed);
    let _ = writeln!(out, "| Stage | Count |\n|---|---|");
    for (k, v) in [
        ("sound phrases", s.sound_phrases),
        ("smell phrases", s.smell_phrases),
        ("sound-source pairs", s.sound_source_pairs),
        ("scene co-mentions", s.co_mentions),
        ("path signatures", s.path_signatures),
        ("plausible scene pairs", s.plausible_scene_pairs),
        ("questions", s.questions),
        ("responses", s.responses),
    ] {
        let _ = writeln!(out, "| {k} | {v} |");
    }
    let _ = writeln!(
        out,
        "\n## Agreement\n\n| Relation | Items | Live kappa | Offline kappa | Equal |\n|---|---|---|---|---|"
    );
    for k in &s.kappa {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} |",
            k.relation,
            k.items,
            fmt_kappa(k.live),
            fmt_kappa(k.offline),
            if k.equal { "yes" } else { "no" }
        );
    }
    out.push('\n');
    out.push_str(tables);
    for (relation, reason) in &s.skipped {
        let _ = writeln!(out, "{relation}: skipped ({reason})");
    }
    out
}
