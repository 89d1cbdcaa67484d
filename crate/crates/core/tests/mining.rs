use std::collections::BTreeMap;

use proptest::prelude::*;
use senscommon::fixtures::{self, planted_rain_corpus};
use senscommon::mining::{
    bigram_fraction, extract_from_texts, filter_bigram_pairs, CandidatePhrase, Document, PatternSpec,
};

fn substring_count(lines: &[String], needle: &str) -> usize {
    lines
        .iter()
        .map(|l| {
            let l = l.to_lowercase();
            l.match_indices(needle)
                .filter(|&(i, _)| {
                    let before = l[..i].chars().next_back();
                    let after = l[i + needle.len()..].chars().next();
                    !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
                })
                .count()
        })
        .sum()
}

fn mine(lines: &[String], spec: &PatternSpec) -> Vec<CandidatePhrase> {
    let docs: Vec<(String, &str)> = lines
        .iter()
        .enumerate()
        .map(|(i, l)| (format!("d{i}"), l.as_str()))
        .collect();
    extract_from_texts(docs.iter().map(|(id, t)| (id.as_str(), *t)), spec)
}

#[test]
fn planted_rain_occurrences_are_recovered_exactly() {
    let lines = planted_rain_corpus(1000, 137, 5);
    assert_eq!(lines.len(), 100);
    assert_eq!(substring_count(&lines, "sound of rain"), 137);
    let phrases = mine(&lines, &PatternSpec::sound());
    let rain = phrases.iter().find(|p| p.text == "rain").unwrap();
    assert_eq!(rain.frequency, 137);
    assert_eq!(rain.provenance.len(), 137);
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let lines = planted_rain_corpus(3000, 400, 9);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| mine(&lines, &PatternSpec::sound()))
    };
    let one = serde_json::to_string(&run(1)).unwrap();
    assert_eq!(one, serde_json::to_string(&run(4)).unwrap());
}

#[test]
fn fixture_corpus_bigram_share_is_reported() {
    let phrases = extract_from_texts(
        fixtures::CORPUS
            .lines()
            .enumerate()
            .map(|(i, l)| (["a", "b"][i % 2], l)),
        &PatternSpec::sound(),
    );
    let pairs = filter_bigram_pairs(&phrases);
    let share = bigram_fraction(&phrases, pairs.pairs.len());
    println!(
        "{} phrases, {} pairs, bi-gram share {share:.3}",
        phrases.len(),
        pairs.pairs.len()
    );
    assert!(share > 0.0 && share < 1.0);
    assert!(pairs.pairs.iter().all(|p| p.sound.ends_with("ing")));
}

const VOCAB: &[&str] = &[
    "sound", "Sound", "of", "OF", "rain", "birds", "chirping", "the", "smell", ",", ".", "!",
];

/// Counts captures by walking the generated token list directly.
fn brute_force(docs: &[Vec<&str>]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for doc in docs {
        let mut sentences: Vec<Vec<&str>> = vec![Vec::new()];
        for &t in doc {
            sentences.last_mut().unwrap().push(t);
            if matches!(t, "." | "!") {
                sentences.push(Vec::new());
            }
        }
        for s in sentences {
            let words: Vec<Option<String>> = s
                .iter()
                .map(|t| t.chars().all(char::is_alphabetic).then(|| t.to_lowercase()))
                .collect();
            for i in 0..words.len().saturating_sub(1) {
                if words[i].as_deref() == Some("sound") && words[i + 1].as_deref() == Some("of") {
                    let mut cap = Vec::new();
                    for w in &words[i + 2..] {
                        match w {
                            Some(w) if w != "sound" && cap.len() < 5 => cap.push(w.clone()),
                            _ => break,
                        }
                    }
                    if !cap.is_empty() {
                        *counts.entry(cap.join(" ")).or_default() += 1;
                    }
                }
            }
        }
    }
    counts
}

proptest! {
    #[test]
    fn frequencies_equal_brute_force_counts(
        docs in prop::collection::vec(prop::collection::vec(prop::sample::select(VOCAB), 0..40), 1..8)
    ) {
        let texts: Vec<String> = docs.iter().map(|d| d.join(" ")).collect();
        let mined: BTreeMap<String, usize> = mine(&texts, &PatternSpec::sound())
            .into_iter()
            .map(|p| (p.text, p.frequency))
            .collect();
        prop_assert_eq!(mined, brute_force(&docs));
    }

    #[test]
    fn every_phrase_is_found_again_by_rescanning(
        docs in prop::collection::vec(prop::collection::vec(prop::sample::select(VOCAB), 0..40), 1..5)
    ) {
        let texts: Vec<String> = docs.iter().map(|d| d.join(" ").to_lowercase()).collect();
        for p in mine(&texts, &PatternSpec::sound()) {
            let needle = format!("sound of {}", p.text);
            let found: usize = texts.iter().map(|t| t.matches(&needle).count()).sum();
            prop_assert!(found >= p.frequency);
        }
    }
}

#[test]
fn document_ids_are_kept_in_provenance() {
    let doc = Document::text("x", "the sound of rain. the sound of rain!");
    let phrases = senscommon::mining::extract_pattern_phrases([Ok(doc)], &PatternSpec::sound()).unwrap();
    assert_eq!(
        phrases[0].provenance.iter().map(|p| p.sentence).collect::<Vec<_>>(),
        [0, 1]
    );
    assert!(phrases[0].provenance.iter().all(|p| p.doc == "x"));
}
