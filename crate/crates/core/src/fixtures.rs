//! Small bundled data sets used by the demo pipeline and the tests.

/// Plain-text corpus, one document per line.
pub const CORPUS: &str = include_str!("../data/fixtures/corpus.txt");

/// Dependency parses of scene/sound sentences in CoNLL-U.
pub const PARSES: &str = include_str!("../data/fixtures/parses.conllu");

/// 8-dimensional word vectors in the word2vec text format.
pub const EMBEDDINGS: &str = include_str!("../data/fixtures/embeddings.txt");

/// Ground truth consulted by the simulated annotators:
/// `relation<TAB>arg1<TAB>arg2<TAB>truth`.
pub const GOLD: &str = include_str!("../data/fixtures/gold.tsv");

/// Default acoustic scene lexicon.
pub const SCENES: &str = include_str!("../data/scenes.txt");

/// Default noun plausibility lexicon (`word<TAB>noun|other`).
pub const LEXICON: &str = include_str!("../data/lexicon.tsv");

/// Parses a gold file into `(relation, arg1, arg2, truth)` rows.
pub fn gold_rows(text: &str) -> Vec<(String, String, String, String)> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .filter_map(|l| {
            let mut cols = l.split('\t');
            Some((
                cols.next()?.to_string(),
                cols.next()?.to_string(),
                cols.next()?.to_string(),
                cols.next()?.to_string(),
            ))
        })
        .collect()
}

/// A generated corpus of `sentences` sentences, ten per document line, with
/// exactly `planted` occurrences of "sound of rain" followed by punctuation.
/// Distractors include "sounds of rain", "sound of rainfall" and "smell of
/// rain", in varying case.
pub fn planted_rain_corpus(sentences: usize, planted: usize, seed: u64) -> Vec<String> {
    use rand::seq::{IndexedRandom, SliceRandom};
    use rand::SeedableRng;

    assert!(planted <= sentences, "cannot plant more occurrences than sentences");
    const PLANTED: &[&str] = &[
        "We fell asleep to the sound of rain.",
        "The Sound of Rain, steady and soft, filled the room.",
        "Nothing beats the SOUND OF RAIN!",
        "She recorded the sound of rain; it calmed her.",
        "Is that the sound of rain?",
    ];
    const FILLER: &[&str] = &[
        "The sounds of rain kept us awake.",
        "We loved the sound of rainfall on the roof.",
        "The smell of rain drifted in.",
        "A sound of thunder rolled over the hills.",
        "The sound of birds chirping woke me.",
        "He heard the sound of traffic outside.",
        "Rain fell all night without a sound.",
        "The market was busy this morning.",
        "Nobody mentioned the rain of sound.",
    ];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut slots: Vec<bool> = (0..sentences).map(|i| i < planted).collect();
    slots.shuffle(&mut rng);
    let lines: Vec<String> = slots
        .iter()
        .map(|&p| {
            let pool = if p { PLANTED } else { FILLER };
            pool.choose(&mut rng).unwrap().to_string()
        })
        .collect();
    lines.chunks(10).map(|c| c.join(" ")).collect()
}
