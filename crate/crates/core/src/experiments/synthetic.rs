//! Generated datasets with known ground truth.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Instance, LabeledDataset};
use crate::annotation::Relation;
use crate::embeddings::EmbeddingTable;

pub struct SyntheticData {
    pub table: EmbeddingTable,
    pub dataset: LabeledDataset,
}

const DIM: usize = 16;
const SOURCES: usize = 50;
const LOUD_SOURCES: usize = 30;
const SOUNDS: usize = 40;
const REAL_SOUNDS: usize = 25;
const FILLER: &[&str] = &[
    "we", "heard", "the", "a", "near", "house", "at", "night", "outside", "again", "was", "there", "some", "old",
    "while", "walking",
];

/// A cluster centre on `dims` plus uniform noise everywhere.
fn clustered<R: Rng>(rng: &mut R, dims: std::ops::Range<usize>, sign: f32, marker: std::ops::Range<usize>) -> Vec<f32> {
    let mut v: Vec<f32> = (0..DIM).map(|_| rng.random_range(-0.3..0.3)).collect();
    for d in dims {
        v[d] += 0.8 * sign;
    }
    for d in marker {
        v[d] += 0.5;
    }
    v
}

/// Sound-source pairs whose label is "the source makes noise and the sound
/// is a real sound". Sources cluster by loudness in dimensions 0-3 and
/// sounds by realness in 8-11; dimensions 4-7 and 12-15 mark the word type.
/// Each pair comes with a random surface order and an uninformative
/// sentence containing both words.
pub fn synthetic_sound_source(n: usize, seed: u64) -> SyntheticData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for i in 0..SOURCES {
        let sign = if i < LOUD_SOURCES { 1.0 } else { -1.0 };
        entries.push((format!("source{i:02}"), clustered(&mut rng, 0..4, sign, 4..8)));
    }
    for j in 0..SOUNDS {
        let sign = if j < REAL_SOUNDS { 1.0 } else { -1.0 };
        entries.push((format!("sound{j:02}ing"), clustered(&mut rng, 8..12, sign, 12..16)));
    }
    for w in FILLER {
        let v = (0..DIM).map(|_| rng.random_range(-0.5..0.5)).collect();
        entries.push((w.to_string(), v));
    }
    let table = EmbeddingTable::from_vectors(DIM, entries).expect("vectors have DIM entries");

    let mut cells: Vec<(usize, usize)> = (0..SOURCES).flat_map(|i| (0..SOUNDS).map(move |j| (i, j))).collect();
    cells.shuffle(&mut rng);
    let examples = cells
        .into_iter()
        .take(n)
        .map(|(i, j)| {
            let source = format!("source{i:02}");
            let sound = format!("sound{j:02}ing");
            let phrase = if rng.random_bool(0.5) {
                vec![source.clone(), sound.clone()]
            } else {
                vec![sound.clone(), source.clone()]
            };
            let mut sentence: Vec<String> = (0..rng.random_range(2..6))
                .map(|_| FILLER.choose(&mut rng).unwrap().to_string())
                .collect();
            let at = rng.random_range(0..=sentence.len());
            sentence.splice(at..at, phrase.iter().cloned());
            Instance {
                key: format!("{sound}\t{source}"),
                first: vec![source],
                second: vec![sound],
                phrase,
                path: Vec::new(),
                sentence,
                label: usize::from(i < LOUD_SOURCES && j < REAL_SOUNDS),
            }
        })
        .collect();
    SyntheticData {
        table,
        dataset: LabeledDataset {
            relation: Relation::SoundSource,
            examples,
            excluded: 0,
            duplicates: 0,
        },
    }
}

/// Pairs whose label is decided only by whether the sentence contains the
/// word "alarm"; the argument words carry no signal.
pub fn keyword_dataset(n: usize, seed: u64) -> SyntheticData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let args: Vec<String> = (0..20).map(|i| format!("word{i:02}")).collect();
    let mut entries: Vec<(String, Vec<f32>)> = args
        .iter()
        .map(|w| (w.clone(), (0..DIM).map(|_| rng.random_range(-1.0..1.0)).collect()))
        .collect();
    for w in FILLER.iter().chain(&["alarm"]) {
        entries.push((w.to_string(), (0..DIM).map(|_| rng.random_range(-1.0..1.0)).collect()));
    }
    let table = EmbeddingTable::from_vectors(DIM, entries).expect("vectors have DIM entries");
    let examples = (0..n)
        .map(|k| {
            let a = args.choose(&mut rng).unwrap().clone();
            let b = args.choose(&mut rng).unwrap().clone();
            let label = usize::from(rng.random_bool(0.5));
            let mut sentence: Vec<String> = (0..5).map(|_| FILLER.choose(&mut rng).unwrap().to_string()).collect();
            if label == 1 {
                let at = rng.random_range(0..sentence.len());
                sentence[at] = "alarm".into();
            }
            Instance {
                key: format!("{k}\t{a}\t{b}"),
                first: vec![a.clone()],
                second: vec![b.clone()],
                phrase: vec![a, b],
                path: Vec::new(),
                sentence,
                label,
            }
        })
        .collect();
    SyntheticData {
        table,
        dataset: LabeledDataset {
            relation: Relation::SoundSource,
            examples,
            excluded: 0,
            duplicates: 0,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn sound_source_generator_is_seeded_and_distinct() {
        let a = synthetic_sound_source(634, 1);
        let b = synthetic_sound_source(634, 1);
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.dataset.len(), 634);
        let keys: HashSet<_> = a.dataset.examples.iter().map(|e| &e.key).collect();
        assert_eq!(keys.len(), 634);
        let pos = a.dataset.class_counts()[1];
        assert!(pos > 150 && pos < 330, "{pos} positives");
        for e in &a.dataset.examples {
            assert!(a.table.lookup_all(&e.sentence).is_some());
        }
    }
}
