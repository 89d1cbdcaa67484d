//! Path signatures ranked by how many distinct scene/sound pairs they connect.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::comention::SoundScenePair;

/// Signatures connecting fewer distinct pairs than this are treated as noise.
pub const DEFAULT_MIN_FREQ: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedPath {
    pub signature: String,
    /// Distinct (scene, sound) pairs connected by this signature.
    pub frequency: usize,
    /// Co-mentions (not distinct) carrying this signature.
    pub occurrences: usize,
    pub pairs: Vec<(String, String)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathRanking {
    /// Frequency descending, then signature text ascending.
    pub paths: Vec<RankedPath>,
    pub min_freq: usize,
    /// Distinct pairs connected by a signature with frequency `>= min_freq`,
    /// sorted.
    pub plausible: Vec<(String, String)>,
}

impl PathRanking {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn top(&self, k: usize) -> &[RankedPath] {
        &self.paths[..k.min(self.paths.len())]
    }

    pub fn frequency(&self, signature: &str) -> usize {
        self.paths
            .iter()
            .find(|p| p.signature == signature)
            .map_or(0, |p| p.frequency)
    }
}

pub fn rank_paths_by_frequency(pairs: &[SoundScenePair], min_freq: usize) -> PathRanking {
    let mut by_sig: BTreeMap<String, (BTreeSet<(String, String)>, usize)> = BTreeMap::new();
    for p in pairs {
        let entry = by_sig.entry(p.path.text()).or_default();
        entry.0.insert((p.scene.clone(), p.sound.clone()));
        entry.1 += 1;
    }
    let mut paths: Vec<RankedPath> = by_sig
        .into_iter()
        .map(|(signature, (set, occurrences))| RankedPath {
            signature,
            frequency: set.len(),
            occurrences,
            pairs: set.into_iter().collect(),
        })
        .collect();
    paths.sort_by(|a, b| {
        b.frequency
            .cmp(&a.frequency)
            .then_with(|| a.signature.cmp(&b.signature))
    });
    let plausible: BTreeSet<&(String, String)> = paths
        .iter()
        .filter(|p| p.frequency >= min_freq)
        .flat_map(|p| p.pairs.iter())
        .collect();
    let plausible = plausible.into_iter().cloned().collect();
    PathRanking {
        paths,
        min_freq,
        plausible,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depgraph::{Direction, PathSignature, PathStep, SentenceId, Span};
    use proptest::prelude::*;

    fn pair(scene: &str, sound: &str, rel: &str) -> SoundScenePair {
        SoundScenePair {
            scene: scene.into(),
            sound: sound.into(),
            sentence: SentenceId {
                doc: "d".into(),
                index: 0,
            },
            scene_span: Span::single(1),
            sound_span: Span::single(3),
            path: PathSignature {
                steps: vec![PathStep {
                    relation: rel.into(),
                    direction: Direction::Down,
                    node: "SOUND".into(),
                }],
                endpoint_roles: ("SCENE".into(), "SOUND".into()),
                tokens: vec![1, 3],
            },
            sentence_text: vec![],
            path_lemmas: vec![],
        }
    }

    #[test]
    fn counts_distinct_pairs_not_occurrences() {
        let pairs = vec![
            pair("beach", "waves", "nmod"),
            pair("beach", "waves", "nmod"),
            pair("beach", "waves", "nmod"),
            pair("park", "birds", "obl"),
            pair("street", "horns", "obl"),
        ];
        let r = rank_paths_by_frequency(&pairs, DEFAULT_MIN_FREQ);
        assert_eq!(r.paths[0].signature, "SCENE obl:down:SOUND");
        assert_eq!(r.paths[0].frequency, 2);
        assert_eq!(r.frequency("SCENE nmod:down:SOUND"), 1);
        assert_eq!(r.paths[1].occurrences, 3);
        assert!(rank_paths_by_frequency(&pairs[..1], 2).plausible.is_empty());
        assert_eq!(
            r.plausible,
            [
                ("park".to_string(), "birds".to_string()),
                ("street".into(), "horns".into())
            ]
        );
    }

    proptest! {
        #[test]
        fn ranking_is_order_invariant(
            items in prop::collection::vec((0..4usize, 0..4usize, 0..3usize), 0..40),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let rels = ["obl", "nmod", "conj"];
            let pairs: Vec<_> = items
                .iter()
                .map(|&(a, b, r)| pair(&format!("s{a}"), &format!("n{b}"), rels[r]))
                .collect();
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = rank_paths_by_frequency(&pairs, 2);
            let b = rank_paths_by_frequency(&shuffled, 2);
            prop_assert_eq!(&a, &b);
            for w in a.paths.windows(2) {
                prop_assert!(w[0].frequency >= w[1].frequency);
            }
        }
    }
}
