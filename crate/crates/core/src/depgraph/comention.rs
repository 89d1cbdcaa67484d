//! Scene and sound mentions within one parsed sentence.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::path::shortest_path;
use super::{DepGraph, PathSignature, SentenceId, Span};
use crate::fixtures;
use crate::mining::BigramFilter;

/// Lowercase scene lemmas.
#[derive(Debug, Clone, Default)]
pub struct SceneLexicon {
    scenes: HashSet<String>,
}

impl SceneLexicon {
    /// One scene per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        let scenes = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        SceneLexicon { scenes }
    }

    pub fn bundled() -> Self {
        Self::parse(fixtures::SCENES)
    }

    pub fn from_words<I: IntoIterator<Item = S>, S: AsRef<str>>(words: I) -> Self {
        SceneLexicon {
            scenes: words.into_iter().map(|w| w.as_ref().to_lowercase()).collect(),
        }
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.scenes.contains(lemma)
    }

    pub fn len(&self) -> usize {
        self.scenes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenes.is_empty()
    }
}

/// Detects sound mentions: known sound phrases first (leftmost-longest),
/// then gerund bi-grams whose V-ing token modifies the adjacent noun.
#[derive(Debug, Clone, Default)]
pub struct SoundDetector {
    by_first: HashMap<String, Vec<Vec<String>>>,
    bigrams: BigramFilter,
}

impl SoundDetector {
    pub fn new<I, S>(phrases: I, bigrams: BigramFilter) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut by_first: HashMap<String, Vec<Vec<String>>> = HashMap::new();
        for p in phrases {
            let toks: Vec<String> = p.as_ref().split_whitespace().map(str::to_lowercase).collect();
            if let Some(first) = toks.first() {
                by_first.entry(first.clone()).or_default().push(toks);
            }
        }
        for list in by_first.values_mut() {
            list.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
            list.dedup();
        }
        SoundDetector { by_first, bigrams }
    }

    pub fn from_phrases<I, S>(phrases: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self::new(phrases, BigramFilter::default())
    }

    pub fn is_empty(&self) -> bool {
        self.by_first.is_empty()
    }

    /// Non-overlapping sound spans in sentence order.
    pub fn detect(&self, graph: &DepGraph) -> Vec<Span> {
        let forms = graph.sentence_forms();
        let n = forms.len();
        let mut covered = vec![false; n + 2];
        let mut spans = Vec::new();

        let mut i = 1;
        while i <= n {
            let hit = self.by_first.get(&forms[i - 1]).and_then(|cands| {
                cands
                    .iter()
                    .find(|c| i + c.len() - 1 <= n && c.iter().zip(&forms[i - 1..]).all(|(a, b)| a == b))
            });
            match hit {
                Some(c) => {
                    let span = Span::new(i, i + c.len());
                    for k in span.indices() {
                        covered[k] = true;
                    }
                    spans.push(span);
                    i += c.len();
                }
                None => i += 1,
            }
        }

        for i in 1..n {
            let j = i + 1;
            if covered[i] || covered[j] {
                continue;
            }
            let (ti, tj) = (graph.token(i), graph.token(j));
            let words = [forms[i - 1].as_str(), forms[j - 1].as_str()];
            let tags = [ti.tag(), tj.tag()];
            let Some((sound, _)) = self.bigrams.classify(words, Some(tags)) else {
                continue;
            };
            let (gerund, noun) = if sound == 0 { (i, j) } else { (j, i) };
            if graph.head(gerund) == noun {
                covered[i] = true;
                covered[j] = true;
                spans.push(Span::new(i, j + 1));
            }
        }
        spans.sort();
        spans
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comention {
    pub scene: Span,
    pub sound: Span,
}

/// All (scene, sound) span pairs in the sentence, excluding overlapping ones.
/// Scenes match on exact lemma.
pub fn find_comentions(graph: &DepGraph, scenes: &SceneLexicon, sounds: &SoundDetector) -> Vec<Comention> {
    let scene_spans: Vec<Span> = graph
        .tokens()
        .iter()
        .filter(|t| scenes.contains(&t.lemma.to_lowercase()))
        .map(|t| Span::single(t.index))
        .collect();
    if scene_spans.is_empty() {
        return Vec::new();
    }
    let sound_spans = sounds.detect(graph);
    let mut out = Vec::new();
    for scene in &scene_spans {
        for sound in &sound_spans {
            if !scene.overlaps(sound) {
                out.push(Comention {
                    scene: *scene,
                    sound: *sound,
                });
            }
        }
    }
    out
}

/// A scene/sound co-mention with its path signature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoundScenePair {
    pub scene: String,
    /// Sound phrase (lowercased surface forms).
    pub sound: String,
    pub sentence: SentenceId,
    pub scene_span: Span,
    pub sound_span: Span,
    pub path: PathSignature,
    pub sentence_text: Vec<String>,
    /// Lemmas of the path's intermediate nodes.
    pub path_lemmas: Vec<String>,
}

impl SoundScenePair {
    /// The path written out with real endpoint words, e.g.
    /// `beach obl:up sit advcl:down hear obj:down waves crashing`.
    pub fn path_tokens(&self) -> Vec<String> {
        let mut out = vec![self.scene.clone()];
        let last = self.path.steps.len().saturating_sub(1);
        for (i, step) in self.path.steps.iter().enumerate() {
            out.push(format!("{}:{}", step.relation, step.direction.as_str()));
            if i == last {
                out.extend(self.sound.split(' ').map(str::to_string));
            } else {
                out.push(self.path_lemmas[i].clone());
            }
        }
        out
    }

    /// Words of [`Self::path_tokens`] without the relation labels.
    pub fn path_words(&self) -> Vec<String> {
        self.path_tokens().into_iter().filter(|t| !t.contains(':')).collect()
    }

    pub fn key(&self) -> (&str, &str) {
        (&self.scene, &self.sound)
    }
}

fn pairs_in_graph(graph: &DepGraph, scenes: &SceneLexicon, sounds: &SoundDetector) -> Vec<SoundScenePair> {
    find_comentions(graph, scenes, sounds)
        .into_iter()
        .filter_map(|c| {
            let path = shortest_path(graph, c.scene, c.sound).ok()?;
            let path_lemmas = path.tokens[1..path.tokens.len() - 1]
                .iter()
                .map(|&i| graph.token(i).lemma.clone())
                .collect();
            Some(SoundScenePair {
                scene: graph.token(c.scene.start).lemma.to_lowercase(),
                sound: graph.forms(c.sound).join(" "),
                sentence: graph.sentence_id.clone(),
                scene_span: c.scene,
                sound_span: c.sound,
                path,
                sentence_text: graph.sentence_forms(),
                path_lemmas,
            })
        })
        .collect()
}

/// Co-mentions with path signatures for every graph, in input order.
pub fn build_scene_pairs(graphs: &[DepGraph], scenes: &SceneLexicon, sounds: &SoundDetector) -> Vec<SoundScenePair> {
    graphs
        .par_iter()
        .map(|g| pairs_in_graph(g, scenes, sounds))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depgraph::{DepEdge, DepToken};

    fn tagged(tokens: &[(&str, &str, &str, usize, &str)]) -> DepGraph {
        let toks = tokens
            .iter()
            .enumerate()
            .map(|(i, (form, lemma, tag, _, _))| DepToken {
                index: i + 1,
                form: form.to_string(),
                lemma: lemma.to_string(),
                upos: "X".into(),
                xpos: tag.to_string(),
            })
            .collect();
        let edges = tokens
            .iter()
            .enumerate()
            .map(|(i, (_, _, _, head, rel))| DepEdge {
                head: *head,
                dependent: i + 1,
                relation: rel.to_string(),
            })
            .collect();
        DepGraph::new(
            SentenceId {
                doc: "t".into(),
                index: 0,
            },
            toks,
            edges,
        )
        .unwrap()
    }

    fn beach() -> DepGraph {
        tagged(&[
            ("we", "we", "PRP", 2, "nsubj"),
            ("sat", "sit", "VBD", 0, "root"),
            ("at", "at", "IN", 5, "case"),
            ("the", "the", "DT", 5, "det"),
            ("beach", "beach", "NN", 2, "obl"),
            ("hearing", "hear", "VBG", 2, "advcl"),
            ("waves", "wave", "NNS", 6, "obj"),
            ("crashing", "crash", "VBG", 7, "acl"),
        ])
    }

    #[test]
    fn beach_waves_crashing() {
        let g = beach();
        let scenes = SceneLexicon::bundled();
        let sounds = SoundDetector::from_phrases(["waves crashing", "rain"]);
        let found = find_comentions(&g, &scenes, &sounds);
        assert_eq!(
            found,
            [Comention {
                scene: Span::single(5),
                sound: Span::new(7, 9)
            }]
        );

        let pairs = build_scene_pairs(&[g], &scenes, &sounds);
        assert_eq!(pairs[0].scene, "beach");
        assert_eq!(pairs[0].sound, "waves crashing");
        assert_eq!(pairs[0].path.text(), "SCENE obl:up:sit advcl:down:hear obj:down:SOUND");
        assert_eq!(
            pairs[0].path_tokens(),
            [
                "beach",
                "obl:up",
                "sit",
                "advcl:down",
                "hear",
                "obj:down",
                "waves",
                "crashing"
            ]
        );
        assert_eq!(pairs[0].path_words(), ["beach", "sit", "hear", "waves", "crashing"]);
    }

    #[test]
    fn gerund_bigram_rule_needs_modifier_edge() {
        // Not in the phrase set; "waves crashing" qualifies through the acl
        // edge, "hearing waves" does not (waves is the object of hearing).
        let g = beach();
        let sounds = SoundDetector::from_phrases(["thunder"]);
        assert_eq!(sounds.detect(&g), [Span::new(7, 9)]);
    }

    #[test]
    fn scene_without_sound() {
        let g = tagged(&[
            ("we", "we", "PRP", 2, "nsubj"),
            ("visited", "visit", "VBD", 0, "root"),
            ("the", "the", "DT", 4, "det"),
            ("park", "park", "NN", 2, "obj"),
        ]);
        let sounds = SoundDetector::from_phrases(["rain"]);
        assert!(find_comentions(&g, &SceneLexicon::bundled(), &sounds).is_empty());
    }

    #[test]
    fn two_scenes_one_sound() {
        // rain fell on the beach and the park
        let g = tagged(&[
            ("rain", "rain", "NN", 2, "nsubj"),
            ("fell", "fall", "VBD", 0, "root"),
            ("on", "on", "IN", 5, "case"),
            ("the", "the", "DT", 5, "det"),
            ("beach", "beach", "NN", 2, "obl"),
            ("and", "and", "CC", 8, "cc"),
            ("the", "the", "DT", 8, "det"),
            ("park", "park", "NN", 5, "conj"),
        ]);
        let sounds = SoundDetector::from_phrases(["rain"]);
        let found = find_comentions(&g, &SceneLexicon::bundled(), &sounds);
        assert_eq!(found.len(), 2);
        assert!(found.iter().all(|c| !c.scene.overlaps(&c.sound)));
    }

    #[test]
    fn overlapping_scene_and_sound_are_excluded() {
        // "trains rumbling": lemma "train" is also a scene.
        let g = tagged(&[
            ("trains", "train", "NNS", 0, "root"),
            ("rumbling", "rumble", "VBG", 1, "acl"),
        ]);
        let sounds = SoundDetector::from_phrases(["trains rumbling"]);
        assert!(find_comentions(&g, &SceneLexicon::bundled(), &sounds).is_empty());
    }
}
