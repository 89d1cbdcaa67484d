#!/usr/bin/env python3
"""Regenerate the bundled fixture files under crates/core/data/fixtures.

The output is deterministic; rerunning it reproduces the checked-in files.
"""
import math
import os
import random

OUT = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "data", "fixtures")
rng = random.Random(20160817)

# (source, sound, truth, surface order) for gerund bi-grams.
NOUN_VERB = [
    ("birds", "chirping", "yes"), ("dogs", "barking", "yes"), ("cars", "honking", "yes"),
    ("waves", "crashing", "yes"), ("children", "laughing", "yes"), ("bells", "ringing", "yes"),
    ("wind", "blowing", "yes"), ("engines", "roaring", "yes"), ("leaves", "rustling", "yes"),
    ("frogs", "croaking", "yes"), ("geckos", "barking", "yes"), ("planes", "flying", "yes"),
    ("people", "talking", "yes"), ("doors", "slamming", "yes"), ("crowds", "cheering", "yes"),
    ("owls", "hooting", "yes"), ("babies", "crying", "yes"), ("sirens", "wailing", "yes"),
    ("hammers", "pounding", "yes"), ("trains", "rumbling", "yes"),
    ("people", "standing", "no"), ("trees", "growing", "no"), ("flowers", "blooming", "no"),
    ("students", "sitting", "no"), ("lights", "shining", "no"), ("cats", "sleeping", "no"),
]
VERB_NOUN = [
    ("brakes", "squealing", "yes"), ("children", "singing", "yes"), ("tires", "screeching", "yes"),
    ("wind", "howling", "yes"), ("clocks", "ticking", "yes"), ("bees", "buzzing", "yes"),
    ("refrigerators", "humming", "yes"), ("teeth", "chattering", "yes"), ("water", "rushing", "yes"),
    ("thunder", "rolling", "yes"), ("river", "flowing", "yes"),
    ("nature", "surrounding", "no"), ("ovation", "standing", "no"), ("cars", "passing", "no"),
    ("sun", "rising", "no"), ("snow", "melting", "no"), ("lights", "blinking", "no"),
]
OTHER_SOUNDS = ["rain", "thunder", "laughter", "music", "silence", "footsteps", "applause",
                "gunfire", "distant thunder", "church bells", "heavy rain", "morning traffic"]

SMELLS = [
    ("rotten eggs", "unpleasant"), ("cherry blossoms", "pleasant"), ("fresh bread", "pleasant"),
    ("burnt toast", "unpleasant"), ("coffee", "pleasant"), ("smoke", "unpleasant"),
    ("wet dog", "unpleasant"), ("roses", "pleasant"), ("garbage", "unpleasant"),
    ("baking cookies", "pleasant"), ("gasoline", "neutral"), ("fresh paint", "neutral"),
    ("sewage", "unpleasant"), ("lavender", "pleasant"), ("mold", "unpleasant"),
    ("cut grass", "pleasant"), ("pine trees", "pleasant"), ("sour milk", "unpleasant"),
    ("vanilla", "pleasant"), ("diesel fumes", "unpleasant"), ("wood polish", "neutral"),
    ("old books", "neutral"), ("chlorine", "neutral"), ("spices", "pleasant"),
    ("wet paper", "neutral"), ("rubber", "neutral"),
]

SCENES = ["beach", "park", "airport", "construction", "street", "forest", "bus", "cafe", "car",
          "city", "home", "library", "metro", "office", "residential", "train", "tram", "grocery",
          "market", "restaurant", "stadium", "harbor", "farm", "kitchen", "classroom", "playground",
          "garden", "river", "mountain", "zoo", "church", "hospital", "factory", "highway", "subway",
          "campsite"]

# Which sound sources plausibly belong to which scenes.
SCENE_SOUNDS = {
    "beach": ["waves", "birds", "children", "wind"],
    "street": ["cars", "sirens", "people", "brakes", "tires"],
    "forest": ["birds", "leaves", "owls", "wind", "frogs"],
    "airport": ["planes", "people", "babies", "engines"],
    "construction": ["hammers", "engines"],
    "park": ["children", "dogs", "birds", "leaves"],
    "stadium": ["crowds", "people"],
    "church": ["bells", "people"],
    "train": ["trains", "people", "doors"],
    "kitchen": ["refrigerators", "clocks"],
    "farm": ["dogs", "frogs", "birds"],
    "highway": ["cars", "engines", "sirens", "tires"],
}

LEMMA = {"birds": "bird", "dogs": "dog", "cars": "car", "waves": "wave", "children": "child",
         "bells": "bell", "engines": "engine", "leaves": "leaf", "frogs": "frog",
         "geckos": "gecko", "planes": "plane", "doors": "door", "crowds": "crowd",
         "owls": "owl", "babies": "baby", "sirens": "siren", "hammers": "hammer",
         "trains": "train", "trees": "tree", "flowers": "flower", "students": "student",
         "lights": "light", "cats": "cat", "brakes": "brake", "tires": "tire",
         "clocks": "clock", "bees": "bee", "refrigerators": "refrigerator"}


def lemma_of(word):
    if word in LEMMA:
        return LEMMA[word]
    if word.endswith("ing"):
        stem = word[:-3]
        return {"chirp": "chirp", "honk": "honk"}.get(stem, stem)
    return word


def write_corpus():
    lines = []
    sound_templates = [
        "We could hear the sound of {p} from the window.",
        "The sound of {p} kept me awake all night!",
        "She loved the sound of {p}, especially in spring.",
        "Nothing beats the sound of {p} on a lazy afternoon.",
    ]
    smell_templates = [
        "The smell of {p} filled the room.",
        "I noticed the smell of {p} as soon as I walked in.",
        "There was a faint smell of {p}; nobody knew where it came from.",
    ]
    distractors = [
        "The meeting was moved to Thursday afternoon.",
        "Our team finished the report before the deadline.",
        "He bought two tickets for the concert next week.",
        "The library closes early on Sundays.",
        "They painted the fence a bright shade of green.",
        "Prices of sound equipment rose sharply this year.",
    ]
    items = []
    for src, snd, _ in NOUN_VERB:
        items.append(("sound", f"{src} {snd}"))
    for src, snd, _ in VERB_NOUN:
        items.append(("sound", f"{snd} {src}"))
    for p in OTHER_SOUNDS:
        items.append(("sound", p))
    for p, _ in SMELLS:
        items.append(("smell", p))
    for kind, phrase in items:
        reps = rng.choice([1, 1, 2, 2, 3, 4])
        for _ in range(reps):
            tpl = rng.choice(sound_templates if kind == "sound" else smell_templates)
            text = tpl.format(p=phrase)
            if rng.random() < 0.3:
                text = text[0].upper() + text[1:]
            lines.append(text)
    for _ in range(40):
        lines.append(rng.choice(distractors))
    rng.shuffle(lines)
    # Pack two or three sentences per line (document).
    docs = []
    i = 0
    while i < len(lines):
        k = rng.choice([1, 2, 3])
        docs.append(" ".join(lines[i:i + k]))
        i += k
    with open(os.path.join(OUT, "corpus.txt"), "w") as f:
        for d in docs:
            f.write(d + "\n")


def conllu_sentence(sent_id, toks):
    """toks: list of (form, lemma, upos, xpos, head, deprel)."""
    out = [f"# sent_id = {sent_id}", "# text = " + " ".join(t[0] for t in toks)]
    for i, (form, lemma, upos, xpos, head, rel) in enumerate(toks, start=1):
        out.append("\t".join([str(i), form, lemma, upos, xpos, "_", str(head), rel, "_", "_"]))
    return "\n".join(out) + "\n"


def nv(src, snd, surface):
    """Sound bi-gram tokens in surface order; returns (tokens, head offset)."""
    if surface == "noun-verb":
        return [(src, lemma_of(src), "NOUN", "NNS"), (snd, lemma_of(snd), "VERB", "VBG")], 0
    return [(snd, lemma_of(snd), "VERB", "VBG"), (src, lemma_of(src), "NOUN", "NNS")], 1


def place_sound(tokens, sound, attach_head, attach_rel):
    """Appends a two-token sound span; the noun attaches to attach_head."""
    (a, b), head_off = sound
    base = len(tokens) + 1
    noun_idx = base + head_off
    verb_idx = base + (1 - head_off)
    rel_mod = "acl" if head_off == 0 else "amod"
    for off, (form, lemma, upos, xpos) in enumerate([a, b]):
        idx = base + off
        if idx == noun_idx:
            tokens.append((form, lemma, upos, xpos, attach_head, attach_rel))
        else:
            tokens.append((form, lemma, upos, xpos, noun_idx, rel_mod))
    return noun_idx


def sentence_templates(scene, sound):
    t = rng.randrange(6)
    toks = []
    if t == 0:
        # we sat at the SCENE hearing SOUND
        toks += [("we", "we", "PRON", "PRP", 2, "nsubj"), ("sat", "sit", "VERB", "VBD", 0, "root"),
                 ("at", "at", "ADP", "IN", 5, "case"), ("the", "the", "DET", "DT", 5, "det"),
                 (scene, scene, "NOUN", "NN", 2, "obl"), ("hearing", "hear", "VERB", "VBG", 2, "advcl")]
        place_sound(toks, sound, 6, "obj")
    elif t == 1:
        # the SOUND in the SCENE woke me
        toks += [("the", "the", "DET", "DT", 0, "det")]
        noun = place_sound(toks, sound, 0, "nsubj")
        toks[0] = ("the", "the", "DET", "DT", noun, "det")
        toks += [("in", "in", "ADP", "IN", 6, "case"), ("the", "the", "DET", "DT", 6, "det"),
                 (scene, scene, "NOUN", "NN", noun, "nmod"), ("woke", "wake", "VERB", "VBD", 0, "root"),
                 ("me", "me", "PRON", "PRP", 7, "obj")]
        toks[noun - 1] = toks[noun - 1][:4] + (7, "nsubj")
    elif t == 2:
        # there were SOUND all over the SCENE
        toks += [("there", "there", "PRON", "EX", 2, "expl"), ("were", "be", "VERB", "VBD", 0, "root")]
        place_sound(toks, sound, 2, "nsubj")
        toks += [("all", "all", "ADV", "RB", 8, "advmod"), ("over", "over", "ADP", "IN", 8, "case"),
                 ("the", "the", "DET", "DT", 8, "det"), (scene, scene, "NOUN", "NN", 2, "obl")]
    elif t == 3:
        # we heard SOUND near the SCENE
        toks += [("we", "we", "PRON", "PRP", 2, "nsubj"), ("heard", "hear", "VERB", "VBD", 0, "root")]
        place_sound(toks, sound, 2, "obj")
        toks += [("near", "near", "ADP", "IN", 7, "case"), ("the", "the", "DET", "DT", 7, "det"),
                 (scene, scene, "NOUN", "NN", 2, "obl")]
    elif t == 4:
        # the SCENE was full of SOUND
        toks += [("the", "the", "DET", "DT", 2, "det"), (scene, scene, "NOUN", "NN", 4, "nsubj"),
                 ("was", "be", "AUX", "VBD", 4, "cop"), ("full", "full", "ADJ", "JJ", 0, "root"),
                 ("of", "of", "ADP", "IN", 7, "case")]
        base = len(toks) + 1
        (a, b), head_off = sound
        noun_idx = base + head_off
        toks[-1] = ("of", "of", "ADP", "IN", noun_idx, "case")
        place_sound(toks, sound, 4, "obl")
    else:
        # rare construction: SOUND echoed through the empty SCENE after midnight
        place_sound(toks, sound, 3, "nsubj")
        toks += [("echoed", "echo", "VERB", "VBD", 0, "root"), ("through", "through", "ADP", "IN", 7, "case"),
                 ("the", "the", "DET", "DT", 7, "det"), ("empty", "empty", "ADJ", "JJ", 7, "amod"),
                 (scene, scene, "NOUN", "NN", 3, "obl"), ("after", "after", "ADP", "IN", 9, "case"),
                 ("midnight", "midnight", "NOUN", "NN", 3, "obl")]
    toks.append((".", ".", "PUNCT", ".", [i for i, t in enumerate(toks, 1) if t[4] == 0][0], "punct"))
    return toks


def write_parses():
    bigrams = [(s, v, "noun-verb") for s, v, _ in NOUN_VERB] + [(s, v, "verb-noun") for s, v, _ in VERB_NOUN]
    by_source = {}
    for s, v, o in bigrams:
        by_source.setdefault(s, []).append((s, v, o))
    gold = []
    sentences = []
    seen = set()
    scenes = list(SCENE_SOUNDS)
    for i in range(160):
        scene = rng.choice(scenes)
        if rng.random() < 0.7:
            src = rng.choice(SCENE_SOUNDS[scene])
            s, v, o = rng.choice(by_source[src])
        else:
            s, v, o = rng.choice(bigrams)
        truth = "yes" if s in SCENE_SOUNDS[scene] else "no"
        toks = sentence_templates(scene, nv(s, v, o))
        sentences.append(conllu_sentence(f"fixture-{i:03d}", toks))
        phrase = f"{s} {v}" if o == "noun-verb" else f"{v} {s}"
        key = (scene, phrase)
        if key not in seen:
            seen.add(key)
            gold.append(("soundScene", scene, phrase, truth))
    # A handful of sentences without co-mentions and one malformed sentence.
    sentences.append(conllu_sentence("fixture-x01", [
        ("the", "the", "DET", "DT", 2, "det"), ("report", "report", "NOUN", "NN", 3, "nsubj"),
        ("arrived", "arrive", "VERB", "VBD", 0, "root"), ("late", "late", "ADV", "RB", 3, "advmod"),
        (".", ".", "PUNCT", ".", 3, "punct")]))
    sentences.append(conllu_sentence("fixture-x02", [
        ("we", "we", "PRON", "PRP", 2, "nsubj"), ("visited", "visit", "VERB", "VBD", 0, "root"),
        ("the", "the", "DET", "DT", 4, "det"), ("park", "park", "NOUN", "NN", 2, "obj"),
        (".", ".", "PUNCT", ".", 2, "punct")]))
    bad = conllu_sentence("fixture-bad", [
        ("broken", "broken", "ADJ", "JJ", 99, "amod"), ("edge", "edge", "NOUN", "NN", 0, "root")])
    sentences.insert(len(sentences) // 2, bad)
    with open(os.path.join(OUT, "parses.conllu"), "w") as f:
        f.write("\n".join(sentences))
    return gold


def write_gold(scene_gold):
    rows = []
    for src, snd, truth in NOUN_VERB + VERB_NOUN:
        rows.append(("soundSource", snd, src, truth))
    for p, sent in SMELLS:
        rows.append(("smellSentiment", p, "", sent))
    rows += scene_gold
    with open(os.path.join(OUT, "gold.tsv"), "w") as f:
        f.write("# relation\targ1\targ2\ttruth\n")
        for r in rows:
            f.write("\t".join(r) + "\n")


def write_scenes():
    with open(os.path.join(OUT, "..", "scenes.txt"), "w") as f:
        f.write("# Acoustic scene lexicon, one lemma per line.\n")
        for s in SCENES:
            f.write(s + "\n")


def write_embeddings():
    dim = 8

    def center():
        return [rng.gauss(0, 1.0) for _ in range(dim)]

    centers = {name: center() for name in
               ["loud", "quiet", "soundverb", "stillverb", "pleasant", "unpleasant", "neutral",
                "scene", "function", "misc"]}
    groups = {}

    def add(word, group):
        groups.setdefault(word, group)

    for src, snd, truth in NOUN_VERB + VERB_NOUN:
        add(src, "loud" if truth == "yes" else "quiet")
        add(snd, "soundverb" if truth == "yes" else "stillverb")
    for p, sent in SMELLS:
        for w in p.split():
            add(w, sent)
    for s in SCENES:
        add(s, "scene")
    for w in ["we", "the", "at", "in", "of", "over", "near", "there", "me", "all", "through",
              "after", "was", "were", "sat", "heard", "hearing", "woke", "full", "echoed", "empty",
              "sit", "hear", "be", "wake", "echo"]:
        add(w, "function")
    for w in ["rain", "thunder", "laughter", "music", "silence", "footsteps", "midnight"]:
        add(w, "misc")
    assert len(groups) <= 200, len(groups)
    with open(os.path.join(OUT, "embeddings.txt"), "w") as f:
        f.write(f"{len(groups)} {dim}\n")
        for word, group in groups.items():
            c = centers[group]
            vec = [c[i] + rng.gauss(0, 0.35) for i in range(dim)]
            f.write(word + " " + " ".join(f"{x:.4f}" for x in vec) + "\n")


def main():
    os.makedirs(OUT, exist_ok=True)
    write_corpus()
    gold = write_parses()
    write_gold(gold)
    write_scenes()
    write_embeddings()


if __name__ == "__main__":
    main()
