#!/usr/bin/env python3
"""Regenerates the miniature lexicon, embeddings and caption corpora in
fixtures/. Output is deterministic for a given --seed."""

import argparse
import json
import random
from pathlib import Path

EMOTIONS = [
    "Affection", "Anger", "Annoyance", "Anticipation", "Aversion", "Confidence",
    "Disapproval", "Disconnection", "Disquietment", "Doubt/Confusion",
    "Embarrassment", "Engagement", "Esteem", "Excitement", "Fatigue", "Fear",
    "Happiness", "Pain", "Peace", "Pleasure", "Sadness", "Sensitivity",
    "Suffering", "Surprise", "Sympathy", "Yearning",
]
E = {name: i for i, name in enumerate(EMOTIONS)}

# Each scene groups concepts that share affect, the moods SenticNet tends to
# give them, a pleasantness/polarity centre and the labels annotators pick.
SCENES = {
    "leisure": {
        "words": "beach ocean sand sun surf surfboard wave sea coast shore swim vacation "
                 "island sunset tan towel umbrella summer holiday boat sail "
                 "dolphin seashell lifeguard palm kayak paddle snorkel yacht harbor tide".split(),
        "moods": ["joy", "serenity", "calmness", "ecstasy"],
        "pleasant": 0.75, "labels": ["Happiness", "Pleasure", "Peace"],
        "vad": (0.8, 0.5, 0.7),
    },
    "celebration": {
        "words": "party cake birthday celebrate balloon gift dance music wedding smile "
                 "laugh friend family hug kiss toast festival concert cheer candle "
                 "parade firework costume guitar singer dessert champagne banner present reunion".split(),
        "moods": ["joy", "ecstasy", "admiration", "enthusiasm"],
        "pleasant": 0.8, "labels": ["Happiness", "Affection", "Excitement"],
        "vad": (0.85, 0.7, 0.6),
    },
    "sport": {
        "words": "ball game field play team player run race skateboard ski snowboard "
                 "tennis racket bat soccer goal score compete jump kick "
                 "stadium medal coach helmet bicycle climb marathon trophy stretch sprint".split(),
        "moods": ["enthusiasm", "interest", "eagerness", "excitement"],
        "pleasant": 0.45, "labels": ["Engagement", "Confidence", "Excitement"],
        "vad": (0.65, 0.8, 0.75),
    },
    "grief": {
        "words": "funeral grave cemetery cry tear hospital illness loss mourn grieve "
                 "coffin alone lonely rain gray empty bed patient wound bandage "
                 "wheelchair crutch ambulance memorial wreath shadow ruin debris homeless hunger".split(),
        "moods": ["sadness", "grief", "pensiveness", "loathing"],
        "pleasant": -0.7, "labels": ["Sadness", "Suffering", "Pain"],
        "vad": (0.2, 0.35, 0.3),
    },
    "conflict": {
        "words": "fight protest riot police fire storm smoke crowd shout scream weapon "
                 "soldier war accident crash damage danger siren flood chase "
                 "gun explosion tornado earthquake barricade arrest rubble tank alarm blast".split(),
        "moods": ["anger", "fear", "terror", "rage"],
        "pleasant": -0.6, "labels": ["Anger", "Fear", "Disquietment"],
        "vad": (0.25, 0.8, 0.45),
    },
    "calm": {
        "words": "park bench tree garden lake read book flower grass meadow forest "
                 "walk path picnic bird pond cloud sky river quiet "
                 "swan duck butterfly hammock cottage fountain sunrise blossom breeze stream".split(),
        "moods": ["serenity", "calmness", "contentment", "pleasantness"],
        "pleasant": 0.55, "labels": ["Peace", "Pleasure"],
        "vad": (0.7, 0.25, 0.6),
    },
    "work": {
        "words": "office desk computer laptop phone meeting paper document work study "
                 "teacher student class board lecture screen keyboard report deadline shift "
                 "printer folder calendar schedule exam homework library notebook pen spreadsheet".split(),
        "moods": ["interest", "anticipation", "pensiveness", "vigilance"],
        "pleasant": 0.05, "labels": ["Engagement", "Anticipation", "Fatigue"],
        "vad": (0.5, 0.5, 0.55),
    },
}

# Related-only concepts that never get their own lexicon entry, so some
# second-level lookups fall through.
ORPHANS = "pebble ribbon confetti whistle thunder ash mist ink lantern velvet".split()

SYNONYMS = {
    "seashore": ["shore", "coast", "beach"],
    "seaside": ["coast", "beach"],
    "automobile": ["machine", "car"],
    "car": ["vehicle", "automobile"],
    "kid": ["child", "youngster"],
    "child": ["kid", "youngster"],
    "feast": ["party", "banquet", "celebration"],
    "celebration": ["party", "festival"],
    "athlete": ["player", "competitor"],
    "match": ["game", "competition"],
    "sorrow": ["grief", "sadness"],
    "burial": ["funeral", "interment"],
    "blaze": ["fire", "flame"],
    "battle": ["fight", "war"],
    "woods": ["forest", "wood"],
    "stroll": ["walk", "ramble"],
    "workplace": ["office", "shop"],
    "pupil": ["student", "scholar"],
    "dog": ["canine", "hound"],
    "street": ["road", "avenue"],
    "water": ["sea", "ocean", "lake"],
    "snow": ["ski", "winter"],
    "table": ["desk", "board"],
    "sit": ["rest", "perch"],
}

MOODS = sorted({m for s in SCENES.values() for m in s["moods"]})

# Scene-free filler words seen in captions; absent from the lexicon and from
# the embeddings so they exercise the synonym and fallback paths.
FILLER = "dog street car table water child sit snow".split()

TEMPLATES = [
    "a {man} {w0} near the {w1} with a {w2}",
    "{man} and a {w0} on the {w1}",
    "a {man} holding a {w0} at the {w1}",
    "two {men} {w0} by the {w1} and {w2}",
    "a {w0} {w1} in front of a {w2}",
    "people standing around a {w0} at the {w1}",
]


def clamp(x):
    return max(-1.0, min(1.0, x))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "fixtures"))
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    dim = 50
    centres = {name: [rng.gauss(0, 1) for _ in range(dim)] for name in SCENES}

    def near(centre, spread):
        return [c + rng.gauss(0, spread) for c in centre]

    vectors = {}
    scene_of = {}
    for name, scene in SCENES.items():
        for w in scene["words"]:
            vectors[w] = near(centres[name], 0.6)
            scene_of[w] = name
    for w in ORPHANS:
        vectors[w] = near(centres[rng.choice(list(SCENES))], 0.8)
    for m in MOODS:
        home = [n for n, s in SCENES.items() if m in s["moods"]][0]
        vectors[m] = near(centres[home], 0.9)
    for e in EMOTIONS:
        vectors[e.lower()] = [rng.gauss(0, 1) for _ in range(dim)]
    # Synonym candidates get vectors so ranking is meaningful; a few do not.
    for word, cands in SYNONYMS.items():
        for c in cands:
            if c not in vectors and rng.random() < 0.7:
                home = scene_of.get(cands[0]) or rng.choice(list(SCENES))
                vectors[c] = near(centres[home], 1.0)
    for w in ["seashore", "automobile", "feast", "athlete", "burial", "blaze", "stroll", "pupil"]:
        first = SYNONYMS[w][0]
        vectors[w] = near(vectors.get(first, centres["calm"]), 0.4)
    # Left without embeddings on purpose: most of FILLER.
    for w in FILLER:
        vectors.pop(w, None)

    rows = []
    for name, scene in SCENES.items():
        words = scene["words"]
        for w in words:
            moods = rng.sample(scene["moods"], 2)
            p = clamp(scene["pleasant"] + rng.gauss(0, 0.15))
            pol = clamp(scene["pleasant"] * 0.9 + rng.gauss(0, 0.15))
            pool = [x for x in words if x != w]
            related = rng.sample(pool, 4)
            related.append(rng.choice(ORPHANS) if rng.random() < 0.3 else rng.choice([x for x in pool if x not in related]))
            rows.append((w, moods, p, pol, related))
    for syn_target in ["machine", "canine", "road", "winter", "rest", "vehicle", "wood", "competition"]:
        home = rng.choice(list(SCENES))
        words = SCENES[home]["words"]
        rows.append((syn_target, rng.sample(SCENES[home]["moods"], 2),
                     clamp(SCENES[home]["pleasant"] + rng.gauss(0, 0.2)),
                     clamp(SCENES[home]["pleasant"] * 0.8 + rng.gauss(0, 0.2)),
                     rng.sample(words, 5)))

    with open(out / "senticnet.csv", "w") as f:
        f.write("concept,mood1,mood2,pleasantness,polarity,related\n")
        for w, moods, p, pol, rel in rows:
            f.write(f"{w},{moods[0]},{moods[1]},{p:.3f},{pol:.3f},{';'.join(rel)}\n")

    with open(out / "synonyms.csv", "w") as f:
        for w in sorted(SYNONYMS):
            f.write(f"{w},{';'.join(SYNONYMS[w])}\n")

    with open(out / "embeddings.txt", "w") as f:
        for w in sorted(vectors):
            f.write(w + " " + " ".join(f"{x:.5f}" for x in vectors[w]) + "\n")

    def caption_for(scene_name, idx):
        scene = SCENES[scene_name]
        ws = rng.sample(scene["words"], 3)
        if rng.random() < 0.35:
            ws[rng.randrange(3)] = rng.choice(FILLER + ["seashore", "feast", "athlete", "burial", "blaze", "stroll"])
        text = rng.choice(TEMPLATES).format(
            man=rng.choice(["man", "woman", "girl", "boy", "person"]),
            men=rng.choice(["men", "women", "girls", "boys"]),
            w0=ws[0], w1=ws[1], w2=ws[2])
        labels = sorted({E[l] for l in rng.sample(scene["labels"], rng.randint(1, len(scene["labels"])))})
        vad = [round(min(10.0, max(1.0, 10 * v + rng.gauss(0, 0.6))), 1) for v in scene["vad"]]
        return {"id": f"{scene_name}-{idx:03d}", "caption": text, "labels": labels, "vad": vad}

    names = list(SCENES)

    def corpus(n, prefix):
        recs = []
        for i in range(n):
            rec = caption_for(names[i % len(names)], i)
            rec["id"] = f"{prefix}{rec['id']}"
            recs.append(rec)
        return recs

    train = corpus(40, "tr-")
    # Two captions that normalize to nothing or lose every word.
    train[5] = {"id": "tr-empty-005", "caption": "a man and a woman in the", "labels": [E["Peace"]], "vad": [5.0, 5.0, 5.0]}
    train[17] = {"id": "tr-unknown-017", "caption": "zorblax quimble", "labels": [E["Surprise"]], "vad": [6.0, 7.0, 5.0]}
    test = corpus(21, "te-")
    for path, recs in [("captions_train.jsonl", train), ("captions_test.jsonl", test)]:
        with open(out / path, "w") as f:
            for r in recs:
                f.write(json.dumps(r) + "\n")

    print(f"{len(rows)} lexicon concepts, {len(vectors)} embeddings, "
          f"{len(train)} train / {len(test)} test captions -> {out}")


if __name__ == "__main__":
    main()
