#!/usr/bin/env python3
"""Generate the synthetic evaluation fixture and its expected correlation tables.

Ratings are a noisy monotone function of a planted mixture of the four construct
scores. Rater noise depends on the image: alternating blocks of one image per
category get low-noise raters, so keeping only high-agreement images should raise
every construct's correlation.

Everything here is computed independently of the C++ library (numpy + scipy).

    python3 scripts/make_synthetic_fixture.py --out tests/data/synthetic
"""

import argparse
import itertools
import json
import os
import unicodedata

import numpy as np
from scipy.stats import spearmanr

CATEGORIES = ["apparel", "decor", "furniture", "kitchen"]
CONSONANTS = "bdfgklmnprtvz"
VOWELS = "aeiou"
FILLER = ["a", "photo", "of", "with", "the", "on"]


def make_words(rng, n):
    # CV syllables ending in a vowel: no word ends in "s", so no two words are plural variants.
    words = set()
    while len(words) < n:
        syl = rng.integers(2, 4)
        w = "".join(rng.choice(list(CONSONANTS)) + rng.choice(list(VOWELS)) for _ in range(syl))
        if w not in FILLER:
            words.add(w)
    return sorted(words)


def tokens(text):
    text = unicodedata.normalize("NFC", text).lower()
    out, cur = [], []
    for ch in text:
        if unicodedata.category(ch)[0] in "LMN":
            cur.append(ch)
        elif cur:
            out.append("".join(cur))
            cur = []
    if cur:
        out.append("".join(cur))
    return out


def token_match(a, b):
    return a == b or a == b + "s" or b == a + "s" or a == b + "es" or b == a + "es"


def contains(sentence, label):
    n = len(label)
    for i in range(len(sentence) - n + 1):
        if all(token_match(sentence[i + k], label[k]) for k in range(n)):
            return True
    return False


def rho(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    if len(x) < 3 or np.all(x == x[0]) or np.all(y == y[0]):
        return None
    return float(spearmanr(x, y).statistic)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", type=int, default=20240611)
    ap.add_argument("--images", type=int, default=200)
    ap.add_argument("--labels-per-image", type=int, default=8)
    ap.add_argument("--captions", type=int, default=10)
    ap.add_argument("--dim", type=int, default=16)
    ap.add_argument("--threshold", type=float, default=0.75)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    os.makedirs(args.out, exist_ok=True)

    # Per-category vocabularies with Zipf-like label frequencies.
    words = make_words(rng, 400)
    rng.shuffle(words)
    vocab = {c: words[i * 100:(i + 1) * 100] for i, c in enumerate(CATEGORIES)}
    lexicon_words = [w for w in words if rng.random() > 0.10]
    lexicon = {w: round(float(rng.uniform(1.5, 5.0)), 2) for w in lexicon_words}
    b = max(lexicon.values())

    images = []
    records = []  # dicts: image_id, category, label, key tokens
    for i in range(args.images):
        image_id = f"syn{i:04d}"
        cat = CATEGORIES[i % len(CATEGORIES)]
        images.append((image_id, cat))
        pool = vocab[cat]
        p = 1.0 / np.arange(1, len(pool) + 1) ** 0.9
        p /= p.sum()
        chosen = []
        while len(chosen) < args.labels_per_image:
            w = pool[rng.choice(len(pool), p=p)]
            if rng.random() < 0.15:
                w = w + " " + pool[rng.integers(len(pool))]
            if w not in chosen and w.split()[0] not in [c.split()[0] for c in chosen]:
                chosen.append(w)
        for w in chosen:
            records.append({"image_id": image_id, "category": cat, "label": w})

    # Captions: each label's tokens appear in a chosen number of the image's captions.
    captions = {}
    for image_id, _ in images:
        recs = [r for r in records if r["image_id"] == image_id]
        sents = [list(rng.choice(FILLER, size=2)) for _ in range(args.captions)]
        for r in recs:
            k = int(rng.integers(0, args.captions + 1))
            for s in rng.choice(args.captions, size=k, replace=False):
                sents[s].extend(r["label"].split())
                sents[s].append(str(rng.choice(FILLER)))
        captions[image_id] = [" ".join(s) for s in sents]

    # Embeddings stored as float32 and read back exactly as written.
    text_keys = sorted({" ".join(tokens(r["label"])) for r in records})
    text_vecs = {k: rng.normal(size=args.dim).astype(np.float32) for k in text_keys}
    image_vecs = {i: rng.normal(size=args.dim).astype(np.float32) for i, _ in images}
    fmt = lambda v: [float(f"{x:.9g}") for x in v]
    text_vecs = {k: np.array(fmt(v), dtype=np.float32) for k, v in text_vecs.items()}
    image_vecs = {k: np.array(fmt(v), dtype=np.float32) for k, v in image_vecs.items()}

    # Independent construct scores.
    counts = {c: {} for c in CATEGORIES}
    for r in records:
        key = " ".join(tokens(r["label"]))
        counts[r["category"]][key] = counts[r["category"]].get(key, 0) + 1
    for r in records:
        lab = tokens(r["label"])
        key = " ".join(lab)
        sents = [tokens(s) for s in captions[r["image_id"]]]
        r["v"] = 1.0 - sum(contains(s, lab) for s in sents) / len(sents)
        t = text_vecs[key].astype(np.float64)
        im = image_vecs[r["image_id"]].astype(np.float64)
        r["s"] = 1.0 - float(np.dot(t, im) / (np.linalg.norm(t) * np.linalg.norm(im)))
        total = sum(counts[r["category"]].values())
        r["u"] = 1.0 - counts[r["category"]][key] / total
        if key in lexicon:
            r["c"] = b - lexicon[key]
        else:
            found = [b - lexicon[w] for w in lab if w in lexicon] if len(lab) > 1 else []
            r["c"] = float(np.mean(found)) if found else None

    # Planted mixture of standardized constructs; missing concreteness contributes 0.
    def z(name):
        vals = np.array([r[name] for r in records if r[name] is not None])
        return lambda x: 0.0 if x is None else (x - vals.mean()) / vals.std()

    zs = {n: z(n) for n in "vsuc"}
    mix = {"v": 0.35, "s": 0.35, "u": 0.2, "c": 0.3}
    low_noise = {image_id: ((k // len(CATEGORIES)) % 2 == 0) for k, (image_id, _) in enumerate(images)}
    for r in records:
        latent = 2.0 + 1.3 * sum(mix[n] * zs[n](r[n]) for n in "vsuc")
        sd = 0.3 if low_noise[r["image_id"]] else 2.2
        r["ratings"] = [int(np.clip(np.rint(latent + rng.normal(0, sd)), 0, 4)) for _ in range(3)]
        r["rater_ids"] = [f"{r['image_id']}_r{j}" for j in range(3)]

    # Independent agreement filter: mean pairwise rater Spearman per image.
    agreement = {}
    for image_id, _ in images:
        recs = [r for r in records if r["image_id"] == image_id]
        per_rater = list(zip(*[r["ratings"] for r in recs]))
        vals = []
        for a, c in itertools.combinations(range(3), 2):
            x, y = per_rater[a], per_rater[c]
            if len(set(x)) > 1 and len(set(y)) > 1:
                vals.append(float(spearmanr(x, y).statistic))
        if vals:
            agreement[image_id] = float(np.mean(vals))
    high_ids = {i for i, a in agreement.items() if a > args.threshold}

    def table(recs):
        target = [float(np.mean(r["ratings"])) for r in recs]
        cols = {}
        for cat in CATEGORIES + ["all"]:
            cols[cat] = [k for k, r in enumerate(recs) if cat == "all" or r["category"] == cat]
        out = {}
        for n in "vsuc":
            out[f"theta_{n}"] = {}
            for cat, idx in cols.items():
                pairs = [(recs[k][n], target[k]) for k in idx if recs[k][n] is not None]
                out[f"theta_{n}"][cat] = rho(*zip(*pairs)) if pairs else None
        # Global in-sample calibration, min-max normalized weighted sum.
        for combo in ["vs", "vsu", "vsuc"]:
            w = {}
            for n in combo:
                pairs = [(r[n], t) for r, t in zip(recs, target) if r[n] is not None]
                w[n] = max(0.0, rho(*zip(*pairs)))
            tot = sum(w.values())
            w = {n: (x / tot if tot > 0 else 1.0 / len(combo)) for n, x in w.items()}
            lo = {n: min(r[n] for r in recs if r[n] is not None) for n in combo}
            hi = {n: max(r[n] for r in recs if r[n] is not None) for n in combo}
            comb = []
            for r in recs:
                if any(w[n] > 0 and r[n] is None for n in combo):
                    comb.append(None)
                else:
                    comb.append(sum(w[n] * (r[n] - lo[n]) / (hi[n] - lo[n]) for n in combo if w[n] > 0))
            name = f"theta_{combo}"
            out[name] = {}
            for cat, idx in cols.items():
                pairs = [(comb[k], target[k]) for k in idx if comb[k] is not None]
                out[name][cat] = rho(*zip(*pairs)) if pairs else None
        return out

    expected = {
        "seed": args.seed,
        "records": len(records),
        "high_agreement_threshold": args.threshold,
        "high_agreement_images": len(high_ids),
        "high_agreement_low_noise_images": sum(1 for i in high_ids if low_noise[i]),
        "full": table(records),
        "high_agreement": table([r for r in records if r["image_id"] in high_ids]),
    }

    def write_jsonl(name, rows):
        with open(os.path.join(args.out, name), "w", encoding="utf-8") as f:
            for row in rows:
                f.write(json.dumps(row, ensure_ascii=False) + "\n")

    write_jsonl("labels.jsonl", [{"image_id": r["image_id"], "category": r["category"], "label": r["label"],
                                  "ratings": r["ratings"], "rater_ids": r["rater_ids"]} for r in records])
    write_jsonl("images.jsonl", [{"image_id": i, "category": c, "image_path": None} for i, c in images])
    write_jsonl("captions.jsonl", [{"image_id": i, "captions": captions[i]} for i, _ in images])
    write_jsonl("embeddings_text.jsonl", [{"kind": "text", "dim": args.dim}] +
                [{"key": k, "vector": fmt(v)} for k, v in text_vecs.items()])
    write_jsonl("embeddings_image.jsonl", [{"kind": "image", "dim": args.dim}] +
                [{"key": k, "vector": fmt(v)} for k, v in image_vecs.items()])
    with open(os.path.join(args.out, "lexicon.tsv"), "w", encoding="utf-8") as f:
        f.write("word\tconcreteness\n")
        for w in sorted(lexicon):
            f.write(f"{w}\t{lexicon[w]}\n")
    with open(os.path.join(args.out, "config.json"), "w", encoding="utf-8") as f:
        json.dump({"paths.labels": "labels.jsonl", "paths.images": "images.jsonl",
                   "paths.captions": "captions.jsonl", "paths.text_embeddings": "embeddings_text.jsonl",
                   "paths.image_embeddings": "embeddings_image.jsonl", "paths.lexicon": "lexicon.tsv",
                   "evaluate.agreement_threshold": args.threshold}, f, indent=2)
        f.write("\n")
    with open(os.path.join(args.out, "expected.json"), "w", encoding="utf-8") as f:
        json.dump(expected, f, indent=2)
        f.write("\n")

    for variant in ("full", "high_agreement"):
        print(variant, {k: round(v["all"], 3) for k, v in expected[variant].items()})
    print("high-agreement images:", len(high_ids), "of which low-noise:",
          expected["high_agreement_low_noise_images"])


if __name__ == "__main__":
    main()
