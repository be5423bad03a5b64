#!/usr/bin/env python3
"""Regenerates data/toy: a small sentiment setup with a lookup-table scorer.

Prompt strings are assembled here independently of the C++ code, so a
mismatch in prompt assembly shows up as a fixture miss.
"""

import hashlib
import itertools
import json
import math
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "data" / "toy"
TASK = json.loads((ROOT / "tasks" / "amazon.json").read_text())
PATTERN = TASK["patterns"][2]
WORDS = TASK["verbalizer"]  # label -> word, label order = key order
SEP = " "
DIM = 8
K_MAX = 3

HRL = [
    ("en-001", "The blender works perfectly and looks nice.", "pos"),
    ("en-002", "Broke after two days, a waste of money.", "neg"),
    ("en-003", "Great sound and the battery lasts all week.", "pos"),
    ("en-004", "The zipper fell off the first time I used it.", "neg"),
    ("en-005", "Exactly as described, fast delivery.", "pos"),
    ("en-006", "Smells like plastic and the color faded.", "neg"),
    ("en-007", "My kids love this game.", "pos"),
    ("en-008", "Stopped charging within a month.", "neg"),
    ("en-009", "Comfortable shoes, I wear them daily.", "pos"),
    ("en-010", "Too small and the seams are loose.", "neg"),
    ("en-011", "Sturdy, cheap and easy to assemble.", "pos"),
    ("en-012", "Customer service never answered my emails.", "neg"),
]

TEST = {
    "en": [
        ("en-t01", "Works fine, would buy again.", "pos"),
        ("en-t02", "Cracked screen out of the box.", "neg"),
        ("en-t03", "Lovely fabric and good stitching.", "pos"),
        ("en-t04", "Arrived late and damaged.", "neg"),
    ],
    "sw": [
        ("sw-001", "Bidhaa nzuri sana, naipenda.", "pos"),
        ("sw-002", "Imeharibika baada ya wiki moja.", "neg"),
        ("sw-003", "Betri inadumu muda mrefu.", "pos"),
        ("sw-004", "Rangi imefifia haraka.", "neg"),
        ("sw-005", "Viatu vizuri na vyepesi.", "pos"),
        ("sw-006", "Huduma mbaya kwa wateja.", "neg"),
        ("sw-007", "Nimefurahi na ununuzi huu.", "pos"),
        ("sw-008", "Ni ndogo kuliko ilivyoelezwa.", "neg"),
    ],
    "ur": [
        ("ur-001", "بہت اچھی چیز ہے، مجھے پسند آئی۔", "pos"),
        ("ur-002", "دو دن میں خراب ہو گئی۔", "neg"),
        ("ur-003", "آواز بہت صاف ہے۔", "pos"),
        ("ur-004", "پیکنگ ٹوٹی ہوئی تھی۔", "neg"),
        ("ur-005", "قیمت کے حساب سے زبردست۔", "pos"),
        ("ur-006", "بیٹری جلدی ختم ہو جاتی ہے۔", "neg"),
        ("ur-007", "بچوں کو بہت پسند آیا۔", "pos"),
        ("ur-008", "رنگ تصویر سے مختلف ہے۔", "neg"),
    ],
}


# Label-balanced sets for the majority baseline (2, 4 and 3 classes).
BALANCED = {
    "amazon": [(["Nice."], "pos"), (["Bad."], "neg"), (["Fine."], "pos"), (["Awful."], "neg")],
    "agnews": [
        (["Talks resume in Geneva."], "World"), (["Late goal wins the cup."], "Sports"),
        (["Shares close higher."], "Business"), (["New chip ships."], "Tech"),
        (["Floods hit the coast."], "World"), (["Coach resigns."], "Sports"),
        (["Bank cuts rates."], "Business"), (["App update delayed."], "Tech"),
    ],
    "xnli": [
        (["A man sleeps.", "A person rests."], "entailment"), (["A man sleeps.", "He is tired."], "neutral"),
        (["A man sleeps.", "A man runs."], "contradiction"), (["Kids play.", "Children play."], "entailment"),
        (["Kids play.", "It is noon."], "neutral"), (["Kids play.", "Nobody plays."], "contradiction"),
    ],
}


def sha(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def unit(v):
    n = math.sqrt(sum(x * x for x in v))
    return [x / n for x in v]


def vector(rng, label, strength):
    # Dimension 0 carries the sentiment; the rest is noise.
    v = [rng.gauss(0.0, 1.0) for _ in range(DIM)]
    v[0] += strength if label == "pos" else -strength
    return unit(v)


def fill(sample_text, word):
    return PATTERN.replace("[X]", sample_text).replace("[MASK]", word)


def masked(sample_text):
    return PATTERN.replace("[X]", sample_text)


def toy_scores(prompt):
    # More "great" than "terrible" in the contexts pushes toward "great";
    # a hash-derived jitter breaks ties. Mass sums to 0.9, not 1.
    # The masked input still reads "[MASK].", so only filled contexts count.
    n_pos = prompt.count(" " + WORDS["pos"] + ".")
    n_neg = prompt.count(" " + WORDS["neg"] + ".")
    jitter = int(sha(prompt)[:8], 16) / 0xFFFFFFFF - 0.5
    p = min(0.95, max(0.05, 0.5 + 0.15 * (n_pos - n_neg) + 0.3 * jitter))
    return {WORDS["neg"]: round(0.9 * (1.0 - p), 6), WORDS["pos"]: round(0.9 * p, 6)}


def jsonl(path, rows):
    path.write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows), encoding="utf-8")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20231019)

    for task, rows in BALANCED.items():
        jsonl(OUT / f"balanced_{task}.jsonl",
              [{"id": f"{task}-{i:02d}", "segments": seg, "language": "xx", "label": lab} for i, (seg, lab) in enumerate(rows)])

    hrl_vec = {sid: vector(rng, lab, 1.5) for sid, _, lab in HRL}
    test_vec = {lang: {sid: vector(rng, lab, 1.5) for sid, _, lab in rows} for lang, rows in TEST.items()}

    jsonl(OUT / "hrl.jsonl", [{"id": s, "segments": [t], "language": "en", "label": l} for s, t, l in HRL])
    for lang, rows in TEST.items():
        jsonl(OUT / f"test_{lang}.jsonl", [{"id": s, "segments": [t], "language": lang, "label": l} for s, t, l in rows])

    def tsv(path, vecs):
        path.write_text("".join(f"{k}\t{','.join(f'{x:.6f}' for x in v)}\n" for k, v in vecs.items()))

    tsv(OUT / "hrl_index.tsv", hrl_vec)
    # "ur" queries come from the scorer's embed table instead of a file.
    for lang in ("en", "sw"):
        tsv(OUT / f"queries_{lang}.tsv", test_vec[lang])

    prompts = set()
    hrl_text = {s: t for s, t, _ in HRL}
    for sid, text, _ in HRL:
        prompts.add(masked(text))  # self-prediction
    for lang, rows in TEST.items():
        for sid, text, _ in rows:
            q = test_vec[lang][sid]
            prompts.add(masked(text))  # Direct
            for h in hrl_text:  # single contexts, any label (BoR and Random)
                for lab in WORDS:
                    prompts.add(fill(hrl_text[h], WORDS[lab]) + SEP + masked(text))
            ranked = sorted(hrl_text, key=lambda h: (-sum(a * b for a, b in zip(q, hrl_vec[h])), list(hrl_text).index(h)))
            for k in range(1, K_MAX + 1):  # concatenated top-k, any labeling
                for labs in itertools.product(WORDS, repeat=k):
                    ctx = [fill(hrl_text[h], WORDS[l]) for h, l in zip(ranked[:k], labs)]
                    prompts.add(SEP.join(ctx + [masked(text)]))

    lines = [{"prompt_sha256": sha(p), "scores": toy_scores(p)} for p in sorted(prompts)]
    for sid, text, _ in TEST["ur"]:
        lines.append({"text_sha256": sha(text), "vector": [round(x, 6) for x in test_vec["ur"][sid]]})
    jsonl(OUT / "scores.jsonl", lines)

    config = {
        "task": "../../tasks/amazon.json",
        "hrl_corpus": "hrl.jsonl",
        "index": "hrl_index.tsv",
        "hrl_language": "en",
        "test_sets": [
            {"language": "en", "corpus": "test_en.jsonl", "queries": "queries_en.tsv"},
            {"language": "sw", "corpus": "test_sw.jsonl", "queries": "queries_sw.tsv"},
            {"language": "ur", "corpus": "test_ur.jsonl"},
        ],
        "scorer": "fixture:scores.jsonl",
        "mode": "both",
        "strategy": "bor",
        "k": [1, 3],
        "pattern": 2,
        "seed": 7,
        "output_dir": "../../build/toy_run",
    }
    (OUT / "eval.json").write_text(json.dumps(config, indent=2) + "\n")
    print(f"{len(prompts)} prompts, {len(TEST['ur'])} embed vectors -> {OUT}")


if __name__ == "__main__":
    main()
