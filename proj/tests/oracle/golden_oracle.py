"""Independent check of the committed golden run.

Recomputes every per-sample metric from the stored summaries and the corpus
targets with a separate Python implementation (tokenizer, hashed Gaussian
embeddings, BLEU, ROUGE-L, greedy-matching BERTScore, mean-vector cosine),
then re-derives the aggregate and comparison tables from those values.

Usage: golden_oracle.py <repo root>
"""

import json
import math
import sys
from collections import Counter
from pathlib import Path

MASK = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
SEED = 17
DIM = 64
TOL = 1e-9
EDGE = set(".,;:!?()\"'[]")
BUCKETS = ("short", "medium", "long")
PASSAGE_LIMITS = (39, 92)


def mix64(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def fnv1a64(data):
    h = 0xCBF29CE484222325
    for byte in data:
        h = ((h ^ byte) * 0x100000001B3) & MASK
    return h


def embed(token, seed=SEED, dim=DIM):
    key = mix64(fnv1a64(token.encode()) ^ mix64(seed))
    vec = []
    for i in range(0, dim, 2):
        a = mix64((key + (i + 1) * GAMMA) & MASK)
        b = mix64((key + (i + 2) * GAMMA) & MASK)
        u1 = ((a >> 11) + 1) * 2.0**-53
        u2 = (b >> 11) * 2.0**-53
        r = math.sqrt(-2.0 * math.log(u1))
        vec.append(r * math.cos(2 * math.pi * u2))
        if i + 1 < dim:
            vec.append(r * math.sin(2 * math.pi * u2))
    norm = math.sqrt(sum(x * x for x in vec))
    return [x / norm for x in vec]


def tokenize(text):
    out = []
    for word in text.split():
        lead = len(word) - len(word.lstrip("".join(EDGE)))
        core = word.strip("".join(EDGE))
        trail = len(word) - lead - len(core) if core else 0
        out.extend(word[:lead])
        if core:
            out.append(core.lower())
            out.extend(word[len(word) - trail:] if trail else "")
    return out


def bleu(cand, ref, order=4, eps=1e-9):
    if not cand or not ref:
        return 0.0
    n_max = min(order, len(cand))
    log_sum = 0.0
    for n in range(1, n_max + 1):
        c = Counter(tuple(cand[i:i + n]) for i in range(len(cand) - n + 1))
        r = Counter(tuple(ref[i:i + n]) for i in range(len(ref) - n + 1))
        p = sum((c & r).values()) / (len(cand) - n + 1)
        log_sum += math.log(p if p > 0 else eps) / n_max
    bp = 1.0 if len(cand) > len(ref) else math.exp(1 - len(ref) / len(cand))
    return bp * math.exp(log_sum)


def lcs(a, b):
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i, x in enumerate(a, 1):
        for j, y in enumerate(b, 1):
            table[i][j] = table[i - 1][j - 1] + 1 if x == y else max(table[i - 1][j], table[i][j - 1])
    return table[-1][-1]


def rouge_l(cand, ref):
    if not cand or not ref:
        return 0.0
    m = lcs(cand, ref)
    if m == 0:
        return 0.0
    p, r = m / len(cand), m / len(ref)
    return 2 * p * r / (p + r)


def cos(u, v):
    nu = math.sqrt(sum(x * x for x in u))
    nv = math.sqrt(sum(x * x for x in v))
    if nu == 0 or nv == 0:
        return 0.0
    return sum(x * y for x, y in zip(u, v)) / (nu * nv)


def semantic(cand, ref):
    if not cand or not ref:
        return 0.0, 0.0
    cv = [embed(t) for t in cand]
    rv = [embed(t) for t in ref]
    sims = [[cos(x, y) for y in rv] for x in cv]
    p = sum(max(row) for row in sims) / len(cv)
    r = sum(max(sims[i][j] for i in range(len(cv))) for j in range(len(rv))) / len(rv)
    f1 = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    mean = lambda vs: [sum(col) / len(vs) for col in zip(*vs)]
    return f1, cos(mean(cv), mean(rv))


def bucket_of(words):
    return BUCKETS[0] if words <= PASSAGE_LIMITS[0] else BUCKETS[1] if words <= PASSAGE_LIMITS[1] else BUCKETS[2]


def f4(x):
    s = f"{x:.4f}"
    return "0.0000" if s == "-0.0000" else s


def check_run(run_dir, corpus, failures):
    rows = [json.loads(line) for line in (run_dir / "scores.jsonl").read_text().splitlines() if line]
    if sorted(r["entry_id"] for r in rows) != sorted(corpus):
        failures.append(f"{run_dir.name}: entry ids differ from the corpus")
    values = []
    for row in rows:
        entry = corpus[row["entry_id"]]
        words = len(entry["inputs"].split())
        if row["input_words"] != words or row["bucket"] != bucket_of(words):
            failures.append(f"{run_dir.name}/{row['entry_id']}: bucketing")
        cand, ref = tokenize(row["summary"]), tokenize(entry["target"])
        f1, sim = semantic(cand, ref)
        expect = {"bleu": bleu(cand, ref), "rouge_l": rouge_l(cand, ref), "bert_score": f1, "spacy_similarity": sim}
        got = {"bleu": row["bleu"]["score"], "rouge_l": row["rouge_l"]["score"],
               "bert_score": row["bert_score"]["f1"], "spacy_similarity": row["spacy_similarity"]}
        for key in expect:
            if abs(expect[key] - got[key]) > TOL:
                failures.append(f"{run_dir.name}/{row['entry_id']}/{key}: oracle {expect[key]!r} vs {got[key]!r}")
        values.append((row["bucket"], expect))

    keys = ["bleu", "rouge_l", "bert_score", "spacy_similarity"]
    overall = {k: sum(v[k] for _, v in values) / len(values) for k in keys}
    agg = json.loads((run_dir / "aggregate.json").read_text())
    for k in keys:
        if f4(overall[k]) != f"{agg['overall'][k]:.4f}":
            failures.append(f"{run_dir.name}: overall {k}")
    for b in agg["buckets"]:
        members = [v for bucket, v in values if bucket == b["bucket"]]
        if len(members) != b["count"]:
            failures.append(f"{run_dir.name}: bucket {b['bucket']} count")
        for k in keys:
            if members and f4(sum(m[k] for m in members) / len(members)) != f"{b['means'][k]:.4f}":
                failures.append(f"{run_dir.name}: bucket {b['bucket']} {k}")
    labels = ["BLEU", "ROUGE-L", "BERT Score", "SpaCy Similarity"]
    csv = "metric,avg_score\n" + "".join(f"{l},{f4(overall[k])}\n" for l, k in zip(labels, keys))
    if (run_dir / "aggregate.csv").read_text() != csv:
        failures.append(f"{run_dir.name}: aggregate.csv")
    return agg["backend_id"], overall


def main(root):
    root = Path(root)
    golden = root / "tests" / "golden"
    corpus = {}
    for line in (root / "tests" / "data" / "mini_passage.jsonl").read_text().splitlines():
        if line.strip():
            rec = json.loads(line)
            corpus[rec["id"]] = rec

    failures = []
    id_a, a = check_run(golden / "extractive", corpus, failures)
    id_b, b = check_run(golden / "lead", corpus, failures)
    labels = ["BLEU", "ROUGE-L", "BERTScore", "SpaCy Similarity"]
    keys = ["bleu", "rouge_l", "bert_score", "spacy_similarity"]
    csv = f"metric,{id_a},{id_b}\n" + "".join(f"{l},{f4(a[k])},{f4(b[k])}\n" for l, k in zip(labels, keys))
    if (golden / "comparison" / "comparison.csv").read_text() != csv:
        failures.append("comparison.csv")

    for f in failures:
        print("MISMATCH", f)
    print(f"golden oracle: {len(failures)} mismatches")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parents[2]))
