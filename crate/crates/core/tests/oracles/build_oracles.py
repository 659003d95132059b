"""Freezes reference values for the metric and retrieval fixtures.

chrF and BLEU are computed twice, with sacrebleu and with the small
from-definition implementations below; the script refuses to write unless
both agree. BM25 scores come from a direct transcription of the formula.

    python3 crates/core/tests/oracles/build_oracles.py
"""
import json
import math
import os
import re
from collections import Counter

import sacrebleu
from sacrebleu.metrics import BLEU, CHRF

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "..", "fixtures", "oracles")

PAIRS = [
    ("The cat sat on the mat.", "The cat sat on the mat."),
    ("The cat is on the mat.", "The cat sat on the mat."),
    ("A dog runs in the park.", "The cat sat on the mat."),
    ("", "The cat sat on the mat."),
    ("The government announced new measures on Monday.", "The government announced new economic measures on Monday."),
    ("Police arrested two men in Madrid.", "The police arrested two men in Madrid."),
    ("The train arrived late.", "The train arrived late at the station."),
    ("Bring water because the road is long and hot today.", "Bring water because the road is long."),
    ("It's 5 o'clock, isn't it?", "It is 5 o'clock, is it not?"),
    ("Prices rose in March (by 3.5%).", "Prices rose in March."),
    ("The weather is hot in summer and cold in winter.", "The weather is hot in summer and cold in winter."),
    ("weather hot summer cold winter", "The weather is hot in summer and cold in winter."),
    ("Okjí ok áfí plíko yo osoñztó.", "Esta es una frase de ejemplo."),
    ("Esta es una frase de ejemplo.", "Esta es una frase de ejemplo."),
    ("यह एक उदाहरण वाक्य है।", "यह एक उदाहरण वाक्य है।"),
    ("मर अष ऊफुरकश झुषम रे।", "यह एक उदाहरण वाक्य है।"),
    ("I do not understand this language.", "The museum is open every day."),
    ("museum", "The museum is open every day."),
    ("The the the the the the.", "The cat sat on the mat."),
    ("The children learn to read at school, and the teacher explains the lesson.", "The children learn to read at school."),
]


# chrF: character n-grams of the whitespace-stripped strings, n = 1..6,
# averaged over the orders that exist, F-beta with beta = 2.
def chrf_stats(hyp, ref, order=6):
    h, r = re.sub(r"\s", "", hyp), re.sub(r"\s", "", ref)
    stats = []
    for n in range(1, order + 1):
        hg = Counter(h[i:i + n] for i in range(len(h) - n + 1))
        rg = Counter(r[i:i + n] for i in range(len(r) - n + 1))
        stats.append((sum(hg.values()), sum(rg.values()), sum((hg & rg).values())))
    return stats


def chrf_from(stats, beta=2.0):
    prec, rec, eff = 0.0, 0.0, 0
    for hyp_n, ref_n, match in stats:
        if hyp_n > 0 and ref_n > 0:
            prec += match / hyp_n
            rec += match / ref_n
            eff += 1
    if eff == 0:
        return 0.0
    p, r = prec / eff, rec / eff
    if p + r == 0:
        return 0.0
    b2 = beta * beta
    return 100 * (1 + b2) * p * r / (b2 * p + r)


def chrf(hyp, ref):
    return chrf_from(chrf_stats(hyp, ref))


# BLEU: 13a tokens, clipped n-gram precision n = 1..4, geometric mean over the
# leading orders that have candidates, brevity penalty, no smoothing.
def tok13a(line):
    line = line.replace("<skipped>", "").replace("-\n", "").replace("\n", " ")
    if "&" in line:
        line = line.replace("&quot;", '"').replace("&amp;", "&").replace("&lt;", "<").replace("&gt;", ">")
    line = f" {line} "
    line = re.sub(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])", r" \1 ", line)
    line = re.sub(r"([^0-9])([\.,])", r"\1 \2 ", line)
    line = re.sub(r"([\.,])([^0-9])", r" \1 \2", line)
    line = re.sub(r"([0-9])(-)", r"\1 \2 ", line)
    return line.split()


def bleu_stats(hyp, ref):
    h, r = tok13a(hyp), tok13a(ref)
    correct, total = [], []
    for n in range(1, 5):
        hg = Counter(tuple(h[i:i + n]) for i in range(len(h) - n + 1))
        rg = Counter(tuple(r[i:i + n]) for i in range(len(r) - n + 1))
        correct.append(sum((hg & rg).values()))
        total.append(max(len(h) - n + 1, 0))
    return correct, total, len(h), len(r)


def bleu_from(correct, total, hl, rl):
    if hl == 0 and rl == 0:
        return 100.0
    eff = 0
    for t in total:
        if t > 0:
            eff += 1
        else:
            break
    if eff == 0 or any(correct[i] == 0 for i in range(eff)):
        return 0.0
    logp = sum(math.log(correct[i] / total[i]) for i in range(eff)) / eff
    bp = 1.0 if hl >= rl else math.exp(1 - rl / hl)
    return 100 * bp * math.exp(logp)


def bleu(hyp, ref):
    return bleu_from(*bleu_stats(hyp, ref))


def corpus(pairs):
    cs = [[0, 0, 0] for _ in range(6)]
    bc, bt, hl, rl = [0] * 4, [0] * 4, 0, 0
    for hyp, ref in pairs:
        for i, s in enumerate(chrf_stats(hyp, ref)):
            for j in range(3):
                cs[i][j] += s[j]
        c, t, h, r = bleu_stats(hyp, ref)
        bc = [a + b for a, b in zip(bc, c)]
        bt = [a + b for a, b in zip(bt, t)]
        hl, rl = hl + h, rl + r
    return chrf_from(cs), bleu_from(bc, bt, hl, rl)


def check(name, mine, ref, tol=1e-6):
    if abs(mine - ref) > tol:
        raise SystemExit(f"{name}: independent {mine} vs sacrebleu {ref}")


def metrics():
    chrf_metric = CHRF()
    bleu_metric = BLEU(smooth_method="none", effective_order=True)
    rows = []
    for i, (hyp, ref) in enumerate(PAIRS):
        c, b = chrf(hyp, ref), bleu(hyp, ref)
        if hyp.strip():
            check(f"chrf[{i}]", c, chrf_metric.sentence_score(hyp, [ref]).score)
            check(f"bleu[{i}]", b, bleu_metric.sentence_score(hyp, [ref]).score)
        rows.append({"hypothesis": hyp, "reference": ref, "chrf": round(c, 6), "bleu": round(b, 6)})
    hyps, refs = [p[0] for p in PAIRS], [p[1] for p in PAIRS]
    cc, cb = corpus(PAIRS)
    check("corpus chrf", cc, CHRF().corpus_score(hyps, [refs]).score)
    check("corpus bleu", cb, BLEU(smooth_method="none").corpus_score(hyps, [refs]).score)
    with open(os.path.join(OUT, "metric_pairs.jsonl"), "w") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")
    with open(os.path.join(OUT, "metric_corpus.json"), "w") as f:
        json.dump({"chrf": round(cc, 6), "bleu": round(cb, 6)}, f, indent=2)
        f.write("\n")


BM25_DOCS = [
    ("d1", "el perro come carne"),
    ("d2", "el gato duerme en la casa"),
    ("d3", "el perro y el gato viven en la casa"),
    ("d4", "la casa tiene cuatro ventanas y una puerta"),
    ("d5", "los peces viven en el agua del río"),
]
BM25_QUERIES = ["el perro duerme en la casa", "gato", "viven en el agua", "ventanas de la casa", "avión"]


def bm25(docs, query, k1=1.5, b=0.75):
    toks = {i: t.split() for i, t in docs}
    n = len(docs)
    avgdl = sum(len(t) for t in toks.values()) / n
    out = []
    for i, t in toks.items():
        tf = Counter(t)
        s = 0.0
        for term in sorted(set(query.split())):
            df = sum(1 for d in toks.values() if term in d)
            if tf[term] == 0:
                continue
            idf = math.log((n - df + 0.5) / (df + 0.5) + 1)
            s += idf * tf[term] * (k1 + 1) / (tf[term] + k1 * (1 - b + b * len(t) / avgdl))
        out.append((i, s))
    out.sort(key=lambda x: (-x[1], x[0]))
    return out


def retrieval():
    with open(os.path.join(OUT, "bm25.json"), "w") as f:
        json.dump({
            "docs": [{"id": i, "text": t} for i, t in BM25_DOCS],
            "queries": [
                {"query": q, "ranking": [{"id": i, "score": round(s, 9)} for i, s in bm25(BM25_DOCS, q)]}
                for q in BM25_QUERIES
            ],
        }, f, indent=2, ensure_ascii=False)
        f.write("\n")


if __name__ == "__main__":
    os.makedirs(OUT, exist_ok=True)
    metrics()
    retrieval()
    print("oracles written with sacrebleu", sacrebleu.__version__)
