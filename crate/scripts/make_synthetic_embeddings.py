#!/usr/bin/env python3
"""Writes a synthetic embedding file for a dataset and prediction file.

Each cluster gets a random centre; its reference answers sit close to it.
A predicted answer is placed near the centre of the first cluster with which
it shares a lowercase word, otherwise far away from every centre. The output
follows the embedding file format read by `rankclust evaluate --embeddings`.

    make_synthetic_embeddings.py DATASET PREDICTIONS OUT [--dim 8] [--seed 0]
"""
import argparse
import json
import random
import re


def words(s):
    return set(re.findall(r"[a-z0-9']+", s.lower())) - {"the", "a", "an", "of", "to", "and"}


def vec_near(rng, centre, spread):
    return [c + rng.gauss(0.0, spread) for c in centre]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("dataset")
    ap.add_argument("predictions")
    ap.add_argument("out")
    ap.add_argument("--dim", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = random.Random(args.seed)

    records = [json.loads(l) for l in open(args.dataset) if l.strip()]
    preds = {}
    for l in open(args.predictions):
        if l.strip():
            p = json.loads(l)
            preds[p["id"]] = p["ranked_answers"]

    lines = []
    for rec in records:
        qid = rec["id"]
        seen = set()
        centres = []
        for cl in rec["clusters"]:
            centre = [rng.uniform(-10, 10) for _ in range(args.dim)]
            centres.append((cl, centre))
            for a in cl["answers"]:
                if a not in seen:
                    seen.add(a)
                    lines.append((qid, a, vec_near(rng, centre, 0.3)))
        for a in preds.get(qid, []):
            if a in seen:
                continue
            seen.add(a)
            home = next((c for cl, c in centres if any(words(a) & words(m) for m in cl["answers"])), None)
            if home is None:
                v = [rng.choice([-1, 1]) * rng.uniform(60, 80) for _ in range(args.dim)]
            else:
                v = vec_near(rng, home, 0.3)
            lines.append((qid, a, v))

    with open(args.out, "w") as f:
        f.write("# synthetic embeddings for tests; not produced by a language model\n")
        f.write(f"{args.dim}\n")
        for qid, a, v in lines:
            f.write(f"{qid}\t{a}\t{' '.join(f'{x:.6f}' for x in v)}\n")


if __name__ == "__main__":
    main()
