"""Deterministic command provider for tests.

A question is answered correctly when ``sigmoid(bias + sum(w[k] * mask[k]))``
exceeds a per-question threshold drawn from its id, so category accuracy is a
smooth function of the included clusters. Cluster weights are planted per
category from a fixed seed.
"""

import argparse
import hashlib
import json
import math

import numpy as np


def weights(category, n_clusters):
    seed = int.from_bytes(hashlib.sha256(category.encode()).digest()[:8], "little")
    return np.random.default_rng(seed).normal(0.0, 0.3, n_clusters)


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--mask", required=True)
    p.add_argument("--stimuli", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--answers", required=True)
    args = p.parse_args()
    mask = np.array([int(c) for c in open(args.mask).read().strip()], dtype=float)
    answers = {}
    with open(args.answers) as fh:
        for line in fh:
            d = json.loads(line)
            answers[d["question_id"]] = (d["answer"], d["category"])
    with open(args.output, "w") as out, open(args.stimuli) as fh:
        for line in fh:
            q = json.loads(line)
            answer, category = answers[q["question_id"]]
            z = weights(category, len(mask)) @ mask
            u = int(hashlib.sha256(q["question_id"].encode()).hexdigest()[:8], 16) / 2**32
            pred = answer if 1 / (1 + math.exp(-z)) > u else "unknown"
            out.write(json.dumps({"question_id": q["question_id"], "prediction": pred}) + "\n")


if __name__ == "__main__":
    main()
