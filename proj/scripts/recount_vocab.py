#!/usr/bin/env python3
"""Recount the vocabulary of a TSV dataset directory (train.tsv / test.tsv).

Written from the cleaning convention alone, without reusing the C++ code, so
that build-graph's n_word can be checked against it.
"""
import argparse
import collections
import os
import re
import sys

DROP = re.compile(rb"[^a-z0-9,.!?'()]")
CONTRACTIONS = [b"'s", b"'ve", b"n't", b"'re", b"'d", b"'ll"]
SPLIT_OFF = [b",", b"!", b"(", b")", b"?"]


def clean(text):
    s = DROP.sub(b" ", text.lower())
    for c in CONTRACTIONS:
        s = s.replace(c, b" " + c)
    for p in SPLIT_OFF:
        s = s.replace(p, b" " + p + b" ")
    return s.split()


def documents(directory):
    for name in ("train.tsv", "test.tsv"):
        with open(os.path.join(directory, name), "rb") as f:
            for raw in f:
                line = raw.rstrip(b"\n").rstrip(b"\r")
                if not line:
                    continue
                label, sep, text = line.partition(b"\t")
                if not sep:
                    raise ValueError(f"{name}: line without a tab")
                yield text


def main():
    here = os.path.dirname(os.path.abspath(__file__))
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("dataset_dir")
    ap.add_argument("--min-freq", type=int, default=5)
    ap.add_argument("--stopwords", default=os.path.join(here, "..", "data", "stopwords_en.txt"))
    ap.add_argument("--keep-stopwords", action="store_true")
    args = ap.parse_args()

    counts = collections.Counter()
    n_doc = 0
    for text in documents(args.dataset_dir):
        counts.update(clean(text))
        n_doc += 1
    stop = set()
    if not args.keep_stopwords:
        with open(args.stopwords, "rb") as f:
            stop = {w.strip() for w in f if w.strip()}
    vocab = [w for w, c in counts.items() if c >= args.min_freq and w not in stop]
    print(f"n_doc={n_doc} n_word={len(vocab)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
