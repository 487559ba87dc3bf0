#!/usr/bin/env python3
"""Train the small bundled BPE vocabulary used by tests and examples.

Produces vocab.json ({token: id}) and merges.txt ("left right" per line,
rank = line order). Words are whitespace runs prefixed with U+2581, the
same pre-tokenization the C++ tokenizer applies.

    python3 tools/train_bpe.py --merges 3000 --out data/tokenizer data/langid/train/*.txt
"""
import argparse
import collections
import json
import os

WORD_PREFIX = "▁"
SPECIALS = ["<unk>", "<s>", "</s>"]


def words_of(text):
    return text.split()


def train(paths, n_merges):
    freq = collections.Counter()
    for p in paths:
        with open(p, encoding="utf-8") as f:
            for w in words_of(f.read()):
                freq[w] += 1

    words = {w: [WORD_PREFIX] + list(w) for w in freq}
    alphabet = sorted({s for syms in words.values() for s in syms})
    merges = []
    for _ in range(n_merges):
        pairs = collections.Counter()
        for w, syms in words.items():
            c = freq[w]
            for a, b in zip(syms, syms[1:]):
                pairs[(a, b)] += c
        if not pairs:
            break
        best_count = max(pairs.values())
        if best_count < 2:
            break
        # deterministic tie-break: lexicographically smallest pair
        best = min(p for p, c in pairs.items() if c == best_count)
        merges.append(best)
        merged = best[0] + best[1]
        for w, syms in words.items():
            out = []
            i = 0
            while i < len(syms):
                if i + 1 < len(syms) and syms[i] == best[0] and syms[i + 1] == best[1]:
                    out.append(merged)
                    i += 2
                else:
                    out.append(syms[i])
                    i += 1
            words[w] = out

    vocab = {}
    for s in SPECIALS:
        vocab[s] = len(vocab)
    for b in range(256):
        vocab["<0x%02X>" % b] = len(vocab)
    for s in alphabet:
        vocab.setdefault(s, len(vocab))
    for a, b in merges:
        vocab.setdefault(a + b, len(vocab))
    return vocab, merges


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--merges", type=int, default=3000)
    ap.add_argument("--out", required=True)
    ap.add_argument("inputs", nargs="+")
    args = ap.parse_args()
    vocab, merges = train(args.inputs, args.merges)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "vocab.json"), "w", encoding="utf-8") as f:
        json.dump(vocab, f, ensure_ascii=False, indent=0, sort_keys=False)
        f.write("\n")
    with open(os.path.join(args.out, "merges.txt"), "w", encoding="utf-8") as f:
        f.write("#version: 1\n")
        for a, b in merges:
            f.write(f"{a} {b}\n")
    print(f"vocab={len(vocab)} merges={len(merges)}")


if __name__ == "__main__":
    main()
