#!/usr/bin/env python3
"""Freeze expected masking selections for seeded fixture chunks.

Contains a standalone re-implementation of the documented selection procedure
(mode draw, then per-candidate uniforms or a word permutation with the 15%
budget); run once to produce tests/data/masking_fixture.json. The test suite
compares library output against the frozen file.
"""

import json
import os
import sys

import numpy as np

SPECIAL_IDS = {0, 1, 2, 3, 4}
P_MASK = 0.15
P_WWM = 0.2


def reference_select(ids, word_begin, rng):
    candidates = [p for p, t in enumerate(ids) if t not in SPECIAL_IDS]
    use_wwm = rng.random() < P_WWM
    if not candidates:
        return [], use_wwm
    if not use_wwm:
        draws = rng.random(len(candidates))
        return [p for p, u in zip(candidates, draws) if u < P_MASK], False
    groups = []
    for pos, begin in enumerate(word_begin):
        if begin or not groups:
            groups.append([pos])
        else:
            groups[-1].append(pos)
    cand = set(candidates)
    words = [[p for p in g if p in cand] for g in groups]
    words = [w for w in words if w]
    order = rng.permutation(len(words))
    budget = P_MASK * len(candidates)
    selected = []
    for wi in order:
        if budget > 0 and len(selected) < budget:
            selected.extend(words[wi])
        else:
            break
    return sorted(selected), True


def make_chunks(rng, n_chunks=8, length=32, vocab_size=40):
    chunks = []
    for _ in range(n_chunks):
        ids = rng.integers(5, vocab_size, size=length).tolist()
        # sprinkle in a few special positions
        for p in rng.integers(0, length, size=3):
            ids[p] = int(rng.integers(0, 5))
        word_begin = (rng.random(length) < 0.4).tolist()
        word_begin[0] = True
        chunks.append({"ids": ids, "word_begin": word_begin})
    return chunks


def main():
    seed = 1234
    gen = np.random.default_rng(99)
    chunks = make_chunks(gen)
    cases = []
    for case_seed in (seed, seed + 1, seed + 2):
        rng = np.random.default_rng(case_seed)
        expected = []
        for c in chunks:
            sel, wwm = reference_select(c["ids"], c["word_begin"], rng)
            # the keep-only replacement rule still draws one uniform per
            # selected position; consume them so chunk streams stay aligned
            for _ in sel:
                rng.random()
            expected.append({"selected": sel, "wwm": wwm})
        cases.append({"seed": case_seed, "expected": expected})
    out = {"p_mask": P_MASK, "p_wwm": P_WWM, "special_ids": sorted(SPECIAL_IDS),
           "chunks": chunks, "cases": cases}
    path = os.path.join(os.path.dirname(__file__), "..", "tests", "data",
                        "masking_fixture.json")
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(out, f, indent=1)
    print(f"wrote {os.path.normpath(path)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
