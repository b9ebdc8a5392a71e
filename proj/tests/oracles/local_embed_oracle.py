#!/usr/bin/env python3
"""Independent reimplementation of the local hashing embedder.

Prints the nonzero buckets of the 256-d vector for each argument, one
"bucket value" pair per line, so the C++ unit test can freeze them.
"""
import math
import re
import sys

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
DIM = 256


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def embed(text: str):
    tokens = [t for t in re.split(rb"[^0-9a-z]+", text.lower().encode()) if t]
    counts = [0] * DIM
    for t in tokens:
        counts[fnv1a64(t) % DIM] += 1
    norm = math.sqrt(sum(c * c for c in counts))
    if norm == 0:
        return counts
    return [c / norm for c in counts]


if __name__ == "__main__":
    for arg in sys.argv[1:]:
        print(f"# {arg}")
        for i, v in enumerate(embed(arg)):
            if v:
                print(f"{i} {v:.17g}")
