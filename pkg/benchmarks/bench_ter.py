#!/usr/bin/env python3
"""Benchmark the compiled edit-distance kernel against the numpy fallback.

Builds a synthetic corpus of generation/post-edit pairs at realistic scale
(substitutions plus one block move per pair) and times a full edit-effort
pass through each backend.

    python benchmarks/bench_ter.py [--pairs 324] [--tokens 45]
"""

import argparse
import random
import time

from cskit.ter import backends, ter_counts


def make_pairs(n_pairs: int, n_tokens: int, seed: int = 0):
    rng = random.Random(seed)
    pairs = []
    for _ in range(n_pairs):
        ref = [rng.randint(0, 500) for _ in range(n_tokens)]
        hyp = list(ref)
        for _ in range(max(1, n_tokens // 8)):
            hyp[rng.randrange(len(hyp))] = rng.randint(0, 500)
        block_len = rng.randint(2, 4)
        src = rng.randrange(0, len(hyp) - block_len)
        block = hyp[src : src + block_len]
        del hyp[src : src + block_len]
        dst = rng.randrange(0, len(hyp) + 1)
        hyp[dst:dst] = block
        pairs.append((hyp, ref))
    return pairs


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pairs", type=int, default=324)
    parser.add_argument("--tokens", type=int, default=45)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    pairs = make_pairs(args.pairs, args.tokens)
    available = backends()
    print(f"corpus: {args.pairs} pairs x {args.tokens} tokens, best of {args.repeats} runs\n")
    timings = {}
    for name, kernel in available.items():
        best = float("inf")
        checksum = None
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            total = 0
            for hyp, ref in pairs:
                total += ter_counts(hyp, ref, kernel=kernel).total
            best = min(best, time.perf_counter() - t0)
            if checksum is None:
                checksum = total
            elif checksum != total:
                raise AssertionError(f"non-deterministic result from backend {name}")
        timings[name] = (best, checksum)
        print(f"  {name:>9}: {best:8.3f}s  ({args.pairs / best:7.1f} pairs/s, edit checksum {checksum})")

    checksums = {c for _, c in timings.values()}
    if len(checksums) != 1:
        raise AssertionError(f"backends disagree: {timings}")
    if {"compiled", "python"} <= timings.keys():
        speedup = timings["python"][0] / timings["compiled"][0]
        print(f"\n  compiled kernel speedup: {speedup:.1f}x")
    else:
        print("\n  compiled kernel not built; only the fallback was timed")


if __name__ == "__main__":
    main()
