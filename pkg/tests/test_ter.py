"""Edit-rate kernel tests, checked against an independent brute-force oracle.

The oracle enumerates every shift sequence of length <= 2 (any block that
matches a contiguous run of the reference, moved anywhere) and minimizes
shifts + plain word-level Levenshtein, computed by its own DP. The curated
pair list below is frozen; both sides are recomputed at test time.
"""

import random

import numpy as np
import pytest

import cskit.ter as ter_backend
from cskit.editmetrics import EmptyReferenceError, TerResult, ter
from cskit.ter import backends, ter_counts

MAX_BLOCK = 10


def oracle_lev(a, b):
    m, n = len(a), len(b)
    d = list(range(n + 1))
    for i in range(1, m + 1):
        prev = d[0]
        d[0] = i
        for j in range(1, n + 1):
            cur = min(prev + (a[i - 1] != b[j - 1]), d[j] + 1, d[j - 1] + 1)
            prev = d[j]
            d[j] = cur
    return d[n]


def _all_shift_results(seq, ref):
    refsubs = set()
    for s in range(len(ref)):
        for e in range(s + 1, min(len(ref), s + MAX_BLOCK) + 1):
            refsubs.add(tuple(ref[s:e]))
    out = []
    for s in range(len(seq)):
        for length in range(1, min(MAX_BLOCK, len(seq) - s) + 1):
            block = tuple(seq[s : s + length])
            if block not in refsubs:
                continue
            reduced = seq[:s] + seq[s + length :]
            for dst in range(len(reduced) + 1):
                if dst == s:
                    continue
                out.append(reduced[:dst] + list(block) + reduced[dst:])
    return out


def oracle_edits(hyp, ref):
    """Minimum of shifts + Levenshtein over all shift sequences of length <= 2."""
    best = oracle_lev(hyp, ref)
    for once in _all_shift_results(hyp, ref):
        best = min(best, 1 + oracle_lev(once, ref))
        for twice in _all_shift_results(once, ref):
            best = min(best, 2 + oracle_lev(twice, ref))
    return best


CURATED = [
    (['a'], ['a']),
    (['a', 'b', 'c'], ['a', 'b', 'c']),
    (['a', 'b'], ['a', 'b', 'c']),
    (['a', 'b', 'c'], ['a', 'b']),
    (['x', 'b', 'c'], ['a', 'b', 'c']),
    (['a'], ['b']),
    (['b', 'a', 'c', 'd'], ['a', 'b', 'c', 'd']),
    (['a', 'b', 'c', 'd'], ['c', 'd', 'a', 'b']),
    (['c', 'a', 'b'], ['a', 'b', 'c']),
    (['a', 'a', 'b', 'b'], ['b', 'b', 'a', 'a']),
    (['a', 'b', 'a', 'b'], ['b', 'a', 'b', 'a']),
    (['d', 'a', 'b', 'c'], ['a', 'b', 'c', 'd']),
    (['a', 'x', 'c', 'b'], ['a', 'b', 'x', 'c']),
    (['a', 'b', 'c', 'd', 'e', 'f'], ['f', 'a', 'b', 'c', 'd', 'e']),
    (['a', 'b', 'c', 'x', 'e', 'f'], ['e', 'f', 'a', 'b', 'c', 'd']),
    (['d'], ['d', 'c', 'b', 'd']),
    (['d', 'd', 'a'], ['c', 'd']),
    (['c', 'a', 'b'], ['c', 'b', 'c', 'a', 'c']),
    (['d', 'b', 'd'], ['a']),
    (['c', 'c', 'b', 'a', 'c'], ['b', 'b', 'c', 'd']),
    (['c'], ['b', 'c', 'a', 'c']),
    (['a', 'a', 'b'], ['b', 'd', 'd', 'd']),
    (['b', 'c', 'a', 'd', 'b', 'b'], ['c', 'd', 'd', 'd', 'd']),
    (['a', 'c'], ['d', 'd']),
    (['c', 'b', 'b'], ['d', 'c', 'b', 'b', 'd', 'b']),
    (['c', 'd', 'a', 'c', 'd'], ['b', 'a', 'd', 'c']),
    (['c', 'd', 'a'], ['a', 'a', 'c', 'd']),
    (['a', 'a'], ['d']),
    (['a', 'b', 'd', 'c', 'c'], ['c', 'b', 'b', 'd', 'a', 'd']),
    (['d'], ['b', 'c', 'a', 'c', 'c']),
    (['b', 'd', 'a', 'a', 'b'], ['b', 'd', 'c', 'c', 'a', 'c']),
    (['c', 'a', 'b', 'd', 'b', 'c'], ['a', 'a', 'b', 'a', 'b']),
    (['b', 'd', 'c', 'c', 'b', 'c'], ['d']),
    (['a', 'b'], ['b', 'd', 'b']),
    (['c', 'c', 'd', 'a'], ['c', 'c']),
    (['d', 'c', 'b', 'd'], ['d', 'c', 'd']),
    (['c', 'a', 'b', 'c', 'b', 'b'], ['b', 'a', 'c']),
    (['d', 'b', 'a', 'd', 'd', 'b'], ['d', 'b']),
    (['a', 'd', 'c', 'c'], ['c']),
    (['c', 'a'], ['d', 'c', 'b', 'a', 'c']),
    (['a', 'b', 'a', 'b'], ['b', 'a', 'c']),
    (['c', 'a', 'a', 'd'], ['b', 'd', 'd', 'd', 'a']),
    (['a', 'a', 'd'], ['b', 'c', 'a', 'd', 'b']),
    (['d', 'd'], ['c', 'b']),
    (['d', 'c', 'c', 'c', 'd'], ['d', 'c', 'c', 'c', 'b']),
    (['a'], ['c', 'd', 'c', 'd']),
    (['d', 'b', 'c', 'b'], ['c', 'b', 'd', 'a', 'b']),
    (['c', 'c', 'b', 'd', 'c', 'd'], ['b', 'c']),
    (['a'], ['a', 'd', 'a', 'a', 'c']),
    (['a', 'a', 'd', 'c'], ['a', 'b', 'c']),
]


def test_curated_set_size():
    assert len(CURATED) == 50


def test_greedy_matches_oracle_on_curated_set():
    for hyp, ref in CURATED:
        assert ter(hyp, ref).edits == oracle_edits(hyp, ref), (hyp, ref)


def test_identity_on_random_sequences():
    rng = random.Random(0)
    for _ in range(200):
        seq = [rng.choice("abcdefgh") for _ in range(rng.randint(1, 30))]
        r = ter(seq, seq)
        assert r.edits == 0 and r.ter == 0.0
        assert r.breakdown == {"ins": 0, "del": 0, "sub": 0, "shift": 0}


def test_single_deletion_is_one_insertion():
    ref = [f"w{i}" for i in range(10)]
    hyp = ref[:4] + ref[5:]
    r = ter(hyp, ref)
    assert r == TerResult(edits=1, ter=0.1, insertions=1, deletions=0, substitutions=0, shifts=0)


def test_block_swap_costs_one_shift():
    r = ter(["b", "a", "c", "d"], ["a", "b", "c", "d"])
    assert r.shifts == 1 and r.edits == 1 and r.ter == 0.25


def test_shifts_never_increase_edit_count():
    rng = random.Random(5)
    for _ in range(200):
        n1 = rng.randint(1, 14)
        n2 = rng.randint(1, 14)
        hyp = [rng.choice("abcde") for _ in range(n1)]
        ref = [rng.choice("abcde") for _ in range(n2)]
        assert ter(hyp, ref).edits <= oracle_lev(hyp, ref)


def test_empty_hypothesis_is_all_insertions():
    r = ter([], ["a", "b", "c"])
    assert r.insertions == 3 and r.ter == 1.0


def test_empty_reference_rejected():
    with pytest.raises(EmptyReferenceError):
        ter(["a"], [])


def test_ter_not_symmetric():
    hyp = ["a", "b", "c", "d", "e"]
    ref = ["a", "b"]
    assert ter(hyp, ref).ter != ter(ref, hyp).ter


def test_backends_agree():
    kernels = backends()
    rng = random.Random(99)
    for _ in range(150):
        hyp = [rng.randint(0, 6) for _ in range(rng.randint(0, 12))]
        ref = [rng.randint(0, 6) for _ in range(rng.randint(1, 12))]
        results = {name: ter_counts(hyp, ref, kernel=mod) for name, mod in kernels.items()}
        assert len(set(results.values())) == 1, (hyp, ref, results)


def test_bounded_distance_agrees_with_plain_dp():
    rng = random.Random(42)
    for name, mod in backends().items():
        for _ in range(500):
            a = [rng.randint(0, 4) for _ in range(rng.randint(0, 9))]
            b = [rng.randint(0, 4) for _ in range(rng.randint(0, 9))]
            true = oracle_lev(a, b)
            for limit in (0, 1, 2, 5, 20):
                got = mod.lev_distance_bounded(
                    np.asarray(a, np.int32), np.asarray(b, np.int32), limit
                )
                assert got == (true if true <= limit else limit + 1), (name, a, b, limit)


def test_align_counts_sum_to_distance():
    rng = random.Random(17)
    for name, mod in backends().items():
        for _ in range(300):
            a = [rng.randint(0, 4) for _ in range(rng.randint(0, 10))]
            b = [rng.randint(0, 4) for _ in range(rng.randint(0, 10))]
            dist, ins, dels, subs, aligned = mod.lev_align(
                np.asarray(a, np.int32), np.asarray(b, np.int32)
            )
            assert dist == oracle_lev(a, b)
            assert ins + dels + subs == dist
            for i, j in enumerate(aligned):
                if j >= 0:
                    assert a[i] == b[j], (name, a, b, i, j)


def test_active_backend_reported():
    assert ter_backend.BACKEND in ("compiled", "python")
