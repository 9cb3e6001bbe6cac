"""Greedy block-shift search on top of the edit-distance kernel.

A shift moves a contiguous block of the hypothesis (at most MAX_BLOCK_LEN
tokens) that exactly matches some contiguous run of the reference and that
contains at least one currently misaligned token. Each loop iteration applies
the single shift giving the largest distance reduction; ties go to the
smallest block, then the leftmost source position, then the leftmost
destination. The loop stops when no shift strictly reduces the distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_BLOCK_LEN = 10


@dataclass(frozen=True)
class EditCounts:
    insertions: int
    deletions: int
    substitutions: int
    shifts: int

    @property
    def total(self) -> int:
        return self.insertions + self.deletions + self.substitutions + self.shifts


def _ref_block_index(ref: list[int], max_block: int) -> set[tuple[int, ...]]:
    blocks: set[tuple[int, ...]] = set()
    n = len(ref)
    for s in range(n):
        for e in range(s + 1, min(n, s + max_block) + 1):
            blocks.add(tuple(ref[s:e]))
    return blocks


def _best_shift(kernel, hyp, ref_arr, aligned, dist, ref_blocks, max_block):
    """Return (new_dist, block_len, src, dst, new_seq) or None."""
    mis = np.flatnonzero(aligned < 0)
    if len(mis) == 0:
        return None
    mis_prefix = np.zeros(len(hyp) + 1, dtype=np.int32)
    mis_prefix[1:] = np.cumsum(aligned < 0)

    best = None
    best_seq = None
    for src in range(len(hyp)):
        for blen in range(1, min(max_block, len(hyp) - src) + 1):
            if mis_prefix[src + blen] == mis_prefix[src]:
                continue
            block = tuple(hyp[src : src + blen])
            if block not in ref_blocks:
                continue
            reduced = hyp[:src] + hyp[src + blen :]
            for dst in range(len(reduced) + 1):
                if dst == src:
                    continue
                cand_seq = reduced[:dst] + list(block) + reduced[dst:]
                # cap at best[0] (not below) so equal-distance candidates stay
                # exact and tie-breaking can compare them
                bound = dist - 1 if best is None else min(dist - 1, best[0])
                nd = kernel.lev_distance_bounded(
                    np.asarray(cand_seq, dtype=np.int32), ref_arr, bound
                )
                if nd > bound:
                    continue
                cand = (nd, blen, src, dst)
                if best is None or cand < best:
                    best = cand
                    best_seq = cand_seq
    if best is None:
        return None
    return (*best, best_seq)


def ter_counts(hyp_ids, ref_ids, max_block: int = MAX_BLOCK_LEN, kernel=None) -> EditCounts:
    """Edit counts turning ``hyp_ids`` into ``ref_ids`` (shifts count as one edit)."""
    if kernel is None:
        from cskit.ter import _kernel

        kernel = _kernel
    hyp = [int(t) for t in hyp_ids]
    ref = [int(t) for t in ref_ids]
    ref_arr = np.asarray(ref, dtype=np.int32)
    ref_blocks = _ref_block_index(ref, max_block)

    shifts = 0
    dist, n_ins, n_del, n_sub, aligned = kernel.lev_align(
        np.asarray(hyp, dtype=np.int32), ref_arr
    )
    while dist > 0:
        found = _best_shift(kernel, hyp, ref_arr, aligned, dist, ref_blocks, max_block)
        if found is None:
            break
        hyp = found[4]
        shifts += 1
        dist, n_ins, n_del, n_sub, aligned = kernel.lev_align(
            np.asarray(hyp, dtype=np.int32), ref_arr
        )
    return EditCounts(insertions=n_ins, deletions=n_del, substitutions=n_sub, shifts=shifts)
