"""Edit-distance kernel with a compiled fast path.

The Cython extension is used when it was built; otherwise the numpy fallback
takes over transparently. ``BACKEND`` reports which one is active, and
``backends()`` exposes both for the benchmark suite.
"""

from __future__ import annotations

try:
    from cskit.ter import _speedups as _kernel

    BACKEND = "compiled"
except ImportError:  # extension not built
    from cskit.ter import _pure as _kernel

    BACKEND = "python"

from cskit.ter.core import MAX_BLOCK_LEN, EditCounts, ter_counts

__all__ = ["BACKEND", "EditCounts", "MAX_BLOCK_LEN", "backends", "ter_counts"]


def backends() -> dict[str, object]:
    """All importable kernel backends, keyed by name."""
    from cskit.ter import _pure

    found: dict[str, object] = {"python": _pure}
    try:
        from cskit.ter import _speedups

        found["compiled"] = _speedups
    except ImportError:
        pass
    return found
