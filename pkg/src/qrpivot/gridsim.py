"""Deterministic simulation of process-grid arithmetic ordering.

Block-cyclic distribution changes the order in which a vector's entries are
accumulated and the order in which per-process results are reduced, so the
same input can round differently under different grid topologies.  This
module reproduces that ordering effect sequentially: no actual message
passing, just a fixed partition and a fixed left-leaning combine tree.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import combine_sumsq, norm_from_sumsq, scaled_sumsq


@dataclass(frozen=True)
class GridTopology:
    """Process grid shape and block-cyclic block sizes."""

    nprow: int = 1
    npcol: int = 1
    mb: int = 32
    nb: int = 32

    def __post_init__(self):
        for name in ("nprow", "npcol", "mb", "nb"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")

    @classmethod
    def parse(cls, grid: str, mb: int = 32, nb: int = 32) -> "GridTopology":
        """Parse an ``RxC`` string such as ``6x4``."""
        try:
            r, c = grid.lower().split("x")
            return cls(nprow=int(r), npcol=int(c), mb=mb, nb=nb)
        except (ValueError, AttributeError):
            raise ValueError(f"grid must look like 'RxC', got {grid!r}") from None

    def __str__(self):
        return f"{self.nprow}x{self.npcol}"


def _tree_combine(parts, combine):
    # Left-leaning binary tree over process rank: (((p0 . p1) . p2) . p3).
    acc = parts[0]
    for p in parts[1:]:
        acc = combine(acc, p)
    return acc


def distributed_norm(x: np.ndarray, topo: GridTopology, first_index: int = 0) -> float:
    """Euclidean norm of ``x`` as a block-cyclic grid would compute it.

    Entry ``i`` of ``x`` carries global index ``first_index + i`` and is
    owned by process row ``(index // mb) % nprow``.  Each owner accumulates
    its entries in index order with the same scaled one-pass kernel used by
    ``column_norm``; the per-owner results are then merged in a fixed tree
    order.  A 1x1 topology is bit-identical to ``column_norm``.
    """
    x = np.asarray(x)
    if topo.nprow == 1:
        s, q = scaled_sumsq(x)
        return norm_from_sumsq(s, q)
    owner = ((np.arange(first_index, first_index + x.shape[0]) // topo.mb)
             % topo.nprow)
    parts = [scaled_sumsq(x[owner == g]) for g in range(topo.nprow)]
    s, q = _tree_combine(parts, lambda a, b: combine_sumsq(a[0], a[1], b[0], b[1]))
    return norm_from_sumsq(s, q)


def distributed_argmax(values: np.ndarray, topo: GridTopology,
                       first_index: int = 0) -> int:
    """Index of the maximum as a block-cyclic grid reduction finds it.

    Value ``i`` has global column index ``first_index + i`` and is owned by
    process column ``(index // nb) % npcol``.  Each owner takes its first
    local maximum; owners are merged in tree order, the earlier subtree
    winning exact ties.  A 1x1 topology reproduces the sequential
    lowest-index argmax.  Returns a local index into ``values``.
    """
    values = np.asarray(values)
    if values.shape[0] == 0:
        raise ValueError("argmax of empty value array")
    if topo.npcol == 1:
        return int(np.argmax(values))
    owner = ((np.arange(first_index, first_index + values.shape[0]) // topo.nb)
             % topo.npcol)
    parts = []
    for g in range(topo.npcol):
        (local_idx,) = np.nonzero(owner == g)
        if local_idx.size == 0:
            continue
        best = local_idx[int(np.argmax(values[local_idx]))]
        parts.append((values[best], int(best)))
    val, idx = _tree_combine(parts, lambda a, b: a if a[0] >= b[0] else b)
    return idx
