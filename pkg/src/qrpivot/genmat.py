"""Generators for adversarial and random test matrices.

The Kahan family is the standard stress input for column-pivoted QR: every
column has unit norm, the matrix already carries the rank-revealing
structure exactly, and its graded diagonal makes the partial-norm tracking
work hard.  Random matrices use numpy's PCG64 generator (``default_rng``)
so that a seed replays bit-exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import real_dtype, working_dtype


@dataclass(frozen=True)
class KahanParams:
    """Order and cosine parameter of a Kahan matrix; ``s = sqrt(1 - c^2)``."""

    n: int
    c: float
    precision: str = "double"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"order must be >= 1, got {self.n}")
        if not 0.0 <= self.c <= 1.0:
            raise ValueError(f"c must lie in [0, 1], got {self.c}")
        if self.n > 1 and self.c == 1.0:
            raise ValueError("c = 1 gives s = 0, which needs n = 1")

    @property
    def s(self) -> float:
        dt = real_dtype(working_dtype(self.precision, "real")).type
        return float(np.sqrt(dt(1.0) - dt(self.c) * dt(self.c)))


def kahan(p: KahanParams) -> np.ndarray:
    """Upper-triangular Kahan matrix of order n.

    Entry (i, j), 0-based, is ``s**i`` on the diagonal and ``-c * s**i``
    strictly above it; the strict lower triangle is exactly zero.  Built
    from the closed form rather than the 2x2 block recursion, which gives
    the same matrix without intermediate allocations.
    """
    dt = working_dtype(p.precision, "real")
    rdt = dt.type
    n = p.n
    spow = rdt(p.s) ** np.arange(n, dtype=dt)
    k = np.triu(np.outer(spow, np.full(n, -rdt(p.c), dtype=dt)), 1)
    np.fill_diagonal(k, spow)
    return np.asfortranarray(k)


def symmetrized_kahan(p: KahanParams) -> np.ndarray:
    """``K + K^T``: the symmetric stress input with diagonal ``2 * s**i``."""
    k = kahan(p)
    return np.asfortranarray(k + k.T)


def random_gaussian(m: int, n: int, field: str = "real", seed: int = 0,
                    precision: str = "double") -> np.ndarray:
    """i.i.d. standard Gaussian matrix; complex entries have E|a_ij|^2 = 1.

    Real and imaginary parts are drawn as two consecutive ``standard_normal``
    blocks from ``numpy.random.default_rng(seed)`` (PCG64) and scaled by
    ``1/sqrt(2)`` in the complex case, so the same seed always reproduces
    the same matrix bit for bit.
    """
    if m < 1 or n < 1:
        raise ValueError(f"matrix dimensions must be >= 1, got {m}x{n}")
    rng = np.random.default_rng(seed)
    dt = working_dtype(precision, field)
    a = rng.standard_normal((m, n))
    if field == "complex":
        a = (a + 1j * rng.standard_normal((m, n))) * np.sqrt(0.5)
    return np.asfortranarray(a.astype(dt))
