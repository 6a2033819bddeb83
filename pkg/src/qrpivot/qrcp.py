"""Householder QR with column pivoting, parameterized by norm strategy.

Unblocked driver in the xGEQPF shape: at step k the column with the
largest running partial norm is swapped into position k, one reflector
zeroes it below the diagonal, and the tracker downdates the remaining
norms.  All strategy, injection, and topology behavior is delegated to
the StrategyConfig.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import apply_reflector_block, as_matrix, real_dtype
from .downdating import NormTracker, StrategyConfig, tracker_init, tracker_step
from .gridsim import GridTopology, distributed_argmax
from .householder import reflector_apply, reflector_generate


@dataclass(frozen=True)
class PivotedQRResult:
    """Packed factorization A[:, perm] = Q R.

    factors holds R in the upper triangle and the reflector vectors (unit
    leading entry implied) below the diagonal; taus has one coefficient
    per step.  perm[k] is the original index of the column pivoted into
    position k.  tracker retains the final norms and the event log.
    """

    factors: np.ndarray
    taus: np.ndarray
    perm: np.ndarray
    tracker: NormTracker

    @property
    def shape(self):
        return self.factors.shape


def select_pivot(tracker: NormTracker, k: int,
                 topology: Optional[GridTopology] = None) -> int:
    """Index of the active column (>= k) with the largest running norm.

    Sequential mode takes the lowest index on ties; with a topology the
    tie falls to whichever side of the reduction tree arrives first.  An
    all-zero tail returns k.
    """
    vals = tracker.omega[k:]
    if vals.size == 0:
        raise ValueError(f"no active columns at step {k}")
    if topology is None:
        return k + int(np.argmax(vals))
    return k + distributed_argmax(vals, topology, first_index=k)


def factorize(a: np.ndarray, cfg: Optional[StrategyConfig] = None
              ) -> PivotedQRResult:
    """Pivoted QR of a copy of ``a`` under the given strategy config."""
    if cfg is None:
        cfg = StrategyConfig()
    src = as_matrix(a)
    m, n = src.shape
    if m == 0 or n == 0:
        raise ValueError(f"cannot factorize an empty matrix, shape {src.shape}")
    if cfg.excess_precision_control:
        cfg.control_dtype(src.dtype)  # fail fast outside single precision
    fac = src.copy(order="F")
    kmax = min(m, n)
    taus = np.zeros(kmax, dtype=fac.dtype)
    perm = np.arange(n)
    tracker = tracker_init(fac, cfg.topology)

    for k in range(kmax):
        piv = select_pivot(tracker, k, cfg.topology)
        if piv != k:
            fac[:, [k, piv]] = fac[:, [piv, k]]
            perm[k], perm[piv] = perm[piv], perm[k]
            tracker.swap(k, piv)
        refl = reflector_generate(fac[k:, k])
        taus[k] = refl.tau
        reflector_apply(refl, fac[k:, k + 1:])
        fac[k, k] = refl.beta
        fac[k + 1:, k] = refl.v[1:]
        tracker_step(tracker, k, np.abs(fac[k, k + 1:]), fac, cfg)

    return PivotedQRResult(factors=fac, taus=taus, perm=perm, tracker=tracker)


def form_q(res: PivotedQRResult) -> np.ndarray:
    """Explicit m x m unitary Q accumulated from the stored reflectors."""
    m = res.factors.shape[0]
    q = np.eye(m, dtype=res.factors.dtype, order="F")
    for k in range(res.taus.shape[0] - 1, -1, -1):
        # Rows/cols below k are all Q touches here; earlier columns of the
        # identity are invariant under I - tau v v^H with v supported on k:.
        v = np.empty(m - k, dtype=res.factors.dtype)
        v[0] = 1
        v[1:] = res.factors[k + 1:, k]
        apply_reflector_block(q[k:, k:], v, res.taus[k])
    return q


def extract_r(res: PivotedQRResult) -> np.ndarray:
    """Upper-triangular R with exact zeros below the diagonal."""
    m, n = res.factors.shape
    return np.asfortranarray(np.triu(res.factors[:min(m, n), :]))


def permuted_input(a: np.ndarray, res: PivotedQRResult) -> np.ndarray:
    """A with its columns in pivot order, i.e. the product A Pi."""
    a = as_matrix(a)
    return np.asfortranarray(a[:, res.perm])
