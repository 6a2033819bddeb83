"""Verifiers and metrics for pivoted factorizations.

The central object is the rank-revealing structure of R: a monotonically
descending diagonal (red line) that dominates the norm of every
column-segment beside it (blue line).  A correct pivoted factorization has
it up to a small roundoff; the failure modes this package injects break it
visibly.  All analysis here runs in double precision regardless of the
factorization's working precision, and the condition/sigma_min oracles use
an internal one-sided Jacobi SVD so that no pivoted QR is involved in
judging pivoted QR.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from numba import njit

from .core import as_matrix, column_norm, eps, is_complex
from .householder import reflector_apply, reflector_generate
from .qrcp import PivotedQRResult, extract_r, form_q, permuted_input


@dataclass(frozen=True)
class StructureReport:
    """Outcome of the two inequality families plus the plot profiles.

    red_line[i] = |R_ii|; blue_line[i] = max over j > i of the norm of
    R(i:j, j).  violations holds the dominance-family offenders as
    (i, j, ratio) with ratio = that norm over |R_ii|; the monotone family
    is summarized by worst_monotone_ratio alone.
    """

    monotone_ok: bool
    dominance_ok: bool
    worst_monotone_ratio: float
    worst_dominance_ratio: float
    violations: List[Tuple[int, int, float]]
    red_line: np.ndarray
    blue_line: np.ndarray
    numerical_rank: int
    slack: float

    @property
    def ok(self) -> bool:
        return self.monotone_ok and self.dominance_ok

    def summary(self) -> dict:
        return {
            "ok": self.ok,
            "monotone_ok": self.monotone_ok,
            "dominance_ok": self.dominance_ok,
            "worst_monotone_ratio": self.worst_monotone_ratio,
            "worst_dominance_ratio": self.worst_dominance_ratio,
            "violation_count": len(self.violations),
            "numerical_rank": self.numerical_rank,
            "slack": self.slack,
            "n": int(self.red_line.shape[0]),
        }


@njit(cache=True, nogil=True)
def _suffix_norms(absr):
    # out[i, j] = || absr[i:stop, j] || with stop = min(j, kmax-1), built
    # bottom-up per column with the scaled one-pass recurrence so graded
    # columns (entries spanning hundreds of orders of magnitude) never
    # underflow in the squares.
    kmax, n = absr.shape
    out = np.zeros((kmax, n))
    for j in range(n):
        top = min(j, kmax - 1)
        scale = 0.0
        ssq = 1.0
        for i in range(top, -1, -1):
            v = absr[i, j]
            if v != 0.0:
                if scale < v:
                    r = scale / v
                    ssq = 1.0 + ssq * (r * r)
                    scale = v
                else:
                    r = v / scale
                    ssq = ssq + r * r
            out[i, j] = scale * np.sqrt(ssq)
    return out


def _require_upper_triangular(r: np.ndarray) -> np.ndarray:
    r = as_matrix(r)
    if r.shape[0] > 1 and np.any(np.tril(r, -1) != 0):
        raise ValueError("matrix is not upper triangular")
    return r


def check_structure(r: np.ndarray, slack: Optional[float] = None,
                    rank_tau: Optional[float] = None) -> StructureReport:
    """Verify both inequality families of the rank-revealing structure.

    Each comparison gets multiplicative headroom (1 + slack) plus an
    additive term of n times the smallest subnormal of R's dtype; the
    additive term follows the rounding model with underflow,
    fl(x op y) = (x op y)(1 + delta) + eta, under which entries at the
    very bottom of the exponent range carry only a few significant bits
    and multiplicative comparisons are not resolvable.  It is invisible
    at any representable working scale.  slack defaults to 100*n*eps of
    R's dtype.  rank_tau feeds the report's numerical_rank field
    (default sqrt(eps)).
    """
    r = _require_upper_triangular(r)
    kmax, n = r.shape
    if slack is None:
        slack = 100.0 * n * eps(r.dtype)
    absr = np.asfortranarray(np.abs(r), dtype=np.float64)
    red = np.ascontiguousarray(np.diagonal(absr)).copy()
    norms = _suffix_norms(absr)

    limit = 1.0 + slack
    rdt = r.dtype.type(0).real.dtype
    floor = n * float(np.finfo(rdt).smallest_subnormal)
    # value <= limit*red + floor, rewritten as a plain ratio test so the
    # ok flags stay equivalent to comparing worst ratios against limit.
    denom = red + floor / limit
    mono = red[1:] / denom[:-1]
    ratios = norms / denom[:, None]

    # The dominance family quantifies over i < j only; i = j is an exact
    # equality by construction and would mask nothing.
    pair = np.zeros_like(ratios, dtype=bool)
    for i in range(kmax):
        pair[i, i + 1:] = True

    worst_mono = float(mono.max()) if mono.size else 0.0
    dom_ratios = np.where(pair, ratios, 0.0)
    worst_dom = float(dom_ratios.max()) if dom_ratios.size else 0.0
    blue = np.where(pair, norms, 0.0).max(axis=1)

    bad = pair & (ratios > limit)
    bi, bj = np.nonzero(bad)
    violations = [(int(i), int(j), float(ratios[i, j])) for i, j in zip(bi, bj)]

    if rank_tau is None:
        rank_tau = float(np.sqrt(eps(r.dtype)))
    return StructureReport(
        monotone_ok=bool(worst_mono <= limit),
        dominance_ok=bool(worst_dom <= limit),
        worst_monotone_ratio=worst_mono,
        worst_dominance_ratio=worst_dom,
        violations=violations,
        red_line=red,
        blue_line=blue,
        numerical_rank=numerical_rank(r, rank_tau),
        slack=float(slack),
    )


def structure_csv(report: StructureReport, f) -> None:
    """Write the profile as CSV rows i,red,blue (the plot's exact data)."""
    if hasattr(f, "write"):
        fh = f
        close = False
    else:
        fh = open(f, "w", newline="")
        close = True
    try:
        fh.write("i,red,blue\n")
        for i in range(report.red_line.shape[0]):
            fh.write(f"{i},{float(report.red_line[i])!r},"
                     f"{float(report.blue_line[i])!r}\n")
    finally:
        if close:
            fh.close()


def numerical_rank(r: np.ndarray, tau: float) -> int:
    """First diagonal drop steeper than tau, scanning from the top.

    Returns k when |R_{k+1,k+1}| < tau * |R_kk| first holds (so the
    leading k diagonal entries are accepted), else min(m, n).  A zero
    leading diagonal entry gives rank 0.
    """
    if not 0 < tau < 1:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    r = _require_upper_triangular(r)
    d = np.abs(np.diagonal(r)).astype(np.float64)
    if d.size == 0 or d[0] == 0:
        return 0
    for k in range(d.size - 1):
        if d[k + 1] < tau * d[k]:
            return k + 1
    return int(d.size)


def residual_metrics(a: np.ndarray, res: PivotedQRResult
                     ) -> Tuple[float, float]:
    """(relative residual, orthogonality defect), evaluated in double.

    residual = ||A Pi - Q R||_F / ||A||_F (0 for A = 0);
    ortho = ||Q^H Q - I||_F.
    """
    a = as_matrix(a)
    dt = np.complex128 if is_complex(a.dtype) else np.float64
    q = form_q(res).astype(dt)
    r = extract_r(res).astype(dt)
    ap = permuted_input(a, res).astype(dt)
    kmax = r.shape[0]
    anorm = np.linalg.norm(a.astype(dt))
    resid = np.linalg.norm(ap - q[:, :kmax] @ r)
    ortho = np.linalg.norm(q.conj().T @ q - np.eye(q.shape[0], dtype=dt))
    return (0.0 if anorm == 0 else float(resid / anorm), float(ortho))


@njit(cache=True, nogil=True)
def _jacobi_sweeps(w, max_sweeps, tol):
    # One-sided Jacobi on a tall complex matrix: rotate column pairs until
    # every pair is orthogonal to within tol relative to its norms.  The
    # singular values are the final column norms.
    m, n = w.shape
    for _ in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                app = 0.0
                aqq = 0.0
                apq = 0.0 + 0.0j
                for i in range(m):
                    wp = w[i, p]
                    wq = w[i, q]
                    app += wp.real * wp.real + wp.imag * wp.imag
                    aqq += wq.real * wq.real + wq.imag * wq.imag
                    apq += np.conj(wp) * wq
                babs = abs(apq)
                if babs <= tol * np.sqrt(app * aqq):
                    continue
                rotated = True
                theta = (app - aqq) / (2.0 * babs)
                if theta == 0.0:
                    t = 1.0
                elif theta > 0.0:
                    t = 1.0 / (theta + np.sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + np.sqrt(1.0 + theta * theta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                sigma = s * np.conj(apq / babs)
                for i in range(m):
                    wp = w[i, p]
                    wq = w[i, q]
                    w[i, p] = c * wp + sigma * wq
                    w[i, q] = -np.conj(sigma) * wp + c * wq
        if not rotated:
            break


def jacobi_singular_values(a: np.ndarray, max_sweeps: int = 30) -> np.ndarray:
    """All singular values, descending, via one-sided Jacobi in double.

    Self-contained (no pivoted QR anywhere in the path) and accurate for
    the small singular values, which is what the susceptibility and
    conditioning checks consume.  Intended for n up to ~2000.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.size == 0:
        raise ValueError(f"need a nonempty 2-D matrix, got shape {a.shape}")
    w = np.asfortranarray(a, dtype=np.complex128)
    if w.shape[0] < w.shape[1]:
        w = np.asfortranarray(w.conj().T)
    w = w.copy(order="F")
    tol = np.sqrt(w.shape[0]) * np.finfo(np.float64).eps
    _jacobi_sweeps(w, max_sweeps, tol)
    sv = np.sqrt(np.sum(np.abs(w) ** 2, axis=0))
    sv.sort()
    return sv[::-1].copy()


def row_scaled_condition(r: np.ndarray, rank: Optional[int] = None) -> float:
    """kappa_2 of R with each row scaled to unit norm.

    Row scaling strips the diagonal grading that pivoting produces, so a
    healthy factorization leaves a well-conditioned matrix here no matter
    how ill-conditioned the input was; a huge value is the detection
    signal for a broken one.  The estimate is over the leading rank x rank
    block of the scaled matrix (rank defaults to the sqrt(eps) numerical
    rank); a zero row inside that block is an error.
    """
    r = _require_upper_triangular(r)
    if rank is None:
        rank = numerical_rank(r, float(np.sqrt(eps(r.dtype))))
    if rank == 0:
        raise ValueError("numerical rank 0: nothing to scale")
    dt = np.complex128 if is_complex(r.dtype) else np.float64
    block = np.array(r[:rank, :], dtype=dt)
    scales = np.linalg.norm(block, axis=1)
    if np.any(scales == 0):
        raise ValueError("zero row inside the scaled block")
    block /= scales[:, None]
    sv = jacobi_singular_values(block[:, :rank])
    if sv[-1] == 0:
        return float(np.inf)
    return float(sv[0] / sv[-1])


def failure_precondition(a: np.ndarray) -> Tuple[float, bool]:
    """(kappa_c, susceptible): can norm downdating fail on this input?

    kappa_c = 1/sigma_min of A with columns scaled to unit norm.  Unless
    it exceeds 1/sqrt(eps) of A's working precision, no downdating
    strategy can lose the pivot order, so failures need kappa_c beyond
    that line -- a necessary, not sufficient, condition.
    """
    a = as_matrix(a)
    dt = np.complex128 if is_complex(a.dtype) else np.float64
    ac = np.array(a, dtype=dt)
    scales = np.linalg.norm(ac, axis=0)
    if np.any(scales == 0):
        raise ValueError("zero column: susceptibility is undefined")
    ac /= scales[None, :]
    sv = jacobi_singular_values(ac)
    kappa_c = float(np.inf) if sv[-1] == 0 else float(1.0 / sv[-1])
    return kappa_c, bool(kappa_c > 1.0 / np.sqrt(eps(a.dtype)))


@dataclass(frozen=True)
class PivotDivergence:
    """Where two factorizations of the same input first disagree.

    step is None when the pivot sequences match.  col_a/col_b are the
    original column indices each run chose at that step; norm_a/norm_b
    their true partial norms in the replayed common state, and gap the
    relative difference |norm_a - norm_b| / max -- near zero means the
    runs split a genuine tie, large means one of them picked badly.
    """

    step: Optional[int]
    col_a: int = -1
    col_b: int = -1
    norm_a: float = 0.0
    norm_b: float = 0.0
    gap: float = 0.0

    @property
    def diverged(self) -> bool:
        return self.step is not None


def replay_partial(a: np.ndarray, perm: np.ndarray, steps: int
                   ) -> Tuple[np.ndarray, np.ndarray]:
    """Redo a factorization with a forced pivot sequence, stopping early.

    Returns (w, pos): w is the matrix after `steps` reflectors with exact
    zeros below the processed diagonal, and pos maps original column index
    to current position in w.  Norm questions about the true partial
    columns are answered against w directly.
    """
    w = as_matrix(a).copy(order="F")
    m, n = w.shape
    if not 0 <= steps <= min(m, n):
        raise ValueError(f"steps {steps} out of range for shape {w.shape}")
    cur = np.arange(n)
    pos = np.arange(n)
    for k in range(steps):
        target = int(perm[k])
        p = int(pos[target])
        if p != k:
            w[:, [k, p]] = w[:, [p, k]]
            other = int(cur[k])
            cur[k], cur[p] = target, other
            pos[target], pos[other] = k, p
        refl = reflector_generate(w[k:, k])
        reflector_apply(refl, w[k:, k + 1:])
        w[k, k] = refl.beta
        w[k + 1:, k] = 0
    return w, pos


def compare_pivots(a_res: PivotedQRResult, b_res: PivotedQRResult,
                   a: np.ndarray) -> PivotDivergence:
    """First pivot disagreement between two runs on the same input."""
    kmax = min(a_res.taus.shape[0], b_res.taus.shape[0])
    split = -1
    for k in range(kmax):
        if a_res.perm[k] != b_res.perm[k]:
            split = k
            break
    if split < 0:
        return PivotDivergence(step=None)
    w, pos = replay_partial(a, a_res.perm, split)
    ca, cb = int(a_res.perm[split]), int(b_res.perm[split])
    na = column_norm(w, int(pos[ca]), split)
    nb = column_norm(w, int(pos[cb]), split)
    top = max(na, nb)
    gap = 0.0 if top == 0 else abs(na - nb) / top
    return PivotDivergence(step=split, col_a=ca, col_b=cb,
                           norm_a=na, norm_b=nb, gap=gap)


def audit_pivot_dominance(a: np.ndarray, res: PivotedQRResult
                          ) -> Tuple[float, int]:
    """Worst ratio of chosen-pivot true norm to the true maximum.

    Replays the recorded pivot sequence and, before each step, measures
    every active column's actual partial norm.  Returns (worst ratio,
    step where it happened); a correct strategy keeps the ratio near 1.
    """
    w = as_matrix(a).copy(order="F")
    m, n = w.shape
    cur = np.arange(n)
    pos = np.arange(n)
    worst = np.inf
    worst_step = 0
    for k in range(res.taus.shape[0]):
        norms = np.array([column_norm(w, j, k) for j in range(k, n)])
        target = int(res.perm[k])
        p = int(pos[target])
        top = float(norms.max())
        ratio = 1.0 if top == 0 else float(norms[p - k]) / top
        if ratio < worst:
            worst = ratio
            worst_step = k
        if p != k:
            w[:, [k, p]] = w[:, [p, k]]
            other = int(cur[k])
            cur[k], cur[p] = target, other
            pos[target], pos[other] = k, p
        refl = reflector_generate(w[k:, k])
        reflector_apply(refl, w[k:, k + 1:])
        w[k, k] = refl.beta
        w[k + 1:, k] = 0
    return float(worst), worst_step
