"""Partial column norm tracking with selectable downdating strategies.

After a pivoting step removes row k from the trailing columns, each running
column norm omega shrinks to omega * sqrt((1 + t)(1 - t)) with t = beta /
omega.  Repeated downdating drifts once the true norm falls toward omega *
sqrt(eps), so the formula is paired with a switch that falls back to an
explicit recomputation:

  classic: temp2 = 1 + 0.05 * (1 - t^2) * (omega/nu)^2, recompute on
           temp2 == 1 -- detection rides on the rounding of the addition,
           which extended-precision control arithmetic silently defeats;
  robust:  temp2 = (1+t)(1-t) * (omega/nu)^2, recompute on temp2 <= tol
           (default sqrt(eps)) -- no equality test, no precision trap;
  exact:   recompute every column at every step, the reference oracle.

nu holds the norm from the last explicit recomputation, so (omega/nu)^2
estimates how much of the original mass the running value still explains.
The injection hooks reproduce two historical failure modes on demand:
evaluating the classic control expression in wider precision, and
recomputing the norm of a neighboring column instead of the right one.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional

import numpy as np

from .core import column_norm, eps, real_dtype
from .gridsim import GridTopology, distributed_norm


class Strategy(Enum):
    """Which switch guards the running norms."""

    CLASSIC = "classic"
    ROBUST = "robust"
    EXACT = "exact"


class Decision(Enum):
    """What happened to one column's running norm at one step."""

    DOWNDATE = "downdate"
    RECOMPUTE = "recompute"
    FLUSH = "flush"


_DECISIONS = (Decision.DOWNDATE, Decision.RECOMPUTE, Decision.FLUSH)
_CODE = {d: np.int8(i) for i, d in enumerate(_DECISIONS)}


@dataclass(frozen=True)
class StrategyConfig:
    """Strategy selection plus failure-injection and topology knobs.

    tol is the robust recompute threshold; None resolves to sqrt(eps) of
    the working precision at use time.  excess_precision_control evaluates
    the classic control expressions in double while the matrix stays
    single, modeling hardware that keeps intermediates in long registers;
    it is defined only for single working precision.  wrong_column_offset
    makes explicit recomputation read the column at j + offset instead of
    j (None disables; the historical bug is offset -1).  topology routes
    norms and recomputes through the grid-ordering simulator.
    """

    kind: Strategy = Strategy.ROBUST
    tol: Optional[float] = None
    excess_precision_control: bool = False
    wrong_column_offset: Optional[int] = None
    topology: Optional[GridTopology] = None

    def __post_init__(self):
        if not isinstance(self.kind, Strategy):
            object.__setattr__(self, "kind", Strategy(self.kind))
        if self.tol is not None and not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")

    def resolve_tol(self, dtype) -> float:
        """Recompute threshold in effect for the given working dtype."""
        if self.tol is not None:
            return float(self.tol)
        return float(np.sqrt(eps(dtype)))

    def control_dtype(self, working) -> np.dtype:
        """Dtype for classic control arithmetic under this config."""
        wd = real_dtype(working)
        if not self.excess_precision_control:
            return wd
        if wd != np.dtype(np.float32):
            raise ValueError(
                "excess-precision control is defined only for single "
                "working precision"
            )
        return np.dtype(np.float64)


@dataclass(frozen=True)
class DowndateEvent:
    """One column's outcome at one step, as logged."""

    k: int
    j: int
    beta: float
    temp: float
    temp2: float
    decision: Decision
    omega_before: float
    omega_after: float


class EventLog:
    """Append-only, column-oriented record of norm-tracking actions.

    Grows by whole steps (one chunk of arrays per factorization step) so
    the ~n^2/2 events of a large run stay cheap; DowndateEvent objects are
    materialized only on demand.  temp and temp2 are NaN for the exact
    strategy, which takes no decision.
    """

    FIELDS = ("k", "j", "beta", "temp", "temp2", "decision",
              "omega_before", "omega_after")

    def __init__(self):
        self._chunks = []
        self._count = 0
        self._joined = None

    def __len__(self) -> int:
        return self._count

    def append_step(self, k, j, beta, temp, temp2, decision,
                    omega_before, omega_after) -> None:
        if j.shape[0] == 0:
            return
        self._joined = None
        self._count += j.shape[0]
        self._chunks.append((
            np.full(j.shape[0], k, dtype=np.int64),
            np.array(j, dtype=np.int64),
            np.array(beta, dtype=np.float64),
            np.array(temp, dtype=np.float64),
            np.array(temp2, dtype=np.float64),
            np.array(decision, dtype=np.int8),
            np.array(omega_before, dtype=np.float64),
            np.array(omega_after, dtype=np.float64),
        ))

    def columns(self) -> dict:
        """All events as one array per field; decision is an int code."""
        if self._joined is None:
            if self._chunks:
                joined = [np.concatenate(col) for col in zip(*self._chunks)]
            else:
                joined = [np.empty(0, dtype=np.int64), np.empty(0, np.int64),
                          np.empty(0), np.empty(0), np.empty(0),
                          np.empty(0, dtype=np.int8), np.empty(0), np.empty(0)]
            self._joined = dict(zip(self.FIELDS, joined))
        return self._joined

    def decision_counts(self) -> dict:
        codes = self.columns()["decision"]
        counts = np.bincount(codes, minlength=len(_DECISIONS))
        return {d.value: int(c) for d, c in zip(_DECISIONS, counts)}

    def event(self, i: int) -> DowndateEvent:
        c = self.columns()
        return DowndateEvent(
            k=int(c["k"][i]), j=int(c["j"][i]), beta=float(c["beta"][i]),
            temp=float(c["temp"][i]), temp2=float(c["temp2"][i]),
            decision=_DECISIONS[int(c["decision"][i])],
            omega_before=float(c["omega_before"][i]),
            omega_after=float(c["omega_after"][i]),
        )

    def __iter__(self) -> Iterator[DowndateEvent]:
        for i in range(self._count):
            yield self.event(i)

    def to_csv(self, f) -> None:
        """Write the log as CSV; f is a path or a text file object.

        Floats use shortest round-trip formatting, so identical logs
        produce byte-identical files.
        """
        if hasattr(f, "write"):
            self._write_csv(f)
        else:
            with open(f, "w", newline="") as fh:
                self._write_csv(fh)

    def _write_csv(self, fh) -> None:
        c = self.columns()
        fh.write(",".join(self.FIELDS) + "\n")
        names = [d.value for d in _DECISIONS]
        for i in range(self._count):
            fh.write(f'{c["k"][i]},{c["j"][i]},{float(c["beta"][i])!r},'
                     f'{float(c["temp"][i])!r},{float(c["temp2"][i])!r},'
                     f'{names[c["decision"][i]]},'
                     f'{float(c["omega_before"][i])!r},'
                     f'{float(c["omega_after"][i])!r}\n')


@dataclass
class NormTracker:
    """Running (omega) and last-recomputed (nu) norms per column.

    omega only shrinks between explicit recomputes; omega == 0 marks a
    column that is exactly zero below the current row or was flushed at
    the bottom row, and such columns are skipped by the decision logic.
    """

    omega: np.ndarray
    nu: np.ndarray
    events: EventLog = field(default_factory=EventLog)
    topology: Optional[GridTopology] = None

    def swap(self, a: int, b: int) -> None:
        if a == b:
            return
        o, v = self.omega, self.nu
        o[a], o[b] = o[b], o[a]
        v[a], v[b] = v[b], v[a]


def tracker_init(a: np.ndarray, topology: Optional[GridTopology] = None
                 ) -> NormTracker:
    """Tracker with omega = nu = the full column norms of ``a``.

    With a topology the initial norms go through the grid reduction, as a
    distributed driver's first norm pass would; 1x1 matches column_norm
    bit for bit.
    """
    a = np.asarray(a)
    n = a.shape[1]
    omega = np.empty(n, dtype=real_dtype(a.dtype))
    if topology is None:
        for j in range(n):
            omega[j] = column_norm(a, j)
    else:
        for j in range(n):
            omega[j] = distributed_norm(a[:, j], topology)
    return NormTracker(omega=omega, nu=omega.copy(), topology=topology)


def _shrunk(omega: np.ndarray, beta: np.ndarray) -> np.ndarray:
    # Factored downdate: omega * sqrt((1+t)(1-t)), clamped at zero.  The
    # factoring avoids the cancellation of 1 - t^2 for t near 1.
    rdt = omega.dtype.type
    t = beta / omega
    one = rdt(1)
    temp = np.maximum(rdt(0), (one + t) * (one - t))
    return omega * np.sqrt(temp)


def downdate_formula(omega, beta) -> float:
    """One downdating step: the norm after removing a component beta.

    omega must be positive; callers skip zero columns.  Returns 0 via the
    clamp when beta >= omega, i.e. when the removed component explains the
    whole running norm.
    """
    if not omega > 0:
        raise ValueError(f"downdate needs omega > 0, got {omega}")
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    om = np.asarray(omega)
    if om.dtype.kind != "f":
        om = om.astype(np.float64)
    return float(_shrunk(om, np.asarray(beta, dtype=om.dtype)))


def _classic_controls(omega, nu, beta, control: np.dtype):
    # Historical switch: the 0.05 * predicted-loss * memorized-ratio term
    # must survive the addition to 1 to be seen at all.  All three control
    # values are computed in `control`, which the excess-precision
    # injection widens; temp keeps the original unfactored 1 - t^2.
    cdt = control.type
    ob = omega.astype(control, copy=False)
    t = beta.astype(control, copy=False) / ob
    temp = np.maximum(cdt(0), cdt(1) - t * t)
    r = ob / nu.astype(control, copy=False)
    temp2 = cdt(1) + cdt(0.05) * temp * (r * r)
    return temp, temp2, temp2 == cdt(1)


def _robust_controls(omega, nu, beta, tol):
    # Scale-free switch in working precision: recompute once the running
    # norm no longer explains more than tol of the last computed norm.
    rdt = omega.dtype.type
    t = beta / omega
    temp = np.maximum(rdt(0), (rdt(1) + t) * (rdt(1) - t))
    r = omega / nu
    temp2 = temp * (r * r)
    return temp, temp2, temp2 <= rdt(tol)


def _as_working_scalars(omega, nu, beta):
    om = np.asarray(omega)
    if om.dtype.kind != "f":
        om = om.astype(np.float64)
    wd = om.dtype
    for name, value in (("omega", omega), ("nu", nu)):
        if not value > 0:
            raise ValueError(f"{name} must be positive, got {value}")
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    return (om.reshape(1), np.asarray(nu, dtype=wd).reshape(1),
            np.asarray(beta, dtype=wd).reshape(1), wd)


def classic_decide(omega, nu, beta, control_dtype=None):
    """Classic switch on one column: (decision, temp, temp2).

    temp and temp2 are evaluated in control_dtype (default: the dtype of
    omega); the decision is ExplicitRecompute exactly when temp2 rounds
    back to 1 in that precision.
    """
    ob, nb, bb, wd = _as_working_scalars(omega, nu, beta)
    control = np.dtype(control_dtype) if control_dtype is not None else wd
    temp, temp2, rec = _classic_controls(ob, nb, bb, control)
    decision = Decision.RECOMPUTE if rec[0] else Decision.DOWNDATE
    return decision, float(temp[0]), float(temp2[0])


def robust_decide(omega, nu, beta, tol=None):
    """Robust switch on one column: (decision, temp, temp2).

    tol defaults to sqrt(eps) of omega's dtype.  All arithmetic stays in
    working precision, so a wider control precision cannot change the
    branch.
    """
    ob, nb, bb, wd = _as_working_scalars(omega, nu, beta)
    if tol is None:
        tol = float(np.sqrt(eps(wd)))
    elif not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    temp, temp2, rec = _robust_controls(ob, nb, bb, tol)
    decision = Decision.RECOMPUTE if rec[0] else Decision.DOWNDATE
    return decision, float(temp[0]), float(temp2[0])


def tracker_step(tracker: NormTracker, k: int, betas: np.ndarray,
                 fac: np.ndarray, cfg: StrategyConfig) -> NormTracker:
    """Update all trailing norms after row k left the trailing columns.

    betas[i] = |fac[k, k+1+i]|, the magnitude of the just-computed row of
    R.  Columns whose omega is already zero are skipped.  An explicit
    recompute reads fac below row k -- at the wrong column under the
    wrong-column injection -- or flushes omega = nu = 0 when no rows
    remain.  Every action is appended to the tracker's event log.
    """
    m, n = fac.shape
    if not 0 <= k < n:
        raise IndexError(f"step {k} out of range for n={n}")
    omega, nu = tracker.omega, tracker.nu
    wd = omega.dtype
    betas = np.asarray(betas, dtype=wd)
    if betas.shape[0] != n - k - 1:
        raise ValueError(
            f"expected {n - k - 1} betas at step {k}, got {betas.shape[0]}"
        )

    cols = np.arange(k + 1, n)
    active = cols[omega[cols] != 0]
    if active.size == 0:
        return tracker
    ob = omega[active]
    nb = nu[active]
    bb = betas[active - (k + 1)]

    if cfg.kind is Strategy.EXACT:
        temp = np.full(active.size, np.nan)
        temp2 = temp
        rec = np.ones(active.size, dtype=bool)
    elif cfg.kind is Strategy.CLASSIC:
        temp, temp2, rec = _classic_controls(ob, nb, bb, cfg.control_dtype(wd))
    else:
        temp, temp2, rec = _robust_controls(ob, nb, bb, cfg.resolve_tol(wd))

    new_omega = ob.copy()
    new_nu = nb.copy()
    codes = np.full(active.size, _CODE[Decision.DOWNDATE], dtype=np.int8)

    down = ~rec
    if down.any():
        new_omega[down] = _shrunk(ob[down], bb[down])

    if rec.any():
        if k + 1 >= m:
            # Bottom row reached: nothing is left to measure.
            codes[rec] = _CODE[Decision.FLUSH]
            new_omega[rec] = 0
            new_nu[rec] = 0
        else:
            codes[rec] = _CODE[Decision.RECOMPUTE]
            offset = cfg.wrong_column_offset or 0
            topo = cfg.topology
            fresh = np.empty(int(rec.sum()), dtype=wd)
            for i, j in enumerate(active[rec]):
                jj = int(j) + offset
                if not 0 <= jj < n:
                    raise IndexError(
                        f"wrong-column recompute reads column {jj}, "
                        f"outside 0..{n - 1}"
                    )
                if topo is None:
                    fresh[i] = column_norm(fac, jj, k + 1)
                else:
                    fresh[i] = distributed_norm(fac[k + 1:, jj], topo,
                                                first_index=k + 1)
            new_omega[rec] = fresh
            new_nu[rec] = fresh

    tracker.events.append_step(k, active, bb, temp, temp2, codes,
                               ob, new_omega)
    omega[active] = new_omega
    nu[active] = new_nu
    return tracker
