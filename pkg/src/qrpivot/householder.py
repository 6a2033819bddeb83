"""Householder reflectors with the LAPACK larfg sign and scaling conventions.

A reflector is H = I - tau * v * v^H with v[0] = 1.  For complex data tau is
complex and H is unitary but not Hermitian; the map that annihilates the
generating column is H^H, matching how xGEQP3 applies reflectors to the
trailing matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import apply_reflector_block, real_dtype, vector_norm


@dataclass
class Reflector:
    """Elementary reflector in factored form.

    v has v[0] == 1; tau == 0 encodes the identity (column already
    triangular), in which case beta is the untouched diagonal entry.
    """

    v: np.ndarray
    tau: complex
    beta: float

    def __len__(self) -> int:
        return self.v.shape[0]


def reflector_generate(x: np.ndarray) -> Reflector:
    """Build the reflector taking x to (beta, 0, ..., 0) under H^H.

    x is a 1-D array; it is not modified.  beta is real with sign opposite
    to Re(x[0]), as larfg chooses.  The stored v keeps the exact quotient
    x[1:] / (x[0] - beta), so packing v[1:] below the diagonal reproduces
    LAPACK's in-place layout.
    """
    if x.ndim != 1 or x.shape[0] == 0:
        raise ValueError("reflector needs a nonempty 1-D vector")
    dt = x.dtype
    rdt = real_dtype(dt).type
    cplx = dt.kind == "c"

    alpha = x[0]
    xnorm = rdt(vector_norm(x[1:]))

    v = x.copy()
    v[0] = 1

    # Scaled one-pass norms vanish only when every entry is exactly zero,
    # so xnorm == 0 certifies the tail is zero and v[1:] stays zero too.
    if xnorm == 0 and (not cplx or alpha.imag == 0):
        beta = alpha.real if cplx else alpha
        return Reflector(v=v, tau=dt.type(0), beta=float(beta))

    if cplx:
        head = np.array([alpha.real, alpha.imag, xnorm], dtype=rdt)
    else:
        head = np.array([alpha, xnorm], dtype=rdt)
    full = rdt(vector_norm(head))
    beta = rdt(np.copysign(full, -float(np.real(alpha))))

    if cplx:
        tau = dt.type(complex((beta - alpha.real) / beta, -alpha.imag / beta))
    else:
        tau = dt.type((beta - alpha) / beta)
    v[1:] /= alpha - beta
    return Reflector(v=v, tau=tau, beta=float(beta))


def reflector_apply(r: Reflector, block: np.ndarray) -> None:
    """Apply the annihilating map H^H to block in place.

    block is (len(r), k); a 1-D vector of matching length is accepted and
    treated as a single column.
    """
    b = block.reshape(-1, 1) if block.ndim == 1 else block
    if b.shape[0] != len(r):
        raise ValueError(f"block has {b.shape[0]} rows, reflector expects {len(r)}")
    apply_reflector_block(b, r.v, np.conj(r.tau))


def reflector_apply_inverse(r: Reflector, block: np.ndarray) -> None:
    """Apply H itself (the inverse of the annihilating map) in place.

    Used to accumulate Q by pushing columns of the identity back through
    the factorization.
    """
    b = block.reshape(-1, 1) if block.ndim == 1 else block
    if b.shape[0] != len(r):
        raise ValueError(f"block has {b.shape[0]} rows, reflector expects {len(r)}")
    apply_reflector_block(b, r.v, r.tau)
