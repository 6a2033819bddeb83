"""Dense matrices in Matrix Market array format.

Only the subset this package exchanges: object "matrix", format "array",
field "real" or "complex", symmetry "general".  Values are written with 17
significant decimal digits, so write-then-read round-trips every finite
double bit for bit.  Non-finite values are rejected in both directions,
and every parse error names the offending line.
"""
from __future__ import annotations

import numpy as np

_HEADER_PREFIX = "%%matrixmarket"


def _fail(lineno: int, msg: str):
    raise ValueError(f"line {lineno}: {msg}")


def write_matrix(a: np.ndarray, f) -> None:
    """Write a 2-D real or complex array; f is a path or text file."""
    a = np.asarray(a)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={a.ndim}")
    if a.dtype.kind not in "fc":
        raise ValueError(f"unsupported dtype {a.dtype}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite values")
    if hasattr(f, "write"):
        _write(a, f)
    else:
        with open(f, "w", newline="") as fh:
            _write(a, fh)


def _write(a: np.ndarray, fh) -> None:
    m, n = a.shape
    cplx = a.dtype.kind == "c"
    field = "complex" if cplx else "real"
    fh.write(f"%%MatrixMarket matrix array {field} general\n")
    fh.write(f"{m} {n}\n")
    flat = np.asfortranarray(a).reshape(-1, order="F")
    if cplx:
        for v in flat:
            fh.write(f"{v.real:.17g} {v.imag:.17g}\n")
    else:
        for v in flat:
            fh.write(f"{float(v):.17g}\n")


def read_matrix(f) -> np.ndarray:
    """Read a dense array-format file into float64 or complex128 (F order)."""
    if hasattr(f, "read"):
        return _read(f)
    with open(f, "r") as fh:
        return _read(fh)


def _read(fh) -> np.ndarray:
    lines = fh.read().split("\n")
    pos = 0

    header = lines[pos].strip() if lines else ""
    if not header.lower().startswith(_HEADER_PREFIX):
        _fail(1, "not a Matrix Market file (missing %%MatrixMarket header)")
    tokens = header.split()
    if len(tokens) != 5:
        _fail(1, f"malformed header, expected 5 tokens, got {len(tokens)}")
    _, obj, fmt, field, symmetry = (t.lower() for t in tokens)
    if obj != "matrix":
        _fail(1, f"unsupported object {obj!r}, only 'matrix'")
    if fmt != "array":
        _fail(1, f"unsupported format {fmt!r}, only dense 'array'")
    if field not in ("real", "complex"):
        _fail(1, f"unsupported field {field!r}, only 'real' or 'complex'")
    if symmetry != "general":
        _fail(1, f"unsupported symmetry {symmetry!r}, only 'general'")
    cplx = field == "complex"
    pos += 1

    while pos < len(lines) and (lines[pos].startswith("%")
                                or not lines[pos].strip()):
        pos += 1
    if pos >= len(lines):
        _fail(len(lines), "file ends before the size line")
    parts = lines[pos].split()
    if len(parts) != 2:
        _fail(pos + 1, f"size line must be 'rows cols', got {lines[pos]!r}")
    try:
        m, n = int(parts[0]), int(parts[1])
    except ValueError:
        _fail(pos + 1, f"non-integer dimensions {lines[pos]!r}")
    if m < 1 or n < 1:
        _fail(pos + 1, f"dimensions must be positive, got {m} x {n}")
    pos += 1

    total = m * n
    out = np.empty(total, dtype=np.complex128 if cplx else np.float64)
    count = 0
    want = 2 if cplx else 1
    for lineno in range(pos, len(lines)):
        text = lines[lineno].strip()
        if not text or text.startswith("%"):
            continue
        if count >= total:
            _fail(lineno + 1, f"extra data after {total} values")
        parts = text.split()
        if len(parts) != want:
            _fail(lineno + 1,
                  f"expected {want} number(s) per line, got {len(parts)}")
        try:
            if cplx:
                value = complex(float(parts[0]), float(parts[1]))
            else:
                value = float(parts[0])
        except ValueError:
            _fail(lineno + 1, f"cannot parse value {text!r}")
        if not np.isfinite(value):
            _fail(lineno + 1, f"non-finite value {text!r}")
        out[count] = value
        count += 1
    if count != total:
        _fail(len(lines), f"file ends after {count} of {total} values")
    return np.asfortranarray(out.reshape((m, n), order="F"))
