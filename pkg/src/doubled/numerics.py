"""Dense complex-matrix kernel.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Helpers here
validate shapes, take partial traces over arbitrary tensor factors and
provide the tolerance predicates used throughout the package.
"""
from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

#: default tolerance for physical predicates (Hermiticity, PSD, trace)
PREDICATE_TOL = 1e-9
#: default tolerance for algebraic identities
IDENTITY_TOL = 1e-12


class StructuralError(ValueError):
    """Shapes or dimensions of the inputs do not fit together."""


class DomainError(ValueError):
    """Inputs have the right shape but lie outside an operation's domain."""


def as_cmatrix(m, name: str = "matrix") -> np.ndarray:
    """Return ``m`` as a finite 2-D complex128 array."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise StructuralError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise StructuralError(f"{name} has non-finite entries")
    return arr


def _require_square(m: np.ndarray, name: str = "matrix") -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise StructuralError(f"{name} must be square, got shape {m.shape}")


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def kron(a, b) -> np.ndarray:
    """Kronecker product, ``(a⊗b)[i*rb+k, j*cb+l] = a[i,j] * b[k,l]``."""
    return np.kron(as_cmatrix(a, "a"), as_cmatrix(b, "b"))


def kron_all(mats: Iterable) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for m in mats:
        out = np.kron(out, m)
    return out


def trace(m) -> complex:
    m = np.asarray(m)
    _require_square(m)
    return complex(np.trace(m))


def partial_trace(m, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every factor of ``m`` not listed in ``keep``.

    ``dims`` gives the local dimensions of the tensor factors of ``m``.
    Kept factors stay in ascending order. The reduction works on the
    multi-index view of ``m`` so no permutation matrices are formed.
    """
    m = np.asarray(m)
    dims = [int(x) for x in dims]
    if any(x <= 0 for x in dims):
        raise StructuralError(f"factor dimensions must be positive: {dims}")
    side = math.prod(dims)
    if m.ndim != 2 or m.shape != (side, side):
        raise StructuralError(f"shape {m.shape} does not match factor dims {dims}")
    keep = sorted(set(int(k) for k in keep))
    nf = len(dims)
    if any(k < 0 or k >= nf for k in keep):
        raise StructuralError(f"keep={keep} out of range for {nf} factors")

    t = m.reshape(dims + dims)
    rows = list(range(nf))
    cols = [nf + i for i in range(nf)]
    for i in range(nf):
        if i not in keep:
            cols[i] = rows[i]
    out = [rows[k] for k in keep] + [cols[k] for k in keep]
    kd = math.prod(dims[k] for k in keep)
    return np.einsum(t, rows + cols, out).reshape(kd, kd)


def hermiticity_residual(m) -> float:
    m = np.asarray(m)
    _require_square(m)
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(m - dagger(m))))


def is_hermitian(m, tol: float = PREDICATE_TOL) -> bool:
    """True iff ``max|m - m†| <= tol`` entrywise."""
    return hermiticity_residual(m) <= tol


def min_eigenvalue_hermitian(m) -> float:
    """Smallest eigenvalue of the Hermitian part ``(m + m†)/2``."""
    m = np.asarray(m, dtype=np.complex128)
    _require_square(m)
    h = 0.5 * (m + dagger(m))
    return float(np.linalg.eigvalsh(h)[0])


def is_psd(m, tol: float = PREDICATE_TOL) -> bool:
    return is_hermitian(m, tol) and min_eigenvalue_hermitian(m) >= -tol


# ---------------------------------------------------------------- JSON codec

def matrix_to_json(m) -> dict:
    """Encode as ``{"rows", "cols", "data": [[re, im], ...]}`` in row-major order."""
    m = as_cmatrix(m)
    flat = m.reshape(-1)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in flat],
    }


def matrix_from_json(obj) -> np.ndarray:
    try:
        rows = int(obj["rows"])
        cols = int(obj["cols"])
        data = obj["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise StructuralError(f"malformed matrix object: {exc}") from None
    if rows <= 0 or cols <= 0:
        raise StructuralError("matrix rows/cols must be positive")
    if not isinstance(data, list) or len(data) != rows * cols:
        raise StructuralError(f"expected {rows * cols} entries")
    out = np.empty(rows * cols, dtype=np.complex128)
    for i, pair in enumerate(data):
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise StructuralError(f"entry {i} is not a [re, im] pair")
        try:
            out[i] = complex(float(pair[0]), float(pair[1]))
        except (TypeError, ValueError):
            raise StructuralError(f"entry {i} is not numeric") from None
    return as_cmatrix(out.reshape(rows, cols))
