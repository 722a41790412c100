"""Generalized Pauli (Hilbert-Schmidt) operator basis.

The basis for local dimension ``d`` consists of the identity followed by
the generalized Gell-Mann matrices, rescaled so that
``Tr(s_mu s_nu) = d * delta_{mu nu}``. Ordering is frozen:

1. identity
2. symmetric off-diagonal ``|j><k| + |k><j|`` for ``j < k`` (lexicographic)
3. antisymmetric off-diagonal ``-i|j><k| + i|k><j|`` for ``j < k``
4. diagonal ``diag(1, .., 1, -l, 0, ..)`` for ``l = 1 .. d-1``

At ``d = 2`` this gives ``I, X, Y, Z``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .numerics import DomainError, StructuralError, as_cmatrix


@dataclass(frozen=True, eq=False)
class PauliBasis:
    dim: int
    ops: np.ndarray  # shape (d*d, d, d)

    @property
    def size(self) -> int:
        return self.dim * self.dim

    def __len__(self) -> int:
        return self.size

    def __getitem__(self, mu: int) -> np.ndarray:
        return self.ops[mu]

    def gram(self) -> np.ndarray:
        """``Tr(s_mu s_nu)`` for all pairs."""
        return np.einsum("aij,bji->ab", self.ops, self.ops)

    def gram_residual(self) -> float:
        return float(np.max(np.abs(self.gram() - self.dim * np.eye(self.size))))

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.ops - np.conj(np.swapaxes(self.ops, 1, 2)))))

    def traceless_residual(self) -> float:
        tr = np.einsum("aii->a", self.ops[1:])
        return float(np.max(np.abs(tr))) if tr.size else 0.0


@lru_cache(maxsize=None)
def _basis_array(d: int) -> np.ndarray:
    scale = np.sqrt(d / 2.0)
    ops = [np.eye(d, dtype=np.complex128)]
    pairs = [(j, k) for j in range(d) for k in range(j + 1, d)]
    for j, k in pairs:
        m = np.zeros((d, d), dtype=np.complex128)
        m[j, k] = m[k, j] = 1.0
        ops.append(scale * m)
    for j, k in pairs:
        m = np.zeros((d, d), dtype=np.complex128)
        m[j, k] = -1j
        m[k, j] = 1j
        ops.append(scale * m)
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        ops.append(scale * np.sqrt(2.0 / (l * (l + 1))) * np.diag(diag).astype(np.complex128))
    arr = np.array(ops)
    arr.setflags(write=False)
    return arr


def build_basis(d: int) -> PauliBasis:
    """Generalized Pauli basis for local dimension ``d >= 2``."""
    if int(d) != d or d < 2:
        raise DomainError(f"local dimension must be an integer >= 2, got {d}")
    return PauliBasis(int(d), _basis_array(int(d)))


def expand_in_basis(m, basis: PauliBasis) -> np.ndarray:
    """Coefficients ``g_mu = Tr(m s_mu)/d`` with ``m = sum_mu g_mu s_mu``."""
    m = as_cmatrix(m)
    if m.shape != (basis.dim, basis.dim):
        raise StructuralError(f"expected a {basis.dim}x{basis.dim} matrix, got {m.shape}")
    return np.einsum("ij,aji->a", m, basis.ops) / basis.dim


def reconstruct(coeffs, basis: PauliBasis) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    if coeffs.shape != (basis.size,):
        raise StructuralError(f"expected {basis.size} coefficients")
    return np.einsum("a,aij->ij", coeffs, basis.ops)


def product_basis(basis: PauliBasis, n: int) -> np.ndarray:
    """All ``n``-fold tensor products ``s_mu1 ⊗ .. ⊗ s_mun``.

    Returns shape ``(d**(2n), d**n, d**n)``, the first axis running over
    ``(mu1, .., mun)`` with ``mu1`` most significant.
    """
    d = basis.dim
    out = np.ones((1, 1, 1), dtype=np.complex128)
    for _ in range(n):
        k = out.shape[1]
        out = np.einsum("aij,bkl->abikjl", out, basis.ops).reshape(-1, k * d, k * d)
    return out


def basis_to_json(basis: PauliBasis) -> dict:
    from .numerics import matrix_to_json

    return {
        "d": basis.dim,
        "ops": [matrix_to_json(op) for op in basis.ops],
        "gram_residual": basis.gram_residual(),
    }
