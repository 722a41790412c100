"""Doubled correlation tensors.

A tensor with ``N`` events is held as a complex array of shape
``(d*d,) * 2N`` with axes ``(mu_1..mu_N, nu_1..nu_N)``; events follow
:func:`~doubled.process_dsl.event_layout`. The matricization used for the
Hermiticity and positivity checks groups the left and the right indices,
``mu_1`` most significant.

The JSON layout (``entries``) is different and frozen: left multi-index
major, and inside each multi-index event 1 is the least significant
digit.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .numerics import (
    IDENTITY_TOL,
    PREDICATE_TOL,
    StructuralError,
    hermiticity_residual,
    min_eigenvalue_hermitian,
)
from .pauli import PauliBasis
from .process_dsl import ProcessModel
from .qobjects import DensityOperator, KrausChannel

PROVENANCES = ("spatial", "temporal", "spatiotemporal", "external")


@dataclass(frozen=True, eq=False)
class CorrelationTensor:
    d: int
    n_events: int
    entries: np.ndarray
    provenance: str = "external"

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.complex128)
        shape = (self.d * self.d,) * (2 * self.n_events)
        if e.shape != shape:
            if e.size != np.prod(shape):
                raise StructuralError(f"tensor entries have shape {e.shape}, expected {shape}")
            e = e.reshape(shape)
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        object.__setattr__(self, "entries", e)

    @property
    def side(self) -> int:
        return (self.d * self.d) ** self.n_events

    def matrix(self) -> np.ndarray:
        """Matricization ``M[(mu), (nu)]``."""
        return self.entries.reshape(self.side, self.side)

    def __getitem__(self, idx):
        return self.entries[idx]

    def with_entries(self, entries, provenance: str | None = None) -> "CorrelationTensor":
        return CorrelationTensor(self.d, self.n_events, entries, provenance or self.provenance)

    def to_json(self) -> dict:
        n = self.n_events
        perm = list(reversed(range(n))) + [n + i for i in reversed(range(n))]
        flat = self.entries.transpose(perm).reshape(-1)
        return {
            "d": self.d,
            "n_events": n,
            "provenance": self.provenance,
            "entries": [[float(z.real), float(z.imag)] for z in flat],
        }

    @classmethod
    def from_json(cls, obj) -> "CorrelationTensor":
        try:
            d, n = int(obj["d"]), int(obj["n_events"])
            raw = obj["entries"]
        except (KeyError, TypeError, ValueError) as exc:
            raise StructuralError(f"malformed tensor object: {exc}") from None
        if d < 2 or n < 1:
            raise StructuralError("tensor needs d >= 2 and n_events >= 1")
        size = (d * d) ** (2 * n)
        if not isinstance(raw, list) or len(raw) != size:
            raise StructuralError(f"expected {size} entries")
        try:
            flat = np.array([complex(float(a), float(b)) for a, b in raw], dtype=np.complex128)
        except (TypeError, ValueError):
            raise StructuralError("entries must be [re, im] pairs") from None
        rev = flat.reshape((d * d,) * (2 * n))
        perm = list(reversed(range(n))) + [n + i for i in reversed(range(n))]
        # perm is an involution, so it also undoes the reversal
        return cls(d, n, rev.transpose(perm), obj.get("provenance", "external"))


@dataclass(frozen=True)
class AxiomReport:
    hermiticity_residual: float
    min_eigenvalue: float
    normalization_residual: float
    tol: float
    hermitian: bool
    positive: bool
    normalized: bool
    near_singular: bool

    @property
    def passed(self) -> bool:
        return self.hermitian and self.positive and self.normalized

    def to_json(self) -> dict:
        return {
            "hermiticity_residual": self.hermiticity_residual,
            "min_eigenvalue": self.min_eigenvalue,
            "normalization_residual": self.normalization_residual,
            "tol": self.tol,
            "verdicts": {"hermitian": self.hermitian, "positive": self.positive,
                         "normalized": self.normalized},
            "near_singular": self.near_singular,
            "passed": self.passed,
        }


def verify_axioms(t: CorrelationTensor, tol: float = PREDICATE_TOL,
                  norm_tol: float | None = None) -> AxiomReport:
    """Check Hermiticity, positivity and normalization of ``t``.

    Positivity is checked as positive semidefiniteness; a smallest
    eigenvalue within ``tol`` of zero is reported through
    ``near_singular`` but does not fail the check.
    """
    norm_tol = tol if norm_tol is None else norm_tol
    m = t.matrix()
    herm = hermiticity_residual(m)
    lam = min_eigenvalue_hermitian(m)
    norm = float(abs(t.entries[(0,) * (2 * t.n_events)] - 1.0))
    return AxiomReport(
        hermiticity_residual=herm,
        min_eigenvalue=lam,
        normalization_residual=norm,
        tol=tol,
        hermitian=herm <= tol,
        positive=lam >= -tol,
        normalized=norm <= norm_tol,
        near_singular=abs(lam) <= tol,
    )


# ---------------------------------------------------------------- evaluation

def _insert_measurements(x: np.ndarray, nb: int, nl: int, meas: Sequence[int],
                         d: int, n: int, ops: np.ndarray) -> np.ndarray:
    """Multiply ``x`` by basis operators on the qudits in ``meas`` from both sides.

    ``x`` has ``nb`` batch axes (``nl`` left then ``nb - nl`` right)
    followed by a ``(d**n, d**n)`` operator. New left axes are appended
    after the existing left ones, new right axes after the right ones.
    """
    D = d**n
    batch = list(range(nb))
    rows = [nb + q for q in range(n)]
    cols = [nb + n + q for q in range(n)]
    lab = nb + 2 * n
    new_rows, new_cols = list(rows), list(cols)
    mu, nu = [], []
    operands = [x.reshape(x.shape[:nb] + (d,) * (2 * n)), batch + rows + cols]
    for q in meas:
        m, v, r, c = lab, lab + 1, lab + 2, lab + 3
        lab += 4
        operands += [ops, [m, r, rows[q]], ops, [v, cols[q], c]]
        new_rows[q], new_cols[q] = r, c
        mu.append(m)
        nu.append(v)
    out = batch[:nl] + mu + batch[nl:] + nu + new_rows + new_cols
    y = np.einsum(*operands, out, optimize="greedy")
    return y.reshape(y.shape[: nb + 2 * len(meas)] + (D, D))


def _close(x: np.ndarray, nb: int, nl: int, meas: Sequence[int], d: int, n: int,
           ops: np.ndarray) -> np.ndarray:
    """``Tr[P_mu x P_nu]`` for the final step; unmeasured qudits are traced."""
    batch = list(range(nb))
    rows = [nb + q for q in range(n)]
    cols = [nb + n + q for q in range(n)]
    lab = nb + 2 * n
    meas_set = set(meas)
    for q in range(n):
        if q not in meas_set:
            cols[q] = rows[q]
    operands = [x.reshape(x.shape[:nb] + (d,) * (2 * n)), batch + rows + cols]
    mu, nu = [], []
    for q in meas:
        m, v, a = lab, lab + 1, lab + 2
        lab += 3
        operands += [ops, [m, a, rows[q]], ops, [v, cols[q], a]]
        mu.append(m)
        nu.append(v)
    out = batch[:nl] + mu + batch[nl:] + nu
    return np.einsum(*operands, out, optimize="greedy")


def _apply_kraus(x: np.ndarray, ch: KrausChannel) -> np.ndarray:
    out = np.zeros_like(x)
    for k in ch.kraus:
        out += k @ x @ k.conj().T
    return out


def chain_tensor(op, d: int, n: int, measured: Sequence[Sequence[int]],
                 channels: Sequence[KrausChannel | None], basis: PauliBasis) -> np.ndarray:
    """Entries ``Tr[P^K_mu E_K(.. E_1(P^0_mu op P^0_nu) ..) P^K_nu]``.

    ``op`` is any ``d**n`` square matrix (it need not be a state).
    ``measured[k]`` lists the qudits measured at step ``k``; ``channels[k]``
    acts between steps ``k`` and ``k+1`` (``None`` means identity). The
    operator is pushed through the steps once per batch of indices, so
    prefixes are shared by all later indices.
    """
    if basis.dim != d:
        raise StructuralError(f"basis has dimension {basis.dim}, model has {d}")
    D = d**n
    x = np.asarray(op, dtype=np.complex128)
    if x.shape != (D, D):
        raise StructuralError(f"operator must be {D}x{D}, got {x.shape}")
    if len(channels) != len(measured) - 1:
        raise StructuralError("need exactly one channel between consecutive steps")
    ops = basis.ops
    nl = nb = 0
    for meas, ch in zip(measured[:-1], channels):
        x = _insert_measurements(x, nb, nl, meas, d, n, ops)
        nl += len(meas)
        nb += 2 * len(meas)
        if ch is not None:
            if ch.in_dim != D or ch.out_dim != D:
                raise StructuralError(f"channel must map {D} -> {D}")
            x = _apply_kraus(x, ch)
    return _close(x, nb, nl, measured[-1], d, n, ops)


def chain_operators(op, d: int, n: int, measured: Sequence[Sequence[int]],
                    channels: Sequence[KrausChannel | None], basis: PauliBasis) -> np.ndarray:
    """Like :func:`chain_tensor` but without the final trace.

    Returns shape ``(d*d,) * 2N + (d**n, d**n)``: the operator
    ``P^K_mu E_K(..) P^K_nu`` for every index pair.
    """
    if basis.dim != d:
        raise StructuralError(f"basis has dimension {basis.dim}, model has {d}")
    D = d**n
    x = np.asarray(op, dtype=np.complex128)
    if x.shape != (D, D):
        raise StructuralError(f"operator must be {D}x{D}, got {x.shape}")
    if len(channels) != len(measured) - 1:
        raise StructuralError("need exactly one channel between consecutive steps")
    nl = nb = 0
    for k, meas in enumerate(measured):
        x = _insert_measurements(x, nb, nl, meas, d, n, basis.ops)
        nl += len(meas)
        nb += 2 * len(meas)
        if k < len(channels) and channels[k] is not None:
            x = _apply_kraus(x, channels[k])
    return x


def dct_spacetime(model: ProcessModel, basis: PauliBasis) -> CorrelationTensor:
    """Correlation tensor of a general space-time process."""
    measured = [s.measured for s in model.steps]
    ent = chain_tensor(model.initial.mat, model.local_dim, model.num_qudits, measured,
                       model.channels, basis)
    return CorrelationTensor(model.local_dim, model.n_events, ent, "spatiotemporal")


def dct_spatial(rho, basis: PauliBasis, n: int) -> CorrelationTensor:
    """``T[mu; nu] = Tr[(⊗ s_mu) rho (⊗ s_nu)]`` for an ``n``-qudit state."""
    mat = rho.mat if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=np.complex128)
    if mat.shape != (basis.dim**n, basis.dim**n):
        raise StructuralError(f"state must be {basis.dim**n}-dimensional for {n} qudits")
    ent = chain_tensor(mat, basis.dim, n, [tuple(range(n))], [], basis)
    return CorrelationTensor(basis.dim, n, ent, "spatial")


def dct_temporal(rho, channels: Sequence[KrausChannel], basis: PauliBasis) -> CorrelationTensor:
    """``T[mu; nu] = Tr[s_muN E_{N-1}(.. E_1(s_mu1 rho s_nu1) ..) s_nuN]`` for one qudit."""
    mat = rho.mat if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=np.complex128)
    if mat.shape != (basis.dim, basis.dim):
        raise StructuralError(f"state must be {basis.dim}x{basis.dim}")
    channels = list(channels)
    ent = chain_tensor(mat, basis.dim, 1, [(0,)] * (len(channels) + 1), channels, basis)
    return CorrelationTensor(basis.dim, len(channels) + 1, ent, "temporal")


def reduce_events(t: CorrelationTensor, keep: Iterable[int]) -> CorrelationTensor:
    """Set the indices of every event not in ``keep`` to 0 on both sides."""
    keep = sorted(set(keep))
    n = t.n_events
    if not keep or any(k < 0 or k >= n for k in keep):
        raise StructuralError(f"keep={keep} invalid for {n} events")
    idx = tuple(slice(None) if (i % n) in keep else 0 for i in range(2 * n))
    return CorrelationTensor(t.d, len(keep), t.entries[idx], t.provenance)


def convex_mix(ts: Sequence[CorrelationTensor], weights: Sequence[float]) -> CorrelationTensor:
    w = np.asarray(weights, dtype=float)
    if len(ts) != len(w) or np.any(w < 0) or abs(w.sum() - 1.0) > IDENTITY_TOL:
        raise ValueError("weights must be a probability vector matching the tensors")
    shapes = {(t.d, t.n_events) for t in ts}
    if len(shapes) != 1:
        raise StructuralError("tensors differ in shape")
    ent = sum(wi * t.entries for wi, t in zip(w, ts))
    return ts[0].with_entries(ent, "external")
