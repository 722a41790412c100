"""Doubled density operators.

``W`` acts on ``H_L ⊗ H_R`` with factor order ``(L_1..L_N, R_1..R_N)``,
each factor of the local dimension ``d``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .numerics import (
    PREDICATE_TOL,
    DomainError,
    StructuralError,
    as_cmatrix,
    hermiticity_residual,
    matrix_from_json,
    matrix_to_json,
    min_eigenvalue_hermitian,
    partial_trace,
)
from .pauli import PauliBasis, product_basis
from .process_dsl import ProcessModel, event_layout
from .qobjects import DensityOperator, KrausChannel, apply_channel
from .tensors import (
    CorrelationTensor,
    chain_operators,
    chain_tensor,
    dct_temporal,
    verify_axioms,
)


@dataclass(frozen=True, eq=False)
class DoubledDensityOperator:
    d: int
    n_events: int
    mat: np.ndarray

    def __post_init__(self):
        m = as_cmatrix(self.mat, "doubled density operator")
        side = self.d ** (2 * self.n_events)
        if m.shape != (side, side):
            raise StructuralError(f"expected a {side}x{side} matrix, got {m.shape}")
        object.__setattr__(self, "mat", m)

    @property
    def dims(self) -> list[int]:
        return [self.d] * (2 * self.n_events)

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.mat))

    def to_json(self) -> dict:
        out = {"d": self.d, "n_events": self.n_events}
        out.update(matrix_to_json(self.mat))
        return out

    @classmethod
    def from_json(cls, obj) -> "DoubledDensityOperator":
        try:
            d, n = int(obj["d"]), int(obj["n_events"])
        except (KeyError, TypeError, ValueError) as exc:
            raise StructuralError(f"malformed DDO object: {exc}") from None
        return cls(d, n, matrix_from_json(obj))


def _expand(coeffs: np.ndarray, ops: np.ndarray) -> np.ndarray:
    """``sum_a c[a1..aK] ops[a1] ⊗ .. ⊗ ops[aK]`` without forming the products."""
    k = coeffs.ndim
    d = ops.shape[1]
    x = coeffs
    for _ in range(k):
        x = np.tensordot(x, ops, axes=([0], [0]))
    # axes are now (r1, c1, r2, c2, ...)
    x = x.transpose(list(range(0, 2 * k, 2)) + list(range(1, 2 * k, 2)))
    return x.reshape(d**k, d**k)


def _coefficients(m: np.ndarray, k: int, ops: np.ndarray) -> np.ndarray:
    """``Tr[m (ops[a1] ⊗ .. ⊗ ops[aK])]`` for every multi-index."""
    d = ops.shape[1]
    x = m.reshape((d,) * (2 * k))
    x = x.transpose([i for j in range(k) for i in (j, k + j)])
    for _ in range(k):
        x = np.tensordot(x, ops, axes=([0, 1], [2, 1]))
    return x


def assemble(t: CorrelationTensor, basis: PauliBasis) -> DoubledDensityOperator:
    """``W = d**(-2N) sum T[mu; nu] (⊗ s_mu) ⊗ (⊗ s_nu)``."""
    if basis.dim != t.d:
        raise StructuralError("basis and tensor dimensions differ")
    w = _expand(t.entries, basis.ops) / float(t.d) ** (2 * t.n_events)
    return DoubledDensityOperator(t.d, t.n_events, w)


def disassemble(w: DoubledDensityOperator, basis: PauliBasis) -> CorrelationTensor:
    """Inverse of :func:`assemble`: ``T[mu; nu] = Tr[W (⊗ s_mu) ⊗ (⊗ s_nu)]``."""
    if basis.dim != w.d:
        raise StructuralError("basis and DDO dimensions differ")
    return CorrelationTensor(w.d, w.n_events, _coefficients(w.mat, 2 * w.n_events, basis.ops))


def reduce_left(w: DoubledDensityOperator) -> np.ndarray:
    """Trace out every left factor; the right reduced state."""
    n = w.n_events
    return partial_trace(w.mat, w.dims, range(n, 2 * n))


def reduce_right(w: DoubledDensityOperator) -> np.ndarray:
    """Trace out every right factor; the left reduced state."""
    return partial_trace(w.mat, w.dims, range(w.n_events))


@dataclass(frozen=True)
class TemporalityReport:
    left_hermiticity_residual: float
    right_hermiticity_residual: float
    left_min_eig: float
    right_min_eig: float
    left_trace: complex
    right_trace: complex
    tol: float
    verdict: str  # "temporal_signature" or "inconclusive"

    def to_json(self) -> dict:
        return {
            "left_hermiticity_residual": self.left_hermiticity_residual,
            "right_hermiticity_residual": self.right_hermiticity_residual,
            "left_min_eig": self.left_min_eig,
            "right_min_eig": self.right_min_eig,
            "left_trace": [self.left_trace.real, self.left_trace.imag],
            "right_trace": [self.right_trace.real, self.right_trace.imag],
            "tol": self.tol,
            "verdict": self.verdict,
        }


def detect_temporality(w: DoubledDensityOperator, tol: float = PREDICATE_TOL) -> TemporalityReport:
    """Check whether both one-sided reductions of ``w`` are density operators.

    A reduction that is not Hermitian, not of unit trace or not positive
    witnesses temporal correlation. Passing all checks proves nothing, so
    the other verdict is ``inconclusive``.
    """
    # reduce_right keeps the left factors
    left, right = reduce_right(w), reduce_left(w)
    lh, rh = hermiticity_residual(left), hermiticity_residual(right)
    le, re = min_eigenvalue_hermitian(left), min_eigenvalue_hermitian(right)
    lt, rt = complex(np.trace(left)), complex(np.trace(right))
    bad = (
        max(lh, rh) > tol
        or abs(lt - 1) > tol
        or abs(rt - 1) > tol
        or min(le, re) < -tol
    )
    return TemporalityReport(lh, rh, le, re, lt, rt, tol,
                             "temporal_signature" if bad else "inconclusive")


def recover_state_at_step(w: DoubledDensityOperator, model: ProcessModel, k: int,
                          tol: float = PREDICATE_TOL) -> DensityOperator:
    """The state at step ``k`` read off an information-complete DDO.

    Every event outside step ``k`` is traced out on both sides, then the
    right half. The result is returned in qudit order.
    """
    if not model.information_complete:
        raise DomainError("state recovery needs an information-complete process")
    if not 0 <= k < len(model.steps):
        raise DomainError(f"step {k} out of range")
    if w.n_events != model.n_events or w.d != model.local_dim:
        raise StructuralError("DDO does not match the process model")
    events = [e for e in event_layout(model) if e.step == k]
    n = w.n_events
    keep = [e.index for e in events]  # left factors; right halves dropped below
    local = partial_trace(w.mat, w.dims, keep + [n + i for i in keep])
    m = len(keep)
    # left reduced state of the spatial DDO on the kept events
    rho = partial_trace(local, [w.d] * (2 * m), range(m))
    slots = [e.qudit for e in events]
    perm = [slots.index(q) for q in range(model.num_qudits)]
    t = rho.reshape((w.d,) * (2 * m)).transpose(perm + [m + p for p in perm])
    return DensityOperator(t.reshape(rho.shape), tol=tol)


# ------------------------------------------------------------- superdensity

def superdensity_normalization(d: int, n_events: int) -> float:
    """Prefactor fixed so the single-event maximally mixed case has unit trace."""
    return float(d) ** (-3 * n_events)


def to_superdensity(w: DoubledDensityOperator, basis: PauliBasis) -> np.ndarray:
    """``c * sum T[mu; nu] |⊗s_mu>> <<⊗s_nu|`` with row-major vectorization.

    ``c = d**(-3N)`` gives unit trace for every process-generated tensor,
    whose matricization has trace ``d**(2N)``.
    """
    t = disassemble(w, basis).matrix()
    v = product_basis(basis, w.n_events)
    v = v.reshape(v.shape[0], -1).T  # column a is vec(⊗ s_a)
    return superdensity_normalization(w.d, w.n_events) * (v @ t @ v.conj().T)


# ---------------------------------------------------------------- Jamiolkowski

def _power(dim: int, d: int) -> int:
    k, p = 0, 1
    while p < dim:
        p *= d
        k += 1
    if p != dim:
        raise StructuralError(f"dimension {dim} is not a power of {d}")
    return k


def gen_jamiolkowski(ch: KrausChannel, basis: PauliBasis) -> np.ndarray:
    """``d**(-n) sum_a E(s_a) ⊗ s_a`` on output ⊗ input, ``s_a`` the n-qudit basis."""
    if ch.in_dim != ch.out_dim:
        raise StructuralError("channel must be square")
    n = _power(ch.in_dim, basis.dim)
    ops = product_basis(basis, n)
    images = apply_channel(ch, ops)
    D = ch.in_dim
    j = np.einsum("aij,akl->ikjl", images, ops).reshape(D * D, D * D)
    return j / D


def apply_jamiolkowski(j: np.ndarray, rho) -> np.ndarray:
    """``Tr_I[J (I ⊗ rho)]``."""
    rho = as_cmatrix(rho)
    D = rho.shape[0]
    prod = j @ np.kron(np.eye(j.shape[0] // D), rho)
    return partial_trace(prod, [j.shape[0] // D, D], [0])


def doubled_jamiolkowski(channels: Sequence[KrausChannel], basis: PauliBasis) -> np.ndarray:
    """Doubled generalized Jamiolkowski matrices of a single-qudit channel chain.

    Shape ``(d*d,) * 2N + (d*d, d*d)``; block ``[mu, nu]`` is
    ``d**-1 sum_a [s_muN E_{N-1}(.. E_1(s_mu1 s_a s_nu1) ..) s_nuN] ⊗ s_a``.
    """
    d = basis.dim
    nsteps = len(channels) + 1
    out = None
    for a, s in enumerate(basis.ops):
        blk = chain_operators(s, d, 1, [(0,)] * nsteps, list(channels), basis)
        term = np.einsum("...ij,kl->...ikjl", blk, s).reshape(blk.shape[:-2] + (d * d, d * d))
        out = term if out is None else out + term
    return out / d


def closed_form_ddo(model: ProcessModel, basis: PauliBasis) -> DoubledDensityOperator:
    """Temporal DDO from the doubled Jamiolkowski matrices.

    The partial trace over the Jamiolkowski support against ``I ⊗ rho``
    is carried out one basis element ``s_a`` at a time, so the full
    doubled matrix is never stored. The result carries the ``d**(-2N)``
    prefactor that makes ``Tr W = 1``.
    """
    if not model.is_temporal:
        raise DomainError("closed form is available for single-qudit temporal processes only")
    d = basis.dim
    if d != model.local_dim:
        raise StructuralError("basis and model dimensions differ")
    rho = model.initial.mat
    chans = model.channels
    nsteps = len(model.steps)
    coeffs = 0
    for s in basis.ops:
        blk = chain_operators(s, d, 1, [(0,)] * nsteps, chans, basis)
        # Tr[(X ⊗ s)(I ⊗ rho)] = Tr X * Tr(s rho)
        coeffs = coeffs + np.einsum("...ii->...", blk) * np.trace(s @ rho) / d
    n = model.n_events
    w = _expand(coeffs, basis.ops) / float(d) ** (2 * n)
    return DoubledDensityOperator(d, n, w)


# -------------------------------------------------------- doubled channels

def dqc_apply(phi, t: CorrelationTensor, out_d: int | None = None) -> CorrelationTensor:
    """``R[a; b] = sum Phi[a, b; mu, nu] T[mu; nu]`` with ``Phi`` a matrix on flattened tensors."""
    phi = np.asarray(phi, dtype=np.complex128)
    size = t.entries.size
    if phi.ndim != 2 or phi.shape[1] != size:
        raise StructuralError(f"map needs {size} input columns, got shape {phi.shape}")
    out_d = t.d if out_d is None else out_d
    q = out_d * out_d
    m2, rem = 0, phi.shape[0]
    while rem > 1 and rem % q == 0:
        rem //= q
        m2 += 1
    if rem != 1 or m2 % 2:
        raise StructuralError(f"output size {phi.shape[0]} is not (d*d)**(2M)")
    return CorrelationTensor(out_d, m2 // 2, phi @ t.entries.reshape(-1))


def dqc_state_map(l: KrausChannel, channels: Sequence[KrausChannel], basis: PauliBasis) -> np.ndarray:
    """Doubled channel realized by a state map ``L`` with channel maps left unchanged.

    The input state is read from the entries ``T[0..0; b, 0..0] = Tr(rho s_b)``
    of a temporal tensor; the output is the tensor of ``L(rho)`` pushed
    through ``channels``.
    """
    d = basis.dim
    if l.in_dim != d or l.out_dim != d:
        raise StructuralError("state map must act on one qudit")
    nsteps = len(channels) + 1
    q = d * d
    size = q ** (2 * nsteps)
    phi = np.zeros((size, size), dtype=np.complex128)
    for b, s in enumerate(basis.ops):
        col = chain_tensor(apply_channel(l, s), d, 1, [(0,)] * nsteps, list(channels), basis)
        src = np.ravel_multi_index((0,) * nsteps + (b,) + (0,) * (nsteps - 1), (q,) * (2 * nsteps))
        phi[:, src] = col.reshape(-1) / d
    return phi


def dqc_maximally_mixed(d: int, n_events: int) -> np.ndarray:
    """Doubled channel ``T -> T[0;0] * I``.

    The image is the tensor of the maximally mixed ``n_events``-qudit state.
    """
    q = d * d
    side = q**n_events
    phi = np.zeros((side * side, side * side), dtype=np.complex128)
    diag = np.flatnonzero(np.eye(side).reshape(-1))
    phi[diag, 0] = 1.0
    return phi


@dataclass(frozen=True)
class DQCAudit:
    samples: int
    max_hermiticity_residual: float
    min_eigenvalue: float
    max_normalization_residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return (self.max_hermiticity_residual <= self.tol
                and self.min_eigenvalue >= -self.tol
                and self.max_normalization_residual <= self.tol)


def audit_dqc(phi, d: int, n_events: int, rng: np.random.Generator, samples: int = 200,
              tol: float = PREDICATE_TOL, out_d: int | None = None) -> DQCAudit:
    """Apply ``phi`` to random temporal tensors and check the outputs' axioms."""
    from .pauli import build_basis
    from .sampling import random_channel, random_density

    basis = build_basis(d)
    herm, lam, norm = 0.0, np.inf, 0.0
    for _ in range(samples):
        rho = random_density(d, rng)
        chans = [random_channel(d, rng) for _ in range(n_events - 1)]
        r = dqc_apply(phi, dct_temporal(rho, chans, basis), out_d)
        rep = verify_axioms(r, tol)
        herm = max(herm, rep.hermiticity_residual)
        lam = min(lam, rep.min_eigenvalue)
        norm = max(norm, rep.normalization_residual)
    return DQCAudit(samples, herm, float(lam), norm, tol)


# ------------------------------------------------------ one-event reductions

@dataclass(frozen=True)
class EventAudit:
    event: int
    state_ok: bool
    form_residual: float

    @property
    def passed(self) -> bool:
        return self.state_ok and self.form_residual <= PREDICATE_TOL


def one_event_audit(t: CorrelationTensor, basis: PauliBasis,
                    tol: float = PREDICATE_TOL) -> list[EventAudit]:
    """For each event, check that its reduced tensor is that of a density operator.

    The candidate state is read off the row ``T[0; nu]``; the reduced
    tensor must then equal ``Tr(s_mu rho s_nu)``. Informational only.
    """
    from .tensors import reduce_events

    d = basis.dim
    out = []
    for i in range(t.n_events):
        r = reduce_events(t, [i]).matrix()
        rho = np.einsum("b,bij->ij", r[0], basis.ops) / d
        try:
            DensityOperator(rho, tol=tol)
            ok = True
        except (DomainError, StructuralError):
            ok = False
        expect = np.einsum("aij,jk,bki->ab", basis.ops, rho, basis.ops)
        out.append(EventAudit(i, ok, float(np.max(np.abs(expect - r)))))
    return out
