"""States, channels and instruments.

Every object validates itself at construction and keeps the residuals it
measured. Nothing is renormalized or repaired: a matrix that misses the
tolerance raises :class:`DomainError`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .numerics import (
    PREDICATE_TOL,
    DomainError,
    StructuralError,
    as_cmatrix,
    dagger,
    hermiticity_residual,
    matrix_from_json,
    matrix_to_json,
    min_eigenvalue_hermitian,
)

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


@dataclass(frozen=True, eq=False)
class DensityOperator:
    mat: np.ndarray
    tol: float = PREDICATE_TOL
    hermiticity_residual: float = field(init=False)
    trace_residual: float = field(init=False)
    min_eigenvalue: float = field(init=False)

    def __post_init__(self):
        m = as_cmatrix(self.mat, "density matrix")
        if m.shape[0] != m.shape[1]:
            raise StructuralError(f"density matrix must be square, got {m.shape}")
        herm = hermiticity_residual(m)
        tr = abs(np.trace(m) - 1.0)
        lam = min_eigenvalue_hermitian(m)
        object.__setattr__(self, "mat", m)
        object.__setattr__(self, "hermiticity_residual", herm)
        object.__setattr__(self, "trace_residual", float(tr))
        object.__setattr__(self, "min_eigenvalue", lam)
        if herm > self.tol or tr > self.tol or lam < -self.tol:
            raise DomainError(
                f"not a density operator (hermiticity {herm:.3g}, trace deviation {tr:.3g}, "
                f"min eigenvalue {lam:.3g})"
            )

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @classmethod
    def from_ket(cls, ket) -> "DensityOperator":
        v = np.asarray(ket, dtype=np.complex128).reshape(-1)
        nrm = np.linalg.norm(v)
        if not np.isfinite(nrm) or abs(nrm - 1.0) > PREDICATE_TOL:
            raise DomainError(f"ket must be normalized, norm is {nrm}")
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityOperator":
        return cls(np.eye(dim, dtype=np.complex128) / dim)

    @classmethod
    def from_bloch(cls, r: Sequence[float]) -> "DensityOperator":
        r = np.asarray(r, dtype=float)
        if r.shape != (3,) or not np.all(np.isfinite(r)):
            raise DomainError("Bloch vector needs three finite components")
        if np.linalg.norm(r) > 1.0 + 1e-12:
            raise DomainError(f"Bloch vector norm {np.linalg.norm(r)} exceeds 1")
        m = np.eye(2, dtype=np.complex128) + r[0] * _PAULI["x"] + r[1] * _PAULI["y"] + r[2] * _PAULI["z"]
        return cls(m / 2)

    @classmethod
    def singlet(cls) -> "DensityOperator":
        psi = np.array([0, 1, -1, 0], dtype=np.complex128) / np.sqrt(2)
        return cls.from_ket(psi)


def _completeness_residual(kraus: np.ndarray) -> float:
    s = np.einsum("aji,ajk->ik", kraus.conj(), kraus)
    return float(np.max(np.abs(s - np.eye(s.shape[0]))))


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Completely positive trace-preserving map ``m -> sum_a K_a m K_a†``."""

    kraus: np.ndarray  # shape (n_kraus, out_dim, in_dim)
    tol: float = PREDICATE_TOL
    tp_residual: float = field(init=False)

    def __post_init__(self):
        ks = np.asarray(self.kraus, dtype=np.complex128)
        if ks.ndim == 2:
            ks = ks[None]
        if ks.ndim != 3 or ks.shape[0] == 0 or 0 in ks.shape:
            raise StructuralError("need a non-empty list of equally shaped Kraus matrices")
        if not np.all(np.isfinite(ks)):
            raise StructuralError("Kraus operators have non-finite entries")
        res = _completeness_residual(ks)
        object.__setattr__(self, "kraus", ks)
        object.__setattr__(self, "tp_residual", res)
        if res > self.tol:
            raise DomainError(f"Kraus operators are not trace preserving (residual {res:.3g})")

    @property
    def in_dim(self) -> int:
        return self.kraus.shape[2]

    @property
    def out_dim(self) -> int:
        return self.kraus.shape[1]

    def __call__(self, m) -> np.ndarray:
        return apply_channel(self, m)

    def then(self, other: "KrausChannel") -> "KrausChannel":
        """Composition: apply ``self`` first, then ``other``."""
        if other.in_dim != self.out_dim:
            raise StructuralError("channel dimensions do not compose")
        ks = np.einsum("aij,bjk->abik", other.kraus, self.kraus)
        return KrausChannel(ks.reshape(-1, other.out_dim, self.in_dim), tol=max(self.tol, other.tol))

    def choi(self) -> np.ndarray:
        """``sum_ij E(E_ij) ⊗ E_ij``."""
        d = self.in_dim
        out = np.zeros((self.out_dim * d, self.out_dim * d), dtype=np.complex128)
        for i in range(d):
            for j in range(d):
                e = np.zeros((d, d), dtype=np.complex128)
                e[i, j] = 1.0
                out += np.kron(apply_channel(self, e), e)
        return out


def apply_channel(ch: KrausChannel, m) -> np.ndarray:
    """``sum_a K_a m K_a†``; ``m`` may be any square matrix or a stack of them."""
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim < 2 or m.shape[-2:] != (ch.in_dim, ch.in_dim):
        raise StructuralError(f"channel expects {ch.in_dim}x{ch.in_dim} input, got {m.shape}")
    out = np.zeros(m.shape[:-2] + (ch.out_dim, ch.out_dim), dtype=np.complex128)
    for k in ch.kraus:
        out += k @ m @ k.conj().T
    return out


@dataclass(frozen=True, eq=False)
class Instrument:
    """Measurement instrument with operators ``K_a``; ``sum_a K_a†K_a = I``."""

    kraus: np.ndarray  # shape (n_outcomes, dim, dim)
    labels: tuple = ()
    tol: float = PREDICATE_TOL
    completeness_residual: float = field(init=False)

    def __post_init__(self):
        ks = np.asarray(self.kraus, dtype=np.complex128)
        if ks.ndim != 3 or ks.shape[0] == 0 or ks.shape[1] != ks.shape[2] or ks.shape[1] == 0:
            raise StructuralError("instrument needs a non-empty list of square matrices")
        if not np.all(np.isfinite(ks)):
            raise StructuralError("instrument has non-finite entries")
        labels = tuple(str(x) for x in self.labels) or tuple(str(a) for a in range(ks.shape[0]))
        if len(labels) != ks.shape[0] or len(set(labels)) != len(labels):
            raise StructuralError("labels must be distinct and match the number of outcomes")
        res = _completeness_residual(ks)
        object.__setattr__(self, "kraus", ks)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "completeness_residual", res)
        if res > self.tol:
            raise DomainError(f"instrument is not complete (residual {res:.3g})")

    @property
    def dim(self) -> int:
        return self.kraus.shape[1]

    def __len__(self) -> int:
        return self.kraus.shape[0]

    @classmethod
    def trivial(cls, dim: int) -> "Instrument":
        """Single outcome ``K = I``: equivalent to not measuring."""
        return cls(np.eye(dim, dtype=np.complex128)[None], labels=("*",))

    @classmethod
    def projective(cls, dim: int) -> "Instrument":
        """Computational-basis projectors."""
        ks = np.zeros((dim, dim, dim), dtype=np.complex128)
        for a in range(dim):
            ks[a, a, a] = 1.0
        return cls(ks)

    @classmethod
    def from_bloch(cls, obs: "BlochObservable") -> "Instrument":
        """Projectors ``(I ± a·σ)/2``; outcome ``0`` is the ``+1`` eigenspace."""
        a = obs.matrix()
        eye = np.eye(2, dtype=np.complex128)
        return cls(np.array([(eye + a) / 2, (eye - a) / 2]))


def povm_of(inst: Instrument) -> list[np.ndarray]:
    """POVM elements ``F_a = K_a† K_a``."""
    return [dagger(k) @ k for k in inst.kraus]


@dataclass(frozen=True)
class BlochObservable:
    """A ±1-valued qubit observable ``a·σ`` with unit vector ``a``."""

    vector: tuple

    def __post_init__(self):
        v = tuple(float(x) for x in self.vector)
        if len(v) != 3 or not all(math.isfinite(x) for x in v):
            raise DomainError("Bloch observable needs three finite components")
        if abs(math.sqrt(sum(x * x for x in v)) - 1.0) > 1e-12:
            raise DomainError(f"Bloch observable must be a unit vector, got {v}")
        object.__setattr__(self, "vector", v)

    @classmethod
    def normalized(cls, v) -> "BlochObservable":
        v = np.asarray(v, dtype=float)
        norm = np.linalg.norm(v)
        if v.shape != (3,) or not np.isfinite(norm) or norm == 0:
            raise DomainError(f"cannot normalize {v.tolist()} to a Bloch direction")
        return cls(tuple(v / norm))

    def matrix(self) -> np.ndarray:
        x, y, z = self.vector
        return x * _PAULI["x"] + y * _PAULI["y"] + z * _PAULI["z"]


# ------------------------------------------------------------ builtin channels

#: name -> (number of parameters, arity in qudits)
BUILTIN_CHANNELS = {
    "identity": (0, 1),
    "bitflip": (1, 1),
    "phaseflip": (1, 1),
    "depolarizing": (1, 1),
    "amplitude_damping": (1, 1),
    "swap": (0, 2),
    "cnot": (0, 2),
    "rx": (1, 1),
    "ry": (1, 1),
    "rz": (1, 1),
}
_ANGLE_CHANNELS = {"rx", "ry", "rz"}
_QUBIT_ONLY = {"amplitude_damping", "cnot", "rx", "ry", "rz"}


def _shift(d: int) -> np.ndarray:
    return np.roll(np.eye(d, dtype=np.complex128), 1, axis=0)


def _clock(d: int) -> np.ndarray:
    return np.diag(np.exp(2j * np.pi * np.arange(d) / d))


def builtin_channel(name: str, params: Sequence[float] = (), d: int = 2) -> KrausChannel:
    """Standard Kraus sets on one qudit (two for ``swap``/``cnot``).

    ``bitflip``/``phaseflip`` use the cyclic shift/clock unitaries, which
    reduce to ``X``/``Z`` at ``d = 2``. ``depolarizing(p)`` maps
    ``m -> (1-p) m + p Tr(m) I/d``.
    """
    if name not in BUILTIN_CHANNELS:
        raise DomainError(f"unknown channel {name!r}")
    nparams, _ = BUILTIN_CHANNELS[name]
    params = [float(p) for p in params]
    if len(params) != nparams:
        raise DomainError(f"channel {name!r} takes {nparams} parameter(s), got {len(params)}")
    if not all(math.isfinite(p) for p in params):
        raise DomainError(f"channel {name!r} parameters must be finite")
    if name not in _ANGLE_CHANNELS and any(p < 0.0 or p > 1.0 for p in params):
        raise DomainError(f"channel {name!r} parameter must lie in [0, 1]")
    if int(d) != d or d < 2:
        raise DomainError(f"local dimension must be >= 2, got {d}")
    if name in _QUBIT_ONLY and d != 2:
        raise DomainError(f"channel {name!r} is defined for qubits only")

    eye = np.eye(d, dtype=np.complex128)
    if name == "identity":
        ks = [eye]
    elif name == "bitflip":
        (p,) = params
        ks = [np.sqrt(1 - p) * eye, np.sqrt(p) * _shift(d)]
    elif name == "phaseflip":
        (p,) = params
        ks = [np.sqrt(1 - p) * eye, np.sqrt(p) * _clock(d)]
    elif name == "depolarizing":
        from .pauli import build_basis

        (p,) = params
        ops = build_basis(d).ops
        ks = [np.sqrt(1 - p + p / d**2) * eye] + [np.sqrt(p) / d * s for s in ops[1:]]
    elif name == "amplitude_damping":
        (g,) = params
        ks = [np.array([[1, 0], [0, np.sqrt(1 - g)]]), np.array([[0, np.sqrt(g)], [0, 0]])]
    elif name == "swap":
        u = np.zeros((d * d, d * d), dtype=np.complex128)
        for i in range(d):
            for j in range(d):
                u[j * d + i, i * d + j] = 1.0
        ks = [u]
    elif name == "cnot":
        ks = [np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])]
    else:
        (theta,) = params
        axis = _PAULI[name[1]]
        ks = [math.cos(theta / 2) * eye - 1j * math.sin(theta / 2) * axis]
    ks = [k for k in ks if np.any(k != 0)]
    return KrausChannel(np.array(ks, dtype=np.complex128))


def unitary_channel(u, tol: float = PREDICATE_TOL) -> KrausChannel:
    u = as_cmatrix(u, "unitary")
    if u.shape[0] != u.shape[1]:
        raise StructuralError("unitary must be square")
    res = float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))
    if res > tol:
        raise DomainError(f"matrix is not unitary (residual {res:.3g})")
    return KrausChannel(u[None], tol=tol)


# ----------------------------------------------------------------- JSON I/O

def load_json(path) -> object:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def load_unitary(path) -> KrausChannel:
    return unitary_channel(matrix_from_json(load_json(path)))


def kraus_from_json(obj) -> np.ndarray:
    if not isinstance(obj, dict) or "kraus" not in obj:
        raise StructuralError("expected an object with a 'kraus' list")
    ks = obj["kraus"]
    if not isinstance(ks, list) or not ks:
        raise StructuralError("'kraus' must be a non-empty list")
    mats = [matrix_from_json(k) for k in ks]
    if len({m.shape for m in mats}) != 1:
        raise StructuralError("Kraus matrices differ in shape")
    if "dim" in obj and int(obj["dim"]) != mats[0].shape[1]:
        raise StructuralError(f"'dim' {obj['dim']} disagrees with matrices {mats[0].shape}")
    return np.array(mats)


def channel_from_json(obj) -> KrausChannel:
    return KrausChannel(kraus_from_json(obj))


def channel_to_json(ch: KrausChannel) -> dict:
    return {"dim": ch.in_dim, "kraus": [matrix_to_json(k) for k in ch.kraus]}


def instrument_from_json(obj) -> Instrument:
    """Instrument record: ``{"dim", "kraus", "labels"?}`` or ``{"bloch": [x, y, z]}``."""
    if isinstance(obj, dict) and "bloch" in obj:
        return Instrument.from_bloch(BlochObservable.normalized(obj["bloch"]))
    ks = kraus_from_json(obj)
    return Instrument(ks, labels=tuple(obj.get("labels", ())))


def instrument_to_json(inst: Instrument) -> dict:
    return {
        "dim": inst.dim,
        "kraus": [matrix_to_json(k) for k in inst.kraus],
        "labels": list(inst.labels),
    }


def load_instruments(path) -> list[Instrument]:
    obj = load_json(Path(path))
    if not isinstance(obj, list):
        raise StructuralError("instruments file must hold a JSON list")
    return [instrument_from_json(o) for o in obj]
