"""Doubled measurements and the Born rule on doubled density operators.

:func:`qm_oracle` is a plain forward simulation of the process with
Lüders updates. It shares no code with the tensor pipeline and serves as
the cross-check for :func:`born_distribution`.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .numerics import PREDICATE_TOL, DomainError, StructuralError, kron_all
from .pauli import PauliBasis
from .process_dsl import ProcessModel, event_layout
from .qobjects import Instrument
from .tensors import CorrelationTensor, dct_spacetime


@dataclass(frozen=True, eq=False)
class DoubledMeasurement:
    """Local (one instrument per event) or joint (one instrument on all events)."""

    kind: str
    instruments: tuple

    def __post_init__(self):
        if self.kind not in ("local", "joint"):
            raise ValueError(f"unknown measurement kind {self.kind!r}")
        inst = tuple(self.instruments)
        if not inst or (self.kind == "joint" and len(inst) != 1):
            raise StructuralError("a joint measurement has exactly one instrument")
        object.__setattr__(self, "instruments", inst)

    @classmethod
    def local(cls, instruments: Sequence[Instrument]) -> "DoubledMeasurement":
        return cls("local", tuple(instruments))

    @classmethod
    def joint(cls, instrument: Instrument) -> "DoubledMeasurement":
        return cls("joint", (instrument,))

    def outcomes(self) -> Iterator[tuple]:
        return itertools.product(*(inst.labels for inst in self.instruments))

    def _ops(self, labels: Sequence[str]) -> list[np.ndarray]:
        if len(labels) != len(self.instruments):
            raise StructuralError("one label per instrument is required")
        return [inst.kraus[inst.labels.index(a)] for inst, a in zip(self.instruments, labels)]

    def operator(self, labels: Sequence[str]) -> np.ndarray:
        """``(⊗K) ⊗ (⊗K†)`` (local) or ``K ⊗ K†`` (joint)."""
        ks = self._ops(labels)
        left = kron_all(ks)
        return np.kron(left, kron_all(k.conj().T for k in ks))

    def effect_tensor(self, labels: Sequence[str], basis: PauliBasis) -> "EffectTensor":
        ks = self._ops(labels)
        d = basis.dim
        if self.kind == "local":
            left = [np.einsum("ij,aji->a", k, basis.ops) for k in ks]
            right = [np.einsum("ij,aji->a", k.conj().T, basis.ops) for k in ks]
            ent = np.ones(())
            for v in left + right:
                ent = np.multiply.outer(ent, v)
            n = len(ks)
            return EffectTensor(d, n, ent / float(d) ** (2 * n))
        from .ddo import _coefficients

        m = self.operator(labels)
        n = _events_of(m.shape[0], d)
        return EffectTensor(d, n, _coefficients(m, 2 * n, basis.ops) / float(d) ** (2 * n))


def _events_of(side: int, d: int) -> int:
    k, p = 0, 1
    while p < side:
        p *= d
        k += 1
    if p != side or k % 2:
        raise StructuralError(f"operator side {side} is not d**(2N)")
    return k // 2


@dataclass(frozen=True, eq=False)
class EffectTensor:
    d: int
    n_events: int
    entries: np.ndarray


def born(w, m) -> complex:
    """``Tr(M W)``; ``w`` a DDO or matrix, ``m`` an outcome operator."""
    wm = getattr(w, "mat", w)
    m = np.asarray(m)
    if m.shape != wm.shape:
        raise StructuralError(f"measurement {m.shape} does not match DDO {wm.shape}")
    return complex(np.sum(m * wm.T))


def born_by_contraction(t: CorrelationTensor, e: EffectTensor) -> complex:
    """``sum_{mu, nu} T[mu; nu] E[mu; nu]``."""
    if t.entries.shape != e.entries.shape:
        raise StructuralError("tensor and effect index ranges differ")
    return complex(np.sum(t.entries * e.entries))


@dataclass
class OutcomeDistribution:
    probs: dict
    residual_imag: float = 0.0
    warnings: list = field(default_factory=list)

    def total(self) -> float:
        return float(sum(self.probs.values()))

    def max_deviation(self, other: "OutcomeDistribution") -> float:
        keys = set(self.probs) | set(other.probs)
        return max(abs(self.probs.get(k, 0.0) - other.probs.get(k, 0.0)) for k in keys)

    def __getitem__(self, labels) -> float:
        return self.probs[tuple(str(a) for a in labels)]

    def to_json(self) -> dict:
        return {
            "probabilities": {",".join(k): v for k, v in self.probs.items()},
            "residual_imag": self.residual_imag,
            "warnings": list(self.warnings),
        }


def _check_instruments(model: ProcessModel, instruments: Sequence[Instrument]) -> None:
    if len(instruments) != model.n_events:
        raise StructuralError(f"need {model.n_events} instruments, got {len(instruments)}")
    for i, inst in enumerate(instruments):
        if inst.dim != model.local_dim:
            raise StructuralError(f"instrument {i} acts on dimension {inst.dim}, expected {model.local_dim}")


def qm_oracle(model: ProcessModel, instruments: Sequence[Instrument]) -> OutcomeDistribution:
    """Joint outcome distribution by direct forward simulation.

    At each step the measured events' operators (identity on the other
    qudits) act as ``rho -> A rho A†``, then the step's channel is applied.
    """
    _check_instruments(model, instruments)
    d, n = model.local_dim, model.num_qudits
    eye = np.eye(d, dtype=np.complex128)
    per_step = []
    i = 0
    for st in model.steps:
        per_step.append(list(range(i, i + len(st.measured))))
        i += len(st.measured)

    probs = {}
    for choice in itertools.product(*(range(len(inst)) for inst in instruments)):
        rho = model.initial.mat.copy()
        for k, st in enumerate(model.steps):
            if st.measured:
                factors = [eye] * n
                for ev, q in zip(per_step[k], st.measured):
                    factors[q] = instruments[ev].kraus[choice[ev]]
                a = factors[0]
                for f in factors[1:]:
                    a = np.kron(a, f)
                rho = a @ rho @ a.conj().T
            if st.next_channel is not None:
                out = np.zeros_like(rho)
                for kr in st.next_channel.kraus:
                    out = out + kr @ rho @ kr.conj().T
                rho = out
        labels = tuple(instruments[ev].labels[c] for ev, c in enumerate(choice))
        probs[labels] = float(np.real(np.trace(rho)))
    return OutcomeDistribution(probs)


def born_distribution(model: ProcessModel, instruments: Sequence[Instrument], basis: PauliBasis,
                      tol: float = PREDICATE_TOL, w=None) -> OutcomeDistribution:
    """Outcome distribution from ``Tr(M W)`` over all outcome tuples.

    Imaginary parts up to ``tol`` are dropped; larger ones raise
    :class:`DomainError`. Values outside ``[0, 1]`` are kept and reported
    in ``warnings``.
    """
    from .ddo import assemble

    _check_instruments(model, instruments)
    if w is None:
        w = assemble(dct_spacetime(model, basis), basis)
    meas = DoubledMeasurement.local(instruments)
    probs, worst = {}, 0.0
    notes = []
    for labels in meas.outcomes():
        p = born(w, meas.operator(labels))
        worst = max(worst, abs(p.imag))
        if abs(p.imag) > tol:
            raise DomainError(f"outcome {labels} has imaginary part {p.imag:.3g}")
        if p.real < -tol or p.real > 1 + tol:
            notes.append(f"outcome {','.join(labels)} has value {p.real:.6g} outside [0, 1]")
        probs[labels] = p.real
    for note in notes:
        warnings.warn(note, RuntimeWarning, stacklevel=2)
    return OutcomeDistribution(probs, worst, notes)


def event_labels(model: ProcessModel) -> list[str]:
    return [f"t{e.step}q{e.qudit}" for e in event_layout(model)]
