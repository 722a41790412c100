"""Space-time correlation test, Leggett-Garg value and causal inequalities.

Dichotomic outcomes map ``0 -> +1`` and ``1 -> -1``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .born import born_distribution, qm_oracle
from .ddo import assemble
from .numerics import PREDICATE_TOL, DomainError, StructuralError
from .pauli import PauliBasis, build_basis
from .process_dsl import ProcessModel
from .qobjects import BlochObservable, DensityOperator, Instrument, KrausChannel
from .tensors import dct_spacetime


def correlator(dist, i: int, j: int) -> float:
    """``<Q_i Q_j>`` from a joint distribution over dichotomic outcomes."""
    total = 0.0
    for labels, p in dist.probs.items():
        total += _sign(labels[i]) * _sign(labels[j]) * p
    return total


def _sign(label: str) -> int:
    return 1 if label == "0" else -1


@dataclass(frozen=True)
class STTestConfig:
    a1: BlochObservable
    a2: BlochObservable
    a3: BlochObservable


@dataclass(frozen=True)
class STTestResult:
    simulated: float
    analytic: float
    correlators: tuple  # (<Q2Q1>, <Q3Q2>, <Q3Q1>)

    def to_json(self) -> dict:
        return {
            "simulated": self.simulated,
            "analytic": self.analytic,
            "correlators": {"Q2Q1": self.correlators[0], "Q3Q2": self.correlators[1],
                            "Q3Q1": self.correlators[2]},
            "classical_bound": 1.0,
        }


def st_test_model() -> ProcessModel:
    """Singlet; ``q1`` measured at t1, ``q2`` at t2, ``q1`` at t3; identity dynamics."""
    return ProcessModel.build(2, 2, DensityOperator.singlet(), [(0,), (1,), (0,)])


def st_test_value(cfg: STTestConfig, basis: PauliBasis | None = None) -> STTestResult:
    """``<Q2Q1> + <Q3Q2> - <Q3Q1>`` on the singlet, through the doubled Born rule.

    Each correlator is taken with only its two measurements inserted; the
    third event carries the single-outcome instrument ``K = I``.
    """
    basis = build_basis(2) if basis is None else basis
    model = st_test_model()
    w = assemble(dct_spacetime(model, basis), basis)
    inst = [Instrument.from_bloch(a) for a in (cfg.a1, cfg.a2, cfg.a3)]
    trivial = Instrument.trivial(2)

    def pair(i, j):
        use = [inst[k] if k in (i, j) else trivial for k in range(3)]
        return correlator(born_distribution(model, use, basis, w=w), i, j)

    c21, c32, c31 = pair(0, 1), pair(1, 2), pair(0, 2)
    a1, a2, a3 = (np.array(a.vector) for a in (cfg.a1, cfg.a2, cfg.a3))
    analytic = -float(a2 @ a1) - float(a3 @ a2) + float(a3 @ a1)
    return STTestResult(c21 + c32 - c31, analytic, (c21, c32, c31))


@dataclass(frozen=True)
class LGResult:
    value: float
    correlators: tuple  # (<Q2Q1>, <Q3Q2>, <Q3Q1>)


def lg_value(model: ProcessModel, observables: Sequence[BlochObservable]) -> LGResult:
    """``K = <Q2Q1> + <Q3Q2> - <Q3Q1>`` for a three-step qubit process.

    Each two-time correlator comes from its own run with only the two
    relevant measurements inserted.
    """
    if not model.is_temporal or model.local_dim != 2 or len(model.steps) != 3:
        raise DomainError("Leggett-Garg value needs a single-qubit process with three measured steps")
    if len(observables) != 3:
        raise StructuralError("need three observables")
    inst = [Instrument.from_bloch(o) for o in observables]
    trivial = Instrument.trivial(2)

    def pair(i, j):
        use = [inst[k] if k in (i, j) else trivial for k in range(3)]
        return correlator(qm_oracle(model, use), i, j)

    c21, c32, c31 = pair(0, 1), pair(1, 2), pair(0, 2)
    return LGResult(c21 + c32 - c31, (c21, c32, c31))


# ------------------------------------------------------------ causal tests

@dataclass(frozen=True, eq=False)
class BehaviorTable:
    """``p[x, y, a, b] = p(a, b | x, y)`` for binary settings and outcomes."""

    p: np.ndarray
    tol: float = PREDICATE_TOL

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (2, 2, 2, 2):
            raise StructuralError(f"behavior table must have shape (2, 2, 2, 2), got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise DomainError("behavior table has non-finite entries")
        if np.min(p) < -self.tol:
            raise DomainError("behavior table has negative entries")
        sums = p.sum(axis=(2, 3))
        if np.max(np.abs(sums - 1.0)) > self.tol:
            raise DomainError("conditional distributions do not sum to 1")
        object.__setattr__(self, "p", p)

    @classmethod
    def from_json(cls, obj) -> "BehaviorTable":
        if not isinstance(obj, dict) or "p" not in obj:
            raise StructuralError("behavior table JSON needs a 'p' array")
        try:
            return cls(np.array(obj["p"], dtype=float))
        except (TypeError, ValueError) as exc:
            raise StructuralError(f"malformed behavior table: {exc}") from None

    def to_json(self) -> dict:
        return {"p": self.p.tolist()}

    def alice_marginal(self) -> np.ndarray:
        """``[x, y, a]``"""
        return self.p.sum(axis=3)

    def bob_marginal(self) -> np.ndarray:
        """``[x, y, b]``"""
        return self.p.sum(axis=2)

    def mix(self, other: "BehaviorTable", lam: float) -> "BehaviorTable":
        return BehaviorTable(lam * self.p + (1 - lam) * other.p)


GYNI_BOUND = 0.5
LGYNI_BOUND = 0.75


def causal_value(b: BehaviorTable, which: str) -> float:
    """Weighted success probability of the GYNI or LGYNI game."""
    which = which.lower()
    total = 0.0
    for x in range(2):
        for y in range(2):
            for a in range(2):
                for bb in range(2):
                    if which == "gyni":
                        w = (a == y) and (bb == x)
                    elif which == "lgyni":
                        w = (x * (a ^ y) == 0) and (y * (bb ^ x) == 0)
                    else:
                        raise ValueError(f"unknown inequality {which!r}")
                    if w:
                        total += b.p[x, y, a, bb]
    return total / 4


def causal_bound(which: str) -> float:
    return {"gyni": GYNI_BOUND, "lgyni": LGYNI_BOUND}[which.lower()]


def signaling_check(b: BehaviorTable, direction: str) -> float:
    """Largest change of one party's marginal under the other party's setting.

    ``"B->A"``: ``max |p(a|x,y) - p(a|x,y')|``, zero whenever A precedes B.
    ``"A->B"``: ``max |p(b|x,y) - p(b|x',y)|``.
    """
    if direction in ("B->A", "BA"):
        m = b.alice_marginal()
        return float(np.max(np.abs(m[:, 0, :] - m[:, 1, :])))
    if direction in ("A->B", "AB"):
        m = b.bob_marginal()
        return float(np.max(np.abs(m[0, :, :] - m[1, :, :])))
    raise ValueError(f"unknown direction {direction!r}")


def ordered_behavior(rho, channel: KrausChannel, first: Sequence[Instrument],
                     second: Sequence[Instrument], order: str = "A<B",
                     basis: PauliBasis | None = None) -> BehaviorTable:
    """Behavior of a two-qubit process with a fixed causal order.

    The earlier party measures qubit 0 at step 0 with setting-dependent
    instruments ``first``; after ``channel`` the later party measures
    qubit 1. ``order`` says which of Alice and Bob comes first. The
    table is computed with the doubled Born rule.
    """
    basis = build_basis(2) if basis is None else basis
    model = ProcessModel.build(2, 2, rho, [(0,), (1,)], [channel])
    w = assemble(dct_spacetime(model, basis), basis)
    p = np.zeros((2, 2, 2, 2))
    for s in range(2):
        for t in range(2):
            dist = born_distribution(model, [first[s], second[t]], basis, w=w)
            for (e, l), prob in dist.probs.items():
                e, l = int(e), int(l)
                if order == "A<B":
                    p[s, t, e, l] = prob
                elif order == "B<A":
                    p[t, s, l, e] = prob
                else:
                    raise ValueError(f"unknown order {order!r}")
    return BehaviorTable(p)


def random_ordered_behavior(rng: np.random.Generator, order: str = "A<B",
                            basis: PauliBasis | None = None) -> BehaviorTable:
    from .sampling import random_channel, random_density, random_instrument

    rho = random_density(4, rng)
    ch = random_channel(4, rng, n_kraus=int(rng.integers(1, 4)))
    first = [random_instrument(2, rng) for _ in range(2)]
    second = [random_instrument(2, rng) for _ in range(2)]
    return ordered_behavior(rho, ch, first, second, order, basis)


def load_behavior(path) -> BehaviorTable:
    with open(path, encoding="utf-8") as fh:
        return BehaviorTable.from_json(json.load(fh))
