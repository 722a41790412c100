"""Random states, channels, instruments and process models.

All generators take a ``numpy.random.Generator``; :func:`make_rng` builds a
counter-based (Philox) one so seeded runs are reproducible.
"""
from __future__ import annotations

import numpy as np

from .qobjects import BlochObservable, DensityOperator, Instrument, KrausChannel


def make_rng(seed: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def ginibre(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(ginibre(dim, dim, rng))
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityOperator:
    rank = dim if rank is None else rank
    g = ginibre(dim, rank, rng)
    m = g @ g.conj().T
    m = 0.5 * (m + m.conj().T)
    return DensityOperator(m / np.trace(m).real)


def random_pure(dim: int, rng: np.random.Generator) -> DensityOperator:
    v = ginibre(dim, 1, rng)[:, 0]
    return DensityOperator.from_ket(v / np.linalg.norm(v))


def _random_isometry_blocks(dim: int, blocks: int, rng: np.random.Generator) -> np.ndarray:
    q, _ = np.linalg.qr(ginibre(dim * blocks, dim, rng))
    return q.reshape(blocks, dim, dim)


def random_channel(dim: int, rng: np.random.Generator, n_kraus: int = 2) -> KrausChannel:
    return KrausChannel(_random_isometry_blocks(dim, n_kraus, rng))


def random_unital_channel(dim: int, rng: np.random.Generator, n_unitaries: int = 3) -> KrausChannel:
    w = rng.dirichlet(np.ones(n_unitaries))
    return KrausChannel(np.array([np.sqrt(p) * random_unitary(dim, rng) for p in w]))


def random_instrument(dim: int, rng: np.random.Generator, outcomes: int = 2) -> Instrument:
    return Instrument(_random_isometry_blocks(dim, outcomes, rng))


def random_bloch_observable(rng: np.random.Generator) -> BlochObservable:
    v = rng.standard_normal(3)
    while np.linalg.norm(v) < 1e-6:
        v = rng.standard_normal(3)
    return BlochObservable.normalized(v)


def random_model(rng: np.random.Generator, d: int, layout: str, n_events: int):
    """Random process model with ``n_events`` events.

    ``layout`` is ``"spatial"`` (one step, every qudit measured),
    ``"temporal"`` (one qudit measured at every step) or ``"mixed"``
    (two qudits, each step measuring a non-empty subset).
    """
    from .process_dsl import ProcessModel, Step

    if layout == "spatial":
        n = n_events
        steps = [Step(tuple(range(n)))]
    elif layout == "temporal":
        n = 1
        steps = [Step((0,)) for _ in range(n_events)]
    elif layout == "mixed":
        if n_events < 2:
            raise ValueError("a mixed layout needs at least two events")
        n = 2
        sizes = _mixed_sizes(rng, n_events)
        steps = []
        for size in sizes:
            qs = rng.permutation(n)[:size]
            steps.append(Step(tuple(int(q) for q in qs)))
    else:
        raise ValueError(f"unknown layout {layout!r}")
    dim = d**n
    chans = [random_channel(dim, rng, n_kraus=int(rng.integers(1, 3))) for _ in steps[:-1]]
    rank = int(rng.integers(1, dim + 1))
    rho = random_density(dim, rng, rank=rank)
    return ProcessModel.build(d, n, rho, [s.measured for s in steps], chans)


def _mixed_sizes(rng: np.random.Generator, n_events: int) -> list[int]:
    # at least two steps, each measuring one or two of the two qudits
    while True:
        sizes = []
        left = n_events
        while left > 0:
            s = int(rng.integers(1, min(2, left) + 1))
            sizes.append(s)
            left -= s
        if len(sizes) >= 2:
            return sizes
