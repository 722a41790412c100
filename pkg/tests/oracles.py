"""Slow, explicit reference implementations used only by the tests.

Everything here is written with plain loops and ``np.kron`` so that it
shares no code path with the package's einsum/tensordot kernels.
"""
from __future__ import annotations

import itertools

import numpy as np


def gell_mann(d):
    """Identity, symmetric, antisymmetric, diagonal; scaled so Tr(s s) = d."""
    mats = [np.eye(d, dtype=complex)]
    sym, anti = [], []
    for j in range(d):
        for k in range(j + 1, d):
            s = np.zeros((d, d), dtype=complex)
            s[j, k] = s[k, j] = 1
            a = np.zeros((d, d), dtype=complex)
            a[j, k] = -1j
            a[k, j] = 1j
            sym.append(s)
            anti.append(a)
    diag = []
    for l in range(1, d):
        m = np.zeros((d, d), dtype=complex)
        for i in range(l):
            m[i, i] = 1
        m[l, l] = -l
        diag.append(m * np.sqrt(2 / (l * (l + 1))))
    scale = np.sqrt(d / 2)
    return mats + [scale * m for m in sym + anti + diag]


def kron_list(mats):
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def ptrace(m, dims, keep):
    """Partial trace by summing over explicit index tuples."""
    keep = sorted(keep)
    n = len(dims)
    kd = [dims[i] for i in keep]
    out = np.zeros((int(np.prod(kd)), int(np.prod(kd))), dtype=complex)
    for left in itertools.product(*[range(x) for x in dims]):
        for right in itertools.product(*[range(x) for x in dims]):
            if any(left[i] != right[i] for i in range(n) if i not in keep):
                continue
            r = np.ravel_multi_index(left, dims)
            c = np.ravel_multi_index(right, dims)
            kr = np.ravel_multi_index([left[i] for i in keep], kd) if keep else 0
            kc = np.ravel_multi_index([right[i] for i in keep], kd) if keep else 0
            out[kr, kc] += m[r, c]
    return out


def embed(op, qudit, n, d):
    return kron_list([op if q == qudit else np.eye(d) for q in range(n)])


def kraus_apply(kraus, rho):
    return sum(k @ rho @ k.conj().T for k in kraus)


def dct(model, ops):
    """Direct evaluation of the space-time tensor entry by entry."""
    d, n = model.local_dim, model.num_qudits
    events = [(s, q) for s, step in enumerate(model.steps) for q in step.measured]
    N = len(events)
    q = d * d
    out = np.zeros((q,) * (2 * N), dtype=complex)
    for idx in itertools.product(range(q), repeat=2 * N):
        mu, nu = idx[:N], idx[N:]
        x = model.initial.mat.astype(complex)
        e = 0
        for s, step in enumerate(model.steps):
            for qd in step.measured:
                x = embed(ops[mu[e]], qd, n, d) @ x @ embed(ops[nu[e]], qd, n, d)
                e += 1
            if s < len(model.steps) - 1:
                x = kraus_apply(model.steps[s].next_channel.kraus, x)
        out[idx] = np.trace(x)
    return out


def ddo(tensor, ops, d, N):
    """W = d^-2N sum T (x) s_mu (x) s_nu by explicit loops."""
    q = d * d
    w = 0
    for idx in itertools.product(range(q), repeat=2 * N):
        c = tensor[idx]
        if c != 0:
            w = w + c * kron_list([ops[i] for i in idx])
    return w / d ** (2 * N)


def forward_probs(model, instruments):
    """Outcome probabilities by branching over every Kraus sequence."""
    d, n = model.local_dim, model.num_qudits
    probs = {}
    choices = [range(len(inst.kraus)) for inst in instruments]
    for outcome in itertools.product(*choices):
        x = model.initial.mat.astype(complex)
        e = 0
        for s, step in enumerate(model.steps):
            for qd in step.measured:
                k = embed(instruments[e].kraus[outcome[e]], qd, n, d)
                x = k @ x @ k.conj().T
                e += 1
            if s < len(model.steps) - 1:
                x = kraus_apply(model.steps[s].next_channel.kraus, x)
        labels = tuple(instruments[i].labels[o] for i, o in enumerate(outcome))
        probs[labels] = float(np.trace(x).real)
    return probs


def min_eig(m):
    h = (m + m.conj().T) / 2
    return float(np.linalg.eigvalsh(h).min())
