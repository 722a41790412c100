import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from doubled.numerics import DomainError, StructuralError
from doubled.pauli import build_basis, expand_in_basis, product_basis, reconstruct
from doubled.sampling import make_rng

import oracles


def test_qubit_basis_is_ixyz():
    b = build_basis(2)
    expect = [np.eye(2), [[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]]
    for got, want in zip(b.ops, expect):
        assert np.array_equal(got, np.asarray(want, dtype=complex))
    assert np.trace(b[1] @ b[2]) == 0
    assert np.trace(b[1] @ b[1]) == 2


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
def test_basis_matches_explicit_construction(d):
    b = build_basis(d)
    ref = oracles.gell_mann(d)
    assert len(b) == d * d
    assert np.allclose(b.ops, ref, atol=1e-14)
    gram = np.array([[np.trace(a @ c) for c in ref] for a in ref])
    assert np.allclose(b.gram(), gram)
    assert np.allclose(gram, d * np.eye(d * d))


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_basis_residuals(d):
    b = build_basis(d)
    assert b.gram_residual() < 1e-12
    assert b.hermiticity_residual() < 1e-12
    assert b.traceless_residual() < 1e-12


def test_small_dimension_rejected():
    with pytest.raises(DomainError):
        build_basis(1)


def test_expansion_examples():
    b = build_basis(2)
    assert np.allclose(expand_in_basis(b[3], b), [0, 0, 0, 1])
    assert np.allclose(expand_in_basis(np.diag([1, 0]), b), [0.5, 0, 0, 0.5])
    with pytest.raises(StructuralError):
        expand_in_basis(np.eye(3), b)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 5))
def test_hermitian_expansion_is_real_and_invertible(seed, d):
    r = make_rng(seed)
    a = r.standard_normal((d, d)) + 1j * r.standard_normal((d, d))
    h = a + a.conj().T
    b = build_basis(d)
    g = expand_in_basis(h, b)
    assert np.max(np.abs(g.imag)) < 1e-12
    assert np.max(np.abs(reconstruct(g, b) - h)) < 1e-10


def test_product_basis_ordering():
    b = build_basis(2)
    p = product_basis(b, 2)
    assert p.shape == (16, 4, 4)
    assert np.array_equal(p[1 * 4 + 3], np.kron(b[1], b[3]))
