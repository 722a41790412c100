import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from doubled.numerics import (
    StructuralError,
    hermiticity_residual,
    is_hermitian,
    is_psd,
    kron,
    matrix_from_json,
    matrix_to_json,
    min_eigenvalue_hermitian,
    partial_trace,
)
from doubled.pauli import build_basis
from doubled.qobjects import DensityOperator
from doubled.sampling import make_rng, random_density
from doubled.tensors import dct_spatial

import oracles

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)


def test_kron_examples():
    assert np.array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))
    assert np.array_equal(kron(X, X), np.fliplr(np.eye(4)))
    assert np.array_equal(kron(Z, Z), np.diag([1, -1, -1, 1]))


def test_partial_trace_product_state(rng):
    rho, tau = random_density(2, rng).mat, random_density(3, rng).mat
    assert np.allclose(partial_trace(np.kron(rho, tau), [2, 3], [0]), rho)
    assert np.allclose(partial_trace(np.kron(rho, tau), [2, 3], [1]), tau)
    assert np.allclose(partial_trace(np.eye(4) / 4, [2, 2], [0]), np.eye(2) / 2)


def test_partial_trace_shape_mismatch():
    with pytest.raises(StructuralError):
        partial_trace(np.eye(4), [2, 3], [0])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), keep=st.sets(st.integers(0, 2), max_size=3))
def test_partial_trace_matches_loops(seed, keep):
    r = make_rng(seed)
    m = r.standard_normal((12, 12)) + 1j * r.standard_normal((12, 12))
    dims = [2, 3, 2]
    assert np.allclose(partial_trace(m, dims, keep), oracles.ptrace(m, dims, keep))


def test_hermiticity_predicates():
    assert is_hermitian(Y)
    assert not is_hermitian(1j * Z)
    assert hermiticity_residual(1j * Z) == pytest.approx(2.0)
    t = dct_spatial(DensityOperator.from_bloch([0, 0, 1]), build_basis(2), 1).matrix()
    assert is_hermitian(t)
    with pytest.raises(StructuralError):
        is_hermitian(np.ones((2, 3)))


def test_min_eigenvalue_examples(rng):
    assert min_eigenvalue_hermitian(np.eye(2)) == pytest.approx(1.0)
    assert min_eigenvalue_hermitian(np.diag([1.0, 0.0])) == pytest.approx(0.0)
    t = dct_spatial(random_density(4, rng), build_basis(2), 2).matrix()
    assert min_eigenvalue_hermitian(t) >= -1e-9
    assert is_psd(t)
    with pytest.raises(StructuralError):
        min_eigenvalue_hermitian(np.ones(3))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), rows=st.integers(1, 5), cols=st.integers(1, 5))
def test_matrix_codec_roundtrip(seed, rows, cols):
    r = make_rng(seed)
    m = r.standard_normal((rows, cols)) + 1j * r.standard_normal((rows, cols))
    assert np.array_equal(matrix_from_json(matrix_to_json(m)), m)


def test_matrix_codec_rejects_bad_records():
    with pytest.raises(StructuralError):
        matrix_from_json({"rows": 2, "cols": 2, "data": [[1, 0]]})
    with pytest.raises(StructuralError):
        matrix_from_json({"rows": 1})
