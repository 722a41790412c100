import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from doubled.born import (
    DoubledMeasurement,
    born,
    born_by_contraction,
    born_distribution,
    event_labels,
    qm_oracle,
)
from doubled.ddo import DoubledDensityOperator, assemble
from doubled.numerics import DomainError, StructuralError
from doubled.pauli import build_basis
from doubled.process_dsl import ProcessModel, parse_file
from doubled.qobjects import BlochObservable, DensityOperator, Instrument, builtin_channel
from doubled.sampling import make_rng, random_channel, random_density, random_instrument, random_model
from doubled.tensors import dct_spacetime, dct_spatial, dct_temporal

import oracles

B2 = build_basis(2)
Z = Instrument.projective(2)
KET0 = DensityOperator.from_bloch([0, 0, 1])


def _w(model, basis=B2):
    return assemble(dct_spacetime(model, basis), basis)


def test_trivial_instrument_has_unit_probability(rng):
    model = random_model(rng, 2, "temporal", 2)
    meas = DoubledMeasurement.local([Instrument.trivial(2)] * 2)
    assert born(_w(model), meas.operator(("*", "*"))) == pytest.approx(1)
    dist = born_distribution(model, [Instrument.trivial(2)] * 2, B2)
    assert dist.probs == pytest.approx({("*", "*"): 1.0})


def test_pure_zero_measured_in_z():
    model = ProcessModel.build(2, 1, KET0, [(0,)], [])
    assert born_distribution(model, [Z], B2)["0"] == pytest.approx(1)


def test_singlet_projective_pairs(rng):
    model = ProcessModel.build(2, 2, DensityOperator.singlet(), [(0, 1)], [])
    for _ in range(5):
        a = BlochObservable.normalized(rng.standard_normal(3))
        b = BlochObservable.normalized(rng.standard_normal(3))
        dist = born_distribution(model, [Instrument.from_bloch(a), Instrument.from_bloch(b)], B2)
        ab = float(np.dot(a.vector, b.vector))
        assert dist["0", "0"] == pytest.approx((1 - ab) / 4)
        assert dist.max_deviation(qm_oracle(model, [Instrument.from_bloch(a), Instrument.from_bloch(b)])) < 1e-12


def test_effect_tensor_identity_and_single_qubit():
    c = np.array([1.0, 0.2, -0.3, 0.4])
    rho = sum(ci * s for ci, s in zip(c, B2.ops)) / 2
    t = dct_spatial(rho, B2, 1)
    ident = DoubledMeasurement.local([Instrument.trivial(2)])
    assert born_by_contraction(t, ident.effect_tensor(("*",), B2)) == pytest.approx(1)
    z = DoubledMeasurement.local([Z])
    assert born_by_contraction(t, z.effect_tensor(("0",), B2)) == pytest.approx((1 + c[3]) / 2)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_contraction_matches_trace_path(seed):
    r = make_rng(seed)
    t = dct_temporal(random_density(2, r), [random_channel(2, r)], B2)
    w = assemble(t, B2)
    inst = [random_instrument(2, r, outcomes=3), random_instrument(2, r)]
    meas = DoubledMeasurement.local(inst)
    for labels in meas.outcomes():
        via_trace = born(w, meas.operator(labels))
        via_tensor = born_by_contraction(t, meas.effect_tensor(labels, B2))
        assert abs(via_trace - via_tensor) < 1e-10


def test_joint_measurement_effect(rng):
    rho = random_density(4, rng)
    t = dct_spatial(rho, B2, 2)
    inst = random_instrument(4, rng)
    meas = DoubledMeasurement.joint(inst)
    for labels in meas.outcomes():
        k = inst.kraus[inst.labels.index(labels[0])]
        want = np.trace(k @ rho.mat @ k.conj().T)
        assert born_by_contraction(t, meas.effect_tensor(labels, B2)) == pytest.approx(want)


def test_oracle_examples():
    flip = ProcessModel.build(2, 1, KET0, [(0,), (0,)], [builtin_channel("bitflip", [1.0])])
    d = qm_oracle(flip, [Z, Z])
    assert d.probs == pytest.approx({("0", "0"): 0, ("0", "1"): 1, ("1", "0"): 0, ("1", "1"): 0})
    singlet = ProcessModel.build(2, 2, DensityOperator.singlet(), [(0, 1)], [])
    d = qm_oracle(singlet, [Z, Z])
    assert d.probs == pytest.approx({("0", "0"): 0, ("0", "1"): 0.5, ("1", "0"): 0.5, ("1", "1"): 0})
    assert qm_oracle(flip, [Instrument.trivial(2)] * 2).probs == {("*", "*"): 1.0}
    for model in (flip, singlet):
        assert born_distribution(model, [Z, Z], B2).max_deviation(qm_oracle(model, [Z, Z])) < 1e-12


def test_repeated_z_on_plus_state():
    plus = DensityOperator.from_bloch([1, 0, 0])
    model = ProcessModel.build(2, 1, plus, [(0,), (0,)], [builtin_channel("identity")])
    d = born_distribution(model, [Z, Z], B2)
    assert d.probs == pytest.approx({("0", "0"): 0.5, ("0", "1"): 0, ("1", "0"): 0, ("1", "1"): 0.5})


def test_product_state_factorizes(rng):
    r1, r2 = random_density(2, rng), random_density(2, rng)
    model = ProcessModel.build(2, 2, np.kron(r1.mat, r2.mat), [(0, 1)], [])
    i1, i2 = random_instrument(2, rng), random_instrument(2, rng)
    d = born_distribution(model, [i1, i2], B2)
    for a, ka in zip(i1.labels, i1.kraus):
        for b, kb in zip(i2.labels, i2.kraus):
            pa = np.trace(ka @ r1.mat @ ka.conj().T).real
            pb = np.trace(kb @ r2.mat @ kb.conj().T).real
            assert d[a, b] == pytest.approx(pa * pb)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.sampled_from([2, 3]),
       layout=st.sampled_from(["spatial", "temporal", "mixed"]))
def test_born_rule_matches_branching_oracle(seed, d, layout):
    r = make_rng(seed)
    model = random_model(r, d, layout, 2 if d == 3 else int(r.integers(2, 4)))
    inst = [random_instrument(d, r, outcomes=int(r.integers(1, 3))) for _ in range(model.n_events)]
    got = born_distribution(model, inst, build_basis(d))
    want = oracles.forward_probs(model, inst)
    assert set(got.probs) == set(want)
    assert max(abs(got.probs[k] - want[k]) for k in want) < 1e-9
    assert abs(got.total() - 1) < 1e-9


def test_mismatched_instruments():
    model = ProcessModel.build(2, 1, KET0, [(0,)], [])
    with pytest.raises(StructuralError):
        born_distribution(model, [Z, Z], B2)
    with pytest.raises(StructuralError):
        born_distribution(model, [Instrument.projective(3)], B2)
    with pytest.raises(StructuralError):
        born(np.eye(4), np.eye(2))


def test_non_physical_ddo_is_reported():
    model = ProcessModel.build(2, 1, KET0, [(0,)], [])
    bad = DoubledDensityOperator(2, 1, np.diag([1.5, 0, 0, -0.5]).astype(complex))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        dist = born_distribution(model, [Z], B2, w=bad)
    assert dist.warnings and any(issubclass(c.category, RuntimeWarning) for c in caught)
    assert dist["0"] == pytest.approx(1.5)
    skew = DoubledDensityOperator(2, 1, np.diag([1j, 0, 0, 1]).astype(complex))
    with pytest.raises(DomainError):
        born_distribution(model, [Z], B2, w=skew)


def test_event_labels(corpus):
    assert event_labels(parse_file(corpus / "19_fig1_shape.ddo")) == ["t0q0", "t0q1", "t1q1", "t2q0", "t2q1"]
