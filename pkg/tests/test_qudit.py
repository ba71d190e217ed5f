import numpy as np
import pytest
from hypothesis import given, strategies as st

from qveto.errors import RejectedInput
from qveto.qudit import (
    BasisSet,
    DiagonalUnitary,
    OutcomeDistribution,
    QuditState,
    SeededRng,
    apply_diagonal,
    born_probabilities,
    compose_diagonals,
    equal_up_to_global_phase,
    inner_product,
    power_of_diagonal,
    root_of_unity,
    sample_outcome,
    sample_outcomes,
)

dims = st.integers(min_value=2, max_value=13)
angles = st.floats(min_value=-10, max_value=10, allow_nan=False)


@st.composite
def states(draw, d=None):
    d = d or draw(dims)
    re = draw(st.lists(st.floats(-1, 1), min_size=d, max_size=d))
    im = draw(st.lists(st.floats(-1, 1), min_size=d, max_size=d))
    v = np.array(re) + 1j * np.array(im)
    if np.linalg.norm(v) < 1e-3:
        v[0] += 1
    return QuditState.normalized(v)


@st.composite
def diagonals(draw, d):
    return DiagonalUnitary.from_angles(draw(st.lists(angles, min_size=d, max_size=d)))


def test_state_validation():
    with pytest.raises(RejectedInput):
        QuditState([1, 1])
    with pytest.raises(RejectedInput):
        QuditState([])
    with pytest.raises(RejectedInput):
        QuditState.normalized([0, 0])
    assert QuditState([1, 0]).dim == 2


def test_diagonal_validation():
    with pytest.raises(RejectedInput):
        DiagonalUnitary([1, 2])
    assert DiagonalUnitary([1, 1j]).allclose(DiagonalUnitary.from_angles([0, np.pi / 2]))


def test_basis_rejects_nonorthogonal():
    a = QuditState([1, 0])
    with pytest.raises(RejectedInput):
        BasisSet((a, QuditState.normalized([1, 1])))


def test_distribution_must_sum_to_one():
    with pytest.raises(RejectedInput):
        OutcomeDistribution([0.5, 0.4])
    with pytest.raises(RejectedInput):
        OutcomeDistribution([1.2, -0.2])


def test_power_examples():
    u = DiagonalUnitary([1, 1j])
    assert power_of_diagonal(u, 2).allclose(DiagonalUnitary([1, -1]))
    assert power_of_diagonal(u, 4).allclose(DiagonalUnitary.identity(2))
    assert power_of_diagonal(u, 0).allclose(DiagonalUnitary.identity(2))
    with pytest.raises(RejectedInput):
        power_of_diagonal(u, -1)


def test_global_phase_equality():
    a = QuditState.normalized([1, 1, 1, 1])
    assert equal_up_to_global_phase(a, QuditState(-a.amplitudes))
    assert equal_up_to_global_phase(a, QuditState(1j * a.amplitudes))
    assert not equal_up_to_global_phase(a, QuditState.normalized([1, 1j, -1, -1j]))


def test_born_on_computational_basis():
    s = QuditState.normalized([1, 1j, 0, 0])
    comp = BasisSet(tuple(QuditState.basis_state(4, k) for k in range(4)))
    assert np.allclose(born_probabilities(s, comp).probs, [0.5, 0.5, 0, 0])


def test_sample_degenerate_distribution():
    rng = SeededRng(5)
    d = OutcomeDistribution([0, 0, 1, 0])
    assert {sample_outcome(d, rng) for _ in range(50)} == {2}
    assert set(sample_outcomes(d, rng, 100).tolist()) == {2}


def test_sampling_frequencies():
    d = OutcomeDistribution([0.1, 0.2, 0.3, 0.4])
    counts = np.bincount(sample_outcomes(d, SeededRng(1), 100_000), minlength=4) / 100_000
    sigma = np.sqrt(d.probs * (1 - d.probs) / 100_000)
    assert np.all(np.abs(counts - d.probs) < 4 * sigma)


def test_seeded_rng_reproducible_and_derived_streams_differ():
    a, b = SeededRng(42), SeededRng(42)
    assert a.integers(1000, size=20).tolist() == b.integers(1000, size=20).tolist()
    c1, c2 = SeededRng(42).derive(1), SeededRng(42).derive(2)
    assert c1.random(10).tolist() != c2.random(10).tolist()
    assert SeededRng(42).derive(1).random(5).tolist() == SeededRng(42).derive(1).random(5).tolist()


def test_root_of_unity():
    assert abs(root_of_unity(4, 1) - 1j) < 1e-15
    assert abs(root_of_unity(5, 5) - 1) < 1e-15


@given(st.data())
def test_apply_preserves_norm(data):
    s = data.draw(states())
    u = data.draw(diagonals(s.dim))
    assert abs(np.linalg.norm(apply_diagonal(s, u).amplitudes) - 1) < 1e-12


@given(st.data())
def test_composition_commutes(data):
    d = data.draw(dims)
    a, b = data.draw(diagonals(d)), data.draw(diagonals(d))
    assert compose_diagonals(a, b).allclose(compose_diagonals(b, a))


@given(st.data(), st.integers(0, 12), st.integers(0, 12))
def test_power_adds(data, m, n):
    d = data.draw(dims)
    u = data.draw(diagonals(d))
    lhs = power_of_diagonal(u, m + n)
    rhs = compose_diagonals(power_of_diagonal(u, m), power_of_diagonal(u, n))
    assert lhs.allclose(rhs, tol=1e-9)


@given(st.data())
def test_inner_product_conjugate_symmetric(data):
    a = data.draw(states())
    b = data.draw(states(a.dim))
    assert abs(inner_product(a, b) - np.conj(inner_product(b, a))) < 1e-12


@given(st.data())
def test_born_sums_to_one(data):
    s = data.draw(states())
    q, _ = np.linalg.qr(np.random.default_rng(0).normal(size=(s.dim, s.dim))
                        + 1j * np.random.default_rng(1).normal(size=(s.dim, s.dim)))
    probs = born_probabilities(s, BasisSet.from_columns(q)).probs
    assert abs(probs.sum() - 1) < 1e-10
    assert np.all(probs >= 0)


@given(st.data(), angles)
def test_global_phase_invariance(data, theta):
    s = data.draw(states())
    assert equal_up_to_global_phase(s, QuditState(np.exp(1j * theta) * s.amplitudes))
