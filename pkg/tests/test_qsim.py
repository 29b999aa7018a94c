import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare, unitary_group

from pdqma.qsim import (DFT, Matrix, Permutation, State, StateError, adjoin_computed, apply_unitary_on,
                        measure_collapse, prepare_uniform, relabel, sample_noncollapsing, unadjoin)


def test_prepare_uniform():
    s = prepare_uniform(("z",), [(i,) for i in range(9)])
    assert all(abs(a - 1 / 3) < 1e-12 for a in s.amplitudes.values())
    assert prepare_uniform(("z",), [(0,)]).amplitudes[(0,)] == 1
    with pytest.raises(StateError):
        prepare_uniform(("z",), [])


def test_state_validation():
    with pytest.raises(StateError):
        State(("a",), {(0,): 0.5})
    with pytest.raises(StateError):
        State(("a", "a"), {(0, 0): 1})
    s = State(("a",), {(0,): 1, (1,): 1e-17})
    assert s.support() == [(0,)]


def test_adjoin_unadjoin():
    s = prepare_uniform(("z",), [(i,) for i in range(5)])
    t = adjoin_computed(s, lambda lab: lab[0] % 2, "p")
    assert t.registers == ("z", "p")
    assert unadjoin(t, "p", lambda lab: lab[0] % 2) == s
    with pytest.raises(StateError):
        unadjoin(t, "p", lambda lab: 0)
    with pytest.raises(StateError):
        adjoin_computed(t, lambda lab: 0, "p")


def test_relabel_must_be_injective():
    s = prepare_uniform(("z",), [(0,), (1,)])
    with pytest.raises(StateError):
        relabel(s, lambda lab: (0,), ("z",))


def test_collapse_deterministic_register():
    s = prepare_uniform(("z", "c"), [(0, 7), (1, 7)])
    out, post = measure_collapse(s, "c", np.random.default_rng(0))
    assert out == 7 and post.allclose(s)


def test_noncollapsing_is_pure():
    s = State.normalized(("z",), {(0,): 1, (1,): 2j, (2,): -1})
    before = dict(s.amplitudes)
    a = sample_noncollapsing(s, 100, np.random.default_rng(5))
    b = sample_noncollapsing(s, 100, np.random.default_rng(5))
    assert a == b and dict(s.amplitudes) == before
    single = State(("z",), {(3,): 1})
    assert sample_noncollapsing(single, 4, np.random.default_rng(0)) == [(3,)] * 4


def test_two_support_frequency():
    s = prepare_uniform(("z",), [(0,), (1,)])
    draws = sample_noncollapsing(s, 10000, np.random.default_rng(9))
    assert 0.47 <= draws.count((0,)) / 10000 <= 0.53


@pytest.mark.parametrize("seed", range(5))
def test_born_chi_square(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 17))
    amps = rng.normal(size=d) + 1j * rng.normal(size=d)
    s = State.normalized(("z", "w"), {(i, i % 3): a for i, a in enumerate(amps)})
    p = np.array([abs(s.amplitudes[(i, i % 3)]) ** 2 for i in range(d)])
    counts = np.zeros(d)
    for _ in range(10000):
        out, _ = measure_collapse(s, "z", rng)
        counts[out] += 1
    assert chisquare(counts, p * 10000).pvalue > 0.001
    draws = sample_noncollapsing(s, 10000, rng)
    counts = np.bincount([lab[0] for lab in draws], minlength=d)
    assert chisquare(counts, p * 10000).pvalue > 0.001


def test_dft_definition_and_inverse():
    m = 5
    s = State(("x", "y"), {(2, 0): 0.6, (4, 1): 0.8j})
    t = apply_unitary_on(s, "x", DFT(m))
    w = np.exp(2j * np.pi / m)
    assert abs(t.amplitudes[(3, 0)] - 0.6 * w ** 6 / np.sqrt(m)) < 1e-12
    assert abs(t.norm() - 1) < 1e-9
    back = apply_unitary_on(t, "x", DFT(m).dagger())
    assert back.allclose(s)
    basis = apply_unitary_on(State(("x",), {(0,): 1}), "x", DFT(8))
    assert all(abs(abs(a) - 8 ** -0.5) < 1e-12 for a in basis.amplitudes.values())


def test_dft_matrix_matches_apply():
    rng = np.random.default_rng(0)
    v = rng.normal(size=6) + 1j * rng.normal(size=6)
    for inv in (False, True):
        assert np.allclose(DFT(6, inv).matrix() @ v, DFT(6, inv).apply(v))


def test_domain_mismatch():
    s = State(("x",), {(9,): 1})
    with pytest.raises(StateError):
        apply_unitary_on(s, "x", DFT(4))
    with pytest.raises(ValueError):
        Matrix(np.eye(2)).matrix(3)


def test_permutation():
    s = State.normalized(("x",), {(0,): 1, (1,): 2})
    t = apply_unitary_on(s, "x", Permutation({0: 1, 1: 0}))
    assert abs(t.amplitudes[(1,)] - s.amplitudes[(0,)]) < 1e-15
    with pytest.raises(ValueError):
        Permutation({0: 1, 1: 1})


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_norm_preserved(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 9))
    amps = rng.normal(size=(d, 2)) + 1j * rng.normal(size=(d, 2))
    s = State.normalized(("x", "y"), {(i, j): amps[i, j] for i in range(d) for j in range(2)})
    u = Matrix(unitary_group.rvs(d, random_state=rng))
    for op in (u, DFT(d), DFT(d, True)):
        assert abs(apply_unitary_on(s, "x", op).norm() - 1) < 1e-9
