import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pdqma.hv import (_transition, axiom_residuals, block_partition, block_product_transition, default_outer_reps,
                      dense_stochastic_reference, draw_hash, generalized_juggle, hash_range,
                      history_sample, joint_matrix, one_collision_probability, random_axiom_case, default_inner_reps,
                      random_block_unitary)
from pdqma.qsim import DFT, Matrix, Permutation, State, StateError, apply_unitary_on, prepare_uniform


def test_block_partition_examples():
    assert sorted(map(len, block_partition(Matrix(np.eye(4))))) == [1, 1, 1, 1]
    assert block_partition(DFT(8)) == [frozenset(range(8))]
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    u = np.zeros((4, 4))
    u[:2, :2] = h
    u[2:, 2:] = h
    assert sorted(map(sorted, block_partition(Matrix(u)))) == [[0, 1], [2, 3]]
    assert sorted(map(sorted, block_partition(Permutation({0: 1, 1: 0}), d=3))) == [[0, 1], [2]]


def test_dense_reference_examples():
    e0 = np.array([1, 0], dtype=complex)
    assert np.allclose(dense_stochastic_reference(e0, np.eye(2))[0], [1, 0])
    assert np.allclose(dense_stochastic_reference(e0, np.array([[0, 1], [1, 0]]))[0], [0, 1])
    plus = np.array([1, 1]) / np.sqrt(2)
    s = dense_stochastic_reference(plus, DFT(2).matrix())
    assert np.allclose(s, [[1, 0], [1, 0]])


def test_zero_mass_block_is_uniform_and_logged(caplog):
    u = np.eye(3)
    psi = np.array([1, 0, 0], dtype=complex)
    s = dense_stochastic_reference(psi, u)
    assert np.allclose(s.sum(axis=1), 1)
    state = State(("x",), {(0,): 1})
    with caplog.at_level(logging.WARNING, logger="pdqma.hv"):
        _transition(state, "x", Permutation({1: 2, 2: 1}), (1,), np.random.default_rng(0))
    assert "zero-mass" in caplog.text


def test_transition_examples():
    rng = np.random.default_rng(0)
    s = prepare_uniform(("x",), [(0,), (1,)])
    assert block_product_transition(s, "x", Permutation({0: 1, 1: 0}), (0,), rng) == (1,)
    assert block_product_transition(s, "x", Matrix(np.eye(2)), (1,), rng) == (1,)
    with pytest.raises(StateError):
        block_product_transition(s, "x", DFT(2), (5,), rng)


def test_dft_round_trip_position_distribution():
    s = prepare_uniform(("x",), [(0,), (1,)])
    rng = np.random.default_rng(1)
    for start in [(0,), (1,)]:
        ends = [history_sample(s, [("x", DFT(2)), ("x", DFT(2, True))], rng, start=start)[0].positions[-1]
                for _ in range(4000)]
        assert abs(ends.count((0,)) / 4000 - 0.5) < 0.03


def test_history_lengths_and_permutation_orbit():
    s = State(("x",), {(0,): 1})
    perm = Permutation({0: 1, 1: 2, 2: 0})
    hist, final = history_sample(s, [("x", perm)] * 4, np.random.default_rng(0))
    assert hist.positions == [(0,), (1,), (2,), (0,), (1,)]
    assert final == State(("x",), {(1,): 1})
    hist, _ = history_sample(s, [], np.random.default_rng(0))
    assert hist.positions == [(0,)]


def test_history_marginalization():
    rng = np.random.default_rng(7)
    d = 6
    psi = rng.normal(size=d) + 1j * rng.normal(size=d)
    s = State.normalized(("x",), {(i,): a for i, a in enumerate(psi)})
    layers = [("x", Matrix(random_block_unitary(d, rng, 2))), ("x", DFT(d)),
              ("x", Matrix(random_block_unitary(d, rng, 3)))]
    final = s
    for reg, u in layers:
        final = apply_unitary_on(final, reg, u)
    born = np.zeros(d)
    for (j,), a in final.amplitudes.items():
        born[j] = abs(a) ** 2
    ends = np.bincount([history_sample(s, layers, rng)[0].positions[-1][0] for _ in range(10000)], minlength=d)
    assert 0.5 * np.abs(ends / 10000 - born).sum() < 0.05


def test_axioms_on_random_cases():
    rng = np.random.default_rng(0)
    for _ in range(100):
        psi, u = random_axiom_case(rng, 16)
        r = axiom_residuals(psi, u)
        assert r["marginalization"] <= 1e-9
        assert r["indifference"]
        assert r["row_sum_error"] <= 1e-9
        assert r["min_entry"] >= 0


def test_axioms_up_to_64():
    rng = np.random.default_rng(1)
    for d in (32, 64):
        psi = rng.normal(size=d) + 1j * rng.normal(size=d)
        psi /= np.linalg.norm(psi)
        for u in (random_block_unitary(d, rng, 5), DFT(d).matrix()):
            r = axiom_residuals(psi, u)
            assert r["marginalization"] <= 1e-9 and r["indifference"]


def test_transition_matches_dense_row():
    rng = np.random.default_rng(2)
    d = 12
    u = random_block_unitary(d, rng, 3)
    psi = rng.normal(size=d) + 1j * rng.normal(size=d)
    psi /= np.linalg.norm(psi)
    s = State(("x",), {(i,): a for i, a in enumerate(psi)})
    ref = dense_stochastic_reference(psi, u)
    draws = np.bincount([block_product_transition(s, "x", Matrix(u), (4,), rng)[0] for _ in range(10000)],
                        minlength=d)
    assert 0.5 * np.abs(draws / 10000 - ref[4]).sum() < 0.05


def test_perturbation_spot_check():
    rng = np.random.default_rng(3)
    checked = 0
    for _ in range(50):
        psi, u = random_axiom_case(rng, 16)
        psi = psi + 0.3 * (np.abs(psi) == 0)  # keep every block away from zero mass
        psi /= np.linalg.norm(psi)
        mask = np.abs(u) > 0
        du = (rng.normal(size=u.shape) + 1j * rng.normal(size=u.shape)) * mask
        dpsi = rng.normal(size=psi.shape) + 1j * rng.normal(size=psi.shape)
        u2 = u + 1e-6 * du / np.abs(du).max()
        psi2 = psi + 1e-6 * dpsi / np.abs(dpsi).max()
        delta = np.abs(joint_matrix(psi, u) - joint_matrix(psi2, u2)).max()
        assert delta <= 1e-3
        checked += 1
    assert checked == 50


def _sieve(limit):
    is_p = np.ones(limit + 1, dtype=bool)
    is_p[:2] = False
    for k in range(2, int(limit ** 0.5) + 1):
        if is_p[k]:
            is_p[k * k::k] = False
    return is_p


def test_hash_range_against_sieve():
    is_p = _sieve(10 ** 6)
    primes = np.flatnonzero(is_p)
    s = np.arange(3, (10 ** 6 + 3) // 3 + 1)
    lo = np.maximum(2, 2 * s - 4)
    nxt = primes[np.searchsorted(primes, lo)]
    assert (nxt <= 3 * s - 3).all()
    assert hash_range(100) == 197
    for k in np.random.default_rng(0).choice(s, 200):
        assert hash_range(int(k)) == nxt[k - 3]
    with pytest.raises(ValueError):
        hash_range(2)


def test_one_collision_fact():
    for s in range(3, 300):
        for m in (hash_range(s), 2 * s - 4 if s > 3 else 2, 3 * s - 3):
            if 2 * s - 4 <= m <= 3 * s - 3 and m >= 2:
                assert one_collision_probability(s, m) >= 1 / 6


def test_pairwise_independence():
    rng = np.random.default_rng(4)
    s, ell = 10, 8
    m = hash_range(s)
    draws = [draw_hash(ell, s, rng) for _ in range(100000)]
    coll = np.mean([h(3) == h(77) for h in draws])
    hit = np.mean([h(3) == 5 for h in draws])
    assert abs(coll * m - 1) < 0.2
    assert abs(hit * m - 1) < 0.2


def test_juggle_small_cases():
    rng = np.random.default_rng(5)
    one = State(("item",), {(9,): 1})
    assert generalized_juggle(one, 6, 1, rng=rng).visited == {(9,)}
    two = prepare_uniform(("item",), [(3,), (40,)])
    full = sum(len(generalized_juggle(two, 6, 2, rng=rng).visited) == 2 for _ in range(1000))
    assert full >= 990
    with pytest.raises(ValueError):
        generalized_juggle(two, 6, 1, rng=rng)
    with pytest.raises(StateError):
        generalized_juggle(prepare_uniform(("item",), [(70,)]), 6, 2, rng=rng)


def test_juggle_twenty_support():
    rng = np.random.default_rng(6)
    items = rng.choice(1 << 10, size=20, replace=False)
    state = prepare_uniform(("item",), [(int(x),) for x in items])
    full = sum(len(generalized_juggle(state, 10, 20, rng=rng).visited) == 20 for _ in range(200))
    assert full >= 190


def test_juggle_fast_matches_exact():
    # same parameters, compare the distribution of visited-set sizes
    rng = np.random.default_rng(8)
    amps = {(1,): 0.5, (4,): 0.5j, (6,): -0.5, (7,): 0.5}
    state = State(("item",), amps)
    sizes = {}
    for method in ("fast", "exact"):
        runs = [len(generalized_juggle(state, 3, 4, inner_reps=1, outer_reps=2, rng=rng, method=method).visited)
                for _ in range(600)]
        sizes[method] = np.bincount(runs, minlength=5) / 600
    assert 0.5 * np.abs(sizes["fast"] - sizes["exact"]).sum() < 0.08


def test_juggle_record_trace():
    rng = np.random.default_rng(9)
    state = prepare_uniform(("item",), [(i,) for i in (2, 5, 11)])
    res = generalized_juggle(state, 4, 3, inner_reps=2, outer_reps=3, rng=rng, record=True)
    assert len(res.trace) == 1 + 3 * 2 * 2
    assert res.visited <= set(state.amplitudes)


def test_default_reps():
    assert default_outer_reps(2) == 6
    assert default_outer_reps(20) == 282
    assert default_inner_reps(6) == 8 and default_inner_reps(6, quadratic=True) == 72


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_visited_subset_of_support(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 8))
    items = rng.choice(64, size=k, replace=False)
    state = prepare_uniform(("item",), [(int(x),) for x in items])
    assert generalized_juggle(state, 6, max(k, 1), rng=rng).visited <= set(state.amplitudes)
