import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pdqma.encode import (ExtensionOracle, ProofTable, TableFormatError, bits, embed, extension_grid,
                          grid_function, line_test, multilinear_extend, unembed)
from pdqma.affine import all_points, line_point
from pdqma.field import FieldSpec, fit_univariate, eval_poly


def test_bits_big_endian():
    assert bits(6, 4) == (0, 1, 1, 0)


def test_example_n1():
    spec = FieldSpec(5, 1, 4)
    oracle = ExtensionOracle(spec, ProofTable(1, (2, 3), 4))
    assert multilinear_extend(oracle, (4,)) == 1


def test_constant_table():
    spec = FieldSpec(7, 3, 3)
    oracle = ExtensionOracle(spec, ProofTable(3, (2,) * 8, 3))
    assert set(oracle.grid.tolist()) == {2}


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 4))
def test_grid_matches_direct_and_agrees_on_cube(seed, n):
    rng = np.random.default_rng(seed)
    spec = FieldSpec.for_problem(n, 3)
    oracle = ExtensionOracle(spec, ProofTable.random(n, 3, rng))
    grid = extension_grid(oracle)
    pts = all_points(n, spec.q)
    for k in rng.choice(len(pts), size=min(20, len(pts)), replace=False):
        assert grid[k] == multilinear_extend(oracle, pts[k].tolist())
    for i, x in enumerate(itertools.product((0, 1), repeat=n)):
        assert oracle(x) == embed(oracle.table.entries[i], spec)


def test_affine_in_each_coordinate():
    rng = np.random.default_rng(3)
    spec = FieldSpec(7, 4, 3)
    f = grid_function(ExtensionOracle(spec, ProofTable.random(4, 3, rng)).grid, 7)
    for _ in range(20):
        z = [int(v) for v in rng.integers(0, 7, 4)]
        i = int(rng.integers(4))
        vals = []
        for t in range(7):
            z[i] = t
            vals.append(f(z))
        assert fit_univariate(range(7), vals, 1, 7) is not None


def test_embedding():
    spec = FieldSpec(7, 4, 3)
    assert [embed(s, spec) for s in range(3)] == [0, 1, 2]
    assert unembed(5, spec) is None
    with pytest.raises(ValueError):
        embed(3, spec)


def test_table_round_trip(tmp_path):
    t = ProofTable.random(3, 3, np.random.default_rng(0))
    path = tmp_path / "t.txt"
    t.save(path)
    assert ProofTable.load(path, 3) == t
    with pytest.raises(TableFormatError):
        ProofTable.loads("000 1\n001 5\n", 3)
    with pytest.raises(TableFormatError):
        ProofTable.loads("000 1\n", 3)


def test_honest_line_test_is_zero():
    spec = FieldSpec(7, 3, 3)
    rng = np.random.default_rng(1)
    f = grid_function(ExtensionOracle(spec, ProofTable.random(3, 3, rng)).grid, 7)
    assert line_test(f, spec, 3, 500, rng) == 0.0
    assert line_test(f, spec, 3, 500, rng, mode="point") == 0.0


def test_random_table_fails():
    spec = FieldSpec(7, 3, 3)
    rng = np.random.default_rng(2)
    f = grid_function(rng.integers(0, 7, 7 ** 3), 7)
    assert line_test(f, spec, 3, 500, rng) >= 0.99


def _enumerated_single_corruption(n, q, d, mode):
    """Exact failure probability with one corrupted point, by enumerating every line draw."""
    c = (1,) * n
    pts = list(itertools.product(range(q), repeat=n))
    fail = total = 0
    subsets = list(itertools.permutations(range(q), d + 2)) if mode == "point" else [tuple(range(q))]
    for a in pts:
        for b in pts:
            if a == b:
                continue
            line = [line_point(a, b, t, q) for t in range(q)]
            for ts in subsets:
                total += 1
                fit, check = ts[: d + 1], ts[d + 1:]
                # honest function 0 plus a bump at c
                vals = {t: int(line[t] == c) for t in ts}
                g = fit_univariate(fit, [vals[t] for t in fit], d, q)
                fail += any(eval_poly(g, (t,)) != vals[t] for t in check)
    return fail / total


def test_single_corruption_enumeration():
    q, n, d = 5, 2, 2
    full = _enumerated_single_corruption(n, q, d, "full")
    assert full == pytest.approx(q ** (1 - n))
    point = _enumerated_single_corruption(n, q, d, "point")
    assert point == pytest.approx(q ** (1 - n) * (d + 2) / q)


@pytest.mark.parametrize("mode,expected", [("full", 7 ** -2), ("point", 7 ** -2 * 5 / 7)])
def test_single_corruption_monte_carlo(mode, expected):
    spec = FieldSpec(7, 3, 3)
    rng = np.random.default_rng(4)
    grid = ExtensionOracle(spec, ProofTable.random(3, 3, rng)).grid.copy()
    grid[100] = (grid[100] + 1) % 7
    delta = line_test(grid_function(grid, 7), spec, 3, 5000, rng, mode=mode)
    sd = (expected * (1 - expected) / 5000) ** 0.5
    assert abs(delta - expected) < 4 * sd
    if mode == "point":
        assert 0.001 <= delta <= 0.02
