"""Prime-field arithmetic and multivariate polynomial fitting over F_q.

Everything here is exact integer arithmetic modulo a small prime. Arrays are
int64; with q < 2**16 no intermediate product overflows.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Mapping, Sequence

import numpy as np
from sympy import isprime, nextprime

MAX_MODULUS = 1 << 16


class InterpolationError(ValueError):
    """No unique polynomial of the requested degree fits the samples."""


class Inconsistent(InterpolationError):
    pass


class NonUnique(InterpolationError):
    pass


@dataclass(frozen=True)
class FieldSpec:
    q: int
    n: int
    sigma_size: int

    def __post_init__(self):
        if not isprime(self.q):
            raise ValueError(f"q={self.q} is not prime")
        if self.q >= MAX_MODULUS:
            raise ValueError(f"q={self.q} exceeds the supported 16-bit range")
        if self.q < self.n + 2:
            raise ValueError(f"q={self.q} must be at least n+2={self.n + 2}")
        if self.q <= self.sigma_size:
            raise ValueError(f"q={self.q} cannot embed an alphabet of size {self.sigma_size}")

    @classmethod
    def for_problem(cls, n: int, sigma_size: int, ldt_factor: int = 1) -> "FieldSpec":
        return cls(choose_field_size(n, sigma_size, ldt_factor), n, sigma_size)


def choose_field_size(n: int, sigma_size: int, ldt_factor: int = 1) -> int:
    """Smallest prime q with q >= max(n + 2, sigma_size + 1, ldt_factor * n)."""
    if n < 1 or sigma_size < 2 or ldt_factor < 1:
        raise ValueError("need n >= 1, sigma_size >= 2, ldt_factor >= 1")
    bound = max(n + 2, sigma_size + 1, ldt_factor * n)
    return bound if isprime(bound) else int(nextprime(bound))


def inverse(a: int, q: int) -> int:
    a %= q
    if a == 0:
        raise ZeroDivisionError("0 has no inverse mod q")
    return pow(a, q - 2, q)


def inverse_table(q: int) -> np.ndarray:
    """inv[a] = a^{-1} mod q, with inv[0] = 0."""
    inv = np.zeros(q, dtype=np.int64)
    for a in range(1, q):
        inv[a] = pow(a, q - 2, q)
    return inv


def row_reduce(matrix, q: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form of ``matrix`` over F_q, and its pivot columns."""
    m = np.array(matrix, dtype=np.int64) % q
    if m.ndim != 2:
        raise ValueError("row_reduce expects a 2-D matrix")
    rows, cols = m.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(m[r:, c])[0]
        if nz.size == 0:
            continue
        p = r + nz[0]
        if p != r:
            m[[r, p]] = m[[p, r]]
        m[r] = (m[r] * inverse(int(m[r, c]), q)) % q
        others = m[:, c].copy()
        others[r] = 0
        m = (m - np.outer(others, m[r])) % q
        pivots.append(c)
        r += 1
    return m, pivots


def rank(matrix, q: int) -> int:
    return len(row_reduce(matrix, q)[1])


def monomials(k: int, d: int) -> list[tuple[int, ...]]:
    """Exponent tuples of total degree <= d in k variables, graded then lexicographic."""
    exps = (e for e in product(range(d + 1), repeat=k) if sum(e) <= d)
    return sorted(exps, key=lambda e: (sum(e), tuple(-x for x in e)))


@dataclass(frozen=True)
class MultiPoly:
    """Polynomial over F_q in ``k`` variables with total degree at most ``d``.

    ``coeffs`` maps exponent tuples to nonzero field elements.
    """

    q: int
    k: int
    d: int
    coeffs: Mapping[tuple[int, ...], int] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for e, c in self.coeffs.items():
            e = tuple(int(x) for x in e)
            if len(e) != self.k:
                raise ValueError(f"exponent {e} has wrong arity for k={self.k}")
            if sum(e) > self.d:
                raise ValueError(f"exponent {e} exceeds total degree {self.d}")
            c = int(c) % self.q
            if c:
                clean[e] = c
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def constant(cls, value: int, q: int, k: int, d: int = 0) -> "MultiPoly":
        return cls(q, k, d, {(0,) * k: value})

    def __call__(self, point: Sequence[int]) -> int:
        return eval_poly(self, point)

    def __hash__(self):
        return hash((self.q, self.k, self.d, frozenset(self.coeffs.items())))


def eval_poly(p: MultiPoly, point: Sequence[int]) -> int:
    if len(point) != p.k:
        raise ValueError(f"point has arity {len(point)}, polynomial has {p.k}")
    q = p.q
    total = 0
    for e, c in p.coeffs.items():
        term = c
        for x, k in zip(point, e):
            if k:
                term = term * pow(int(x) % q, k, q) % q
        total += term
    return total % q


def _design_matrix(points: np.ndarray, exps: list[tuple[int, ...]], q: int) -> np.ndarray:
    # powers[i, v, j] = points[i, v] ** j mod q
    dmax = max((max(e) for e in exps), default=0)
    powers = np.ones(points.shape + (dmax + 1,), dtype=np.int64)
    for j in range(1, dmax + 1):
        powers[..., j] = (powers[..., j - 1] * points) % q
    cols = []
    for e in exps:
        col = np.ones(points.shape[0], dtype=np.int64)
        for v, k in enumerate(e):
            if k:
                col = (col * powers[:, v, k]) % q
        cols.append(col)
    return np.stack(cols, axis=1)


def fit_total_degree(samples: Iterable[tuple[Sequence[int], int]], k: int, d: int, q: int) -> MultiPoly:
    """Fit the unique polynomial of total degree <= d through ``samples``.

    Raises :class:`Inconsistent` when no such polynomial exists and
    :class:`NonUnique` when the samples do not pin it down.
    """
    samples = list(samples)
    if not samples:
        raise NonUnique("no samples")
    points = np.array([tuple(pt) for pt, _ in samples], dtype=np.int64)
    if points.ndim != 2 or points.shape[1] != k:
        raise ValueError(f"sample points must have arity {k}")
    values = np.array([v for _, v in samples], dtype=np.int64) % q
    points %= q
    exps = monomials(k, d)
    a = _design_matrix(points, exps, q)
    aug = np.concatenate([a, values[:, None]], axis=1)
    red, pivots = row_reduce(aug, q)
    if len(exps) in pivots:
        raise Inconsistent(f"no polynomial of total degree <= {d} fits {len(samples)} samples")
    if len(pivots) < len(exps):
        raise NonUnique(f"rank {len(pivots)} < {len(exps)} monomials")
    coeffs = {exps[c]: int(red[r, -1]) for r, c in enumerate(pivots)}
    return MultiPoly(q, k, d, coeffs)


def fit_univariate(xs: Sequence[int], ys: Sequence[int], d: int, q: int) -> MultiPoly:
    return fit_total_degree([((x,), y) for x, y in zip(xs, ys)], 1, d, q)
