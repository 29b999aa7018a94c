"""Affine lines, planes and cubes in F_q^n.

Points are plain tuples of ints in ``[0, q)``. The cube through ``w, y, w2, w3``
is parametrised as ``w + (y - w) t1 + (w2 - w) t2 + (w3 - w) t3``; the plane
through ``w, w2, w3`` is the slice ``t1 = 0``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence, Union

import numpy as np

from .field import inverse_table, rank, row_reduce

Point = tuple


class Plane(enum.Enum):
    """Tag for points lying on the plane itself (no cube is defined)."""

    ON_PLANE = "on-plane"

    def __repr__(self):
        return "ON_PLANE"


ON_PLANE = Plane.ON_PLANE
CanonicalRep = Union[Plane, Point]


class NotInCube(ValueError):
    pass


def _vec(p: Sequence[int], q: int) -> np.ndarray:
    return np.asarray(p, dtype=np.int64) % q


def affinely_independent(points: Sequence[Sequence[int]], q: int) -> bool:
    base = _vec(points[0], q)
    diffs = [(_vec(p, q) - base) % q for p in points[1:]]
    if not diffs:
        return True
    return rank(np.stack(diffs), q) == len(diffs)


def line_point(a: Sequence[int], b: Sequence[int], t: int, q: int) -> Point:
    return tuple(int(x) for x in (_vec(a, q) + (_vec(b, q) - _vec(a, q)) * t) % q)


@dataclass(frozen=True)
class CubeFrame:
    """Four affinely independent points spanning a cube in F_q^n.

    ``w2`` and ``w3`` span the plane with ``w``; ``y`` is the off-plane point.
    """

    w: Point
    y: Point
    w2: Point
    w3: Point
    q: int

    def __post_init__(self):
        n = len(self.w)
        if not all(len(p) == n for p in (self.y, self.w2, self.w3)):
            raise ValueError("frame points have different lengths")
        if not affinely_independent([self.w, self.y, self.w2, self.w3], self.q):
            raise ValueError("frame points are not affinely independent")

    @property
    def n(self) -> int:
        return len(self.w)

    def directions(self) -> np.ndarray:
        """3 x n matrix of direction vectors (y - w, w2 - w, w3 - w)."""
        w = _vec(self.w, self.q)
        return np.stack([(_vec(p, self.q) - w) % self.q for p in (self.y, self.w2, self.w3)])


def cube_point(frame: CubeFrame, t: Sequence[int]) -> Point:
    q = frame.q
    v = (_vec(frame.w, q) + _vec(t, q) @ frame.directions()) % q
    return tuple(int(x) for x in v)


def cube_coords(frame: CubeFrame, z: Sequence[int]) -> tuple[int, int, int]:
    """The unique ``t`` with ``cube_point(frame, t) == z``; raises NotInCube."""
    q = frame.q
    if len(z) != frame.n:
        raise NotInCube(f"point of length {len(z)} in a cube of F_q^{frame.n}")
    rhs = (_vec(z, q) - _vec(frame.w, q)) % q
    aug = np.concatenate([frame.directions().T, rhs[:, None]], axis=1)
    red, pivots = row_reduce(aug, q)
    if 3 in pivots:
        raise NotInCube(f"{tuple(z)} is not in the cube")
    return tuple(int(red[i, 3]) for i in range(3))


class CubeIndex:
    """Vectorised inverse of a frame's parametrisation.

    Solves for ``t`` on many points at once using a left inverse of the
    direction matrix; used where the protocol maps thousands of samples.
    """

    def __init__(self, frame: CubeFrame):
        self.frame = frame
        q = frame.q
        dirs = frame.directions()  # 3 x n
        # rows [dirs^T | I_n] reduced: pivots on the first 3 columns give a
        # left inverse L (3 x n) with L @ dirs^T = I_3.
        aug = np.concatenate([dirs.T, np.eye(frame.n, dtype=np.int64)], axis=1)
        red, pivots = row_reduce(aug, q)
        assert pivots[:3] == [0, 1, 2]
        self._left = red[:3, 3:]
        self._dirs = dirs
        self._w = _vec(frame.w, q)

    def coords(self, points: np.ndarray) -> np.ndarray:
        """t-coordinates of each row of ``points``; raises NotInCube if any row is outside."""
        q = self.frame.q
        rel = (np.asarray(points, dtype=np.int64) - self._w) % q
        t = (rel @ self._left.T) % q
        if np.any((t @ self._dirs) % q != rel):
            raise NotInCube("some points are not in the cube")
        return t


def enumerate_cube_minus_plane(frame: CubeFrame) -> list[Point]:
    """Points of the cube with t1 != 0, in lexicographic t-order."""
    q = frame.q
    ts = np.array([t for t in product(range(q), repeat=3) if t[0] != 0], dtype=np.int64)
    pts = (_vec(frame.w, q) + ts @ frame.directions()) % q
    return [tuple(int(x) for x in row) for row in pts]


def _rep_key(pts: Iterable[Point]) -> Point:
    return min(pts, key=lambda p: (sum(1 for x in p if x), p))


def on_plane(a: Sequence[int], b: Sequence[int], c: Sequence[int], y: Sequence[int], q: int) -> bool:
    av = _vec(a, q)
    m = np.stack([(_vec(b, q) - av) % q, (_vec(c, q) - av) % q, (_vec(y, q) - av) % q])
    return rank(m, q) < 3


def canonical_rep(a: Sequence[int], b: Sequence[int], c: Sequence[int], y: Sequence[int], q: int) -> CanonicalRep:
    """Label of the cube spanned by the plane (a, b, c) and the point ``y``.

    Returns ON_PLANE when ``y`` lies on the plane. Otherwise returns the point
    of the cube-minus-plane with the fewest nonzero entries, ties broken by
    lexicographic order on the integer coordinates.
    """
    a, b, c, y = (tuple(int(x) % q for x in p) for p in (a, b, c, y))
    if not affinely_independent([a, b, c], q):
        raise ValueError("a, b, c are not affinely independent")
    if on_plane(a, b, c, y, q):
        return ON_PLANE
    return _rep_key(enumerate_cube_minus_plane(CubeFrame(a, y, b, c, q)))


def all_points(n: int, q: int) -> np.ndarray:
    """Every point of F_q^n as rows, ordered by base-q index (first coordinate most significant)."""
    return np.array(list(product(range(q), repeat=n)), dtype=np.int64).reshape(-1, n)


def point_index(points: np.ndarray, q: int) -> np.ndarray:
    """Base-q index of each row, consistent with :func:`all_points`."""
    points = np.asarray(points, dtype=np.int64)
    n = points.shape[-1]
    weights = q ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return points @ weights


class CanonicalMap:
    """canonical_rep evaluated for every point of F_q^n at once.

    Two points z, z' off the plane span the same cube exactly when their
    offsets from ``a``, reduced modulo the plane's direction space, are
    nonzero scalar multiples of each other. Grouping by the normalised
    reduced offset partitions F_q^n into the plane and the cube-minus-plane
    fibres; each fibre's representative is its minimum under the
    (nonzero-count, lexicographic) order.
    """

    def __init__(self, a: Sequence[int], b: Sequence[int], c: Sequence[int], q: int):
        a, b, c = (tuple(int(x) % q for x in p) for p in (a, b, c))
        if not affinely_independent([a, b, c], q):
            raise ValueError("a, b, c are not affinely independent")
        self.a, self.b, self.c, self.q = a, b, c, q
        n = len(a)
        self.n = n
        av = _vec(a, q)
        red, piv = row_reduce(np.stack([(_vec(b, q) - av) % q, (_vec(c, q) - av) % q]), q)
        pts = all_points(n, q)
        rel = (pts - av) % q
        for r, col in enumerate(piv):
            rel = (rel - np.outer(rel[:, col], red[r])) % q
        plane = ~rel.any(axis=1)
        # normalise each reduced offset so its first nonzero entry is 1
        first = np.argmax(rel != 0, axis=1)
        lead = rel[np.arange(len(rel)), first]
        key = (rel * inverse_table(q)[lead][:, None]) % q
        key_id = point_index(key, q)
        nnz = np.count_nonzero(pts, axis=1)
        idx = point_index(pts, q)
        order = np.lexsort((idx, nnz, key_id))
        rep = np.empty(len(pts), dtype=np.int64)
        sorted_keys = key_id[order]
        starts = np.flatnonzero(np.r_[True, sorted_keys[1:] != sorted_keys[:-1]])
        group_rep = idx[order[starts]]
        group_of = np.searchsorted(sorted_keys[starts], key_id)
        rep[:] = group_rep[group_of]
        rep[plane] = -1
        self._rep = rep
        self._pts = pts

    def rep_index(self, z_index: int) -> int:
        """Base-q index of the representative, or -1 on the plane."""
        return int(self._rep[z_index])

    def __call__(self, z: Sequence[int]) -> CanonicalRep:
        i = int(point_index(np.asarray(z, dtype=np.int64) % self.q, self.q))
        r = self._rep[i]
        if r < 0:
            return ON_PLANE
        return tuple(int(x) for x in self._pts[r])

    def table(self) -> list[CanonicalRep]:
        """Representative of every point, indexed by base-q index."""
        tuples = [tuple(int(x) for x in row) for row in self._pts]
        return [ON_PLANE if r < 0 else tuples[r] for r in self._rep]
