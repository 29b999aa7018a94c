"""Proof tables, their multilinear extensions, and the lines-point tester."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .affine import line_point, point_index
from .field import FieldSpec, InterpolationError, fit_univariate, eval_poly


class TableFormatError(ValueError):
    pass


def bits(i: int, n: int) -> tuple[int, ...]:
    """Big-endian n-bit tuple of ``i``."""
    return tuple((i >> (n - 1 - k)) & 1 for k in range(n))


def bits_to_int(b: Sequence[int]) -> int:
    out = 0
    for x in b:
        out = (out << 1) | int(x)
    return out


@dataclass(frozen=True)
class ProofTable:
    """A total map {0,1}^n -> symbol indices, stored as a length-2^n array.

    ``entries[i]`` is the symbol at the big-endian bitstring of ``i``.
    """

    n: int
    entries: tuple[int, ...]
    sigma_size: int

    def __post_init__(self):
        if len(self.entries) != 1 << self.n:
            raise ValueError(f"table needs {1 << self.n} entries, got {len(self.entries)}")
        if any(not 0 <= s < self.sigma_size for s in self.entries):
            raise ValueError("symbol index outside the alphabet")
        object.__setattr__(self, "entries", tuple(int(s) for s in self.entries))

    @classmethod
    def from_mapping(cls, n: int, mapping: Mapping[Sequence[int], int], sigma_size: int, default: int = 0):
        entries = [default] * (1 << n)
        for x, s in mapping.items():
            entries[bits_to_int(x)] = s
        return cls(n, tuple(entries), sigma_size)

    @classmethod
    def random(cls, n: int, sigma_size: int, rng: np.random.Generator) -> "ProofTable":
        return cls(n, tuple(int(s) for s in rng.integers(0, sigma_size, size=1 << n)), sigma_size)

    def __getitem__(self, x: Sequence[int]) -> int:
        return self.entries[bits_to_int(x)]

    def dumps(self) -> str:
        return "".join(f"{''.join(map(str, bits(i, self.n)))} {s}\n" for i, s in enumerate(self.entries))

    @classmethod
    def loads(cls, text: str, sigma_size: int) -> "ProofTable":
        rows = {}
        n = None
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                bitstr, sym = line.split()
                value = int(sym)
            except ValueError:
                raise TableFormatError(f"line {lineno}: expected '<bitstring> <symbol-index>'") from None
            if set(bitstr) - {"0", "1"}:
                raise TableFormatError(f"line {lineno}: {bitstr!r} is not a bitstring")
            if n is None:
                n = len(bitstr)
            elif len(bitstr) != n:
                raise TableFormatError(f"line {lineno}: inconsistent bitstring length")
            rows[int(bitstr, 2)] = value
        if n is None or len(rows) != 1 << n:
            raise TableFormatError("table is not total on {0,1}^n")
        try:
            return cls(n, tuple(rows[i] for i in range(1 << n)), sigma_size)
        except ValueError as exc:
            raise TableFormatError(str(exc)) from None

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path, sigma_size: int) -> "ProofTable":
        return cls.loads(Path(path).read_text(), sigma_size)


def embed(symbol: int, spec: FieldSpec) -> int:
    """Alphabet embedding: the identity on symbol indices."""
    if not 0 <= symbol < spec.sigma_size:
        raise ValueError(f"symbol {symbol} outside the alphabet")
    return symbol


def unembed(value: int, spec: FieldSpec) -> int | None:
    """Inverse embedding; None for field values that encode no symbol."""
    return value if 0 <= value < spec.sigma_size else None


@dataclass(frozen=True)
class ExtensionOracle:
    spec: FieldSpec
    table: ProofTable

    def __post_init__(self):
        if self.table.n != self.spec.n:
            raise ValueError("table and field spec disagree on n")
        if self.table.sigma_size > self.spec.sigma_size:
            raise ValueError("table alphabet larger than the field spec's")

    def __call__(self, z: Sequence[int]) -> int:
        return multilinear_extend(self, z)

    @cached_property
    def grid(self) -> np.ndarray:
        """Extension values on all of F_q^n, flat in base-q index order."""
        return extension_grid(self)


def multilinear_extend(oracle: ExtensionOracle, z: Sequence[int]) -> int:
    """sum_x embed(pi(x)) * prod_i (x_i z_i + (1 - x_i)(1 - z_i)) mod q, summed directly."""
    spec = oracle.spec
    n, q = spec.n, spec.q
    if len(z) != n:
        raise ValueError(f"point has arity {len(z)}, expected {n}")
    z = [int(v) % q for v in z]
    total = 0
    for i, x in enumerate(product((0, 1), repeat=n)):
        term = embed(oracle.table.entries[i], spec)
        if not term:
            continue
        for xi, zi in zip(x, z):
            term = term * (zi if xi else 1 - zi) % q
        total += term
    return total % q


def extension_grid(oracle: ExtensionOracle) -> np.ndarray:
    """Multilinear extension on every point of F_q^n via per-axis affine interpolation."""
    spec = oracle.spec
    n, q = spec.n, spec.q
    vals = np.array([embed(s, spec) for s in oracle.table.entries], dtype=np.int64).reshape((2,) * n)
    t = np.arange(q, dtype=np.int64)
    for axis in range(n):
        f0 = np.take(vals, 0, axis=axis)
        f1 = np.take(vals, 1, axis=axis)
        # f(t) = f0 + t (f1 - f0) along this axis
        shape = [1] * (n - 1)
        stacked = np.expand_dims(f0, axis) + np.expand_dims(f1 - f0, axis) * t.reshape(
            shape[:axis] + [q] + shape[axis:])
        vals = stacked % q
    return vals.reshape(-1)


def grid_function(grid: np.ndarray, q: int) -> Callable[[Sequence[int]], int]:
    """Point oracle backed by a flat table over F_q^n."""
    def f(z):
        return int(grid[int(point_index(np.asarray(z), q))])
    return f


def random_line(n: int, q: int, rng: np.random.Generator) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Two distinct uniform points; identical draws are resampled."""
    while True:
        a = tuple(int(v) for v in rng.integers(0, q, size=n))
        b = tuple(int(v) for v in rng.integers(0, q, size=n))
        if a != b:
            return a, b


def line_test(f: Callable[[Sequence[int]], int], spec: FieldSpec, d: int, trials: int,
              rng: np.random.Generator, mode: str = "full") -> float:
    """Empirical failure rate of the lines-point low-degree test.

    ``mode="full"`` reads f on all q points of each random line, fits a
    degree-<=d univariate through the first d+1 and fails on any
    disagreement. ``mode="point"`` fits through d+1 random points of the
    line and checks one further random point.
    """
    q, n = spec.q, spec.n
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if q <= d + 1:
        raise ValueError("need q > d + 1")
    if mode not in ("full", "point"):
        raise ValueError(f"unknown mode {mode!r}")
    failures = 0
    for _ in range(trials):
        a, b = random_line(n, q, rng)
        if mode == "full":
            ts = list(range(q))
            fit_ts, check_ts = ts[: d + 1], ts[d + 1:]
        else:
            ts = [int(t) for t in rng.permutation(q)[: d + 2]]
            fit_ts, check_ts = ts[: d + 1], ts[d + 1:]
        values = {t: f(line_point(a, b, t, q)) for t in fit_ts + check_ts}
        try:
            g = fit_univariate(fit_ts, [values[t] for t in fit_ts], d, q)
        except InterpolationError:
            failures += 1
            continue
        if any(eval_poly(g, (t,)) != values[t] for t in check_ts):
            failures += 1
    return failures / trials
