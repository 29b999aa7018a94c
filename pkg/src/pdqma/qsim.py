"""Sparse state vectors over labelled registers.

A :class:`State` maps basis labels (tuples with one value per register) to
complex amplitudes. Registers hold arbitrary hashable values; only the
unitaries need integer-valued registers. States are immutable: every
operation returns a new one.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from types import MappingProxyType
from typing import Any, Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

PRUNE = 1e-15
NORM_TOL = 1e-9

Label = tuple


class StateError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class State:
    registers: tuple[str, ...]
    amplitudes: Mapping[Label, complex]

    def __post_init__(self):
        if len(set(self.registers)) != len(self.registers):
            raise StateError(f"duplicate register names in {self.registers}")
        amps = {}
        width = len(self.registers)
        for lab, a in self.amplitudes.items():
            if len(lab) != width:
                raise StateError(f"label {lab!r} does not match registers {self.registers}")
            a = complex(a)
            if abs(a) >= PRUNE:
                amps[lab] = a
        if not amps:
            raise StateError("state has no support")
        norm = sum(abs(a) ** 2 for a in amps.values())
        if abs(norm - 1.0) > NORM_TOL:
            raise StateError(f"state norm {norm} is not 1")
        object.__setattr__(self, "amplitudes", MappingProxyType(amps))

    @classmethod
    def normalized(cls, registers: Sequence[str], amplitudes: Mapping[Label, complex]) -> "State":
        norm = np.sqrt(sum(abs(a) ** 2 for a in amplitudes.values()))
        if norm == 0:
            raise StateError("cannot normalise the zero vector")
        return cls(tuple(registers), {k: a / norm for k, a in amplitudes.items()})

    def __eq__(self, other):
        if not isinstance(other, State):
            return NotImplemented
        return self.registers == other.registers and dict(self.amplitudes) == dict(other.amplitudes)

    def __len__(self):
        return len(self.amplitudes)

    def index(self, register: str) -> int:
        try:
            return self.registers.index(register)
        except ValueError:
            raise StateError(f"no register {register!r} in {self.registers}") from None

    def support(self) -> list[Label]:
        return list(self.amplitudes)

    def probabilities(self) -> dict[Label, float]:
        return {k: abs(a) ** 2 for k, a in self.amplitudes.items()}

    def norm(self) -> float:
        return float(np.sqrt(sum(abs(a) ** 2 for a in self.amplitudes.values())))

    def allclose(self, other: "State", atol: float = NORM_TOL) -> bool:
        if self.registers != other.registers:
            return False
        keys = set(self.amplitudes) | set(other.amplitudes)
        return all(abs(self.amplitudes.get(k, 0) - other.amplitudes.get(k, 0)) <= atol for k in keys)

    def marginal(self, register: str) -> dict[Any, float]:
        i = self.index(register)
        out: dict[Any, float] = defaultdict(float)
        for lab, a in self.amplitudes.items():
            out[lab[i]] += abs(a) ** 2
        return dict(out)


def prepare_uniform(registers: Sequence[str], support: Iterable[Label]) -> State:
    support = list(dict.fromkeys(support))
    if not support:
        raise StateError("empty support")
    amp = 1 / np.sqrt(len(support))
    return State(tuple(registers), {lab: amp for lab in support})


def adjoin_computed(state: State, g: Callable[[Label], Hashable], target: str) -> State:
    """|x> -> |x>|g(x)> on a new register ``target``."""
    if target in state.registers:
        raise StateError(f"register {target!r} already present")
    return State(state.registers + (target,),
                 {lab + (g(lab),): a for lab, a in state.amplitudes.items()})


def unadjoin(state: State, target: str, g: Callable[[Label], Hashable] | None = None) -> State:
    """Inverse of :func:`adjoin_computed`: uncompute and drop ``target``.

    When ``g`` is given every label is checked to carry ``g`` of the rest,
    which is what makes the removal reversible.
    """
    i = state.index(target)
    regs = state.registers[:i] + state.registers[i + 1:]
    out = {}
    for lab, a in state.amplitudes.items():
        rest = lab[:i] + lab[i + 1:]
        if g is not None and g(rest) != lab[i]:
            raise StateError(f"register {target!r} does not hold g(x) on {rest!r}")
        if rest in out:
            raise StateError(f"dropping {target!r} would merge labels; it is not a function of the rest")
        out[rest] = a
    return State(regs, out)


def relabel(state: State, f: Callable[[Label], Label], registers: Sequence[str]) -> State:
    """Apply an injective classical map to every label."""
    out = {}
    for lab, a in state.amplitudes.items():
        new = tuple(f(lab))
        if new in out:
            raise StateError("relabelling map is not injective on the support")
        out[new] = a
    return State(tuple(registers), out)


def measure_collapse(state: State, register: str, rng: np.random.Generator) -> tuple[Any, State]:
    """Computational-basis measurement of one register, with Born-rule collapse."""
    i = state.index(register)
    weights: dict[Any, float] = {}
    for lab, a in state.amplitudes.items():
        weights[lab[i]] = weights.get(lab[i], 0.0) + abs(a) ** 2
    outcomes = list(weights)
    p = np.array([weights[o] for o in outcomes])
    outcome = outcomes[rng.choice(len(outcomes), p=p / p.sum())]
    scale = 1 / np.sqrt(weights[outcome])
    post = {lab: a * scale for lab, a in state.amplitudes.items() if lab[i] == outcome}
    return outcome, State(state.registers, post)


def sample_noncollapsing(state: State, k: int, rng: np.random.Generator) -> list[Label]:
    """k independent Born-rule samples of all registers; ``state`` is untouched."""
    if k < 1:
        raise ValueError("k must be >= 1")
    labels = list(state.amplitudes)
    p = np.array([abs(a) ** 2 for a in state.amplitudes.values()])
    idx = rng.choice(len(labels), size=k, p=p / p.sum())
    return [labels[j] for j in idx]


# -- unitaries on a single register -------------------------------------------

@dataclass(frozen=True)
class Permutation:
    """Bijection on register values; values absent from ``mapping`` are fixed."""

    mapping: Mapping[Hashable, Hashable]

    def __post_init__(self):
        m = dict(self.mapping)
        if len(set(m.values())) != len(m) or set(m.values()) != set(m):
            raise ValueError("mapping is not a permutation of its keys")
        object.__setattr__(self, "mapping", MappingProxyType(m))

    def __hash__(self):
        return hash(frozenset(self.mapping.items()))

    def __call__(self, v):
        return self.mapping.get(v, v)

    def inverse(self) -> "Permutation":
        return Permutation({v: k for k, v in self.mapping.items()})

    def matrix(self, d: int) -> np.ndarray:
        u = np.zeros((d, d), dtype=complex)
        for v in range(d):
            u[self(v), v] = 1
        return u


@dataclass(frozen=True)
class DFT:
    """(1/sqrt m) sum_v exp(2 pi i j v / m) on values 0..m-1; ``inverse`` conjugates."""

    m: int
    inverse: bool = False

    def matrix(self, d: int | None = None) -> np.ndarray:
        if d is not None and d != self.m:
            raise ValueError(f"DFT({self.m}) on a register of size {d}")
        j = np.arange(self.m)
        sign = -1 if self.inverse else 1
        return np.exp(sign * 2j * np.pi * np.outer(j, j) / self.m) / np.sqrt(self.m)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        if self.inverse:
            return np.fft.fft(vec, norm="ortho")
        return np.fft.ifft(vec, norm="ortho")

    def dagger(self) -> "DFT":
        return DFT(self.m, not self.inverse)


@dataclass(frozen=True, eq=False)
class Matrix:
    """Explicit d x d unitary on register values 0..d-1."""

    array: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.array, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("unitary must be square")
        object.__setattr__(self, "array", a)

    @property
    def d(self) -> int:
        return self.array.shape[0]

    def matrix(self, d: int | None = None) -> np.ndarray:
        if d is not None and d != self.d:
            raise ValueError(f"{self.d}x{self.d} matrix on a register of size {d}")
        return self.array


Unitary = Permutation | DFT | Matrix


def register_dim(u: Unitary) -> int | None:
    if isinstance(u, DFT):
        return u.m
    if isinstance(u, Matrix):
        return u.d
    return None


def sectors(state: State, register: str) -> dict[Label, dict[Any, complex]]:
    """Group amplitudes by the values of every register except ``register``."""
    i = state.index(register)
    out: dict[Label, dict[Any, complex]] = defaultdict(dict)
    for lab, a in state.amplitudes.items():
        out[lab[:i] + lab[i + 1:]][lab[i]] = a
    return out


def _splice(rest: Label, i: int, v) -> Label:
    return rest[:i] + (v,) + rest[i:]


def apply_unitary_on(state: State, register: str, u: Unitary) -> State:
    """Apply ``u`` to one register, independently for each setting of the others."""
    i = state.index(register)
    if isinstance(u, Permutation):
        return State(state.registers, {lab[:i] + (u(lab[i]),) + lab[i + 1:]: a
                                       for lab, a in state.amplitudes.items()})
    d = register_dim(u)
    out = {}
    for rest, sec in sectors(state, register).items():
        vec = np.zeros(d, dtype=complex)
        for v, a in sec.items():
            if not (isinstance(v, (int, np.integer)) and 0 <= v < d):
                raise StateError(f"register value {v!r} outside 0..{d - 1}")
            vec[v] = a
        res = u.apply(vec) if isinstance(u, DFT) else u.array @ vec
        for j in np.flatnonzero(np.abs(res) >= PRUNE):
            out[_splice(rest, i, int(j))] = res[j]
    return State(state.registers, out)
