"""Hidden-variable dynamics: the block-product theory, histories, and juggling.

The block-product theory moves the hidden variable, on each unitary layer,
to a position drawn from the post-layer Born distribution restricted to the
block (connected component of the unitary's support graph) it currently
sits in. Transition probabilities never depend on the starting position
within a block, so marginalization and indifference hold exactly.
"""
from __future__ import annotations

import logging
import math
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.stats import unitary_group
from sympy import isprime, nextprime

from .qsim import (DFT, Label, Matrix, Permutation, State, StateError, Unitary,
                   adjoin_computed, apply_unitary_on, register_dim, unadjoin)

log = logging.getLogger(__name__)

BLOCK_EPS = 1e-12
MASS_EPS = 1e-12


# -- blocks and the dense reference ------------------------------------------

def block_partition(u: Unitary, eps: float = BLOCK_EPS, d: int | None = None) -> list[frozenset]:
    """Connected components of the graph with an edge wherever |u_ij| > eps.

    Permutations give their orbits (over ``range(d)`` when ``d`` is given,
    otherwise over the values they move); a DFT is a single block.
    """
    if isinstance(u, DFT):
        return [frozenset(range(u.m))]
    if isinstance(u, Permutation):
        domain = range(d) if d is not None else u.mapping.keys()
        seen: set = set()
        blocks = []
        for v in domain:
            if v in seen:
                continue
            orbit = {v}
            w = u(v)
            while w != v:
                orbit.add(w)
                w = u(w)
            seen |= orbit
            blocks.append(frozenset(orbit))
        return blocks
    a = np.abs(u.matrix()) > eps
    ncomp, lab = connected_components(csr_matrix(a | a.T), directed=False)
    return [frozenset(np.flatnonzero(lab == c).tolist()) for c in range(ncomp)]


def _block_of(u: Unitary, v, eps: float = BLOCK_EPS) -> list:
    if isinstance(u, DFT):
        return list(range(u.m))
    if isinstance(u, Permutation):
        orbit = [v]
        w = u(v)
        while w != v:
            orbit.append(w)
            w = u(w)
        return orbit
    for b in block_partition(u, eps):
        if v in b:
            return sorted(b)
    raise StateError(f"value {v!r} outside the matrix's index range")


def _as_vector(state, d: int | None = None) -> np.ndarray:
    if isinstance(state, State):
        if len(state.registers) != 1:
            raise StateError("dense reference needs a single-register state")
        if d is None:
            d = max(state.amplitudes)[0] + 1
        vec = np.zeros(d, dtype=complex)
        for (v,), a in state.amplitudes.items():
            vec[v] = a
        return vec
    return np.asarray(state, dtype=complex)


def _umat(u, d: int | None = None) -> np.ndarray:
    if isinstance(u, Permutation):
        return u.matrix(d if d is not None else max(u.mapping, default=0) + 1)
    if isinstance(u, (Matrix, DFT)):
        return u.matrix()
    return np.asarray(u, dtype=complex)


def dense_stochastic_reference(state_before, u, eps: float = BLOCK_EPS) -> np.ndarray:
    """Block-product transition matrix S with S[i, j] = Pr[i -> j].

    Within a block B, S[i, j] = |(U psi)_j|^2 / mass_B for i, j in B; entries
    across blocks are zero; blocks with no mass get uniform rows.
    """
    d = len(state_before) if not isinstance(state_before, State) else None
    umat = _umat(u, d)
    d = umat.shape[0]
    psi = _as_vector(state_before, d)
    target = np.abs(umat @ psi) ** 2
    s = np.zeros((d, d))
    for block in block_partition(Matrix(umat), eps):
        idx = np.array(sorted(block))
        mass = target[idx].sum()
        row = target[idx] / mass if mass > MASS_EPS else np.full(len(idx), 1 / len(idx))
        s[np.ix_(idx, idx)] = row[None, :]
    return s


def joint_matrix(state_before, u, eps: float = BLOCK_EPS) -> np.ndarray:
    """P[i, j] = S[i, j] * rho_ii."""
    umat = _umat(u)
    psi = _as_vector(state_before, umat.shape[0])
    return dense_stochastic_reference(psi, umat, eps) * (np.abs(psi) ** 2)[:, None]


def axiom_residuals(psi, u, eps: float = BLOCK_EPS) -> dict:
    """Marginalization residual, indifference check and row-sum error for one (psi, U)."""
    umat = _umat(u)
    psi = _as_vector(psi, umat.shape[0])
    s = dense_stochastic_reference(psi, umat, eps)
    rho = np.abs(psi) ** 2
    marg = float(np.max(np.abs(rho @ s - np.abs(umat @ psi) ** 2)))
    u_blocks = block_partition(Matrix(umat), eps)
    label = np.empty(umat.shape[0], dtype=int)
    for k, b in enumerate(u_blocks):
        label[list(b)] = k
    cross = label[:, None] != label[None, :]
    s_blocks = block_partition(Matrix(s), 0.0)
    indifferent = not np.any(s[cross]) and all(
        any(sb <= ub for ub in u_blocks) for sb in s_blocks)
    return {
        "marginalization": marg,
        "indifference": bool(indifferent),
        "row_sum_error": float(np.max(np.abs(s.sum(axis=1) - 1))),
        "min_entry": float(s.min()),
    }


def random_block_unitary(d: int, rng: np.random.Generator, blocks: int = 1) -> np.ndarray:
    """Haar-random unitary on each of ``blocks`` random index blocks, zero across blocks."""
    if not 1 <= blocks <= d:
        raise ValueError("need 1 <= blocks <= d")
    order = rng.permutation(d)
    cuts = np.sort(rng.choice(np.arange(1, d), size=blocks - 1, replace=False)) if blocks > 1 else []
    u = np.zeros((d, d), dtype=complex)
    for idx in np.split(order, cuts):
        k = len(idx)
        blk = unitary_group.rvs(k, random_state=rng) if k > 1 else np.exp(2j * np.pi * rng.random((1, 1)))
        u[np.ix_(idx, idx)] = blk
    return u


def random_axiom_case(rng: np.random.Generator, max_dim: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """A random (psi, U) pair: block-structured U, psi with some exact zeros."""
    d = int(rng.integers(2, max_dim + 1))
    u = random_block_unitary(d, rng, int(rng.integers(1, d + 1)))
    psi = rng.normal(size=d) + 1j * rng.normal(size=d)
    psi[rng.random(d) < 0.25] = 0
    if not psi.any():
        psi[0] = 1
    return psi / np.linalg.norm(psi), u


# -- sampling transitions and histories ---------------------------------------

def _block_target(state: State, register: str, u: Unitary, pos: Label):
    """Block containing ``pos`` and the post-layer amplitudes on it."""
    i = state.index(register)
    rest = pos[:i] + pos[i + 1:]
    block = _block_of(u, pos[i])
    sec = {lab[i]: a for lab, a in state.amplitudes.items() if lab[:i] + lab[i + 1:] == rest}
    if isinstance(u, Permutation):
        inv = u.inverse()
        amps = np.array([sec.get(inv(j), 0) for j in block], dtype=complex)
    else:
        d = register_dim(u)
        vec = np.zeros(d, dtype=complex)
        for v, a in sec.items():
            vec[v] = a
        full = u.apply(vec) if isinstance(u, DFT) else u.array @ vec
        amps = full[block]
    labels = [pos[:i] + (j,) + pos[i + 1:] for j in block]
    return labels, amps


def _transition(state_before, register, u, pos, rng) -> tuple[Label, bool]:
    labels, amps = _block_target(state_before, register, u, pos)
    w = np.abs(amps) ** 2
    mass = w.sum()
    if mass < MASS_EPS:
        log.warning("zero-mass block at %r; uniform fallback", pos)
        return labels[rng.integers(len(labels))], True
    return labels[rng.choice(len(labels), p=w / mass)], False


def block_product_transition(state_before: State, register: str, u: Unitary, pos: Label,
                             rng: np.random.Generator) -> Label:
    """Next hidden-variable position when ``u`` acts on ``register``."""
    if pos not in state_before.amplitudes:
        raise StateError(f"position {pos!r} is not in the support")
    return _transition(state_before, register, u, pos, rng)[0]


@dataclass
class History:
    positions: list[Label]
    fallbacks: int = 0

    def __len__(self):
        return len(self.positions)


def born_sample(state: State, rng: np.random.Generator) -> Label:
    labels = list(state.amplitudes)
    p = np.array([abs(a) ** 2 for a in state.amplitudes.values()])
    return labels[rng.choice(len(labels), p=p / p.sum())]


def history_sample(initial: State, layers: Sequence[tuple[str, Unitary]], rng: np.random.Generator,
                   start: Label | None = None) -> tuple[History, State]:
    """Sample (v_0, ..., v_T) through ``layers`` and return it with the final state.

    ``start`` pins v_0 instead of drawing it from the Born distribution.
    """
    if start is None:
        pos = born_sample(initial, rng)
    elif start in initial.amplitudes:
        pos = start
    else:
        raise StateError(f"start {start!r} is not in the support")
    hist = History([pos])
    state = initial
    for register, u in layers:
        pos, fell_back = _transition(state, register, u, pos, rng)
        hist.fallbacks += fell_back
        hist.positions.append(pos)
        state = apply_unitary_on(state, register, u)
    return hist, state


# -- hashing --------------------------------------------------------------------

def hash_range(s: int) -> int:
    """Smallest prime m with 2s - 4 <= m <= 3s - 3."""
    if s < 3:
        raise ValueError("hash range needs s >= 3")
    m = max(2, 2 * s - 4)
    if not isprime(m):
        m = int(nextprime(m))
    if m > 3 * s - 3:
        raise ValueError(f"no prime in [{2 * s - 4}, {3 * s - 3}]")
    return m


@dataclass(frozen=True)
class HashFamilyMember:
    """h(x) = ((a x + b) mod P) mod m."""

    a: int
    b: int
    P: int
    m: int

    def __call__(self, x: int) -> int:
        return ((self.a * int(x) + self.b) % self.P) % self.m

    def apply(self, xs: np.ndarray, ell: int) -> np.ndarray:
        xs = np.asarray(xs)
        if self.P.bit_length() + ell + 1 < 63:
            return ((self.a * xs.astype(np.int64) + self.b) % self.P) % self.m
        return np.array([self(int(x)) for x in xs], dtype=np.int64)


@lru_cache(maxsize=None)
def hash_modulus(ell: int, m: int) -> int:
    return int(nextprime((1 << (ell + 16)) * m))


def draw_hash(ell: int, s: int, rng: np.random.Generator) -> HashFamilyMember:
    m = hash_range(s)
    P = hash_modulus(ell, m)
    a = 1 + int(rng.integers(0, P - 1))
    b = int(rng.integers(0, P))
    return HashFamilyMember(a, b, P, m)


def one_collision_probability(s: int, m: int) -> float:
    """Pr[a fixed x collides with exactly one other element] under ideal hashing."""
    return (s - 1) / m * (1 - 1 / m) ** (s - 2)


# -- juggling -------------------------------------------------------------------

def default_inner_reps(ell: int, quadratic: bool = False) -> int:
    return 2 * ell * ell if quadratic else 8


def default_outer_reps(s: int) -> int:
    """Outer repetitions so that each of s items is missed with probability ~ 1/(100 s).

    A fixed item joins the hidden variable's hash class with probability
    1/m per repetition, so m ln(100 s) repetitions bound the miss rate.
    """
    m = hash_range(s) if s >= 3 else 1
    return math.ceil(m * math.log(100 * max(s, 2)))


def _fourier_position(items: np.ndarray, amps: np.ndarray, M: int, rng) -> int:
    # rejection sampling from |sum_x a_x w^{jx}|^2 with envelope (sum |a_x|)^2
    bound = np.abs(amps).sum() ** 2
    while True:
        j = int(rng.integers(M))
        val = abs(np.sum(amps * np.exp(2j * np.pi * j * items / M))) ** 2
        if rng.random() * bound <= val:
            return j


@dataclass
class JuggleResult:
    visited: set
    trace: list = field(default_factory=list)
    outer_reps: int = 0
    inner_reps: int = 0


def generalized_juggle(state: State, ell: int, s: int, inner_reps: int | None = None,
                       outer_reps: int | None = None, rng: np.random.Generator | None = None,
                       register: str = "item", method: str = "fast", enforce_bound: bool = True,
                       quadratic_inner: bool = False, record: bool = False) -> JuggleResult:
    """Learn the support of ``state`` from one hidden-variable history.

    Each outer repetition draws a pairwise-independent hash h, adjoins h(item),
    runs ``inner_reps`` rounds of DFT / inverse DFT on the item register,
    and uncomputes h. The visited set collects the hidden variable's
    position whenever the item register is in the computational basis
    (the start and after every inverse DFT).

    ``method="exact"`` simulates every layer on the full state vector and is
    only practical for small ``ell``. ``method="fast"`` samples the same
    history law directly: under the block-product theory the position after
    an inverse DFT is a Born sample from the current hash class, whatever
    the Fourier-basis position was. With ``record=True`` the fast path also
    samples the Fourier-basis positions into ``trace``.
    """
    rng = rng if rng is not None else np.random.default_rng()
    i = state.index(register)
    M = 1 << ell
    items = [lab[i] for lab in state.amplitudes]
    if any(not (isinstance(x, (int, np.integer)) and 0 <= x < M) for x in items):
        raise StateError(f"item register values must be integers in [0, 2^{ell})")
    if enforce_bound and len(items) > s:
        raise ValueError(f"support size {len(items)} exceeds bound s={s}")
    inner = inner_reps if inner_reps is not None else default_inner_reps(ell, quadratic_inner)
    outer = outer_reps if outer_reps is not None else default_outer_reps(s)
    hashing = s >= 3
    if method == "exact":
        res = _juggle_exact(state, register, ell, s, inner, outer, hashing, rng)
    elif method == "fast":
        res = _juggle_fast(state, register, ell, s, inner, outer, hashing, rng, record)
    else:
        raise ValueError(f"unknown method {method!r}")
    res.inner_reps, res.outer_reps = inner, outer
    return res


def _juggle_fast(state, register, ell, s, inner, outer, hashing, rng, record) -> JuggleResult:
    i = state.index(register)
    M = 1 << ell
    labels = list(state.amplitudes)
    amps = np.array(list(state.amplitudes.values()))
    items = np.array([lab[i] for lab in labels], dtype=np.int64)
    rest_keys = {}
    rest = np.array([rest_keys.setdefault(lab[:i] + lab[i + 1:], len(rest_keys)) for lab in labels])
    weights = np.abs(amps) ** 2
    pos = int(rng.choice(len(labels), p=weights / weights.sum()))
    seen = {pos}
    trace = [labels[pos]] if record else []
    for _ in range(outer):
        if hashing:
            hv = draw_hash(ell, s, rng).apply(items, ell)
            cls = np.flatnonzero((hv == hv[pos]) & (rest == rest[pos]))
        else:
            cls = np.flatnonzero(rest == rest[pos])
        if len(cls) == 1 and not record:
            continue
        w = weights[cls] / weights[cls].sum()
        if record:
            for _ in range(inner):
                j = _fourier_position(items[cls], amps[cls], M, rng)
                trace.append(labels[pos][:i] + (j,) + labels[pos][i + 1:])
                pos = int(cls[rng.choice(len(cls), p=w)])
                trace.append(labels[pos])
                seen.add(pos)
        else:
            landed = cls[rng.choice(len(cls), size=inner, p=w)]
            seen.update(int(x) for x in landed)
            pos = int(landed[-1])
    return JuggleResult({labels[k] for k in seen}, trace)


def _juggle_exact(state, register, ell, s, inner, outer, hashing, rng) -> JuggleResult:
    M = 1 << ell
    i = state.index(register)
    pos = born_sample(state, rng)
    visited = {pos}
    trace = [pos]
    layers = [(register, DFT(M)), (register, DFT(M, inverse=True))] * inner
    for _ in range(outer):
        h = draw_hash(ell, s, rng) if hashing else None
        g = (lambda lab: h(lab[i])) if h else (lambda lab: 0)
        hashed = adjoin_computed(state, g, "_hash")
        hist, final = history_sample(hashed, layers, rng, start=pos + (g(pos),))
        if not final.allclose(hashed):
            raise AssertionError("DFT / inverse DFT rounds did not restore the state")
        restored = unadjoin(hashed, "_hash", g)
        if not restored.allclose(state):
            raise AssertionError("uncomputing the hash did not restore the state")
        for t, p in enumerate(hist.positions[1:], 1):
            trace.append(p[:-1])
            if t % 2 == 0:
                visited.add(p[:-1])
        pos = hist.positions[-1][:-1]
    return JuggleResult(visited, trace)
