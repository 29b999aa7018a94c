"""Two-query PCPs as constraint graphs.

A verifier picks a uniformly random edge (u, v), queries the proof at both
endpoints and accepts iff the pair of answers is allowed on that edge.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .encode import ProofTable, bits, bits_to_int

BRUTE_FORCE_BITS = 24


class InstanceFormatError(ValueError):
    pass


class InstanceTooLarge(ValueError):
    pass


Vertex = tuple[int, ...]


@dataclass(frozen=True)
class Edge:
    u: Vertex
    v: Vertex
    allowed: frozenset[tuple[int, int]]


@dataclass(frozen=True)
class ConstraintGraphInstance:
    n: int
    sigma_size: int
    edges: tuple[Edge, ...]

    def __post_init__(self):
        for e in self.edges:
            if e.u == e.v:
                raise InstanceFormatError(f"self-loop at {e.u}")
            if len(e.u) != self.n or len(e.v) != self.n:
                raise InstanceFormatError(f"edge endpoints must be {self.n}-bit strings")
            if any(not (0 <= a < self.sigma_size and 0 <= b < self.sigma_size) for a, b in e.allowed):
                raise InstanceFormatError("allowed pair outside the alphabet")

    @property
    def vertices(self) -> list[Vertex]:
        return sorted({x for e in self.edges for x in (e.u, e.v)})

    def padded(self, n: int) -> "ConstraintGraphInstance":
        """Same graph with vertex bitstrings zero-extended on the left to length n."""
        if n < self.n:
            raise ValueError(f"cannot pad an n={self.n} instance down to {n}")
        pad = (0,) * (n - self.n)
        return ConstraintGraphInstance(n, self.sigma_size, tuple(
            Edge(pad + e.u, pad + e.v, e.allowed) for e in self.edges))

    def proof_table(self, assignment: Mapping[Vertex, int]) -> ProofTable:
        """Total proof table; points that are not vertices carry symbol 0."""
        return ProofTable.from_mapping(self.n, assignment, self.sigma_size)

    def acceptance(self, assignment: Mapping[Vertex, int]) -> Fraction:
        """Exact fraction of edges the assignment satisfies."""
        good = sum((assignment.get(e.u, 0), assignment.get(e.v, 0)) in e.allowed for e in self.edges)
        return Fraction(good, len(self.edges))

    def dumps(self) -> str:
        lines = [f"{self.n} {self.sigma_size}"]
        for e in self.edges:
            pairs = " ".join(f"{a},{b}" for a, b in sorted(e.allowed))
            lines.append(f"edge {''.join(map(str, e.u))} {''.join(map(str, e.v))} : {pairs}".rstrip())
        return "\n".join(lines) + "\n"


def _bitstring(tok: str, n: int, lineno: int) -> Vertex:
    if len(tok) != n or set(tok) - {"0", "1"}:
        raise InstanceFormatError(f"line {lineno}: {tok!r} is not an {n}-bit string")
    return tuple(int(c) for c in tok)


def loads(text: str) -> ConstraintGraphInstance:
    header = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header is None:
            try:
                n, sigma = map(int, line.split())
            except ValueError:
                raise InstanceFormatError(f"line {lineno}: header must be 'n sigma_size'") from None
            header = (n, sigma)
            continue
        head, sep, tail = line.partition(":")
        toks = head.split()
        if not sep or len(toks) != 3 or toks[0] != "edge":
            raise InstanceFormatError(f"line {lineno}: expected 'edge u v : a,b ...'")
        u, v = (_bitstring(t, header[0], lineno) for t in toks[1:])
        allowed = set()
        for pair in tail.split():
            try:
                a, b = map(int, pair.split(","))
            except ValueError:
                raise InstanceFormatError(f"line {lineno}: bad pair {pair!r}") from None
            allowed.add((a, b))
        edges.append(Edge(u, v, frozenset(allowed)))
    if header is None:
        raise InstanceFormatError("empty instance file")
    return ConstraintGraphInstance(header[0], header[1], tuple(edges))


def load(path) -> ConstraintGraphInstance:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InstanceFormatError(f"cannot read {path}: {exc}") from None
    return loads(text)


# name -> stored soundness (max acceptance over all proofs)
SHIPPED: dict[str, Fraction] = {
    "tri16": Fraction(1),
    "k4bin": Fraction(2, 3),
    "path8": Fraction(1),
}


def shipped(name: str) -> ConstraintGraphInstance:
    if name not in SHIPPED:
        raise KeyError(f"no shipped instance {name!r}")
    return loads(resources.files("pdqma").joinpath("instances", f"{name}.txt").read_text())


def resolve(name_or_path: str) -> ConstraintGraphInstance:
    """Shipped instance by name, otherwise an instance file path."""
    if name_or_path in SHIPPED:
        return shipped(name_or_path)
    return load(name_or_path)


# -- verifier -------------------------------------------------------------------

@dataclass(frozen=True)
class QueryPair:
    w: Vertex
    w2: Vertex
    edge_id: int


def sample_queries(instance: ConstraintGraphInstance, rng: np.random.Generator) -> QueryPair:
    if not instance.edges:
        raise ValueError("instance has no edges")
    k = int(rng.integers(len(instance.edges)))
    e = instance.edges[k]
    return QueryPair(e.u, e.v, k)


def decide(instance: ConstraintGraphInstance, edge_id: int, a: int, a2: int) -> bool:
    if not 0 <= edge_id < len(instance.edges):
        raise IndexError(f"edge id {edge_id} out of range")
    return (a, a2) in instance.edges[edge_id].allowed


# -- oracles --------------------------------------------------------------------

def brute_force_soundness(instance: ConstraintGraphInstance, chunk: int = 1 << 18) -> Fraction:
    """Max over all proofs of the fraction of accepted edges, by exhaustive enumeration."""
    verts = instance.vertices
    sigma = instance.sigma_size
    if not instance.edges:
        raise ValueError("instance has no edges")
    if len(verts) * math.log2(sigma) > BRUTE_FORCE_BITS:
        raise InstanceTooLarge(f"{len(verts)} vertices over |Sigma|={sigma} is too many to enumerate")
    pos = {v: i for i, v in enumerate(verts)}
    tables = []
    for e in instance.edges:
        t = np.zeros((sigma, sigma), dtype=np.int64)
        for a, b in e.allowed:
            t[a, b] = 1
        tables.append((pos[e.u], pos[e.v], t))
    total = sigma ** len(verts)
    place = sigma ** np.arange(len(verts) - 1, -1, -1, dtype=np.int64)
    best = 0
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        digits = (idx[:, None] // place[None, :]) % sigma
        score = np.zeros(len(idx), dtype=np.int64)
        for i, j, t in tables:
            score += t[digits[:, i], digits[:, j]]
        best = max(best, int(score.max()))
    return Fraction(best, len(instance.edges))


def best_assignment(instance: ConstraintGraphInstance) -> dict[Vertex, int]:
    """An assignment attaining :func:`brute_force_soundness` (small instances only)."""
    verts = instance.vertices
    sigma = instance.sigma_size
    if len(verts) * math.log2(sigma) > BRUTE_FORCE_BITS:
        raise InstanceTooLarge("too many vertices to enumerate")
    target = brute_force_soundness(instance)
    for k in range(sigma ** len(verts)):
        assign = {}
        for v in reversed(verts):
            k, assign[v] = divmod(k, sigma)
        if instance.acceptance(assign) == target:
            return assign
    raise AssertionError("unreachable")


def find_assignment(instance: ConstraintGraphInstance) -> dict[Vertex, int] | None:
    """A satisfying assignment by backtracking, or None if the instance is unsatisfiable."""
    verts = instance.vertices
    nbrs: dict[Vertex, list[tuple[Vertex, frozenset, bool]]] = {v: [] for v in verts}
    for e in instance.edges:
        nbrs[e.u].append((e.v, e.allowed, True))
        nbrs[e.v].append((e.u, e.allowed, False))
    order = sorted(verts, key=lambda v: -len(nbrs[v]))
    assign: dict[Vertex, int] = {}

    def ok(v, a):
        for w, allowed, v_first in nbrs[v]:
            if w in assign:
                pair = (a, assign[w]) if v_first else (assign[w], a)
                if pair not in allowed:
                    return False
        return True

    def extend(i):
        if i == len(order):
            return True
        v = order[i]
        for a in range(instance.sigma_size):
            if ok(v, a):
                assign[v] = a
                if extend(i + 1):
                    return True
                del assign[v]
        return False

    return dict(assign) if extend(0) else None


def inequality_edges(pairs: Sequence[tuple[int, int]], n: int, sigma: int) -> tuple[Edge, ...]:
    """Edges between integer-labelled vertices, each allowing exactly the unequal pairs."""
    ne = frozenset((a, b) for a in range(sigma) for b in range(sigma) if a != b)
    return tuple(Edge(bits(u, n), bits(v, n), ne) for u, v in pairs)


def vertex_int(v: Vertex) -> int:
    return bits_to_int(v)
