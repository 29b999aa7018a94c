"""Verifier rounds with non-collapsing samples (PDQMA) and hidden-variable histories (DQMA).

Merlin's witness is a sparse state on registers ``("z", "b")`` with z in
F_q^n and b in F_q. One round simulates a two-query PCP verifier: it picks
queries w, w', a random w'', tags every z with the cube it spans together
with the plane (w, w', w''), collapses the tag, gathers the (z, b) pairs on
the cube minus the plane, interpolates a trivariate polynomial of degree at
most n and reads off the two answers.
"""
from __future__ import annotations

import enum
import math
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

from . import pcp
from .affine import (ON_PLANE, CanonicalMap, CubeFrame, CubeIndex, affinely_independent,
                     all_points, enumerate_cube_minus_plane)
from .encode import ExtensionOracle, ProofTable, multilinear_extend, unembed
from .field import FieldSpec, InterpolationError, eval_poly, fit_total_degree, fit_univariate
from .hv import default_outer_reps, generalized_juggle
from .qsim import State, adjoin_computed, measure_collapse, relabel, sample_noncollapsing


class Reason(str, enum.Enum):
    PLANE_HIT = "PlaneHit"
    SUPPORT_MISMATCH = "SupportMismatch"
    TVD_FAIL = "TvdFail"
    MULTI_VALUE = "MultiValue"
    INTERP_FAIL = "InterpFail"
    PCP_REJECT = "PcpReject"
    ACCEPT = "Accept"

    def __str__(self):
        return self.value


class Mode(str, enum.Enum):
    PDQMA = "PDQMA"
    DQMA = "DQMA"


# -- provers --------------------------------------------------------------------

@dataclass(frozen=True)
class Honest:
    """Encode a satisfying proof (found by search unless given)."""
    assignment: Mapping | None = None


@dataclass(frozen=True)
class Optimal:
    """Honest encoding of a proof with the highest acceptance, satisfiable or not."""


@dataclass(frozen=True)
class RandomFunction:
    seed: int = 0


@dataclass(frozen=True)
class MultiValued:
    fraction: float = 1.0
    seed: int = 0


@dataclass(frozen=True)
class SkewedAmplitude:
    factor: float = 2.0
    seed: int = 0


@dataclass(frozen=True)
class PlantedCorruption:
    fraction: float = 0.1
    seed: int = 0


ProverKind = Honest | Optimal | RandomFunction | MultiValued | SkewedAmplitude | PlantedCorruption


@dataclass
class Prover:
    kind: ProverKind
    spec: FieldSpec
    table: ProofTable
    witness: State

    @property
    def oracle(self) -> ExtensionOracle:
        return ExtensionOracle(self.spec, self.table)


def _seeded_subset(size: int, count: int, seed: int) -> np.ndarray:
    mask = np.zeros(size, dtype=bool)
    mask[np.random.default_rng(seed).permutation(size)[:count]] = True
    return mask


def make_prover(kind: ProverKind, instance: pcp.ConstraintGraphInstance, spec: FieldSpec) -> Prover:
    """Build Merlin's witness state for ``instance``.

    Adversarial kinds start from the honest encoding of the best available
    proof and then deviate.
    """
    if instance.n != spec.n:
        raise ValueError(f"instance has n={instance.n}, field spec has n={spec.n}")
    if isinstance(kind, Honest):
        assignment = kind.assignment if kind.assignment is not None else pcp.find_assignment(instance)
        if assignment is None:
            raise ValueError("honest prover requested for an unsatisfiable instance")
    else:
        assignment = pcp.find_assignment(instance)
        if assignment is None:
            assignment = pcp.best_assignment(instance)
    table = instance.proof_table(assignment)
    oracle = ExtensionOracle(spec, table)
    q, n = spec.q, spec.n
    size = q ** n
    zs = [tuple(int(v) for v in row) for row in all_points(n, q)]
    values = oracle.grid.copy()
    amp = np.full(size, 1 / math.sqrt(size))
    extra: dict = {}
    if isinstance(kind, RandomFunction):
        values = np.random.default_rng(kind.seed).integers(0, q, size=size)
    elif isinstance(kind, PlantedCorruption):
        hit = _seeded_subset(size, round(kind.fraction * size), kind.seed)
        values = np.where(hit, (values + 1) % q, values)
    elif isinstance(kind, SkewedAmplitude):
        heavy = _seeded_subset(size, size // 2, kind.seed)
        amp = np.where(heavy, kind.factor, 1.0)
        amp = amp / np.linalg.norm(amp)
    elif isinstance(kind, MultiValued):
        doubled = _seeded_subset(size, round(kind.fraction * size), kind.seed)
        for k in np.flatnonzero(doubled):
            extra[k] = (int(values[k]) + 1) % q
    amps = {}
    for k, z in enumerate(zs):
        if k in extra:
            a = amp[k] / math.sqrt(2)
            amps[(z, int(values[k]))] = a
            amps[(z, extra[k])] = a
        else:
            amps[(z, int(values[k]))] = amp[k]
    witness = State.normalized(("z", "b"), amps)
    return Prover(kind, spec, table, witness)


# -- parameters and transcripts -------------------------------------------------

def default_samples(n: int, q: int) -> int:
    return max(16 * n ** 4, math.ceil(8 * q ** 3 * math.log(q)))


def default_tvd(n: int) -> float:
    return 1.0 / n


@dataclass(frozen=True)
class ProtocolParams:
    spec: FieldSpec
    samples: int | None = None
    tvd_threshold: float | None = None
    inner_reps: int = 8
    outer_reps: int | None = None
    mode: Mode = Mode.PDQMA

    def __post_init__(self):
        n, q = self.spec.n, self.spec.q
        if n < 3:
            raise ValueError("the cube construction needs n >= 3")
        if self.samples is None:
            object.__setattr__(self, "samples", default_samples(n, q))
        if self.tvd_threshold is None:
            object.__setattr__(self, "tvd_threshold", default_tvd(n))
        if self.outer_reps is None:
            object.__setattr__(self, "outer_reps", default_outer_reps(q ** 3 - q ** 2))
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.samples < q ** 3:
            raise ValueError(f"samples={self.samples} below q^3={q ** 3}")
        if not 0 < self.tvd_threshold < 1:
            raise ValueError("tvd_threshold must lie in (0, 1)")
        if self.inner_reps < 1 or self.outer_reps < 1:
            raise ValueError("juggle repetitions must be positive")

    def as_dict(self) -> dict:
        return {"q": self.spec.q, "n": self.spec.n, "sigma_size": self.spec.sigma_size,
                "samples": self.samples, "tvd_threshold": self.tvd_threshold,
                "inner_reps": self.inner_reps, "outer_reps": self.outer_reps, "mode": self.mode.value}


@dataclass
class Transcript:
    verdict: bool
    reason: Reason
    recovered: tuple[int, int] | None = None
    seed: tuple | None = None
    elapsed_ms: float = 0.0
    edge_id: int | None = None
    tvd: float | None = None

    def __post_init__(self):
        if self.verdict != (self.reason is Reason.ACCEPT):
            raise ValueError("verdict and reason disagree")


class _Setup:
    """Per-(n, q) lookup tables shared by all trials."""

    _cache: dict = {}

    def __new__(cls, n: int, q: int):
        key = (n, q)
        if key not in cls._cache:
            obj = super().__new__(cls)
            pts = all_points(n, q)
            obj.points = pts
            obj.z_index = {tuple(int(v) for v in row): k for k, row in enumerate(pts)}
            cls._cache[key] = obj
        return cls._cache[key]


def _choose_plane(query: pcp.QueryPair, q: int, rng) -> tuple:
    w, w2 = query.w, query.w2
    assert w != w2, "PCP queries must be distinct"
    while True:
        w3 = tuple(int(v) for v in rng.integers(0, q, size=len(w)))
        if affinely_independent([w, w2, w3], q):
            return w, w2, w3


def _collapse_on_cube(prover: Prover, query: pcp.QueryPair, rng):
    """Steps 1-3: pick w'', tag with the canonical map, collapse the tag."""
    spec = prover.spec
    q, n = spec.q, spec.n
    setup = _Setup(n, q)
    w, w2, w3 = _choose_plane(query, q, rng)
    tags = CanonicalMap(w, w2, w3, q).table()
    zi = setup.z_index
    tagged = adjoin_computed(prover.witness, lambda lab: tags[zi[lab[0]]], "tag")
    y, post = measure_collapse(tagged, "tag", rng)
    if y is ON_PLANE:
        return None, None
    return CubeFrame(w, y, w2, w3, q), post


def _finish(frame: CubeFrame, pairs: set, instance, query, spec: FieldSpec, t0, seed, tvd=None) -> Transcript:
    """Steps 6-8 on the collected (z, b) pairs."""
    def done(reason, recovered=None):
        return Transcript(reason is Reason.ACCEPT, reason, recovered, seed,
                          (time.perf_counter() - t0) * 1e3, query.edge_id, tvd)

    by_z: dict = {}
    for z, b in pairs:
        if by_z.setdefault(z, b) != b:
            return done(Reason.MULTI_VALUE)
    zs = list(by_z)
    ts = CubeIndex(frame).coords(np.array(zs, dtype=np.int64))
    try:
        u = fit_total_degree(zip(ts.tolist(), (by_z[z] for z in zs)), 3, spec.n, spec.q)
    except InterpolationError:
        return done(Reason.INTERP_FAIL)
    recovered = (eval_poly(u, (0, 0, 0)), eval_poly(u, (0, 1, 0)))
    a, a2 = (unembed(v, spec) for v in recovered)
    if a is None or a2 is None or not pcp.decide(instance, query.edge_id, a, a2):
        return done(Reason.PCP_REJECT, recovered)
    return done(Reason.ACCEPT, recovered)


def _check_honest(prover: Prover, query: pcp.QueryPair, tr: Transcript) -> Transcript:
    """Honest witnesses must decode to the extension's values at the queries."""
    if isinstance(prover.kind, (Honest, Optimal)) and tr.recovered is not None:
        oracle = prover.oracle
        expected = (multilinear_extend(oracle, query.w), multilinear_extend(oracle, query.w2))
        assert tr.recovered == expected, f"honest trial decoded {tr.recovered}, expected {expected}"
    return tr


def _check_params(instance, prover, params, mode):
    if params.mode is not mode:
        raise ValueError(f"params are for {params.mode.value}, round is {mode.value}")
    if prover.spec != params.spec:
        raise ValueError("prover and params use different field specs")
    if instance.n != params.spec.n:
        raise ValueError("instance n differs from the field spec's n")
    if instance.sigma_size > params.spec.sigma_size:
        raise ValueError("instance alphabet does not embed in the field")


def pdqma_round(instance: pcp.ConstraintGraphInstance, prover: Prover, params: ProtocolParams,
                rng: np.random.Generator, seed=None) -> Transcript:
    """One verification with a collapsing tag measurement and non-collapsing samples."""
    _check_params(instance, prover, params, Mode.PDQMA)
    t0 = time.perf_counter()
    spec = params.spec
    query = pcp.sample_queries(instance, rng)
    frame, post = _collapse_on_cube(prover, query, rng)
    if frame is None:
        return Transcript(False, Reason.PLANE_HIT, None, seed, (time.perf_counter() - t0) * 1e3,
                          query.edge_id)
    cube = enumerate_cube_minus_plane(frame)
    samples = sample_noncollapsing(post, params.samples, rng)
    counts = Counter(lab[0] for lab in samples)
    cube_set = set(cube)
    assert counts.keys() <= cube_set, "sampled z outside the cube minus the plane"
    expected = 1 / len(cube)
    tvd = 0.5 * sum(abs(counts.get(z, 0) / params.samples - expected) for z in cube)

    def reject(reason):
        return Transcript(False, reason, None, seed, (time.perf_counter() - t0) * 1e3, query.edge_id, tvd)

    if counts.keys() != cube_set:
        return reject(Reason.SUPPORT_MISMATCH)
    if tvd > params.tvd_threshold:
        return reject(Reason.TVD_FAIL)
    pairs = {(lab[0], lab[1]) for lab in samples}
    return _check_honest(prover, query, _finish(frame, pairs, instance, query, spec, t0, seed, tvd))


def item_bits(spec: FieldSpec) -> int:
    """Bits needed to encode a (z, b) pair as one integer."""
    return math.ceil(math.log2(spec.q ** (spec.n + 1)))


def _to_items(state: State, spec: FieldSpec) -> State:
    zi = _Setup(spec.n, spec.q).z_index
    base = spec.q ** spec.n
    return relabel(state, lambda lab: (zi[lab[0]] + base * lab[1],), ("item",))


def _from_item(x: int, spec: FieldSpec) -> tuple:
    base = spec.q ** spec.n
    z = tuple(int(v) for v in _Setup(spec.n, spec.q).points[x % base])
    return z, x // base


def dqma_round(instance: pcp.ConstraintGraphInstance, prover: Prover, params: ProtocolParams,
               rng: np.random.Generator, seed=None) -> Transcript:
    """One verification that learns the collapsed support from a juggled hidden-variable history."""
    _check_params(instance, prover, params, Mode.DQMA)
    t0 = time.perf_counter()
    spec = params.spec
    q = spec.q
    query = pcp.sample_queries(instance, rng)
    frame, post = _collapse_on_cube(prover, query, rng)
    if frame is None:
        return Transcript(False, Reason.PLANE_HIT, None, seed, (time.perf_counter() - t0) * 1e3,
                          query.edge_id)
    cube_set = set(enumerate_cube_minus_plane(frame))
    items = _to_items(relabel(post, lambda lab: lab[:2], ("z", "b")), spec)
    result = generalized_juggle(items, item_bits(spec), q ** 3 - q ** 2, params.inner_reps,
                                params.outer_reps, rng, enforce_bound=False)
    pairs = {_from_item(x, spec) for (x,) in result.visited}
    zs = {z for z, _ in pairs}
    assert zs <= cube_set, "visited z outside the cube minus the plane"
    if zs != cube_set:
        return Transcript(False, Reason.SUPPORT_MISMATCH, None, seed,
                          (time.perf_counter() - t0) * 1e3, query.edge_id)
    return _check_honest(prover, query, _finish(frame, pairs, instance, query, spec, t0, seed))


# -- advice retrieval -------------------------------------------------------------

class RetrievalFailure(RuntimeError):
    pass


class _AtQuery(enum.Enum):
    AT_QUERY = "at-query"


AT_QUERY = _AtQuery.AT_QUERY


@dataclass
class AdviceResult:
    value: int
    poly: object | None
    direction: tuple | None


def line_tags(x: Sequence[int], q: int, n: int) -> list:
    """Direction of the line through x and z, normalised to a leading 1; AT_QUERY for z = x."""
    pts = all_points(n, q)
    rel = (pts - np.asarray(x, dtype=np.int64)) % q
    first = np.argmax(rel != 0, axis=1)
    lead = rel[np.arange(len(rel)), first]
    inv = np.array([0] + [pow(a, q - 2, q) for a in range(1, q)], dtype=np.int64)
    dirs = (rel * inv[lead][:, None]) % q
    at_x = ~rel.any(axis=1)
    return [AT_QUERY if at_x[k] else tuple(int(v) for v in dirs[k]) for k in range(len(pts))]


def advice_retrieval_detail(table: ProofTable, x: Sequence[int], mode: str, spec: FieldSpec,
                            rng: np.random.Generator, budget: int | None = None,
                            inner_reps: int = 8, outer_reps: int | None = None) -> AdviceResult:
    """Read pi(x) from the honest extension state via a random line through x."""
    if mode not in ("NonCollapsing", "HiddenVariable"):
        raise ValueError(f"unknown mode {mode!r}")
    q, n = spec.q, spec.n
    if q < n + 2:
        raise ValueError("need q >= n + 2")
    x = tuple(int(v) for v in x)
    oracle = ExtensionOracle(spec, table)
    setup = _Setup(n, q)
    grid = oracle.grid
    pts = [tuple(int(v) for v in row) for row in setup.points]
    state = State(("z", "b"), {(z, int(grid[k])): 1 / math.sqrt(len(pts)) for k, z in enumerate(pts)})
    tags = line_tags(x, q, n)
    zi = setup.z_index
    tagged = adjoin_computed(state, lambda lab: tags[zi[lab[0]]], "tag")
    direction, post = measure_collapse(tagged, "tag", rng)
    post = relabel(post, lambda lab: lab[:2], ("z", "b"))
    if direction is AT_QUERY:
        (_, b), = sample_noncollapsing(post, 1, rng) if mode == "NonCollapsing" else [next(iter(post.amplitudes))]
        return AdviceResult(_decode(b, spec), None, None)
    if mode == "NonCollapsing":
        k = budget if budget is not None else math.ceil(8 * (q - 1) * math.log(q - 1))
        pairs = set(sample_noncollapsing(post, k, rng))
    else:
        result = generalized_juggle(_to_items(post, spec), item_bits(spec), q - 1, inner_reps,
                                    outer_reps, rng, enforce_bound=False)
        pairs = {_from_item(xi, spec) for (xi,) in result.visited}
    d = np.asarray(direction, dtype=np.int64)
    # t along the line: the coordinate where the direction has its leading 1
    lead = int(np.argmax(d != 0))
    t_of = {}
    for z, b in pairs:
        t = (z[lead] - x[lead]) % q
        t_of.setdefault(t, set()).add(b)
    if len(t_of) < q - 1:
        raise RetrievalFailure(f"collected {len(t_of)} of {q - 1} line points")
    if any(len(bs) > 1 for bs in t_of.values()):
        raise RetrievalFailure("line point carries more than one value")
    ts = sorted(t_of)
    poly = fit_univariate(ts, [next(iter(t_of[t])) for t in ts], n, q)
    return AdviceResult(_decode(eval_poly(poly, (0,)), spec), poly, tuple(direction))


def _decode(value: int, spec: FieldSpec) -> int:
    sym = unembed(value, spec)
    if sym is None:
        raise RetrievalFailure(f"value {value} encodes no symbol")
    return sym


def advice_retrieval(table: ProofTable, x: Sequence[int], mode: str, spec: FieldSpec,
                     rng: np.random.Generator, **kwargs) -> int:
    return advice_retrieval_detail(table, x, mode, spec, rng, **kwargs).value


# -- trials -----------------------------------------------------------------------

def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass
class Stats:
    trials: int
    accepted: int
    histogram: dict[str, int] = field(default_factory=dict)

    @property
    def acceptance(self) -> float:
        return self.accepted / self.trials if self.trials else 0.0

    @property
    def wilson(self) -> tuple[float, float]:
        return wilson_interval(self.accepted, self.trials)

    def rate(self, reason: Reason | str) -> float:
        return self.histogram.get(str(reason), 0) / self.trials

    def dominant(self) -> str:
        return max(self.histogram, key=self.histogram.get)

    @classmethod
    def from_transcripts(cls, transcripts: Sequence[Transcript]) -> "Stats":
        hist = Counter(str(t.reason) for t in transcripts)
        ordered = {str(r): hist[str(r)] for r in Reason if hist[str(r)]}
        return cls(len(transcripts), sum(t.verdict for t in transcripts), ordered)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream per trial, reproducible from (seed, trial) alone."""
    return np.random.default_rng([seed, trial])


def iter_trials(instance, prover_kind: ProverKind, params: ProtocolParams, trials: int,
                seed: int) -> Iterator[Transcript]:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    prover = make_prover(prover_kind, instance, params.spec)
    round_fn = pdqma_round if params.mode is Mode.PDQMA else dqma_round
    for i in range(trials):
        yield round_fn(instance, prover, params, trial_rng(seed, i), seed=(seed, i))


def run_trials(instance, prover_kind: ProverKind, params: ProtocolParams, trials: int,
               seed: int) -> Stats:
    return Stats.from_transcripts(list(iter_trials(instance, prover_kind, params, trials, seed)))
