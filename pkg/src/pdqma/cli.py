"""Command-line harness: ``pdqma {pdqma,dqma,advice,axioms,ldt,pcp-oracle} ...``.

Output is JSON lines, one record per trial followed by a summary record.
Exit codes: 0 success, 2 usage error, 3 invalid instance file.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from typing import Sequence

import numpy as np

from . import pcp
from .encode import ExtensionOracle, ProofTable, TableFormatError, grid_function, line_test
from .field import FieldSpec, choose_field_size
from .hv import axiom_residuals, random_axiom_case
from .protocol import (Honest, Mode, MultiValued, Optimal, PlantedCorruption, ProtocolParams,
                       RandomFunction, RetrievalFailure, SkewedAmplitude, Stats, advice_retrieval,
                       iter_trials, trial_rng)

EXIT_OK, EXIT_USAGE, EXIT_INSTANCE = 0, 2, 3

PROVERS = ("honest", "optimal", "random", "multivalued", "skewed", "corrupt")


class UsageError(Exception):
    pass


def _prover_kind(name: str, param: float | None, seed: int):
    if name == "honest":
        return Honest()
    if name == "optimal":
        return Optimal()
    if name == "random":
        return RandomFunction(seed)
    if name == "multivalued":
        return MultiValued(1.0 if param is None else param, seed)
    if name == "skewed":
        return SkewedAmplitude(2.0 if param is None else param, seed)
    if name == "corrupt":
        return PlantedCorruption(0.1 if param is None else param, seed)
    raise UsageError(f"unknown prover {name!r}")


def _emit(out, record: dict) -> None:
    out.write(json.dumps(record, separators=(",", ":")) + "\n")


def _summary(stats: Stats, extra: dict) -> dict:
    lo, hi = stats.wilson
    return {"summary": True, "trials": stats.trials, "acceptance": stats.acceptance,
            "wilson_lo": lo, "wilson_hi": hi, "reason_histogram": stats.histogram, **extra}


def _run_protocol(args, out, mode: Mode) -> int:
    try:
        instance = pcp.resolve(args.instance)
    except (pcp.InstanceFormatError, TableFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INSTANCE
    n = args.n if args.n is not None else max(instance.n, 3)
    if n < instance.n:
        raise UsageError(f"--n {n} is smaller than the instance's n={instance.n}")
    instance = instance.padded(n)
    q = args.q if args.q is not None else choose_field_size(n, instance.sigma_size)
    try:
        spec = FieldSpec(q, n, instance.sigma_size)
        params = ProtocolParams(spec, args.samples, args.tvd, args.inner_reps, args.outer_reps, mode)
        kind = _prover_kind(args.prover, args.param, args.prover_seed)
        trials = iter_trials(instance, kind, params, args.trials, args.seed)
        transcripts = []
        rows = []
        for i, tr in enumerate(trials):
            transcripts.append(tr)
            rec = {"trial": i, "verdict": "accept" if tr.verdict else "reject", "reason": str(tr.reason),
                   "seed": list(tr.seed), "edge": tr.edge_id}
            if tr.recovered is not None:
                rec["recovered"] = list(tr.recovered)
            if args.timing:
                rec["elapsed_ms"] = round(tr.elapsed_ms, 3)
            rows.append(rec)
            if args.format == "jsonl":
                _emit(out, rec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.format == "csv":
        writer = csv.writer(out, lineterminator="\n")
        cols = ["trial", "verdict", "reason", "seed", "edge", "recovered"] + (["elapsed_ms"] if args.timing else [])
        writer.writerow(cols)
        for rec in rows:
            writer.writerow([";".join(map(str, rec[c])) if isinstance(rec.get(c), list) else rec.get(c, "")
                             for c in cols])
        return EXIT_OK
    stats = Stats.from_transcripts(transcripts)
    _emit(out, _summary(stats, {"instance": args.instance, "prover": args.prover, "seed": args.seed,
                                **params.as_dict()}))
    return EXIT_OK


def _advice(args, out) -> int:
    spec = FieldSpec(args.q if args.q is not None else choose_field_size(args.n, args.sigma), args.n, args.sigma)
    fixed = None
    if args.table is not None:
        try:
            fixed = ProofTable.load(args.table, args.sigma)
        except (TableFormatError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INSTANCE
        if fixed.n != spec.n:
            raise UsageError(f"table has n={fixed.n}, --n is {spec.n}")
    correct = failures = 0
    for i in range(args.trials):
        rng = trial_rng(args.seed, i)
        table = fixed if fixed is not None else ProofTable.random(spec.n, spec.sigma_size, rng)
        if args.x is not None:
            x = tuple(int(c) for c in args.x)
            if len(x) != spec.n or set(x) - {0, 1}:
                raise UsageError(f"--x must be an {spec.n}-bit string")
        else:
            x = tuple(int(v) for v in rng.integers(0, 2, size=spec.n))
        rec = {"trial": i, "x": "".join(map(str, x)), "expected": table[x], "seed": [args.seed, i]}
        t0 = time.perf_counter()
        try:
            value = advice_retrieval(table, x, args.mode, spec, rng, budget=args.budget)
            rec["value"] = value
            rec["correct"] = value == table[x]
            correct += rec["correct"]
        except RetrievalFailure as exc:
            rec["failure"] = str(exc)
            failures += 1
        if args.timing:
            rec["elapsed_ms"] = round((time.perf_counter() - t0) * 1e3, 3)
        _emit(out, rec)
    _emit(out, {"summary": True, "trials": args.trials, "mode": args.mode, "correct_rate": correct / args.trials,
                "retrieval_failures": failures, "q": spec.q, "n": spec.n, "sigma_size": spec.sigma_size})
    return EXIT_OK


def _axioms(args, out) -> int:
    rng = np.random.default_rng(args.seed)
    worst = {"marginalization": 0.0, "row_sum_error": 0.0}
    all_indifferent = True
    for i in range(args.instances):
        psi, u = random_axiom_case(rng, args.max_dim)
        r = axiom_residuals(psi, u)
        all_indifferent &= r["indifference"]
        for k in worst:
            worst[k] = max(worst[k], r[k])
        _emit(out, {"trial": i, "dim": len(psi), **r})
    ok = all_indifferent and worst["marginalization"] <= 1e-9 and worst["row_sum_error"] <= 1e-9
    _emit(out, {"summary": True, "instances": args.instances, "max_marginalization": worst["marginalization"],
                "max_row_sum_error": worst["row_sum_error"], "indifference": all_indifferent, "pass": ok})
    return EXIT_OK


def _ldt(args, out) -> int:
    sigma = args.sigma
    q = args.q if args.q is not None else choose_field_size(args.n, sigma)
    spec = FieldSpec(q, args.n, sigma)
    d = args.d if args.d is not None else args.n
    rng = np.random.default_rng(args.seed)
    if args.table == "honest":
        grid = ExtensionOracle(spec, ProofTable.random(spec.n, sigma, rng)).grid
    else:
        grid = rng.integers(0, q, size=q ** spec.n)
    try:
        delta = line_test(grid_function(grid, q), spec, d, args.lines, rng, mode=args.mode)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit(out, {"summary": True, "table": args.table, "mode": args.mode, "q": q, "n": spec.n, "d": d,
                "lines": args.lines, "delta_hat": delta})
    return EXIT_OK


def _pcp_oracle(args, out) -> int:
    try:
        instance = pcp.resolve(args.instance)
    except pcp.InstanceFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INSTANCE
    rec = {"instance": args.instance, "vertices": len(instance.vertices), "edges": len(instance.edges)}
    try:
        value = pcp.brute_force_soundness(instance)
        rec["method"] = "exhaustive"
    except pcp.InstanceTooLarge:
        if pcp.find_assignment(instance) is None:
            print("error: instance too large to enumerate and not satisfiable", file=sys.stderr)
            return EXIT_USAGE
        value = 1
        rec["method"] = "satisfying-assignment"
    rec["soundness"] = round(float(value), 4)
    rec["exact"] = str(value)
    _emit(out, rec)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdqma", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_ in (("pdqma", "non-collapsing verifier trials"), ("dqma", "hidden-variable verifier trials")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--instance", required=True, help="shipped name (tri16, k4bin, path8) or file path")
        p.add_argument("--prover", choices=PROVERS, default="honest")
        p.add_argument("--param", type=float, help="epsilon / gamma / delta for adversarial provers")
        p.add_argument("--prover-seed", type=int, default=0)
        p.add_argument("--n", type=int, help="protocol n (instance is zero-padded)")
        p.add_argument("--q", type=int, help="field size (default: smallest valid prime)")
        p.add_argument("--trials", type=int, default=100)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--samples", type=int, help="non-collapsing sample count k")
        p.add_argument("--tvd", type=float, help="TVD threshold tau (default 1/n)")
        p.add_argument("--inner-reps", type=int, default=8)
        p.add_argument("--outer-reps", type=int)
        p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
        p.add_argument("--timing", action="store_true", help="add elapsed_ms (breaks byte-identical output)")

    p = sub.add_parser("advice", help="retrieve pi(x) from the extension state")
    p.add_argument("--mode", choices=("NonCollapsing", "HiddenVariable"), default="NonCollapsing")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--q", type=int)
    p.add_argument("--sigma", type=int, default=3)
    p.add_argument("--table", help="proof-table file (default: a fresh random table per trial)")
    p.add_argument("--x", help="query bitstring (default: random per trial)")
    p.add_argument("--budget", type=int, help="non-collapsing sample budget")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timing", action="store_true")

    p = sub.add_parser("axioms", help="check block-product theory axioms on random (psi, U)")
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--max-dim", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("ldt", help="lines-point low-degree test")
    p.add_argument("--table", choices=("honest", "random"), default="honest")
    p.add_argument("--mode", choices=("full", "point"), default="full")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--q", type=int)
    p.add_argument("--d", type=int, help="degree bound (default n)")
    p.add_argument("--sigma", type=int, default=3)
    p.add_argument("--lines", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("pcp-oracle", help="brute-force soundness of an instance")
    p.add_argument("--instance", required=True)
    return parser


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out if out is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {
        "pdqma": lambda: _run_protocol(args, out, Mode.PDQMA),
        "dqma": lambda: _run_protocol(args, out, Mode.DQMA),
        "advice": lambda: _advice(args, out),
        "axioms": lambda: _axioms(args, out),
        "ldt": lambda: _ldt(args, out),
        "pcp-oracle": lambda: _pcp_oracle(args, out),
    }
    try:
        return handlers[args.command]()
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
