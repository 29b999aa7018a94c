"""One hidden-variable history instead of non-collapsing samples.

The DQMA round collects the cube's (z, b) pairs by juggling; advice
retrieval reads one entry of a table from its low-degree extension by
collecting a random line through the query point.

Run: python3 demos/05_dqma_and_advice.py
"""
import numpy as np

from pdqma import pcp
from pdqma.encode import ProofTable
from pdqma.field import FieldSpec
from pdqma.protocol import (Honest, MultiValued, ProtocolParams, RandomFunction, advice_retrieval_detail,
                            run_trials)

path = pcp.shipped("path8")
spec = FieldSpec.for_problem(path.n, path.sigma_size)
params = ProtocolParams(spec, mode="DQMA")
print(f"path8 with q={spec.q}: plane hits alone cost q^(2-n) = {spec.q ** (2 - spec.n):.2f}")
for kind in (Honest(), MultiValued(1.0), RandomFunction(0)):
    s = run_trials(path, kind, params, 40, seed=3)
    print(f"  {type(kind).__name__:15s} accept {s.acceptance:.3f}  {s.histogram}")

spec = FieldSpec(7, 4, 3)
rng = np.random.default_rng(8)
table = ProofTable.random(4, 3, rng)
x = (1, 0, 1, 1)
print(f"\nadvice table entry at {x}: {table[x]}")
for mode in ("NonCollapsing", "HiddenVariable"):
    res = advice_retrieval_detail(table, x, mode, spec, np.random.default_rng(5))
    print(f"  {mode:15s} -> {res.value} via direction {res.direction}")
