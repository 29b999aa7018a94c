"""Block-product hidden variables and the juggle.

A hidden variable sits on one basis state. Under each unitary it jumps to
a Born-weighted position inside its current block. Juggling (Fourier
transform, inverse, repeated, with a random hash splitting the support into
small classes) makes one history wander over the whole support.

Run: python3 demos/04_hidden_variables.py
"""
import numpy as np

from pdqma.hv import (axiom_residuals, dense_stochastic_reference, generalized_juggle, hash_range,
                      random_axiom_case)
from pdqma.qsim import DFT, prepare_uniform

plus = np.array([1, 1]) / np.sqrt(2)
print("transition matrix for (|0>+|1>)/sqrt2 under the 2x2 DFT:")
print(dense_stochastic_reference(plus, DFT(2).matrix()).round(3))

rng = np.random.default_rng(0)
worst = max(axiom_residuals(*random_axiom_case(rng))["marginalization"] for _ in range(100))
print(f"\nworst marginalization residual over 100 random (psi, U): {worst:.1e}")

for size, ell in ((2, 6), (20, 10), (60, 12)):
    items = rng.choice(1 << ell, size=size, replace=False)
    state = prepare_uniform(("item",), [(int(x),) for x in items])
    runs = [generalized_juggle(state, ell, size, rng=rng) for _ in range(100)]
    full = np.mean([len(r.visited) == size for r in runs])
    m = hash_range(size) if size >= 3 else "-"
    print(f"support {size:3d}, hash range {m}, outer reps {runs[0].outer_reps}: full visit rate {full:.2f}")
