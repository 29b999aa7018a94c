"""Encoding a proof table as a low-degree polynomial, and testing it on lines.

Run: python3 demos/01_low_degree_encoding.py
"""
import numpy as np

from pdqma.encode import ExtensionOracle, ProofTable, grid_function, line_test
from pdqma.field import FieldSpec

rng = np.random.default_rng(1)
# q=7 rather than the minimal q=5 leaves q - (d+1) = 3 check points per line
spec = FieldSpec(q=7, n=3, sigma_size=3)
print(f"field: q={spec.q}, n={spec.n}, alphabet size {spec.sigma_size}")

table = ProofTable.random(spec.n, spec.sigma_size, rng)
oracle = ExtensionOracle(spec, table)
print("proof table:", table.entries)
print("extension agrees on the Boolean cube:",
      all(oracle(x) == table[x] for x in [(0, 0, 0), (0, 1, 1), (1, 1, 0)]))
print("extension at (3, 4, 2):", oracle((3, 4, 2)))

# The restriction of a degree-n polynomial to any line has degree <= n.
honest = grid_function(oracle.grid, spec.q)
print("\nline test, honest extension:      delta =", line_test(honest, spec, spec.n, 500, rng))

noise = grid_function(rng.integers(0, spec.q, spec.q ** spec.n), spec.q)
print("line test, uniformly random table: delta =", line_test(noise, spec, spec.n, 500, rng))

# One corrupted point is only caught by lines through it: 1 / q^(n-1) of them.
grid = oracle.grid.copy()
grid[17] = (grid[17] + 1) % spec.q
bad = grid_function(grid, spec.q)
for mode in ("full", "point"):
    print(f"line test, one corrupted point ({mode}): delta =",
          line_test(bad, spec, spec.n, 5000, rng, mode=mode))
print("expected for full lines:", round(spec.q ** (1 - spec.n), 4))
