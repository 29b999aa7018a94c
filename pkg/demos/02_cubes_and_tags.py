"""How the verifier tags each point with the cube it completes.

Given queries w, w' and a random w'', every z off the plane through them
spans a 3-dimensional affine cube with that plane. The tag register holds
a canonical point of that cube, so collapsing the tag leaves a uniform
superposition over exactly one cube minus the plane.

Run: python3 demos/02_cubes_and_tags.py
"""
from collections import Counter

import numpy as np

from pdqma.affine import ON_PLANE, CanonicalMap, CubeFrame, enumerate_cube_minus_plane

q, n = 5, 4
w, w2, w3 = (0, 0, 0, 1), (1, 0, 0, 1), (0, 1, 0, 1)
tags = CanonicalMap(w, w2, w3, q).table()
sizes = Counter(tags)
print(f"q={q}, n={n}: {len(tags)} points, {sizes[ON_PLANE]} on the plane (q^2)")
del sizes[ON_PLANE]
print(f"{len(sizes)} cubes, sizes {set(sizes.values())} (q^3 - q^2 = {q ** 3 - q ** 2})")

rep = next(iter(sizes))
frame = CubeFrame(w, rep, w2, w3, q)
cube = enumerate_cube_minus_plane(frame)
print("representative", rep, "has the fewest nonzeros in its cube:",
      min(cube, key=lambda z: (sum(v != 0 for v in z), z)) == rep)

# collapsing the tag on a uniform witness hits the plane with probability q^(2-n)
rng = np.random.default_rng(0)
hits = sum(tags[int(rng.integers(len(tags)))] is ON_PLANE for _ in range(20000))
print(f"plane-hit frequency {hits / 20000:.4f}, predicted {q ** (2 - n):.4f}")
