"""The non-collapsing verifier against honest and cheating provers.

Run: python3 demos/03_pdqma_protocol.py
"""
from pdqma import pcp
from pdqma.field import FieldSpec
from pdqma.protocol import (Honest, MultiValued, Optimal, PlantedCorruption, ProtocolParams,
                            RandomFunction, SkewedAmplitude, run_trials)

tri = pcp.shipped("tri16")
spec = FieldSpec.for_problem(tri.n, tri.sigma_size)
params = ProtocolParams(spec, samples=6000, tvd_threshold=0.25)
print(f"tri16: {len(tri.vertices)} vertices, {len(tri.edges)} edges, q={spec.q}")
print(f"samples k={params.samples}, TVD threshold {params.tvd_threshold}\n")

for kind in (Honest(), MultiValued(1.0), RandomFunction(3), SkewedAmplitude(2.0), PlantedCorruption(0.05)):
    s = run_trials(tri, kind, params, 60, seed=1)
    lo, hi = s.wilson
    print(f"{type(kind).__name__:18s} accept {s.acceptance:.3f} [{lo:.2f}, {hi:.2f}]  {s.histogram}")

# An unsatisfiable instance: the best proof still loses a third of the edges.
k4 = pcp.shipped("k4bin")
print("\nk4bin brute-force soundness:", pcp.brute_force_soundness(k4))
spec4 = FieldSpec.for_problem(4, k4.sigma_size)
s = run_trials(k4.padded(4), Optimal(), ProtocolParams(spec4, samples=6000, tvd_threshold=0.25), 100, seed=1)
print(f"best honest encoding accepted at rate {s.acceptance:.3f}  {s.histogram}")
