"""
Packing a sequence of random trees
==================================

Generate bounded-degree trees filling about 90% of K_n, pack them into
K_N with N <= 1.8 n, and check the result independently.
"""

from graphpack import RunConfig, generate_instance, run_pipeline, verify_packing

n = 60
seq = generate_instance("random-trees", n, delta_max=3, seed=1)
print(f"{len(seq.graphs)} trees, {sum(g.n_edges for g in seq.graphs)} edges of {n * (n - 1) // 2}")

# best-effort mode plans parameters that work at this size
res = run_pipeline(RunConfig(seed=1), seq)
print(f"packed: {res.ok}  host order N = {res.N}  (X = {res.n_x}, Y = {res.N - res.n_x})")

# per-stage wall times
for stage, secs in res.timings.items():
    print(f"  {stage:9s} {secs * 1000:7.1f} ms")

# the verdict is always that of an independent verification
rep = verify_packing(seq, res.packing, res.N)
print(f"verification: {rep.passed}, {rep.edges_used} host edges used")

# waste by category and the balancing certificate
print("waste:", res.waste)
print("certificate:", res.certificate)
