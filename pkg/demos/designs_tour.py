"""
Resolvable designs and near-resolvable factorizations
=====================================================

The assignment stage places components along three layers of designs. This
script builds each kind and re-verifies it from raw blocks.
"""

from fractions import Fraction

from graphpack import canonicalize, eta_factorize, resolvable_decomposition, verify_design
from graphpack.graph import complete_graph, path_graph

# round robin: K_8 splits into 7 perfect matchings
d = resolvable_decomposition(8, 2)
print("K_8 into K_2-factors:", d.n_factors, "factors, first:", d.factors[0])

# affine plane of order 3 and a Kirkman triple system of order 15
for N, m in [(9, 3), (15, 3), (25, 5)]:
    d = resolvable_decomposition(N, m)
    rep = verify_design(d)
    print(f"K_{N} into K_{m}-factors: {d.n_factors} factors, verified {rep.passed}")

# near-resolvable: paths on 3 vertices cannot tile K_12 exactly, but almost
p3 = canonicalize(path_graph(3), ())
f = eta_factorize(12, p3, Fraction(1, 10), rng_seed=0)
print(f"P_3 in K_12: {f.t} matchings, smallest {f.min_size}, eta achieved {f.eta_achieved}")
print("report:", verify_design(f, Fraction(1, 10)).facts)

# triangles in K_9 come straight from the affine plane
k3 = canonicalize(complete_graph(3), ())
f = eta_factorize(9, k3, 0, rng_seed=0)
print(f"K_3 in K_9: {f.t} triangle factors, uncovered {f.uncovered}")
