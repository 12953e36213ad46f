"""
Spreading boundary vertices by random permutations
==================================================

Start from a placement where every graph puts its boundary vertex on host 0,
then resample block and slot permutations until no host carries too many.
"""

from fractions import Fraction

import numpy as np

from graphpack.assignment import AssignmentState, assign_component_graph, plan_chunks
from graphpack.balancing import balance, compute_profile, relative_degrees
from graphpack.designs import LayeredDesign
from graphpack.graph import complete_graph
from graphpack.isotypes import census

N = 12
st = AssignmentState(LayeredDesign(N, 2, 2, 0), advance_policy="eager")
one_edge = census([(complete_graph(2), [0])])  # an edge with one boundary end
for i in range(N - 1):
    assign_component_graph(st, i, one_edge, plan_chunks(one_edge, 2, 0))

# an adversarial block and slot order: each factor's boundary slot lands on 0
rel = relative_degrees(st)
hosts = {}
for j, R in rel.items():
    H = np.asarray(st.layered.top.factors[j]).copy()
    b, k = np.argwhere(R)[0]
    row = np.flatnonzero((H == 0).any(axis=1))[0]
    H[[b, row]] = H[[row, b]]
    pos = np.flatnonzero(H[b] == 0)[0]
    H[b, [k, pos]] = H[b, [pos, k]]
    hosts[j] = H
before = compute_profile(st, hosts)
print("boundary degrees before:", before.degree.tolist())

h = balance(st, Fraction(1, 4), N, seed=0, strict=False)
print(f"after {h.attempts} attempt(s):", h.degree.tolist())
print("max per attempt:", h.history)

# label counts are unchanged by the permutations
print("labels:", {lab.degrees: c for lab, c in compute_profile(st, h.hosts).alpha.items()})
