"""
Small tree packing instances, exhaustively
==========================================

Every sequence T_1, ..., T_n with v(T_i) = i packs into K_n for small n.
The brute-force packer confirms it, and the pipeline's packings into larger
hosts are checked against the same verifier.
"""

import time

from graphpack import GraphSequence, RunConfig, brute_force_pack, run_pipeline
from graphpack.oracle import tree_sequences
from graphpack.oracle import BudgetExhausted, Unsat

for n in range(2, 7):
    t0 = time.perf_counter()
    total = sat = 0
    nodes = 0
    for trees in tree_sequences(n):
        total += 1
        res = brute_force_pack(GraphSequence(tuple(trees), n, n - 1), n)
        if not isinstance(res, (Unsat, BudgetExhausted)):
            sat += 1
            nodes += res.nodes
    print(f"n={n}: {sat}/{total} sequences pack into K_{n} ({nodes} search nodes, {time.perf_counter() - t0:.2f} s)")

# the pipeline needs some slack above n
trees = next(iter(tree_sequences(6)))
seq = GraphSequence(tuple(trees), 6, 5)
res = run_pipeline(RunConfig(epsilon=1), seq)
print(f"pipeline on one n=6 sequence: ok={res.ok}, N={res.N}")
