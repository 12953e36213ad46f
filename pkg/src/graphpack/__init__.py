"""Edge-disjoint packing of bounded-degree, small-separator graphs into a clique."""

from .graph import (
    EdgeTable,
    Graph,
    GraphSequence,
    PackingMap,
    validate_sequence,
    verify_packing,
)
from .separation import Separation, SeparatorConfig, separate
from .isotypes import IsoType, canonicalize, census
from .designs import (
    EtaFactorization,
    LayeredDesign,
    ResolvableCliqueDecomposition,
    eta_factorize,
    reserve_factor,
    resolvable_decomposition,
)
from .assignment import assign_component_graph, plan_chunks, waste_report
from .balancing import balance, balance_certificate, compute_profile
from .embedding import embed_separators, forbidden_sets
from .oracle import brute_force_pack, verify_design
from .instances import generate_instance
from .pipeline import RunConfig, RunResult, plan, run_pipeline

__all__ = [
    "EdgeTable", "Graph", "GraphSequence", "PackingMap", "validate_sequence", "verify_packing",
    "Separation", "SeparatorConfig", "separate",
    "IsoType", "canonicalize", "census",
    "EtaFactorization", "LayeredDesign", "ResolvableCliqueDecomposition",
    "eta_factorize", "reserve_factor", "resolvable_decomposition",
    "assign_component_graph", "plan_chunks", "waste_report",
    "balance", "balance_certificate", "compute_profile",
    "embed_separators", "forbidden_sets",
    "brute_force_pack", "verify_design",
    "generate_instance",
    "RunConfig", "RunResult", "plan", "run_pipeline",
]
