"""Lasserre relaxations, 3-XOR gap instances and their exact certificates for graph partitioning."""

from .poly import BinaryProgram, MultilinearPoly, canonical_key, enumerate_subsets, eval_poly
from .lasserre import (
    GramSolution,
    LiftedSDP,
    MomentVector,
    build_lifted_sdp,
    build_psi1,
    build_psi2,
    certify_lift,
    gram_from_moments,
    moment_matrix,
    rank1_lift,
    solve_family,
    verify_vector_constraints,
)
from .sdp import SdpProblem, export_sdpa, parse_sdpa, solve
from .xor3 import Xor3Instance, sample_planted, sample_random

__all__ = [
    "BinaryProgram", "MultilinearPoly", "canonical_key", "enumerate_subsets", "eval_poly",
    "GramSolution", "LiftedSDP", "MomentVector", "build_lifted_sdp", "build_psi1", "build_psi2",
    "certify_lift", "gram_from_moments", "moment_matrix", "rank1_lift", "solve_family",
    "verify_vector_constraints", "SdpProblem", "export_sdpa", "parse_sdpa", "solve",
    "Xor3Instance", "sample_planted", "sample_random",
]
