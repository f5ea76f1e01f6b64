"""Compile discrete belief networks into query DAGs and evaluate them."""

from .compiler import CompilationRequest, compile_network, compile_qdag, reduce
from .core import QDag, QDagError
from .evaluator import EvaluationState, Evidence, InconsistentEvidence, evaluate, marginal
from .network import UNKNOWN, BeliefNetwork, parse_network, serialize_network, validate
from .qdagfile import parse_qdag, serialize_qdag

__all__ = [
    "UNKNOWN", "BeliefNetwork", "CompilationRequest", "EvaluationState", "Evidence",
    "InconsistentEvidence", "QDag", "QDagError", "compile_network", "compile_qdag",
    "evaluate", "marginal", "parse_network", "parse_qdag", "reduce", "serialize_network",
    "serialize_qdag", "validate",
]
