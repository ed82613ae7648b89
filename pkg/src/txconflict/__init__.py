"""Conflict graphs of Ethereum blocks, built from execution traces."""

from .conflict_graph import ConflictGraph, ConflictMode, build_conflict_graph
from .graph_metrics import GraphMetrics, compute_metrics
from .kernels import BACKEND
from .rwsets import AccessSets, Cause, Field, Method, StateKey, rwsets_from_calltrace, rwsets_from_prestate
from .trace_model import BlockTrace, CallFrame, CallType, TxPrestate, parse_call_trace, parse_prestate

__version__ = "0.1.0"

__all__ = [
    "AccessSets",
    "BACKEND",
    "BlockTrace",
    "CallFrame",
    "CallType",
    "Cause",
    "ConflictGraph",
    "ConflictMode",
    "Field",
    "GraphMetrics",
    "Method",
    "StateKey",
    "TxPrestate",
    "build_conflict_graph",
    "compute_metrics",
    "parse_call_trace",
    "parse_prestate",
    "rwsets_from_calltrace",
    "rwsets_from_prestate",
]
