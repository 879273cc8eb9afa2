"""Synthesis of correct network update sequences for LTL invariants over packet paths."""
from .checker import model_check, validate_plan, validate_transitions
from .ltl import format_ltl, parse_ltl
from .model import WAIT, NetworkPolicy, PacketSpace, Rule, SwitchPolicy, Topology, Update
from .reduce import rule_granularity_reduce
from .synth import ALGORITHMS, Infeasible, Plan, PreconditionFailure, SynthOptions, config_pairs, order_update, refine

__all__ = [
    "ALGORITHMS", "Infeasible", "NetworkPolicy", "PacketSpace", "Plan", "PreconditionFailure", "Rule",
    "SwitchPolicy", "SynthOptions", "Topology", "Update", "WAIT", "config_pairs", "format_ltl",
    "model_check", "order_update", "parse_ltl", "refine", "rule_granularity_reduce", "validate_plan",
    "validate_transitions",
]
