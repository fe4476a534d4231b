from .engine import MODES, REConfig, REReport, RunRecovery, extract_runs, reverse
from .entanglement import EntanglementRecovery, GateItem, RunItem, recover_entanglement
from .lut import LUT, LUTEntry, Match, PatternToken, TemplateGate, default_lut, match_pattern
from .params import (
    SearchResult,
    analytic_params,
    brute_force_params,
    delta,
    grid_points,
    hybrid_params,
    template_delta,
)

__all__ = [
    "MODES",
    "LUT",
    "LUTEntry",
    "Match",
    "PatternToken",
    "REConfig",
    "REReport",
    "RunRecovery",
    "SearchResult",
    "TemplateGate",
    "EntanglementRecovery",
    "GateItem",
    "RunItem",
    "analytic_params",
    "brute_force_params",
    "default_lut",
    "delta",
    "extract_runs",
    "grid_points",
    "hybrid_params",
    "match_pattern",
    "recover_entanglement",
    "reverse",
    "template_delta",
]
