from .coupling import CouplingMap, Layout, RoutingError
from .euler import EulerZXZXZ, euler_batch, euler_zxzxz, synthesize_1q
from .passes import (
    BASIS,
    TranspileConfig,
    TranspileResult,
    fuse_single_qubit_runs,
    route,
    routing_swaps,
    translate_gate,
    transpile,
    transpile_with_layouts,
)

__all__ = [
    "BASIS",
    "CouplingMap",
    "EulerZXZXZ",
    "Layout",
    "RoutingError",
    "TranspileConfig",
    "TranspileResult",
    "euler_batch",
    "euler_zxzxz",
    "fuse_single_qubit_runs",
    "route",
    "routing_swaps",
    "synthesize_1q",
    "translate_gate",
    "transpile",
    "transpile_with_layouts",
]
