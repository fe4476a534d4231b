"""Transpiler passes: routing, basis translation and single-qubit fusion.

The pipeline is fixed (route, translate, then fuse at level 1) and fully
deterministic, so the victim and anyone holding the same transpiler produce
byte-identical output for the same input.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..circuit import (
    Circuit,
    CircuitError,
    Gate,
    GateKind,
    Parameter,
    Region,
    canonicalize_angle,
    segment_by_two_qubit_gates,
    Segmentation,
)
from ..sim import run_unitary
from .coupling import CouplingMap, Layout, RoutingError
from .euler import synthesize_1q

__all__ = [
    "BASIS",
    "TranspileConfig",
    "TranspileResult",
    "translate_gate",
    "route",
    "routing_swaps",
    "fuse_single_qubit_runs",
    "transpile",
    "transpile_with_layouts",
]

BASIS = frozenset({GateKind.ID, GateKind.X, GateKind.SX, GateKind.CNOT, GateKind.RZ})
_PASSTHROUGH = frozenset({GateKind.BARRIER, GateKind.MEASURE})
_HALF_PI = 0.5 * math.pi


def _rz(q: int, theta: float) -> Gate:
    return Gate(GateKind.RZ, (q,), theta)


def _sx(q: int) -> Gate:
    return Gate(GateKind.SX, (q,))


def _cx(c: int, t: int) -> Gate:
    return Gate(GateKind.CNOT, (c, t))


def _h_expansion(q: int) -> list[Gate]:
    return [_rz(q, _HALF_PI), _sx(q), _rz(q, _HALF_PI)]


def _raw_translation(g: Gate) -> tuple[list[Gate], float]:
    """Basis expansion before RZ canonicalisation, with its global phase."""
    k, qs, th = g.kind, g.qubits, g.angle
    if k in (GateKind.ID, GateKind.X, GateKind.SX, GateKind.RZ, GateKind.CNOT):
        return [Gate(k, qs, th)], 0.0
    if k is GateKind.H:
        return _h_expansion(qs[0]), 0.25 * math.pi
    if k is GateKind.Z:
        return [_rz(qs[0], math.pi)], _HALF_PI
    if k is GateKind.RX:
        q = qs[0]
        return [_rz(q, _HALF_PI), _sx(q), _rz(q, math.pi + th), _sx(q), _rz(q, _HALF_PI)], _HALF_PI
    if k is GateKind.RY:
        q = qs[0]
        return [_sx(q), _rz(q, th + math.pi), _sx(q), _rz(q, 3 * math.pi)], -_HALF_PI
    c, t = qs if len(qs) == 2 else (None, None)
    if k is GateKind.CY:
        return [_rz(t, -_HALF_PI), _cx(c, t), _rz(t, _HALF_PI)], 0.0
    if k is GateKind.CZ:
        return _h_expansion(t) + [_cx(c, t)] + _h_expansion(t), _HALF_PI
    if k is GateKind.CRZ:
        return [_rz(t, 0.5 * th), _cx(c, t), _rz(t, -0.5 * th), _cx(c, t)], 0.0
    if k is GateKind.SWAP:
        return [_cx(c, t), _cx(t, c), _cx(c, t)], 0.0
    raise CircuitError(f"no translation for {k.value}")


def translate_gate(g: Gate) -> tuple[list[Gate], float]:
    """Basis-gate expansion of ``g`` and the global-phase delta it introduces.

    Emitted RZ angles are canonical; the sign flips from canonicalisation are
    folded into the returned phase.  BARRIER and MEASURE pass through.
    """
    if g.kind in _PASSTHROUGH:
        return [Gate(g.kind, g.qubits)], 0.0
    if isinstance(g.angle, Parameter):
        raise CircuitError(f"cannot transpile unbound parameter {g.angle}")
    raw, phase = _raw_translation(g)
    out = []
    for r in raw:
        if r.kind is GateKind.RZ:
            theta, delta = canonicalize_angle(r.angle)
            phase += delta
            r = _rz(r.qubits[0], theta)
        out.append(r)
    return out, phase


def routing_swaps(coupling: CouplingMap, layout: Layout, a: int, b: int) -> list[tuple[int, int]]:
    """Physical SWAPs the router inserts before a two-qubit gate on logical (a, b)."""
    pa, pb = layout.physical[a], layout.physical[b]
    if coupling.connected(pa, pb):
        return []
    path = coupling.shortest_path(pa, pb)
    return [(path[i], path[i + 1]) for i in range(len(path) - 2)]


def route(c: Circuit, coupling: CouplingMap, layout: Layout | None = None) -> tuple[Circuit, list[Layout]]:
    """Map ``c`` onto physical qubits, inserting SWAPs where operands are not coupled.

    For an uncoupled pair the first operand walks along the BFS shortest path
    toward the second, one SWAP per hop, until the two are adjacent.  Returns
    the routed circuit (width ``coupling.n_physical``) and the layout after
    every inserted SWAP, starting with the initial one.
    """
    n_phys = coupling.n_physical
    if c.n_qubits > n_phys:
        raise RoutingError(f"{c.n_qubits} logical qubits exceed {n_phys} physical qubits")
    layout = Layout.trivial(n_phys) if layout is None else Layout.complete(layout.physical[: c.n_qubits], n_phys)
    history = [layout]
    out: list[Gate] = []
    for g in c.gates:
        if g.kind.num_qubits == 2:
            for p1, p2 in routing_swaps(coupling, layout, *g.qubits):
                out.append(Gate(GateKind.SWAP, (p1, p2)))
                layout = layout.swapped(p1, p2)
                history.append(layout)
        out.append(Gate(g.kind, tuple(layout.physical[q] for q in g.qubits), g.angle, g.trainable))
    return Circuit(n_phys, tuple(out), c.global_phase), history


def fuse_single_qubit_runs(c: Circuit) -> Circuit:
    """Replace every maximal single-qubit run by its canonical ZXZXZ emission."""
    seg = segment_by_two_qubit_gates(c)
    phase = c.global_phase
    runs = []
    for q, qruns in enumerate(seg.runs):
        fused = []
        for run in qruns:
            if not run:
                fused.append(())
                continue
            tokens, delta = synthesize_1q(run_unitary(run), q)
            phase += delta
            fused.append(tuple(tokens))
        runs.append(tuple(fused))
    return Segmentation(c.n_qubits, seg.skeleton, tuple(runs), phase).rebuild()


@dataclass(frozen=True)
class TranspileConfig:
    """Pipeline settings; ``coupling=None`` means all-to-all on the circuit width."""

    coupling: CouplingMap | None = None
    initial_layout: tuple[int, ...] | None = None
    optimization_level: int = 1
    basis: frozenset = field(default=BASIS)

    def __post_init__(self):
        if frozenset(GateKind(b) for b in self.basis) != BASIS:
            raise CircuitError("basis must be exactly {id, x, sx, cx, rz}")
        if self.optimization_level not in (0, 1):
            raise CircuitError("optimization_level must be 0 or 1")

    def coupling_for(self, n_qubits: int) -> CouplingMap:
        return self.coupling if self.coupling is not None else CouplingMap.full(n_qubits)

    def layout_for(self, n_qubits: int) -> Layout:
        cm = self.coupling_for(n_qubits)
        partial = self.initial_layout if self.initial_layout is not None else range(n_qubits)
        return Layout.complete(list(partial)[:n_qubits], cm.n_physical)

    def to_json(self) -> dict:
        doc = {
            "basis": sorted(k.value for k in BASIS),
            "optimization_level": self.optimization_level,
        }
        if self.coupling is not None:
            doc["coupling"] = self.coupling.to_json()
        if self.initial_layout is not None:
            doc["layout"] = list(self.initial_layout)
        return doc

    @classmethod
    def from_json(cls, doc: dict, n_qubits: int | None = None) -> "TranspileConfig":
        basis = frozenset(GateKind(b) for b in doc.get("basis", [k.value for k in BASIS]))
        coupling = doc.get("coupling")
        if coupling is not None:
            coupling = CouplingMap.from_json(coupling, n_qubits)
        layout = doc.get("layout")
        return cls(coupling, tuple(layout) if layout is not None else None,
                   int(doc.get("optimization_level", 1)), basis)

    @classmethod
    def load(cls, path: str | Path, n_qubits: int | None = None) -> "TranspileConfig":
        return cls.from_json(json.loads(Path(path).read_text()), n_qubits)


@dataclass(frozen=True)
class TranspileResult:
    circuit: Circuit
    layouts: tuple[Layout, ...]
    coupling: CouplingMap

    @property
    def initial_layout(self) -> Layout:
        return self.layouts[0]

    @property
    def final_layout(self) -> Layout:
        return self.layouts[-1]


def _state_prep_region(gates: tuple[Gate, ...]) -> tuple[Region, ...]:
    for i, g in enumerate(gates):
        if g.kind is GateKind.BARRIER:
            return (Region("state_prep", 0, i + 1),)
    return ()


def transpile_with_layouts(c: Circuit, cfg: TranspileConfig | None = None) -> TranspileResult:
    cfg = cfg or TranspileConfig()
    coupling = cfg.coupling_for(c.n_qubits)
    routed, history = route(c, coupling, cfg.layout_for(c.n_qubits))
    gates: list[Gate] = []
    phase = routed.global_phase
    for g in routed.gates:
        out, delta = translate_gate(g)
        gates.extend(out)
        phase += delta
    result = Circuit(routed.n_qubits, tuple(gates), phase)
    if cfg.optimization_level >= 1:
        result = fuse_single_qubit_runs(result)
    # The embedding boundary survives as "everything up to the first barrier".
    if c.region("state_prep") is not None:
        result = Circuit(result.n_qubits, result.gates, result.global_phase, _state_prep_region(result.gates))
    return TranspileResult(result, tuple(history), coupling)


def transpile(c: Circuit, cfg: TranspileConfig | None = None) -> Circuit:
    return transpile_with_layouts(c, cfg).circuit
