"""Dummy-parameter countermeasures.

Fixed-angle rotations are injected next to the trainable ones.  After
transpilation they are ordinary RZ angles, so an attacker has to recover them
too.  Two kinds exist: dummy layers (RX, RY on every original qubit followed by
a CNOT chain) and dummy qubits (RX, RY, RZ on a fresh qubit that never
entangles with the model).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .circuit import Circuit, CircuitError, Gate, GateKind, Region
from .reverse.engine import REConfig, extract_runs
from .reverse.entanglement import RunItem
from .reverse.lut import LUT, default_lut, match_pattern
from .transpiler.passes import transpile

__all__ = ["PLACEMENTS", "DefensePlan", "apply_defense", "trainable_twin", "estimate_re_cost"]

PLACEMENTS = ("append", "interleave")
LAYER_ROTATIONS = (GateKind.RX, GateKind.RY)
QUBIT_ROTATIONS = (GateKind.RX, GateKind.RY, GateKind.RZ)


def _uniform_angles(rng: np.random.Generator, size) -> np.ndarray:
    # uniform on (-pi, pi]
    return -rng.uniform(-math.pi, math.pi, size)


@dataclass(frozen=True)
class DefensePlan:
    """How many dummy layers and qubits to inject, and where.

    Angles are drawn from ``seed`` when not given explicitly.  ``layer_angles``
    holds, per dummy layer, ``2 * n_original_qubits`` angles in gate order;
    ``qubit_angles`` holds one (rx, ry, rz) triple per dummy qubit.
    """

    dummy_layers: int = 0
    dummy_qubits: int = 0
    placement: str = "append"
    seed: int = 0
    layer_angles: tuple[tuple[float, ...], ...] | None = None
    qubit_angles: tuple[tuple[float, float, float], ...] | None = None

    def __post_init__(self):
        if self.dummy_layers < 0 or self.dummy_qubits < 0:
            raise ValueError("dummy counts must be non-negative")
        if self.placement not in PLACEMENTS:
            raise ValueError(f"placement must be one of {PLACEMENTS}")
        if self.layer_angles is not None:
            object.__setattr__(self, "layer_angles", tuple(tuple(map(float, a)) for a in self.layer_angles))
            if len(self.layer_angles) != self.dummy_layers:
                raise ValueError("layer_angles must have one entry per dummy layer")
        if self.qubit_angles is not None:
            object.__setattr__(self, "qubit_angles", tuple(tuple(map(float, a)) for a in self.qubit_angles))
            if len(self.qubit_angles) != self.dummy_qubits or any(len(a) != 3 for a in self.qubit_angles):
                raise ValueError("qubit_angles must hold one triple per dummy qubit")

    @property
    def is_empty(self) -> bool:
        return self.dummy_layers == 0 and self.dummy_qubits == 0

    def n_fixed_params(self, n_original_qubits: int) -> int:
        return len(LAYER_ROTATIONS) * n_original_qubits * self.dummy_layers + 3 * self.dummy_qubits

    def resolve(self, n_original_qubits: int) -> tuple[list[list[float]], list[list[float]]]:
        """Concrete (layer angles, qubit angles) for a model of the given width."""
        rng = np.random.default_rng(self.seed)
        drawn_layers = _uniform_angles(rng, (self.dummy_layers, len(LAYER_ROTATIONS) * n_original_qubits))
        drawn_qubits = _uniform_angles(rng, (self.dummy_qubits, 3))
        layers = [list(a) for a in self.layer_angles] if self.layer_angles is not None else drawn_layers.tolist()
        qubits = [list(a) for a in self.qubit_angles] if self.qubit_angles is not None else drawn_qubits.tolist()
        for a in layers:
            if len(a) != len(LAYER_ROTATIONS) * n_original_qubits:
                raise CircuitError(f"dummy layer needs {len(LAYER_ROTATIONS) * n_original_qubits} angles, got {len(a)}")
        return layers, qubits

    def to_json(self) -> dict:
        doc = {"dummy_layers": self.dummy_layers, "dummy_qubits": self.dummy_qubits,
               "placement": self.placement, "seed": self.seed}
        if self.layer_angles is not None:
            doc["layer_angles"] = [list(a) for a in self.layer_angles]
        if self.qubit_angles is not None:
            doc["qubit_angles"] = [list(a) for a in self.qubit_angles]
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "DefensePlan":
        unknown = set(doc) - {"dummy_layers", "dummy_qubits", "placement", "seed", "layer_angles", "qubit_angles"}
        if unknown:
            raise ValueError(f"unknown defense plan keys: {sorted(unknown)}")
        la, qa = doc.get("layer_angles"), doc.get("qubit_angles")
        return cls(int(doc.get("dummy_layers", 0)), int(doc.get("dummy_qubits", 0)),
                   doc.get("placement", "append"), int(doc.get("seed", 0)),
                   tuple(map(tuple, la)) if la is not None else None,
                   tuple(map(tuple, qa)) if qa is not None else None)

    @classmethod
    def load(cls, path: str | Path) -> "DefensePlan":
        return cls.from_json(json.loads(Path(path).read_text()))


def _dummy_layer(n: int, angles: list[float]) -> list[Gate]:
    gates = []
    it = iter(angles)
    for q in range(n):
        for kind in LAYER_ROTATIONS:
            gates.append(Gate(kind, (q,), next(it), trainable=False))
    gates.extend(Gate(GateKind.CNOT, (q, q + 1), trainable=False) for q in range(n - 1))
    return gates


def _dummy_qubits(first: int, triples: list[list[float]]) -> list[Gate]:
    return [Gate(kind, (first + i,), a, trainable=False)
            for i, t in enumerate(triples) for kind, a in zip(QUBIT_ROTATIONS, t)]


def _blocks(c: Circuit) -> list[tuple[str | None, list[Gate]]]:
    """The gate list cut into named regions and unnamed gaps, in order."""
    out: list[tuple[str | None, list[Gate]]] = []
    pos = 0
    for r in c.regions:
        if r.start > pos:
            out.append((None, list(c.gates[pos:r.start])))
        out.append((r.name, list(c.gates[r.start:r.stop])))
        pos = r.stop
    if pos < len(c.gates):
        tail = list(c.gates[pos:])
        cut = len(tail)
        while cut and tail[cut - 1].kind is GateKind.MEASURE:
            cut -= 1
        # trailing measurements get a block of their own
        out.extend((None, part) for part in (tail[:cut], tail[cut:]) if part)
    return out


def apply_defense(c: Circuit, plan: DefensePlan) -> Circuit:
    """Inject the plan's fixed-parameter gates into ``c``.

    Original gates are kept untouched and in order.  With ``append`` the dummy
    layers follow the last ansatz layer; with ``interleave`` dummy layer ``i``
    follows ansatz layer ``i mod L``.  Dummy-qubit rotations sit right after the
    dummy layers (append) or right after state preparation (interleave).
    Injected blocks get regions ``dummy_layer_<i>`` and ``dummy_qubits``.
    """
    if plan.is_empty:
        return c
    n = c.n_qubits
    layers, triples = plan.resolve(n)
    blocks = _blocks(c)
    ansatz_idx = [i for i, (name, _) in enumerate(blocks) if name and name.startswith("ansatz_layer_")]
    if plan.placement == "interleave" and not ansatz_idx:
        raise CircuitError("interleave placement needs at least one marked ansatz layer")

    # insert_after[block index] -> blocks placed immediately after it (-1: at the front)
    insert_after: dict[int, list[tuple[str, list[Gate]]]] = {}
    dq_block = ("dummy_qubits", _dummy_qubits(n, triples)) if triples else None
    if plan.placement == "append":
        if ansatz_idx:
            anchor = ansatz_idx[-1]
        else:
            # before trailing measurements, else at the very end
            anchor = len(blocks) - 1
            while anchor >= 0 and blocks[anchor][0] is None and all(
                    g.kind is GateKind.MEASURE for g in blocks[anchor][1]):
                anchor -= 1
        extra = [(f"dummy_layer_{i}", _dummy_layer(n, a)) for i, a in enumerate(layers)]
        if dq_block:
            extra.append(dq_block)
        insert_after[anchor] = extra
    else:
        for i, a in enumerate(layers):
            insert_after.setdefault(ansatz_idx[i % len(ansatz_idx)], []).append(
                (f"dummy_layer_{i}", _dummy_layer(n, a)))
        if dq_block:
            prep = [i for i, (name, _) in enumerate(blocks) if name == "state_prep"]
            insert_after.setdefault(prep[0] if prep else -1, []).insert(0, dq_block)

    ordered = list(insert_after.get(-1, []))
    for i, b in enumerate(blocks):
        ordered.append(b)
        ordered.extend(insert_after.get(i, []))

    gates: list[Gate] = []
    regions: list[Region] = []
    for name, gs in ordered:
        if name is not None:
            regions.append(Region(name, len(gates), len(gates) + len(gs)))
        gates.extend(gs)
    return Circuit(n + len(triples), tuple(gates), c.global_phase, tuple(regions))


def trainable_twin(c: Circuit) -> Circuit:
    """Same gates and angles with every trainable flag set."""
    return c.with_gates((replace(g, trainable=True) for g in c.gates), regions=c.regions)


def estimate_re_cost(c: Circuit, cfg: REConfig | None = None, lut: LUT | None = None) -> int:
    """Grid points a brute-force attack may visit on ``c`` (numeric angles).

    Sums ``ceil(2*pi/step) ** k`` over every LUT entry matching every
    single-qubit run of the transpiled, state-stripped circuit: the search
    tries each matching entry at most once, so this bounds its
    ``candidates_evaluated``.
    """
    cfg = cfg or REConfig()
    lut = lut or default_lut()
    _, rec = extract_runs(transpile(c, cfg.transpile), cfg)
    per_slot = math.ceil(2 * math.pi / cfg.step)
    total = 0
    for item in rec.items:
        if isinstance(item, RunItem) and item.gates:
            total += sum(per_slot ** m.entry.k for m in match_pattern(item.gates, lut))
    return total
