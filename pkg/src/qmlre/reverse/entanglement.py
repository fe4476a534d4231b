"""Recover the logical two-qubit structure of a transpiled circuit.

Three things are undone here:

* routing SWAPs, seen as three alternating CNOTs on one pair with nothing in
  between.  A triple counts as routing only when the transpiler's own router,
  replayed from the current layout, would have inserted exactly those SWAPs
  before the next real two-qubit gate;
* the logical-to-physical layout, so every run and gate is re-expressed on
  logical qubits;
* the CY and CZ sandwiches, ``RZ(-pi/2) . CNOT . RZ(pi/2)`` and
  ``H . CNOT . H`` on the target.  Sandwich halves are fused into neighbouring
  runs, so labels are chosen per target qubit by dynamic programming: each
  label strips its head and tail from the adjacent runs, and the labelling
  with the fewest leftover tokens wins (CY/CZ labels carry a tie-breaking
  surcharge far below one token, so a plain CNOT is preferred only on exact
  ties and a chain of sandwiches whose halves cancel is still recognised).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from ..circuit import Circuit, CircuitError, Gate, GateKind, Segmentation
from ..sim import rz_matrix
from ..transpiler.coupling import CouplingMap, Layout
from ..transpiler.euler import synthesize_1q
from ..transpiler.passes import BASIS, routing_swaps
from .lut import run_unitary

__all__ = [
    "RunItem",
    "GateItem",
    "EntanglementRecovery",
    "recover_entanglement",
]

_CX = GateKind.CNOT
_LABELS = (GateKind.CNOT, GateKind.CY, GateKind.CZ)
_LABEL_PENALTY = 1e-3
_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
# Gate that sits on the target immediately before (head) and after (tail) the CNOT.
_HEAD = {GateKind.CNOT: np.eye(2), GateKind.CY: rz_matrix(-0.5 * math.pi), GateKind.CZ: _H}
_TAIL = {GateKind.CNOT: np.eye(2), GateKind.CY: rz_matrix(0.5 * math.pi), GateKind.CZ: _H}


@dataclass(frozen=True)
class RunItem:
    """A single-qubit run on logical ``qubit`` (canonical basis tokens)."""

    qubit: int
    gates: tuple[Gate, ...]


@dataclass(frozen=True)
class GateItem:
    """A recovered logical anchor: CNOT/CY/CZ, barrier or measurement."""

    gate: Gate


Item = Union[RunItem, GateItem]


@dataclass
class EntanglementRecovery:
    n_qubits: int
    items: list[Item]
    swaps: list[tuple[int, int]] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)
    final_layout: Layout | None = None

    @property
    def two_qubit_gates(self) -> list[Gate]:
        return [i.gate for i in self.items if isinstance(i, GateItem) and i.gate.kind.num_qubits == 2]

    def circuit(self) -> Circuit:
        """The items as a logical circuit (runs kept as basis tokens)."""
        gates: list[Gate] = []
        for it in self.items:
            if isinstance(it, RunItem):
                gates.extend(it.gates)
            else:
                gates.append(it.gate)
        return Circuit(self.n_qubits, tuple(gates))


def _is_swap_triple(seg: Segmentation, run_at: dict, i: int) -> tuple[int, int] | None:
    sk = seg.skeleton
    if i + 2 >= len(sk):
        return None
    g0, g1, g2 = sk[i], sk[i + 1], sk[i + 2]
    if not (g0.kind is g1.kind is g2.kind is _CX):
        return None
    a, b = g0.qubits
    if g1.qubits != (b, a) or g2.qubits != (a, b):
        return None
    for j in (i + 1, i + 2):
        for p in (a, b):
            if seg.runs[p][run_at[(j, p)]]:
                return None
    return (a, b)


def _classify_swaps(seg: Segmentation, run_at: dict, coupling: CouplingMap, layout: Layout,
                    diagnostics: list[str]) -> tuple[list[str], list[Layout], list[tuple[int, int]], Layout]:
    """Role ('swap' or 'real') and the layout in force for every skeleton anchor."""
    sk = seg.skeleton
    roles = ["real"] * len(sk)
    layouts: list[Layout] = [layout] * len(sk)
    swaps: list[tuple[int, int]] = []
    i = 0
    while i < len(sk):
        triples = []
        j = i
        while (t := _is_swap_triple(seg, run_at, j)) is not None:
            triples.append(t)
            j += 3
        accepted = 0
        for m in range(len(triples), 0, -1):
            trig = i + 3 * m
            if trig >= len(sk) or sk[trig].kind.num_qubits != 2:
                continue
            after = layout
            for p1, p2 in triples[:m]:
                after = after.swapped(p1, p2)
            pc, pt = sk[trig].qubits
            lc, lt = after.logical_at(pc), after.logical_at(pt)
            if routing_swaps(coupling, layout, lc, lt) == triples[:m]:
                accepted = m
                break
        if accepted:
            for m in range(accepted):
                p1, p2 = triples[m]
                for j in range(i + 3 * m, i + 3 * m + 3):
                    roles[j] = "swap"
                    layouts[j] = layout
                layout = layout.swapped(p1, p2)
                swaps.append((p1, p2))
            i += 3 * accepted
            continue
        if triples:
            a, b = triples[0]
            diagnostics.append(
                f"anchor {i}: alternating CNOT triple on ({a}, {b}) does not match a routing SWAP; kept as CNOTs")
        layouts[i] = layout
        i += 1
    return roles, layouts, swaps, layout


def _token_cost(u: np.ndarray) -> int:
    return len(synthesize_1q(u)[0])


def _label_runs(qubit_seq: list) -> dict[int, GateKind]:
    """Viterbi over one logical qubit's alternating run/anchor sequence.

    ``qubit_seq`` is ``[run_0, anchor_1, run_1, ..., run_n]`` where each run is a
    2x2 unitary and each anchor is ``(anchor_id, labelable)``.
    """
    runs = qubit_seq[0::2]
    anchors = qubit_seq[1::2]
    options = [list(_LABELS) if lab else [None] for _, lab in anchors]
    # states after anchor j: label -> (cost, back-pointer path)
    states = {None: (0.0, [])}
    prev_opts = [None]
    for j, anchor_opts in enumerate(options + [[None]]):
        run_u = runs[j]
        new_states = {}
        for lab in anchor_opts:
            best = None
            for prev in prev_opts:
                cost0, path = states[prev]
                u = run_u
                if prev is not None:
                    u = u @ _TAIL[prev].conj().T
                if lab is not None:
                    u = _HEAD[lab].conj().T @ u
                cost = cost0 + _token_cost(u) + (_LABEL_PENALTY if lab not in (None, _CX) else 0.0)
                if best is None or cost < best[0] - 1e-12:
                    best = (cost, path + [lab])
            new_states[lab] = best
        states = new_states
        prev_opts = anchor_opts
    _, path = states[None]
    return {anchors[j][0]: lab for j, lab in enumerate(path[:-1]) if lab is not None}


def recover_entanglement(seg: Segmentation, coupling: CouplingMap | None = None,
                         layout: Layout | None = None) -> EntanglementRecovery:
    """Logical runs and two-qubit gates of a segmented transpiled circuit.

    ``coupling`` and ``layout`` are the transpiler settings the circuit was
    produced with (all-to-all and trivial by default).
    """
    n = seg.n_qubits
    coupling = coupling or CouplingMap.full(n)
    if coupling.n_physical != n:
        raise CircuitError(f"circuit width {n} does not match coupling map size {coupling.n_physical}")
    layout = Layout.complete(layout.physical, n) if layout is not None else Layout.trivial(n)
    for g in seg.skeleton:
        if g.kind.num_qubits == 2 and g.kind not in BASIS:
            raise CircuitError(f"{g!r} is not a basis gate; reverse expects transpiled input")

    run_at: dict[tuple[int, int], int] = {}
    cursor = [0] * n
    for idx, g in enumerate(seg.skeleton):
        for p in g.qubits:
            run_at[(idx, p)] = cursor[p]
            cursor[p] += 1

    diagnostics: list[str] = []
    roles, layouts, swaps, final = _classify_swaps(seg, run_at, coupling, layout, diagnostics)

    # Event list in rebuild order, with runs re-labelled by logical qubit.
    events: list[tuple] = []
    for idx, g in enumerate(seg.skeleton):
        lay = layouts[idx]
        for p in g.qubits:
            events.append(("run", lay.logical_at(p), seg.runs[p][run_at[(idx, p)]]))
        events.append(("anchor", idx, tuple(lay.logical_at(p) for p in g.qubits)))
    for p in range(n):
        events.append(("run", final.logical_at(p), seg.runs[p][cursor[p]]))

    # Per logical qubit: alternating runs and anchors, for sandwich labelling.
    per_qubit: dict[int, list] = {q: [] for q in range(n)}
    run_slot: list[tuple[int, int]] = []
    for ev in events:
        if ev[0] == "run":
            q = ev[1]
            run_slot.append((q, len(per_qubit[q])))
            per_qubit[q].append(run_unitary(ev[2]))
        else:
            _, idx, logical = ev
            g = seg.skeleton[idx]
            real_cx = roles[idx] == "real" and g.kind is _CX
            for pos, q in enumerate(logical):
                per_qubit[q].append((idx, real_cx and pos == 1))

    labels: dict[int, GateKind] = {}
    for q, seq in per_qubit.items():
        labels.update(_label_runs(seq))

    # Residual runs after stripping the chosen sandwich halves.
    items: list[Item] = []
    ri = 0
    for ev in events:
        if ev[0] == "run":
            q, pos = run_slot[ri]
            ri += 1
            seq = per_qubit[q]
            before = seq[pos - 1][0] if pos > 0 else None
            after = seq[pos + 1][0] if pos + 1 < len(seq) else None
            tail = labels.get(before, _CX) if before is not None else _CX
            head = labels.get(after, _CX) if after is not None else _CX
            # Sandwich halves only apply on the anchor's target side.
            if before is not None and not seq[pos - 1][1]:
                tail = _CX
            if after is not None and not seq[pos + 1][1]:
                head = _CX
            gates = ev[2]
            if tail is not _CX or head is not _CX:
                u = _HEAD[head].conj().T @ seq[pos] @ _TAIL[tail].conj().T
                gates = tuple(synthesize_1q(u, q)[0])
            else:
                gates = tuple(g.on(q) for g in gates)
            items.append(RunItem(q, gates))
        else:
            _, idx, logical = ev
            if roles[idx] == "swap":
                continue
            g = seg.skeleton[idx]
            kind = labels.get(idx, g.kind) if g.kind is _CX else g.kind
            items.append(GateItem(Gate(kind, logical)))
    return EntanglementRecovery(n, items, swaps, diagnostics, final)
