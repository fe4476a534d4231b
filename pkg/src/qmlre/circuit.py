"""Circuit intermediate representation shared by every other module.

A :class:`Circuit` is an immutable, time-ordered list of :class:`Gate` objects
over ``n_qubits`` qubits plus a tracked global phase.  Angles on gates are kept
exactly as supplied; they are canonicalised only when emitted or compared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence, Union

__all__ = [
    "GateKind",
    "Parameter",
    "Gate",
    "Region",
    "Circuit",
    "Segmentation",
    "CircuitError",
    "canonicalize_angle",
    "canonical_phase",
    "angle_distance",
    "segment_by_two_qubit_gates",
    "param_vector",
    "strip_state_prep",
    "bind",
]

TWO_PI = 2.0 * math.pi


class CircuitError(ValueError):
    """Raised for structurally invalid circuits or gates."""


class GateKind(str, Enum):
    ID = "id"
    X = "x"
    SX = "sx"
    H = "h"
    Z = "z"
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    CNOT = "cx"
    CY = "cy"
    CZ = "cz"
    CRZ = "crz"
    SWAP = "swap"
    BARRIER = "barrier"
    MEASURE = "measure"

    @property
    def num_qubits(self) -> int | None:
        """Fixed arity, or ``None`` for the variadic BARRIER/MEASURE."""
        return _ARITY[self]

    @property
    def has_angle(self) -> bool:
        return self in _ANGLED

    @property
    def is_directive(self) -> bool:
        return self in (GateKind.BARRIER, GateKind.MEASURE)


_ARITY = {
    GateKind.ID: 1, GateKind.X: 1, GateKind.SX: 1, GateKind.H: 1, GateKind.Z: 1,
    GateKind.RX: 1, GateKind.RY: 1, GateKind.RZ: 1,
    GateKind.CNOT: 2, GateKind.CY: 2, GateKind.CZ: 2, GateKind.CRZ: 2, GateKind.SWAP: 2,
    GateKind.BARRIER: None, GateKind.MEASURE: None,
}
_ANGLED = frozenset({GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.CRZ})


@dataclass(frozen=True)
class Parameter:
    """Named placeholder for an angle that is bound later."""

    name: str

    def __str__(self) -> str:
        return self.name


AngleLike = Union[float, Parameter]


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: tuple[int, ...]
    angle: AngleLike | None = None
    trainable: bool = True

    def __post_init__(self):
        kind = GateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        qubits = tuple(int(q) for q in self.qubits)
        object.__setattr__(self, "qubits", qubits)
        arity = kind.num_qubits
        if arity is None:
            if len(qubits) < 1:
                raise CircuitError(f"{kind.value} needs at least one qubit")
        elif len(qubits) != arity:
            raise CircuitError(f"{kind.value} acts on {arity} qubit(s), got {qubits}")
        if len(set(qubits)) != len(qubits):
            raise CircuitError(f"repeated operand in {kind.value}{qubits}")
        if any(q < 0 for q in qubits):
            raise CircuitError(f"negative qubit index in {kind.value}{qubits}")
        if kind.has_angle:
            if self.angle is None:
                raise CircuitError(f"{kind.value} requires an angle")
            if not isinstance(self.angle, Parameter):
                value = float(self.angle)
                if not math.isfinite(value):
                    raise CircuitError(f"non-finite angle on {kind.value}")
                object.__setattr__(self, "angle", value)
        elif self.angle is not None:
            raise CircuitError(f"{kind.value} takes no angle")

    @property
    def is_symbolic(self) -> bool:
        return isinstance(self.angle, Parameter)

    @property
    def is_parameterized(self) -> bool:
        return self.kind.has_angle

    def on(self, *qubits: int) -> "Gate":
        """Same gate re-targeted onto other qubits."""
        return replace(self, qubits=tuple(qubits))

    def with_angle(self, angle: AngleLike) -> "Gate":
        return replace(self, angle=angle)

    def __repr__(self) -> str:
        arg = "" if self.angle is None else f"({self.angle})"
        return f"{self.kind.value}{arg}{list(self.qubits)}"


@dataclass(frozen=True)
class Region:
    """Half-open span ``[start, stop)`` of gate indices with a name."""

    name: str
    start: int
    stop: int

    def __len__(self) -> int:
        return self.stop - self.start


def canonicalize_angle(theta: float) -> tuple[float, float]:
    """Map ``theta`` into (-pi, pi].

    Returns ``(angle, phase_delta)`` with ``RZ(theta) == exp(1j*phase_delta) * RZ(angle)``.
    Every full turn of an RZ flips its sign, so the delta is 0 or pi.
    """
    theta = float(theta)
    if not math.isfinite(theta):
        raise CircuitError(f"cannot canonicalise non-finite angle {theta!r}")
    if -math.pi < theta <= math.pi:
        return theta, 0.0
    reduced = math.remainder(theta, TWO_PI)
    if reduced <= -math.pi:
        reduced += TWO_PI
    turns = round((theta - reduced) / TWO_PI)
    return reduced, (math.pi if turns % 2 else 0.0)


def canonical_phase(phi: float) -> float:
    """Global phase reduced into (-pi, pi]."""
    phi = math.remainder(float(phi), TWO_PI)
    return math.pi if phi <= -math.pi else phi


def angle_distance(a: float, b: float) -> float:
    """Wrapped absolute difference, in [0, pi]."""
    return abs(math.remainder(a - b, TWO_PI))


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()
    global_phase: float = 0.0
    regions: tuple[Region, ...] = ()

    def __post_init__(self):
        if int(self.n_qubits) < 1:
            raise CircuitError("a circuit needs at least one qubit")
        object.__setattr__(self, "n_qubits", int(self.n_qubits))
        gates = tuple(self.gates)
        for g in gates:
            if not isinstance(g, Gate):
                raise CircuitError(f"not a Gate: {g!r}")
            if max(g.qubits) >= self.n_qubits:
                raise CircuitError(f"{g!r} out of range for {self.n_qubits} qubits")
        object.__setattr__(self, "gates", gates)
        object.__setattr__(self, "global_phase", canonical_phase(self.global_phase))
        regions = tuple(self.regions)
        prev_stop = 0
        for r in regions:
            if not (prev_stop <= r.start <= r.stop <= len(gates)):
                raise CircuitError(f"region {r} overlaps, is unordered or out of bounds")
            prev_stop = r.stop
        object.__setattr__(self, "regions", regions)

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    @property
    def parameters(self) -> list[Parameter]:
        """Distinct symbolic parameters in first-use order."""
        seen: dict[Parameter, None] = {}
        for g in self.gates:
            if isinstance(g.angle, Parameter):
                seen.setdefault(g.angle, None)
        return list(seen)

    @property
    def is_symbolic(self) -> bool:
        return any(g.is_symbolic for g in self.gates)

    def region(self, name: str) -> Region | None:
        for r in self.regions:
            if r.name == name:
                return r
        return None

    def with_gates(self, gates: Iterable[Gate], global_phase: float | None = None,
                   regions: Sequence[Region] = ()) -> "Circuit":
        phase = self.global_phase if global_phase is None else global_phase
        return Circuit(self.n_qubits, tuple(gates), phase, tuple(regions))

    def compose(self, other: "Circuit") -> "Circuit":
        """``self`` followed in time by ``other``; regions of both are kept."""
        if other.n_qubits != self.n_qubits:
            raise CircuitError("cannot compose circuits of different width")
        offset = len(self.gates)
        shifted = tuple(Region(r.name, r.start + offset, r.stop + offset) for r in other.regions)
        return Circuit(self.n_qubits, self.gates + other.gates,
                       self.global_phase + other.global_phase, self.regions + shifted)

    def two_qubit_gates(self) -> list[Gate]:
        return [g for g in self.gates if g.kind.num_qubits == 2]

    def count_kinds(self) -> dict[GateKind, int]:
        counts: dict[GateKind, int] = {}
        for g in self.gates:
            counts[g.kind] = counts.get(g.kind, 0) + 1
        return counts


def param_vector(c: Circuit) -> list[float]:
    """Angles of the angle-carrying gates, in circuit order."""
    out = []
    for g in c.gates:
        if g.kind.has_angle:
            if isinstance(g.angle, Parameter):
                raise CircuitError(f"unbound parameter {g.angle} in param_vector")
            out.append(g.angle)
    return out


def bind(c: Circuit, values: Sequence[float] | Mapping[str, float]) -> Circuit:
    """Substitute numeric values for symbolic parameters.

    ``values`` is either a mapping from parameter name to value, or a sequence
    assigned to the circuit's parameters in first-use order.
    """
    params = c.parameters
    if isinstance(values, Mapping):
        lookup = {p: float(values[p.name]) for p in params if p.name in values}
    else:
        values = list(values)
        if len(values) != len(params):
            raise CircuitError(f"expected {len(params)} values, got {len(values)}")
        lookup = dict(zip(params, map(float, values)))
    gates = []
    for g in c.gates:
        if isinstance(g.angle, Parameter) and g.angle in lookup:
            g = replace(g, angle=lookup[g.angle])
        gates.append(g)
    return Circuit(c.n_qubits, tuple(gates), c.global_phase, c.regions)


def strip_state_prep(c: Circuit) -> Circuit:
    """Drop the gates of the ``state_prep`` region.

    Raises :class:`CircuitError` when the circuit carries no such region; the
    boundary is never guessed.
    """
    r = c.region("state_prep")
    if r is None:
        raise CircuitError("circuit has no state_prep region")
    gates = c.gates[: r.start] + c.gates[r.stop:]
    width = len(r)
    regions = []
    for other in c.regions:
        if other is r:
            continue
        if other.start >= r.stop:
            other = Region(other.name, other.start - width, other.stop - width)
        regions.append(other)
    return Circuit(c.n_qubits, gates, c.global_phase, tuple(regions))


def _is_anchor(g: Gate) -> bool:
    return g.kind.num_qubits != 1


@dataclass(frozen=True)
class Segmentation:
    """A circuit cut at every multi-qubit gate.

    ``skeleton`` holds the anchors (two-qubit gates, barriers and measurements)
    in time order.  ``runs[q][j]`` is the j-th maximal single-qubit run on qubit
    ``q``: run 0 precedes the first anchor touching ``q`` and run ``j``
    follows the j-th such anchor.
    """

    n_qubits: int
    skeleton: tuple[Gate, ...]
    runs: tuple[tuple[tuple[Gate, ...], ...], ...]
    global_phase: float = 0.0

    def rebuild(self) -> Circuit:
        """Reinsert every run before the anchor that closes it."""
        cursor = [0] * self.n_qubits
        gates: list[Gate] = []
        for anchor in self.skeleton:
            for q in anchor.qubits:
                gates.extend(self.runs[q][cursor[q]])
                cursor[q] += 1
            gates.append(anchor)
        for q in range(self.n_qubits):
            gates.extend(self.runs[q][cursor[q]])
        return Circuit(self.n_qubits, tuple(gates), self.global_phase)


def segment_by_two_qubit_gates(c: Circuit) -> Segmentation:
    current: list[list[Gate]] = [[] for _ in range(c.n_qubits)]
    runs: list[list[tuple[Gate, ...]]] = [[] for _ in range(c.n_qubits)]
    skeleton: list[Gate] = []
    for g in c.gates:
        if _is_anchor(g):
            for q in g.qubits:
                runs[q].append(tuple(current[q]))
                current[q] = []
            skeleton.append(g)
        else:
            current[g.qubits[0]].append(g)
    for q in range(c.n_qubits):
        runs[q].append(tuple(current[q]))
    return Segmentation(c.n_qubits, tuple(skeleton), tuple(tuple(r) for r in runs), c.global_phase)
