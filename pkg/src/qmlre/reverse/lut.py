"""Look-up table from fused single-qubit token patterns to rotation templates.

Each entry pairs one or more transpiled token shapes with an abstract gate
template over ``k`` free parameters, and optionally an analytic inverse that
maps the run back to template parameters without search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..circuit import Gate, GateKind, angle_distance, canonical_phase
from ..sim import gate_matrix, run_unitary

__all__ = [
    "LITERAL_TOL",
    "PatternToken",
    "TemplateGate",
    "LUTEntry",
    "LUT",
    "Match",
    "default_lut",
    "match_pattern",
    "run_unitary",
    "template_unitaries",
]

LITERAL_TOL = 1e-9

_RZ, _SX, _X = GateKind.RZ, GateKind.SX, GateKind.X


@dataclass(frozen=True)
class PatternToken:
    """A basis gate in a pattern; an RZ carries either a literal angle or a free slot."""

    kind: GateKind
    literal: float | None = None
    slot: int | None = None

    def matches(self, g: Gate) -> bool:
        if g.kind is not self.kind:
            return False
        if self.literal is not None:
            return angle_distance(g.angle, self.literal) <= LITERAL_TOL
        return True


@dataclass(frozen=True)
class TemplateGate:
    kind: GateKind
    slot: int | None = None


def _free(i: int) -> PatternToken:
    return PatternToken(_RZ, slot=i)


def _lit(x: float) -> PatternToken:
    return PatternToken(_RZ, literal=x)


_SXT = PatternToken(_SX)
_XT = PatternToken(_X)

AnalyticInverse = Callable[[Sequence[float], np.ndarray], tuple[float, ...]]


@dataclass(frozen=True)
class LUTEntry:
    name: str
    patterns: tuple[tuple[PatternToken, ...], ...]
    template: tuple[TemplateGate, ...]
    analytic_inverse: AnalyticInverse | None = None

    @property
    def k(self) -> int:
        return len({t.slot for t in self.template if t.slot is not None})

    def gates(self, params: Sequence[float], qubit: int) -> list[Gate]:
        """The template bound to ``params`` on ``qubit``."""
        return [Gate(t.kind, (qubit,), None if t.slot is None else float(params[t.slot]))
                for t in self.template]

    def match(self, run: Sequence[Gate]) -> tuple[float, ...] | None:
        """Free-slot values (by slot id) for the first fitting pattern, else None."""
        for p in self.patterns:
            if len(p) == len(run) and all(t.matches(g) for t, g in zip(p, run)):
                slots = sorted((t.slot, g.angle) for t, g in zip(p, run) if t.slot is not None)
                return tuple(v for _, v in slots)
        return None


def _canon(x: float) -> float:
    return canonical_phase(x)


def _so3(u: np.ndarray) -> np.ndarray:
    """Rotation matrix of a 2x2 unitary: R_ij = tr(s_i U s_j U^dagger) / 2."""
    paulis = (np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.array([[1, 0], [0, -1]]))
    return np.array([[0.5 * np.trace(si @ u @ sj @ u.conj().T).real for sj in paulis] for si in paulis])


def _inverse_xyz(_: Sequence[float], u: np.ndarray) -> tuple[float, float, float]:
    # U ~ RZ(c) RY(b) RX(a) in matrix order is the ZYX Tait-Bryan rotation.
    r = _so3(u)
    b = math.asin(max(-1.0, min(1.0, -r[2, 0])))
    if math.cos(b) < 1e-9:
        a = 0.0
        c = math.atan2(-r[0, 1], r[1, 1])
    else:
        a = math.atan2(r[2, 1], r[2, 2])
        c = math.atan2(r[1, 0], r[0, 0])
    return (_canon(a), _canon(b), _canon(c))


def default_lut() -> "LUT":
    half = 0.5 * math.pi
    pi = math.pi
    T = TemplateGate
    entries = [
        LUTEntry("I", ((),), (), lambda s, u: ()),
        LUTEntry("X", ((_XT,),), (T(_X),), lambda s, u: ()),
        LUTEntry("H", ((_SXT, _lit(half), _SXT),), (T(GateKind.H),), lambda s, u: ()),
        LUTEntry("RZ", ((_free(0),),), (T(_RZ, 0),), lambda s, u: (_canon(s[0]),)),
        LUTEntry("RX", ((_lit(half), _SXT, _free(0), _SXT, _lit(half)),), (T(GateKind.RX, 0),),
                 lambda s, u: (_canon(s[0] - pi),)),
        LUTEntry("RY", ((_SXT, _free(0), _SXT, _lit(pi)),), (T(GateKind.RY, 0),),
                 lambda s, u: (_canon(s[0] - pi),)),
        LUTEntry("X.RZ", ((_XT, _free(0)),), (T(_X), T(_RZ, 0)), lambda s, u: (_canon(s[0]),)),
        LUTEntry("RY.RZ", ((_SXT, _free(0), _SXT, _free(1)),), (T(GateKind.RY, 0), T(_RZ, 1)),
                 lambda s, u: (_canon(s[0] - pi), _canon(s[1] - pi))),
        LUTEntry(
            "RX.RY.RZ",
            (
                (_free(0), _SXT, _free(1), _SXT, _free(2)),
                (_free(0), _SXT, _free(1), _SXT),
                (_SXT, _free(0), _SXT, _free(1)),
                (_SXT, _free(0), _SXT),
            ),
            (T(GateKind.RX, 0), T(GateKind.RY, 1), T(_RZ, 2)),
            _inverse_xyz,
        ),
    ]
    return LUT(tuple(entries))


@dataclass(frozen=True)
class LUT:
    entries: tuple[LUTEntry, ...]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def entry(self, name: str) -> LUTEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)


@dataclass(frozen=True)
class Match:
    entry: LUTEntry
    slots: tuple[float, ...]


def match_pattern(run: Sequence[Gate], lut: LUT) -> list[Match]:
    """LUT entries whose pattern fits ``run``, fewest free parameters first."""
    out = []
    for e in lut:
        slots = e.match(run)
        if slots is not None:
            out.append(Match(e, slots))
    out.sort(key=lambda m: m.entry.k)
    return out


def template_unitaries(template: Sequence[TemplateGate], params: np.ndarray) -> np.ndarray:
    """Unitaries of ``template`` for each row of ``params`` (shape (M, k)) as an (M, 2, 2) stack."""
    params = np.atleast_2d(np.asarray(params, dtype=float))
    m = params.shape[0]
    u = np.broadcast_to(np.eye(2, dtype=complex), (m, 2, 2)).copy()
    for t in template:
        if t.slot is None:
            g = gate_matrix(Gate(t.kind, (0,)))
            u = np.einsum("ij,mjk->mik", g, u)
        else:
            u = np.einsum("mij,mjk->mik", _rotation_batch(t.kind, params[:, t.slot]), u)
    return u


def _rotation_batch(kind: GateKind, theta: np.ndarray) -> np.ndarray:
    c = np.cos(0.5 * theta)
    s = np.sin(0.5 * theta)
    out = np.empty(theta.shape + (2, 2), dtype=complex)
    if kind is GateKind.RZ:
        e = np.exp(-0.5j * theta)
        out[..., 0, 0] = e
        out[..., 0, 1] = 0
        out[..., 1, 0] = 0
        out[..., 1, 1] = e.conj()
    elif kind is GateKind.RX:
        out[..., 0, 0] = c
        out[..., 0, 1] = -1j * s
        out[..., 1, 0] = -1j * s
        out[..., 1, 1] = c
    elif kind is GateKind.RY:
        out[..., 0, 0] = c
        out[..., 0, 1] = -s
        out[..., 1, 0] = s
        out[..., 1, 1] = c
    else:
        raise ValueError(f"{kind.value} is not a rotation")
    return out
