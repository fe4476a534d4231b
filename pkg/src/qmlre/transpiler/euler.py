"""ZXZXZ synthesis of single-qubit unitaries into RZ / SX / X tokens.

Every 2x2 unitary is written as ``exp(1j*phase) * RZ(t1) @ SX @ RZ(t2) @ SX @ RZ(t3)``
(matrix order, so RZ(t3) comes first in time).  The decomposition goes through
``RZ(a) RX(b) RZ(c)`` with ``b`` in [0, pi], then rewrites the middle RX using
``RX(b) ~ RZ(pi/2) SX RZ(b + pi) SX RZ(pi/2)``.

The batch routine is the single source of truth; the scalar entry points wrap
it so brute-force search and the transpiler can never disagree on a shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..circuit import CircuitError, Gate, GateKind

__all__ = [
    "ZERO_ANGLE_TOL",
    "SHAPES",
    "EulerZXZXZ",
    "canonicalize_array",
    "euler_batch",
    "euler_zxzxz",
    "synthesize_1q",
]

# A canonical RZ angle below this magnitude is treated as the identity and dropped.
ZERO_ANGLE_TOL = 1e-9
# |u10| (or |u00|) below this marks a diagonal (or anti-diagonal) unitary.
_DEGENERATE_TOL = 1e-10
# Branch rule: keep the solution whose first-in-time angle lies in [-eps, pi - eps).
_BRANCH_EPS = 1e-9

_RZ, _SX, _X = GateKind.RZ, GateKind.SX, GateKind.X

# Token kinds per shape code; every RZ slot carries one angle.
SHAPES: dict[int, tuple[GateKind, ...]] = {
    0: (),
    1: (_RZ,),
    2: (_X,),
    3: (_X, _RZ),
    4: (_SX, _RZ, _SX),
    5: (_RZ, _SX, _RZ, _SX),
    6: (_SX, _RZ, _SX, _RZ),
    7: (_RZ, _SX, _RZ, _SX, _RZ),
}

_TWO_PI = 2.0 * math.pi


def canonicalize_array(x: np.ndarray) -> np.ndarray:
    """Elementwise reduction into (-pi, pi]; exact (fmod and Sterbenz subtraction)."""
    r = np.fmod(np.asarray(x, dtype=float), _TWO_PI)
    r = np.where(r > math.pi, r - _TWO_PI, r)
    return np.where(r <= -math.pi, r + _TWO_PI, r)


def euler_batch(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Decompose a stack of 2x2 unitaries.

    Returns ``(codes, angles)``: ``codes[m]`` indexes :data:`SHAPES` and
    ``angles[m]`` lists the RZ angles in time order, NaN-padded to length 3.
    """
    u = np.asarray(u, dtype=complex)
    if u.ndim == 2:
        u = u[None]
    m = u.shape[0]
    u00, u01, u10, u11 = u[:, 0, 0], u[:, 0, 1], u[:, 1, 0], u[:, 1, 1]
    m00, m10 = np.abs(u00), np.abs(u10)
    codes = np.zeros(m, dtype=np.int64)
    angles = np.full((m, 3), np.nan)

    diag = m10 <= _DEGENERATE_TOL
    anti = (m00 <= _DEGENERATE_TOL) & ~diag
    gen = ~(diag | anti)

    # Ratios are only read on rows where the divisor is well away from zero.
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        lam_d = canonicalize_array(np.angle(u11 / u00))
        lam_a = canonicalize_array(np.angle(u10 / u01))
        a = np.angle(u10 / u00) + 0.5 * math.pi
        c = np.angle(u11 / u10) - 0.5 * math.pi
    b = 2.0 * np.arctan2(m10, m00)

    nz_d = np.abs(lam_d) >= ZERO_ANGLE_TOL
    sel = diag & nz_d
    codes[sel] = 1
    angles[sel, 0] = lam_d[sel]

    nz_a = np.abs(lam_a) >= ZERO_ANGLE_TOL
    codes[anti] = 2
    sel = anti & nz_a
    codes[sel] = 3
    angles[sel, 0] = lam_a[sel]

    t1 = a + 0.5 * math.pi
    t2 = b + math.pi
    t3 = canonicalize_array(c + 0.5 * math.pi)
    flip = ~((t3 >= -_BRANCH_EPS) & (t3 < math.pi - _BRANCH_EPS))
    t1 = canonicalize_array(np.where(flip, t1 + math.pi, t1))
    t2 = canonicalize_array(np.where(flip, math.pi - b, t2))
    t3 = canonicalize_array(np.where(flip, t3 + math.pi, t3))
    has3 = np.abs(t3) >= ZERO_ANGLE_TOL
    has1 = np.abs(t1) >= ZERO_ANGLE_TOL
    gcode = 4 + has3.astype(np.int64) + 2 * has1.astype(np.int64)
    codes[gen] = gcode[gen]
    # Pack present angles to the front in time order: t3?, t2, t1?.
    col = np.zeros(m, dtype=np.int64)
    rows = np.nonzero(gen & has3)[0]
    angles[rows, 0] = t3[rows]
    col[rows] = 1
    rows = np.nonzero(gen)[0]
    angles[rows, col[rows]] = t2[rows]
    col[rows] += 1
    rows = np.nonzero(gen & has1)[0]
    angles[rows, col[rows]] = t1[rows]
    return codes, angles


@dataclass(frozen=True)
class EulerZXZXZ:
    """``exp(1j*phase) * RZ(theta1) SX RZ(theta2) SX RZ(theta3)`` in matrix order.

    ``kind`` is ``"generic"``, ``"diagonal"``, ``"antidiagonal"`` or ``"identity"``.
    For the degenerate kinds theta3 is pinned to 0; for the identity all
    three angles are 0 and :meth:`tokens` is empty.
    """

    theta1: float
    theta2: float
    theta3: float
    phase: float
    kind: str
    code: int
    angles: tuple[float, ...]

    @property
    def degenerate(self) -> bool:
        return self.kind != "generic"

    def tokens(self, qubit: int = 0) -> list[Gate]:
        """Time-ordered basis gates with zero-angle RZs removed."""
        it = iter(self.angles)
        return [Gate(k, (qubit,), next(it) if k is _RZ else None) for k in SHAPES[self.code]]

    def matrix(self) -> np.ndarray:
        from ..sim import gate_matrix

        out = np.eye(2, dtype=complex)
        for g in self.tokens():
            out = gate_matrix(g) @ out
        return np.exp(1j * self.phase) * out


def _check_unitary(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise CircuitError(f"expected a 2x2 matrix, got shape {u.shape}")
    if not np.allclose(u.conj().T @ u, np.eye(2), atol=1e-10, rtol=0):
        raise CircuitError("matrix is not unitary")
    return u


def euler_zxzxz(u: np.ndarray) -> EulerZXZXZ:
    u = _check_unitary(u)
    codes, angles = euler_batch(u)
    code = int(codes[0])
    present = tuple(float(x) for x in angles[0] if not math.isnan(x))
    if code == 0:
        t1 = t2 = t3 = 0.0
        kind = "identity"
    elif code == 1:
        t1, t2, t3 = float(canonicalize_array(present[0] - math.pi)), math.pi, 0.0
        kind = "diagonal"
    elif code in (2, 3):
        t1, t2, t3 = (present[0] if present else 0.0), 0.0, 0.0
        kind = "antidiagonal"
    else:
        full = list(present)
        t3 = full.pop(0) if code & 1 else 0.0
        t2 = full.pop(0)
        t1 = full.pop(0) if code & 2 else 0.0
        kind = "generic"
    draft = EulerZXZXZ(t1, t2, t3, 0.0, kind, code, present)
    v = draft.matrix()
    phase = float(np.angle(np.trace(v.conj().T @ u)))
    return EulerZXZXZ(t1, t2, t3, phase, kind, code, present)


def synthesize_1q(u: np.ndarray, qubit: int = 0) -> tuple[list[Gate], float]:
    """Basis gates on ``qubit`` realising ``u`` and the global phase they leave over."""
    e = euler_zxzxz(u)
    return e.tokens(qubit), e.phase
