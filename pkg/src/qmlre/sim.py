"""Dense state-vector / unitary simulator used as the equivalence oracle.

Conventions: qubit 0 is the least-significant bit of a basis-state index, and
gates apply left to right in time, so ``unitary(a + b) == unitary(b) @ unitary(a)``.
A two-qubit gate's local 4x4 matrix is written in the ``operand0 (x) operand1``
basis, operand 0 being the high bit; for CNOT that is the textbook matrix.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .circuit import Circuit, CircuitError, Gate, GateKind, Parameter

__all__ = [
    "MAX_QUBITS",
    "SimulationError",
    "gate_matrix",
    "run_unitary",
    "rz_matrix",
    "rx_matrix",
    "ry_matrix",
    "unitary",
    "statevector",
    "apply_circuit",
    "fidelity_up_to_phase",
    "expectation_z",
    "permutation_matrix",
    "zero_state",
]

MAX_QUBITS = 10


class SimulationError(ValueError):
    pass


_S2 = 1.0 / math.sqrt(2.0)
_FIXED = {
    GateKind.ID: np.eye(2, dtype=complex),
    GateKind.X: np.array([[0, 1], [1, 0]], dtype=complex),
    GateKind.SX: 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]]),
    GateKind.H: _S2 * np.array([[1, 1], [1, -1]], dtype=complex),
    GateKind.Z: np.array([[1, 0], [0, -1]], dtype=complex),
    GateKind.CNOT: np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    GateKind.CY: np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, -1j], [0, 0, 1j, 0]]),
    GateKind.CZ: np.diag([1, 1, 1, -1]).astype(complex),
    GateKind.SWAP: np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}
for _m in _FIXED.values():
    _m.setflags(write=False)


def rz_matrix(theta: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]])


def rx_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ry_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _crz_matrix(theta: float) -> np.ndarray:
    m = np.eye(4, dtype=complex)
    m[2:, 2:] = rz_matrix(theta)
    return m


_ROTATIONS = {GateKind.RX: rx_matrix, GateKind.RY: ry_matrix, GateKind.RZ: rz_matrix, GateKind.CRZ: _crz_matrix}


def gate_matrix(g: Gate) -> np.ndarray:
    """Local matrix of a unitary gate (2x2 or 4x4)."""
    if g.kind in _FIXED:
        return _FIXED[g.kind]
    if g.kind in _ROTATIONS:
        if isinstance(g.angle, Parameter):
            raise SimulationError(f"unbound parameter {g.angle}")
        return _ROTATIONS[g.kind](g.angle)
    raise SimulationError(f"{g.kind.value} has no matrix")


def run_unitary(run) -> np.ndarray:
    """2x2 product of a single-qubit gate sequence, first gate applied first."""
    u = np.eye(2, dtype=complex)
    for g in run:
        u = gate_matrix(g) @ u
    return u


def _apply(tensor: np.ndarray, m: np.ndarray, qubits: tuple[int, ...], n: int) -> np.ndarray:
    # tensor has shape (2,)*n + (batch,); axis for qubit q is n-1-q.
    k = len(qubits)
    axes = [n - 1 - q for q in qubits]
    m = m.reshape((2,) * (2 * k))
    out = np.tensordot(m, tensor, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def apply_circuit(c: Circuit, states: np.ndarray) -> np.ndarray:
    """Apply ``c`` to a batch of column state vectors of shape (2**n, batch)."""
    n = c.n_qubits
    if n > MAX_QUBITS:
        raise SimulationError(f"{n} qubits exceeds the simulator cap of {MAX_QUBITS}")
    states = np.asarray(states, dtype=complex)
    squeeze = states.ndim == 1
    if squeeze:
        states = states[:, None]
    if states.shape[0] != 2 ** n:
        raise SimulationError(f"state dimension {states.shape[0]} != 2**{n}")
    tensor = states.reshape((2,) * n + (states.shape[1],))
    for g in c.gates:
        if g.kind is GateKind.MEASURE:
            raise SimulationError("measurement is not unitary")
        if g.kind in (GateKind.BARRIER, GateKind.ID):
            continue
        tensor = _apply(tensor, gate_matrix(g), g.qubits, n)
    out = tensor.reshape(2 ** n, -1)
    if c.global_phase:
        out = out * np.exp(1j * c.global_phase)
    return out[:, 0] if squeeze else out


def unitary(c: Circuit) -> np.ndarray:
    if c.n_qubits > MAX_QUBITS:
        raise SimulationError(f"{c.n_qubits} qubits exceeds the simulator cap of {MAX_QUBITS}")
    return apply_circuit(c, np.eye(2 ** c.n_qubits, dtype=complex))


def zero_state(n: int) -> np.ndarray:
    psi = np.zeros(2 ** n, dtype=complex)
    psi[0] = 1.0
    return psi


def statevector(c: Circuit, input_state: np.ndarray | None = None) -> np.ndarray:
    psi = zero_state(c.n_qubits) if input_state is None else np.asarray(input_state, dtype=complex)
    return apply_circuit(c, psi)


def fidelity_up_to_phase(u: np.ndarray, v: np.ndarray) -> float:
    """|tr(U^dagger V)| / d, equal to 1 exactly when U and V differ by a phase."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape or u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise SimulationError(f"shape mismatch {u.shape} vs {v.shape}")
    return float(min(1.0, abs(np.vdot(u, v)) / u.shape[0]))


@lru_cache(maxsize=64)
def _z_signs(n: int, qubit: int) -> np.ndarray:
    idx = np.arange(2 ** n)
    return 1.0 - 2.0 * ((idx >> qubit) & 1)


def z_expectations(states: np.ndarray, n: int, qubit: int) -> np.ndarray:
    """<Z_qubit> for each column of ``states``."""
    probs = np.abs(states) ** 2
    return _z_signs(n, qubit) @ probs


def expectation_z(c: Circuit, input_state: np.ndarray | None, qubit: int) -> float:
    if not 0 <= qubit < c.n_qubits:
        raise SimulationError(f"qubit {qubit} out of range")
    psi = statevector(c, input_state)
    return float(z_expectations(psi[:, None], c.n_qubits, qubit)[0])


def permutation_matrix(mapping: list[int] | tuple[int, ...]) -> np.ndarray:
    """Unitary moving the state of qubit ``i`` onto qubit ``mapping[i]``."""
    n = len(mapping)
    if sorted(mapping) != list(range(n)):
        raise CircuitError(f"{mapping} is not a permutation")
    dim = 2 ** n
    idx = np.arange(dim)
    target = np.zeros(dim, dtype=np.int64)
    for i, p in enumerate(mapping):
        target |= ((idx >> i) & 1) << p
    m = np.zeros((dim, dim), dtype=complex)
    m[target, idx] = 1.0
    return m
