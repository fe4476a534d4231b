"""Independent reference unitaries for tests.

Matrices are written out from their textbook definitions and embedded with
explicit Kronecker products (qubit 0 is the least-significant bit).  Nothing
here imports the package's simulator.
"""

import cmath
import math

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
SX = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex)
P0 = np.array([[1, 0], [0, 0]], dtype=complex)
P1 = np.array([[0, 0], [0, 1]], dtype=complex)


def rz(t):
    return np.array([[cmath.exp(-0.5j * t), 0], [0, cmath.exp(0.5j * t)]])


def rx(t):
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ry(t):
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


ONE_QUBIT = {"id": lambda a: I2, "x": lambda a: X, "sx": lambda a: SX, "h": lambda a: H, "z": lambda a: Z,
             "rx": rx, "ry": ry, "rz": rz}


def embed(ops: dict, n: int) -> np.ndarray:
    """Kronecker product with ``ops[q]`` on qubit q and identity elsewhere."""
    out = np.array([[1]], dtype=complex)
    for q in range(n - 1, -1, -1):
        out = np.kron(out, ops.get(q, I2))
    return out


def controlled(c: int, t: int, m: np.ndarray, n: int) -> np.ndarray:
    return embed({c: P0}, n) + embed({c: P1, t: m}, n)


def gate_unitary(kind: str, qubits, angle, n: int) -> np.ndarray:
    if kind in ONE_QUBIT:
        return embed({qubits[0]: ONE_QUBIT[kind](angle)}, n)
    a, b = qubits
    if kind == "cx":
        return controlled(a, b, X, n)
    if kind == "cy":
        return controlled(a, b, Y, n)
    if kind == "cz":
        return controlled(a, b, Z, n)
    if kind == "crz":
        return controlled(a, b, rz(angle), n)
    if kind == "swap":
        return 0.5 * (embed({}, n) + embed({a: X, b: X}, n) + embed({a: Y, b: Y}, n) + embed({a: Z, b: Z}, n))
    if kind in ("barrier", "measure"):
        return embed({}, n)
    raise ValueError(kind)


def circuit_unitary(circuit) -> np.ndarray:
    n = circuit.n_qubits
    u = embed({}, n)
    for g in circuit.gates:
        u = gate_unitary(g.kind.value, g.qubits, g.angle, n) @ u
    return cmath.exp(1j * circuit.global_phase) * u


def fidelity(u: np.ndarray, v: np.ndarray) -> float:
    return abs(np.trace(u.conj().T @ v)) / u.shape[0]


def permutation(mapping) -> np.ndarray:
    """Basis permutation sending the state of qubit i to qubit mapping[i]."""
    n = len(mapping)
    p = np.zeros((2 ** n, 2 ** n))
    for idx in range(2 ** n):
        out = 0
        for i in range(n):
            if idx >> i & 1:
                out |= 1 << mapping[i]
        p[out, idx] = 1
    return p


def random_unitary(rng: np.random.Generator, d: int = 2) -> np.ndarray:
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
