"""Hypothesis strategies shared by the test modules."""

import math

from hypothesis import strategies as st

from qmlre.circuit import Circuit, Gate, GateKind

UNITARY_KINDS = [k for k in GateKind if not k.is_directive]
ONE_Q = [k for k in UNITARY_KINDS if k.num_qubits == 1]
TWO_Q = [k for k in UNITARY_KINDS if k.num_qubits == 2]

angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False, allow_infinity=False)


@st.composite
def gates(draw, n_qubits: int, kinds=None):
    pool = kinds or (UNITARY_KINDS if n_qubits > 1 else ONE_Q)
    kind = draw(st.sampled_from(pool))
    qubits = tuple(draw(st.permutations(range(n_qubits)))[: kind.num_qubits])
    return Gate(kind, qubits, draw(angles) if kind.has_angle else None)


@st.composite
def circuits(draw, max_qubits: int = 3, max_gates: int = 12, kinds=None, min_qubits: int = 1):
    n = draw(st.integers(min_qubits, max_qubits))
    gs = draw(st.lists(gates(n, kinds), max_size=max_gates))
    return Circuit(n, tuple(gs), draw(angles))
