import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmlre.circuit import Circuit, CircuitError, Gate, GateKind, Parameter, bind, param_vector
from qmlre.defense import DefensePlan, apply_defense, estimate_re_cost, trainable_twin
from qmlre.qasm import emit
from qmlre.qnn import PQCSpec, build_classifier, weight_parameters
from qmlre.reverse import REConfig
from qmlre.sim import statevector, z_expectations
from qmlre.transpiler import transpile


def _bound(spec: PQCSpec, seed: int = 0, x=None) -> Circuit:
    clf = build_classifier(spec)
    rng = np.random.default_rng(seed)
    values = {p.name: float(v) for p, v in zip(weight_parameters(clf), rng.uniform(-math.pi, math.pi, spec.n_params))}
    xs = x if x is not None else rng.uniform(0, math.pi, spec.n_qubits)
    values.update({f"x{q}": float(v) for q, v in enumerate(xs)})
    return bind(clf, values)


def _n_angles(c: Circuit) -> int:
    return sum(1 for g in c.gates if g.angle is not None)


def test_empty_plan_is_identity():
    c = _bound(PQCSpec(2, 1))
    assert apply_defense(c, DefensePlan()) is c


def test_dummy_qubit_adds_three_fixed_params():
    spec = PQCSpec(2, 3)
    d = apply_defense(build_classifier(spec), DefensePlan(dummy_qubits=1))
    assert len(weight_parameters(d)) == 18
    fixed = [g for g in d.gates if g.angle is not None and not g.trainable]
    assert len(fixed) == 3 and d.n_qubits == 3


def test_layer_plus_qubit_on_one_layer_model_gives_thirteen():
    spec = PQCSpec(2, 1)
    plan = DefensePlan(dummy_layers=1, dummy_qubits=1)
    d = apply_defense(build_classifier(spec), plan)
    ansatz_angles = _n_angles(d) - spec.n_qubits  # minus the RY embedding
    assert ansatz_angles == 6 + 4 + 3 == plan.n_fixed_params(2) + 6


@pytest.mark.parametrize("placement", ["append", "interleave"])
def test_original_gates_kept_in_order_and_injected_are_fixed(placement):
    c = build_classifier(PQCSpec(3, 2, 2, "cycz"))
    d = apply_defense(c, DefensePlan(2, 2, placement, seed=4))
    trainable = [g for g in d.gates if g.trainable]
    assert trainable == list(c.gates)
    assert all(not g.trainable for g in d.gates if g not in c.gates or not g.trainable)
    # dummy qubits never share a two-qubit gate with the model
    for g in d.gates:
        if g.kind.num_qubits == 2:
            assert all(q < c.n_qubits for q in g.qubits)
    names = [r.name for r in d.regions]
    assert names.count("dummy_qubits") == 1 and "dummy_layer_1" in names


def test_interleave_positions():
    c = build_classifier(PQCSpec(2, 2))
    d = apply_defense(c, DefensePlan(dummy_layers=3, dummy_qubits=1, placement="interleave"))
    names = [r.name for r in d.regions]
    assert names == ["state_prep", "dummy_qubits", "ansatz_layer_0", "dummy_layer_0", "dummy_layer_2",
                     "ansatz_layer_1", "dummy_layer_1"]


def test_interleave_needs_ansatz_layers():
    c = Circuit(1, (Gate(GateKind.RX, (0,), 0.1),))
    with pytest.raises(CircuitError):
        apply_defense(c, DefensePlan(dummy_layers=1, placement="interleave"))


def test_append_without_regions_goes_before_measurements():
    c = Circuit(1, (Gate(GateKind.RX, (0,), 0.1), Gate(GateKind.MEASURE, (0,))))
    d = apply_defense(c, DefensePlan(dummy_layers=1))
    assert d.gates[-1].kind is GateKind.MEASURE


def test_plan_json_roundtrip_and_validation(tmp_path):
    plan = DefensePlan(1, 1, "interleave", 9, ((0.1, 0.2),), ((0.3, 0.4, 0.5),))
    path = tmp_path / "plan.json"
    path.write_text(json.dumps(plan.to_json()))
    assert DefensePlan.load(path) == plan
    with pytest.raises(ValueError):
        DefensePlan.from_json({"dummy_layer": 1})
    with pytest.raises(ValueError):
        DefensePlan(dummy_qubits=-1)
    with pytest.raises(ValueError):
        DefensePlan(placement="sprinkle")


def test_explicit_angles_are_used_verbatim():
    plan = DefensePlan(1, 1, layer_angles=((0.1, 0.2),), qubit_angles=((0.3, 0.4, 0.5),))
    d = apply_defense(Circuit(1, (Gate(GateKind.RZ, (0,), 1.0),)), plan)
    assert param_vector(d) == [1.0, 0.1, 0.2, 0.3, 0.4, 0.5]


def test_seeded_angles_are_reproducible_and_in_range():
    a = DefensePlan(2, 2, seed=3).resolve(2)
    assert a == DefensePlan(2, 2, seed=3).resolve(2)
    assert a != DefensePlan(2, 2, seed=4).resolve(2)
    assert all(-math.pi < v <= math.pi for block in a for row in block for v in row)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 3), st.integers(0, 3), st.sampled_from(["append", "interleave"]))
def test_indistinguishable_from_trainable_twin(seed, layers, qubits, placement):
    spec = PQCSpec(2, 2)
    defended = apply_defense(_bound(spec, seed), DefensePlan(layers, qubits, placement, seed))
    # rebuilt from scratch: same kinds, operands and angles, every flag at its default
    twin = Circuit(defended.n_qubits, tuple(Gate(g.kind, g.qubits, g.angle) for g in defended.gates),
                   defended.global_phase, defended.regions)
    assert emit(transpile(defended)) == emit(transpile(twin))
    assert twin == trainable_twin(defended)


def test_isolated_dummy_qubits_leave_expectations_unchanged():
    spec = PQCSpec(2, 2, 3, "cnot")
    rng = np.random.default_rng(1)
    for _ in range(50):
        x = rng.uniform(0, math.pi, 2)
        c = _bound(spec, 5, x)
        d = apply_defense(c, DefensePlan(dummy_qubits=2, seed=int(rng.integers(1000))))
        for q in range(2):
            before = z_expectations(statevector(c)[:, None], 2, q)[0]
            after = z_expectations(statevector(d)[:, None], 4, q)[0]
            assert after == pytest.approx(before, abs=1e-10)


def test_re_cost_examples():
    cfg = REConfig(step=0.1)
    assert estimate_re_cost(Circuit(1, (Gate(GateKind.RZ, (0,), 0.3),)), cfg) == 63
    two = Circuit(2, (Gate(GateKind.RZ, (0,), 0.3), Gate(GateKind.RZ, (1,), -0.7)))
    assert estimate_re_cost(two, cfg) == 126


def test_re_cost_grows_with_plan():
    base = _bound(PQCSpec(2, 3), 0)
    costs = {}
    for layers in range(3):
        for qubits in range(3):
            costs[layers, qubits] = estimate_re_cost(apply_defense(base, DefensePlan(layers, qubits, seed=2)))
    for (layers, qubits), cost in costs.items():
        if layers:
            assert cost >= costs[layers - 1, qubits]
        if qubits:
            assert cost >= costs[layers, qubits - 1]
    assert costs[2, 2] > costs[0, 0]


def test_symbolic_circuit_is_rejected_by_cost_estimate():
    c = Circuit(1, (Gate(GateKind.RZ, (0,), Parameter("t")),))
    with pytest.raises(CircuitError):
        estimate_re_cost(c)
