import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmlre.circuit import Circuit, CircuitError, Gate, GateKind, bind
from qmlre.defense import DefensePlan, apply_defense
from qmlre.qnn import (
    Dataset,
    PQCSpec,
    accuracy,
    ansatz_of,
    build_classifier,
    compare_models,
    expectations,
    gradient,
    loss,
    make_blobs,
    predict,
    train,
    weight_parameters,
)
from qmlre.sim import statevector, z_expectations


@pytest.mark.parametrize("spec,count", [
    (PQCSpec(2, 1, 3, "crz"), 7),
    (PQCSpec(2, 1, 3, "cnot"), 6),
    (PQCSpec(1, 1, 3, "none"), 3),
    (PQCSpec(4, 1, 2, "cnot"), 8),
    (PQCSpec(2, 3, 3, "cycz"), 18),
])
def test_parameter_counts(spec, count):
    clf = build_classifier(spec)
    assert spec.n_params == count == len(weight_parameters(clf))


def test_one_qubit_shape_and_regions():
    clf = build_classifier(PQCSpec(1, 1, 3, "none"))
    assert [g.kind for g in clf.gates] == [GateKind.RY, GateKind.BARRIER, GateKind.RX, GateKind.RY, GateKind.RZ]
    assert [r.name for r in clf.regions] == ["state_prep", "ansatz_layer_0"]


def test_crz_cascade_and_custom_rotations():
    clf = build_classifier(PQCSpec(3, 1, 2, "crz", ("rx", "rz")))
    kinds = [g.kind for g in clf.gates if g.kind is not GateKind.BARRIER]
    assert kinds[3:] == [GateKind.RX, GateKind.RZ] * 3 + [GateKind.CRZ] * 2


@pytest.mark.parametrize("kwargs", [dict(n_qubits=9, n_layers=1), dict(n_qubits=2, n_layers=1, entangler="ring"),
                                    dict(n_qubits=2, n_layers=1, rotations_per_qubit=4),
                                    dict(n_qubits=2, n_layers=1, rotations_per_qubit=2, rotations=("rx",))])
def test_invalid_spec(kwargs):
    with pytest.raises(CircuitError):
        PQCSpec(**kwargs)


def test_spec_json_roundtrip():
    spec = PQCSpec(4, 2, 2, "cycz", ("rx", "ry"))
    assert PQCSpec.from_json(json.loads(json.dumps(spec.to_json()))) == spec


def _random_weights(clf, seed):
    return np.random.default_rng(seed).uniform(-math.pi, math.pi, len(weight_parameters(clf)))


def test_expectations_match_full_circuit_simulation():
    spec = PQCSpec(3, 2, 3, "crz")
    clf = build_classifier(spec)
    w = _random_weights(clf, 1)
    x = np.random.default_rng(2).uniform(0, math.pi, (5, 3))
    ansatz = ansatz_of(clf, w)
    names = [p.name for p in weight_parameters(clf)]
    for row, got in zip(x, expectations(ansatz, x)):
        full = bind(clf, {**dict(zip(names, w)), **{f"x{q}": v for q, v in enumerate(row)}})
        want = z_expectations(statevector(full)[:, None], 3, 0)[0]
        assert got == pytest.approx(want, abs=1e-12)


def test_prediction_sign_rule():
    flip = Circuit(1, (Gate(GateKind.X, (0,)),))
    x = np.zeros((1, 1))
    assert predict(flip, x)[0] == 1 and predict(Circuit(1), x)[0] == 0
    assert loss(Circuit(1), x, np.array([0])) == 0.0
    assert loss(flip, x, np.array([0])) == 4.0


@pytest.mark.parametrize("entangler", ["cnot", "crz", "cycz"])
@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_parameter_shift_matches_finite_difference(entangler, seed):
    clf = build_classifier(PQCSpec(2, 2, 3, entangler))
    rng = np.random.default_rng(seed)
    w = rng.uniform(-math.pi, math.pi, len(weight_parameters(clf)))
    x = rng.uniform(0, math.pi, (6, 2))
    y = rng.integers(0, 2, 6)
    g = gradient(clf, w, x, y)
    h = 1e-5
    for i in range(len(w)):
        e = np.zeros_like(w)
        e[i] = h
        fd = (loss(ansatz_of(clf, w + e), x, y) - loss(ansatz_of(clf, w - e), x, y)) / (2 * h)
        assert abs(g[i] - fd) <= 1e-4


def test_weight_shared_by_two_gates_sums_contributions():
    from qmlre.circuit import Parameter, Region
    t = Parameter("w0")
    gates = (Gate(GateKind.RY, (0,), Parameter("x0")), Gate(GateKind.BARRIER, (0,)),
             Gate(GateKind.RY, (0,), t), Gate(GateKind.RX, (0,), t))
    clf = Circuit(1, gates, 0.0, (Region("state_prep", 0, 2),))
    x, y = np.array([[0.4], [2.0]]), np.array([0, 1])
    w = np.array([0.7])
    fd = (loss(ansatz_of(clf, w + 1e-6), x, y) - loss(ansatz_of(clf, w - 1e-6), x, y)) / 2e-6
    assert gradient(clf, w, x, y)[0] == pytest.approx(fd, abs=1e-6)


@pytest.fixture(scope="module")
def blobs():
    return make_blobs(200, 2, seed=0)


def test_blobs_shape_and_range(blobs):
    assert blobs.features.shape == (200, 2)
    assert blobs.features.min() >= 0 and blobs.features.max() <= math.pi
    assert set(blobs.labels) == {0, 1} and blobs.labels.sum() == 100
    assert blobs.n_train == 140


def test_dataset_csv_roundtrip(tmp_path, blobs):
    path = tmp_path / "d.csv"
    blobs.save_csv(path)
    assert path.read_text().splitlines()[0] == "x0,x1,label"
    back = Dataset.load_csv(path)
    assert np.array_equal(back.features, blobs.features) and np.array_equal(back.labels, blobs.labels)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.zeros((3, 2)), np.array([0, 1, 2]))
    with pytest.raises(ValueError):
        Dataset(np.zeros((3, 2)), np.array([0, 1]))


def test_training_reaches_high_accuracy(blobs):
    rec = train(PQCSpec(2, 1, 3, "cnot"), blobs, epochs=60, seed=0)
    assert rec.train_accuracy > 0.85
    assert len(rec.losses) == 61 and all(math.isfinite(v) for v in rec.losses)
    assert rec.losses[-1] < rec.losses[0]


def test_zero_epochs_returns_initial_weights(blobs):
    rec = train(PQCSpec(2, 1), blobs, epochs=0, seed=3)
    assert rec.weights == rec.initial_weights and len(rec.losses) == 1


def test_training_is_deterministic(blobs):
    a = train(PQCSpec(2, 1), blobs, epochs=5, seed=7)
    b = train(PQCSpec(2, 1), blobs, epochs=5, seed=7)
    assert a.to_json() == b.to_json()


def test_fixed_angles_are_frozen(blobs):
    clf = apply_defense(build_classifier(PQCSpec(2, 1)), DefensePlan(1, 1, seed=2))
    fixed_before = [g.angle for g in clf.gates if not g.trainable and g.angle is not None]
    rec = train(clf, blobs, epochs=3, seed=0)
    final = ansatz_of(clf, rec.weights)
    fixed_after = [g.angle for g in final.gates if not g.trainable and g.angle is not None]
    assert fixed_after == fixed_before
    assert len(rec.weights) == 6


def test_feature_dimension_mismatch(blobs):
    with pytest.raises(ValueError):
        train(PQCSpec(3, 1), blobs, epochs=1)


def test_compare_models(blobs):
    clf = build_classifier(PQCSpec(2, 1))
    a = ansatz_of(clf, _random_weights(clf, 0))
    assert compare_models(a, a, blobs) == 0.0
    xt, yt = blobs.test
    b = ansatz_of(clf, _random_weights(clf, 1))
    assert compare_models(a, b, blobs) == pytest.approx(abs(accuracy(a, xt, yt) - accuracy(b, xt, yt)))
