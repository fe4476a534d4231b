"""Small parameterized-circuit classifier used for functional-equivalence checks.

Architecture: an RY angle embedding of the features (one qubit per feature,
closed by a barrier), then ``n_layers`` ansatz layers of single-qubit rotations
followed by an entangler.  The prediction is label 1 when ``<Z>`` on qubit 0 is
negative.  Training minimises the mean squared error between ``<Z_0>`` and the
target ``1 - 2*label`` by full-batch gradient descent with parameter-shift
gradients on the exact simulator.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .circuit import Circuit, CircuitError, Gate, GateKind, Parameter, Region, bind, strip_state_prep
from .sim import apply_circuit, z_expectations

__all__ = [
    "ENTANGLERS",
    "PQCSpec",
    "Dataset",
    "TrainRecord",
    "build_classifier",
    "make_blobs",
    "weight_parameters",
    "embed",
    "expectations",
    "accuracy",
    "loss",
    "gradient",
    "train",
    "compare_models",
    "ansatz_of",
]

ENTANGLERS = ("cnot", "crz", "cycz", "none")
_DEFAULT_ROTATIONS = {1: ("ry",), 2: ("ry", "rz"), 3: ("rx", "ry", "rz")}
DATA_PREFIX = "x"
WEIGHT_PREFIX = "w"


@dataclass(frozen=True)
class PQCSpec:
    """Classifier architecture.

    ``rotations`` lists the per-qubit rotation gates of a layer in time order;
    by default it is derived from ``rotations_per_qubit`` (1: RY, 2: RY RZ,
    3: RX RY RZ).  Entanglers: ``cnot`` chains CNOT(i, i+1), ``crz`` cascades
    trainable CRZ(i, i+1), ``cycz`` alternates CY and CZ along the chain.
    """

    n_qubits: int
    n_layers: int
    rotations_per_qubit: int = 3
    entangler: str = "cnot"
    rotations: tuple[str, ...] | None = None

    def __post_init__(self):
        if not 1 <= self.n_qubits <= 8:
            raise CircuitError("classifier supports 1 to 8 qubits")
        if self.n_layers < 0:
            raise CircuitError("n_layers must be non-negative")
        if self.rotations_per_qubit not in (1, 2, 3):
            raise CircuitError("rotations_per_qubit must be 1, 2 or 3")
        if self.entangler not in ENTANGLERS:
            raise CircuitError(f"entangler must be one of {ENTANGLERS}")
        rots = self.rotations or _DEFAULT_ROTATIONS[self.rotations_per_qubit]
        rots = tuple(str(r).lower() for r in rots)
        if len(rots) != self.rotations_per_qubit or any(r not in ("rx", "ry", "rz") for r in rots):
            raise CircuitError(f"rotations {rots} do not fit rotations_per_qubit={self.rotations_per_qubit}")
        object.__setattr__(self, "rotations", rots)

    @property
    def n_params(self) -> int:
        extra = self.n_qubits - 1 if self.entangler == "crz" else 0
        return self.n_layers * (self.n_qubits * self.rotations_per_qubit + extra)

    def to_json(self) -> dict:
        return {"n_qubits": self.n_qubits, "n_layers": self.n_layers,
                "rotations_per_qubit": self.rotations_per_qubit, "entangler": self.entangler,
                "rotations": list(self.rotations)}

    @classmethod
    def from_json(cls, doc: dict) -> "PQCSpec":
        rots = doc.get("rotations")
        return cls(int(doc["n_qubits"]), int(doc["n_layers"]), int(doc.get("rotations_per_qubit", 3)),
                   doc.get("entangler", "cnot"), tuple(rots) if rots else None)


def _entangler(kind: str, n: int, counter: list[int]) -> list[Gate]:
    gates = []
    for i in range(n - 1):
        if kind == "cnot":
            gates.append(Gate(GateKind.CNOT, (i, i + 1)))
        elif kind == "cycz":
            gates.append(Gate(GateKind.CY if i % 2 == 0 else GateKind.CZ, (i, i + 1)))
        elif kind == "crz":
            gates.append(Gate(GateKind.CRZ, (i, i + 1), Parameter(f"{WEIGHT_PREFIX}{counter[0]}")))
            counter[0] += 1
    return gates


def build_classifier(spec: PQCSpec) -> Circuit:
    """Symbolic classifier; data angles are ``x<i>``, weights ``w<j>`` in gate order."""
    n = spec.n_qubits
    gates = [Gate(GateKind.RY, (q,), Parameter(f"{DATA_PREFIX}{q}")) for q in range(n)]
    gates.append(Gate(GateKind.BARRIER, tuple(range(n))))
    regions = [Region("state_prep", 0, len(gates))]
    counter = [0]
    for layer in range(spec.n_layers):
        start = len(gates)
        for q in range(n):
            for r in spec.rotations:
                gates.append(Gate(GateKind(r), (q,), Parameter(f"{WEIGHT_PREFIX}{counter[0]}")))
                counter[0] += 1
        gates.extend(_entangler(spec.entangler, n, counter))
        regions.append(Region(f"ansatz_layer_{layer}", start, len(gates)))
    return Circuit(n, tuple(gates), 0.0, tuple(regions))


def weight_parameters(c: Circuit) -> list[Parameter]:
    """Trainable symbolic parameters (everything except the data angles)."""
    return [p for p in c.parameters if not _is_data(p)]


def _is_data(p: Parameter) -> bool:
    return p.name.startswith(DATA_PREFIX) and p.name[len(DATA_PREFIX):].isdigit()


def ansatz_of(classifier: Circuit, weights: Sequence[float] | None = None) -> Circuit:
    """The classifier without its embedding, optionally with weights bound."""
    ansatz = strip_state_prep(classifier)
    if weights is not None:
        names = [p.name for p in weight_parameters(classifier)]
        if len(names) != len(weights):
            raise CircuitError(f"expected {len(names)} weights, got {len(weights)}")
        ansatz = bind(ansatz, dict(zip(names, map(float, weights))))
    return ansatz


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    train_fraction: float = 0.7

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels, dtype=int)
        if x.ndim != 2 or len(x) != len(y):
            raise ValueError("features must be (samples, n) and match labels")
        if not set(np.unique(y)) <= {0, 1}:
            raise ValueError("labels must be 0 or 1")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_train(self) -> int:
        return int(round(self.train_fraction * len(self.labels)))

    @property
    def train(self) -> tuple[np.ndarray, np.ndarray]:
        k = self.n_train
        return self.features[:k], self.labels[:k]

    @property
    def test(self) -> tuple[np.ndarray, np.ndarray]:
        k = self.n_train
        return self.features[k:], self.labels[k:]

    def save_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"x{i}" for i in range(self.n_features)] + ["label"])
            for row, lab in zip(self.features, self.labels):
                w.writerow([format(v, ".17g") for v in row] + [int(lab)])

    @classmethod
    def load_csv(cls, path: str | Path, train_fraction: float = 0.7) -> "Dataset":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0][-1].strip() != "label":
            raise ValueError(f"{path}: expected a header ending in 'label'")
        body = [r for r in rows[1:] if r]
        x = np.array([[float(v) for v in r[:-1]] for r in body])
        y = np.array([int(r[-1]) for r in body])
        return cls(x, y, train_fraction)


def make_blobs(n_samples: int, n_features: int, seed: int, spread: float = 0.6,
               train_fraction: float = 0.7) -> Dataset:
    """Two Gaussian blobs, min-max scaled per feature onto [0, pi], shuffled."""
    rng = np.random.default_rng(seed)
    half = n_samples // 2
    centres = rng.normal(size=(2, n_features))
    centres[1] = -centres[0]
    centres *= 1.5 / max(np.linalg.norm(centres[0]), 1e-9)
    y = np.array([0] * half + [1] * (n_samples - half))
    x = centres[y] + spread * rng.normal(size=(n_samples, n_features))
    lo, hi = x.min(axis=0), x.max(axis=0)
    x = math.pi * (x - lo) / np.where(hi > lo, hi - lo, 1.0)
    order = rng.permutation(n_samples)
    return Dataset(x[order], y[order], train_fraction)


def embed(features: np.ndarray, width: int) -> np.ndarray:
    """Product states RY(x_i)|0> on qubits 0..n-1 (remaining qubits |0>), as columns."""
    x = np.atleast_2d(np.asarray(features, dtype=float))
    if x.shape[1] > width:
        raise CircuitError(f"{x.shape[1]} features do not fit {width} qubits")
    states = np.ones((x.shape[0], 1), dtype=complex)
    for q in range(width - 1, -1, -1):
        if q < x.shape[1]:
            local = np.stack([np.cos(0.5 * x[:, q]), np.sin(0.5 * x[:, q])], axis=1)
        else:
            local = np.tile([1.0, 0.0], (x.shape[0], 1))
        # kron ordering: higher qubits are the more significant index bits.
        states = (states[:, :, None] * local[:, None, :]).reshape(x.shape[0], -1)
    return states.T


def expectations(ansatz: Circuit, features: np.ndarray) -> np.ndarray:
    """``<Z_0>`` after the embedding and a bound ansatz, per sample."""
    states = apply_circuit(ansatz, embed(features, ansatz.n_qubits))
    return z_expectations(states, ansatz.n_qubits, 0)


def predict(ansatz: Circuit, features: np.ndarray) -> np.ndarray:
    return (expectations(ansatz, features) < 0).astype(int)


def accuracy(ansatz: Circuit, features: np.ndarray, labels: np.ndarray) -> float:
    if len(labels) == 0:
        return 0.0
    return float(np.mean(predict(ansatz, features) == np.asarray(labels)))


def loss(ansatz: Circuit, features: np.ndarray, labels: np.ndarray) -> float:
    f = expectations(ansatz, features)
    return float(np.mean((f - (1 - 2 * np.asarray(labels))) ** 2))


# Four-term shift rule for CRZ, whose generator has eigenvalues {0, +-1/2}.
_CRZ_C_PLUS = (math.sqrt(2) + 1) / (4 * math.sqrt(2))
_CRZ_C_MINUS = (math.sqrt(2) - 1) / (4 * math.sqrt(2))


def _shifted(ansatz: Circuit, index: int, shift: float) -> Circuit:
    gates = list(ansatz.gates)
    g = gates[index]
    gates[index] = Gate(g.kind, g.qubits, g.angle + shift, g.trainable)
    return Circuit(ansatz.n_qubits, tuple(gates), ansatz.global_phase)


def _expectation_derivative(ansatz: Circuit, index: int, features: np.ndarray) -> np.ndarray:
    """d<Z_0>/d(angle of gate ``index``) by the parameter-shift rule."""
    if ansatz.gates[index].kind is GateKind.CRZ:
        s1 = math.pi / 2
        s3 = 3 * math.pi / 2
        return (_CRZ_C_PLUS * (expectations(_shifted(ansatz, index, s1), features)
                               - expectations(_shifted(ansatz, index, -s1), features))
                - _CRZ_C_MINUS * (expectations(_shifted(ansatz, index, s3), features)
                                  - expectations(_shifted(ansatz, index, -s3), features)))
    return 0.5 * (expectations(_shifted(ansatz, index, math.pi / 2), features)
                  - expectations(_shifted(ansatz, index, -math.pi / 2), features))


def _occurrences(classifier: Circuit) -> dict[str, list[int]]:
    """Weight name -> gate indices in the ansatz (state-prep removed)."""
    ansatz = strip_state_prep(classifier)
    occ: dict[str, list[int]] = {}
    for i, g in enumerate(ansatz.gates):
        if isinstance(g.angle, Parameter) and g.trainable and not _is_data(g.angle):
            occ.setdefault(g.angle.name, []).append(i)
    return occ


def gradient(classifier: Circuit, weights: Sequence[float], features: np.ndarray,
             labels: np.ndarray) -> np.ndarray:
    """dMSE/dw: the shift rule gives d<Z_0>/dw, chained through the squared error."""
    names = [p.name for p in weight_parameters(classifier)]
    ansatz = ansatz_of(classifier, weights)
    occ = _occurrences(classifier)
    f = expectations(ansatz, features)
    residual = 2.0 * (f - (1 - 2 * np.asarray(labels))) / len(labels)
    grad = np.zeros(len(names))
    for j, name in enumerate(names):
        for idx in occ.get(name, []):
            grad[j] += float(residual @ _expectation_derivative(ansatz, idx, features))
    return grad


@dataclass
class TrainRecord:
    losses: list[float]
    train_accuracy: float
    test_accuracy: float
    weights: list[float]
    initial_weights: list[float]
    seed: int
    lr: float
    epochs: int
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "losses": self.losses,
            "train_accuracy": self.train_accuracy,
            "test_accuracy": self.test_accuracy,
            "weights": self.weights,
            "initial_weights": self.initial_weights,
            "seed": self.seed,
            "lr": self.lr,
            "epochs": self.epochs,
            **self.extra,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")


def train(model: PQCSpec | Circuit, data: Dataset, epochs: int = 60, lr: float = 0.05,
          seed: int = 0, initial_weights: Sequence[float] | None = None) -> TrainRecord:
    """Full-batch gradient descent on the MSE loss.

    ``model`` is a spec or a symbolic classifier circuit (for example a
    defended one).  Only symbolic weights on trainable gates move; fixed
    numeric angles are never touched.  ``losses[e]`` is the loss before epoch
    ``e``; the last entry is the final loss.
    """
    classifier = build_classifier(model) if isinstance(model, PQCSpec) else model
    n_in = sum(1 for p in classifier.parameters if _is_data(p))
    if data.n_features != n_in:
        raise ValueError(f"dataset has {data.n_features} features, classifier expects {n_in}")
    names = weight_parameters(classifier)
    rng = np.random.default_rng(seed)
    if initial_weights is None:
        w = rng.uniform(-math.pi, math.pi, len(names))
    else:
        w = np.asarray(initial_weights, dtype=float).copy()
        if len(w) != len(names):
            raise ValueError(f"expected {len(names)} initial weights, got {len(w)}")
    w0 = w.copy()
    x, y = data.train
    losses = []
    for _ in range(epochs):
        losses.append(loss(ansatz_of(classifier, w), x, y))
        w = w - lr * gradient(classifier, w, x, y)
    final = ansatz_of(classifier, w)
    losses.append(loss(final, x, y))
    xt, yt = data.test
    return TrainRecord(losses, accuracy(final, x, y), accuracy(final, xt, yt),
                       w.tolist(), w0.tolist(), seed, lr, epochs)


def compare_models(original: Circuit, recovered: Circuit, data: Dataset) -> float:
    """Absolute test-accuracy gap between two bound ansatz circuits."""
    xt, yt = data.test
    return abs(accuracy(original, xt, yt) - accuracy(recovered, xt, yt))
