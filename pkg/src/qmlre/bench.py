"""Experiment harness: desk-scale trend studies written as CSV.

Every trial trains a classifier on a seeded blob dataset, binds one test
sample into the embedding, transpiles, reverse-engineers the result against
the known truth and records parameter errors, search effort and the test
accuracy gap between the original and recovered models.  Everything except
``elapsed_seconds`` is a deterministic function of the seed.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from . import __version__
from .circuit import Circuit, bind
from .defense import DefensePlan, apply_defense
from .qnn import (PQCSpec, Dataset, TrainRecord, ansatz_of, build_classifier, compare_models, make_blobs, train,
                  weight_parameters)
from .reverse.engine import REConfig, reverse
from .transpiler.passes import transpile

__all__ = ["EXPERIMENTS", "SEED_ENV", "COLUMNS", "BenchResult", "TrialConfig", "run_trial", "bench_suite",
           "default_seed", "suite_configs", "read_csv", "mean_by"]

EXPERIMENTS = ("error-table", "step-size", "layer-time", "defense-overhead")
SEED_ENV = "QMLRE_SEED"
COLUMNS = (
    "experiment", "n_qubits", "n_layers", "rotations", "entangler", "dummy_layers", "dummy_qubits",
    "placement", "step", "mode", "n_params", "mean_error", "sd_error", "candidates_evaluated",
    "elapsed_seconds", "accuracy_gap", "train_accuracy", "test_accuracy", "seed", "per_param_errors",
)
N_SAMPLES = 200
EPOCHS = 40


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


@dataclass(frozen=True, order=True)
class TrialConfig:
    n_qubits: int
    n_layers: int
    rotations: int
    entangler: str = "cnot"
    dummy_layers: int = 0
    dummy_qubits: int = 0
    placement: str = "append"
    step: float = 0.1
    mode: str = "brute"

    @property
    def spec(self) -> PQCSpec:
        return PQCSpec(self.n_qubits, self.n_layers, self.rotations, self.entangler)

    @property
    def plan(self) -> DefensePlan:
        return DefensePlan(self.dummy_layers, self.dummy_qubits, self.placement)


def _pqc(n_qubits: int, n_layers: int) -> TrialConfig:
    # 3 rotations per qubit up to 2 qubits, 2 beyond: 6/12/18 and 8/16 parameters.
    rotations = 3 if n_qubits <= 2 else 2
    return TrialConfig(n_qubits, n_layers, rotations, "none" if n_qubits == 1 else "cnot")


def suite_configs(name: str, expensive: bool = False) -> list[TrialConfig]:
    if name == "error-table":
        sizes = [(1, 1), (2, 1), (2, 2), (2, 3), (4, 1), (4, 2)]
        if expensive:
            sizes += [(4, 3), (8, 1), (8, 2), (8, 3)]
        return [_pqc(n, l) for n, l in sizes]
    if name == "step-size":
        steps = [0.1, 0.01] + ([0.001] if expensive else [])
        return [TrialConfig(1, 1, 3, "none", step=s) for s in steps]
    if name == "layer-time":
        layers = [1, 2, 4] + ([8, 16] if expensive else [])
        return [_pqc(2, l) for l in layers]
    if name == "defense-overhead":
        base = _pqc(2, 3)
        plans = [(0, 0), (1, 0), (0, 1), (1, 1), (2, 2)]
        if expensive:
            plans += [(0, 8), (4, 4)]
        return [TrialConfig(base.n_qubits, base.n_layers, base.rotations, base.entangler, dl, dq)
                for dl, dq in plans]
    raise ValueError(f"unknown experiment {name!r}; expected one of {EXPERIMENTS}")


@dataclass
class _Trained:
    classifier: Circuit
    data: Dataset
    record: TrainRecord


def _train_model(cfg: TrialConfig, seed: int, epochs: int) -> _Trained:
    data = make_blobs(N_SAMPLES, cfg.n_qubits, seed)
    classifier = apply_defense(build_classifier(cfg.spec), DefensePlan(
        cfg.dummy_layers, cfg.dummy_qubits, cfg.placement, seed))
    return _Trained(classifier, data, train(classifier, data, epochs, seed=seed))


def run_trial(cfg: TrialConfig, seed: int, epochs: int = EPOCHS,
              trained: _Trained | None = None) -> dict:
    """One bench row for ``cfg`` at ``seed``."""
    trained = trained or _train_model(cfg, seed, epochs)
    clf, data, rec = trained.classifier, trained.data, trained.record
    weights = dict(zip((p.name for p in weight_parameters(clf)), rec.weights))
    sample = data.test[0][0] if len(data.test[0]) else data.features[0]
    victim = bind(clf, {**{f"x{i}": float(v) for i, v in enumerate(sample)}, **weights})
    re_cfg = REConfig(step=cfg.step, mode=cfg.mode)
    report = reverse(transpile(victim, re_cfg.transpile), re_cfg, ground_truth=victim)
    if report.per_param_error is None:
        raise RuntimeError(f"no per-parameter error for {cfg}: {report.diagnostics}")
    ansatz = ansatz_of(clf, rec.weights)
    gap = compare_models(ansatz, report.recovered, data)
    n_params = sum(1 for g in ansatz.gates if g.kind.has_angle)
    return {
        "experiment": None,
        "n_qubits": cfg.n_qubits,
        "n_layers": cfg.n_layers,
        "rotations": cfg.rotations,
        "entangler": cfg.entangler,
        "dummy_layers": cfg.dummy_layers,
        "dummy_qubits": cfg.dummy_qubits,
        "placement": cfg.placement,
        "step": cfg.step,
        "mode": cfg.mode,
        "n_params": n_params,
        "mean_error": report.mean_error,
        "sd_error": report.sd_error,
        "candidates_evaluated": report.candidates_evaluated,
        "elapsed_seconds": report.elapsed_seconds,
        "accuracy_gap": gap,
        "train_accuracy": rec.train_accuracy,
        "test_accuracy": rec.test_accuracy,
        "seed": seed,
        "per_param_errors": list(report.per_param_error),
    }


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, list):
        return ";".join(format(v, ".17g") for v in value)
    return str(value)


@dataclass
class BenchResult:
    experiment: str
    rows: list[dict]
    seeds: tuple[int, ...]
    version: str = __version__
    extra: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        return [r[name] for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(r[c]) for c in COLUMNS])
        return buf.getvalue()

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())


def read_csv(path: str | Path) -> list[dict]:
    """Rows of a bench CSV with numeric fields parsed back."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    ints = ("n_qubits", "n_layers", "rotations", "dummy_layers", "dummy_qubits", "n_params",
            "candidates_evaluated", "seed")
    floats = ("step", "mean_error", "sd_error", "elapsed_seconds", "accuracy_gap", "train_accuracy",
              "test_accuracy")
    for r in rows:
        for k in ints:
            r[k] = int(r[k])
        for k in floats:
            r[k] = float(r[k])
        r["per_param_errors"] = [float(v) for v in r["per_param_errors"].split(";") if v]
    return rows


def bench_suite(name: str, seeds: Iterable[int] | None = None, out: str | Path | None = None,
                expensive: bool = False, epochs: int = EPOCHS) -> BenchResult:
    """Run every configuration of ``name`` for every seed; rows sorted by (config, seed)."""
    configs = suite_configs(name, expensive)
    seeds = tuple(sorted(set(seeds))) if seeds is not None else (default_seed(),)
    if not seeds:
        raise ValueError("at least one seed is required")
    rows = []
    cache: dict = {}
    for cfg in sorted(configs):
        for seed in seeds:
            # Step sweeps reuse the trained model: only the attack changes.
            key = (cfg.spec, cfg.plan, seed)
            if key not in cache:
                cache[key] = _train_model(cfg, seed, epochs)
            row = run_trial(cfg, seed, epochs, cache[key])
            row["experiment"] = name
            for k in ("mean_error", "sd_error", "accuracy_gap"):
                if not math.isfinite(row[k]):
                    raise RuntimeError(f"non-finite {k} in {name} row {cfg}")
            rows.append(row)
    result = BenchResult(name, rows, seeds)
    if out is not None:
        result.save(out)
    return result


def mean_by(rows: list[dict], key: str, value: str = "mean_error") -> dict:
    """Average of ``value`` over seeds, grouped by ``key`` (a column or tuple of columns)."""
    keys = (key,) if isinstance(key, str) else tuple(key)
    groups: dict = {}
    for r in rows:
        groups.setdefault(tuple(r[k] for k in keys), []).append(r[value])
    return {k if len(keys) > 1 else k[0]: float(np.mean(v)) for k, v in groups.items()}
