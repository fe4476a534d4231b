"""End-to-end reverse engineering of a transpiled circuit."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..circuit import (
    Circuit,
    CircuitError,
    Gate,
    angle_distance,
    param_vector,
    segment_by_two_qubit_gates,
    strip_state_prep,
)
from ..qasm import emit
from ..sim import MAX_QUBITS, fidelity_up_to_phase, unitary
from ..transpiler.coupling import CouplingMap
from ..transpiler.passes import BASIS, TranspileConfig, transpile
from .entanglement import GateItem, recover_entanglement
from .lut import LUT, default_lut, match_pattern
from .params import DISTANCES, aligned_errors, analytic_params, brute_force_params, hybrid_params, template_delta

__all__ = ["MODES", "REConfig", "RunRecovery", "REReport", "reverse", "extract_runs"]

MODES = ("brute", "analytic", "hybrid")


@dataclass(frozen=True)
class REConfig:
    step: float = 0.1
    mode: str = "brute"
    distance: str = "l1"
    early_stop_eps: float = 1e-9
    search_range: tuple[float, float] = (-math.pi, math.pi)
    transpile: TranspileConfig = field(default_factory=TranspileConfig)

    def __post_init__(self):
        if not (0 < self.step <= math.pi):
            raise ValueError(f"step must lie in (0, pi], got {self.step}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.distance not in DISTANCES:
            raise ValueError(f"distance must be one of {DISTANCES}")
        if tuple(self.search_range) != (-math.pi, math.pi):
            raise ValueError("only the [-pi, pi] search range is supported")


@dataclass(frozen=True)
class RunRecovery:
    qubit: int
    tokens: tuple[Gate, ...]
    entry: str | None
    params: tuple[float, ...]
    delta: float
    candidates_evaluated: int

    @property
    def matched(self) -> bool:
        return self.entry is not None


@dataclass
class REReport:
    recovered: Circuit
    runs: list[RunRecovery]
    candidates_evaluated: int
    elapsed_seconds: float
    fidelity_vs_target: float
    per_param_error: list[float] | None = None
    mean_error: float | None = None
    sd_error: float | None = None
    structure_exact: bool | None = None
    diagnostics: list[str] = field(default_factory=list)

    @property
    def unmatched_runs(self) -> list[RunRecovery]:
        return [r for r in self.runs if not r.matched]

    @property
    def n_params(self) -> int:
        return len(param_vector(self.recovered))

    def to_json(self) -> dict:
        return {
            "recovered_qasm": emit(self.recovered),
            "mean_error": self.mean_error,
            "sd_error": self.sd_error,
            "per_param_error": self.per_param_error,
            "elapsed_seconds": self.elapsed_seconds,
            "candidates_evaluated": self.candidates_evaluated,
            "fidelity_vs_target": self.fidelity_vs_target,
            "n_params": self.n_params,
            "structure_exact": self.structure_exact,
            "unmatched_runs": [
                {"qubit": r.qubit, "tokens": [repr(g) for g in r.tokens]} for r in self.unmatched_runs
            ],
            "runs": [
                {"qubit": r.qubit, "template": r.entry, "params": list(r.params),
                 "delta": r.delta if math.isfinite(r.delta) else None,
                 "candidates_evaluated": r.candidates_evaluated}
                for r in self.runs
            ],
            "diagnostics": list(self.diagnostics),
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")


def _recover_run(run: tuple[Gate, ...], qubit: int, cfg: REConfig, lut: LUT) -> RunRecovery:
    matches = match_pattern(run, lut)
    if not matches:
        return RunRecovery(qubit, run, None, (), math.inf, 0)
    evaluated = 0
    best = None
    for m in matches:
        entry = m.entry
        if cfg.mode == "analytic":
            if entry.analytic_inverse is None:
                continue
            params = analytic_params(entry, run)
            d = template_delta(entry, params, run, cfg.distance)
            evaluated += 1
        else:
            search = brute_force_params if cfg.mode == "brute" else hybrid_params
            res = search(entry, run, cfg.step, cfg.early_stop_eps, cfg.distance)
            params, d = res.params, res.delta
            evaluated += res.candidates_evaluated
        if best is None or d < best[0]:
            best = (d, entry, params)
        if d < cfg.early_stop_eps:
            break
    if best is None:
        return RunRecovery(qubit, run, None, (), math.inf, evaluated)
    d, entry, params = best
    return RunRecovery(qubit, run, entry.name, tuple(params), d, evaluated)


def _check_basis(c: Circuit) -> None:
    for g in c.gates:
        if g.kind not in BASIS and not g.kind.is_directive:
            raise CircuitError(f"{g!r} is not a basis gate; reverse expects transpiled input")


def _strip(c: Circuit) -> Circuit:
    return strip_state_prep(c) if c.region("state_prep") is not None else c


def _coupling_for(cfg: REConfig, n: int) -> CouplingMap:
    cm = cfg.transpile.coupling_for(n)
    if cm.n_physical != n:
        raise CircuitError(f"transpiled width {n} does not match coupling map size {cm.n_physical}")
    return cm


def extract_runs(transpiled: Circuit, cfg: REConfig):
    """Entanglement recovery on the stripped target; shared with cost estimation."""
    target = _strip(transpiled)
    _check_basis(target)
    n = target.n_qubits
    coupling = _coupling_for(cfg, n)
    layout = cfg.transpile.layout_for(n)
    return target, recover_entanglement(segment_by_two_qubit_gates(target), coupling, layout)


def reverse(transpiled: Circuit, cfg: REConfig | None = None, lut: LUT | None = None,
            ground_truth: Circuit | None = None) -> REReport:
    """Recover a logical circuit from its transpiled form.

    The state-prep region, when marked, is removed first.  With
    ``ground_truth`` (the victim's pre-transpilation circuit) the report carries
    per-parameter errors, measured between the transpiled angle vectors of the
    recovered circuit and of the truth.
    """
    cfg = cfg or REConfig()
    lut = lut or default_lut()
    start = time.perf_counter()
    target, rec = extract_runs(transpiled, cfg)
    gates: list[Gate] = []
    runs: list[RunRecovery] = []
    for item in rec.items:
        if isinstance(item, GateItem):
            gates.append(item.gate)
            continue
        if not item.gates:
            continue
        r = _recover_run(item.gates, item.qubit, cfg, lut)
        runs.append(r)
        if r.matched:
            gates.extend(lut.entry(r.entry).gates(r.params, item.qubit))
        else:
            gates.extend(item.gates)
    recovered = Circuit(target.n_qubits, tuple(gates))
    elapsed = time.perf_counter() - start

    diagnostics = list(rec.diagnostics)
    for r in runs:
        if not r.matched:
            diagnostics.append(f"unmatched run on qubit {r.qubit}: {list(r.tokens)}")
    re_transpiled = transpile(recovered, cfg.transpile)
    fidelity = math.nan
    if target.n_qubits <= MAX_QUBITS:
        fidelity = fidelity_up_to_phase(unitary(re_transpiled), unitary(target))
    report = REReport(recovered, runs, sum(r.candidates_evaluated for r in runs), elapsed,
                      fidelity, diagnostics=diagnostics)
    if ground_truth is not None:
        _score_against_truth(report, re_transpiled, ground_truth, cfg)
    return report


def _theta_errors(got: Circuit, truth: Circuit) -> list[float] | None:
    """Per-parameter errors between two transpiled circuits, in circuit order.

    Fused runs are aligned one to one and compared at every RZ the truth
    emits (a zero RZ dropped on either side counts as angle 0).  Unfused
    input falls back to the flat angle vectors.  ``None`` when the two do not
    line up.
    """
    sa, sb = segment_by_two_qubit_gates(got), segment_by_two_qubit_gates(truth)
    if [(g.kind, g.qubits) for g in sa.skeleton] != [(g.kind, g.qubits) for g in sb.skeleton]:
        return None
    pairs = []
    cursor = [0] * truth.n_qubits
    for anchor in sb.skeleton:
        for q in anchor.qubits:
            pairs.append((sa.runs[q][cursor[q]], sb.runs[q][cursor[q]]))
            cursor[q] += 1
    for q in range(truth.n_qubits):
        pairs.append((sa.runs[q][cursor[q]], sb.runs[q][cursor[q]]))
    try:
        return [e for ra, rb in pairs for e in aligned_errors(ra, rb)]
    except ValueError:
        a, b = param_vector(got), param_vector(truth)
        if len(a) != len(b):
            return None
        return [angle_distance(x, y) for x, y in zip(a, b)]


def _score_against_truth(report: REReport, re_transpiled: Circuit, truth: Circuit, cfg: REConfig) -> None:
    truth_t = _strip(transpile(truth, cfg.transpile))
    errs = _theta_errors(re_transpiled, truth_t)
    if errs is None:
        report.diagnostics.append("transpiled structure differs from truth; no per-parameter error")
    else:
        report.per_param_error = errs
        if errs:
            report.mean_error = float(np.mean(errs))
            report.sd_error = float(np.std(errs))
        else:
            report.mean_error = report.sd_error = 0.0
    truth_2q = [(g.kind, g.qubits) for g in _strip(truth).gates if g.kind.num_qubits == 2]
    got_2q = [(g.kind, g.qubits) for g in report.recovered.gates if g.kind.num_qubits == 2]
    report.structure_exact = truth_2q == got_2q
