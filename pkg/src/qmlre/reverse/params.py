"""Parameter extraction for a matched run: grid search and analytic inversion.

Grid search enumerates ``{-pi, -pi + N, ...}^k`` (points below +pi) in
lexicographic order, transpiles the bound template for every point and keeps
the point whose transpiled angles are closest to the target's.  Ties go to
the lexicographically smallest point; a candidate within ``early_stop_eps``
ends the search.

Runs are compared through a padded signature: the shape family (two SX, one
X, or none) plus the RZ angles placed at fixed positions (before, between and
after the SX pair), with dropped near-zero RZs read as 0.  Degenerate shapes
therefore score continuously against their generic neighbours, and runs of
different families are infinitely far apart.

Two evaluation routes produce the same numbers.  ``_scan_full`` builds every
template unitary and runs the batch Euler synthesis on it.  ``_scan_factored``
applies when the template ends in a free RZ: that RZ only shifts the last
emitted angle, so the synthesis runs once per prefix and the last slot is
swept by broadcasting.  Every grid point is still scored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..circuit import Gate, GateKind, angle_distance
from ..transpiler.euler import SHAPES, ZERO_ANGLE_TOL, canonicalize_array, euler_batch, euler_zxzxz
from .lut import LUTEntry, run_unitary, template_unitaries

__all__ = [
    "DISTANCES",
    "SearchResult",
    "grid_points",
    "delta",
    "brute_force_params",
    "analytic_params",
    "hybrid_params",
    "run_signature",
    "template_delta",
    "padded_signature",
    "aligned_errors",
    "AnalyticUnavailable",
]

DISTANCES = ("l1", "linf")
_CHUNK = 1 << 20  # scored candidates per numpy batch

_WIDTH = 3
# Shape code -> (family, padded column of each emitted RZ angle).  Column 2 is
# always the trailing RZ; families: 0 = SX..SX, 1 = X, 2 = RZ only.
_LAYOUT = {
    0: (2, ()), 1: (2, (2,)), 2: (1, ()), 3: (1, (2,)),
    4: (0, (1,)), 5: (0, (0, 1)), 6: (0, (1, 2)), 7: (0, (0, 1, 2)),
}
_FAMILY = np.array([_LAYOUT[c][0] for c in range(8)])


class AnalyticUnavailable(ValueError):
    pass


@dataclass(frozen=True)
class SearchResult:
    params: tuple[float, ...]
    delta: float
    candidates_evaluated: int


def grid_points(step: float) -> np.ndarray:
    """``-pi + i*step`` for every i with the point strictly below +pi."""
    if not (0 < step <= math.pi):
        raise ValueError(f"step must lie in (0, pi], got {step}")
    count = math.ceil(2 * math.pi / step)
    pts = -math.pi + step * np.arange(count + 1)
    return pts[pts < math.pi - 1e-12]


def delta(a: Sequence[float], b: Sequence[float], metric: str = "l1") -> float:
    """Wrapped angular distance between parameter vectors; +inf on length mismatch."""
    if len(a) != len(b):
        return math.inf
    d = [angle_distance(x, y) for x, y in zip(a, b)]
    if not d:
        return 0.0
    return max(d) if metric == "linf" else math.fsum(d)


def run_signature(run: Sequence[Gate]) -> tuple[int, tuple[float, ...]]:
    """(shape code, RZ angles) of a canonical fused run."""
    kinds = tuple(g.kind for g in run)
    for code, shape in SHAPES.items():
        if shape == kinds:
            return code, tuple(g.angle for g in run if g.kind is GateKind.RZ)
    raise ValueError(f"run {list(run)} is not a canonical fused shape")


def padded_signature(code: int, angles: Sequence[float]) -> tuple[int, tuple[float, ...]]:
    """(family, three padded RZ angles) for a shape code and its emitted angles."""
    family, cols = _LAYOUT[code]
    out = [0.0] * _WIDTH
    for c, a in zip(cols, angles):
        out[c] = float(a)
    return family, tuple(out)


def aligned_errors(got_run: Sequence[Gate], truth_run: Sequence[Gate]) -> list[float]:
    """Wrapped angle differences at each RZ position ``truth_run`` emits.

    Positions the other run dropped as zero are read as 0.  Raises
    ``ValueError`` when the runs belong to different shape families.
    """
    fam_a, pa = padded_signature(*run_signature(got_run))
    code_b, angles_b = run_signature(truth_run)
    fam_b, pb = padded_signature(code_b, angles_b)
    if fam_a != fam_b:
        raise ValueError("runs belong to different shape families")
    return [angle_distance(pa[c], pb[c]) for c in _LAYOUT[code_b][1]]


def _padded_batch(codes: np.ndarray, angles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    out = np.zeros((len(codes), _WIDTH))
    for code, (_, cols) in _LAYOUT.items():
        rows = codes == code
        for i, c in enumerate(cols):
            out[rows, c] = angles[rows, i]
    return _FAMILY[codes], out


def _wrapped(d: np.ndarray) -> np.ndarray:
    return np.abs(canonicalize_array(d))


def _combine(parts: list[np.ndarray], metric: str) -> np.ndarray:
    stack = np.stack(parts)
    return stack.max(axis=0) if metric == "linf" else stack.sum(axis=0)


def _score(codes: np.ndarray, angles: np.ndarray, family: int, target: np.ndarray, metric: str) -> np.ndarray:
    fam, pad = _padded_batch(codes, angles)
    d = _combine([_wrapped(pad[:, i] - target[i]) for i in range(_WIDTH)], metric)
    return np.where(fam == family, d, np.inf)


def _lex_grid(pts: np.ndarray, k: int, start: int, stop: int) -> np.ndarray:
    """Rows ``start:stop`` of the lexicographic product ``pts^k`` as an (m, k) array."""
    idx = np.arange(start, stop)
    g = len(pts)
    out = np.empty((len(idx), k))
    for j in range(k - 1, -1, -1):
        out[:, j] = pts[idx % g]
        idx = idx // g
    return out


def _scan_full(entry: LUTEntry, family: int, target: np.ndarray, pts: np.ndarray, eps: float, metric: str):
    k = entry.k
    total = len(pts) ** k
    best = (math.inf, 0)
    for start in range(0, total, _CHUNK):
        stop = min(total, start + _CHUNK)
        params = _lex_grid(pts, k, start, stop)
        codes, angles = euler_batch(template_unitaries(entry.template, params))
        d = _score(codes, angles, family, target, metric)
        hit = np.flatnonzero(d < eps)
        if hit.size:
            i = int(hit[0])
            return start + i, float(d[i]), start + i + 1
        i = int(np.argmin(d))
        if d[i] < best[0]:
            best = (float(d[i]), start + i)
    return best[1], best[0], total


def _factorable(entry: LUTEntry) -> bool:
    t = entry.template
    k = entry.k
    return (k >= 2 and t[-1].kind is GateKind.RZ and t[-1].slot == k - 1
            and all(g.slot != k - 1 for g in t[:-1]))


def _scan_factored(entry: LUTEntry, family: int, target: np.ndarray, pts: np.ndarray, eps: float, metric: str):
    k = entry.k
    g = len(pts)
    total = g ** k
    n_prefix = g ** (k - 1)
    rows_per_chunk = max(1, _CHUNK // g)
    best = (math.inf, 0)
    prefix_tmpl = entry.template[:-1]
    for start in range(0, n_prefix, rows_per_chunk):
        stop = min(n_prefix, start + rows_per_chunk)
        params = _lex_grid(pts, k - 1, start, stop)
        pfam, ppad = _padded_batch(*euler_batch(template_unitaries(prefix_tmpl, params)))
        # The trailing RZ only moves the last padded angle; the family is unchanged.
        lead = _combine([_wrapped(ppad[:, i] - target[i]) for i in range(_WIDTH - 1)], metric)
        lead = np.where(pfam == family, lead, np.inf)
        alpha = canonicalize_array(ppad[:, -1:] + pts[None, :])
        alpha = np.where(np.abs(alpha) < ZERO_ANGLE_TOL, 0.0, alpha)
        tail = _wrapped(alpha - target[-1])
        d = np.maximum(lead[:, None], tail) if metric == "linf" else lead[:, None] + tail
        flat = d.ravel()
        offset = start * g
        hit = np.flatnonzero(flat < eps)
        if hit.size:
            i = int(hit[0])
            return offset + i, float(flat[i]), offset + i + 1
        i = int(np.argmin(flat))
        if flat[i] < best[0]:
            best = (float(flat[i]), offset + i)
    return best[1], best[0], total


def brute_force_params(entry: LUTEntry, target_run: Sequence[Gate], step: float = 0.1,
                       early_stop_eps: float = 1e-9, metric: str = "l1",
                       factored: bool | None = None) -> SearchResult:
    """Grid search over the template's parameters; see the module docstring."""
    if metric not in DISTANCES:
        raise ValueError(f"unknown distance {metric!r}")
    family, target = padded_signature(*run_signature(target_run))
    target = np.asarray(target, dtype=float)
    pts = grid_points(step)
    k = entry.k
    if k == 0:
        codes, angles = euler_batch(template_unitaries(entry.template, np.zeros((1, 0))))
        d = float(_score(codes, angles, family, target, metric)[0])
        return SearchResult((), d, 1)
    use_factored = _factorable(entry) if factored is None else (factored and _factorable(entry))
    scan = _scan_factored if use_factored else _scan_full
    index, d, evaluated = scan(entry, family, target, pts, early_stop_eps, metric)
    params = tuple(float(x) for x in _lex_grid(pts, k, index, index + 1)[0])
    return SearchResult(params, d, evaluated)


def _transpiled_angles(entry: LUTEntry, params: Sequence[float]) -> tuple[int, tuple[float, ...]]:
    e = euler_zxzxz(run_unitary(entry.gates(params, 0)))
    return e.code, e.angles


def template_delta(entry: LUTEntry, params: Sequence[float], target_run: Sequence[Gate],
                   metric: str = "l1") -> float:
    """Distance between the transpiled template at ``params`` and ``target_run``."""
    family, target = padded_signature(*run_signature(target_run))
    got_family, got = padded_signature(*_transpiled_angles(entry, params))
    return delta(got, target, metric) if got_family == family else math.inf


def analytic_params(entry: LUTEntry, target_run: Sequence[Gate]) -> tuple[float, ...]:
    if entry.analytic_inverse is None:
        raise AnalyticUnavailable(f"LUT entry {entry.name} has no analytic inverse")
    slots = entry.match(target_run)
    if slots is None:
        raise ValueError(f"run does not match LUT entry {entry.name}")
    return tuple(entry.analytic_inverse(slots, run_unitary(target_run)))


def _equivalent_branches(entry: LUTEntry, params: tuple[float, ...]) -> list[tuple[float, ...]]:
    if entry.name == "RX.RY.RZ":
        a, b, c = params
        pi = math.pi
        alt = tuple(canonicalize_array(np.array([a + pi, pi - b, c + pi])).tolist())
        return [params, alt]
    return [params]


def hybrid_params(entry: LUTEntry, target_run: Sequence[Gate], step: float = 0.1,
                  early_stop_eps: float = 1e-9, metric: str = "l1") -> SearchResult:
    """Coarse grid search followed by one analytic refinement.

    The refinement replaces the grid point when it transpiles closer to the
    target; among equivalent analytic solutions the one nearest the grid
    point is kept.
    """
    coarse = brute_force_params(entry, target_run, step, early_stop_eps, metric)
    if entry.analytic_inverse is None or coarse.delta < early_stop_eps:
        return coarse
    exact = analytic_params(entry, target_run)
    best = min(_equivalent_branches(entry, exact), key=lambda p: delta(p, coarse.params))
    d = template_delta(entry, best, target_run, metric)
    if d < coarse.delta:
        return SearchResult(best, d, coarse.candidates_evaluated)
    return coarse
