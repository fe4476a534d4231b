"""Command-line front end: ``qmlre <verb> ...``.

Exit status: 0 on success, 1 on processing errors (message on stderr) or a
failed ``verify``, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .bench import EPOCHS, EXPERIMENTS, bench_suite, default_seed
from .circuit import CircuitError, bind
from .defense import DefensePlan, apply_defense
from .qasm import QasmError, dump, emit, load
from .qnn import Dataset, PQCSpec, build_classifier, make_blobs, train, weight_parameters
from .reverse.engine import MODES, REConfig, reverse
from .reverse.params import DISTANCES
from .sim import SimulationError, fidelity_up_to_phase, unitary
from .transpiler.coupling import CouplingMap
from .transpiler.passes import TranspileConfig, transpile

VERIFY_TOL = 1e-6


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _layout(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"layout must be comma-separated integers, got {text!r}") from None


def _seeds(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {text!r}") from None


def _positive_float(text: str) -> float:
    v = float(text)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _add_transpile_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--coupling", choices=("linear", "t", "full"), help="coupling map preset (default: full)")
    p.add_argument("--level", type=int, choices=(0, 1), default=None, help="optimization level (default 1)")
    p.add_argument("--layout", type=_layout, help="initial layout, physical qubit per logical qubit")
    p.add_argument("--config", type=Path, help="transpiler config JSON (flags override it)")


def _transpile_cfg(args, n_qubits: int) -> TranspileConfig:
    cfg = TranspileConfig.load(args.config, n_qubits) if args.config else TranspileConfig()
    coupling = CouplingMap.preset(args.coupling, n_qubits) if args.coupling else cfg.coupling
    layout = args.layout if args.layout is not None else cfg.initial_layout
    level = args.level if args.level is not None else cfg.optimization_level
    return TranspileConfig(coupling, layout, level)


def _write_text(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def cmd_transpile(args) -> int:
    c = load(args.input)
    _write_text(emit(transpile(c, _transpile_cfg(args, c.n_qubits))), args.output)
    return 0


def cmd_reverse(args) -> int:
    target = load(args.input)
    truth = load(args.truth) if args.truth else None
    # The attacker knows the transpiler settings; the logical width sets the coupling size.
    cfg = REConfig(step=args.step, mode=args.mode, distance=args.distance,
                   transpile=_transpile_cfg(args, target.n_qubits))
    report = reverse(target, cfg, ground_truth=truth)
    if args.report:
        report.save(args.report)
    if args.output:
        dump(report.recovered, args.output)
    else:
        sys.stdout.write(emit(report.recovered))
    summary = [f"fidelity_vs_target={report.fidelity_vs_target:.12g}",
               f"candidates_evaluated={report.candidates_evaluated}",
               f"unmatched_runs={len(report.unmatched_runs)}"]
    if report.mean_error is not None:
        summary += [f"mean_error={report.mean_error:.6g}", f"sd_error={report.sd_error:.6g}"]
    print(" ".join(summary), file=sys.stderr)
    for d in report.diagnostics:
        print(f"diagnostic: {d}", file=sys.stderr)
    return 0


def cmd_verify(args) -> int:
    a, b = load(args.a), load(args.b)
    if a.n_qubits != b.n_qubits:
        raise CircuitError(f"width mismatch: {a.n_qubits} vs {b.n_qubits} qubits")
    f = fidelity_up_to_phase(unitary(a), unitary(b))
    print(f"fidelity={f:.15g}")
    return 0 if f >= 1 - VERIFY_TOL else 1


def cmd_defend(args) -> int:
    c = load(args.input)
    plan = DefensePlan.load(args.plan)
    _write_text(emit(apply_defense(c, plan)), args.output)
    return 0


def _load_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON ({exc})") from None


def cmd_train(args) -> int:
    spec = PQCSpec.from_json(_load_json(args.spec))
    data = Dataset.load_csv(args.data, args.train_fraction)
    classifier = build_classifier(spec)
    if args.plan:
        classifier = apply_defense(classifier, DefensePlan.load(args.plan))
    seed = args.seed if args.seed is not None else default_seed()
    record = train(classifier, data, args.epochs, args.lr, seed)
    record.extra = {"spec": spec.to_json()}
    text = json.dumps(record.to_json(), indent=2) + "\n"
    _write_text(text, args.output)
    if args.qasm:
        names = [p.name for p in weight_parameters(classifier)]
        dump(bind(classifier, dict(zip(names, record.weights))), args.qasm)
    return 0


def cmd_dataset(args) -> int:
    seed = args.seed if args.seed is not None else default_seed()
    data = make_blobs(args.samples, args.features, seed, args.spread)
    data.save_csv(args.output)
    return 0


def cmd_bench(args) -> int:
    seeds = args.seeds if args.seeds is not None else [args.seed if args.seed is not None else default_seed()]
    result = bench_suite(args.experiment, seeds, args.out, args.expensive, args.epochs)
    if args.out is None:
        sys.stdout.write(result.to_csv())
    return 0


def build_parser() -> argparse.ArgumentParser:
    root = _Parser(prog="qmlre", description="Transpile, reverse-engineer and defend quantum classifiers.")
    root.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = root.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("transpile", help="lower a circuit to the {id, x, sx, cx, rz} basis")
    p.add_argument("input", type=Path)
    _add_transpile_opts(p)
    p.add_argument("-o", "--output", type=Path)
    p.set_defaults(func=cmd_transpile)

    p = sub.add_parser("reverse", help="recover a logical circuit from transpiled QASM")
    p.add_argument("input", type=Path)
    p.add_argument("--step", type=_positive_float, default=0.1, help="grid step N in radians")
    p.add_argument("--mode", choices=MODES, default="brute")
    p.add_argument("--distance", choices=DISTANCES, default="l1")
    p.add_argument("--truth", type=Path, help="pre-transpilation circuit, for error reporting")
    p.add_argument("--report", type=Path, help="write the JSON report here")
    _add_transpile_opts(p)
    p.add_argument("-o", "--output", type=Path, help="recovered QASM (default: stdout)")
    p.set_defaults(func=cmd_reverse)

    p = sub.add_parser("verify", help="fidelity up to global phase of two circuits")
    p.add_argument("a", type=Path)
    p.add_argument("b", type=Path)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("defend", help="inject dummy fixed-parameter gates")
    p.add_argument("input", type=Path)
    p.add_argument("--plan", type=Path, required=True)
    p.add_argument("-o", "--output", type=Path)
    p.set_defaults(func=cmd_defend)

    p = sub.add_parser("train", help="train a classifier with parameter-shift gradient descent")
    p.add_argument("--spec", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--plan", type=Path, help="defense plan applied before training")
    p.add_argument("--epochs", type=int, default=60)
    p.add_argument("--lr", type=_positive_float, default=0.05)
    p.add_argument("--seed", type=int)
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("-o", "--output", type=Path, help="TrainRecord JSON (default: stdout)")
    p.add_argument("--qasm", type=Path, help="write the trained classifier (data angles symbolic)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("dataset", help="write a seeded two-blob dataset as CSV")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--features", type=int, required=True)
    p.add_argument("--spread", type=_positive_float, default=0.6)
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("bench", help="run an experiment suite and write CSV")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--out", type=Path, help="CSV path (default: stdout)")
    p.add_argument("--seed", type=int, help="single seed (default: $QMLRE_SEED or 0)")
    p.add_argument("--seeds", type=_seeds, help="comma-separated seeds; overrides --seed")
    p.add_argument("--epochs", type=int, default=EPOCHS)
    p.add_argument("--expensive", action="store_true", help="include long-running configurations")
    p.set_defaults(func=cmd_bench)
    return root


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (QasmError, CircuitError, SimulationError, ValueError, KeyError, RuntimeError, OSError) as exc:
        print(f"qmlre {args.verb}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
