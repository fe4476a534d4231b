import csv
import io
import math

import pytest

from qmlre.bench import (
    COLUMNS,
    EXPERIMENTS,
    TrialConfig,
    bench_suite,
    default_seed,
    mean_by,
    read_csv,
    run_trial,
    suite_configs,
)


def test_suite_configs_default_scale():
    sizes = [(c.n_qubits, c.n_layers, c.rotations) for c in suite_configs("error-table")]
    assert sizes == [(1, 1, 3), (2, 1, 3), (2, 2, 3), (2, 3, 3), (4, 1, 2), (4, 2, 2)]
    assert [c.step for c in suite_configs("step-size")] == [0.1, 0.01]
    assert [c.n_layers for c in suite_configs("layer-time")] == [1, 2, 4]
    plans = [(c.dummy_layers, c.dummy_qubits) for c in suite_configs("defense-overhead")]
    assert (0, 0) in plans and (2, 2) in plans


def test_expensive_flag_adds_long_runs():
    assert 0.001 in [c.step for c in suite_configs("step-size", expensive=True)]
    assert 8 in [c.n_qubits for c in suite_configs("error-table", expensive=True)]
    assert 16 in [c.n_layers for c in suite_configs("layer-time", expensive=True)]
    for name in EXPERIMENTS:
        assert len(suite_configs(name, True)) > len(suite_configs(name))


def test_unknown_experiment():
    with pytest.raises(ValueError):
        suite_configs("speed")


def test_default_seed_from_environment(monkeypatch):
    monkeypatch.delenv("QMLRE_SEED", raising=False)
    assert default_seed() == 0
    monkeypatch.setenv("QMLRE_SEED", "17")
    assert default_seed() == 17
    monkeypatch.setenv("QMLRE_SEED", "x")
    with pytest.raises(ValueError):
        default_seed()


def test_one_qubit_trial_row():
    row = run_trial(TrialConfig(1, 1, 3, "none"), seed=0, epochs=5)
    assert row["n_params"] == 3 and len(row["per_param_errors"]) == 3
    assert row["candidates_evaluated"] == 63 ** 3
    assert row["mean_error"] <= 0.1


def _without_elapsed(text: str) -> list[list[str]]:
    rows = list(csv.reader(io.StringIO(text)))
    i = rows[0].index("elapsed_seconds")
    return [r[:i] + r[i + 1:] for r in rows]


@pytest.fixture(scope="module")
def layer_time(tmp_path_factory):
    path = tmp_path_factory.mktemp("bench") / "layer.csv"
    return bench_suite("layer-time", [0], path, epochs=5), path


def test_bench_is_reproducible_except_elapsed(layer_time):
    first, _ = layer_time
    again = bench_suite("layer-time", [0], epochs=5)
    assert _without_elapsed(first.to_csv()) == _without_elapsed(again.to_csv())


def test_csv_schema_and_roundtrip(layer_time):
    result, path = layer_time
    text = path.read_text()
    assert text.splitlines()[0] == ",".join(COLUMNS)
    rows = read_csv(path)
    assert len(rows) == 3 and [r["n_layers"] for r in rows] == [1, 2, 4]
    for r in rows:
        assert r["experiment"] == "layer-time"
        for k in ("mean_error", "sd_error", "elapsed_seconds", "accuracy_gap"):
            assert math.isfinite(r[k])
        # re-derivable from the stored per-parameter errors
        errs = r["per_param_errors"]
        assert r["mean_error"] == pytest.approx(math.fsum(errs) / len(errs), abs=1e-12)
        assert r["n_params"] == len(errs)
    assert mean_by(rows, "n_layers") == {r["n_layers"]: r["mean_error"] for r in rows}


def test_multiple_seeds_sorted_by_config_then_seed():
    result = bench_suite("error-table", [3, 1], epochs=1)
    keys = [(r["n_qubits"], r["n_layers"], r["seed"]) for r in result.rows]
    assert keys == sorted(keys) and {k[2] for k in keys} == {1, 3}
    assert result.seeds == (1, 3)
