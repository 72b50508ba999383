"""Noise synthesis, rate experiments, sup-norm sampling, and serialization."""

import json
import math

import numpy as np
import pytest

from l1rates.core import (
    ConfigError,
    DenseOperator,
    IndexSetFamily,
    LqEmbedding,
    TruncatedSequence,
    WienerRestriction,
)
from l1rates.harness import (
    ExperimentConfig,
    ExperimentRecord,
    _cell_seed,
    experiment_config_from_dict,
    nazarov_check,
    reproduce_example,
    run_rate_experiment,
    synthesize_noise,
    write_csv,
    write_records_csv,
    write_summary_json,
    xdag_from_config,
)

ALL = IndexSetFamily.ALL_SUBSETS


# ---------------------------------------------------------------------------
# noise


def test_noise_hits_requested_norm():
    rng = np.random.default_rng(30)
    cases = [
        (DenseOperator(rng.standard_normal((6, 4))), np.zeros(6)),
        (LqEmbedding(5, 4.0), np.ones(5)),
    ]
    wie = WienerRestriction([(0.0, 0.5)], max_freq=4, grid_size=64)
    cases.append((wie, wie.apply(np.ones(wie.dim))))
    for op, y in cases:
        for delta in (1e-3, 0.5):
            y_d = synthesize_noise(op, y, delta, seed=7)
            assert op.norm_y(y_d - y) == pytest.approx(delta, rel=1e-12)


def test_noise_zero_delta_copies():
    y = np.arange(4.0)
    out = synthesize_noise(LqEmbedding(4, 2.0), y, 0.0, seed=1)
    assert np.array_equal(out, y)
    assert out is not y


def test_noise_seed_determinism():
    op = LqEmbedding(6, 2.0)
    y = np.zeros(6)
    a = synthesize_noise(op, y, 0.1, seed=5)
    b = synthesize_noise(op, y, 0.1, seed=5)
    c = synthesize_noise(op, y, 0.1, seed=6)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_noise_rejects_negative_delta():
    with pytest.raises(ValueError):
        synthesize_noise(LqEmbedding(3, 2.0), np.zeros(3), -0.1, seed=0)


def test_noise_complex_data_stays_complex():
    op = WienerRestriction([(0.0, 0.5)], max_freq=4, grid_size=64)
    y = op.apply(np.ones(op.dim))
    y_d = synthesize_noise(op, y, 0.01, seed=2)
    assert np.iscomplexobj(y_d)


# ---------------------------------------------------------------------------
# configuration


def test_xdag_kinds():
    explicit = xdag_from_config({"kind": "explicit", "coeffs": [1.0, -2.0]})
    assert np.array_equal(explicit.coeffs, [1.0, -2.0])
    sparse = xdag_from_config(
        {"kind": "sparse", "dim": 5, "support": [0, 3], "values": [2.0, -1.0]})
    assert np.array_equal(sparse.coeffs, [2.0, 0.0, 0.0, -1.0, 0.0])
    decay = xdag_from_config({"kind": "power-decay", "dim": 4, "mu": 2.0})
    assert decay.coeffs == pytest.approx([1.0, 0.25, 1 / 9, 1 / 16])


def test_xdag_config_errors():
    with pytest.raises(ConfigError):
        xdag_from_config({"kind": "mystery"})
    with pytest.raises(ConfigError):
        xdag_from_config({"kind": "sparse", "dim": 3, "support": [5], "values": [1.0]})


def small_config(**over):
    dim = 6
    coeffs = np.zeros(dim)
    coeffs[0], coeffs[2] = 2.0, -1.0
    base = dict(
        op=LqEmbedding(dim, 2.0),
        xdag=TruncatedSequence(coeffs),
        family=ALL,
        deltas=(1e-1, 1e-2, 1e-3),
        trials=3,
        gamma_method="analytic",
        seed=11,
    )
    base.update(over)
    return ExperimentConfig(**base)


def test_experiment_config_validation():
    with pytest.raises(ValueError):
        small_config(deltas=(1e-3, 1e-2))  # increasing
    with pytest.raises(ValueError):
        small_config(deltas=(1e-1, 0.0))
    with pytest.raises(ValueError):
        small_config(deltas=())
    with pytest.raises(ValueError):
        small_config(trials=0)
    with pytest.raises(ValueError):
        small_config(alpha_rule="magic")
    with pytest.raises(ValueError):
        small_config(xdag=TruncatedSequence(np.zeros(4)))


def test_experiment_config_from_dict_defaults():
    cfg = experiment_config_from_dict({
        "operator": {"kind": "lq-embedding", "dim": 4, "q": 2},
        "xdag": {"kind": "sparse", "dim": 4, "support": [1], "values": [1.0]},
        "delta_grid": {"values": [1e-3, 1e-1, 1e-2]},
    })
    assert cfg.deltas == (1e-1, 1e-2, 1e-3)  # sorted decreasing
    assert cfg.trials == 5
    assert cfg.alpha_rule == "a-priori"
    assert cfg.family is IndexSetFamily.PREFIX
    geom = experiment_config_from_dict({
        "operator": {"kind": "lq-embedding", "dim": 4, "q": 2},
        "xdag": {"kind": "sparse", "dim": 4, "support": [1], "values": [1.0]},
        "delta_grid": {"max": 1e-1, "min": 1e-4, "count": 4},
    })
    assert geom.deltas == pytest.approx(np.geomspace(1e-1, 1e-4, 4))


def test_cell_seeds_distinct_and_stable():
    seeds = {_cell_seed(11, i, t) for i in range(8) for t in range(5)}
    assert len(seeds) == 40
    assert _cell_seed(11, 3, 2) == _cell_seed(11, 3, 2)
    assert _cell_seed(11, 3, 2) != _cell_seed(12, 3, 2)


# ---------------------------------------------------------------------------
# rate experiment


def test_rate_experiment_identity_embedding():
    result = run_rate_experiment(small_config())
    assert len(result.records) == 9
    assert all(r.status == "ok" for r in result.records)
    assert result.summary["cells_failed"] == 0
    assert result.beta == 1.0  # embedding certifies c = 0
    # soft-thresholding error is within a small factor of the bound
    assert result.summary["max_ratio_to_phi"] < 5.0
    assert math.isfinite(result.summary["fitted_slope"])
    # distinct trials draw distinct noise
    cell = [r for r in result.records if r.delta_index == 0]
    assert len({r.cell_seed for r in cell}) == 3
    assert len({r.error_l1 for r in cell}) == 3


def test_rate_experiment_deterministic():
    a = run_rate_experiment(small_config())
    b = run_rate_experiment(small_config())
    assert a.records == b.records
    assert a.summary == b.summary


def test_rate_experiment_records_failures_per_cell():
    dim = 4
    coeffs = np.zeros(dim)
    coeffs[1] = 1.0
    cfg = ExperimentConfig(
        op=DenseOperator(np.eye(dim)),
        xdag=TruncatedSequence(coeffs),
        family=IndexSetFamily.PREFIX,
        deltas=(1e-1, 1e-2),
        trials=2,
        p=1,  # dense p=1 has no solver: every cell must fail, none may abort
    )
    result = run_rate_experiment(cfg)
    assert result.summary["cells_total"] == 4
    assert result.summary["cells_failed"] == 4
    assert all(r.status.startswith("failed: UnsupportedProblemError") for r in result.records)
    assert all(math.isnan(r.error_l1) for r in result.records)
    assert math.isnan(result.summary["fitted_slope"])
    assert result.summary["median_errors"] == []


def test_rate_experiment_discrepancy_rule():
    result = run_rate_experiment(small_config(alpha_rule="discrepancy",
                                              deltas=(1e-1, 3e-2), trials=2))
    assert all(r.status == "ok" for r in result.records)
    for r in result.records:
        assert r.residual_y <= 1.5 * r.delta + 1e-12


# ---------------------------------------------------------------------------
# sup-norm sampling


def test_nazarov_nyquist_guard():
    with pytest.raises(ValueError, match="too coarse"):
        nazarov_check([(0.0, 0.5)], 3, freq_range=(-30, 30), grid_size=128)


def test_nazarov_frequency_pool_bounds():
    with pytest.raises(ValueError):
        nazarov_check([(0.0, 0.5)], 0, freq_range=(-2, 2), grid_size=64)
    with pytest.raises(ValueError):
        nazarov_check([(0.0, 0.5)], 6, freq_range=(-2, 2), grid_size=64)
    with pytest.raises(ValueError):
        nazarov_check([(0.0, 0.5)], 2, freq_range=(3, -3), grid_size=64)


def test_nazarov_single_mode_ratio_is_one():
    report = nazarov_check([(0.0, 0.25)], 1, trials=50, freq_range=(-10, 10),
                           grid_size=256, seed=3)
    assert report.bound == 1.0
    assert report.violations == 0
    assert abs(report.max_ratio - 1.0) <= 1e-12
    assert abs(report.min_ratio - 1.0) <= 1e-12


def test_nazarov_full_circle_dominated_by_l1():
    report = nazarov_check([(0.0, 1.0)], 3, trials=100, freq_range=(-8, 8),
                           grid_size=256, seed=4)
    assert report.violations == 0
    assert 1.0 - 1e-12 <= report.max_ratio <= report.bound


def test_nazarov_deterministic_and_reports_geometry():
    a = nazarov_check([(0.0, 0.5)], 3, trials=20, freq_range=(-6, 6),
                      grid_size=64, seed=9)
    b = nazarov_check([(0.0, 0.5)], 3, trials=20, freq_range=(-6, 6),
                      grid_size=64, seed=9)
    assert a.max_ratio == b.max_ratio
    assert a.measure == 0.5
    assert a.freq_range == (-6, 6)
    assert a.passed


def test_nazarov_interval_between_grid_points():
    with pytest.raises(ValueError, match="no grid point"):
        nazarov_check([(0.50001, 0.50002)], 1, freq_range=(-2, 2), grid_size=64)


# ---------------------------------------------------------------------------
# serialization


def test_write_csv_layout(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(path, ("a", "b"), [(1, 0.1), (2, float("nan"))])
    lines = path.read_text().splitlines()
    assert lines[0] == "# schema_version=1"
    assert lines[1] == "a,b"
    assert lines[2] == "1,0.1"
    assert lines[3] == "2,nan"


def test_write_csv_deterministic(tmp_path):
    rows = [(k, math.pi * k) for k in range(20)]
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(p1, ("k", "v"), rows)
    write_csv(p2, ("k", "v"), rows)
    assert p1.read_bytes() == p2.read_bytes()


def test_write_summary_json_sorted_and_numpy_safe(tmp_path):
    path = tmp_path / "s.json"
    write_summary_json(path, {"b": np.float64(0.5), "a": np.int64(3),
                              "c": np.arange(2)})
    text = path.read_text()
    assert text.endswith("\n")
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')
    assert json.loads(text) == {"a": 3, "b": 0.5, "c": [0, 1]}


def test_records_csv_roundtrip_columns(tmp_path):
    result = run_rate_experiment(small_config(deltas=(1e-1,), trials=1))
    path = tmp_path / "records.csv"
    write_records_csv(path, result.records)
    lines = path.read_text().splitlines()
    assert lines[1].split(",") == list(ExperimentRecord.HEADER)
    assert len(lines) == 3


# ---------------------------------------------------------------------------
# canned examples


def test_reproduce_denoising_summary(tmp_path):
    summary = reproduce_example("denoising", out_dir=tmp_path / "d", seed=0)
    assert summary["gamma_match"]
    assert summary["norm_order_holds"]
    assert (tmp_path / "d" / "gammas.csv").exists()
    assert (tmp_path / "d" / "summary.json").exists()


def test_reproduce_wiener_summary(tmp_path):
    summary = reproduce_example("wiener", out_dir=tmp_path / "w", seed=0)
    assert summary["chain_holds"]
    assert summary["weighted_dominates"]
    assert summary["nazarov_violations"] == 0
    assert (tmp_path / "w" / "chain.csv").exists()


def test_reproduce_example_bundles_are_reproducible(tmp_path):
    reproduce_example("denoising", out_dir=tmp_path / "r1", seed=42)
    reproduce_example("denoising", out_dir=tmp_path / "r2", seed=42)
    for name in ("gammas.csv", "summary.json"):
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()


def test_reproduce_unknown_example():
    with pytest.raises(ValueError):
        reproduce_example("mystery")
