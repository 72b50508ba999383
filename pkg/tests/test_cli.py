"""Command line interface: exit codes, artifacts, and output formats."""

import json

import pytest

from l1rates import cli


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def embedding_config(tmp_path, **extra):
    payload = {
        "operator": {"kind": "lq-embedding", "dim": 8, "q": 2},
        "family": "all-subsets",
        "gamma": {"n_max": 4, "method": "analytic"},
        "xdag": {"kind": "sparse", "dim": 8, "support": [0, 2], "values": [2.0, -1.0]},
    }
    payload.update(extra)
    return write_config(tmp_path, payload)


# ---------------------------------------------------------------------------
# certify


def test_certify_embedding(tmp_path, capsys):
    cfg = embedding_config(tmp_path)
    rc = cli.main(["certify", "--config", cfg, "--out", str(tmp_path / "out")])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["certified"]
    assert report["method"] == "analytic"
    assert report["gammas"] == pytest.approx([1.0, 2 ** 0.5, 3 ** 0.5, 2.0])
    gammas = (tmp_path / "out" / "gammas.csv").read_text().splitlines()
    assert gammas[0] == "# schema_version=1"
    assert gammas[1] == "n,gamma,c,method"
    assert len(gammas) == 6


def test_certify_wiener_is_refused(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "operator": {"kind": "wiener-restriction", "intervals": [[0.0, 0.5]],
                     "max_freq": 4, "grid_size": 64},
    })
    rc = cli.main(["certify", "--config", cfg, "--out", str(tmp_path / "out")])
    assert rc == 1
    report = json.loads(capsys.readouterr().out)
    assert report["certified"] is False
    assert "analytic_gamma_table" in report["reason"]


def test_certify_csv_format(tmp_path, capsys):
    cfg = embedding_config(tmp_path)
    rc = cli.main(["certify", "--config", cfg, "--out", str(tmp_path / "out"),
                   "--format", "csv"])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "n,gamma,c,method"
    assert lines[1].startswith("1,1.0,0.0,analytic")
    assert lines[-1].startswith("# certified: True")


# ---------------------------------------------------------------------------
# phi / check-vi


def test_phi_writes_envelope(tmp_path, capsys):
    cfg = embedding_config(tmp_path)
    rc = cli.main(["phi", "--config", cfg, "--out", str(tmp_path / "out")])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["beta"] == 1.0
    assert report["phi_at_zero"] >= 0.0
    phi_lines = (tmp_path / "out" / "phi.csv").read_text().splitlines()
    assert phi_lines[1] == "t_break,phi_value,active_n"
    assert (tmp_path / "out" / "gammas.csv").exists()


def test_check_vi_passes_and_writes_report(tmp_path, capsys):
    cfg = embedding_config(tmp_path)
    rc = cli.main(["check-vi", "--config", cfg, "--out", str(tmp_path / "out"),
                   "--seed", "4"])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["passed"]
    assert report["worst_slack"] >= -1e-9
    on_disk = json.loads((tmp_path / "out" / "vi_report.json").read_text())
    assert on_disk == report


# ---------------------------------------------------------------------------
# solve


def test_solve_explicit_data(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "operator": {"kind": "lq-embedding", "dim": 3, "q": 2},
        "y": [1.0, -0.2, 0.05],
        "alpha": 0.4,
    })
    rc = cli.main(["solve", "--config", cfg, "--out", str(tmp_path / "out")])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["x"] == pytest.approx([0.8, 0.0, 0.0])
    assert report["converged"]
    assert (tmp_path / "out" / "solution.json").exists()


def test_solve_synthetic_noise_with_rule(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "operator": {"kind": "lq-embedding", "dim": 6, "q": 2},
        "xdag": {"kind": "sparse", "dim": 6, "support": [1], "values": [3.0]},
        "delta": 0.01,
        "alpha_rule": {"rule": "a-priori", "kappa": 1.0},
    })
    rc = cli.main(["solve", "--config", cfg, "--out", str(tmp_path / "out")])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["alpha"] == pytest.approx(0.01)
    assert report["support_size"] >= 1


# ---------------------------------------------------------------------------
# rates


def rates_config(tmp_path):
    return write_config(tmp_path, {
        "operator": {"kind": "lq-embedding", "dim": 6, "q": 2},
        "family": "all-subsets",
        "gamma": {"method": "analytic"},
        "xdag": {"kind": "sparse", "dim": 6, "support": [0, 3], "values": [2.0, 1.0]},
        "delta_grid": {"max": 1e-1, "min": 1e-2, "count": 3},
        "trials": 2,
        "seed": 7,
    })


def test_rates_writes_bundle(tmp_path, capsys):
    cfg = rates_config(tmp_path)
    out = tmp_path / "out"
    rc = cli.main(["rates", "--config", cfg, "--out", str(out)])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["cells_failed"] == 0
    assert report["cells_total"] == 6
    for name in ("gammas.csv", "phi.csv", "records.csv", "summary.json"):
        assert (out / name).exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["seed"] == 7  # config seed wins when --seed not given


def test_rates_seed_flag_overrides_config(tmp_path):
    cfg = rates_config(tmp_path)
    out = tmp_path / "out2"
    rc = cli.main(["rates", "--config", cfg, "--out", str(out), "--seed", "123"])
    assert rc == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["seed"] == 123


def test_rates_csv_format_prints_records(tmp_path, capsys):
    cfg = rates_config(tmp_path)
    rc = cli.main(["rates", "--config", cfg, "--out", str(tmp_path / "o"),
                   "--format", "csv"])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("delta_index,delta,trial,cell_seed,alpha")
    assert len([l for l in lines if not l.startswith("#")]) == 7  # header + 6 cells
    assert any(l.startswith("# fitted_slope:") for l in lines)


# ---------------------------------------------------------------------------
# nazarov / example


def test_nazarov_flags_without_config(tmp_path, capsys):
    rc = cli.main(["nazarov", "--n", "1", "--trials", "20",
                   "--out", str(tmp_path / "nz"), "--seed", "2"])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["passed"]
    assert report["n"] == 1
    assert report["bound"] == 1.0
    assert (tmp_path / "nz" / "nazarov.json").exists()


def test_nazarov_config_file(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "intervals": [[0.0, 0.25]],
        "n": 2,
        "trials": 30,
        "freq_range": [-10, 10],
        "grid_size": 256,
    })
    rc = cli.main(["nazarov", "--config", cfg])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["measure"] == 0.25
    assert report["trials"] == 30


def test_example_denoising_exit_code(tmp_path, capsys):
    rc = cli.main(["example", "denoising", "--out", str(tmp_path / "ex"),
                   "--seed", "42"])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["gamma_match"] and report["norm_order_holds"]
    assert (tmp_path / "ex" / "gammas.csv").exists()


# ---------------------------------------------------------------------------
# error handling


def test_missing_config_file_is_usage_error(tmp_path, capsys):
    rc = cli.main(["certify", "--config", str(tmp_path / "nope.json")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_malformed_config_is_usage_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    rc = cli.main(["certify", "--config", str(bad)])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_missing_operator_section(tmp_path, capsys):
    cfg = write_config(tmp_path, {"family": "prefix"})
    rc = cli.main(["certify", "--config", cfg])
    assert rc == 2
    assert "operator" in capsys.readouterr().err


def test_unknown_operator_kind(tmp_path, capsys):
    cfg = write_config(tmp_path, {"operator": {"kind": "teleport"}})
    rc = cli.main(["certify", "--config", cfg])
    assert rc == 2
    assert "error:" in capsys.readouterr().err
