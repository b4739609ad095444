import json

import numpy as np
import pytest

from degenlab import harness
from degenlab.harness import ConfigError, ExperimentSpec, dumps, run_experiment, spec_from_dict, validate_config

MINIMAL = '{"name": "m", "kind": "manufactured_convergence", "gammas": [0.5], "resolutions": [16]}'


def test_minimal_spec():
    spec = validate_config(MINIMAL)
    assert isinstance(spec, ExperimentSpec)
    assert spec.gammas == (0.5,) and spec.resolutions == (16,)
    assert spec.grid.tan_ratio == 0.25 and spec.setting("exact") == "phi"


def test_gamma_out_of_range_has_line():
    raw = '{\n  "name": "m",\n  "kind": "manufactured_convergence",\n  "gammas": [1.5],\n  "resolutions": [16]\n}'
    with pytest.raises(ConfigError) as exc:
        validate_config(raw)
    (d,) = exc.value.diagnostics
    assert d.line == 4 and "gamma out of (0,1)" in str(d)
    assert str(d).startswith("line 4: gammas[0]")


def test_all_errors_collected():
    raw = json.dumps({"name": "", "kind": "nope", "gammas": [0.0, 2], "resolutions": [4], "bogus": 1,
                      "options": {"eta": 1.5}}, indent=1)
    with pytest.raises(ConfigError) as exc:
        validate_config(raw)
    paths = {d.path for d in exc.value.diagnostics}
    assert {"name", "kind", "gammas[0]", "gammas[1]", "resolutions[0]", "bogus", "options.eta"} <= paths
    assert all(d.line > 0 for d in exc.value.diagnostics)


def test_beta_zero_rejected():
    raw = '{"name": "b", "kind": "exponent_mixed_data", "gammas": [0.5], "betas": [0.0]}'
    with pytest.raises(ConfigError, match="beta out of"):
        validate_config(raw)
    with pytest.raises(ConfigError, match="nonempty"):
        validate_config('{"name": "b", "kind": "exponent_mixed_data", "gammas": [0.5], "betas": []}')


def test_bad_json_and_aliases():
    with pytest.raises(ConfigError) as exc:
        validate_config('{\n"name": \n}')
    assert exc.value.diagnostics[0].line == 3
    spec = spec_from_dict({"name": "a", "kind": "slice_check", "gamma": 0.25, "resolution": 32})
    assert spec.gammas == (0.25,) and spec.resolutions == (32,)
    with pytest.raises(ConfigError, match="not both"):
        spec_from_dict({"name": "a", "kind": "slice_check", "gamma": 0.25, "gammas": [0.5]})


def test_empty_sweep_writes_nothing(tmp_path):
    with pytest.raises(ConfigError, match="nonempty"):
        run_experiment({"name": "e", "kind": "manufactured_convergence", "gammas": [], "output_dir": str(tmp_path)})
    assert list(tmp_path.iterdir()) == []


def test_dumps_precision_and_nan():
    text = dumps({"a": 0.1, "b": float("nan"), "c": [1, np.float64(1 / 3)], "d": np.bool_(True)})
    d = json.loads(text)
    assert d == {"a": 0.1, "b": None, "c": [1, 1 / 3], "d": True}
    assert "0.33333333333333331" in text


def test_convergence_psi(tmp_path):
    spec = spec_from_dict({"name": "c", "kind": "manufactured_convergence", "gammas": [0.5],
                           "resolutions": [64, 128], "problem": {"exact": "psi"}})
    rep = run_experiment(spec, tmp_path)
    rows = [p for p in rep.points if p["status"] == "ok"]
    assert len(rows) == 2 and rows[1]["order"] > 1
    assert rows[1]["linf_error"] < rows[0]["linf_error"]
    summary = json.loads((tmp_path / "c" / "summary.json").read_text())
    assert summary["verdict"] == "pass"
    assert (tmp_path / "c" / "points" / "gamma=0.5_N=64.csv").exists()
    assert any(c["name"].startswith("order") for c in summary["checks"])


def test_exponent_inhomogeneous(tmp_path):
    spec = spec_from_dict({"name": "x", "kind": "exponent_inhomogeneous", "gammas": [0.5], "resolutions": [128]})
    rep = run_experiment(spec, tmp_path)
    (p,) = rep.points
    assert p["status"] == "ok"
    assert abs(p["fit"]["alpha_hat"] - 0.5) <= 0.05
    assert p["steady_route_difference"] < 1e-6


def test_deterministic_files(tmp_path):
    d = {"name": "cmp", "kind": "comparison_suite", "gammas": [0.5], "options": {"trials": 5}, "seed": 7}
    a = run_experiment(spec_from_dict(d), tmp_path / "a")
    b = run_experiment(spec_from_dict(d), tmp_path / "b")
    csv_a = sorted((a.directory / "points").glob("*.csv"))
    assert csv_a
    for f in csv_a:
        assert f.read_bytes() == (b.directory / "points" / f.name).read_bytes()
    strip = lambda r: [{k: v for k, v in p.items() if k != "runtime_s"} for p in r.points]
    assert strip(a) == strip(b) and a.verdict


def test_failing_point_is_isolated(tmp_path, monkeypatch):
    real = harness.solve_problem

    def flaky(config, grid, *args, **kw):
        if grid.n_normal == 32:
            raise RuntimeError("boom")
        return real(config, grid, *args, **kw)

    monkeypatch.setattr(harness, "solve_problem", flaky)
    spec = spec_from_dict({"name": "iso", "kind": "manufactured_convergence", "gammas": [0.5],
                           "resolutions": [16, 32, 64]})
    rep = run_experiment(spec, tmp_path)
    status = [p["status"] for p in rep.points]
    assert status == ["ok", "error", "ok"]
    assert not rep.verdict
    assert any(line.startswith("FAIL point") and "boom" in line for line in rep.check_lines())
    assert (tmp_path / "iso" / "points" / "gamma=0.5_N=64.json").exists()
