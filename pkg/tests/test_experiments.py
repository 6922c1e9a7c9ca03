import json
import math

import numpy as np
import pytest

from radialspec.cli import main
from radialspec.experiments import ConfigError, ExperimentConfig, run

BUMP = {"kind": "polynomial", "params": {"coeffs": [0, 0, 1, 0, -2, 0, 1]}}
A_BUMP = {"kind": "gaussian",
          "params": {"amplitude": 0.1, "center": 0.5, "width": 0.1, "mirror": True}}
QUAD_SPEED = {"kind": "log_poly", "params": {"coeffs": [1, 0, -0.3], "scale": 2}}


def _cli(tmp_path, command, cfg, *extra, name="out"):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / name
    code = main([command, "--config", str(path), "--out", str(out), *extra])
    return code, out


def test_spectrum_of_the_ball(tmp_path):
    code, out = _cli(tmp_path, "spectrum", {"profile": {"N": 2000}, "ell_max": 1, "n_max": 3})
    assert code == 0
    rows = (out / "spectrum.csv").read_text().splitlines()
    lam1 = float(rows[1].split(",")[2])
    assert abs(lam1 + math.pi ** 2) / math.pi ** 2 < 1e-5
    summary = json.loads((out / "spectrum_summary.json").read_text())
    assert len(summary["config_hash"]) == 64 and summary["tolerances"]["tol_null_rel"] == 1e-8


def test_gauge_pair_gives_the_same_csv(tmp_path):
    base = {"profile": {"N": 300, "a": A_BUMP, "b": {"kind": "constant", "params": {"value": 0}}},
            "ell_max": 3, "n_max": 5}
    shifted = json.loads(json.dumps(base))
    shifted["profile"]["b"]["params"]["value"] = 1.0
    _, o1 = _cli(tmp_path, "spectrum", base, name="b0")
    _, o2 = _cli(tmp_path, "spectrum", shifted, name="b1")
    l1 = np.loadtxt(o1 / "spectrum.csv", delimiter=",", skiprows=1)
    l2 = np.loadtxt(o2 / "spectrum.csv", delimiter=",", skiprows=1)
    np.testing.assert_array_equal(l1[:, [0, 1, 3]], l2[:, [0, 1, 3]])
    np.testing.assert_allclose(l2[:, 2], l1[:, 2], rtol=1e-10, atol=0)


@pytest.mark.parametrize("command,cfg", [
    ("spectrum", {"profile": {"N": 200, "a": A_BUMP}, "ell_max": 2, "n_max": 3}),
    ("lengths", {"profile": {"N": 100}, "lengths": {"n_max_chords": 5, "m_max": 2}}),
    ("density", {"profile": {"N": 300}, "density": {"K": [10, 20], "J": 4}, "seed": 3}),
])
def test_outputs_are_byte_identical(tmp_path, command, cfg):
    _, o1 = _cli(tmp_path, command, cfg, name="one")
    _, o2 = _cli(tmp_path, command, cfg, "--threads", "3", name="two")
    files = sorted(p.name for p in o1.iterdir())
    assert files == sorted(p.name for p in o2.iterdir())
    for f in files:
        assert (o1 / f).read_bytes() == (o2 / f).read_bytes()


def test_invalid_radius_exits_with_2(tmp_path, capsys):
    code, _ = _cli(tmp_path, "spectrum", {"profile": {"R": 1.2, "N": 100}})
    assert code == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[0])
    assert err["message"] == "R out of range"


@pytest.mark.parametrize("cfg", [
    {"profile": {"N": 8}},
    {"profile": {"N": 100}, "bogus": 1},
    {"profile": {"N": 100}, "bc": "sticky"},
    {"profile": {"N": 100}, "variant": "toroidal"},
    {"profile": {"N": 100}, "tolerances": {"hf_rel": -1}},
    {"profile": {"N": 100, "a": {"kind": "nope", "params": {}}}},
])
def test_config_errors_exit_with_2(tmp_path, cfg):
    assert _cli(tmp_path, "spectrum", cfg)[0] == 2


def test_missing_config_file(tmp_path):
    assert main(["spectrum", "--config", str(tmp_path / "none.json")]) == 2


def test_numerical_failure_exits_with_1(tmp_path):
    # c = 0.2 + 3 r^2 violates the Herglotz condition, so rays cannot be traced
    cfg = {"profile": {"N": 200, "a": {"kind": "log_poly",
                                       "params": {"coeffs": [0.2, 0, 3], "scale": 2}}}}
    code, out = _cli(tmp_path, "lengths", cfg)
    assert code == 1
    assert json.loads((out / "error.json").read_text())["error"] == "numerical"


def test_lengths_flags(tmp_path):
    code, out = _cli(tmp_path, "lengths", {"profile": {"N": 100}}, "--n-max", "4", "--m-max", "1")
    assert code == 0
    rows = (out / "lengths.csv").read_text().splitlines()[1:]
    np.testing.assert_allclose(sorted(float(r.split(",")[3]) for r in rows),
                               [4.0, 3 * math.sqrt(3), 4 * math.sqrt(2)], atol=1e-10)


def test_perturb_a_bump_against_finite_difference(tmp_path):
    cfg = {"profile": {"N": 600}, "ell_max": 3, "n_max": 5, "family": {"a_dir": A_BUMP}}
    code, out = _cli(tmp_path, "perturb", cfg)
    report = json.loads((out / "perturbation.json").read_text())
    assert code == 0 and report["pass"]
    assert report["max_rel_err"] <= 1e-5


def _rigidity(tmp_path, family, **kw):
    cfg = {"profile": {"N": 800}, "ell_max": 5, "n_max": 8, "family": family, **kw}
    code, out = _cli(tmp_path, "rigidity", cfg)
    return code, json.loads((out / "rigidity.json").read_text())


def test_rigidity_null_families(tmp_path):
    code, r = _rigidity(tmp_path, {})
    assert code == 0 and r["max_abs_dlambda"] == 0.0 and r["null_family"]
    # the gauge direction b -> b + const
    code, r = _rigidity(tmp_path, {"b_dir": {"kind": "constant", "params": {"value": 2.0}}})
    assert code == 0 and r["null_family"] and r["max_abs_dlambda"] <= r["tol_null"]


def test_rigidity_bump_is_detected(tmp_path, golden):
    code, r = _rigidity(tmp_path, {"b_dir": BUMP})
    assert code == 0 and not r["failed_links"]
    assert r["max_abs_dlambda"] >= r["tol_detect"]
    assert r["max_abs_dlambda"] == pytest.approx(golden["bump_max_dlambda"], rel=1e-9)
    assert r["max_abs_dlambda"] == pytest.approx(golden["bump_max_dlambda_fd"], rel=1e-6)
    assert r["ibp_max_abs_diff"] <= 1e-8
    assert r["energy_pairing"] == pytest.approx(r["energy"], rel=1e-10)


def test_rigidity_second_order(tmp_path):
    code, r = _rigidity(tmp_path, {"b_dir2": BUMP})
    assert code == 0 and r["second_order"]["max_rel_err"] <= 1e-3


def test_rigidity_a_side(tmp_path):
    code, r = _rigidity(tmp_path, {"a_dir": A_BUMP})
    assert code == 0 and r["a_side_abel_residual"] > 0


def test_density_reconstruction(tmp_path):
    code, out = _cli(tmp_path, "density", {"profile": {"N": 1000}, "seed": 7})
    d = json.loads((out / "density.json").read_text())
    assert code == 0 and d["monotone"]
    assert d["reconstruction_rel_err"] <= 1e-6
    np.testing.assert_allclose(d["coefficients"], d["true_coefficients"], rtol=1e-6, atol=1e-8)
    assert d["trend"][-1]["sigma_min"] >= 0.99 * d["trend"][0]["sigma_min"]
    assert np.loadtxt(out / "gram.csv", delimiter=",").shape == (80, 8)


def test_density_of_the_zero_function(tmp_path):
    cfg = {"profile": {"N": 400}, "density": {"K": [20], "test_function": 0.0}}
    code, out = _cli(tmp_path, "density", cfg)
    d = json.loads((out / "density.json").read_text())
    assert code == 0 and d["coefficients"] == [0.0] * 8 and d["reconstruction_rel_err"] == 0.0


def test_trace_on_the_ball(tmp_path):
    cfg = {"profile": {"N": 1000}, "ell_max": 40, "n_max": 40,
           "trace": {"omega_max": 60, "t_min": 3, "t_max": 8}}
    code, out = _cli(tmp_path, "trace", cfg)
    s = json.loads((out / "trace_summary.json").read_text())
    assert code == 0 and s["peaks_ok"] and s["coverage_ok"]
    diam = [m for m in s["matches"] if m["matched"] and m["orbit"] == [2, 1, 1]]
    assert len(diam) == 1 and abs(diam[0]["t"] - 4.0) <= 0.05
    assert (out / "trace.csv").read_text().startswith("t,value")


def test_trace_with_empty_window(tmp_path):
    cfg = {"profile": {"N": 300}, "ell_max": 10, "n_max": 10,
           "trace": {"omega_max": 20, "t_min": 1.0, "t_max": 1.5, "pad": 0.2}}
    code, out = _cli(tmp_path, "trace", cfg)
    s = json.loads((out / "trace_summary.json").read_text())
    assert code == 0
    assert not any(m["matched"] for m in s["matches"]) and s["coverage"] == []


def test_config_roundtrip_and_hash():
    cfg = ExperimentConfig.from_dict({"profile": {"N": 50}, "output_dir": "x"})
    other = ExperimentConfig.from_dict({"profile": {"N": 50}, "output_dir": "y", "threads": 4})
    assert cfg.config_hash == other.config_hash
    assert ExperimentConfig.from_dict(cfg.to_dict()).config_hash == cfg.config_hash
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "dance"})


def test_run_dispatch(tmp_path):
    cfg = ExperimentConfig.from_dict({"experiment": "lengths", "profile": {"N": 60},
                                      "output_dir": str(tmp_path)})
    assert run(cfg)["n_orbits"] > 0
