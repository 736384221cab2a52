import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from thermal_wavepackets.cli import main
from thermal_wavepackets.config import ConfigError, RunConfig, parse_config


def write_cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# -- configuration ------------------------------------------------------------------


def test_parse_config_keys():
    cfg = parse_config("""
        # reference box, coarser grid
        M = 32
        T_list = 0.5, 2
        statistics = fermion
        tol.continuum = 1e-5
        mb.M = 4
    """)
    assert cfg.M == 32 and cfg.T_list == (0.5, 2.0) and cfg.statistics == ("fermion",)
    assert cfg.tol["continuum"] == 1e-5 and cfg.tol["exact"] == 1e-12
    assert cfg.mb_M == 4
    assert cfg.validate() is cfg


@pytest.mark.parametrize(
    "text",
    ["bogus = 1", "tol.bogus = 1", "M = many", "no equals sign", "x = 0.99", "suites = closure, nope",
     "M = 7", "T_list =", "N = 5", "K = 0.3", "statistics = anyon"],
)
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text).validate()


def test_defaults_are_reference_box():
    cfg = RunConfig().validate()
    assert (cfg.D, cfg.L, cfg.M, cfg.m, cfg.T) == (1, 10.0, 64, 1.0, 1.0)
    assert cfg.center == (5.0,)
    assert cfg.momentum[0] == pytest.approx(1.88496, rel=1e-5)


@pytest.mark.parametrize("text", ["bogus = 1", "x = 2"])
def test_config_error_exit_code(tmp_path, text):
    assert main(["verify", "--config", write_cfg(tmp_path, text), "--out", str(tmp_path)]) == 2


def test_unknown_suite_exit_code(tmp_path):
    assert main(["verify", "--suite", "nope", "--out", str(tmp_path)]) == 2


def test_missing_config_file(tmp_path):
    assert main(["verify", "--config", str(tmp_path / "absent.cfg")]) == 2


# -- verify -----------------------------------------------------------------------------


def test_verify_passing_suites(tmp_path):
    code = main(["verify", "--suite", "closure", "--suite", "boltzmann_rt", "--suite", "uncertainty",
                 "--out", str(tmp_path)])
    report = json.loads((tmp_path / "verify_report.json").read_text())
    assert code == 0
    assert report["schema"] == 1
    assert report["summary"]["status"] == "pass"
    for c in report["checks"]:
        assert {"error", "tolerance", "regime", "status"} <= set(c)


def test_verify_uv_violation_reports_regime(tmp_path):
    cfg = write_cfg(tmp_path, "M = 4\nT = 1\n")
    code = main(["verify", "--config", cfg, "--out", str(tmp_path)])
    report = json.loads((tmp_path / "verify_report.json").read_text())
    assert code == 1
    assert "regime" in report["summary"]["reasons"]
    flagged = [c for c in report["checks"] if c["reason"] == "regime"]
    assert flagged and all(not c["regime"]["ok"] for c in flagged)


def test_verify_tolerance_failure(tmp_path):
    cfg = write_cfg(tmp_path, "tol.uncertainty = 1e-9\nsuites = uncertainty\n")
    assert main(["verify", "--config", cfg, "--out", str(tmp_path)]) == 1
    report = json.loads((tmp_path / "verify_report.json").read_text())
    assert report["summary"]["reasons"] == ["tolerance"]


def test_verify_deterministic(tmp_path):
    args = ["verify", "--suite", "greens", "--suite", "manybody", "--seed", "7"]
    report = tmp_path / "verify_report.json"
    main(args + ["--out", str(tmp_path)])
    a = report.read_bytes()
    main(args + ["--out", str(tmp_path), "--parallel"])
    assert report.read_bytes() == a


def test_verify_seed_changes_random_operators(tmp_path):
    main(["verify", "--suite", "greens", "--seed", "1", "--out", str(tmp_path / "a")])
    main(["verify", "--suite", "greens", "--seed", "2", "--out", str(tmp_path / "b")])
    a = json.loads((tmp_path / "a" / "verify_report.json").read_text())
    b = json.loads((tmp_path / "b" / "verify_report.json").read_text())
    ea = [c["error"] for c in a["checks"] if c["name"].endswith("sum_rule")]
    eb = [c["error"] for c in b["checks"] if c["name"].endswith("sum_rule")]
    assert ea != eb


def test_converged_box_passes_split_suites(tmp_path):
    cfg = write_cfg(tmp_path, "L = 20\nM = 128\nsuites = split, boltzmann_rkt, kernel\n")
    assert main(["verify", "--config", cfg, "--out", str(tmp_path)]) == 0


# -- data dumps ---------------------------------------------------------------------------


def test_wavefunction_figures(tmp_path):
    code = main(["wavefunction", "--out", str(tmp_path)])
    assert code == 0
    report = json.loads((tmp_path / "wavefunction_report.json").read_text())
    loc = next(c for c in report["checks"] if c["name"] == "localization_monotone")
    v = loc["info"]["variance"]
    assert v[0] > v[1] > v[2]
    for T in ("0.25", "1", "4"):
        rows = read_csv(tmp_path / f"wavefunction_T{T}.csv")
        assert set(rows[0]) == {"state", "r", "re_psi", "im_psi", "abs_psi"}
        rkt = [r for r in rows if r["state"] == "RKT"]
        re = np.array([float(r["re_psi"]) for r in rkt])
        assert np.sum(np.diff(np.sign(re[np.abs(re) > 1e-6])) != 0) >= 2


def test_wavefunction_empty_T_list(tmp_path):
    assert main(["wavefunction", "--config", write_cfg(tmp_path, "T_list = \n"), "--out", str(tmp_path)]) == 2


def test_kernel_dump(tmp_path):
    assert main(["kernel", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "kernel.csv")
    assert list(rows[0]) == ["separation", "exact", "gaussian", "rel_error"]
    assert float(rows[0]["exact"]) == pytest.approx(0.39894, rel=1e-5)


def test_spectrum_dump(tmp_path):
    cfg = write_cfg(tmp_path, "operator = projector\nprojector = 3\n")
    assert main(["spectrum", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "spectrum.csv")
    assert list(rows[0]) == ["omega", "weight_re", "weight_im", "representation"]
    assert {r["representation"] for r in rows} == {"eigen", "wavepacket"}
    assert len(rows) == 2


def test_sweep_M(tmp_path):
    cfg = write_cfg(tmp_path, "sweep.param = M\nsweep.values = 16, 32, 64\n")
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "sweep_M.csv")
    assert [r["M"] for r in rows] == ["16.0", "32.0", "64.0"]
    assert all(float(r["rt_error"]) < 1e-12 for r in rows)


def test_sweep_T_uncertainty(tmp_path):
    cfg = write_cfg(tmp_path, "sweep.param = T\nsweep.values = 0.25, 1, 4\n")
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path), "--parallel"]) == 0
    rows = read_csv(tmp_path / "sweep_T.csv")
    assert all(abs(float(r["uncertainty_product"]) - 0.5) < 1e-4 for r in rows)


def test_sweep_x_tracks_aliasing_bound(tmp_path):
    assert main(["sweep", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "sweep_x.csv")
    assert len(rows) == 9
    for r in rows:
        assert float(r["split_error"]) == pytest.approx(float(r["aliasing_bound"]), rel=1e-3)


@pytest.mark.parametrize("text", ["sweep.param = x\nsweep.values = 0.01\n", "sweep.param = M\nsweep.values = 15\n",
                                  "sweep.param = T\nsweep.values = -1\n", "sweep.param = q\n"])
def test_sweep_out_of_range(tmp_path, text):
    assert main(["sweep", "--config", write_cfg(tmp_path, text), "--out", str(tmp_path)]) == 2


def test_module_entry_point(tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "thermal_wavepackets", "verify", "--suite", "closure", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0
    assert "2/2 checks passed" in res.stdout
