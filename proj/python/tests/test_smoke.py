import math
from pathlib import Path

import numpy as np
import pytest

import hqc

ROOT = Path(__file__).resolve().parents[2]

POINTER = """
[quantum]
amplitudes = (1,0), (1,0)
eigenvalues = 1, -1
[classical]
q_min = -6
q_max = 6
p_min = -4
p_max = 4
n_q = 96
n_p = 64
sigma_q = 0.5
sigma_p = 0.5
[run]
dt = 0.05
t_final = 1.5
cadence = 3
"""


def test_gaussian_has_unit_mass():
    g = hqc.PhaseGrid(-4, 4, -4, 4, 64, 64)
    rho = hqc.gaussian_state(g, 0.5, -0.5, 0.5, 0.7)
    assert rho.shape == (64, 64)
    assert rho.sum() * g.cell_area == pytest.approx(1.0, abs=1e-12)
    assert rho.min() >= 0.0


def test_harmonic_period_returns_close_to_start():
    g = hqc.PhaseGrid(-5, 5, -5, 5, 128, 128)
    start, end = hqc.harmonic_period(g, 1.0, 0.0, 0.6, 400)
    err = np.linalg.norm(end - start) / np.linalg.norm(start)
    assert err < 0.05
    assert end.sum() * g.cell_area == pytest.approx(1.0, abs=1e-8)


def test_entropy_and_eigenvalues():
    assert hqc.von_neumann_entropy(np.eye(2) / 2) == pytest.approx(math.log(2))
    assert hqc.min_eigenvalue(np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        hqc.von_neumann_entropy(np.array([[1.5, 0], [0, -0.5]], dtype=complex))


def test_closed_forms():
    h = hqc.gaussian_half_time(2.0, 0.5)
    assert hqc.gaussian_decoherence(2.0, 0.5, h) == pytest.approx(0.5)
    assert hqc.gaussian_half_time(2.0, 0.25) == pytest.approx(2 * h)


def test_config_errors_are_collected():
    with pytest.raises(ValueError) as err:
        hqc.parse_config(POINTER.replace("dt = 0.05\n", "").replace("[run]", "[run]\nspeed = 1"))
    assert "missing key run.dt" in str(err.value)
    assert "unknown key 'speed'" in str(err.value)


def test_pointer_run_reports_violation(tmp_path):
    cfg = hqc.parse_config(POINTER)
    assert cfg.dim == 2 and cfg.mode == "evolve"
    assert any("normalised" in n for n in cfg.notices)
    cfg.output_directory = tmp_path
    out = hqc.execute(cfg)
    assert out["exit_code"] == hqc.EXIT_VIOLATION
    assert out["onset_time"] is not None
    d = out["diagnostics"]
    assert np.allclose(d["trace"], 1.0, atol=1e-8)
    assert np.all(np.diff(d["qm_entropy"]) >= -1e-3)
    assert (tmp_path / "diagnostics.csv").read_text().startswith("t,trace,purity_ratio")


def test_collapsed_start_is_clean(tmp_path):
    cfg = hqc.parse_config(POINTER.replace("[run]", "[run]\ninitial = collapsed"))
    cfg.output_directory = tmp_path
    code, log = hqc.run(cfg)
    assert code == hqc.EXIT_CLEAN
    assert "no positivity violation" in log


def test_breakdown_raises(tmp_path):
    text = POINTER.replace("q_min = -6", "q_min = -3").replace("q_max = 6", "q_max = 3").replace("n_q = 96", "n_q = 48")
    cfg = hqc.parse_config(text)
    cfg.output_directory = tmp_path
    with pytest.raises(hqc.NumericalBreakdown):
        hqc.execute(cfg)
    assert hqc.run(cfg)[0] == hqc.EXIT_FAILURE


def test_describe_and_bundled_configs():
    cfg = hqc.load_config(ROOT / "configs" / "study.ini")
    text = hqc.describe(cfg)
    assert "planned study jobs: 4" in text
    assert dict(cfg.resolved_keys())["run.mode"] == "study"
