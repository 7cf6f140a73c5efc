import csv
import json
import subprocess
import sys

import pytest

from boundform.cli import main, run_scenario
from boundform.config import parse_config

SMALL_NOISE = """
[schedule]
type = stochastic
sigma_V = 50
sigma_x = 1.2
delta_t = 0.02
hold_factor = 5
n_pulses = 20
seed = 9

[ensemble]
n_realizations = 3
batch_size = 2
"""


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_eigen_defaults(tmp_path, configs):
    assert main(["eigen", str(configs / "eigen_default.ini"), "--output", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "basis.csv")
    assert len(rows) == 111
    assert float(rows[1][2]) == pytest.approx(-2.3, abs=0.1)
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["status"] == "ok" and len(man["config_sha256"]) == 64
    assert set(man["versions"]) == {"boundform", "python", "numpy", "scipy"}


def test_evolve_excited_state(tmp_path, configs):
    assert main(["evolve", str(configs / "excited50_wide.ini"), "--output", str(tmp_path)]) == 0
    dist = _rows(tmp_path / "distribution.csv")[1:]
    occ = [float(r[2]) for r in dist]
    others = sorted(o for n, o in enumerate(occ) if n not in (0, 50) and o > 1e-10)
    assert occ[0] >= 10 * others[len(others) // 2]
    assert (tmp_path / "trajectory.csv").exists() and (tmp_path / "summary.csv").exists()


def test_stochastic_round_trip(tmp_path):
    cfg = parse_config(SMALL_NOISE + f"[output]\ndirectory = {tmp_path / 'a'}\n")
    assert run_scenario(cfg, "evolve") == 0
    again = parse_config(SMALL_NOISE + f"[output]\ndirectory = {tmp_path / 'b'}\n")
    assert run_scenario(again, "evolve") == 0
    for name in ("trajectory.csv", "amplitudes.csv", "distribution.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert json.loads((tmp_path / "a" / "manifest.json").read_text())["seeds"] == [9]


def test_ensemble_subcommand(tmp_path):
    cfg = parse_config(SMALL_NOISE + f"[output]\ndirectory = {tmp_path}\n")
    assert run_scenario(cfg, "ensemble") == 0
    rows = _rows(tmp_path / "ensemble.csv")
    assert len(rows) == 1 + 21
    man = json.loads((tmp_path / "ensemble_manifest.json").read_text())
    assert man["n_members"] == 3 and man["member_seeds"] == [9, 11]


def test_perturb_with_scan(tmp_path):
    text = ("[schedule]\ntype = gaussian\nV = 100\nsigma_x = 1.2\nsigma_t = 1\ncenters = 50\n"
            "[scan]\nsigma_t = 1\nexact = false\n" + f"[output]\ndirectory = {tmp_path}\n")
    assert run_scenario(parse_config(text), "perturb") == 0
    rows = _rows(tmp_path / "perturbative.csv")
    assert rows[0] == ["n", "energy_MeV", "re_c1", "im_c1", "probability"]
    assert rows[-1][0] == "N"
    assert len(_rows(tmp_path / "validity.csv")) == 2


def test_report(tmp_path):
    text = "[run]\ndt = 0.01\n[scan]\nsigma_t = 1\n" + f"[output]\ndirectory = {tmp_path}\n"
    assert run_scenario(parse_config(text), "report") == 0
    rows = _rows(tmp_path / "uncertainty.csv")
    assert "uncertainty_product_2x" in rows[0] and len(rows) == 3
    assert (tmp_path / "peaks.csv").exists()
    assert (tmp_path / "distribution_V100_st1_sx1.2.csv").exists()


def test_config_error_exit(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[well]\nV0 = 3\n")
    assert main(["eigen", str(bad)]) == 2
    assert "V0 must be negative" in capsys.readouterr().err
    assert main(["eigen", str(tmp_path / "missing.ini")]) == 2


def test_missing_schedule_exit(tmp_path):
    cfg = parse_config(f"[output]\ndirectory = {tmp_path}\n")
    assert run_scenario(cfg, "evolve") == 2
    assert json.loads((tmp_path / "manifest.json").read_text())["status"] == "failed"


def test_numerical_error_exit(tmp_path, capsys):
    text = ("[schedule]\ntype = gaussian\nV = 5000\nsigma_x = 1.2\nsigma_t = 1\ncenters = 50\n"
            "[run]\ndt = 0.5\nsample_every = 1\n" + f"[output]\ndirectory = {tmp_path}\n")
    assert run_scenario(parse_config(text), "evolve") == 3
    assert "norm defect" in capsys.readouterr().err


def test_module_entry_point(tmp_path, configs):
    out = subprocess.run([sys.executable, "-m", "boundform", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "eigen" in out.stdout
