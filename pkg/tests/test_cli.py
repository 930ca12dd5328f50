import subprocess
import sys

import pytest
import yaml

from uavfas.cli import main
from uavfas.scenario import AoParams, PsoParams, save_scenario


@pytest.fixture
def cfg(tmp_path, small):
    s = small.with_updates(ao=AoParams(l_max=2), pso=PsoParams(T_max=4, particles=4))
    return save_scenario(s, tmp_path / "s.yaml")


def test_run(tmp_path, cfg, capsys):
    assert main(["run", "--config", str(cfg), "--out-dir", str(tmp_path / "o"), "--plot"]) == 0
    for f in ("solution.json", "crb_per_target.csv", "convergence.csv", "convergence.svg"):
        assert (tmp_path / "o" / f).exists()
    assert "avg_crb" in capsys.readouterr().out


@pytest.mark.parametrize("cmd, out", [
    (["convergence", "--schemes", "proposed", "sula", "--seeds", "2"], "convergence_schemes.csv"),
    (["beampattern", "--slot", "2", "--scheme", "tfao"], "beampattern.csv"),
    (["target-crb", "--targets", "0", "2"], "target_crb.csv"),
    (["sweep-power", "--values", "20", "30"], "sweep_P_max_dBm.csv"),
    (["sweep-region", "--values", "6", "8"], "sweep_region_size_multiple_of_lambda.csv"),
    (["sweep-targets", "--values", "1", "2"], "sweep_K_targets.csv"),
])
def test_subcommands(tmp_path, cfg, cmd, out):
    assert main([*cmd, "--config", str(cfg), "--out-dir", str(tmp_path), "--plot"]) == 0
    assert (tmp_path / out).exists()
    assert (tmp_path / out.replace(".csv", ".svg")).exists()


def test_named_errors(tmp_path, cfg, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.yaml")]) != 0
    assert "ScenarioError" in capsys.readouterr().err
    bad = tmp_path / "bad.yaml"
    d = yaml.safe_load(cfg.read_text())
    d["array"]["D_wavelengths"] = 0.5
    bad.write_text(yaml.safe_dump(d))
    assert main(["run", "--config", str(bad)]) != 0
    assert "aperture too small" in capsys.readouterr().err
    assert main(["beampattern", "--config", str(cfg), "--slot", "99", "--out-dir", str(tmp_path)]) != 0
    assert "IndexError" in capsys.readouterr().err
    assert main(["run", "--seed", "-1"]) != 0
    with pytest.raises(SystemExit):
        main(["run", "--scheme", "bogus"])


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "uavfas", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "sweep-power" in out.stdout
