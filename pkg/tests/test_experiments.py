import json

import numpy as np
import pytest

from uavfas import experiments as ex
from uavfas.pipeline import run_ao
from uavfas.scenario import AoParams


@pytest.fixture(scope="module")
def solved(small):
    return run_ao(small)


def test_save_results(tmp_path, solved, small):
    paths = ex.save_results(solved, small, tmp_path)
    data = json.loads(paths["solution"].read_text())
    assert len(data["path"]) == small.N and len(data["layouts"]) == small.N
    R0 = np.array(data["covariances"][0]["real"]) + 1j * np.array(data["covariances"][0]["imag"])
    np.testing.assert_array_equal(R0, solved.R[0].R)
    lines = paths["crb"].read_text().splitlines()
    assert lines[0] == "slot,target,crb_rad2" and len(lines) == 1 + small.N * small.K
    assert paths["convergence"].read_text().splitlines()[0] == "iteration,objective,avg_crb"


def test_inf_serialised(tmp_path):
    p = ex.write_csv(tmp_path / "a.csv", ("slot", "target", "crb_rad2"), [(0, 0, np.inf), (0, 1, 1.5e-13)])
    assert p.read_text() == "slot,target,crb_rad2\n0,0,inf\n0,1,1.5e-13\n"


def test_target_crb_matches_report(solved):
    rows = ex.exp_target_crb(solved, [1])
    assert [r[2] for r in rows] == list(solved.report.per_slot_per_target[:, 1])


def test_beampattern(solved, small):
    rows, markers = ex.exp_beampattern(solved, small, 2)
    g = np.array([r[1] for r in rows])
    assert len(rows) == 721 and np.all(g >= 0)
    assert np.isfinite(np.trapezoid(g, [r[0] for r in rows])) and np.trapezoid(g, [r[0] for r in rows]) > 0
    assert len(markers) == small.K
    with pytest.raises(IndexError):
        ex.exp_beampattern(solved, small, small.N)


def test_beampattern_single_target_peak(small):
    s = small.with_updates(targets=((350.0, 500.0),), rcs=(1.0,), ao=AoParams(l_max=2))
    sol = run_ao(s)
    th = ex.angle_grid()
    rows, markers = ex.exp_beampattern(sol, s, 3, th)
    peak = th[int(np.argmax([r[1] for r in rows]))]
    assert abs(peak - markers[0][1]) <= th[1] - th[0]


def test_convergence_rows(small):
    s = small.with_updates(ao=AoParams(l_max=2))
    rows = ex.exp_convergence(s, ["proposed", "dula"], [0, 1])
    assert len(rows) == 2 * 2 * 3
    for sc in ("proposed", "dula"):
        obj = [r[3] for r in rows if r[0] == sc and r[1] == 0]
        assert all(b >= a - 1e-9 for a, b in zip(obj, obj[1:]))


def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        ex.SweepSpec("P_max_dBm", ())
    with pytest.raises(ValueError):
        ex.SweepSpec("P_max_dBm", (30, 20))
    with pytest.raises(ValueError):
        ex.SweepSpec("altitude", (1, 2))


def test_sweep_power_small(small, tmp_path):
    s = small.with_updates(ao=AoParams(l_max=2))
    spec = ex.SweepSpec("P_max_dBm", (20.0, 30.0), ("proposed",), (0, 1))
    res = ex.exp_sweep(spec, s)
    assert len(res.cells) == 4 and len(res.medians) == 2
    med = res.series("proposed")
    assert med[1] < med[0]
    a, b = ex.save_sweep(res, tmp_path, "p")
    assert a.read_text().splitlines()[0] == "value,scheme,median_avg_crb"


def test_sweep_k_nested(small):
    spec = ex.SweepSpec("K_targets", (2, 3), ("proposed",), (5,))
    s2, s3 = spec.scenario(small, 2, 5), spec.scenario(small, 3, 5)
    assert s3.targets[:2] == s2.targets


def test_csv_byte_identical(tmp_path, small):
    s = small.with_updates(ao=AoParams(l_max=2))
    a = ex.save_results(run_ao(s), s, tmp_path / "a")
    b = ex.save_results(run_ao(s, workers=2), s, tmp_path / "b")
    for key in a:
        assert a[key].read_bytes() == b[key].read_bytes()


def test_plot_svg(tmp_path):
    p = ex.plot_lines(tmp_path / "x.svg", {"a": ([0, 1, 2], [3.0, 2.0, 1.0])}, "x", "y", logy=True, markers=[1.0])
    assert p.read_text().lstrip().startswith("<?xml")
