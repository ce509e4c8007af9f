import json
import math
import pathlib

import numpy as np
import pytest

import fpreg

CONFIGS = pathlib.Path(__file__).resolve().parents[2] / "configs"


def test_gaussian_solution_relaxes_to_stationary():
    mean, var = fpreg.fp_gaussian_1d(-2.0, 0.2, 0.2, 0.2)
    assert mean == pytest.approx(-2.0 * math.exp(-1.0), rel=1e-14)
    assert var == pytest.approx(0.2)
    late_mean, late_var = fpreg.fp_gaussian_1d(1.5, 0.7, 0.3, 15.0)
    assert abs(late_mean) < 1e-10
    assert late_var == pytest.approx(0.3, abs=1e-10)


def test_mesh_area_and_location():
    m = fpreg.generate_mesh((-4, 4), (-4, 4), hole_radius=0.5, h=0.4)
    assert m.area() == pytest.approx(64 - math.pi * 0.25, rel=5e-3)
    assert m.locate((0.0, 0.0)) == -1
    assert m.locate((2.0, 1.0)) >= 0
    assert m.boundary_distance((-3.0, 0.0)) == pytest.approx(1.0)


def test_arc_cloud_and_hausdorff():
    a = fpreg.arc_cloud(math.pi / 2, math.pi, n=141, noise=0.0)
    assert a.shape == (141, 2)
    np.testing.assert_allclose(np.hypot(a[:, 0], a[:, 1]), 1.0, atol=1e-12)
    np.testing.assert_allclose(a[0], [0.0, 1.0], atol=1e-12)
    assert fpreg.hausdorff(a, a) == 0.0
    assert fpreg.hausdorff(np.array([[0.0, 0.0]]), np.array([[3.0, 4.0]])) == 5.0


def test_gmm_fit_and_gradient():
    cloud = fpreg.arc_cloud(math.pi / 2, math.pi, seed=7)
    g, report = fpreg.fit_gmm(cloud, 1, 1, seed=1)
    assert g.k == 1
    np.testing.assert_allclose(g.means[0], cloud.mean(axis=0), atol=1e-9)
    x, h = np.array([-0.4, 0.3]), 1e-6
    fd = [(-g.logpdf(x + h * e) + g.logpdf(x - h * e)) / (2 * h) for e in np.eye(2)]
    np.testing.assert_allclose(g.grad_potential(x), fd, rtol=1e-6)
    assert set(report) >= {"aic", "loglik", "aic_by_k"}


def test_config_defaults_and_errors(tmp_path):
    cfg = fpreg.load_config(CONFIGS / "test1_gaussian_cylinder.json")
    assert cfg["fe_degree"] == 2
    assert cfg["velocity_formula"] == "theorem"
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    with pytest.raises(fpreg.Error):
        fpreg.load_config(bad)


def test_pipeline_commands(tmp_path):
    cfg = json.loads((CONFIGS / "test1_gaussian_cylinder.json").read_text())
    cfg.update({"mesh": {"target_h": 0.8}, "time": {"T": 0.5, "K": 5, "power": 1.5}, "snapshot_times": [0.5]})
    cfg.pop("target_nhf")
    path = tmp_path / "small.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "out"
    for command in ("solve", "trace", "report"):
        fpreg.run(command, path, out)
    report = json.loads((out / "report.json").read_text())
    assert report["final_l1"] < report["initial_l1"]
    assert "error_curve.svg" in report["svg"]
