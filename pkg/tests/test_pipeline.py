import json
import math

import numpy as np
import pytest

from mlcircle.circle import MapSpec, PiecewiseGrid, TrigPoly
from mlcircle.microsupport import HbarLadder, ScanGrid
from mlcircle.pipeline import (ExperimentSpec, build_S_from_u, default_grid, dump_json, heatmap_bytes,
                               run_experiment, write_run_dir)

SMALL = dict(grid=ScanGrid(16, 33, -4.0, 4.0), ladder=HbarLadder(0.01, 0.5, 4))


def test_build_S_trig():
    u = TrigPoly.constant(0.4) + TrigPoly.cos_mode(1, 0.3)
    S = build_S_from_u(u)
    z = np.linspace(0, 1, 21)
    assert np.allclose(S.derivative(z), u(z), atol=1e-13)
    assert S(1.0) - S(0.0) == pytest.approx(0.4)


def test_build_S_grid_is_exact_primitive():
    u = PiecewiseGrid.from_function(lambda z: np.abs(z - 0.5) + np.sin(2 * np.pi * z), 256, breakpoints=(0.5,))
    S = build_S_from_u(u)
    assert S(1.0) - S(0.0) == pytest.approx(u.integral(), abs=1e-14)
    z = np.array([0.1, 0.3, 0.7, 0.9])
    h = 1e-6
    assert np.allclose((S(z + h) - S(z - h)) / (2 * h), u(z), atol=1e-6)


def test_build_S_rejects_callables():
    with pytest.raises(TypeError):
        build_S_from_u(lambda z: z)


def test_default_grids():
    assert default_grid("DiffeoInvariance").eta_max == 1.0
    g = default_grid("Theorem1")
    assert (g.n_y, g.n_eta) == (16, 129)


@pytest.mark.parametrize("make", [ExperimentSpec.theorem1, ExperimentSpec.theorem2, ExperimentSpec.subsup,
                                  ExperimentSpec.diffeo])
def test_spec_json_roundtrip(make):
    s = make()
    t = ExperimentSpec.from_json(json.loads(json.dumps(s.to_json())))
    assert t.to_json() == s.to_json()
    assert t.digest() == s.digest()


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(name="x", scenario="Nope", source={"x": 0, "xi": 0})
    with pytest.raises(ValueError):
        ExperimentSpec.theorem1(tau=TrigPoly.cos_mode(1))
    with pytest.raises(ValueError):
        ExperimentSpec.theorem2(map=MapSpec.rotation(0.3))
    with pytest.raises(ValueError):
        ExperimentSpec.diffeo(map=MapSpec.doubling())
    with pytest.raises(ValueError):
        ExperimentSpec.subsup(source={"xs": []})
    with pytest.raises(ValueError):
        ExperimentSpec.theorem2(source={"x": 0.1})


def test_digest_changes_with_spec():
    assert ExperimentSpec.theorem1().digest() != ExperimentSpec.theorem1(source={"x": 0.2, "xi": 1.0}).digest()


@pytest.fixture(scope="module")
def diffeo_report():
    return run_experiment(ExperimentSpec.diffeo())


def test_diffeo_experiment(diffeo_report):
    r = diffeo_report
    assert r.certified
    assert r.residuals["graph_invariance_residual"] < 1e-12
    assert r.residuals["graph_vs_image_max"] < 1e-12
    assert r.match["hit"]


def test_run_dir_artifacts(diffeo_report, tmp_path):
    run = write_run_dir(diffeo_report, tmp_path)
    names = sorted(p.name for p in run.iterdir())
    assert names == ["heatmap_0.pgm", "manifest.json", "map_0.csv", "report.json"]
    man = json.loads((run / "manifest.json").read_text())
    assert man["spec_sha256"] == diffeo_report.spec.digest()
    rep = json.loads((run / "report.json").read_text())
    assert rep["match"]["hit"] is True
    header = (run / "map_0.csv").read_text().splitlines()
    assert header[0] == "hbar,y,eta,magnitude"
    g, L = diffeo_report.spec.grid, diffeo_report.spec.ladder
    assert len(header) == 1 + (L.J + 1) * g.n_y * g.n_eta


def test_heatmap_layout(diffeo_report):
    smap = diffeo_report.runs[0].map
    data = heatmap_bytes(smap, -1)
    head = f"P5\n{smap.grid.n_y} {smap.grid.n_eta}\n255\n".encode()
    assert data.startswith(head)
    img = np.frombuffer(data[len(head):], np.uint8).reshape(smap.grid.n_eta, smap.grid.n_y)
    i, j = smap.argmax_cell(-1)
    assert img[smap.grid.n_eta - 1 - j, i] == 255
    with pytest.raises(IndexError):
        heatmap_bytes(smap, 99)


def test_theorem2_small_grid_structure():
    r = run_experiment(ExperimentSpec.theorem2(**SMALL))
    assert len(r.runs) == 1
    pts = r.runs[0].predicted.points
    assert [p[0] for p in pts] == [0.0, 0.5]
    assert pts[0][1] == pytest.approx(1.0) and pts[1][1] == pytest.approx(-1.0)
    json.dumps(r.to_json(), allow_nan=True)


def test_dump_json_nonfinite(tmp_path):
    p = tmp_path / "x.json"
    dump_json({"a": math.inf, "b": [np.float64(1.5), math.nan], "c": np.arange(2)}, p)
    assert json.loads(p.read_text()) == {"a": None, "b": [1.5, None], "c": [0, 1]}
