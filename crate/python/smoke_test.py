"""Smoke test for the mcs_stokes extension module.

Build and install with `pip install --no-build-isolation ./crates/py`, then run
`python -m pytest python/smoke_test.py` or `python python/smoke_test.py`.
"""

import json
import math

import pytest

import mcs_stokes as mcs


def test_structured_mesh_counts_and_volume():
    mesh = mcs.Mesh.structured(2, 4)
    assert mesh.dim == 2
    assert mesh.num_elements == 32
    assert len(mesh.vertices) == 25
    assert math.isclose(sum(mesh.volume(e) for e in range(mesh.num_elements)), 1.0)
    cube = mcs.Mesh.structured(3, 1)
    assert cube.num_elements == 6
    assert json.loads(cube.to_json())["dim"] == 3


def test_invalid_requests_raise():
    with pytest.raises(ValueError):
        mcs.Mesh.structured(4, 2)
    with pytest.raises(ValueError):
        mcs.StudyConfig(2, 1, [2], study="nonsense")


def test_single_solve_is_divergence_free():
    e = mcs.solve(2, 1, 4)
    assert e["residual"] <= 1e-10
    assert e["div_uh_max"] <= 1e-9 * max(e["norm_uh"], 1e-9)
    assert e["err_sigma"] > 0.0


def test_convergence_study_rates_and_formats():
    report = mcs.run_study(mcs.StudyConfig(2, 2, [4, 8, 16]))
    assert report.levels == [4, 8, 16]
    assert all(r <= 1e-10 for r in report.residuals)
    assert abs(report.eoc(2)["l2_ustar"] - 4.0) < 0.3
    assert report.to_csv().splitlines()[0].startswith("nelem,h,err_grad_ustar")
    assert len(json.loads(report.to_json())["rows"]) == 3


def test_patch_study_passes_its_checks():
    report = mcs.run_study(mcs.StudyConfig(2, 1, [2], study="patch"))
    assert report.extra(0)["patch_u"] < 1e-9
    checks = report.checks()
    assert checks and all(c.passed for c in checks)


def test_infsup_is_positive_and_needs_enrichment():
    mesh = mcs.Mesh.structured(2, 2)
    full = mcs.infsup(mesh, 1)
    assert full > 0.0
    assert mcs.infsup(mesh, 1, enriched=False) < full


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
