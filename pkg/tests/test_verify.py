import json

import numpy as np
import pytest

from flatgrav import casimir as cm
from flatgrav import verify as vf


def test_reduction_check_passes(default_phi):
    rep = vf.check_reduction(default_phi)
    assert rep.passed
    assert rep.measured["identity"] < 1e-6
    assert rep.measured["roundtrip"] < 1e-6
    assert rep.measured["exponent"] < 1e-4
    assert rep.measured["convexity"] <= 0.0


def test_reduction_check_flags_corrupted_table(default_phi, default_psi):
    g = np.geomspace(1e-6, 10.0, 200)
    vals = default_psi.value(g).copy()
    vals[100] *= 1.35
    rep = vf.check_reduction(default_phi, psi_table=(g, vals))
    assert not rep.passed
    assert rep.measured["convexity"] > 0.0


def test_scaling_check():
    rep = vf.check_scaling(2.0, 3.0)
    assert rep.passed
    assert rep.measured["mass_factor"] < 1e-4
    assert rep.measured["epot_factor"] < 1e-4
    assert rep.measured["casimir_identity"] < 1e-4
    assert rep.measured["trace_negative"] == 0.0


def test_scaling_check_box_guard():
    from flatgrav.errors import BoxSizeError
    with pytest.raises(BoxSizeError):
        vf.check_scaling(2.0, 3.0, outer=0.5)


def test_family_is_deterministic():
    spec = {"count": 6, "seed": 99}
    a = vf.generate_family(spec)
    b = vf.generate_family(spec)
    assert len(a) == 6
    for fa, fb in zip(a, b):
        assert np.array_equal(fa.values, fb.values)
        assert fa.mass == pytest.approx(1.0, rel=1e-12)


def test_inequalities_battery():
    rep = vf.check_inequalities()
    assert rep.passed
    assert rep.measured["shifting_margin"] >= 0.0
    assert rep.measured["interpolation_excess"] < 1e-9
    assert rep.measured["cauchy_schwarz_excess"] <= 1e-9
    assert rep.measured["simplex_constant"] > 0.0
    # fitted constants keep 10% headroom under refinement
    assert rep.measured["hls_refined_over_headroom"] <= 1.0
    assert rep.measured["growth_refined_over_headroom"] <= 1.0
    assert any("empirical-constant" in n for n in rep.notes)


def test_inequalities_family_size_guard():
    with pytest.raises(ValueError):
        vf.check_inequalities(family_spec={"count": 10})
    with pytest.raises(ValueError):
        vf.check_inequalities(R=0.5)


def test_report_serialization_roundtrip(tmp_path):
    rep = vf.check_scaling(2.0, 3.0)
    path = tmp_path / "checks.jsonl"
    vf.write_jsonl([rep], str(path))
    back = vf.read_jsonl(str(path))
    assert len(back) == 1
    assert back[0].to_dict() == rep.to_dict()
    # every line is standalone JSON
    for line in path.read_text().splitlines():
        json.loads(line)


def test_summary_csv(tmp_path):
    rep = vf.check_scaling(2.0, 3.0)
    path = tmp_path / "summary.csv"
    vf.write_summary_csv([rep], str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "check,passed,statement"
    assert lines[1].startswith("scaling,1,")


def test_full_report_empty_and_unknown():
    reports, status = vf.full_report(configs=[])
    assert reports == [] and status == 0
    reports, status = vf.full_report(configs=["no_such_check"])
    assert status == 1
    assert not reports[0].passed
    assert "no_such_check" in reports[0].notes[0]


def test_full_report_subset_order():
    reports, status = vf.full_report(
        configs=["scaling", "reduction_quadratic"])
    assert status == 0
    # assembly is ordered by check id regardless of request order
    assert [r.check for r in reports] == ["reduction_quadratic", "scaling"]


def test_quadratic_model_reduction():
    # phi = f^2 reduces to the 3/2-power law with a known coefficient
    rep = vf.check_reduction(cm.polytrope(1.0, 2.0))
    assert rep.passed
    psi = cm.reduce_phi_to_psi(cm.polytrope(1.0, 2.0))
    assert psi.coefficient == pytest.approx(0.5319230405352436, rel=1e-12)
    assert psi.exponent == pytest.approx(1.5, rel=1e-12)
