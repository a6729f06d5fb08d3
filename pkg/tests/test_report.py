import json
import math

import pytest

from halfspace_stokes.report import EstimateReport, fit_constant


class TestFitConstant:
    def test_stable_sample_passes(self):
        ratios = [1.0, 1.1, 0.9, 1.05, 1.08, 0.95]
        rep = fit_constant("x", ratios)
        assert rep.passed
        assert rep.fitted_constant == pytest.approx(1.1)
        assert rep.stability_ratio <= 1.25

    def test_unstable_sample_fails(self):
        # the sup keeps growing when the sample is doubled
        rep = fit_constant("x", [1.0, 1.0, 1.0, 10.0])
        assert not rep.passed
        assert rep.stability_ratio == pytest.approx(10.0)

    def test_empty_sample_fails(self):
        rep = fit_constant("x", [])
        assert rep.verdict == "FAIL"
        assert rep.samples == 0

    def test_non_finite_ratios_dropped(self):
        rep = fit_constant("x", [1.0, math.inf, 1.05, math.nan])
        assert rep.samples == 2

    def test_residual_gate(self):
        ratios = [1.0, 2.0] * 4       # even/odd halves disagree by 2x
        rep = fit_constant("x", ratios, max_residual=0.25)
        assert not rep.passed
        rep2 = fit_constant("x", ratios)   # no residual gate: stability ok
        assert rep2.passed

    def test_to_json_writes_file(self, tmp_path):
        rep = fit_constant("sample-id", [1.0, 1.1])
        path = tmp_path / "report.json"
        rep.to_json(path)
        data = json.loads(path.read_text())
        assert data["estimate_id"] == "sample-id"
        assert data["verdict"] == rep.verdict
