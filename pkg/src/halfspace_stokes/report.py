"""Estimate reports: fitted constants for inequality shapes over sweeps.

A qualitative bound "LHS <= C * shape" is operationalized as: fit
C_sup = sup over a randomized sweep of LHS/shape, check that the fit is
finite and stable (ratio <= 1.25) when the sample is doubled, and that
the constants fitted on the odd/even halves of the sweep agree within a
relative half-spread (the "shape-fit residual").
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

__all__ = ["EstimateReport", "fit_constant"]


@dataclass
class EstimateReport:
    estimate_id: str
    samples: int
    fitted_constant: float
    stability_ratio: float
    verdict: str
    shape_residual: float = float("nan")
    excluded_points: list = field(default_factory=list)
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")


def fit_constant(estimate_id: str, ratios, excluded=None,
                 max_stability=1.25, max_residual=None) -> EstimateReport:
    """Build a report from the list of per-sample LHS/shape ratios.

    The first half of ``ratios`` is treated as the base sample and the
    full list as the doubled sample; stability is the ratio of the two
    fitted sups.  The shape residual is the relative half-spread of the
    sups fitted on the even- and odd-indexed halves.
    """
    ratios = np.asarray([r for r in ratios if np.isfinite(r)], dtype=float)
    excluded = list(excluded or [])
    n = len(ratios)
    if n == 0:
        return EstimateReport(estimate_id, 0, float("nan"), float("nan"),
                              "FAIL", float("nan"), excluded,
                              {"reason": "no usable samples"})
    c_half = float(np.max(ratios[: max(1, n // 2)]))
    c_full = float(np.max(ratios))
    stability = c_full / c_half if c_half > 0 else math.inf
    c_even = float(np.max(ratios[0::2]))
    c_odd = float(np.max(ratios[1::2])) if n > 1 else c_even
    mean = 0.5 * (c_even + c_odd)
    residual = abs(c_even - c_odd) / mean if mean > 0 else 0.0
    ok = math.isfinite(c_full) and stability <= max_stability
    if max_residual is not None:
        ok = ok and residual <= max_residual
    return EstimateReport(estimate_id, n, c_full, stability,
                          "PASS" if ok else "FAIL", residual, excluded)
