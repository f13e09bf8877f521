from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence


@dataclass(frozen=True)
class SampleSummary:
    n: int
    mean: float
    sd: float
    variance: float
    median: float
    q1: float
    q3: float

    def to_dict(self) -> dict:
        return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in asdict(self).items()}


def quantile(sorted_x: Sequence[float], p: float) -> float:
    """Linear interpolation between order statistics at h = (n-1)p."""
    n = len(sorted_x)
    if n == 0:
        raise ValueError("quantile of an empty sample")
    h = (n - 1) * p
    lo = math.floor(h)
    hi = min(lo + 1, n - 1)
    return sorted_x[lo] + (h - lo) * (sorted_x[hi] - sorted_x[lo])


def mean_var(x: Sequence[float]) -> tuple[float, float]:
    n = len(x)
    m = math.fsum(x) / n
    if n < 2:
        return m, math.nan
    return m, math.fsum((v - m) ** 2 for v in x) / (n - 1)


def summarize(x: Sequence[float]) -> SampleSummary:
    xs = sorted(float(v) for v in x)
    if not xs:
        raise ValueError("summarize needs at least one value")
    m, var = mean_var(xs)
    return SampleSummary(
        n=len(xs),
        mean=m,
        sd=math.sqrt(var),
        variance=var,
        median=quantile(xs, 0.5),
        q1=quantile(xs, 0.25),
        q3=quantile(xs, 0.75),
    )


def histogram(samples: dict[str, Sequence[float]], bin_width: float = 1.0, lo: float = 0.0):
    """Shared-edge histogram rows (label, left, right, count, density).

    Values below ``lo`` fall in the first bin. Density is the share of the
    sample per unit width, so differently sized samples are comparable.
    """
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    top = max((max(v) for v in samples.values() if len(v)), default=lo)
    n_bins = max(1, math.floor((top - lo) / bin_width) + 1)
    rows = []
    for label, values in samples.items():
        counts = [0] * n_bins
        for v in values:
            k = min(n_bins - 1, max(0, math.floor((v - lo) / bin_width)))
            counts[k] += 1
        total = len(values)
        for k, c in enumerate(counts):
            left = lo + k * bin_width
            rows.append((label, left, left + bin_width, c, c / (total * bin_width) if total else 0.0))
    return rows
