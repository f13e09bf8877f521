"""Two-sample tests: Welch t, Wilcoxon rank sum, Kolmogorov-Smirnov, Levene.

``tail`` follows the first sample: ``one_sided_greater`` is the alternative
that ``x`` tends to be larger than ``y`` (for Levene: more spread out).
"""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from math import comb
from typing import Optional, Sequence

from .describe import mean_var
from .special import f_sf, kolmogorov_q, normal_cdf, normal_sf, t_cdf, t_sf

TAILS = ("one_sided_less", "one_sided_greater", "two_sided")
EXACT_MAX_N = 12


class DegenerateSample(ValueError):
    pass


@dataclass(frozen=True)
class TestReport:
    __test__ = False  # not a pytest class

    test_name: str
    statistic: Optional[float]
    df: Optional[float | tuple]
    p_value: Optional[float]
    tail: str
    effect_size: Optional[float]
    n: tuple[int, int]
    details: dict = field(default_factory=dict)
    degenerate: bool = False

    def __post_init__(self):
        if self.tail not in TAILS:
            raise ValueError(f"tail must be one of {TAILS}")
        if min(self.n) < 1:
            raise ValueError("both samples need at least one value")
        if self.p_value is not None and not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value {self.p_value} outside [0, 1]")

    def rejects(self, alpha: float = 0.05) -> bool:
        return self.p_value is not None and self.p_value < alpha

    def to_dict(self) -> dict:
        df = list(self.df) if isinstance(self.df, tuple) else self.df
        return {
            "test": self.test_name,
            "statistic": self.statistic,
            "df": df,
            "p": self.p_value,
            "tail": self.tail,
            "effect_size": self.effect_size,
            "n1": self.n[0],
            "n2": self.n[1],
            "degenerate": self.degenerate,
            "details": self.details,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _check_tail(tail: str) -> str:
    if tail not in TAILS:
        raise ValueError(f"tail must be one of {TAILS}, got {tail!r}")
    return tail


def _floats(x) -> list[float]:
    out = [float(v) for v in x]
    if any(math.isnan(v) for v in out):
        raise ValueError("samples must not contain NaN")
    return out


def _clip(p: float) -> float:
    return min(1.0, max(0.0, p))


# -- Welch ---------------------------------------------------------------------


def welch_t(x: Sequence[float], y: Sequence[float], tail: str = "two_sided") -> TestReport:
    _check_tail(tail)
    x, y = _floats(x), _floats(y)
    nx, ny = len(x), len(y)
    if nx < 2 or ny < 2:
        raise ValueError("welch_t needs at least two values per sample")
    mx, vx = mean_var(x)
    my, vy = mean_var(y)
    ex, ey = vx / nx, vy / ny
    pooled = math.sqrt(((nx - 1) * vx + (ny - 1) * vy) / (nx + ny - 2))
    details = {"mean_x": mx, "mean_y": my, "var_x": vx, "var_y": vy}
    if ex + ey == 0.0:
        return TestReport("welch_t", None, None, None, tail, None, (nx, ny),
                          {**details, "reason": "both samples have zero variance"}, True)
    t = (mx - my) / math.sqrt(ex + ey)
    # variance shares keep the Satterthwaite df finite when ex or ey underflows
    a, b = ex / (ex + ey), ey / (ex + ey)
    df = 1.0 / (a * a / (nx - 1) + b * b / (ny - 1))
    if tail == "one_sided_greater":
        p = t_sf(t, df)
    elif tail == "one_sided_less":
        p = t_cdf(t, df)
    else:
        p = 2.0 * t_sf(abs(t), df)
    return TestReport("welch_t", t, df, _clip(p), tail, (mx - my) / pooled, (nx, ny), details)


# -- Wilcoxon rank sum -----------------------------------------------------------


def midranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        r = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = r
        i = j + 1
    return ranks


def rank_sum_distribution(ranks: Sequence[float], k: int) -> dict[int, int]:
    """Counts of doubled rank sums over all size-``k`` subsets of ``ranks``."""
    dist: list[dict[int, int]] = [dict() for _ in range(k + 1)]
    dist[0][0] = 1
    for r in ranks:
        r2 = int(round(2 * r))
        for j in range(k, 0, -1):
            src = dist[j - 1]
            if not src:
                continue
            dst = dist[j]
            for s, c in src.items():
                dst[s + r2] = dst.get(s + r2, 0) + c
    return dist[k]


def wilcoxon_rank_sum(
    x: Sequence[float],
    y: Sequence[float],
    tail: str = "two_sided",
    exact: Optional[bool] = None,
) -> TestReport:
    """Rank-sum test. W is the rank sum of ``x``; U = W - n_x(n_x+1)/2.

    Exact permutation p-values (with the observed midranks) are used when
    n_x + n_y <= 12 unless ``exact`` says otherwise.
    """
    _check_tail(tail)
    x, y = _floats(x), _floats(y)
    nx, ny = len(x), len(y)
    if nx < 1 or ny < 1:
        raise ValueError("wilcoxon_rank_sum needs at least one value per sample")
    n = nx + ny
    ranks = midranks(x + y)
    w = math.fsum(ranks[:nx])
    u = w - nx * (nx + 1) / 2.0
    ew = nx * (n + 1) / 2.0
    counts: dict[float, int] = {}
    for v in x + y:
        counts[v] = counts.get(v, 0) + 1
    ties = sum(t**3 - t for t in counts.values())
    var = nx * ny / 12.0 * ((n + 1) - (ties / (n * (n - 1)) if n > 1 else 0.0))
    details = {"W": w, "U": u, "U_y": nx * ny - u, "expected_W": ew, "variance_W": var}
    effect = 2.0 * u / (nx * ny) - 1.0  # rank-biserial correlation
    if exact is None:
        exact = n <= EXACT_MAX_N
    if exact:
        dist = rank_sum_distribution(ranks, nx)
        total = comb(n, nx)
        w2 = int(round(2 * w))
        ge = sum(c for s, c in dist.items() if s >= w2) / total
        le = sum(c for s, c in dist.items() if s <= w2) / total
        p = {"one_sided_greater": ge, "one_sided_less": le}.get(tail, min(1.0, 2.0 * min(ge, le)))
        details["method"] = "exact"
        return TestReport("wilcoxon_rank_sum", w, None, _clip(p), tail, effect, (nx, ny), details)
    details["method"] = "normal"
    if var <= 0.0:
        return TestReport("wilcoxon_rank_sum", w, None, None, tail, effect, (nx, ny),
                          {**details, "reason": "all values tied"}, True)
    sd = math.sqrt(var)
    diff = w - ew
    # z is reported uncorrected; the p-value moves half a unit toward the tail
    details["z"] = diff / sd
    if tail == "one_sided_greater":
        p = normal_sf((diff - 0.5) / sd)
    elif tail == "one_sided_less":
        p = normal_cdf((diff + 0.5) / sd)
    else:
        p = 2.0 * normal_sf(max(0.0, abs(diff) - 0.5) / sd)
    return TestReport("wilcoxon_rank_sum", w, None, _clip(p), tail, effect, (nx, ny), details)


# -- Kolmogorov-Smirnov ------------------------------------------------------------


def ks_statistics(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """(sup(F_x - F_y), sup(F_y - F_x)) over the pooled points, both >= 0."""
    xs, ys = sorted(x), sorted(y)
    nx, ny = len(xs), len(ys)
    d_xy = d_yx = 0.0
    for v in sorted(set(xs) | set(ys)):
        fx = bisect.bisect_right(xs, v) / nx
        fy = bisect.bisect_right(ys, v) / ny
        d_xy = max(d_xy, fx - fy)
        d_yx = max(d_yx, fy - fx)
    return d_xy, d_yx


def ks_two_sample(x: Sequence[float], y: Sequence[float], tail: str = "two_sided") -> TestReport:
    _check_tail(tail)
    x, y = _floats(x), _floats(y)
    nx, ny = len(x), len(y)
    if nx < 1 or ny < 1:
        raise ValueError("ks_two_sample needs at least one value per sample")
    d_xy, d_yx = ks_statistics(x, y)
    n_eff = nx * ny / (nx + ny)
    details = {"n_eff": n_eff, "D_plus": d_yx, "D_minus": d_xy}
    if tail == "two_sided":
        d = max(d_xy, d_yx)
        p = kolmogorov_q(math.sqrt(n_eff) * d)
        details["method"] = "asymptotic Kolmogorov series"
    else:
        # x larger means F_x sits below F_y
        d = d_yx if tail == "one_sided_greater" else d_xy
        p = math.exp(-2.0 * n_eff * d * d)
        details["method"] = "one-sided exponential bound exp(-2 n_eff D^2)"
    return TestReport("ks_two_sample", d, None, _clip(p), tail, None, (nx, ny), details)


# -- Levene ------------------------------------------------------------------------


def _median(v: list[float]) -> float:
    s = sorted(v)
    k = len(s) // 2
    return s[k] if len(s) % 2 else (s[k - 1] + s[k]) / 2.0


def levene(
    x: Sequence[float],
    y: Sequence[float],
    center: str = "mean",
    tail: str = "two_sided",
) -> TestReport:
    """ANOVA F on absolute deviations from each sample's centre.

    With one numerator df the F test is a squared t test, so a one-sided
    p-value halves the upper tail when the spread moves in the stated
    direction.
    """
    _check_tail(tail)
    if center not in ("mean", "median"):
        raise ValueError("center must be 'mean' or 'median'")
    x, y = _floats(x), _floats(y)
    nx, ny = len(x), len(y)
    if nx < 2 or ny < 2:
        raise ValueError("levene needs at least two values per sample")
    loc = (lambda v: math.fsum(v) / len(v)) if center == "mean" else _median
    cx, cy = loc(x), loc(y)
    zx = [abs(v - cx) for v in x]
    zy = [abs(v - cy) for v in y]
    n = nx + ny
    mzx, mzy = math.fsum(zx) / nx, math.fsum(zy) / ny
    mz = (math.fsum(zx) + math.fsum(zy)) / n
    between = nx * (mzx - mz) ** 2 + ny * (mzy - mz) ** 2
    within = math.fsum((v - mzx) ** 2 for v in zx) + math.fsum((v - mzy) ** 2 for v in zy)
    df = (1, n - 2)
    details = {"center": center, "mean_abs_dev_x": mzx, "mean_abs_dev_y": mzy}
    if within == 0.0:
        return TestReport("levene", None, df, None, tail, None, (nx, ny),
                          {**details, "reason": "no within-sample spread in deviations"}, True)
    f = (n - 2) * between / within
    upper = f_sf(f, *df)
    if tail == "two_sided":
        p = upper
    else:
        right_way = mzx > mzy if tail == "one_sided_greater" else mzx < mzy
        p = upper / 2.0 if right_way else 1.0 - upper / 2.0
    return TestReport("levene", f, df, _clip(p), tail, None, (nx, ny), details)
