"""Two-way fixed-effects regressions on the player-month panel.

The model is ``y_it = a_i + t_t + X_it b + e_it``. It is fitted two ways:
by absorbing both effects with alternating demeaning, and by ordinary least
squares on explicit indicators (intercept, all players but the first, all
months but the first, sorted by id) with a column-pivoted QR solve. Both
report the same coefficients, so the month effects are relative to the
first month in the sample.

Standard errors are cluster-robust by player with the CR1 factor
``G/(G-1) * (N-1)/(N-K)`` where ``K`` counts every estimated parameter,
indicators included; p-values use ``t(G-1)``.
"""
from __future__ import annotations

import datetime as dt
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import qr, solve_triangular
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .gap import PanelCell
from .stats.special import t_sf
from .timeline import month_index_of, month_label, parse_month


class EconError(ValueError):
    pass


class RankDeficient(EconError):
    pass


class TooFewClusters(EconError):
    pass


class NoControlGroup(EconError):
    pass


class NoPostPeriod(EconError):
    pass


@dataclass
class RegressionFit:
    coefficients: dict[str, float]
    se: dict[str, float]
    p_values: dict[str, float]
    residuals: np.ndarray
    fitted: np.ndarray
    r2: float
    adj_r2: float
    n_obs: int
    n_players: int
    n_months: int
    n_params: int
    n_clusters: int
    cluster_level: str
    tau_series: list[tuple[int, float]]
    tau_se: list[float]
    alpha: dict[str, float]
    intercept: float
    method: str
    weighted: bool = False
    dropped_players: dict[str, str] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    label: str = ""
    players: np.ndarray = field(default=None, repr=False)
    months: np.ndarray = field(default=None, repr=False)
    scores: np.ndarray = field(default=None, repr=False)
    bread: np.ndarray = field(default=None, repr=False)
    clusters: np.ndarray = field(default=None, repr=False)

    def stars(self, name: str) -> str:
        return significance_stars(self.p_values.get(name, math.nan))

    def to_dict(self) -> dict:
        def num(v):
            return None if v is None or (isinstance(v, float) and math.isnan(v)) else float(v)

        return {
            "label": self.label,
            "method": self.method,
            "coefficients": {k: num(v) for k, v in self.coefficients.items()},
            "se": {k: num(v) for k, v in self.se.items()},
            "p": {k: num(v) for k, v in self.p_values.items()},
            "stars": {k: self.stars(k) for k in self.coefficients},
            "r2": num(self.r2),
            "adj_r2": num(self.adj_r2),
            "n_obs": self.n_obs,
            "n_players": self.n_players,
            "n_months": self.n_months,
            "n_params": self.n_params,
            "n_clusters": self.n_clusters,
            "cluster_level": self.cluster_level,
            "weighted": self.weighted,
            "dropped_players": dict(sorted(self.dropped_players.items())),
            "notes": list(self.notes),
        }


def significance_stars(p: float) -> str:
    if p is None or math.isnan(p):
        return ""
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.1:
        return "*"
    return ""


# -- panel preparation ----------------------------------------------------------


@dataclass
class _Data:
    y: np.ndarray
    X: np.ndarray
    w: np.ndarray
    pcode: np.ndarray
    tcode: np.ndarray
    players: list[str]
    months: list[int]
    dropped: dict[str, str]


def _prepare(cells: Sequence[PanelCell], X: Optional[np.ndarray], weights: Optional[str]) -> _Data:
    if weights not in (None, "n_matches"):
        raise ValueError("weights must be None or 'n_matches'")
    if X is None:
        X = np.zeros((len(cells), 0))
    X = np.asarray(X, dtype=float).reshape(len(cells), -1)
    order = sorted(range(len(cells)), key=lambda i: (cells[i].player_id, cells[i].month_index, i))
    cells = [cells[i] for i in order]
    X = X[order]
    dropped: dict[str, str] = {}

    # players seen in a single month carry no within variation
    keep = np.ones(len(cells), dtype=bool)
    months_of: dict[str, set] = {}
    for c in cells:
        months_of.setdefault(c.player_id, set()).add(c.month_index)
    for pid, ms in months_of.items():
        if len(ms) < 2 and len(months_of) > 1:
            dropped[pid] = "observed in a single month"
    keep &= np.array([c.player_id not in dropped for c in cells])

    # largest connected set of the player-month graph
    idx = np.flatnonzero(keep)
    if idx.size:
        players = sorted({cells[i].player_id for i in idx})
        months = sorted({cells[i].month_index for i in idx})
        pi = {p: k for k, p in enumerate(players)}
        mi = {m: k for k, m in enumerate(months)}
        rows = [pi[cells[i].player_id] for i in idx]
        cols = [len(players) + mi[cells[i].month_index] for i in idx]
        n = len(players) + len(months)
        g = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        n_comp, labels = connected_components(g, directed=False)
        if n_comp > 1:
            sizes = np.bincount(labels[[pi[cells[i].player_id] for i in idx]], minlength=n_comp)
            best = int(np.argmax(sizes))  # ties go to the first player in sort order
            for p in players:
                if labels[pi[p]] != best:
                    dropped[p] = "not connected to the main player-month set"
            keep &= np.array([c.player_id not in dropped for c in cells])

    cells = [c for c, k in zip(cells, keep) if k]
    X = X[keep]
    if not cells:
        raise RankDeficient("no observations left after dropping singleton players")
    players = sorted({c.player_id for c in cells})
    months = sorted({c.month_index for c in cells})
    pi = {p: k for k, p in enumerate(players)}
    mi = {m: k for k, m in enumerate(months)}
    w = (
        np.array([float(c.n_matches) for c in cells])
        if weights == "n_matches"
        else np.ones(len(cells))
    )
    return _Data(
        y=np.array([c.mean_gap for c in cells], dtype=float),
        X=X,
        w=w,
        pcode=np.array([pi[c.player_id] for c in cells]),
        tcode=np.array([mi[c.month_index] for c in cells]),
        players=players,
        months=months,
        dropped=dropped,
    )


# -- estimators -----------------------------------------------------------------------


def _group_mean(V: np.ndarray, code: np.ndarray, w: np.ndarray, n_groups: int) -> np.ndarray:
    wsum = np.bincount(code, weights=w, minlength=n_groups)
    out = np.empty((n_groups, V.shape[1]))
    for j in range(V.shape[1]):
        out[:, j] = np.bincount(code, weights=w * V[:, j], minlength=n_groups) / wsum
    return out


def demean_two_way(V, pcode, tcode, w, n_p, n_t, tol=1e-13, max_iter=100000):
    """Alternating projections onto the complement of both indicator spaces."""
    V = np.array(V, dtype=float, copy=True)
    if V.ndim == 1:
        V = V[:, None]
    scale = max(1.0, float(np.max(np.abs(V))) if V.size else 1.0)
    for it in range(max_iter):
        V -= _group_mean(V, pcode, w, n_p)[pcode]
        m = _group_mean(V, tcode, w, n_t)
        V -= m[tcode]
        # after the month step only player means can be off
        if np.max(np.abs(_group_mean(V, pcode, w, n_p)), initial=0.0) < tol * scale:
            return V, it + 1
    raise RankDeficient(f"alternating demeaning did not converge in {max_iter} sweeps")


def _backfit(r, pcode, tcode, w, n_p, n_t, tol=1e-13, max_iter=100000):
    a = np.zeros(n_p)
    t = np.zeros(n_t)
    scale = max(1.0, float(np.max(np.abs(r))))
    r = r[:, None]
    for _ in range(max_iter):
        a_new = _group_mean(r - t[tcode, None], pcode, w, n_p)[:, 0]
        t_new = _group_mean(r - a_new[pcode, None], tcode, w, n_t)[:, 0]
        delta = max(np.max(np.abs(a_new - a)), np.max(np.abs(t_new - t)))
        a, t = a_new, t_new
        if delta < tol * scale:
            return a, t
    raise RankDeficient("fixed-effect recovery did not converge")


def _design(d: _Data) -> np.ndarray:
    n, n_p, n_t = len(d.y), len(d.players), len(d.months)
    Z = np.zeros((n, n_p + n_t - 1 + d.X.shape[1]))
    Z[:, 0] = 1.0
    rows = np.arange(n)
    pm = d.pcode > 0
    Z[rows[pm], d.pcode[pm]] = 1.0
    tm = d.tcode > 0
    Z[rows[tm], n_p - 1 + d.tcode[tm]] = 1.0
    Z[:, n_p + n_t - 1:] = d.X
    return Z


def _qr_ols(Z: np.ndarray, y: np.ndarray):
    """OLS by column-pivoted QR. Returns (coef, bread = (Z'Z)^-1)."""
    Q, R, piv = qr(Z, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > diag[0] * 1e-10 * max(Z.shape))) if diag.size else 0
    if rank < Z.shape[1]:
        raise RankDeficient(
            f"design has rank {rank} < {Z.shape[1]} columns; a regressor is collinear with the fixed effects"
        )
    coef_p = solve_triangular(R, Q.T @ y)
    coef = np.empty_like(coef_p)
    coef[piv] = coef_p
    Rinv = solve_triangular(R, np.eye(R.shape[0]))
    bread = np.empty((Z.shape[1], Z.shape[1]))
    bread[np.ix_(piv, piv)] = Rinv @ Rinv.T
    return coef, bread


def cluster_robust_cov(
    scores: np.ndarray,
    bread: np.ndarray,
    clusters: np.ndarray,
    n_obs: int,
    n_params: int,
) -> tuple[np.ndarray, int]:
    """CR1 sandwich ``c * B (sum_g s_g s_g') B'`` from per-observation scores.

    ``scores`` rows are ``x_i * u_i`` (weighted rows for WLS). ``bread`` may
    be the rows of ``(X'X)^-1`` for a subset of coefficients.
    """
    _, inv = np.unique(clusters, return_inverse=True)
    G = int(inv.max()) + 1 if len(inv) else 0
    if G < 2:
        raise TooFewClusters(f"need at least two clusters, got {G}")
    S = np.zeros((G, scores.shape[1]))
    np.add.at(S, inv, scores)
    meat = S.T @ S
    c = G / (G - 1) * (n_obs - 1) / (n_obs - n_params)
    return c * bread @ meat @ bread.T, G


def ols_clustered(X, y, clusters, weights=None):
    """Plain (weighted) OLS with CR1 covariance. Returns (coef, cov, G)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    sw = np.ones(len(y)) if weights is None else np.sqrt(np.asarray(weights, dtype=float))
    Xw, yw = X * sw[:, None], y * sw
    coef, bread = _qr_ols(Xw, yw)
    scores = Xw * (yw - Xw @ coef)[:, None]
    V, G = cluster_robust_cov(scores, bread, np.asarray(clusters), len(y), X.shape[1])
    return coef, V, G


def clustered_se(fit: RegressionFit, cluster: str = "player") -> dict[str, float]:
    if cluster != "player":
        raise ValueError("only player-level clustering is supported")
    V, _ = cluster_robust_cov(fit.scores, fit.bread, fit.clusters, fit.n_obs, fit.n_params)
    names = list(fit.coefficients)
    return {k: float(math.sqrt(V[i, i])) for i, k in enumerate(names)}


def fit_two_way_fe(
    panel: Sequence[PanelCell],
    X: Optional[np.ndarray] = None,
    names: Sequence[str] = (),
    weights: Optional[str] = None,
    method: str = "absorb",
    tol: float = 1e-13,
    tau_se: bool = True,
) -> RegressionFit:
    """Fit ``y = a_i + t_t (+ X b)`` on panel cells.

    ``method`` is ``"absorb"`` (alternating demeaning) or ``"dummies"``
    (explicit indicators). Month-effect standard errors come from the
    explicit-indicator sandwich; with ``tau_se=False`` the absorbing route
    skips that design and takes the regressor SEs from the demeaned
    (Frisch-Waugh) form, which gives the same numbers.
    """
    if method not in ("absorb", "dummies"):
        raise ValueError("method must be 'absorb' or 'dummies'")
    d = _prepare(list(panel), X, weights)
    n, k = len(d.y), d.X.shape[1]
    n_p, n_t = len(d.players), len(d.months)
    names = list(names) or [f"x{j}" for j in range(k)]
    if len(names) != k:
        raise ValueError("one name per regressor column")
    if n_t < 2:
        raise RankDeficient("need at least two months")
    notes = []
    if n_p < 2:
        notes.append("single player: player effect absorbed into the intercept")
    n_params = n_p + n_t - 1 + k
    if n < n_params:
        raise RankDeficient(f"{n} observations cannot identify {n_params} parameters")

    sw = np.sqrt(d.w)
    full = method == "dummies" or tau_se
    if full:
        Z = _design(d)
        coef_d, bread = _qr_ols(Z * sw[:, None], d.y * sw)

    if method == "dummies":
        coef = coef_d
        b = coef[n_p + n_t - 1:]
        intercept = coef[0]
        alpha = np.concatenate([[0.0], coef[1:n_p]])
        tau = np.concatenate([[0.0], coef[n_p:n_p + n_t - 1]])
    else:
        if k:
            Vd, _ = demean_two_way(np.column_stack([d.y, d.X]), d.pcode, d.tcode, d.w, n_p, n_t, tol)
            yd, Xd = Vd[:, 0], Vd[:, 1:]
            b, bread_fw = _qr_ols(Xd * sw[:, None], yd * sw)
        else:
            b = np.zeros(0)
        r = d.y - d.X @ b
        a_full, t_full = _backfit(r, d.pcode, d.tcode, d.w, n_p, n_t, tol)
        shift = t_full[0]
        tau = t_full - shift
        a_full = a_full + shift
        intercept = a_full[0]
        alpha = a_full - intercept
        coef = np.concatenate([[intercept], alpha[1:], tau[1:], b])

    fitted = intercept + alpha[d.pcode] + tau[d.tcode] + d.X @ b
    resid = d.y - fitted
    ybar = np.sum(d.w * d.y) / np.sum(d.w)
    sst = float(np.sum(d.w * (d.y - ybar) ** 2))
    ssr = float(np.sum(d.w * resid**2))
    if sst > 0:
        r2 = 1.0 - ssr / sst
    else:
        r2 = 1.0 if ssr <= 1e-24 else 0.0
    adj = 1.0 - (1.0 - r2) * (n - 1) / (n - n_params) if n > n_params else math.nan

    if full:
        scores = (Z * sw[:, None]) * (resid * sw)[:, None]
        sel = slice(n_p + n_t - 1, None)
        bread_out = bread[sel, :]
    else:
        Xfw = Xd * sw[:, None] if k else np.zeros((n, 0))
        scores = Xfw * (resid * sw)[:, None]
        bread = bread_fw if k else np.zeros((0, 0))
        sel = slice(0, None)
        bread_out = bread
    try:
        if n == n_params:
            raise TooFewClusters("no residual degrees of freedom")
        V, G = cluster_robust_cov(scores, bread, d.pcode, n, n_params)
        se_all = np.sqrt(np.maximum(np.diag(V), 0.0))
    except TooFewClusters:
        G = n_p
        se_all = np.full(scores.shape[1], math.nan)
        notes.append("fewer than two clusters or no residual df: standard errors undefined")
    if full:
        tau_se_list = [0.0] + [float(v) for v in se_all[n_p:n_p + n_t - 1]]
    else:
        tau_se_list = [0.0] + [math.nan] * (n_t - 1)
        notes.append("month-effect standard errors not computed")
    coef_named = {nm: float(v) for nm, v in zip(names, b)}
    se_named = {nm: float(v) for nm, v in zip(names, se_all[sel])}
    p_named = {}
    for nm in names:
        s = se_named[nm]
        if G >= 2 and s > 0 and not math.isnan(s):
            p_named[nm] = min(1.0, 2.0 * t_sf(abs(coef_named[nm]) / s, G - 1))
        else:
            p_named[nm] = math.nan

    return RegressionFit(
        coefficients=coef_named,
        se=se_named,
        p_values=p_named,
        residuals=resid,
        fitted=fitted,
        r2=r2,
        adj_r2=adj,
        n_obs=n,
        n_players=n_p,
        n_months=n_t,
        n_params=n_params,
        n_clusters=G,
        cluster_level="player",
        tau_series=[(m, float(t)) for m, t in zip(d.months, tau)],
        tau_se=tau_se_list,
        alpha={p: float(a) for p, a in zip(d.players, alpha)},
        intercept=float(intercept),
        method=method,
        weighted=weights is not None,
        dropped_players=d.dropped,
        notes=notes,
        players=np.array(d.players)[d.pcode],
        months=np.array(d.months)[d.tcode],
        scores=scores,
        bread=bread_out,
        clusters=d.pcode,
    )


def trend_table(fit: RegressionFit) -> list[tuple[str, float, float]]:
    """(month, tau_hat, clustered se) with the first month as the zero base."""
    return [(month_label(m), t, s) for (m, t), s in zip(fit.tau_series, fit.tau_se)]


# -- difference in differences -----------------------------------------------------------

POST_DEFINITIONS = {
    "after_event1": ("2016-05", "2020-05"),
    "between_events": ("2016-05", "2017-10"),
    "after_event2": ("2017-10", "2020-05"),
}
POST_TITLES = {
    "after_event1": "After AlphaGo",
    "between_events": "Between AlphaGo~Open-sourced AI",
    "after_event2": "After Open-sourced AI",
}


@dataclass(frozen=True)
class DidSpec:
    """One post-period definition.

    Months inside ``post_window`` (inclusive) are post; months before the
    month of the first event are pre. Other months are left out of the
    sample unless ``keep_other_months`` is set, in which case they count
    as not post.
    """

    post_definition: str = "after_event1"
    event_dates: tuple[dt.date, dt.date] = (dt.date(2016, 3, 15), dt.date(2017, 10, 25))
    treatment_flag_column: str = "group_flag"
    post_window: Optional[tuple[str, str]] = None
    keep_other_months: bool = False

    def __post_init__(self):
        if self.post_definition not in POST_DEFINITIONS and self.post_window is None:
            raise ValueError(f"post_definition must be one of {tuple(POST_DEFINITIONS)}")
        if not self.event_dates[0] < self.event_dates[1]:
            raise ValueError("event dates must be ordered")

    @property
    def window(self) -> tuple[int, int]:
        lo, hi = self.post_window or POST_DEFINITIONS[self.post_definition]
        return parse_month(lo), parse_month(hi)

    @property
    def pre_end(self) -> int:
        """First month that is no longer pre-period."""
        return month_index_of(self.event_dates[0])


def did_sample(panel: Sequence[PanelCell], spec: DidSpec):
    lo, hi = spec.window
    cells, treat, post = [], [], []
    for c in panel:
        flag = getattr(c, spec.treatment_flag_column)
        if flag not in ("treated", "control"):
            continue
        is_post = lo <= c.month_index <= hi
        if not is_post and c.month_index >= spec.pre_end and not spec.keep_other_months:
            continue
        cells.append(c)
        treat.append(flag == "treated")
        post.append(is_post)
    return cells, np.array(treat, dtype=bool), np.array(post, dtype=bool)


def fit_did(
    panel: Sequence[PanelCell],
    spec: DidSpec = DidSpec(),
    weights: Optional[str] = None,
    method: str = "absorb",
) -> RegressionFit:
    cells, treat, post = did_sample(panel, spec)
    if not treat.any():
        raise NoControlGroup("no treated cells in the sample")
    if treat.all():
        raise NoControlGroup("no control cells in the sample")
    if not post.any():
        raise NoPostPeriod(f"no cells inside the post window {spec.window}")
    if not (post & treat).any():
        raise NoPostPeriod("no treated cells in the post window")
    D = (treat & post).astype(float)[:, None]
    fit = fit_two_way_fe(cells, D, ["treat_x_post"], weights=weights, method=method,
                         tau_se=method == "dummies")
    fit.label = spec.post_definition
    lo, hi = spec.window
    fit.notes.append(f"post window {month_label(lo)}..{month_label(hi)} inclusive")
    return fit


def did_table(
    panel: Sequence[PanelCell],
    definitions: Sequence[str] = tuple(POST_DEFINITIONS),
    weights: Optional[str] = None,
    event_dates: tuple[dt.date, dt.date] = DidSpec().event_dates,
) -> list[RegressionFit]:
    return [
        fit_did(panel, DidSpec(post_definition=p, event_dates=event_dates), weights=weights)
        for p in definitions
    ]


def format_did_table(fits: Sequence[RegressionFit]) -> str:
    """Aligned plain-text table, one column per post definition."""
    heads = [POST_TITLES.get(f.label, f.label) for f in fits]
    windows = []
    for f in fits:
        lo, hi = POST_DEFINITIONS.get(f.label, ("", ""))
        windows.append(f"({lo} to {hi})" if lo else "")
    coef = [f"{f.coefficients['treat_x_post']:.3f}{f.stars('treat_x_post')}" for f in fits]
    ses = [f"({f.se['treat_x_post']:.3f})" for f in fits]
    rows = [
        ("", heads),
        ("", windows),
        ("(Treatment group) x (Post AI period)", coef),
        ("", ses),
        ("Player Fixed Effect", ["Y"] * len(fits)),
        ("Monthly Fixed Effect", ["Y"] * len(fits)),
        ("Observations", [f"{f.n_obs:,}" for f in fits]),
        ("R2", [f"{f.r2:.3f}" for f in fits]),
        ("Adjusted R2", [f"{f.adj_r2:.3f}" for f in fits]),
    ]
    lw = max(len(r[0]) for r in rows)
    cw = [max(len(r[1][j]) for r in rows) for j in range(len(fits))]
    rule = "-" * (lw + sum(w + 2 for w in cw))
    out = [rule]
    for i, (label, vals) in enumerate(rows):
        out.append(label.ljust(lw) + "".join("  " + v.center(w) for v, w in zip(vals, cw)))
        if i in (1, 3, 5):
            out.append(rule)
    out.append(rule)
    out.append("Note: * p<0.1; ** p<0.05; *** p<0.01 (two-sided, t with G-1 df)")
    out.append("Standard errors are clustered at the player level.")
    return "\n".join(out) + "\n"


def did_json(fits: Sequence[RegressionFit]) -> str:
    return json.dumps({"schema": "aigap did v1", "columns": [f.to_dict() for f in fits]}, indent=2, sort_keys=True) + "\n"
