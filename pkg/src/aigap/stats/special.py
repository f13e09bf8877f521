"""Special functions behind the p-values.

Gamma and error functions come from :mod:`math`; the incomplete beta and
gamma functions are evaluated here by series and continued fractions, and
the distribution functions are written on top of them.
"""
from __future__ import annotations

import math

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10000


class DomainError(ValueError):
    pass


def ln_gamma(x: float) -> float:
    if not x > 0 or math.isinf(x):
        raise DomainError(f"ln_gamma needs x > 0, got {x}")
    return math.lgamma(x)


def _beta_cf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > _TINY else _TINY)
    h = d
    for m in range(1, _MAX_ITER):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise DomainError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def _beta_parts(a: float, b: float, x: float) -> tuple[float, float]:
    """(I_x(a,b), 1 - I_x(a,b)), each computed on its accurate side."""
    if not (a > 0 and b > 0) or math.isinf(a) or math.isinf(b):
        raise DomainError(f"incomplete beta needs a, b > 0, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"incomplete beta needs 0 <= x <= 1, got {x}")
    if x == 0.0:
        return 0.0, 1.0
    if x == 1.0:
        return 1.0, 0.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        lo = math.exp(ln_front) * _beta_cf(a, b, x) / a
        return lo, 1.0 - lo
    hi = math.exp(ln_front) * _beta_cf(b, a, 1.0 - x) / b
    return 1.0 - hi, hi


def reg_inc_beta(a: float, b: float, x: float) -> float:
    return _beta_parts(a, b, x)[0]


def reg_inc_beta_upper(a: float, b: float, x: float) -> float:
    return _beta_parts(a, b, x)[1]


def _gamma_parts(a: float, x: float) -> tuple[float, float]:
    if not a > 0 or math.isinf(a):
        raise DomainError(f"incomplete gamma needs a > 0, got {a}")
    if not x >= 0:
        raise DomainError(f"incomplete gamma needs x >= 0, got {x}")
    if x == 0.0:
        return 0.0, 1.0
    if math.isinf(x):
        return 1.0, 0.0
    ln_front = a * math.log(x) - x - math.lgamma(a)
    if x < a + 1.0:
        term = total = 1.0 / a
        ap = a
        for _ in range(_MAX_ITER):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * _EPS:
                p = total * math.exp(ln_front)
                return p, 1.0 - p
        raise DomainError(f"incomplete gamma series did not converge for a={a}, x={x}")
    # Lentz on the continued fraction for Q
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            q = math.exp(ln_front) * h
            return 1.0 - q, q
    raise DomainError(f"incomplete gamma fraction did not converge for a={a}, x={x}")


def reg_inc_gamma(a: float, x: float) -> float:
    """Lower regularized incomplete gamma P(a, x)."""
    return _gamma_parts(a, x)[0]


def reg_inc_gamma_upper(a: float, x: float) -> float:
    return _gamma_parts(a, x)[1]


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _t_tail(t: float, df: float) -> float:
    """P(T > |t|)."""
    if not df > 0:
        raise DomainError(f"t distribution needs df > 0, got {df}")
    if math.isinf(t):
        return 0.0
    x = df / (df + t * t)
    return 0.5 * reg_inc_beta(df / 2.0, 0.5, x)


def t_cdf(t: float, df: float) -> float:
    tail = _t_tail(t, df)
    return tail if t < 0 else 1.0 - tail


def t_sf(t: float, df: float) -> float:
    tail = _t_tail(t, df)
    return 1.0 - tail if t < 0 else tail


def _f_parts(f: float, d1: float, d2: float) -> tuple[float, float]:
    if not (d1 > 0 and d2 > 0):
        raise DomainError(f"F distribution needs positive df, got ({d1}, {d2})")
    if f <= 0:
        return 0.0, 1.0
    if math.isinf(f):
        return 1.0, 0.0
    return _beta_parts(d1 / 2.0, d2 / 2.0, d1 * f / (d1 * f + d2))


def f_cdf(f: float, d1: float, d2: float) -> float:
    return _f_parts(f, d1, d2)[0]


def f_sf(f: float, d1: float, d2: float) -> float:
    return _f_parts(f, d1, d2)[1]


def kolmogorov_q(lam: float) -> float:
    """P(K > lam) for the Kolmogorov distribution."""
    if math.isnan(lam):
        raise DomainError("kolmogorov_q of NaN")
    if lam <= 0:
        return 1.0
    if lam < 1.0:
        # theta-function form converges fast for small lambda
        s = 0.0
        k = 1
        while True:
            term = math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8.0 * lam * lam))
            s += term
            if term < _EPS * s or k > 100:
                break
            k += 1
        return 1.0 - math.sqrt(2.0 * math.pi) / lam * s
    s = 0.0
    for k in range(1, 101):
        term = math.exp(-2.0 * k * k * lam * lam)
        s += term if k % 2 else -term
        if term < _EPS * abs(s):
            break
    return min(1.0, max(0.0, 2.0 * s))
