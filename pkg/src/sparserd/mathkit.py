"""Scalar special functions and inequalities used across the package.

Natural logarithms throughout. ``Q`` is the standard normal upper tail.
Functions accept scalars or arrays and return numpy floats or arrays.
"""

import numpy as np
from scipy import special

__all__ = [
    "binary_entropy",
    "q_tail",
    "q_tail_inverse",
    "g_detect",
    "gap_function",
    "chi_square_cdf",
    "chi_square_sf",
    "chi_square_tail_bounds",
    "laurent_massart_upper_tail",
    "rate_term",
    "maxtheta",
    "maxtheta_bound_check",
]


def _check(cond, msg):
    if not np.all(cond):
        raise ValueError(msg)


def binary_entropy(p):
    """Binary entropy in nats, with ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=float)
    _check((p >= 0) & (p <= 1), "binary_entropy requires 0 <= p <= 1")
    out = -special.xlogy(p, p) - special.xlogy(1 - p, 1 - p)
    return out if out.ndim else float(out)


def q_tail(x):
    """Standard normal upper tail ``Q(x) = Pr{N(0,1) > x}``."""
    out = special.ndtr(-np.asarray(x, dtype=float))
    return out if np.ndim(out) else float(out)


def q_tail_inverse(p):
    """Inverse of :func:`q_tail` on the open unit interval."""
    p = np.asarray(p, dtype=float)
    _check((p > 0) & (p < 1), "q_tail_inverse requires 0 < p < 1")
    out = -special.ndtri(p)
    return out if out.ndim else float(out)


def g_detect(mu_sq, t):
    """``G(mu^2, t) = 1 - Q(t + mu) - Q(t - mu) = Pr{|N(mu, 1)| < t}``."""
    mu_sq = np.asarray(mu_sq, dtype=float)
    t = np.asarray(t, dtype=float)
    _check(mu_sq >= 0, "g_detect requires mu_sq >= 0")
    _check(t >= 0, "g_detect requires t >= 0")
    mu = np.sqrt(mu_sq)
    # difference of CDFs; clipping guards the tiny negative rounding at t=0
    out = np.clip(special.ndtr(t - mu) - special.ndtr(-t - mu), 0.0, 1.0)
    return out if out.ndim else float(out)


def gap_function(x):
    """``L(x) = (log x - (x - 1)/x) / 2`` for ``x > 0``."""
    x = np.asarray(x, dtype=float)
    _check(x > 0, "gap_function requires x > 0")
    u = x - 1.0
    # log1p keeps precision near x = 1 where both terms cancel
    out = 0.5 * (np.log1p(u) - u / x)
    return out if out.ndim else float(out)


def _check_dof(d):
    d = np.asarray(d)
    _check(d >= 1, "degrees of freedom must be >= 1")
    _check(np.equal(np.floor(d), d), "degrees of freedom must be integers")


def chi_square_cdf(d, x):
    """CDF of the chi-square law with ``d`` degrees of freedom."""
    _check_dof(d)
    x = np.asarray(x, dtype=float)
    _check(x >= 0, "chi_square_cdf requires x >= 0")
    out = special.gammainc(np.asarray(d, dtype=float) / 2.0, x / 2.0)
    return out if np.ndim(out) else float(out)


def chi_square_sf(d, x):
    """Upper tail of the chi-square law, computed without cancellation."""
    _check_dof(d)
    x = np.asarray(x, dtype=float)
    _check(x >= 0, "chi_square_sf requires x >= 0")
    out = special.gammaincc(np.asarray(d, dtype=float) / 2.0, x / 2.0)
    return out if np.ndim(out) else float(out)


def chi_square_tail_bounds(d, eps):
    """Analytic chi-square tail bounds at relative deviation ``eps``.

    Returns ``(upper_bound, lower_bound)`` where ``upper_bound`` is the
    stated bound ``exp(-d eps^2 / 4)`` on ``Pr{chi2_d > (1 + eps) d}`` and
    ``lower_bound`` is the Chernoff bound ``exp(-d L(1 + eps))`` on
    ``Pr{chi2_d < d / (1 + eps)}``.

    The upper-tail expression is the one commonly attributed to Laurent and
    Massart, but it is not a valid bound for moderate to large ``eps``
    (e.g. ``d=10, eps=1.5``). :func:`laurent_massart_upper_tail` gives the
    correct form.
    """
    _check_dof(d)
    eps = np.asarray(eps, dtype=float)
    _check(eps > 0, "chi_square_tail_bounds requires eps > 0")
    d = np.asarray(d, dtype=float)
    upper = np.exp(-d * eps**2 / 4.0)
    lower = np.exp(-d * gap_function(1.0 + eps))
    if upper.ndim == 0:
        return float(upper), float(lower)
    return upper, lower


def laurent_massart_upper_tail(d, eps):
    """Valid upper-tail bound on ``Pr{chi2_d > (1 + eps) d}``.

    From ``Pr{chi2_d - d >= 2 sqrt(d u) + 2u} <= exp(-u)`` solved for ``u``.
    """
    _check_dof(d)
    eps = np.asarray(eps, dtype=float)
    _check(eps > 0, "laurent_massart_upper_tail requires eps > 0")
    r = 0.5 * (np.sqrt(1.0 + 2.0 * eps) - 1.0)
    out = np.exp(-np.asarray(d, dtype=float) * r**2)
    return out if out.ndim else float(out)


def rate_term(omega, alpha):
    """``R(Omega, alpha) = H(Omega) - Omega H(alpha) - (1 - Omega) H(Omega alpha / (1 - Omega))``."""
    omega = np.asarray(omega, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    _check((omega > 0) & (omega < 0.5), "rate_term requires 0 < omega < 1/2")
    _check((alpha >= 0) & (alpha <= 1), "rate_term requires 0 <= alpha <= 1")
    out = (
        binary_entropy(omega)
        - omega * binary_entropy(alpha)
        - (1 - omega) * binary_entropy(omega * alpha / (1 - omega))
    )
    out = np.asarray(out)
    return out if out.ndim else float(out)


def maxtheta(x, gamma, b):
    """``theta(x) = -x log x / log(1 + gamma x^b)``."""
    x = np.asarray(x, dtype=float)
    return -x * np.log(x) / np.log1p(gamma * x**b)


def maxtheta_bound_check(gamma, b, alpha, num=20001):
    """Grid check of ``max_{alpha<=x<=1/8} theta(x) < 4 max(theta(alpha), theta(1/8))``."""
    if not (gamma > 0 and b >= 1 and 0 < alpha <= 0.125):
        raise ValueError("need gamma > 0, b >= 1 and 0 < alpha <= 1/8")
    if alpha == 0.125:
        xs = np.array([0.125])
    else:
        xs = np.geomspace(alpha, 0.125, num)
    th = maxtheta(xs, gamma, b)
    edge = max(maxtheta(alpha, gamma, b), maxtheta(0.125, gamma, b))
    return bool(np.max(th) < 4.0 * edge)
