"""Sampling-rate versus distortion bounds for the NS and TH estimators.

Every bound maps a distortion ``alpha`` to a sampling rate ``rho``. Curves
are carried as :class:`BoundCurve` objects and can be written as CSV.
"""

from dataclasses import dataclass, field
import csv
import math

import numpy as np
from scipy import optimize

from .mathkit import binary_entropy, g_detect, gap_function, q_tail_inverse, rate_term
from .sources import SourceSpec, entropy_power_ratio

__all__ = [
    "BoundCurve",
    "BoundedSourceParams",
    "default_alpha_grid",
    "ns_objective",
    "ns_upper_bound",
    "th_integral",
    "th_upper_bound",
    "th_gaussian_closed_form",
    "th_loose_bound",
    "bounded_source_bounds",
    "bound_curve",
    "bounded_curves",
    "convexify",
    "lower_hull",
    "scaling_curves",
    "SCALING_KINDS",
    "write_curves_csv",
    "CSV_HEADER",
]

CSV_HEADER = ("alpha", "rho", "label", "omega", "snr_db", "family")
TH_RESIDUAL_TOL = 1e-9


@dataclass
class BoundCurve:
    """Sampled map ``alpha -> rho`` for one bound."""

    alpha: np.ndarray
    rho: np.ndarray
    label: str
    omega: float
    snr_db: float = float("nan")
    family: str = ""
    source: SourceSpec = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.rho = np.asarray(self.rho, dtype=float)
        if self.alpha.shape != self.rho.shape:
            raise ValueError("alpha and rho must have the same shape")
        if np.any(np.diff(self.alpha) <= 0):
            raise ValueError("alpha must be strictly increasing")

    @property
    def points(self):
        return list(zip(self.alpha.tolist(), self.rho.tolist()))

    def __call__(self, a):
        """Linear interpolation; ``inf`` outside the sampled range."""
        return np.interp(a, self.alpha, self.rho, left=np.inf, right=np.inf)


@dataclass(frozen=True)
class BoundedSourceParams:
    """Bounded family: power ``gamma`` and magnitude floor ``sqrt(eta gamma)``."""

    eta: float
    gamma: float

    def __post_init__(self):
        if not (0 < self.eta <= 1):
            raise ValueError("eta must lie in (0, 1]")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    @property
    def floor(self):
        return math.sqrt(self.eta * self.gamma)

    @classmethod
    def from_snr(cls, omega, eta, snr_db):
        """Parameters whose power ``omega * gamma`` equals the given SNR."""
        return cls(eta, 10.0 ** (snr_db / 10.0) / omega)


def default_alpha_grid(omega, num=200, lo=1e-3):
    """Log-spaced distortions on ``[lo, 1 - omega]``."""
    return np.geomspace(lo, 1.0 - omega, num)


def _family_name(dist):
    name = type(dist).__name__
    if name == "Scaled":
        return _family_name(dist.base)
    return {
        "Gaussian": "gaussian",
        "TwoPoint": "two_point",
        "UniformMagnitude": "uniform_magnitude",
        "Discrete": "discrete",
        "PowerMagnitude": "power_magnitude",
    }.get(name, name.lower())


def _as_spec(spec):
    if not isinstance(spec, SourceSpec):
        raise TypeError("expected a SourceSpec")
    return spec


def ns_objective(omega, beta, trunc_power):
    """Ratio inside the NS maximization at ``beta`` given ``P(beta omega, F_beta)``."""
    num = omega * binary_entropy(beta) + (1 - omega) * binary_entropy(omega * beta / (1 - omega))
    den = gap_function(1.0 + trunc_power)
    if den <= 0:
        return math.inf if num > 0 else 0.0
    return num / den


def _maximize_beta(f, alpha, num=512):
    # dense log grid first (the objective can be multimodal), then golden refinement
    if alpha >= 1.0:
        return f(1.0), 1.0
    betas = np.geomspace(alpha, 1.0, num)
    vals = np.array([f(b) for b in betas])
    if np.any(np.isinf(vals)):
        return math.inf, float(betas[np.argmax(vals)])
    i = int(np.argmax(vals))
    lo, hi = betas[max(i - 1, 0)], betas[min(i + 1, num - 1)]
    best_v, best_b = vals[i], betas[i]
    if hi > lo:
        res = optimize.minimize_scalar(lambda b: -f(b), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12 * hi})
        if -res.fun > best_v:
            best_v, best_b = -res.fun, res.x
    return float(best_v), float(best_b)


def ns_upper_bound(spec, alpha, num=512, return_beta=False):
    """NS achievable rate ``Omega + max_beta [...] / L(1 + P(beta Omega, F_beta))``."""
    spec = _as_spec(spec)
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    omega, dist = spec.omega, spec.model

    def f(beta):
        return ns_objective(omega, beta, beta * omega * dist.truncated_second_moment(beta))

    val, beta = _maximize_beta(f, min(alpha, 1.0), num)
    rho = omega + val
    return (rho, beta) if return_beta else rho


def _th_threshold(omega, alpha):
    return q_tail_inverse(alpha * omega / (2.0 * (1.0 - omega)))


def th_integral(spec, rho, alpha):
    """``E_F[G(rho X^2 / (1 + P), t*)]`` with ``t* = Q^{-1}(alpha Omega / (2(1 - Omega)))``."""
    spec = _as_spec(spec)
    dist = spec.model
    t = _th_threshold(spec.omega, alpha)
    c = rho / (1.0 + spec.power)
    if c <= 0:
        return float(g_detect(0.0, t))
    root = math.sqrt(c)
    return dist.expect_abs(lambda a: g_detect(c * np.square(a), t), upper=(t + 10.0) / root, width=1.0 / root)


def th_upper_bound(spec, alpha, return_residual=False):
    """Root in ``rho`` of ``th_integral(spec, rho, alpha) = alpha``; zero for ``alpha >= 1 - Omega``."""
    spec = _as_spec(spec)
    if not (0 < alpha < 1):
        raise ValueError("alpha must lie in (0, 1)")
    if alpha >= 1.0 - spec.omega:
        return (0.0, 0.0) if return_residual else 0.0

    def h(r):
        return th_integral(spec, r, alpha) - alpha

    if h(0.0) <= 0:
        return (0.0, 0.0) if return_residual else 0.0
    hi = th_loose_bound(spec, alpha)
    if not (np.isfinite(hi) and hi > 0):
        hi = 1.0
    for _ in range(200):
        if h(hi) < 0:
            break
        hi *= 2.0
    else:
        raise RuntimeError("could not bracket the TH root")
    rho = optimize.brentq(h, 0.0, hi, xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps, maxiter=500)
    resid = abs(h(rho))
    if resid > TH_RESIDUAL_TOL:
        raise RuntimeError(f"TH integral equation residual {resid:.3g} exceeds tolerance")
    return (rho, resid) if return_residual else rho


def th_gaussian_closed_form(omega, P, alpha):
    """Closed-form TH rate for a zero-mean Gaussian source of power ``P``.

    ``Omega (1 + P)/P [(Q^{-1}(alpha Omega / (2(1-Omega))) / Q^{-1}((1-alpha)/2))^2 - 1]``.
    The denominator quantile is the one that solves the Gaussian integral
    equation; it makes the bracket vanish as ``alpha -> 1 - Omega``.
    """
    if not P > 0:
        raise ValueError("P must be positive")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if alpha >= 1.0 - omega:
        return 0.0
    ratio = _th_threshold(omega, alpha) / q_tail_inverse((1.0 - alpha) / 2.0)
    return max(omega * (1.0 + P) / P * (ratio**2 - 1.0), 0.0)


def th_loose_bound(spec, alpha):
    """Explicit TH bound through the power of ``F_{alpha/2}``."""
    spec = _as_spec(spec)
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    omega = spec.omega
    if alpha >= 1.0 - omega:
        return 0.0
    trunc = omega * spec.model.truncated_second_moment(alpha / 2.0)
    if trunc <= 0:
        return math.inf
    q = q_tail_inverse(alpha / 2.0) + _th_threshold(omega, alpha)
    return omega * (1.0 + spec.power) / trunc * q * q


def bounded_source_bounds(omega, params, alpha, num=512):
    """``(ns, th)`` bounds holding uniformly over the bounded family."""
    eta, gamma = params.eta, params.gamma
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    val, _ = _maximize_beta(lambda b: ns_objective(omega, b, b * omega * eta * gamma), min(alpha, 1.0), num)
    ns = omega + val
    if alpha >= 1.0 - omega:
        th = 0.0
    else:
        q = q_tail_inverse(alpha / 2.0) + _th_threshold(omega, alpha)
        th = omega * (1.0 + omega * gamma) / (eta * gamma * omega) * q * q
    return ns, th


_EVALUATORS = {
    "ns_ub": ns_upper_bound,
    "th_ub": th_upper_bound,
    "th_loose": th_loose_bound,
}


def bound_curve(label, spec, alphas=None):
    """Evaluate one bound on a grid of distortions."""
    spec = _as_spec(spec)
    alphas = default_alpha_grid(spec.omega) if alphas is None else np.asarray(alphas, dtype=float)
    if label == "th_gaussian":
        fn = lambda a: th_gaussian_closed_form(spec.omega, spec.power, a)  # noqa: E731
    elif label in _EVALUATORS:
        fn = lambda a: _EVALUATORS[label](spec, a)  # noqa: E731
    else:
        raise ValueError(f"unknown bound {label!r}")
    rho = np.array([fn(float(a)) for a in alphas])
    meta = {"quadrature": spec.model.quadrature}
    return BoundCurve(alphas, rho, label, spec.omega, spec.snr_db, _family_name(spec.dist), spec, meta)


def bounded_curves(omega, params, alphas=None):
    """``ns_bounded`` and ``th_bounded`` curves for the bounded family."""
    alphas = default_alpha_grid(omega) if alphas is None else np.asarray(alphas, dtype=float)
    vals = np.array([bounded_source_bounds(omega, params, float(a)) for a in alphas])
    snr_db = 10.0 * math.log10(omega * params.gamma)
    meta = {"eta": params.eta, "gamma": params.gamma}
    fam = f"bounded(eta={params.eta:g})"
    return (
        BoundCurve(alphas, vals[:, 0], "ns_bounded", omega, snr_db, fam, None, dict(meta)),
        BoundCurve(alphas, vals[:, 1], "th_bounded", omega, snr_db, fam, None, dict(meta)),
    )


def lower_hull(x, y):
    """Indices of the lower convex hull of points sorted by ``x``."""
    hull = []
    for i in range(len(x)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def convexify(curves, omega):
    """Lower convex envelope of the pointwise minimum of ``curves`` and the anchor ``(1 - omega, 0)``."""
    curves = list(curves)
    if not curves:
        raise ValueError("convexify needs at least one curve")
    anchor = 1.0 - omega
    grid = np.unique(np.concatenate([c.alpha for c in curves] + [np.array([anchor])]))
    grid = grid[grid <= anchor]
    vals = np.min(np.vstack([c(grid) for c in curves]), axis=0)
    vals[-1] = 0.0
    finite = np.isfinite(vals)
    xs, ys = grid[finite], vals[finite]
    idx = lower_hull(xs, ys)
    env = np.interp(grid, xs[idx], ys[idx])
    env = np.where(grid < xs[idx][0], np.inf, env)
    first = curves[0]
    return BoundCurve(
        grid,
        env,
        "convexified",
        omega,
        first.snr_db,
        first.family,
        first.source,
        {"inputs": [c.label for c in curves]},
    )


SCALING_KINDS = ("ns", "th", "lower", "alpha", "snr_lower", "snr_upper", "iid_lower")


def scaling_curves(kind, alphas, omega, P=1.0, L=1.0, C=1.0, dist=None):
    """Functional forms of the scaling laws with a user-supplied constant ``C``.

    Kinds:
      ``ns``         ``Omega + C max_{b in {alpha, 1}} b Omega log(1/(b Omega)) / log(1 + b^(4L+2) P^2)``
      ``th``         ``C (1+P)/P Omega log(1/(alpha Omega)) / alpha^(2L)``
      ``lower``      ``C alpha Omega log(1/(alpha Omega)) / log(1 + alpha^(2L+1) P)``
      ``alpha``      ``C alpha^(-2L) log(1/alpha)``
      ``snr_lower``  ``C / log(1 + P)``
      ``snr_upper``  ``Omega + C / log(1 + P)``
      ``iid_lower``  ``Omega + C Omega log(1/Omega) / log(1 + P)``, NaN where
                     ``theta(Omega, F) > exp(1 - R(Omega, alpha)/Omega)`` fails

    The constants exist but are not determined, so only shapes are meaningful.
    """
    alphas = np.asarray(alphas, dtype=float)
    if np.any((alphas <= 0) | (alphas >= 0.25)):
        raise ValueError("scaling laws are stated for alpha in (0, 1/4)")
    a = alphas
    meta = {"C": C, "L": L, "P": P}
    if kind == "ns":
        def term(b):
            return b * omega * np.log(1.0 / (b * omega)) / np.log1p(b ** (4 * L + 2) * P**2)
        rho = omega + C * np.maximum(term(a), term(np.ones_like(a)))
    elif kind == "th":
        rho = C * (1.0 + P) / P * omega * np.log(1.0 / (a * omega)) / a ** (2 * L)
    elif kind == "lower":
        rho = C * a * omega * np.log(1.0 / (a * omega)) / np.log1p(a ** (2 * L + 1) * P)
    elif kind == "alpha":
        rho = C * a ** (-2 * L) * np.log(1.0 / a)
    elif kind == "snr_lower":
        rho = np.full_like(a, C / math.log1p(P))
    elif kind == "snr_upper":
        rho = np.full_like(a, omega + C / math.log1p(P))
    elif kind == "iid_lower":
        if dist is None:
            raise ValueError("iid_lower needs a distribution for the admissibility check")
        theta = entropy_power_ratio(omega, dist)
        ok = theta > np.exp(1.0 - rate_term(omega, a) / omega)
        rho = np.where(ok, omega + C * omega * math.log(1.0 / omega) / math.log1p(P), np.nan)
        meta["admissible"] = ok
        meta["theta"] = theta
    else:
        raise ValueError(f"unknown scaling kind {kind!r}; choose from {SCALING_KINDS}")
    return BoundCurve(a, rho, f"scaling_{kind}", omega, 10.0 * math.log10(P), "", None, meta)


def write_curves_csv(fh, curves, comment=None):
    """Write curves as CSV rows with 17 significant digits."""
    close = False
    if isinstance(fh, str):
        fh = open(fh, "w", newline="")
        close = True
    try:
        if comment:
            for line in str(comment).splitlines():
                fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for c in curves:
            for a, r in zip(c.alpha, c.rho):
                w.writerow(["%.17g" % a, "%.17g" % r, c.label, "%.17g" % c.omega, "%.17g" % c.snr_db, c.family])
    finally:
        if close:
            fh.close()
