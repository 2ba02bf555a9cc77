"""Distributions of nonzero values, beta-truncation and sparse vector sources.

A distribution family describes the law ``F`` of a single nonzero entry.
Most of the machinery here only needs the law of ``|X|``, exposed through
``abs_cdf`` and ``abs_quantile``.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import integrate, optimize, special

from .mathkit import q_tail_inverse

__all__ = [
    "Gaussian",
    "TwoPoint",
    "UniformMagnitude",
    "Discrete",
    "PowerMagnitude",
    "Scaled",
    "TruncatedDistribution",
    "SourceSpec",
    "GeneratedVector",
    "DecayRateError",
    "power",
    "truncate",
    "truncated_gaussian_power",
    "decay_rate",
    "truncated_power_ratio_bounds",
    "entropy_power_ratio",
    "draw_source_vector",
    "sparsity_count",
    "make_distribution",
    "parse_params",
    "source_from_config",
    "FAMILIES",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


class DecayRateError(RuntimeError):
    """Raised when a numerical decay-rate estimate has not stabilized."""


def _composite_gl(func, lo, hi, width):
    """Composite 16-point Gauss-Legendre rule on ``[lo, hi]``."""
    if hi <= lo:
        return 0.0
    npan = max(1, int(math.ceil((hi - lo) / width)))
    edges = np.linspace(lo, hi, npan + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    pts = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    wts = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return float(np.sum(wts * func(pts)))


class _Family:
    """Shared behaviour built on the magnitude law of a family."""

    # default: sign-symmetric families
    symmetric = True
    quadrature = "adaptive"

    @property
    def second_moment(self):
        return self.mean**2 + self.variance

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        g = self.abs_cdf(np.abs(x))
        # left limit of G at |x| for the negative side
        g_left = self._abs_cdf_left(np.abs(x))
        out = np.where(x >= 0, 0.5 * (1.0 + g), 0.5 * (1.0 - g_left))
        return out if out.ndim else float(out)

    def _abs_cdf_left(self, a):
        return self.abs_cdf(a)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        if np.any((p < 0) | (p > 1)):
            raise ValueError("quantile requires 0 <= p <= 1")
        hi = self.abs_quantile(np.clip(2 * p - 1, 0, 1))
        lo = -self.abs_quantile(np.clip(1 - 2 * p, 0, 1))
        out = np.where(p >= 0.5, hi, lo)
        return out if out.ndim else float(out)

    def sample(self, rng, size):
        mags = self.sample_abs(rng, size)
        signs = rng.choice(np.array([-1.0, 1.0]), size=size)
        return signs * mags

    def entropy(self):
        raise ValueError(f"{type(self).__name__} has no differential entropy")

    def decay_rate(self):
        """Analytic decay rate, or ``None`` when unknown."""
        return None

    def truncated_second_moment(self, beta):
        """``E[X^2]`` under the beta-truncated law, by quantile integration."""
        beta = _check_beta(beta)
        val, _ = integrate.quad(
            lambda p: self.abs_quantile(p) ** 2, 0.0, beta, epsabs=1e-14, epsrel=1e-12, limit=200
        )
        return val / beta

    def expect_abs(self, func, upper=None, width=None):
        """``E[func(|X|)]``, treating ``func`` as zero beyond ``upper``."""
        pmax = 1.0 if upper is None else float(self.abs_cdf(upper))
        if pmax <= 0:
            return 0.0
        val, _ = integrate.quad(
            lambda p: func(self.abs_quantile(p)),
            0.0,
            pmax,
            epsabs=1e-13,
            epsrel=1e-11,
            limit=500,
        )
        return val


@dataclass(frozen=True)
class Gaussian(_Family):
    """Normal law with the given mean and variance."""

    mean: float = 0.0
    variance: float = 1.0
    quadrature = "composite-gauss-legendre"

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError("Gaussian variance must be positive")

    @property
    def sigma(self):
        return math.sqrt(self.variance)

    @property
    def symmetric(self):
        return self.mean == 0.0

    def cdf(self, x):
        out = special.ndtr((np.asarray(x, dtype=float) - self.mean) / self.sigma)
        return out if np.ndim(out) else float(out)

    def quantile(self, p):
        out = self.mean + self.sigma * special.ndtri(np.asarray(p, dtype=float))
        return out if np.ndim(out) else float(out)

    def abs_cdf(self, a):
        a = np.maximum(np.asarray(a, dtype=float), 0.0)
        s = self.sigma
        out = special.ndtr((a - self.mean) / s) - special.ndtr((-a - self.mean) / s)
        out = np.clip(out, 0.0, 1.0)
        return out if out.ndim else float(out)

    def abs_pdf(self, a):
        a = np.asarray(a, dtype=float)
        s = self.sigma
        z1 = (a - self.mean) / s
        z2 = (a + self.mean) / s
        return (np.exp(-0.5 * z1**2) + np.exp(-0.5 * z2**2)) / (s * math.sqrt(2 * math.pi))

    def abs_quantile(self, p):
        p = np.asarray(p, dtype=float)
        if self.mean == 0.0:
            out = self.sigma * special.ndtri((1.0 + p) / 2.0)
            return out if out.ndim else float(out)
        out = np.vectorize(self._abs_quantile_scalar)(p)
        return out if out.ndim else float(out)

    def _abs_quantile_scalar(self, p):
        if p <= 0:
            return 0.0
        if p >= 1:
            return math.inf
        hi = abs(self.mean) + self.sigma
        while self.abs_cdf(hi) < p:
            hi *= 2.0
        return optimize.brentq(lambda a: self.abs_cdf(a) - p, 0.0, hi, xtol=1e-15, rtol=1e-15)

    def sample(self, rng, size):
        return rng.normal(self.mean, self.sigma, size=size)

    def sample_abs(self, rng, size):
        return np.abs(self.sample(rng, size))

    def entropy(self):
        return 0.5 * math.log(2 * math.pi * math.e * self.variance)

    def decay_rate(self):
        return 1.0

    def _second_moment_within(self, t):
        # E[X^2 ; |X| < t] in closed form
        if math.isinf(t):
            return self.second_moment
        mu, s = self.mean, self.sigma
        za, zb = (-t - mu) / s, (t - mu) / s
        pa, pb = special.ndtr(za), special.ndtr(zb)
        phia = math.exp(-0.5 * za**2) / math.sqrt(2 * math.pi)
        phib = math.exp(-0.5 * zb**2) / math.sqrt(2 * math.pi)
        mass = pb - pa
        return mu**2 * mass + 2 * mu * s * (phia - phib) + s**2 * (mass + za * phia - zb * phib)

    def truncated_second_moment(self, beta):
        beta = _check_beta(beta)
        if beta == 1.0:
            return self.second_moment
        if self.mean == 0.0:
            return self.variance * _gaussian_truncation_factor(beta)
        t = self.abs_quantile(beta)
        return self._second_moment_within(t) / beta

    def expect_abs(self, func, upper=None, width=None):
        s = self.sigma
        hi = abs(self.mean) + 40.0 * s
        if upper is not None:
            hi = min(hi, float(upper))
        step = s if width is None else min(s, float(width))
        return _composite_gl(lambda a: func(a) * self.abs_pdf(a), 0.0, hi, step / 2.0)


def _gaussian_truncation_factor(beta):
    """Bracketed factor of the zero-mean Gaussian truncated power."""
    t = q_tail_inverse((1.0 - beta) / 2.0) if beta < 1 else 0.0
    val = 1.0 - (t / beta) * math.sqrt(2.0 / math.pi) * math.exp(-0.5 * t * t)
    return max(val, 0.0)


@dataclass(frozen=True)
class TwoPoint(_Family):
    """Equiprobable values ``+value`` and ``-value``."""

    value: float = 1.0
    quadrature = "exact-sum"

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError("TwoPoint value must be positive")

    mean = 0.0

    @property
    def variance(self):
        return self.value**2

    def abs_cdf(self, a):
        out = (np.asarray(a, dtype=float) >= self.value).astype(float)
        return out if out.ndim else float(out)

    def _abs_cdf_left(self, a):
        return (np.asarray(a, dtype=float) > self.value).astype(float)

    def abs_quantile(self, p):
        out = np.full(np.shape(p), float(self.value))
        return out if out.ndim else float(out)

    def sample_abs(self, rng, size):
        return np.full(size, float(self.value))

    def decay_rate(self):
        return 0.0

    def truncated_second_moment(self, beta):
        _check_beta(beta)
        return self.value**2

    def expect_abs(self, func, upper=None, width=None):
        return float(func(np.array([self.value]))[0])


@dataclass(frozen=True)
class UniformMagnitude(_Family):
    """``|X|`` uniform on ``[lo, hi]`` with an independent random sign."""

    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not (0 <= self.lo < self.hi):
            raise ValueError("UniformMagnitude needs 0 <= lo < hi")

    mean = 0.0

    @property
    def variance(self):
        return (self.hi**3 - self.lo**3) / (3.0 * (self.hi - self.lo))

    def abs_cdf(self, a):
        out = np.clip((np.asarray(a, dtype=float) - self.lo) / (self.hi - self.lo), 0.0, 1.0)
        return out if out.ndim else float(out)

    def abs_quantile(self, p):
        out = self.lo + np.asarray(p, dtype=float) * (self.hi - self.lo)
        return out if np.ndim(out) else float(out)

    def sample_abs(self, rng, size):
        return rng.uniform(self.lo, self.hi, size=size)

    def entropy(self):
        return math.log(2.0 * (self.hi - self.lo))

    def decay_rate(self):
        return 0.0 if self.lo > 0 else 1.0

    def truncated_second_moment(self, beta):
        beta = _check_beta(beta)
        t = self.abs_quantile(beta)
        return (t**3 - self.lo**3) / (3.0 * (t - self.lo))


@dataclass(frozen=True)
class PowerMagnitude(_Family):
    """``|X| = scale * U**exponent`` with ``U`` uniform and a random sign.

    ``Pr{|X| <= eps}`` behaves like ``eps**(1/exponent)``, so the decay rate
    equals ``exponent``.
    """

    exponent: float = 2.0
    scale: float = 1.0

    def __post_init__(self):
        if not (self.exponent > 0 and self.scale > 0):
            raise ValueError("PowerMagnitude needs positive exponent and scale")

    mean = 0.0

    @property
    def variance(self):
        return self.scale**2 / (2.0 * self.exponent + 1.0)

    def abs_cdf(self, a):
        a = np.clip(np.asarray(a, dtype=float) / self.scale, 0.0, 1.0)
        out = a ** (1.0 / self.exponent)
        return out if out.ndim else float(out)

    def abs_quantile(self, p):
        out = self.scale * np.asarray(p, dtype=float) ** self.exponent
        return out if np.ndim(out) else float(out)

    def sample_abs(self, rng, size):
        return self.abs_quantile(rng.uniform(size=size))

    def entropy(self):
        p, c = self.exponent, self.scale
        return math.log(p * c) + 1.0 - p + math.log(2.0)

    def decay_rate(self):
        return float(self.exponent)

    def truncated_second_moment(self, beta):
        beta = _check_beta(beta)
        return self.scale**2 * beta ** (2.0 * self.exponent) / (2.0 * self.exponent + 1.0)


@dataclass(frozen=True)
class Discrete(_Family):
    """Finitely many nonzero atoms with given probability masses."""

    atoms: tuple = (1.0,)
    masses: tuple = (1.0,)
    quadrature = "exact-sum"

    def __post_init__(self):
        atoms = tuple(float(a) for a in self.atoms)
        masses = tuple(float(m) for m in self.masses)
        if len(atoms) != len(masses) or not atoms:
            raise ValueError("atoms and masses must be non-empty and of equal length")
        if any(a == 0 for a in atoms):
            raise ValueError("Discrete atoms must be nonzero")
        if any(m < 0 for m in masses) or abs(sum(masses) - 1.0) > 1e-12:
            raise ValueError("Discrete masses must be nonnegative and sum to 1")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "masses", masses)

    @property
    def symmetric(self):
        return False

    @property
    def mean(self):
        return float(np.dot(self.atoms, self.masses))

    @property
    def second_moment(self):
        return float(np.dot(np.square(self.atoms), self.masses))

    @property
    def variance(self):
        return self.second_moment - self.mean**2

    def _magnitudes(self):
        mags = np.abs(np.asarray(self.atoms))
        masses = np.asarray(self.masses)
        uniq, inv = np.unique(mags, return_inverse=True)
        return uniq, np.bincount(inv, weights=masses)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        a = np.asarray(self.atoms)
        m = np.asarray(self.masses)
        out = np.sum(m * (a[None, :] <= x.reshape(-1, 1)), axis=1).reshape(x.shape)
        return out if out.ndim else float(out)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        order = np.argsort(self.atoms)
        a = np.asarray(self.atoms)[order]
        cum = np.cumsum(np.asarray(self.masses)[order])
        idx = np.minimum(np.searchsorted(cum, p - 1e-15, side="left"), len(a) - 1)
        out = a[idx]
        return out if out.ndim else float(out)

    def abs_cdf(self, a):
        mags, w = self._magnitudes()
        a = np.asarray(a, dtype=float)
        out = np.sum(w * (mags[None, :] <= a.reshape(-1, 1)), axis=1).reshape(a.shape)
        return out if out.ndim else float(out)

    def _abs_cdf_left(self, a):
        mags, w = self._magnitudes()
        a = np.asarray(a, dtype=float)
        return np.sum(w * (mags[None, :] < a.reshape(-1, 1)), axis=1).reshape(a.shape)

    def abs_quantile(self, p):
        mags, w = self._magnitudes()
        cum = np.cumsum(w)
        p = np.asarray(p, dtype=float)
        idx = np.minimum(np.searchsorted(cum, p - 1e-15, side="left"), len(mags) - 1)
        out = mags[idx]
        return out if out.ndim else float(out)

    def sample(self, rng, size):
        return rng.choice(np.asarray(self.atoms), size=size, p=np.asarray(self.masses))

    def sample_abs(self, rng, size):
        return np.abs(self.sample(rng, size))

    def decay_rate(self):
        return 0.0

    def truncated_second_moment(self, beta):
        beta = _check_beta(beta)
        mags, w = self._magnitudes()
        total, left = 0.0, beta
        for a, m in zip(mags, w):
            take = min(m, left)
            total += take * a * a
            left -= take
            if left <= 0:
                break
        return total / beta

    def expect_abs(self, func, upper=None, width=None):
        mags, w = self._magnitudes()
        return float(np.sum(w * func(mags)))


@dataclass(frozen=True)
class Scaled(_Family):
    """The law of ``factor * X`` for ``X`` drawn from ``base``."""

    base: _Family = field(default_factory=Gaussian)
    factor: float = 1.0

    def __post_init__(self):
        if not self.factor > 0:
            raise ValueError("Scaled factor must be positive")

    @property
    def quadrature(self):
        return self.base.quadrature

    @property
    def symmetric(self):
        return self.base.symmetric

    @property
    def mean(self):
        return self.factor * self.base.mean

    @property
    def variance(self):
        return self.factor**2 * self.base.variance

    @property
    def second_moment(self):
        return self.factor**2 * self.base.second_moment

    def cdf(self, x):
        return self.base.cdf(np.asarray(x, dtype=float) / self.factor)

    def quantile(self, p):
        return self.factor * self.base.quantile(p)

    def abs_cdf(self, a):
        return self.base.abs_cdf(np.asarray(a, dtype=float) / self.factor)

    def _abs_cdf_left(self, a):
        return self.base._abs_cdf_left(np.asarray(a, dtype=float) / self.factor)

    def abs_quantile(self, p):
        return self.factor * self.base.abs_quantile(p)

    def abs_pdf(self, a):
        return self.base.abs_pdf(np.asarray(a, dtype=float) / self.factor) / self.factor

    def sample(self, rng, size):
        return self.factor * self.base.sample(rng, size)

    def sample_abs(self, rng, size):
        return self.factor * self.base.sample_abs(rng, size)

    def entropy(self):
        return self.base.entropy() + math.log(self.factor)

    def decay_rate(self):
        return self.base.decay_rate()

    def truncated_second_moment(self, beta):
        return self.factor**2 * self.base.truncated_second_moment(beta)

    def expect_abs(self, func, upper=None, width=None):
        f = self.factor
        up = None if upper is None else upper / f
        wd = None if width is None else width / f
        return self.base.expect_abs(lambda a: func(f * a), upper=up, width=wd)


FAMILIES = {
    "gaussian": Gaussian,
    "two_point": TwoPoint,
    "uniform_magnitude": UniformMagnitude,
    "discrete": Discrete,
    "power_magnitude": PowerMagnitude,
}


def _check_beta(beta):
    beta = float(beta)
    if not (0 < beta <= 1):
        raise ValueError("beta must lie in (0, 1]")
    return beta


@dataclass(frozen=True)
class TruncatedDistribution:
    """Law of the smallest-magnitude ``beta`` fraction of draws from ``base``.

    Magnitudes below ``t_beta`` are kept, magnitudes above are dropped, and
    an atom sitting exactly at ``t_beta`` is dropped with probability
    ``p_beta`` so that the kept mass is exactly ``beta``.
    """

    base: _Family
    beta: float
    t_beta: float
    p_beta: float
    second_moment: float

    def power(self, omega):
        """``P(omega, F_beta)``."""
        return omega * self.second_moment

    def abs_cdf(self, a):
        a = np.asarray(a, dtype=float)
        kept = np.minimum(self.base.abs_cdf(a), self.beta)
        return np.where(a >= self.t_beta, 1.0, kept / self.beta)


def power(omega, dist):
    """Power ``P(omega, F) = omega (mu_F^2 + sigma_F^2)``."""
    return omega * (dist.mean**2 + dist.variance)


def truncate(dist, beta):
    """Return the beta-truncated law of ``dist``."""
    beta = _check_beta(beta)
    t = float(dist.abs_quantile(beta))
    if beta == 1.0:
        return TruncatedDistribution(dist, 1.0, t, 0.0, dist.second_moment)
    below = float(dist._abs_cdf_left(t))
    atom = float(dist.abs_cdf(t)) - below
    p_beta = 1.0 - (beta - below) / atom if atom > 1e-15 else 0.0
    p_beta = min(max(p_beta, 0.0), 1.0)
    return TruncatedDistribution(dist, beta, t, p_beta, dist.truncated_second_moment(beta))


def truncated_gaussian_power(omega, sigma_sq, beta):
    """Power of the beta-truncated zero-mean Gaussian law with variance ``sigma_sq``."""
    beta = _check_beta(beta)
    if not sigma_sq > 0:
        raise ValueError("sigma_sq must be positive")
    return _gaussian_truncation_factor(beta) * omega * sigma_sq


def decay_rate(dist, numeric=False, eps_grid=None, tol=0.05):
    """Decay rate ``L = lim log(eps) / log Pr{|X| <= eps}``.

    Known families return the analytic value unless ``numeric`` is set.
    The numerical estimate regresses ``log eps`` on ``log Pr{|X| <= eps}``
    and raises :class:`DecayRateError` when the slopes over the coarse and
    fine halves of the grid disagree by more than ``tol``.
    """
    if not numeric:
        exact = dist.decay_rate()
        if exact is not None:
            return exact
    eps = np.logspace(-1, -6, 11) if eps_grid is None else np.asarray(eps_grid, dtype=float)
    g = np.asarray(dist.abs_cdf(eps), dtype=float)
    if np.all(g == 0):
        return 0.0
    if np.any(g == 0):
        # mass vanishes below some floor: bounded away from zero
        return 0.0
    lg, le = np.log(g), np.log(eps)
    if np.ptp(lg) < 1e-12:
        raise DecayRateError("Pr{|X| <= eps} does not vanish: mass at zero")
    mid = len(eps) // 2
    s_all = np.polyfit(lg, le, 1)[0]
    s1 = np.polyfit(lg[: mid + 1], le[: mid + 1], 1)[0]
    s2 = np.polyfit(lg[mid:], le[mid:], 1)[0]
    if abs(s1 - s2) > tol * max(abs(s_all), 1e-12):
        raise DecayRateError(f"log-log slope not stabilized ({s1:.4g} vs {s2:.4g})")
    return float(s2)


def truncated_power_ratio_bounds(dist, betas=None, max_spread=None):
    """Fit ``(C-, C+)`` with ``C- beta^{2L} <= P(F_beta)/P(F) <= C+ beta^{2L}``.

    Raises ``ValueError`` if the fitted constants are degenerate or their
    ratio exceeds ``max_spread``.
    """
    L = decay_rate(dist)
    betas = np.geomspace(1e-3, 1.0, 200) if betas is None else np.asarray(betas, dtype=float)
    full = dist.second_moment
    ratio = np.array([dist.truncated_second_moment(b) for b in betas]) / full
    c = ratio / betas ** (2.0 * L)
    lo, hi = float(np.min(c)), float(np.max(c))
    if not (lo > 0 and np.isfinite(hi)):
        raise ValueError("power-ratio sandwich violated on the beta grid")
    if max_spread is not None and hi / lo > max_spread:
        raise ValueError(f"power-ratio constants spread {hi / lo:.3g} exceeds {max_spread}")
    return lo, hi


def entropy_power_ratio(omega, dist):
    """``theta(omega, F) = exp(2 h(F)) / (2 pi e) / (sigma^2 + (1 - omega) mu^2)``."""
    h = dist.entropy()
    return math.exp(2.0 * h) / (2.0 * math.pi * math.e) / (dist.variance + (1.0 - omega) * dist.mean**2)


@dataclass(frozen=True)
class SourceSpec:
    """Sparse vector source with sparsity rate ``omega`` and value law ``dist``.

    When ``power_target`` is set the values are rescaled so that
    ``power(omega, model) == power_target``.
    """

    omega: float
    dist: _Family = field(default_factory=Gaussian)
    power_target: float = None

    def __post_init__(self):
        if not (0 < self.omega < 0.5):
            raise ValueError("omega must lie in (0, 1/2)")
        if self.power_target is not None and not self.power_target > 0:
            raise ValueError("power_target must be positive")

    @property
    def model(self):
        if self.power_target is None:
            return self.dist
        current = power(self.omega, self.dist)
        return Scaled(self.dist, math.sqrt(self.power_target / current))

    @property
    def power(self):
        return power(self.omega, self.model)

    @property
    def snr_db(self):
        return 10.0 * math.log10(self.power)


@dataclass
class GeneratedVector:
    """A drawn sparse vector and the sorted nonzero values."""

    x: np.ndarray
    pattern: np.ndarray
    values: np.ndarray

    def empirical_cdf(self, t):
        return np.searchsorted(self.values, np.asarray(t, dtype=float), side="right") / len(self.values)


def sparsity_count(n, omega):
    """``k = round(omega n)`` with halves rounded up."""
    return int(math.floor(omega * n + 0.5))


def draw_source_vector(n, spec, rng, k=None):
    """Draw a length-``n`` vector with ``k`` i.i.d. nonzeros at random positions."""
    if n < 1:
        raise ValueError("n must be >= 1")
    k = sparsity_count(n, spec.omega) if k is None else int(k)
    if k < 1:
        raise ValueError("source produces no nonzero entries (k = 0)")
    if k > n:
        raise ValueError("k exceeds n")
    pattern = np.sort(rng.choice(n, size=k, replace=False))
    vals = np.asarray(spec.model.sample(rng, k), dtype=float)
    x = np.zeros(n)
    x[pattern] = vals
    return GeneratedVector(x=x, pattern=pattern, values=np.sort(vals))


def parse_params(text):
    """Parse ``"a=1, b=2"`` into a dict. List values use ``;`` separators."""
    out = {}
    text = (text or "").strip()
    if not text:
        return out
    for item in text.split(","):
        if not item.strip():
            continue
        key, sep, val = item.partition("=")
        if not sep:
            raise ValueError(f"malformed parameter {item!r}")
        key, val = key.strip(), val.strip()
        if ";" in val:
            out[key] = tuple(float(v) for v in val.split(";") if v.strip())
        else:
            out[key] = float(val)
    return out


def make_distribution(family, params=None):
    """Build a family by name from a parameter mapping."""
    try:
        cls = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown family {family!r}; choose from {sorted(FAMILIES)}") from None
    params = dict(params or {})
    if cls is Discrete:
        for key in ("atoms", "masses"):
            if key in params and not isinstance(params[key], tuple):
                params[key] = (params[key],)
    try:
        return cls(**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {family}: {exc}") from None


def source_from_config(cfg):
    """Build a :class:`SourceSpec` from keys ``family``, ``params``, ``omega``, ``power_db``."""
    cfg = dict(cfg)
    allowed = {"family", "params", "omega", "power_db"}
    unknown = set(cfg) - allowed
    if unknown:
        raise ValueError(f"unknown source keys: {sorted(unknown)}")
    params = cfg.get("params", {})
    if isinstance(params, str):
        params = parse_params(params)
    dist = make_distribution(cfg.get("family", "gaussian"), params)
    target = None
    if cfg.get("power_db") is not None:
        target = 10.0 ** (float(cfg["power_db"]) / 10.0)
    return SourceSpec(float(cfg["omega"]), dist, target)
