import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from sparserd.bounds import (
    BoundCurve,
    BoundedSourceParams,
    bound_curve,
    bounded_curves,
    bounded_source_bounds,
    convexify,
    default_alpha_grid,
    lower_hull,
    ns_upper_bound,
    scaling_curves,
    th_gaussian_closed_form,
    th_integral,
    th_loose_bound,
    th_upper_bound,
    write_curves_csv,
)
from sparserd.sources import Discrete, Gaussian, SourceSpec, TwoPoint, UniformMagnitude


def entropy(p):
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -p * np.log(p) - (1 - p) * np.log(1 - p)
    return np.where((p == 0) | (p == 1), 0.0, h)


def bounded_ns_scan(omega, eta, gamma, alpha, num=400_001):
    """Independent dense scan of the bounded-family NS bound."""
    b = np.linspace(alpha, 1.0, num)
    x = 1 + b * omega * eta * gamma
    gap = 0.5 * (np.log(x) - (x - 1) / x)
    return omega + np.max((omega * entropy(b) + (1 - omega) * entropy(omega * b / (1 - omega))) / gap)


def scalar_bisect(f, lo, hi, iters=200):
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if (f(mid) > 0) == (flo > 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


SOURCES = [
    SourceSpec(0.05, Gaussian(), 10.0),
    SourceSpec(0.1, UniformMagnitude(0.0, 1.0), 3.0),
    SourceSpec(0.02, TwoPoint(1.0), 1.0),
    SourceSpec(0.05, Discrete((0.5, -1.0, 2.0), (0.3, 0.4, 0.3)), 20.0),
]


class TestNSUpperBound:
    def test_alpha_one_is_singleton(self):
        spec = SourceSpec(0.1, Gaussian(), 5.0)
        rho = ns_upper_bound(spec, 1.0)
        x = 1 + 5.0
        num = 0.9 * entropy(0.1 / 0.9)
        assert rho == pytest.approx(0.1 + num / (0.5 * (math.log(x) - (x - 1) / x)), rel=1e-12)
        assert ns_upper_bound(spec, 1.5) == rho

    def test_snr_sweep_decreases_toward_omega(self):
        vals = [ns_upper_bound(SourceSpec(0.05, Gaussian(), 10 ** (db / 10)), 0.1) for db in range(0, 90, 10)]
        assert np.all(np.diff(vals) < 0)
        assert vals[-1] - 0.05 < 0.05

    def test_bounded_dual_implementation(self):
        omega, eta = 1e-4, 0.2
        params = BoundedSourceParams.from_snr(omega, eta, 40.0)
        ns, _ = bounded_source_bounds(omega, params, 0.1)
        assert ns == pytest.approx(bounded_ns_scan(omega, eta, params.gamma, 0.1), rel=1e-6)

    @pytest.mark.parametrize("gamma", [10.0, 1e3, 1e5])
    def test_two_point_matches_bounded_family(self, gamma):
        omega = 0.01
        spec = SourceSpec(omega, TwoPoint(math.sqrt(gamma)))
        ns_bounded, _ = bounded_source_bounds(omega, BoundedSourceParams(1.0, gamma), 0.2)
        assert ns_upper_bound(spec, 0.2) == pytest.approx(ns_bounded, rel=1e-12)

    def test_returns_beta(self):
        rho, beta = ns_upper_bound(SourceSpec(0.05, Gaussian(), 10.0), 0.1, return_beta=True)
        assert 0.1 <= beta <= 1.0 and rho > 0.05

    def test_alpha_positive(self):
        with pytest.raises(ValueError):
            ns_upper_bound(SourceSpec(0.05, Gaussian(), 1.0), 0.0)


class TestTHUpperBound:
    @pytest.mark.parametrize("spec", SOURCES)
    def test_zero_beyond_one_minus_omega(self, spec):
        for a in (1 - spec.omega, 1 - spec.omega / 2):
            assert th_upper_bound(spec, a) == 0.0
            assert th_loose_bound(spec, a) == 0.0

    def test_closed_form_grid(self):
        worst = 0.0
        for omega in np.linspace(0.01, 0.3, 5):
            for var in np.geomspace(0.1, 100, 5):
                for alpha in np.linspace(0.05, 0.6, 5):
                    spec = SourceSpec(omega, Gaussian(0, var))
                    cf = th_gaussian_closed_form(omega, spec.power, alpha)
                    worst = max(worst, abs(th_upper_bound(spec, alpha) / cf - 1))
        assert worst < 1e-6

    def test_low_snr_sparse_closed_form(self):
        spec = SourceSpec(1e-4, Gaussian(), 1.0)
        assert th_upper_bound(spec, 0.1) == pytest.approx(th_gaussian_closed_form(1e-4, 1.0, 0.1), rel=1e-6)

    def test_two_point_hand_bisection(self):
        omega, c, alpha = 0.05, 2.0, 0.15
        spec = SourceSpec(omega, TwoPoint(c))
        P = omega * c * c
        t = stats.norm.isf(alpha * omega / (2 * (1 - omega)))

        def G(mu):
            return stats.norm.cdf(t - mu) - stats.norm.cdf(-t - mu) - alpha

        mu = scalar_bisect(G, 0.0, t + 20)
        assert th_upper_bound(spec, alpha) == pytest.approx(mu**2 * (1 + P) / c**2, rel=1e-9)

    @pytest.mark.parametrize("spec", SOURCES)
    def test_residual(self, spec):
        for alpha in (0.02, 0.1, 0.5):
            rho, resid = th_upper_bound(spec, alpha, return_residual=True)
            assert resid <= 1e-9
            assert abs(th_integral(spec, rho, alpha) - alpha) <= 1e-9

    def test_integral_decreasing_in_rho(self):
        spec = SOURCES[0]
        vals = [th_integral(spec, r, 0.1) for r in np.linspace(0, 100, 40)]
        assert np.all(np.diff(vals) < 0)

    def test_alpha_range(self):
        with pytest.raises(ValueError):
            th_upper_bound(SOURCES[0], 1.0)


class TestGaussianClosedForm:
    def test_vanishes_at_one_minus_omega(self):
        omega = 0.1
        vals = [th_gaussian_closed_form(omega, 10.0, a) for a in (0.8, 0.89, 0.899, 0.8999)]
        assert np.all(np.diff(vals) < 0) and vals[-1] < 1e-3
        assert th_gaussian_closed_form(omega, 10.0, 0.9) == 0.0

    def test_high_snr_floor(self):
        omega, alpha = 0.05, 0.1
        ratio = stats.norm.isf(alpha * omega / (2 * (1 - omega))) / stats.norm.isf((1 - alpha) / 2)
        floor = omega * (ratio**2 - 1)
        assert th_gaussian_closed_form(omega, 1e9, alpha) == pytest.approx(floor, rel=1e-8)

    def test_domain(self):
        with pytest.raises(ValueError):
            th_gaussian_closed_form(0.1, 0.0, 0.1)


class TestLooseBound:
    @pytest.mark.parametrize("spec", SOURCES)
    def test_dominates(self, spec):
        for alpha in np.geomspace(1e-3, 1 - spec.omega - 1e-3, 25):
            assert th_loose_bound(spec, alpha) >= th_upper_bound(spec, alpha)

    def test_two_point_direct(self):
        omega, c, alpha = 0.05, 1.5, 0.2
        spec = SourceSpec(omega, TwoPoint(c))
        q = stats.norm.isf(alpha / 2) + stats.norm.isf(alpha * omega / (2 * (1 - omega)))
        expected = omega * (1 + omega * c * c) / (omega * c * c) * q * q
        assert th_loose_bound(spec, alpha) == pytest.approx(expected, rel=1e-12)

    def test_gaussian_finite_at_alpha_point_two(self):
        spec = SourceSpec(0.05, Gaussian(), 10.0)
        loose, tight = th_loose_bound(spec, 0.2), th_upper_bound(spec, 0.2)
        assert math.isfinite(loose) and loose >= tight > 0


class TestMonotone:
    @pytest.mark.parametrize("label", ["ns_ub", "th_ub", "th_loose"])
    @pytest.mark.parametrize("spec", SOURCES[:2])
    def test_nonincreasing_in_alpha(self, label, spec):
        curve = bound_curve(label, spec, np.geomspace(1e-3, 1 - spec.omega, 40))
        assert np.all(np.diff(curve.rho) <= 1e-9 * np.abs(curve.rho[:-1]))
        assert np.all(curve.rho >= 0)

    @pytest.mark.parametrize("label", ["ns_ub", "th_ub", "th_loose", "th_gaussian"])
    def test_nonincreasing_in_snr(self, label):
        vals = [bound_curve(label, SourceSpec(0.05, Gaussian(), 10 ** (db / 10)), [0.1]).rho[0]
                for db in np.linspace(-10, 40, 11)]
        assert np.all(np.diff(vals) <= 0)

    def test_bounded_curves(self):
        ns, th = bounded_curves(1e-3, BoundedSourceParams.from_snr(1e-3, 0.2, 20.0), np.geomspace(1e-3, 1 - 1e-3, 30))
        assert np.all(np.diff(ns.rho) <= 1e-12) and np.all(np.diff(th.rho) <= 1e-12)
        assert th.rho[-1] == 0.0


class TestBoundedSource:
    def test_sparse_regime_crossing(self):
        omega, eta, alpha = 1e-4, 0.2, 0.1
        low = bounded_source_bounds(omega, BoundedSourceParams.from_snr(omega, eta, 0.0), alpha)
        high = bounded_source_bounds(omega, BoundedSourceParams.from_snr(omega, eta, 40.0), alpha)
        assert low[1] < low[0]
        assert high[0] < high[1]

    def test_large_gamma_limits(self):
        omega, eta, alpha = 0.01, 0.2, 0.1
        q = stats.norm.isf(alpha / 2) + stats.norm.isf(alpha * omega / (2 * (1 - omega)))
        ns, th = bounded_source_bounds(omega, BoundedSourceParams(eta, 1e12), alpha)
        assert th == pytest.approx(omega * omega / (eta * omega) * q * q, rel=1e-8)
        # the NS excess over omega shrinks like 1 / log(gamma)
        excess = [bounded_source_bounds(omega, BoundedSourceParams(eta, g), alpha)[0] - omega for g in (1e12, 1e24, 1e48)]
        assert ns - omega == pytest.approx(excess[0])
        assert excess[0] > excess[1] > excess[2] > 0
        assert excess[2] * math.log(1e48) == pytest.approx(excess[1] * math.log(1e24), rel=0.1)

    def test_params_validation(self):
        with pytest.raises(ValueError):
            BoundedSourceParams(0.0, 1.0)
        with pytest.raises(ValueError):
            BoundedSourceParams(0.5, -1.0)
        p = BoundedSourceParams(0.25, 16.0)
        assert p.floor == 2.0 and p.floor <= p.gamma


def chord_holds(curve, omega, lam, alpha):
    target = lam * alpha + (1 - lam) * (1 - omega)
    return curve(target) <= lam * curve(alpha) + 1e-9


class TestConvexify:
    def test_affine_curve_is_fixed(self):
        omega = 0.1
        a = np.linspace(0.05, 0.9, 30)
        line = BoundCurve(a, 2.0 * (0.9 - a), "ns_ub", omega)
        env = convexify([line], omega)
        np.testing.assert_allclose(env.rho, line(env.alpha), atol=1e-12)

    def test_properties_on_real_curves(self):
        spec = SourceSpec(0.05, Gaussian(), 10.0)
        alphas = default_alpha_grid(spec.omega, 80)
        curves = [bound_curve(lbl, spec, alphas) for lbl in ("ns_ub", "th_ub")]
        env = convexify(curves, spec.omega)
        assert env.alpha[-1] == pytest.approx(1 - spec.omega) and env.rho[-1] == 0.0
        pointwise = np.min([c(env.alpha) for c in curves], axis=0)
        assert np.all(env.rho <= pointwise + 1e-12)
        slopes = np.diff(env.rho) / np.diff(env.alpha)
        assert np.all(np.diff(slopes) >= -1e-9)
        for lam in (0.2, 0.5, 0.8):
            for alpha in (0.01, 0.1, 0.3):
                assert chord_holds(env, spec.omega, lam, alpha)

    def test_empty(self):
        with pytest.raises(ValueError):
            convexify([], 0.1)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0.0, 10.0), min_size=3, max_size=30))
    def test_random_curves(self, values):
        omega = 0.2
        a = np.linspace(0.01, 0.7, len(values))
        curve = BoundCurve(a, np.sort(values)[::-1], "x", omega)
        env = convexify([curve], omega)
        assert np.all(env.rho <= curve(env.alpha) + 1e-12)
        slopes = np.diff(env.rho) / np.diff(env.alpha)
        assert np.all(np.diff(slopes) >= -1e-9 * max(1.0, np.max(np.abs(slopes))))

    def test_lower_hull(self):
        x = np.array([0.0, 1.0, 2.0, 3.0])
        y = np.array([0.0, 2.0, 1.0, 3.0])
        assert lower_hull(x, y) == [0, 2, 3]


class TestScalingCurves:
    def test_th_shape_zero_decay(self):
        omega, P = 0.05, 4.0
        a = np.array([0.01, 0.1, 0.2])
        c = scaling_curves("th", a, omega, P=P, L=0.0, C=1.0)
        np.testing.assert_allclose(c.rho, (1 + P) / P * omega * np.log(1 / (a * omega)))

    def test_ns_endpoint_rule(self):
        omega, P, L = 0.05, 10.0, 1.0
        a = np.array([0.02, 0.2])
        c = scaling_curves("ns", a, omega, P=P, L=L)

        def term(b):
            return b * omega * np.log(1 / (b * omega)) / np.log1p(b ** (4 * L + 2) * P**2)

        np.testing.assert_allclose(c.rho, omega + np.maximum(term(a), term(1.0)))

    def test_gaussian_band(self):
        spec = SourceSpec(0.05, Gaussian(), 10.0)
        a = np.geomspace(0.01, 0.249, 25)
        r = np.array([th_upper_bound(spec, x) for x in a])
        shape = scaling_curves("alpha", a, spec.omega, L=1.0).rho
        band = r / shape
        assert band.max() / band.min() < 2.0

    def test_alpha_range(self):
        with pytest.raises(ValueError):
            scaling_curves("th", [0.3], 0.05)
        with pytest.raises(ValueError):
            scaling_curves("bogus", [0.1], 0.05)

    def test_iid_lower_admissibility(self):
        a = np.array([0.01, 0.1, 0.2])
        c = scaling_curves("iid_lower", a, 0.05, P=10.0, dist=Gaussian())
        assert np.all(c.meta["admissible"])
        assert np.all(np.isfinite(c.rho))
        c2 = scaling_curves("iid_lower", a, 0.05, P=10.0, dist=UniformMagnitude(0.0, 1.0))
        assert c2.meta["theta"] < 1
        assert np.array_equal(np.isnan(c2.rho), ~c2.meta["admissible"])


class TestCurveIO:
    def test_csv_round_trip(self):
        spec = SourceSpec(0.05, Gaussian(), 10.0)
        curve = bound_curve("th_ub", spec, np.geomspace(0.01, 0.5, 7))
        buf = io.StringIO()
        write_curves_csv(buf, [curve])
        lines = buf.getvalue().splitlines()
        assert lines[0] == "alpha,rho,label,omega,snr_db,family"
        assert len(lines) == 8
        fields = lines[3].split(",")
        assert float(fields[1]) == curve.rho[2]
        assert fields[2] == "th_ub" and fields[5] == "gaussian"

    def test_metadata(self):
        curve = bound_curve("th_ub", SOURCES[3], [0.1])
        assert curve.meta["quadrature"] == "exact-sum"
        assert curve.points == [(0.1, curve.rho[0])]
        assert curve(2.0) == np.inf

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            BoundCurve([0.2, 0.1], [1.0, 2.0], "x", 0.1)

    def test_unknown_label(self):
        with pytest.raises(ValueError):
            bound_curve("nope", SOURCES[0], [0.1])
