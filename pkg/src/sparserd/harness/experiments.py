"""Seeded Monte Carlo trials, summaries and phase-transition sweeps."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
import csv
import math
import time

import numpy as np
from scipy import optimize, special, stats

from ..bounds import th_upper_bound
from ..estimators import distortion, nearest_subspace, optimal_gaussian, threshold_scores, thresholding
from ..sampling import gaussian_correlations, gaussian_matrix, measure, normalize_columns, rate_sharing_matrix, _ceil
from ..sources import draw_source_vector

__all__ = [
    "splitmix64",
    "trial_seed",
    "TrialResult",
    "TrialSummary",
    "TrialError",
    "SweepResult",
    "run_trial",
    "run_trials",
    "phase_transition_sweep",
    "logistic_crossing",
    "wilson_interval",
    "write_trials_csv",
    "write_sweep_csv",
    "SEED_NOTE",
]

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
MATRIX_FREE_CELLS = 2_000_000
SEED_NOTE = "trial seed = splitmix64(master + (index + 1) * 0x9E3779B97F4A7C15)"


def splitmix64(x):
    """One output of the splitmix64 mixer for the 64-bit state ``x``."""
    z = x & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def trial_seed(master, index):
    return splitmix64(int(master) + (int(index) + 1) * _GOLDEN)


class TrialError(RuntimeError):
    """A trial failed; carries the offending trial index."""

    def __init__(self, index, exc):
        super().__init__(f"trial {index} failed: {exc}")
        self.index = index


@dataclass
class TrialResult:
    index: int
    seed: int
    distortion: float
    success: bool
    k: int
    k_est: int
    m: int
    runtime: float = 0.0
    info: dict = field(default_factory=dict)


def wilson_interval(successes, trials, level=0.95):
    ci = stats.binomtest(int(successes), int(trials)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class TrialSummary:
    config: object
    results: list

    @property
    def trials(self):
        return len(self.results)

    @property
    def successes(self):
        return sum(r.success for r in self.results)

    @property
    def success_rate(self):
        return self.successes / self.trials

    @property
    def p_error(self):
        return 1.0 - self.success_rate

    @property
    def p_error_ci(self):
        return wilson_interval(self.trials - self.successes, self.trials)

    @property
    def success_ci(self):
        return wilson_interval(self.successes, self.trials)

    @property
    def mean_distortion(self):
        return float(np.mean([r.distortion for r in self.results]))


def _estimate(cfg, y, A, k_est, rng):
    if cfg.estimator == "th":
        return thresholding(y, A, k_est, rng)
    if cfg.estimator == "ns":
        return nearest_subspace(y, A, k_est, rng)
    return optimal_gaussian(y, A, k_est, cfg.gamma, cfg.alpha, rng)


def _use_matrix_free(cfg, m, n):
    if cfg.matrix_free == "no":
        return False
    if cfg.estimator != "th" or cfg.column_normalize:
        if cfg.matrix_free == "yes":
            raise ValueError("matrix-free sampling only supports thresholding on unnormalized i.i.d. matrices")
        return False
    return cfg.matrix_free == "yes" or m * n > MATRIX_FREE_CELLS


def _iid_trial(cfg, x, k_est, rng):
    n = x.shape[0]
    m = cfg.m
    if _use_matrix_free(cfg, m, n):
        z = gaussian_correlations(x, m, rng, cfg.noiseless)
        return threshold_scores(z, k_est, rng).pattern, m, {}
    A = gaussian_matrix(m, n, rng)
    if cfg.column_normalize:
        A = normalize_columns(A)
    sample = measure(x, A, rng, cfg.noiseless)
    return _estimate(cfg, sample.y, A, k_est, rng).pattern, m, {}


def _rate_sharing_trial(cfg, x, k_est, rng):
    n = x.shape[0]
    n1 = _ceil(cfg.lam * n)
    m1, m2 = _ceil(cfg.rho1 * n1), _ceil(cfg.rho2 * (n - n1))
    free = _use_matrix_free(cfg, m1 + m2, n)
    if free:
        col_map = rng.permutation(n)
        labels = (col_map >= n1).astype(int)
    else:
        A = rate_sharing_matrix(cfg.lam, cfg.rho1, cfg.rho2, n, rng)
        if cfg.column_normalize:
            A = normalize_columns(A)
        sample = measure(x, A, rng, cfg.noiseless)
        labels = A.block_labels()
    picks, info = [], {}
    for b, mb in enumerate((m1, m2)):
        cols = np.flatnonzero(labels == b)
        nb = cols.size
        # estimator only knows the expected block sparsity
        kb = min(int(math.floor(k_est * nb / n + 0.5)), nb)
        if kb == 0:
            continue
        if mb == 0:
            sel = threshold_scores(np.zeros(nb), kb, rng).pattern
        elif free:
            z = gaussian_correlations(x[cols], mb, rng, cfg.noiseless)
            sel = threshold_scores(z, kb, rng).pattern
        else:
            rows = A.block_rows(b)
            sel = _estimate(cfg, sample.y[rows], A.entries[rows][:, cols], kb, rng).pattern
        s_true = np.flatnonzero(x[cols])
        info[f"block{b}_distortion"] = distortion(s_true, sel) if (s_true.size or sel.size) else 0.0
        info[f"block{b}_k"] = int(s_true.size)
        info[f"block{b}_khat"] = int(kb)
        picks.append(cols[sel])
    a1 = max(info.get("block0_k", 0), info.get("block0_khat", 0))
    a2 = max(info.get("block1_k", 0), info.get("block1_khat", 0))
    info["Lambda"] = a1 / (a1 + a2) if a1 + a2 else float("nan")
    pattern = np.sort(np.concatenate(picks)) if picks else np.array([], dtype=np.int64)
    return pattern, m1 + m2, info


def run_trial(cfg, index):
    """Run trial ``index`` of ``cfg`` with its derived seed."""
    seed = trial_seed(cfg.seed, index)
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    try:
        vec = draw_source_vector(cfg.n, cfg.source, rng)
        k = int(vec.pattern.size)
        k_est = k if cfg.k_override is None else int(cfg.k_override)
        if cfg.matrix == "iid_gaussian":
            s_hat, m, info = _iid_trial(cfg, vec.x, k_est, rng)
        else:
            s_hat, m, info = _rate_sharing_trial(cfg, vec.x, k_est, rng)
        d = distortion(vec.pattern, s_hat)
    except Exception as exc:  # attach the trial index
        raise TrialError(index, exc) from exc
    return TrialResult(index, seed, d, d <= cfg.alpha + 1e-12, k, k_est, m, time.perf_counter() - start, info)


def run_trials(cfg, workers=1, start=0):
    """Run ``cfg.trials`` independent trials; results stay in trial-index order."""
    idx = range(start, start + cfg.trials)
    if workers is None or workers <= 1:
        results = [run_trial(cfg, i) for i in idx]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(partial(run_trial, cfg), idx, chunksize=max(1, cfg.trials // (4 * workers))))
    return TrialSummary(cfg, results)


def logistic_crossing(rhos, successes, trials):
    """50% point of a logistic fit of success probability against ``log rho``.

    Returns ``nan`` when the data never straddle 50% or the fit has
    non-positive slope.
    """
    rhos = np.asarray(rhos, dtype=float)
    s = np.asarray(successes, dtype=float)
    t = np.asarray(trials, dtype=float)
    keep = rhos > 0
    x, s, t = np.log(rhos[keep]), s[keep], t[keep]
    rate = s / t
    if x.size < 2 or rate.max() < 0.5 or rate.min() > 0.5:
        return float("nan")
    xc, xs = x.mean(), max(x.std(), 1e-12)
    u = (x - xc) / xs

    def nll(p):
        eta = p[0] + p[1] * u
        return -np.sum(s * special.log_expit(eta) + (t - s) * special.log_expit(-eta))

    fit = optimize.minimize(nll, np.array([0.0, 1.0]), method="BFGS")
    a, b = fit.x
    if not b > 0:
        return float("nan")
    return float(math.exp(xc - xs * a / b))


@dataclass
class SweepResult:
    config: object
    rhos: list
    summaries: list
    crossing: float
    bound: float = float("nan")

    @property
    def success_rates(self):
        return [s.success_rate for s in self.summaries]


def phase_transition_sweep(cfg, rho_grid, workers=1):
    """Success rate at each ``rho`` of an ascending grid plus the fitted 50% crossing.

    Every grid point reuses the master seed, so the source vectors are the
    same across points and only the measurements change.
    """
    rho_grid = [float(r) for r in rho_grid]
    if any(b < a for a, b in zip(rho_grid, rho_grid[1:])):
        raise ValueError("rho grid must be ascending")
    sums = [run_trials(cfg.with_(rho=r), workers) for r in rho_grid]
    crossing = logistic_crossing(rho_grid, [s.successes for s in sums], [s.trials for s in sums])
    bound = float("nan")
    if cfg.estimator == "th" and cfg.matrix == "iid_gaussian" and cfg.alpha < 1:
        bound = th_upper_bound(cfg.source, cfg.alpha)
    return SweepResult(cfg, rho_grid, sums, crossing, bound)


def write_trials_csv(fh, summary):
    """Per-trial rows, preceded by ``#`` lines holding the config and summary."""
    cfg = summary.config
    lo, hi = summary.p_error_ci
    fh.write(f"# config: {cfg.describe()}\n")
    fh.write(f"# {SEED_NOTE}\n")
    fh.write(
        f"# trials={summary.trials} p_error={summary.p_error:.17g} "
        f"p_error_wilson95=[{lo:.17g},{hi:.17g}] mean_distortion={summary.mean_distortion:.17g}\n"
    )
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["trial", "seed", "distortion", "success", "k", "k_est", "m"])
    for r in summary.results:
        w.writerow([r.index, r.seed, "%.17g" % r.distortion, int(r.success), r.k, r.k_est, r.m])


def write_sweep_csv(fh, sweep):
    """One row per rate: success counts, Wilson interval and mean distortion."""
    fh.write(f"# config: {sweep.config.describe()}\n")
    fh.write(f"# {SEED_NOTE}\n")
    fh.write(f"# logistic_crossing={sweep.crossing:.17g} th_upper_bound={sweep.bound:.17g}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["rho", "m", "trials", "successes", "success_rate", "ci_low", "ci_high", "mean_distortion"])
    for r, s in zip(sweep.rhos, sweep.summaries):
        lo, hi = s.success_ci
        w.writerow(
            ["%.17g" % r, s.results[0].m, s.trials, s.successes, "%.17g" % s.success_rate,
             "%.17g" % lo, "%.17g" % hi, "%.17g" % s.mean_distortion]
        )
