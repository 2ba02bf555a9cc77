"""Distortion metric, sparsity-pattern estimators and score diagnostics."""

from dataclasses import dataclass, field
from fractions import Fraction
import itertools
import math

import numpy as np

from .sampling import SamplingMatrix

__all__ = [
    "BudgetExceededError",
    "EstimateResult",
    "DetectionCurves",
    "as_pattern",
    "distortion",
    "combination_weight",
    "pattern_shell_size",
    "residual_norm_sq",
    "nearest_subspace",
    "thresholding",
    "threshold_scores",
    "normalized_scores",
    "scale_correlations",
    "detection_curves",
    "gaussian_log_likelihoods",
    "optimal_gaussian",
    "NS_BUDGET",
    "OPT_BUDGET",
]

NS_BUDGET = 10**7
OPT_BUDGET = 2 * 10**4
TIE_RTOL = 1e-12
_CHUNK = 20000


class BudgetExceededError(ValueError):
    """Raised when exhaustive enumeration would exceed the subset budget."""


@dataclass
class EstimateResult:
    """Selected pattern with estimator-specific diagnostics."""

    pattern: np.ndarray
    scores: np.ndarray = None
    tie_broken: bool = False
    n_ties: int = 1
    seed: int = None
    info: dict = field(default_factory=dict)

    @property
    def unique(self):
        return self.n_ties == 1


@dataclass
class DetectionCurves:
    """Empirical miss-side and false-side curves of the normalized scores."""

    t: np.ndarray
    d_minus: np.ndarray
    d_plus: np.ndarray
    success_value: float


def _rng(rng):
    if isinstance(rng, np.random.Generator):
        return rng, None
    return np.random.default_rng(rng), (None if rng is None else int(rng))


def _entries(A):
    return A.entries if isinstance(A, SamplingMatrix) else np.asarray(A, dtype=float)


def as_pattern(s, n=None):
    """Sorted unique index array; validates the range when ``n`` is given."""
    arr = np.unique(np.asarray(list(s) if isinstance(s, (set, frozenset)) else s, dtype=np.int64))
    if n is not None and arr.size and (arr[0] < 0 or arr[-1] >= n):
        raise ValueError("pattern indices out of range")
    return arr


def distortion(s, s_hat, exact=False):
    """``1 - |s & s_hat| / max(|s|, |s_hat|)``.

    With ``exact=True`` the result is a :class:`fractions.Fraction`.
    """
    a, b = set(np.asarray(list(s), dtype=np.int64).tolist()), set(np.asarray(list(s_hat), dtype=np.int64).tolist())
    size = max(len(a), len(b))
    if size == 0:
        raise ValueError("distortion is undefined for two empty patterns")
    common = len(a & b)
    if exact:
        return 1 - Fraction(common, size)
    return 1.0 - common / size


def combination_weight(s1, s1_hat, s2, s2_hat):
    """Weight ``max(|s1|,|s1_hat|) / (max(|s1|,|s1_hat|) + max(|s2|,|s2_hat|))``."""
    a = max(len(s1), len(s1_hat))
    b = max(len(s2), len(s2_hat))
    return Fraction(a, a + b)


def pattern_shell_size(n, k, j):
    """Number of size-``k`` patterns sharing exactly ``k - j`` indices with a fixed one."""
    return math.comb(k, j) * math.comb(n - k, j)


def residual_norm_sq(y, A, s, return_rank=False):
    """Squared norm of ``y`` after projecting out the span of ``A[:, s]``.

    Uses a QR factorization; rank-deficient column sets are reduced to the
    span they actually have via an SVD.
    """
    y = np.asarray(y, dtype=float)
    s = np.asarray(list(s), dtype=np.int64)
    if s.size == 0:
        out = float(y @ y)
        return (out, 0) if return_rank else out
    As = _entries(A)[:, s]
    q, r = np.linalg.qr(As)
    d = np.abs(np.diag(r))
    tol = max(As.shape) * np.finfo(float).eps * (d.max() if d.size else 0.0)
    if d.size and d.min() > tol:
        rank = s.size
        res = y - q @ (q.T @ y)
    else:
        u, sv, _ = np.linalg.svd(As, full_matrices=False)
        rank = int(np.sum(sv > max(As.shape) * np.finfo(float).eps * sv.max())) if sv.size else 0
        u = u[:, :rank]
        res = y - u @ (u.T @ y)
    out = float(res @ res)
    return (out, rank) if return_rank else out


def _batch_residuals(y, A, combos):
    As = np.transpose(A[:, combos], (1, 0, 2))
    q, r = np.linalg.qr(As)
    proj = np.einsum("nmk,m->nk", q, y)
    res = y[None, :] - np.einsum("nmk,nk->nm", q, proj)
    out = np.einsum("nm,nm->n", res, res)
    d = np.abs(np.diagonal(r, axis1=1, axis2=2))
    tol = max(A.shape) * np.finfo(float).eps * d.max(axis=1)
    for i in np.flatnonzero(d.min(axis=1) <= tol):
        out[i] = residual_norm_sq(y, A, combos[i])
    return out


def _combinations(n, k, budget, name):
    total = math.comb(n, k)
    if total > budget:
        raise BudgetExceededError(
            f"{name} needs {total} subsets (budget {budget}); use thresholding for this size"
        )
    return total


def _pick(candidates, rng):
    if len(candidates) == 1:
        return candidates[0], False
    return candidates[int(rng.integers(len(candidates)))], True


def nearest_subspace(y, A, k, rng=None, budget=NS_BUDGET):
    """Exhaustive least-squares subset selection over all size-``k`` patterns.

    Residuals within ``1e-12`` relative of the minimum count as ties and one
    of them is chosen uniformly at random.
    """
    rng, seed = _rng(rng)
    A = _entries(A)
    y = np.asarray(y, dtype=float)
    m, n = A.shape
    if not (1 <= k <= n):
        raise ValueError("need 1 <= k <= n")
    total = _combinations(n, k, budget, "nearest_subspace")
    if k == n:
        pat = np.arange(n)
        return EstimateResult(pat, np.array([residual_norm_sq(y, A, pat)]), False, 1, seed)
    best = math.inf
    cand_res, cand = [], []
    it = itertools.combinations(range(n), k)
    keep_all = total <= 10**5
    all_res = []
    while True:
        chunk = np.array(list(itertools.islice(it, _CHUNK)), dtype=np.int64)
        if chunk.size == 0:
            break
        res = _batch_residuals(y, A, chunk)
        if keep_all:
            all_res.append(res)
        best = min(best, float(res.min()))
        sel = res <= best * (1 + TIE_RTOL)
        cand_res.append(res[sel])
        cand.append(chunk[sel])
    cand_res = np.concatenate(cand_res)
    cand = np.concatenate(cand)
    ties = [tuple(c) for c in cand[cand_res <= best * (1 + TIE_RTOL)]]
    choice, broke = _pick(ties, rng)
    scores = np.concatenate(all_res) if keep_all else np.array([best])
    return EstimateResult(np.array(choice, dtype=np.int64), scores, broke, len(ties), seed, {"min_residual": best})


def threshold_scores(z, k, rng=None):
    """Top-``k`` indices of ``|z|`` with a uniform tie-break at the boundary."""
    rng, seed = _rng(rng)
    z = np.asarray(z, dtype=float)
    n = z.shape[0]
    if not (0 <= k <= n):
        raise ValueError("need 0 <= k <= n")
    if k == 0:
        return EstimateResult(np.array([], dtype=np.int64), z, False, 1, seed)
    mag = np.abs(z)
    order = np.argsort(-mag, kind="stable")
    kth = mag[order[k - 1]]
    tol = TIE_RTOL * kth
    above = np.flatnonzero(mag > kth + tol)
    boundary = np.flatnonzero(np.abs(mag - kth) <= tol)
    need = k - above.size
    broke = boundary.size > need
    if broke:
        chosen = rng.choice(boundary, size=need, replace=False)
        n_ties = math.comb(int(boundary.size), int(need))
    else:
        chosen = boundary
        n_ties = 1
    pat = np.sort(np.concatenate([above, chosen]).astype(np.int64))
    return EstimateResult(pat, z, bool(broke), n_ties, seed)


def thresholding(y, A, k, rng=None):
    """Select the ``k`` columns most correlated with ``y`` in magnitude."""
    z = _entries(A).T @ np.asarray(y, dtype=float)
    return threshold_scores(z, k, rng)


def scale_correlations(z, x_norm_sq, m, n):
    """Scale raw correlations ``A^T y`` to the normalized scores."""
    return np.asarray(z, dtype=float) * math.sqrt(n / (m * (1.0 + x_norm_sq / n)))


def normalized_scores(y, A, x_norm_sq, m=None, n=None):
    """``Z_i = sqrt(n / (m (1 + |x|^2/n))) <A_i, y>``."""
    A = _entries(A)
    m = A.shape[0] if m is None else m
    n = A.shape[1] if n is None else n
    return scale_correlations(A.T @ np.asarray(y, dtype=float), x_norm_sq, m, n)


def detection_curves(scores, pattern, t_grid):
    """Empirical curves ``D-(t)`` (off-support ``|Z| > t``) and ``D+(t)`` (on-support ``|Z| < t``).

    ``success_value`` is the exact infimum over all ``t`` of
    ``max(((n-k)/k) D-(t), D+(t))``; it equals the thresholding distortion.
    """
    z = np.abs(np.asarray(scores, dtype=float))
    n = z.shape[0]
    on = np.zeros(n, dtype=bool)
    on[np.asarray(pattern, dtype=np.int64)] = True
    k = int(on.sum())
    if not (0 < k < n):
        raise ValueError("pattern must be a nonempty proper subset")
    t = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t) < 0):
        raise ValueError("t_grid must be sorted ascending")
    off_sorted = np.sort(z[~on])
    on_sorted = np.sort(z[on])
    d_minus = 1.0 - np.searchsorted(off_sorted, t, side="right") / (n - k)
    d_plus = np.searchsorted(on_sorted, t, side="left") / k
    # breakpoints: for the top-j set, false alarms count off-support members
    order = np.argsort(-z, kind="stable")
    on_top = np.concatenate([[0], np.cumsum(on[order])])
    j = np.arange(n + 1)
    fa = j - on_top
    miss = k - on_top
    value = float(np.min(np.maximum(fa, miss))) / k
    return DetectionCurves(t, d_minus, d_plus, value)


def gaussian_log_likelihoods(y, A, combos, gamma):
    """``psi(s) = -0.5 (y^T S_s^{-1} y + log det S_s)`` with ``S_s = gamma A_s A_s^T + (1-gamma) I``."""
    A = _entries(A)
    y = np.asarray(y, dtype=float)
    m = A.shape[0]
    eps = 1.0 - gamma
    As = np.transpose(A[:, combos], (1, 0, 2))
    u, sv, _ = np.linalg.svd(As, full_matrices=False)
    proj = np.einsum("nmk,m->nk", u, y)
    sv2 = sv**2
    lam = eps / gamma
    if gamma >= 0.5:
        # projection form keeps precision when eps is tiny
        perp = y[None, :] - np.einsum("nmk,nk->nm", u, proj)
        reg = np.einsum("nm,nm->n", perp, perp) + np.sum(lam / (sv2 + lam) * proj**2, axis=1)
    else:
        reg = float(y @ y) - np.sum(sv2 / (sv2 + lam) * proj**2, axis=1)
    logdet = m * math.log(eps) + np.sum(np.log1p(gamma * sv2 / eps), axis=1)
    return -0.5 * (reg / eps + logdet)


def _lse(v):
    if v.size == 0:
        return -math.inf
    top = v.max()
    return float(top + math.log(np.sum(np.exp(v - top))))


def optimal_gaussian(y, A, k, gamma, alpha, rng=None, budget=OPT_BUDGET):
    """Maximize ``sum_{s' in B_alpha(s)} exp(psi(s'))`` over size-``k`` patterns.

    Balls hold patterns within distortion ``alpha``. Two candidates are
    compared through the patterns in one ball but not the other, which
    cancels the shared part exactly and keeps the comparison well scaled.
    """
    rng, seed = _rng(rng)
    if not (0 < gamma < 1):
        raise ValueError("gamma must lie in (0, 1)")
    A = _entries(A)
    m, n = A.shape
    _combinations(n, k, budget, "optimal_gaussian")
    combos = np.array(list(itertools.combinations(range(n), k)), dtype=np.int64)
    psi = gaussian_log_likelihoods(y, A, combos, gamma)
    member = np.zeros((len(combos), n), dtype=np.int32)
    np.put_along_axis(member, combos, 1, axis=1)
    # d(s, s') <= alpha  <=>  |s & s'| >= k (1 - alpha)
    need = math.ceil(k * (1.0 - alpha) - 1e-9)

    def ball(i):
        return member @ member[i] >= need

    best = 0
    best_ball = ball(0)
    ties = [0]
    for j in range(1, len(combos)):
        bj = ball(j)
        gain = _lse(psi[bj & ~best_ball])
        loss = _lse(psi[best_ball & ~bj])
        if gain == loss:
            ties.append(j)
            continue
        scale = max(abs(gain) if math.isfinite(gain) else 0.0, abs(loss) if math.isfinite(loss) else 0.0, 1.0)
        diff = gain - loss
        if abs(diff) <= TIE_RTOL * scale:
            ties.append(j)
        elif diff > 0:
            best, best_ball, ties = j, bj, [j]
    choice, broke = _pick(ties, rng)
    return EstimateResult(combos[choice].copy(), psi, broke, len(ties), seed, {"best_index": int(choice)})
