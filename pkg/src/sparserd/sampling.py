"""Measurement matrices, noisy samples and a compact binary trial format.

Matrices are scaled so that ``E[tr(A A^T)] = m``; for i.i.d. Gaussian
entries this means variance ``1/n``.
"""

from dataclasses import dataclass, field
import math
import struct

import numpy as np

__all__ = [
    "SamplingMatrix",
    "SampleSet",
    "gaussian_matrix",
    "rate_sharing_matrix",
    "normalize_columns",
    "measure",
    "gaussian_correlations",
    "num_measurements",
    "write_sample",
    "read_sample",
]

_MAGIC = b"SPRD"
_VERSION = 1
_HEADER = struct.Struct("<4sIqqqq")


def _ceil(x):
    # ceil that ignores float noise such as 0.3 * 1000 = 300.00000000000006
    return int(math.ceil(x - 1e-9))


def num_measurements(rho, n):
    """``m = max(1, ceil(rho n))``."""
    return max(1, _ceil(rho * n))


@dataclass
class SamplingMatrix:
    """Dense ``m x n`` measurement matrix with its generator description.

    For rate-sharing matrices ``col_map[j]`` is the column of the
    unpermuted block-diagonal matrix that became column ``j`` and
    ``blocks`` holds ``(rows, cols)`` of each diagonal block.
    """

    entries: np.ndarray
    generator: str = "iid_gaussian"
    params: dict = field(default_factory=dict)
    col_map: np.ndarray = None
    blocks: tuple = None

    @property
    def shape(self):
        return self.entries.shape

    @property
    def m(self):
        return self.entries.shape[0]

    @property
    def n(self):
        return self.entries.shape[1]

    def block_labels(self):
        """Block index (0 or 1) of each column; all zeros for unstructured matrices."""
        if self.col_map is None:
            return np.zeros(self.n, dtype=int)
        n1 = self.blocks[0][1]
        return (self.col_map >= n1).astype(int)

    def block_rows(self, b):
        m1 = self.blocks[0][0]
        return slice(0, m1) if b == 0 else slice(m1, self.m)


@dataclass
class SampleSet:
    """One realized trial ``y = A x + w``."""

    y: np.ndarray
    A: SamplingMatrix
    x: np.ndarray
    pattern: np.ndarray
    noise_seed: int = None


def gaussian_matrix(m, n, rng):
    """I.i.d. ``N(0, 1/n)`` matrix."""
    if m < 1 or n < 1:
        raise ValueError("matrix dimensions must be positive")
    entries = rng.standard_normal((m, n)) / math.sqrt(n)
    return SamplingMatrix(entries, "iid_gaussian", {"m": m, "n": n})


def rate_sharing_matrix(lam, rho1, rho2, n, rng, gen1=gaussian_matrix, gen2=gaussian_matrix):
    """Block-diagonal pair of generators with uniformly permuted columns.

    Block one has ``ceil(lam n)`` columns and ``ceil(rho1 ceil(lam n))``
    rows, block two covers the remaining columns with
    ``ceil(rho2 (n - ceil(lam n)))`` rows. Each block is normalized for
    its own width, so the trace constraint holds block by block.
    """
    if not (0 < lam < 1):
        raise ValueError("lambda must lie in (0, 1)")
    if rho1 < 0 or rho2 < 0:
        raise ValueError("rates must be nonnegative")
    n1 = _ceil(lam * n)
    n2 = n - n1
    m1 = _ceil(rho1 * n1)
    m2 = _ceil(rho2 * n2)
    B = np.zeros((m1 + m2, n))
    if m1:
        B[:m1, :n1] = gen1(m1, n1, rng).entries
    if m2 and n2:
        B[m1:, n1:] = gen2(m2, n2, rng).entries
    col_map = rng.permutation(n)
    params = {"lambda": lam, "rho1": rho1, "rho2": rho2}
    return SamplingMatrix(B[:, col_map], "rate_sharing", params, col_map, ((m1, n1), (m2, n2)))


def normalize_columns(A, sq_norm=None):
    """Rescale every column to the same squared norm (default ``m/n``)."""
    entries = A.entries if isinstance(A, SamplingMatrix) else np.asarray(A, dtype=float)
    m, n = entries.shape
    target = m / n if sq_norm is None else sq_norm
    scaled = entries * np.sqrt(target) / np.linalg.norm(entries, axis=0)
    if isinstance(A, SamplingMatrix):
        return SamplingMatrix(scaled, A.generator + "+normalized", dict(A.params), A.col_map, A.blocks)
    return scaled


def measure(x, A, rng, noiseless=False, noise_seed=None):
    """``y = A x + w`` with standard normal ``w`` (``w = 0`` if ``noiseless``)."""
    x = np.asarray(x, dtype=float)
    if not isinstance(A, SamplingMatrix):
        A = SamplingMatrix(np.asarray(A, dtype=float), "custom")
    if A.n != x.shape[0]:
        raise ValueError(f"dimension mismatch: A is {A.shape}, x has length {x.shape[0]}")
    y = A.entries @ x
    if not noiseless:
        y = y + rng.standard_normal(A.m)
    return SampleSet(y, A, x, np.flatnonzero(x), noise_seed)


def gaussian_correlations(x, m, rng, noiseless=False):
    """Draw ``A^T y`` exactly in law without forming ``A``.

    ``A`` is i.i.d. ``N(0, 1/n)`` with ``m`` rows and ``y = A x + w``.
    Writing ``u = x/|x|``, the vector ``g = A u`` and the part of ``A``
    orthogonal to ``u`` are independent, which reduces the draw to a few
    chi-square variables plus one ``n``-dimensional normal vector.
    Costs ``O(n)`` instead of ``O(mn)``.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    nx = float(np.linalg.norm(x))
    h = rng.standard_normal(n)
    if nx == 0.0:
        w2 = 0.0 if noiseless else rng.chisquare(m)
        return h * math.sqrt(w2 / n)
    u = x / nx
    a = rng.chisquare(m) / n
    if noiseless:
        gy, y2 = nx * a, nx**2 * a
    else:
        xi = rng.standard_normal()
        w2 = xi**2 + (rng.chisquare(m - 1) if m > 1 else 0.0)
        gw = math.sqrt(a) * xi
        gy = nx * a + gw
        y2 = nx**2 * a + 2.0 * nx * gw + w2
    h -= u * (u @ h)
    return u * gy + h * math.sqrt(max(y2, 0.0) / n)


def write_sample(path, sample, seed=0):
    """Write ``(y, A, x, s)`` as little-endian float64 with a short header."""
    A = sample.A.entries if isinstance(sample.A, SamplingMatrix) else np.asarray(sample.A)
    m, n = A.shape
    s = np.asarray(sample.pattern, dtype="<i8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, n, m, len(s), int(seed)))
        fh.write(np.asarray(sample.y, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(A, dtype="<f8").tobytes())
        fh.write(np.asarray(sample.x, dtype="<f8").tobytes())
        fh.write(s.tobytes())


def read_sample(path):
    """Inverse of :func:`write_sample`; returns ``(SampleSet, seed)``."""
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, version, n, m, k, seed = _HEADER.unpack_from(raw, 0)
    if magic != _MAGIC or version != _VERSION:
        raise ValueError("not a sample file or unsupported version")
    off = _HEADER.size

    def take(count, dtype):
        nonlocal off
        arr = np.frombuffer(raw, dtype=dtype, count=count, offset=off)
        off += count * 8
        return arr.copy()

    y = take(m, "<f8")
    A = take(m * n, "<f8").reshape(m, n)
    x = take(n, "<f8")
    s = take(k, "<i8")
    return SampleSet(y, SamplingMatrix(A, "loaded"), x, s), seed
