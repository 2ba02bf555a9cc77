"""Experiment configuration and its flat ``key = value`` file format."""

from dataclasses import dataclass, field, fields, replace
import math

from ..sampling import num_measurements
from ..sources import SourceSpec, make_distribution, parse_params

__all__ = ["ExperimentConfig", "load_config", "parse_config", "parse_grid"]

ESTIMATORS = ("ns", "th", "opt")
MATRICES = ("iid_gaussian", "rate_sharing")


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo experiment.

    ``snr_db`` rescales the source to power ``10**(snr_db/10)``; set it to
    ``None`` to keep ``params`` as given. For ``matrix = rate_sharing`` the
    per-block rates are ``rho1`` and ``rho2`` and ``rho`` is ignored.
    """

    n: int = 1000
    omega: float = 0.05
    family: str = "gaussian"
    params: dict = field(default_factory=dict)
    snr_db: float = 10.0
    rho: float = 0.5
    alpha: float = 0.1
    estimator: str = "th"
    gamma: float = 0.5
    matrix: str = "iid_gaussian"
    lam: float = 0.5
    rho1: float = 0.5
    rho2: float = 0.5
    trials: int = 100
    seed: int = 0
    k_override: int = None
    matrix_free: str = "auto"
    noiseless: bool = False
    column_normalize: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not (0 < self.omega < 0.5):
            raise ValueError("omega must lie in (0, 1/2)")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}")
        if self.matrix not in MATRICES:
            raise ValueError(f"matrix must be one of {MATRICES}")
        if self.matrix == "iid_gaussian" and self.n * self.rho < 1 and self.rho != 0:
            raise ValueError("n * rho must be >= 1")
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")
        if self.matrix_free not in ("auto", "yes", "no"):
            raise ValueError("matrix_free must be auto, yes or no")
        if self.estimator == "opt" and not (0 < self.gamma < 1):
            raise ValueError("gamma must lie in (0, 1)")
        make_distribution(self.family, self.params)

    @property
    def source(self):
        target = None if self.snr_db is None else 10.0 ** (self.snr_db / 10.0)
        return SourceSpec(self.omega, make_distribution(self.family, self.params), target)

    @property
    def m(self):
        return num_measurements(self.rho, self.n)

    def with_(self, **kw):
        return replace(self, **kw)

    def describe(self):
        parts = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, dict):
                v = ",".join(f"{a}={b}" for a, b in sorted(v.items()))
            parts.append(f"{f.name}={v}")
        return " ".join(parts)


def _convert(name, typ, text):
    text = text.strip()
    if typ is dict:
        return parse_params(text)
    if text.lower() in ("none", "null", ""):
        return None
    if typ is bool:
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {text!r}")
    if typ is int:
        val = float(text)
        if val != math.floor(val):
            raise ValueError(f"{name}: expected an integer, got {text!r}")
        return int(val)
    if typ is float:
        return float(text)
    return text


_TYPES = {
    "n": int,
    "omega": float,
    "family": str,
    "params": dict,
    "snr_db": float,
    "rho": float,
    "alpha": float,
    "estimator": str,
    "gamma": float,
    "matrix": str,
    "lam": float,
    "rho1": float,
    "rho2": float,
    "trials": int,
    "seed": int,
    "k_override": int,
    "matrix_free": str,
    "noiseless": bool,
    "column_normalize": bool,
}


def parse_config(text):
    """Parse flat ``key = value`` text. ``#`` starts a comment; unknown keys are errors."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key = key.strip()
        if key not in _TYPES:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        values[key] = _convert(key, _TYPES[key], val)
    return ExperimentConfig(**values)


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())


def parse_grid(text):
    """Parse ``lo:hi:num`` into a list of ``num`` evenly spaced values."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError("grid must look like lo:hi:num")
    lo, hi, num = float(parts[0]), float(parts[1]), int(parts[2])
    if num < 1:
        raise ValueError("grid needs at least one point")
    if num == 1:
        return [lo]
    step = (hi - lo) / (num - 1)
    return [lo + i * step for i in range(num)]
