"""Vertex-weight distributions.

The light-tailed families match the tail classes used by the phase
criteria.  The tails are only pinned up to Theta(.) by the theory, so each
family here fixes one exact representative (c_lo = c_hi = 1 in the regime
x >= 1) to make experiments reproducible:

    weibullish(kappa):      P(W >= x) = exp(-x^kappa)
    double_exp_log(gamma):  P(W >= x) = exp(-e^{(log x)^gamma})   (x >= 1)
    double_exp(kappa):      P(W >= x) = exp(-e^{x^kappa})         (x >= 1)

The double-exponential families carry the sub-unit leftover mass on (0, 1)
as a truncated exponential, which keeps the support equal to the positive
half-line without touching the upper tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import ConfigurationError

WEIGHT_FAMILIES = ("weibullish", "double_exp_log", "double_exp", "constant", "empirical")


@dataclass(frozen=True)
class WeightModel:
    family: str
    params: dict = field(default_factory=dict)
    tail_constants: tuple[float, float] = (1.0, 1.0)
    table: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.family not in WEIGHT_FAMILIES:
            raise ConfigurationError(f"unknown weight family {self.family!r}")
        if self.family == "weibullish" and self.params.get("kappa", 0) <= 0:
            raise ConfigurationError("weibullish requires kappa > 0")
        if self.family == "double_exp_log" and self.params.get("gamma", 0) <= 1:
            raise ConfigurationError("double_exp_log requires gamma > 1")
        if self.family == "double_exp" and self.params.get("kappa", 0) <= 0:
            raise ConfigurationError("double_exp requires kappa > 0")
        if self.family == "constant" and self.params.get("c", -1) < 0:
            raise ConfigurationError("constant requires c >= 0")
        if self.family == "empirical":
            if self.table is None or len(self.table) == 0:
                raise ConfigurationError("empirical requires a non-empty table")
            if np.any(self.table < 0):
                raise ConfigurationError("empirical weights must be non-negative")


def constant(c: float) -> WeightModel:
    return WeightModel(family="constant", params={"c": float(c)})


def weibullish(kappa: float) -> WeightModel:
    return WeightModel(family="weibullish", params={"kappa": float(kappa)})


def double_exp_log(gamma: float) -> WeightModel:
    return WeightModel(family="double_exp_log", params={"gamma": float(gamma)})


def double_exp(kappa: float) -> WeightModel:
    return WeightModel(family="double_exp", params={"kappa": float(kappa)})


def empirical(table) -> WeightModel:
    return WeightModel(family="empirical", table=np.asarray(table, dtype=float))


def load_empirical(path) -> WeightModel:
    return empirical(np.loadtxt(path).reshape(-1))


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def sample_n(model: WeightModel, size: int, rng: np.random.Generator) -> np.ndarray:
    """size i.i.d. draws; deterministic given the generator state."""
    fam = model.family
    if fam == "constant":
        return np.full(size, model.params["c"])
    if fam == "empirical":
        return model.table[rng.integers(0, len(model.table), size=size)]
    e = rng.standard_exponential(size)
    if fam == "weibullish":
        return e ** (1.0 / model.params["kappa"])
    if fam == "double_exp_log":
        g = model.params["gamma"]
        big = e >= 1.0
        out = e.copy()
        out[big] = np.exp(np.log(e[big]) ** (1.0 / g))
        return out
    if fam == "double_exp":
        k = model.params["kappa"]
        big = e >= 1.0
        out = e.copy()
        out[big] = np.log(e[big]) ** (1.0 / k)
        return out
    raise ConfigurationError(fam)  # pragma: no cover


def sample_weight(model: WeightModel, rng: np.random.Generator) -> float:
    """One independent draw."""
    return float(sample_n(model, 1, rng)[0])


# ---------------------------------------------------------------------------
# Tails and CDFs
# ---------------------------------------------------------------------------

def _tail_exact(model: WeightModel, x: float) -> float:
    """P(W >= x) of the fixed representative distribution."""
    fam = model.family
    if x <= 0:
        return 1.0
    if fam == "constant":
        return 1.0 if x <= model.params["c"] else 0.0
    if fam == "empirical":
        return float(np.mean(model.table >= x))
    if fam == "weibullish":
        return math.exp(-(x ** model.params["kappa"]))
    if fam == "double_exp_log":
        if x < 1.0:
            return math.exp(-x)
        g = model.params["gamma"]
        return math.exp(-math.exp(math.log(x) ** g))
    if fam == "double_exp":
        k = model.params["kappa"]
        core = math.exp(-math.exp(x ** k))
        if x < 1.0:
            return core + math.exp(-x) - math.exp(-1.0)
        return core
    raise ConfigurationError(fam)  # pragma: no cover


def tail_prob(model: WeightModel, x: float) -> tuple[float, float]:
    """(lo, hi) bracket of P(W >= x) using the declared Theta constants."""
    if x <= 0:
        raise ValueError("x must be positive")
    t = _tail_exact(model, x)
    c_lo, c_hi = model.tail_constants
    return min(1.0, c_lo * t), min(1.0, c_hi * t)


def cdf(model: WeightModel, x) -> np.ndarray:
    """Exact CDF of the representative distribution (vectorised)."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    flat = x.reshape(-1)
    res = np.array([1.0 - _tail_exact(model, max(v, 0.0)) if v > 0 else 0.0 for v in flat])
    out.reshape(-1)[:] = res
    return out


def quantile(model: WeightModel, q) -> np.ndarray:
    """Inverse CDF of the representative distribution (vectorised).

    Each continuous family is a monotone transform W = T(E) of a standard
    exponential E, so the quantile is T(-log(1-q)).
    """
    q = np.asarray(q, dtype=float)
    if np.any((q <= 0) | (q >= 1)):
        raise ValueError("quantiles require q in (0, 1)")
    fam = model.family
    if fam == "constant":
        return np.full_like(q, model.params["c"])
    if fam == "empirical":
        tbl = np.sort(model.table)
        return tbl[np.minimum((q * len(tbl)).astype(int), len(tbl) - 1)]
    e = -np.log1p(-q)
    if fam == "weibullish":
        return e ** (1.0 / model.params["kappa"])
    if fam == "double_exp_log":
        g = model.params["gamma"]
        return np.where(e >= 1.0, np.exp(np.log(np.maximum(e, 1.0)) ** (1.0 / g)), e)
    if fam == "double_exp":
        # the sampling transform is not monotone for this family, so invert
        # the tail directly: closed form above 1, bisection on (0, 1)
        from scipy.optimize import brentq

        k = model.params["kappa"]
        t_at_1 = math.exp(-math.e)
        out = np.empty_like(q)
        flat_q = q.reshape(-1)
        res = np.empty_like(flat_q)
        for j, qa in enumerate(flat_q):
            t = 1.0 - qa
            if t <= t_at_1:
                res[j] = math.log(-math.log(t)) ** (1.0 / k)
            else:
                res[j] = brentq(lambda x: _tail_exact(model, x) - t, 1e-300, 1.0)
        out.reshape(-1)[:] = res
        return out
    raise ConfigurationError(fam)  # pragma: no cover


def analytic_mean(model: WeightModel) -> float:
    """E[W] where a closed form exists."""
    fam = model.family
    if fam == "constant":
        return model.params["c"]
    if fam == "empirical":
        return float(np.mean(model.table))
    if fam == "weibullish":
        return float(gamma_fn(1.0 + 1.0 / model.params["kappa"]))
    raise ConfigurationError(f"no closed-form mean for family {fam!r}")


# ---------------------------------------------------------------------------
# The threshold sequence k_n
# ---------------------------------------------------------------------------

def k_sequence(model: WeightModel, g_id: str, n: float, eps: float) -> float:
    """Closed-form k_n with P(g(W) > k_n) decaying like n^{-(1+eps)}.

    The unit shift from g(w) = w + 1 is absorbed into the eps slack, as in
    the asymptotic analysis; the closed forms are returned verbatim.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if eps <= 0:
        raise ValueError("eps must be positive")
    fam = model.family
    if fam == "constant":
        c = model.params["c"]
        return 1.0 if g_id == "one" else c + 1.0
    L = (1.0 + eps) * math.log(n)
    if fam == "weibullish":
        return L ** (1.0 / model.params["kappa"])
    if fam == "double_exp_log":
        if L <= 1.0:
            raise ValueError("n too small for double_exp_log k_n")
        return math.exp(math.log(L) ** (1.0 / model.params["gamma"]))
    if fam == "double_exp":
        if L <= 1.0:
            raise ValueError("n too small for double_exp k_n")
        return math.log(L) ** (1.0 / model.params["kappa"])
    raise ConfigurationError(f"no closed-form k_n for family {fam!r}")
