"""Attachment-rule fitness functions and their reciprocal tail sums.

A fitness function f(j, w) gives the rate at which a vertex of out-degree j
and weight w attracts the next newcomer.  The multiplicative families here
factor as f(j, w) = g(w) * s(j); the residual-time quantity

    mu_n^w = sum_{i >= n} 1 / f(i, w)

is evaluated with a certified truncation error obtained from elementary
integral brackets of the tail of 1/s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gamma as gamma_fn, gammaincc

from .errors import ConfigurationError, NumericOverflowError, PrecisionUnreachableError

FAMILIES = (
    "case_i",
    "case_ii",
    "case_iii",
    "case_iv",
    "geometric",
    "uniform_attach",
    "custom_table",
)

# Families with a summable reciprocal series and a certified tail bracket.
SUMMABLE_FAMILIES = ("case_i", "case_ii", "case_iii", "case_iv", "geometric", "custom_table")

# Relative slop allotted to scipy special-function evaluations.
_SPECIAL_FN_SLOP = 1e-12

# Beyond this n, mu is evaluated from the closed-form bracket alone.
_LARGE_N = 10**6


@dataclass(frozen=True)
class GrowthCertificate:
    """User-supplied regular-growth certificate for s.

    beta/p/C/N assert:  s(n)/n^beta -> inf,  s(n)/n^p -> 0,  and
    s(n) <= C n^{1+beta-p}/log(n) * inf_{i>=n} s(i)  for n >= N.

    tail_q/tail_c (custom tables only) assert s(i) >= tail_c * i^tail_q
    beyond the tabulated range, which certifies reciprocal summability.
    """

    beta: float
    p: float
    C: float
    N: int
    tail_q: Optional[float] = None
    tail_c: Optional[float] = None

    def __post_init__(self):
        if not (0.0 < self.beta < 1.0):
            raise ConfigurationError(f"beta must lie in (0,1), got {self.beta}")
        if not (1.0 < self.p < 1.0 + self.beta):
            raise ConfigurationError(f"p must lie in (1, 1+beta), got {self.p}")
        if self.C <= 0 or self.N < 1:
            raise ConfigurationError("C must be positive and N a positive integer")
        if self.tail_q is not None and self.tail_q <= 1.0:
            raise ConfigurationError("tail_q must exceed 1 for a summable tail")


@dataclass(frozen=True)
class FitnessSpec:
    """A fitness function f(j, w), multiplicative unless family-specific.

    g_id selects the weight factor: "w_plus_1" (g(w) = w + 1, minimised at
    w* = 0) or "one" (no fitness, g == 1).
    """

    family: str
    params: dict = field(default_factory=dict)
    g_id: str = "w_plus_1"
    w_star: float = 0.0
    growth: Optional[GrowthCertificate] = None
    table: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown fitness family {self.family!r}")
        if self.g_id not in ("w_plus_1", "one"):
            raise ConfigurationError(f"unknown g id {self.g_id!r}")
        if self.family == "custom_table":
            if self.table is None or len(self.table) == 0:
                raise ConfigurationError("custom_table requires a table of s values")
            if np.any(~np.isfinite(self.table)) or np.any(self.table <= 0):
                raise ConfigurationError("custom table values must be finite and positive")
        _check_family_params(self.family, self.params)

    @property
    def summable(self) -> bool:
        return self.family in SUMMABLE_FAMILIES

    def g(self, w):
        """Weight factor g(w); works on scalars and arrays."""
        if self.g_id == "one":
            return np.ones_like(np.asarray(w, dtype=float)) if np.ndim(w) else 1.0
        return np.asarray(w, dtype=float) + 1.0 if np.ndim(w) else float(w) + 1.0

    def log_g(self, w):
        return np.log(self.g(w))


def _check_family_params(family: str, params: dict) -> None:
    if family in ("case_i", "case_iii", "case_iv"):
        sigma = params.get("sigma")
        if sigma is None or sigma <= 1.0:
            raise ConfigurationError(f"{family} requires sigma > 1")
    if family == "case_ii":
        nu = params.get("nu")
        if nu is None or not (0.0 < nu < 1.0):
            raise ConfigurationError("case_ii requires nu in (0,1)")
    if family == "case_iv":
        alpha = params.get("alpha")
        if alpha is None or not (0.5 < alpha <= 1.0):
            raise ConfigurationError("case_iv requires alpha in (1/2, 1]")


# p sits well inside (1, 1+beta) so the decay of s(n)/n^p is visible at
# desk ranges; C covers the sandwich ratio globally, not just in the limit.
_DEFAULT_GROWTH = {
    "case_i": GrowthCertificate(beta=0.9, p=1.5, C=2.0, N=10),
    "case_ii": GrowthCertificate(beta=0.9, p=1.5, C=2.0, N=10),
    "case_iii": GrowthCertificate(beta=0.9, p=1.5, C=2.0, N=10),
}


def builtin(family: str, g_id: str = "w_plus_1", growth: GrowthCertificate | None = None,
            table: np.ndarray | None = None, **params) -> FitnessSpec:
    """Construct a builtin fitness spec with a sensible growth certificate."""
    if growth is None:
        if family in _DEFAULT_GROWTH:
            growth = _DEFAULT_GROWTH[family]
        elif family == "case_iv":
            # the square dips drag inf s down to n^alpha, so the sandwich
            # constant must absorb an n^{1-(1+beta-p)-alpha} log^4 n hump
            alpha = params.get("alpha", 0.0)
            beta = min(0.9, max(0.1, alpha - 0.05))
            p = min(1.45, 1.0 + beta - 0.01)
            growth = GrowthCertificate(beta=beta, p=p, C=1e5, N=10)
    return FitnessSpec(family=family, params=params, g_id=g_id, growth=growth,
                       table=None if table is None else np.asarray(table, dtype=float))


def load_custom_table(path) -> np.ndarray:
    """Read a two-column (index, value) text file into a dense s table."""
    raw = np.loadtxt(path)
    if raw.ndim == 1:
        raw = raw.reshape(1, -1)
    if raw.shape[1] != 2:
        raise ConfigurationError("custom table file must have two columns: index, value")
    idx = raw[:, 0].astype(int)
    if not np.array_equal(idx, np.arange(len(idx))):
        raise ConfigurationError("custom table indices must be 0,1,2,... without gaps")
    return raw[:, 1]


# ---------------------------------------------------------------------------
# s(i) evaluation
# ---------------------------------------------------------------------------

def _is_square(i: np.ndarray) -> np.ndarray:
    r = np.floor(np.sqrt(i.astype(float)) + 0.5).astype(np.int64)
    return (i >= 1) & (r * r == i)


def s_values(spec: FitnessSpec, i) -> np.ndarray:
    """Vectorised s(i) for integer i >= 0."""
    i = np.asarray(i, dtype=np.int64)
    x = i.astype(float)
    fam = spec.family
    if fam == "case_i":
        sigma = spec.params["sigma"]
        out = (x + 1.0) * np.log(x + 2.0) ** sigma
    elif fam == "case_ii":
        nu = spec.params["nu"]
        out = (x + 1.0) * np.log(x + 2.0) * np.exp(np.log(np.log(x + 3.0)) ** nu)
    elif fam == "case_iii":
        sigma = spec.params["sigma"]
        out = (x + 1.0) * np.log(x + 2.0) * np.log(np.log(x + 3.0)) ** sigma
    elif fam == "case_iv":
        sigma = spec.params["sigma"]
        alpha = spec.params["alpha"]
        out = (x + 1.0) * np.log(x + 2.0) ** sigma
        sq = _is_square(i)
        out = np.where(sq, np.where(sq, x, 1.0) ** alpha, out)
    elif fam == "geometric":
        with np.errstate(over="ignore"):
            out = np.exp2(x + 1.0)
    elif fam == "uniform_attach":
        out = np.ones_like(x)
    elif fam == "custom_table":
        if np.any(i >= len(spec.table)):
            raise ConfigurationError("index beyond custom table range")
        out = spec.table[i]
    else:  # pragma: no cover
        raise ConfigurationError(fam)
    return out


def log_s_values(spec: FitnessSpec, i) -> np.ndarray:
    """log s(i), finite even where s overflows a double (geometric family)."""
    i = np.asarray(i, dtype=np.int64)
    x = i.astype(float)
    if spec.family == "geometric":
        return (x + 1.0) * math.log(2.0)
    with np.errstate(over="ignore"):
        return np.log(s_values(spec, i))


def eval_fitness(spec: FitnessSpec, j: int, w: float) -> float:
    """f(j, w) = g(w) * s(j).  Raises on overflow or invalid input."""
    if j < 0 or int(j) != j:
        raise ConfigurationError(f"degree index must be a non-negative integer, got {j}")
    if w < 0:
        raise ConfigurationError(f"weight outside support: {w}")
    val = float(spec.g(w)) * float(s_values(spec, np.int64(j)))
    if not math.isfinite(val) or val <= 0:
        raise NumericOverflowError(f"fitness f({j}, {w}) = {val} is not a positive finite value")
    return val


def log_fitness(spec: FitnessSpec, j, w):
    """log f(j, w); overflow-safe."""
    return spec.log_g(w) + log_s_values(spec, j)


# ---------------------------------------------------------------------------
# Certified tail brackets of sum_{i >= M} 1/s(i)
# ---------------------------------------------------------------------------

def recip_tail_bracket(spec: FitnessSpec, M: int) -> tuple[float, float]:
    """(lo, hi) bracket of sum_{i >= M} 1/s(i), valid for M >= 2.

    Brackets come from comparing the decreasing summand against integrals of
    an elementary envelope; the slack from shifting (x+1) to (x+2) or (x+3)
    is absorbed by an explicit multiplicative factor.
    """
    if M < 2:
        raise ValueError("tail bracket requires M >= 2")
    fam = spec.family
    hM = 1.0 / float(s_values(spec, np.int64(M)))
    if fam == "case_i":
        sigma = spec.params["sigma"]
        A = math.log(M + 2.0) ** (1.0 - sigma) / (sigma - 1.0)
        return A, hM + (1.0 + 1.0 / (M + 1.0)) * A
    if fam == "case_iii":
        sigma = spec.params["sigma"]
        A = math.log(math.log(M + 3.0)) ** (1.0 - sigma) / (sigma - 1.0)
        cM = (M + 3.0) / (M + 1.0) * math.log(M + 3.0) / math.log(M + 2.0)
        return A, hM + cM * A
    if fam == "case_ii":
        nu = spec.params["nu"]
        a = math.log(math.log(M + 3.0))
        # integral_a^inf exp(-u^nu) du = Gamma(1/nu) * Q(1/nu, a^nu) / nu
        A = gamma_fn(1.0 / nu) * gammaincc(1.0 / nu, a ** nu) / nu
        cM = (M + 3.0) / (M + 1.0) * math.log(M + 3.0) / math.log(M + 2.0)
        return A * (1.0 - _SPECIAL_FN_SLOP), hM + cM * A * (1.0 + _SPECIAL_FN_SLOP)
    if fam == "case_iv":
        sigma = spec.params["sigma"]
        alpha = spec.params["alpha"]
        K = max(2, math.isqrt(M - 1) + 1)  # first k with k^2 >= M
        # squares tail sum_{k>=K} k^{-2alpha}: midpoint rule with a second-
        # derivative error envelope (f convex decreasing)
        x = K - 0.5
        a2 = 2.0 * alpha
        sq_mid = x ** (1.0 - a2) / (a2 - 1.0)
        sq_err = (a2 * (a2 + 1.0) * x ** (-a2 - 2.0)
                  + a2 * x ** (-a2 - 1.0)) / 24.0
        ci = FitnessSpec(family="case_i", params={"sigma": sigma}, g_id=spec.g_id)
        ci_lo, ci_hi = recip_tail_bracket(ci, M)
        # squares re-counted inside the case-i envelope: literal sum plus a
        # certified remainder past K + T
        T = 100000
        k = np.arange(K, K + T, dtype=float)
        oc = float(np.sum(1.0 / ((k * k + 1.0) * np.log(k * k + 2.0) ** sigma)))
        kT = float(K + T)
        oc_rem = 1.0 / ((kT - 1.0) * math.log(kT * kT + 2.0) ** sigma)
        lo = max(0.0, (sq_mid - sq_err) + ci_lo - (oc + oc_rem))
        hi = (sq_mid + sq_err) + ci_hi - oc
        return lo, hi
    if fam == "geometric":
        t = 2.0 ** (-float(M))
        return t, t
    if fam == "custom_table":
        g = spec.growth
        if g is None or g.tail_q is None or g.tail_c is None:
            raise ConfigurationError("custom_table needs a growth certificate with tail_q/tail_c")
        n_tab = len(spec.table)
        if M < n_tab:
            raise ValueError("tail bracket for custom tables starts beyond the table")
        hi = (M - 1.0) ** (1.0 - g.tail_q) / (g.tail_c * (g.tail_q - 1.0))
        return 0.0, hi
    raise ConfigurationError(f"family {fam!r} has no summable reciprocal tail")


@dataclass(frozen=True)
class MuEvaluation:
    """A certified evaluation of mu_n^w."""

    n: float
    w: float
    value: float
    trunc_error: float


def mu(spec: FitnessSpec, n: float, w: float, tol: float = 1e-9,
       rel_tol: float = 1e-7, max_terms: int = 20_000_000) -> MuEvaluation:
    """mu_n^w = sum_{i >= n} 1/f(i, w), interpolated linearly in n.

    The literal partial sum is extended (doubling the cutoff) until the
    closed-form tail bracket certifies |value - exact| <= trunc_error,
    stopping at the absolute target tol or the relative target
    rel_tol * value, whichever comes first (set rel_tol=0 for purely
    absolute certification).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if n < 0:
        raise ValueError("n must be non-negative")
    if not spec.summable:
        raise ConfigurationError(f"family {spec.family!r} has no summable reciprocals")
    if w < 0:
        raise ConfigurationError(f"weight outside support: {w}")
    if float(n) != math.floor(n):
        lo_i, hi_i = math.floor(n), math.floor(n) + 1
        frac = float(n) - lo_i
        a = mu(spec, lo_i, w, tol=tol, rel_tol=rel_tol, max_terms=max_terms)
        b = mu(spec, hi_i, w, tol=tol, rel_tol=rel_tol, max_terms=max_terms)
        return MuEvaluation(n=float(n), w=w,
                           value=(1.0 - frac) * a.value + frac * b.value,
                           trunc_error=(1.0 - frac) * a.trunc_error + frac * b.trunc_error)

    n = int(n)
    gw = float(spec.g(w))
    target = tol * gw  # certify the pure-s sum to this absolute error

    if spec.family == "custom_table" and n < len(spec.table):
        M0 = len(spec.table)
    else:
        M0 = max(n, 64) if n < _LARGE_N else n

    partial = 0.0
    if M0 > n:
        idx = np.arange(n, M0, dtype=np.int64)
        partial = float(np.sum(1.0 / s_values(spec, idx)))
    M = M0
    while True:
        lo, hi = recip_tail_bracket(spec, max(M, 2))
        half = 0.5 * (hi - lo)
        if half <= target or half <= rel_tol * (partial + lo):
            break
        if 2 * M - n > max_terms:
            raise PrecisionUnreachableError(
                f"cannot certify mu_{n} to tol {tol} within {max_terms} terms "
                f"(best half-width {half / gw:.3g})")
        idx = np.arange(M, 2 * M, dtype=np.int64)
        partial += float(np.sum(1.0 / s_values(spec, idx)))
        M *= 2

    s_sum = partial + 0.5 * (lo + hi)
    fp_slop = 1e-15 * (M - n + 1) * max(s_sum, 1.0)
    return MuEvaluation(n=float(n), w=w, value=s_sum / gw,
                        trunc_error=(half + fp_slop) / gw)


def inf_s_from(spec: FitnessSpec, n: int, horizon: int | None = None) -> float:
    """inf_{i >= n} s(i), scanned over a horizon that provably contains it.

    For the builtin increasing families the infimum sits at i = n; for the
    square-dip family it sits at or before the second square above n.  The
    scan window covers both.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if horizon is None:
        horizon = max(4 * n + 16, (math.isqrt(max(n, 1)) + 2) ** 2 + 1)
    best = math.inf
    for start in range(n, horizon, 1 << 20):
        stop = min(start + (1 << 20), horizon)
        vals = s_values(spec, np.arange(start, stop, dtype=np.int64))
        best = min(best, float(np.min(vals)))
    return best


@dataclass
class AssumptionSReport:
    """Numerical sweep of the three growth conditions on s."""

    n_grid: np.ndarray
    lower_ratio: np.ndarray   # s(n) / n^beta  (should trend to infinity)
    upper_ratio: np.ndarray   # s(n) / n^p    (should trend to zero)
    sandwich_ratio: np.ndarray  # s(n) log(n) / (n^{1+beta-p} inf_{i>=n} s(i))
    verdict: str              # "PASS" or "FAIL"
    reasons: list

    def passed(self) -> bool:
        return self.verdict == "PASS"


def check_assumption_s(spec: FitnessSpec, n_range: tuple[int, int],
                       grid_size: int = 40) -> AssumptionSReport:
    """Sweep the growth certificate over n_range.

    A PASS is evidence only: the certificate is asymptotic and a finite
    sweep can falsify it but never prove it.
    """
    g = spec.growth
    if g is None:
        raise ConfigurationError("check_assumption_s requires a growth certificate")
    lo, hi = int(n_range[0]), int(n_range[1])
    if lo < 2 or hi <= lo:
        raise ConfigurationError("n_range must satisfy 2 <= lo < hi")
    grid = np.unique(np.round(np.geomspace(lo, hi, grid_size)).astype(np.int64))
    s_n = s_values(spec, grid)
    x = grid.astype(float)
    lower = s_n / x ** g.beta
    upper = s_n / x ** g.p
    infs = np.array([inf_s_from(spec, int(n)) for n in grid])
    sandwich = s_n * np.log(x) / (x ** (1.0 + g.beta - g.p) * infs)

    # trend thresholds are calibration choices: the limits move only
    # polylogarithmically for the barely-super-linear families, so a sweep
    # can ask for a visible drift, not an order of magnitude
    reasons = []
    if lower[-1] <= 1.25 * lower[0]:
        reasons.append("s(n)/n^beta does not trend upward over the range")
    if upper[-1] >= 0.7 * upper[0]:
        reasons.append("s(n)/n^p does not trend downward over the range")
    mask = grid >= g.N
    if np.any(sandwich[mask] > g.C):
        worst = int(grid[mask][np.argmax(sandwich[mask])])
        reasons.append(f"sandwich ratio exceeds C={g.C} at n={worst}")
    return AssumptionSReport(n_grid=grid, lower_ratio=lower, upper_ratio=upper,
                            sandwich_ratio=sandwich,
                            verdict="FAIL" if reasons else "PASS", reasons=reasons)
