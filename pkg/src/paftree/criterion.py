"""Numerical phase criteria.

Evaluates the star series (terms M_lambda(Y_n) * E[L_lambda(P_n; W)]), the
path series, the ratio diagnostic behind the barely-super-linear phase, the
closed-form phase classification, the bounded-ratio condition on s(i)/(i+1),
and the Chernoff bound on conservative-sequence explosion events.

Verdicts are evidence-graded, never proofs: series convergence is
undecidable from finitely many terms, so the module fits a local decay
exponent on the top decade and refuses to decide when error brackets
straddle the threshold.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import fitness, weights
from .errors import ConfigurationError, LambdaDomainError, ModeError
from .fitness import FitnessSpec
from .rng import stream
from .weights import WeightModel

SLOPE_MARGIN = 0.15
_Z99 = 2.5758293035489004  # two-sided 99% normal quantile


@dataclass
class CriterionReport:
    kind: str  # StarSeries | PathSeries | AssKnMuRatio | IyerCondition | ClosedFormPhase | ConservativeBound
    terms: list = field(default_factory=list)  # (n, value, error_bound)
    partial_sums: list = field(default_factory=list)  # (n, value)
    verdict: str = "Inconclusive"
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "terms": [[float(n), float(v), float(e)] for n, v, e in self.terms],
            "partial_sums": [[float(n), float(v)] for n, v in self.partial_sums],
            "verdict": self.verdict,
            "params": _jsonable(self.params),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "term", "error", "partial_sum"])
            psums = dict((n, v) for n, v in self.partial_sums)
            for n, v, e in self.terms:
                w.writerow([repr(float(n)), repr(float(v)), repr(float(e)),
                            repr(float(psums.get(n, float("nan"))))])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


# ---------------------------------------------------------------------------
# lambda_n and the two factors of the star-series term
# ---------------------------------------------------------------------------

def lambda_default(spec: FitnessSpec, n: float, delta: float) -> float:
    """delta * log(n) / mu_n at the minimal weight."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if delta <= 0:
        raise ValueError("delta must be positive")
    m = fitness.mu(spec, n, spec.w_star)
    if m.value <= 0.0:
        raise LambdaDomainError(
            f"mu_{n} underflows to zero; the tilt lambda_{n} is unbounded")
    return delta * math.log(n) / m.value


def _find_violating_index(spec: FitnessSpec, lam: float, n: int, g_star: float) -> int:
    horizon = max(4 * n + 64, (math.isqrt(max(n, 1)) + 2) ** 2 + 1)
    idx = np.arange(n, horizon, dtype=np.int64)
    bad = g_star * fitness.s_values(spec, idx) <= lam
    where = np.nonzero(bad)[0]
    return int(idx[where[0]]) if len(where) else n


def mgf_Y(spec: FitnessSpec, lam: float, n: int, tol: float = 1e-7) -> tuple[float, float]:
    """Certified product over i >= n of f(i,w*)/(f(i,w*) - lam).

    Returns (value, error_bound).  The infinite tail of the log-product is
    bracketed between lam*mu and lam*mu/(1 - lam/inf f), then the cutoff is
    doubled until the bracket width is below tol.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    if lam == 0.0:
        return 1.0, 0.0
    g_star = float(spec.g(spec.w_star))
    f_inf = g_star * fitness.inf_s_from(spec, n)
    if lam >= f_inf:
        i_bad = _find_violating_index(spec, lam, n, g_star)
        raise LambdaDomainError(
            f"lambda={lam} is not below f({i_bad}, w*)={g_star * float(fitness.s_values(spec, i_bad)):g}",
            index=i_bad)

    def chunked_log_sum(a: int, b: int) -> float:
        acc = 0.0
        step = 1 << 23
        for c in range(a, b, step):
            s = fitness.s_values(spec, np.arange(c, min(c + step, b), dtype=np.int64)) * g_star
            acc += float(-np.sum(np.log1p(-lam / s)))
        return acc

    log_p = 0.0
    M = max(n, 64)
    if M > n:
        log_p = chunked_log_sum(n, M)
    while True:
        lo_s, hi_s = fitness.recip_tail_bracket(spec, max(M, 2))
        mu_lo, mu_hi = lo_s / g_star, hi_s / g_star
        f_inf_M = g_star * fitness.inf_s_from(spec, M)
        if lam < f_inf_M:
            t_lo = lam * mu_lo
            t_hi = lam * mu_hi / (1.0 - lam / f_inf_M)
            if t_hi - t_lo <= tol:
                break
        log_p += chunked_log_sum(M, 2 * M)
        M *= 2
        if M > 1 << 34:
            raise fitness.PrecisionUnreachableError(
                f"mgf_Y tail will not certify to tol {tol}")
    mid = math.exp(log_p + 0.5 * (t_lo + t_hi))
    half = math.exp(log_p) * 0.5 * (math.exp(t_hi) - math.exp(t_lo))
    fp_slop = 1e-15 * (M - n + 1) * mid
    return mid, half + fp_slop


def _w_panel(spec: FitnessSpec, wmodel: WeightModel, method: str,
             panel: int, rng) -> tuple[np.ndarray, np.ndarray, bool, float]:
    """(W values, probability weights, is_stochastic, unresolved tail mass).

    For quadrature panels over an unbounded weight law, the quantile mass
    above the largest node is charged to the caller's error bound (the
    integrands here are all bounded by 1), so sub-resolution upper-tail
    contributions can widen a verdict to Inconclusive but never flip it.
    """
    if spec.g_id == "one" or wmodel.family in ("constant", "empirical"):
        if wmodel.family == "empirical":
            vals, counts = np.unique(wmodel.table, return_counts=True)
            return vals, counts / counts.sum(), False, 0.0
        c = wmodel.params.get("c", 0.0)
        return np.array([c]), np.array([1.0]), False, 0.0
    if method == "quad":
        nodes, gl_w = np.polynomial.legendre.leggauss(min(panel, 128))
        q = 0.5 * (nodes + 1.0)
        return weights.quantile(wmodel, q), gl_w * 0.5, False, 1.0 - float(q[-1])
    W = weights.sample_n(wmodel, panel, rng)
    return W, np.full(panel, 1.0 / panel), True, 0.0


def _log_products(spec: FitnessSpec, gW: np.ndarray, lam: float,
                  i_lo: int, i_hi: int, chunk: int = 1 << 14) -> np.ndarray:
    """Per-W sum over i in [i_lo, i_hi) of -log1p(lam / (g(W) s(i)))."""
    out = np.zeros(len(gW))
    for start in range(i_lo, i_hi, chunk):
        stop = min(start + chunk, i_hi)
        s = fitness.s_values(spec, np.arange(start, stop, dtype=np.int64))
        out -= np.sum(np.log1p(lam / (gW[:, None] * s[None, :])), axis=1)
    return out


def laplace_P(spec: FitnessSpec, wmodel: WeightModel, lam: float, n: int,
              method: str = "auto", panel: int = 4096,
              rng=None, _panel_cache=None) -> tuple[float, float]:
    """E over W of prod_{i<n} f(i,W)/(f(i,W) + lam), with error half-width.

    method "mc" reports a 99% CI half-width; "quad" uses Gauss-Legendre
    nodes through the weight quantile and reports a node-halving estimate;
    "auto" picks quadrature (exact for degenerate weights).
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    if n == 0 or lam == 0.0:
        return 1.0, 0.0
    if method == "auto":
        method = "quad"
    if _panel_cache is not None:
        W, pw, stochastic, tail_mass = _panel_cache
    else:
        if rng is None:
            rng = stream(0, 99)
        W, pw, stochastic, tail_mass = _w_panel(spec, wmodel, method, panel, rng)
    gW = np.asarray(spec.g(W), dtype=float)
    if gW.ndim == 0:
        gW = gW[None]
    vals = np.exp(_log_products(spec, gW, lam, 0, n))
    mean = float(np.sum(pw * vals))
    if stochastic:
        var = float(np.sum(pw * (vals - mean) ** 2))
        half = _Z99 * math.sqrt(max(var, 0.0) / len(vals))
    elif len(vals) > 2:
        # node-halving spread as a quadrature error proxy, plus the mass
        # beyond the last node (integrand <= 1)
        mean_half = float(np.sum(pw[::2] * vals[::2]) / np.sum(pw[::2]))
        half = abs(mean - mean_half) + tail_mass + 1e-14
    else:
        half = 1e-14 * n
    return mean, half


# ---------------------------------------------------------------------------
# Series evaluators
# ---------------------------------------------------------------------------

def _n_grid(n_range: tuple[int, int], points: int) -> np.ndarray:
    lo, hi = int(n_range[0]), int(n_range[1])
    if not 2 <= lo < hi:
        raise ValueError("need 2 <= n_min < n_max")
    g = np.unique(np.round(np.logspace(math.log10(lo), math.log10(hi), points)).astype(np.int64))
    return g[g >= 2]


def _fit_slope(ns, vals) -> float:
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(vals, dtype=float))
    x = x - x.mean()
    return float(np.sum(x * (y - y.mean())) / np.sum(x * x))


def _series_verdict(terms: list, margin: float = SLOPE_MARGIN) -> tuple[str, dict]:
    """Least-squares log-log slope over the top decade, error-aware.

    The extreme slopes tilt the terms to their error-bracket corners; a
    verdict is issued only when the whole slope bracket clears the
    threshold.
    """
    if len(terms) < 3:
        return "Inconclusive", {"reason": "fewer than 3 usable terms"}
    ns = np.array([t[0] for t in terms], dtype=float)
    vals = np.array([t[1] for t in terms], dtype=float)
    errs = np.array([t[2] for t in terms], dtype=float)
    top = ns >= ns[-1] / 10.0
    if np.sum(top) < 3:
        top = np.zeros_like(top, dtype=bool)
        top[-3:] = True
    ns, vals, errs = ns[top], vals[top], errs[top]
    if np.any(vals - errs <= 0.0):
        return "Inconclusive", {"reason": "error bracket reaches zero"}
    mid = np.log(ns).mean()
    up = np.where(np.log(ns) >= mid, vals + errs, np.maximum(vals - errs, 1e-320))
    dn = np.where(np.log(ns) >= mid, np.maximum(vals - errs, 1e-320), vals + errs)
    slope = _fit_slope(ns, vals)
    slope_hi = _fit_slope(ns, up)
    slope_lo = _fit_slope(ns, dn)
    info = {"slope": slope, "slope_lo": slope_lo, "slope_hi": slope_hi,
            "margin": margin, "fit_points": int(len(ns))}
    if slope_hi < -1.0 - margin:
        return "ConvergesEvidence", info
    if slope_lo > -1.0 + margin:
        return "DivergesEvidence", info
    return "Inconclusive", info


def star_series(spec: FitnessSpec, wmodel: WeightModel, delta: float,
                n_range: tuple[int, int], points: int = 25,
                method: str = "auto", panel: int = 4096,
                seed: int = 0) -> CriterionReport:
    """Terms mgf_Y(lambda_n, n) * laplace_P(lambda_n, n) on a log grid.

    Heads of the range where lambda_n fails its domain condition are
    reported (min_valid_N) and excluded from the sums.
    """
    grid = _n_grid(n_range, points)
    rng = stream(seed, 10)
    pc = _w_panel(spec, wmodel, "mc" if method == "mc" else "quad", panel, rng)
    report = CriterionReport(kind="StarSeries")
    skipped = []
    total = 0.0
    min_valid = None
    for n in grid:
        n = int(n)
        try:
            lam = lambda_default(spec, n, delta)
            # 1e-4 relative on the tilt factor matches the quadrature error
            # floor of the Laplace factor; tighter is wasted effort here
            mv, me = mgf_Y(spec, lam, n, tol=1e-4)
        except LambdaDomainError as err:
            skipped.append([n, str(err)])
            continue
        lv, le = laplace_P(spec, wmodel, lam, n, method=method, panel=panel,
                           _panel_cache=pc)
        val = mv * lv
        err = me * lv + mv * le + me * le
        if min_valid is None:
            min_valid = n
        report.terms.append((n, val, err))
        total += val
        report.partial_sums.append((n, total))
    report.verdict, info = _series_verdict(report.terms)
    report.params = {"delta": delta, "lambda_id": "delta*log(n)/mu_n",
                     "w_star": spec.w_star, "method": method, "panel": panel,
                     "min_valid_N": min_valid, "skipped_head": skipped,
                     "n_range": list(n_range), "fit": info,
                     "note": "partial sums run over probed n only, head-exclusive"}
    return report


def _path_term(spec: FitnessSpec, gW: np.ndarray, pw: np.ndarray,
               theta: float, ratio_eps: float = 1e-3,
               tail_mass: float = 0.0) -> tuple[float, float]:
    """E_W of the infinite product prod_i f(i,W)/(f(i,W)+theta), certified.

    Literal product up to t1 where theta/f stays below ratio_eps for every
    i >= t1, then the tail log-product is bracketed through mu.
    """
    g_min = float(np.min(gW))
    t1 = 64
    while g_min * fitness.inf_s_from(spec, t1) < theta / ratio_eps:
        t1 *= 2
        if t1 > 1 << 28:
            raise fitness.PrecisionUnreachableError("path tail cutoff too large")
    log_lit = _log_products(spec, gW, theta, 0, t1)
    m = fitness.mu(spec, t1, spec.w_star)
    g_star = float(spec.g(spec.w_star))
    S = m.value * g_star  # sum_{i>=t1} 1/s with error m.trunc_error*g_star
    S_err = m.trunc_error * g_star
    eps1 = theta / (g_min * fitness.inf_s_from(spec, t1))
    lo_exp = -theta * (S + S_err) / gW
    hi_exp = -theta * (S - S_err) / gW * (1.0 - 0.5 * eps1)
    v_lo = np.exp(log_lit + lo_exp)
    v_hi = np.exp(log_lit + hi_exp)
    mean_lo = float(np.sum(pw * v_lo))
    mean_hi = float(np.sum(pw * v_hi))
    mid = 0.5 * (mean_lo + mean_hi)
    return mid, 0.5 * (mean_hi - mean_lo) + tail_mass + 1e-13 * mid


def path_series(spec: FitnessSpec, wmodel: WeightModel, c: float = 1.1,
                w: float | None = None, n_range: tuple[int, int] = (100, 100000),
                points: int = 25, method: str = "auto", panel: int = 4096,
                seed: int = 0) -> CriterionReport:
    """Terms E[prod_{i>=0} f(i,W)/(f(i,W) + c log(n)/mu_n^w)] on a log grid."""
    if c <= 1.0:
        raise ValueError("c must exceed 1")
    if w is None:
        w = spec.w_star
    grid = _n_grid(n_range, points)
    rng = stream(seed, 11)
    pc = _w_panel(spec, wmodel, "mc" if method == "mc" else "quad", panel, rng)
    W, pw, _, tail_mass = pc
    gW = np.asarray(spec.g(W), dtype=float)
    if gW.ndim == 0:
        gW = gW[None]
    report = CriterionReport(kind="PathSeries")
    total = 0.0
    for n in grid:
        n = int(n)
        mw = fitness.mu(spec, n, w)
        theta = c * math.log(n) / mw.value
        val, err = _path_term(spec, gW, pw, theta, tail_mass=tail_mass)
        report.terms.append((n, val, err))
        total += val
        report.partial_sums.append((n, total))
    report.verdict, info = _series_verdict(report.terms)
    report.params = {"c": c, "w": w, "theta_id": "c*log(n)/mu_n^w",
                     "method": method, "panel": panel, "n_range": list(n_range),
                     "fit": info}
    return report


# ---------------------------------------------------------------------------
# Ratio diagnostic for the barely-super-linear phase
# ---------------------------------------------------------------------------

def assknmu_ratio(spec: FitnessSpec, wmodel: WeightModel, delta: float,
                  eps: float, n_range: tuple[int, int], beta: float | None = None,
                  points: int = 25) -> CriterionReport:
    """Ratio mu_{(delta log n/(mu_n k_n))^{1/beta}} / (mu_n k_n) on a grid.

    With g == 1 the threshold sequence k_n degenerates to 1 and the ratio
    is the no-fitness specialization.  Terms whose inner argument falls
    below 1 are pre-asymptotic and skipped.  DivergesEvidence requires the
    ratio to grow by a factor 2 across the top two decades.
    """
    if not 0.0 < delta:
        raise ValueError("delta must be positive")
    if spec.g_id != "one" and not delta < eps:
        raise ValueError("need 0 < delta < eps")
    if beta is None:
        if spec.growth is None:
            raise ConfigurationError("no growth certificate supplies beta")
        beta = spec.growth.beta
    grid = _n_grid(n_range, points)
    report = CriterionReport(kind="AssKnMuRatio")
    skipped = []
    total = 0.0
    for n in grid:
        n = int(n)
        mn = fitness.mu(spec, n, spec.w_star)
        k = 1.0 if spec.g_id == "one" else weights.k_sequence(wmodel, spec.g_id, n, eps)
        denom = mn.value * k
        arg = (delta * math.log(n) / denom) ** (1.0 / beta)
        if arg < 1.0:
            skipped.append([n, "pre-asymptotic: inner argument below 1"])
            continue
        ma = fitness.mu(spec, arg, spec.w_star)
        val = ma.value / denom
        rel_err = (ma.trunc_error / ma.value + mn.trunc_error / mn.value)
        report.terms.append((n, val, val * rel_err))
        total += val
        report.partial_sums.append((n, total))
    info: dict = {}
    if len(report.terms) >= 2:
        ns = np.array([t[0] for t in report.terms], dtype=float)
        vals = np.array([t[1] for t in report.terms], dtype=float)
        n_hi = ns[-1]
        lo_idx = int(np.argmin(np.abs(ns - n_hi / 100.0)))
        factor = float(vals[-1] / vals[lo_idx])
        info = {"growth_factor_top_two_decades": factor,
                "factor_base_n": float(ns[lo_idx])}
        if factor >= 2.0:
            report.verdict = "DivergesEvidence"
        elif factor <= 0.5:
            report.verdict = "ConvergesEvidence"
        else:
            report.verdict = "Inconclusive"
    report.params = {"delta": delta, "eps": eps, "beta": beta,
                     "g_id": spec.g_id, "skipped": skipped,
                     "n_range": list(n_range), "fit": info}
    return report


# ---------------------------------------------------------------------------
# Closed-form phase classification
# ---------------------------------------------------------------------------

def classify_closed_form(example_id: str, params: dict) -> CriterionReport:
    """Star/Path/Boundary from the closed-form inequalities.

    Cases i, iii, iv decide by (sigma-1)*kappa vs 1; case ii by nu*gamma
    vs 1.  Parameters must lie in the ranges sigma>1, kappa>0, nu in (0,1),
    gamma>1, alpha in (1/2, 1].
    """
    eid = example_id.lower().removeprefix("case_")
    if eid not in ("i", "ii", "iii", "iv"):
        raise ConfigurationError(f"unknown example id {example_id!r}")
    if eid == "ii":
        nu, gam = params.get("nu"), params.get("gamma")
        if nu is None or not 0.0 < nu < 1.0:
            raise ConfigurationError("case ii requires nu in (0,1)")
        if gam is None or gam <= 1.0:
            raise ConfigurationError("case ii requires gamma > 1")
        value = nu * gam
        label = "nu*gamma"
    else:
        sigma, kappa = params.get("sigma"), params.get("kappa")
        if sigma is None or sigma <= 1.0:
            raise ConfigurationError(f"case {eid} requires sigma > 1")
        if kappa is None or kappa <= 0.0:
            raise ConfigurationError(f"case {eid} requires kappa > 0")
        if eid == "iv":
            alpha = params.get("alpha")
            if alpha is None or not 0.5 < alpha <= 1.0:
                raise ConfigurationError("case iv requires alpha in (1/2, 1]")
        value = (sigma - 1.0) * kappa
        label = "(sigma-1)*kappa"
    if value > 1.0:
        verdict = "Star"
    elif value < 1.0:
        verdict = "Path"
    else:
        verdict = "Boundary"
    report = CriterionReport(kind="ClosedFormPhase", verdict=verdict)
    report.terms = [(1, value, 0.0)]
    report.partial_sums = [(1, value)]
    report.params = {"example": eid, "criterion": label, "value": value,
                     **{k: float(v) for k, v in params.items()}}
    return report


# ---------------------------------------------------------------------------
# Bounded-ratio condition on s(i)/(i+1)
# ---------------------------------------------------------------------------

def iyer_condition(spec: FitnessSpec, n_range: tuple[int, int],
                   kappa_search_max: float = 16.0,
                   checkpoints: int = 40) -> CriterionReport:
    """r(n) = max_{i<=n} (s(i)/(i+1)) / (s(n)/(n+1)) swept over n_range.

    ConvergesEvidence (PASS) when sup r over the range fits below
    kappa_search_max; DivergesEvidence when the per-decade suprema grow.
    """
    if spec.g_id != "one":
        raise ModeError("this condition applies to the no-fitness model (g == 1)")
    lo, hi = int(n_range[0]), int(n_range[1])
    if not 1 <= lo < hi:
        raise ValueError("bad n_range")
    cps = set(_n_grid((max(lo, 2), hi), checkpoints).tolist())
    report = CriterionReport(kind="IyerCondition")
    sup_r = 0.0
    decade_sup: dict[int, float] = {}
    chunk = 1 << 21
    run_max = -math.inf
    for start in range(lo, hi + 1, chunk):
        stop = min(start + chunk, hi + 1)
        i = np.arange(start, stop, dtype=np.int64)
        # log domain: s overflows a double for the geometric family
        log_h = fitness.log_s_values(spec, i) - np.log(i + 1.0)
        rm = np.maximum.accumulate(np.maximum(log_h, run_max))
        run_max = float(rm[-1])
        r = np.exp(rm - log_h)
        sup_r = max(sup_r, float(np.max(r)))
        dec = np.log10(i.astype(float)).astype(int)
        for d in np.unique(dec):
            sel = dec == d
            decade_sup[int(d)] = max(decade_sup.get(int(d), 0.0),
                                     float(np.max(r[sel])))
        for cp in sorted(c for c in cps if start <= c < stop):
            report.terms.append((cp, float(r[cp - start]), 0.0))
    report.partial_sums = [(n, v) for n, v, _ in report.terms]
    # drop a trailing partial decade: its supremum is not comparable
    decs = sorted(d for d in decade_sup if 10 ** (d + 1) - 1 <= hi or d == 0)
    growing = (len(decs) >= 3
               and all(decade_sup[decs[k + 1]] > decade_sup[decs[k]] * 1.5
                       for k in range(len(decs) - 3, len(decs) - 1)))
    if sup_r <= kappa_search_max:
        report.verdict = "ConvergesEvidence"
    elif growing:
        report.verdict = "DivergesEvidence"
    else:
        report.verdict = "Inconclusive"
    report.params = {"sup_r": sup_r, "kappa_search_max": kappa_search_max,
                     "kappa_found": sup_r if sup_r <= kappa_search_max else None,
                     "decade_sup": {str(k): v for k, v in decade_sup.items()},
                     "n_range": [lo, hi]}
    return report


# ---------------------------------------------------------------------------
# Chernoff bound on conservative-sequence explosion events
# ---------------------------------------------------------------------------

@dataclass
class ConservativeBoundReport:
    a1: int
    m: int
    delta: float
    lam: float
    bound: float
    bound_parts: dict
    estimate: float
    ci99_half: float
    upper_ci: float
    replicas: int
    dominated: bool
    verdict: str

    def to_dict(self) -> dict:
        return _jsonable(self.__dict__)


def conservative_bound_check(spec: FitnessSpec, wmodel: WeightModel, a1: int,
                             m: int, delta: float = 0.05,
                             replicas: int = 1_000_000, seed: int = 0,
                             root_clocks: int = 512,
                             ci_abs_floor: float = 1e-7) -> ConservativeBoundReport:
    """Monte-Carlo check that the Chernoff bound dominates the event sum.

    Event for a length-m sequence a (every later index <= a1): the node's
    first a1 inter-birth times, plus the partial birth times along its
    ancestry, fit below the root's residual clock sum past child a1.  The
    residual sum is simulated with root_clocks exact clocks plus a
    deterministic certified remainder pushed to its upper confidence edge,
    which can only inflate the estimate (safe direction for a dominance
    check).  m == 1 has one sequence; m == 2 sums over the a1 choices of
    the middle index with common random numbers.
    """
    if m not in (1, 2):
        raise ValueError("m must be 1 or 2")
    if a1 < 2:
        raise ValueError("a1 must be at least 2")
    lam = lambda_default(spec, a1, delta)
    g_star = float(spec.g(spec.w_star))

    # analytic side
    mv, me = mgf_Y(spec, lam, a1)
    la1, le1 = laplace_P(spec, wmodel, lam, a1)
    zeta = 0.0
    for n in range(1, a1 + 1):
        zn, _ = laplace_P(spec, wmodel, lam, n)
        zeta += zn
    bound = (mv + me) * (la1 + le1) * (zeta ** (m - 1))

    # simulated side
    B = root_clocks
    s_root = g_star * fitness.s_values(spec, np.arange(a1, a1 + B, dtype=np.int64))
    rem = fitness.mu(spec, a1 + B, spec.w_star)
    f_min_tail = g_star * fitness.inf_s_from(spec, a1 + B)
    var_tail = (rem.value + rem.trunc_error) / f_min_tail
    # one-sided Bernstein slack making the per-replica failure prob <= 1e-12
    log_fail = math.log(1e-12)
    a_coef = 1.0 / (2.0 * f_min_tail)
    slack = (-log_fail) * a_coef + math.sqrt(((-log_fail) * a_coef) ** 2
                                             + 2.0 * var_tail * (-log_fail))
    rem_upper = rem.value + rem.trunc_error + slack

    rng = stream(seed, 20, a1, m)
    s_tab = fitness.s_values(spec, np.arange(a1, dtype=np.int64))
    total = 0.0
    total_sq = 0.0
    done = 0
    chunk = max(1, min(replicas, (1 << 24) // max(B, a1)))
    while done < replicas:
        C = min(chunk, replicas - done)
        Y = (rng.standard_exponential((C, B)) / s_root).sum(axis=1) + rem_upper
        W_leaf = weights.sample_n(wmodel, C, rng)
        g_leaf = np.asarray(spec.g(W_leaf), dtype=float)
        P_leaf = (rng.standard_exponential((C, a1)) / (g_leaf[:, None] * s_tab)).sum(axis=1)
        if m == 1:
            x = (P_leaf <= Y).astype(float)
        else:
            W_par = weights.sample_n(wmodel, C, rng)
            g_par = np.asarray(spec.g(W_par), dtype=float)
            P_par = np.cumsum(rng.standard_exponential((C, a1)) / (g_par[:, None] * s_tab),
                              axis=1)
            x = np.sum(P_leaf[:, None] + P_par <= Y[:, None], axis=1).astype(float)
        total += float(np.sum(x))
        total_sq += float(np.sum(x * x))
        done += C
    est = total / replicas
    var = max(total_sq / replicas - est * est, 0.0)
    ci = _Z99 * math.sqrt(var / replicas) + ci_abs_floor + a1 * 1e-12
    upper = est + ci
    dominated = upper <= bound
    verdict = "ConvergesEvidence" if dominated else (
        "Inconclusive" if ci > 0.5 * bound else "DivergesEvidence")
    return ConservativeBoundReport(
        a1=a1, m=m, delta=delta, lam=lam, bound=bound,
        bound_parts={"mgf_Y": mv, "laplace_a1": la1, "zeta": zeta,
                     "root_remainder_upper": rem_upper, "root_clocks": B},
        estimate=est, ci99_half=ci, upper_ci=upper, replicas=replicas,
        dominated=dominated, verdict=verdict)
