"""Tree growth engines and condensation statistics.

Two engines grow the same attachment law: a discrete-time one (new vertex
attaches to j with probability proportional to f(outdeg(j), W_j)) and a
continuous-time one that additionally realises birth times by drawing the
holding time between births from the total rate.  The continuous engine is
the embedded-jump-chain simulation: by memorylessness of the exponential
clocks it is exactly the event sequence of the per-vertex clock race, at
O(log n) per event instead of a queue.

Vertices are 0-based internally (vertex 0 is the root); dumps use 1-based
ids to keep parent ids positive.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import fitness, weights, wsampler
from .errors import ModeError, NumericOverflowError
from .fitness import FitnessSpec
from .rng import stream
from .weights import WeightModel

# Fitness magnitude beyond which growth switches to log-domain sampling.
_OVERFLOW_LIMIT = 1e300
_REBUILD_MASK = (1 << 20) - 1


@dataclass
class TreeState:
    mode: str  # "discrete" | "continuous"
    seed: int
    parent: np.ndarray  # parent[v] for v >= 1; parent[0] = -1
    outdeg: np.ndarray
    weight: np.ndarray
    birth_time: Optional[np.ndarray] = None  # continuous mode only
    tau: Optional[np.ndarray] = None  # tau[k] = birth_time[k]

    @property
    def n(self) -> int:
        return len(self.parent)


@dataclass
class CondensationStats:
    max_deg_share: list = field(default_factory=list)  # (n, share)
    argmax_history: list = field(default_factory=list)  # (n, vertex id)
    persistence_point: object = None  # checkpoint n or "unstable"
    height: int = 0
    moderate_count: int = 0
    L: int = 0


# ---------------------------------------------------------------------------
# Growth kernel (linear domain).  Written so the same source compiles under
# numba and runs as plain Python with identical float op order; a test pins
# the two paths bit-identical.
# ---------------------------------------------------------------------------

def _grow_kernel(s_tab, gw, u, expo, cap, continuous):
    n = gw.shape[0]
    parent = np.full(n, -1, dtype=np.int64)
    outdeg = np.zeros(n, dtype=np.int64)
    birth = np.zeros(n)
    vals = np.zeros(n)
    tree = np.zeros(cap + 1)
    total = 0.0

    f0 = gw[0] * s_tab[0]
    vals[0] = f0
    i = 1
    while i <= cap:
        tree[i] += f0
        i += i & -i
    total += f0

    t = 0.0
    for k in range(1, n):
        if continuous:
            t += expo[k - 1] / total
            birth[k] = t
        # descend: largest p with prefix(p) < u*total
        rem = u[k - 1] * total
        pos = 0
        bit = cap
        while bit:
            nxt = pos + bit
            if nxt <= cap and tree[nxt] < rem:
                pos = nxt
                rem -= tree[nxt]
            bit >>= 1
        p = pos if pos < k else k - 1
        parent[k] = p
        outdeg[p] += 1
        newf = gw[p] * s_tab[outdeg[p]]
        if not np.isfinite(newf) or newf > _OVERFLOW_LIMIT:
            return parent, outdeg, birth, k  # overflow at step k
        delta = newf - vals[p]
        vals[p] = newf
        i = p + 1
        while i <= cap:
            tree[i] += delta
            i += i & -i
        total += delta
        fk = gw[k] * s_tab[0]
        vals[k] = fk
        i = k + 1
        while i <= cap:
            tree[i] += fk
            i += i & -i
        total += fk
        if (k & _REBUILD_MASK) == 0:
            for i in range(cap + 1):
                tree[i] = 0.0
            total = 0.0
            for v in range(k + 1):
                fv = vals[v]
                i = v + 1
                while i <= cap:
                    tree[i] += fv
                    i += i & -i
                total += fv
    return parent, outdeg, birth, 0


_grow_kernel_jit = None


def _get_jit_kernel():
    global _grow_kernel_jit
    if _grow_kernel_jit is None:
        import numba

        _grow_kernel_jit = numba.njit(cache=True)(_grow_kernel)
    return _grow_kernel_jit


def _grow_log(log_s_tab, log_gw, u, expo, continuous):
    """Log-domain fallback for fitnesses beyond the double range."""
    n = log_gw.shape[0]
    parent = np.full(n, -1, dtype=np.int64)
    outdeg = np.zeros(n, dtype=np.int64)
    birth = np.zeros(n)
    idx = wsampler.LogPrefixIndex(capacity=n)
    idx.insert(log_gw[0] + log_s_tab[0])
    t = 0.0
    for k in range(1, n):
        if continuous:
            lt = idx.log_total()
            # holding time Exp(1)/rate; underflows to 0 once the rate is huge
            t += expo[k - 1] * math.exp(-lt) if lt < 745.0 else 0.0
            birth[k] = t
        p = idx.sample(u[k - 1])
        if p >= k:
            p = k - 1
        parent[k] = p
        outdeg[p] += 1
        idx.update(p, log_gw[p] + log_s_tab[outdeg[p]])
        idx.insert(log_gw[k] + log_s_tab[0])
    return parent, outdeg, birth


def _grow(spec: FitnessSpec, wmodel: WeightModel, n: int, seed: int,
          continuous: bool, jit: bool = True) -> TreeState:
    if n < 1:
        raise ValueError("n must be at least 1")
    mode = "continuous" if continuous else "discrete"
    purpose = 1 if continuous else 0
    W = weights.sample_n(wmodel, n, stream(seed, purpose, 0))
    u = stream(seed, purpose, 1).random(max(n - 1, 1))
    expo = (stream(seed, purpose, 2).standard_exponential(max(n - 1, 1))
            if continuous else np.zeros(1))
    gw = np.asarray(spec.g(W), dtype=float)
    if gw.ndim == 0:
        gw = np.full(n, float(gw))
    log_mode = False
    try:
        s_tab = fitness.s_values(spec, np.arange(n + 1, dtype=np.int64))
        if not np.all(np.isfinite(s_tab)) or float(np.max(s_tab)) * float(np.max(gw)) > _OVERFLOW_LIMIT:
            log_mode = n > 2
    except (OverflowError, FloatingPointError):
        log_mode = True
    if not log_mode:
        cap = 1
        while cap < n:
            cap *= 2
        kernel = _get_jit_kernel() if jit else _grow_kernel
        parent, outdeg, birth, flag = kernel(s_tab, gw, u, expo, cap, continuous)
        log_mode = flag > 0
    if log_mode:
        log_s_tab = fitness.log_s_values(spec, np.arange(n + 1, dtype=np.int64))
        log_gw = np.asarray(spec.log_g(W), dtype=float)
        if log_gw.ndim == 0:
            log_gw = np.full(n, float(log_gw))
        parent, outdeg, birth = _grow_log(log_s_tab, log_gw, u, expo, continuous)
    bt = birth[:n] if continuous else None
    return TreeState(mode=mode, seed=int(seed), parent=parent, outdeg=outdeg,
                     weight=W, birth_time=bt, tau=bt)


def grow_discrete(spec: FitnessSpec, wmodel: WeightModel, n: int, seed: int,
                  jit: bool = True) -> TreeState:
    """Discrete-time preferential attachment with fitness."""
    return _grow(spec, wmodel, n, seed, continuous=False, jit=jit)


def grow_continuous(spec: FitnessSpec, wmodel: WeightModel, n: int, seed: int,
                    jit: bool = True) -> TreeState:
    """Continuous-time growth with exponential clocks; records birth times."""
    return _grow(spec, wmodel, n, seed, continuous=True, jit=jit)


# ---------------------------------------------------------------------------
# Forest growers: many small replicas vectorised across the replica axis.
# ---------------------------------------------------------------------------

def grow_forest(spec: FitnessSpec, wmodel: WeightModel, n: int, replicas: int,
                seed: int, continuous: bool = False):
    """(parent, outdeg[, birth]) matrices of shape (replicas, n).

    Same attachment law as the scalar engines; intended for joint-law tests
    on many small trees.
    """
    if n < 1 or replicas < 1:
        raise ValueError("n and replicas must be positive")
    purpose = 3 if continuous else 2
    R = replicas
    W = weights.sample_n(wmodel, R * n, stream(seed, purpose, 0)).reshape(R, n)
    u = stream(seed, purpose, 1).random((max(n - 1, 1), R))
    expo = (stream(seed, purpose, 2).standard_exponential((max(n - 1, 1), R))
            if continuous else None)
    gw = np.asarray(spec.g(W), dtype=float)
    s_tab = fitness.s_values(spec, np.arange(n + 1, dtype=np.int64))
    if float(np.max(s_tab)) * float(np.max(gw)) > _OVERFLOW_LIMIT:
        raise NumericOverflowError("forest grower runs in the linear domain only")

    parent = np.full((R, n), -1, dtype=np.int64)
    outdeg = np.zeros((R, n), dtype=np.int64)
    birth = np.zeros((R, n)) if continuous else None
    F = np.zeros((R, n))
    F[:, 0] = gw[:, 0] * s_tab[0]
    rows = np.arange(R)
    t = np.zeros(R)
    for k in range(1, n):
        cum = np.cumsum(F[:, :k], axis=1)
        total = cum[:, -1]
        if continuous:
            t = t + expo[k - 1] / total
            birth[:, k] = t
        r = u[k - 1] * total
        p = np.sum(cum < r[:, None], axis=1)
        np.minimum(p, k - 1, out=p)
        parent[:, k] = p
        outdeg[rows, p] += 1
        F[rows, p] = gw[rows, p] * s_tab[outdeg[rows, p]]
        F[:, k] = gw[:, k] * s_tab[0]
    if continuous:
        return parent, outdeg, birth
    return parent, outdeg


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------

def default_checkpoints(n: int, extra=()) -> list[int]:
    cps = {1 << k for k in range(1, n.bit_length()) if (1 << k) <= n}
    cps.add(n)
    cps.update(c for c in extra if 2 <= c <= n)
    return sorted(cps)


def collect_stats(tree: TreeState, L: int = 2, checkpoints=()) -> CondensationStats:
    """Condensation and persistence diagnostics, checkpointed at powers of 2.

    persistence_point is the last checkpoint at which the argmax-degree
    vertex changed (first checkpoint if it never changed); a change at the
    final checkpoint reports the sentinel "unstable".  Argmax ties resolve
    to the lowest vertex id.
    """
    n = tree.n
    if n < 1:
        raise ValueError("empty tree")
    stats = CondensationStats(L=L)
    if n == 1:
        stats.max_deg_share = [(1, 0.0)]
        stats.argmax_history = [(1, 0)]
        stats.persistence_point = 1
        return stats
    cps = default_checkpoints(n, extra=checkpoints)
    for cp in cps:
        deg = np.bincount(tree.parent[1:cp], minlength=cp)
        am = int(np.argmax(deg))  # first occurrence = lowest id
        stats.max_deg_share.append((cp, float(deg[am]) / (cp - 1)))
        stats.argmax_history.append((cp, am))
    changes = [cps[i] for i in range(1, len(cps))
               if stats.argmax_history[i][1] != stats.argmax_history[i - 1][1]]
    if not changes:
        stats.persistence_point = cps[0]
    elif changes[-1] == cps[-1]:
        stats.persistence_point = "unstable"
    else:
        stats.persistence_point = changes[-1]

    depth = np.zeros(n, dtype=np.int64)
    child_rank = np.zeros(n, dtype=np.int64)
    seen_children = np.zeros(n, dtype=np.int64)
    moderate = np.zeros(n, dtype=bool)
    moderate[0] = True
    parent = tree.parent
    for v in range(1, n):
        p = parent[v]
        depth[v] = depth[p] + 1
        seen_children[p] += 1
        child_rank[v] = seen_children[p]
        moderate[v] = moderate[p] and child_rank[v] <= L
    stats.height = int(np.max(depth))
    stats.moderate_count = int(np.sum(moderate))
    return stats


def estimate_explosion_time(tree: TreeState, spec: FitnessSpec,
                            tail_bound_tol: float = 0.1) -> tuple[float, float]:
    """(tau_lo, tau_hi) bracket for the explosion time.

    tau_lo is the last observed birth.  tau_hi adds, for the best vertex,
    the expected residual time mu_{outdeg}^{W} inflated by 1/tail_bound_tol:
    a one-sided Markov bound, so tau_inf <= tau_hi except with probability
    at most tail_bound_tol.
    """
    if tree.birth_time is None:
        raise ModeError("explosion estimates need a continuous-mode tree")
    if not 0 < tail_bound_tol < 1:
        raise ValueError("tail_bound_tol must be in (0, 1)")
    tau_lo = float(tree.birth_time[-1])
    g_star = float(spec.g(spec.w_star))
    mu_cache: dict[int, float] = {}
    best = math.inf
    gw = np.asarray(spec.g(tree.weight), dtype=float)
    for d in np.unique(tree.outdeg):
        m = fitness.mu(spec, int(d), spec.w_star)
        mu_cache[int(d)] = (m.value + m.trunc_error) * g_star
    for v in range(tree.n):
        best = min(best, mu_cache[int(tree.outdeg[v])] / gw[v])
    return tau_lo, tau_lo + best / tail_bound_tol


# ---------------------------------------------------------------------------
# Dump format: first line "n,mode,seed", second line its values, then the
# per-vertex table with 1-based ids (root parent 0).
# ---------------------------------------------------------------------------

def dump_tree(tree: TreeState, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "mode", "seed"])
        w.writerow([tree.n, tree.mode, tree.seed])
        cols = ["id", "parent", "weight", "outdeg"]
        if tree.birth_time is not None:
            cols.append("birth_time")
        w.writerow(cols)
        for v in range(tree.n):
            row = [v + 1, int(tree.parent[v]) + 1, repr(float(tree.weight[v])),
                   int(tree.outdeg[v])]
            if tree.birth_time is not None:
                row.append(repr(float(tree.birth_time[v])))
            w.writerow(row)


def load_tree(path) -> TreeState:
    with open(path, newline="") as fh:
        r = (row for row in csv.reader(fh)
             if row and not row[0].startswith("#"))
        next(r)
        n_s, mode, seed_s = next(r)
        n, seed = int(n_s), int(seed_s)
        cols = next(r)
        has_birth = "birth_time" in cols
        parent = np.full(n, -1, dtype=np.int64)
        outdeg = np.zeros(n, dtype=np.int64)
        weight = np.zeros(n)
        birth = np.zeros(n) if has_birth else None
        for row in r:
            v = int(row[0]) - 1
            parent[v] = int(row[1]) - 1
            weight[v] = float(row[2])
            outdeg[v] = int(row[3])
            if has_birth:
                birth[v] = float(row[4])
    return TreeState(mode=mode, seed=seed, parent=parent, outdeg=outdeg,
                     weight=weight, birth_time=birth, tau=birth)
