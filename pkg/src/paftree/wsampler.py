"""Dynamic categorical sampler over vertex fitnesses.

A binary-indexed prefix-sum layout gives O(log n) insert, point-update, and
proportional sampling, which is the engine behind the attachment step at
10^7 vertices.  A log-domain variant handles fitness values far outside the
double range.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import PaftreeError

# Structural complexity budget: cells touched per op.  A descent or update
# walks one root-to-leaf path of the implicit tree.
REBUILD_EVERY = 1 << 20
DRIFT_REL_TOL = 1e-9


class PrefixIndex:
    """Growable Fenwick tree over positive vertex weights.

    Vertex ids are dense 0-based integers in insertion order.  Sampling
    maps u in [0, total) to the id whose prefix interval (S_k, S_{k+1}]
    contains u; boundary values resolve to the lower id.
    """

    def __init__(self, capacity: int = 16):
        cap = 1
        while cap < capacity:
            cap *= 2
        self._cap = cap
        self._vals = np.zeros(cap)
        self._tree = np.zeros(cap + 1)
        self._size = 0
        self._total = 0.0
        self._updates_since_rebuild = 0
        self._drift_bound = 0.0
        self.last_op_cells = 0
        self.rebuild_count = 0

    def __len__(self) -> int:
        return self._size

    @property
    def total(self) -> float:
        return self._total

    def _grow(self, need: int) -> None:
        cap = self._cap
        while cap < need:
            cap *= 2
        vals = np.zeros(cap)
        vals[: self._size] = self._vals[: self._size]
        self._cap = cap
        self._vals = vals
        self._rebuild()

    def _rebuild(self) -> None:
        tree = np.zeros(self._cap + 1)
        tree[1 : self._size + 1] = self._vals[: self._size]
        for i in range(1, self._cap + 1):
            j = i + (i & -i)
            if j <= self._cap:
                tree[j] += tree[i]
        self._tree = tree
        self._total = float(np.sum(self._vals[: self._size]))
        self._updates_since_rebuild = 0
        self._drift_bound = 0.0
        self.rebuild_count += 1

    def _add(self, pos: int, delta: float) -> int:
        """Add delta at 0-based pos; returns cells touched."""
        i = pos + 1
        cells = 0
        tree = self._tree
        while i <= self._cap:
            tree[i] += delta
            i += i & -i
            cells += 1
        return cells

    def _bump_drift(self, magnitude: float) -> None:
        self._drift_bound += 2e-16 * magnitude
        self._updates_since_rebuild += 1
        if (
            self._updates_since_rebuild >= REBUILD_EVERY
            or self._drift_bound > DRIFT_REL_TOL * max(self._total, 1.0)
        ):
            self._rebuild()

    def insert(self, weight: float) -> int:
        if not (weight > 0.0 and math.isfinite(weight)):
            raise ValueError(f"weight must be positive and finite, got {weight}")
        if self._size >= self._cap:
            self._grow(self._size + 1)
        vid = self._size
        self._vals[vid] = weight
        self._size += 1
        self.last_op_cells = self._add(vid, weight)
        self._total += weight
        self._bump_drift(abs(self._total))
        return vid

    def update(self, vid: int, new_weight: float) -> None:
        if not 0 <= vid < self._size:
            raise IndexError(f"unknown vertex id {vid}")
        if not (new_weight > 0.0 and math.isfinite(new_weight)):
            raise ValueError(f"weight must be positive and finite, got {new_weight}")
        delta = new_weight - self._vals[vid]
        self._vals[vid] = new_weight
        self.last_op_cells = self._add(vid, delta)
        self._total += delta
        self._bump_drift(abs(self._total) + abs(delta))

    def weight(self, vid: int) -> float:
        if not 0 <= vid < self._size:
            raise IndexError(f"unknown vertex id {vid}")
        return float(self._vals[vid])

    def weights_view(self) -> np.ndarray:
        return self._vals[: self._size]

    def prefix(self, k: int) -> float:
        """Sum of the first k weights (ids 0..k-1)."""
        s = 0.0
        i = k
        tree = self._tree
        while i > 0:
            s += tree[i]
            i -= i & -i
        return s

    def sample(self, u: float) -> int:
        """Id of the prefix interval containing u in [0, total)."""
        if self._size == 0:
            raise PaftreeError("sample from empty index")
        if not 0.0 <= u < self._total:
            # total is maintained within 1e-9 relative; clamp roundoff spill
            if u >= self._total:
                u = np.nextafter(self._total, 0.0)
            else:
                raise ValueError(f"u={u} outside [0, total)")
        pos = 0
        rem = u
        bit = self._cap
        cells = 0
        tree = self._tree
        while bit:
            nxt = pos + bit
            if nxt <= self._cap and tree[nxt] < rem:
                pos = nxt
                rem -= tree[nxt]
                cells += 1
            bit >>= 1
        self.last_op_cells = cells + 1
        return min(pos, self._size - 1)

    def sample_rng(self, rng: np.random.Generator) -> int:
        return self.sample(rng.random() * self._total)

    def exact_total(self) -> float:
        return float(np.sum(self._vals[: self._size]))


class LogPrefixIndex:
    """Prefix sampler keyed by log-weights, for fitnesses beyond 1e300.

    Internally stores w_i = exp(log_w_i - shift).  The shift tracks the
    running maximum; when an incoming log-weight exceeds shift by more than
    RESCALE_SPAN the whole structure is rebuilt with a fresh shift.  Entries
    more than ~700 nats below the shift underflow to zero relative weight,
    i.e. a relative sampling error below 1e-300, which is far inside the
    drift contract.
    """

    RESCALE_SPAN = 80.0

    def __init__(self, capacity: int = 16):
        self._core = PrefixIndex(capacity)
        self._logw = []
        self._shift = 0.0
        self.rescale_count = 0

    def __len__(self) -> int:
        return len(self._core)

    @property
    def shift(self) -> float:
        return self._shift

    @property
    def last_op_cells(self) -> int:
        return self._core.last_op_cells

    def log_total(self) -> float:
        return math.log(self._core.total) + self._shift

    def _scaled(self, logw: float) -> float:
        # floor keeps every entry strictly positive for the core structure
        return math.exp(logw - self._shift) + 5e-324

    def _rescale(self, new_shift: float) -> None:
        self._shift = new_shift
        core = PrefixIndex(max(16, len(self._logw)))
        for lw in self._logw:
            core.insert(self._scaled(lw))
        self._core = core
        self.rescale_count += 1

    def insert(self, logw: float) -> int:
        if not math.isfinite(logw):
            raise ValueError(f"log-weight must be finite, got {logw}")
        if not self._logw:
            self._shift = logw
        elif logw > self._shift + self.RESCALE_SPAN:
            self._logw.append(logw)
            self._rescale(logw)
            return len(self._logw) - 1
        self._logw.append(logw)
        return self._core.insert(self._scaled(logw))

    def update(self, vid: int, logw: float) -> None:
        if not math.isfinite(logw):
            raise ValueError(f"log-weight must be finite, got {logw}")
        self._logw[vid] = logw
        if logw > self._shift + self.RESCALE_SPAN:
            self._rescale(logw)
        else:
            self._core.update(vid, self._scaled(logw))

    def sample_rng(self, rng: np.random.Generator) -> int:
        return self._core.sample_rng(rng)

    def sample(self, u01: float) -> int:
        """u01 uniform in [0, 1); scaled internally to the current total."""
        return self._core.sample(u01 * self._core.total)
