"""Concept drift detectors over a stream of prediction-error values.

All detectors share one contract: ``update(value) -> DriftLevel`` where the
value is the per-sample error indicator (0.0 correct / 1.0 wrong, though
ADWIN and KSWIN accept any real in [0, 1]).  DDM and EDDM expose the full
Normal/Warning/Drift ladder; ADWIN and KSWIN have no warning level and jump
straight from Normal to Drift.  After a Drift signal DDM and EDDM reset to
a freshly constructed state, ADWIN keeps its surviving sub-window and KSWIN
keeps the most recent ``stat_size`` values.
"""

from __future__ import annotations

import math
from enum import Enum

import numpy as np

from .errors import EmptyInput, ValueOutOfRange


class DriftLevel(Enum):
    NORMAL = "normal"
    WARNING = "warning"
    DRIFT = "drift"


# ---------------------------------------------------------------------------
# Two-sample Kolmogorov-Smirnov primitives
# ---------------------------------------------------------------------------

def ks_statistic(a, b) -> float:
    """Two-sample KS statistic: sup over pooled points of |ECDF_a - ECDF_b|."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise EmptyInput("ks_statistic needs two non-empty samples")
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side="right") / a.size
    cdf_b = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def ks_pvalue(d: float, n: int, m: int) -> float:
    """Asymptotic two-sided p-value for a two-sample KS statistic ``d``.

    Uses the Kolmogorov survival series Q(lambda) = 2 * sum_{k>=1}
    (-1)^(k-1) exp(-2 k^2 lambda^2) with the small-sample correction
    lambda = (sqrt(n_e) + 0.12 + 0.11 / sqrt(n_e)) * d, n_e = n*m/(n+m).
    Terms are accumulated until they drop below 1e-10; the result is
    clamped to [0, 1].
    """
    if n < 1 or m < 1:
        raise EmptyInput("ks_pvalue needs positive sample sizes")
    if d <= 0.0:
        return 1.0
    n_eff = n * m / (n + m)
    root = math.sqrt(n_eff)
    lam = (root + 0.12 + 0.11 / root) * d
    if lam < 1e-6:
        # the alternating series degenerates as lambda -> 0; the limit is 1
        return 1.0
    total = 0.0
    sign = 1.0
    for k in range(1, 100001):
        term = math.exp(-2.0 * (k * lam) ** 2)
        if term < 1e-10:
            break
        total += sign * term
        sign = -sign
    p = 2.0 * total
    return min(1.0, max(0.0, p))


# ---------------------------------------------------------------------------
# DDM
# ---------------------------------------------------------------------------

class DdmDetector:
    """Error-rate drift detection via minimum-tracking of p + s.

    p_i is the running error rate after i samples, s_i = sqrt(p(1-p)/i) its
    standard error.  The detector remembers (p_min, s_min) at the update
    minimizing p + s.  Once the sum climbs back above the recorded minimum,
    Warning fires at p + s >= p_min + warning_factor * s_min and Drift at
    p + s >= p_min + drift_factor * s_min.  No signal is emitted before
    ``min_instances`` updates, and a Drift resets the detector.
    """

    def __init__(self, min_instances: int = 30,
                 warning_factor: float = 2.0,
                 drift_factor: float = 3.0):
        self.min_instances = min_instances
        self.warning_factor = warning_factor
        self.drift_factor = drift_factor
        self.reset()

    def reset(self) -> None:
        self.n = 0
        self.p = 0.0
        self.s = 0.0
        self.p_min = math.inf
        self.s_min = math.inf
        self.min_sum = math.inf

    def update(self, value: float) -> DriftLevel:
        error = 1.0 if value >= 0.5 else 0.0
        self.n += 1
        self.p += (error - self.p) / self.n
        self.s = math.sqrt(self.p * (1.0 - self.p) / self.n)
        if self.n < self.min_instances:
            return DriftLevel.NORMAL
        curr = self.p + self.s
        if curr < self.min_sum:
            self.p_min = self.p
            self.s_min = self.s
            self.min_sum = curr
            return DriftLevel.NORMAL
        if curr > self.min_sum:
            if curr >= self.p_min + self.drift_factor * self.s_min:
                self.reset()
                return DriftLevel.DRIFT
            if curr >= self.p_min + self.warning_factor * self.s_min:
                return DriftLevel.WARNING
        return DriftLevel.NORMAL


# ---------------------------------------------------------------------------
# EDDM
# ---------------------------------------------------------------------------

class EddmDetector:
    """Drift detection from the spacing between consecutive errors.

    Tracks the running mean p' and standard deviation s' of the distances
    (in samples) between consecutive errors and the maximum of p' + 2s'
    reached so far.  When (p' + 2s') / max falls below ``warning_ratio``
    the level is Warning, below ``drift_ratio`` it is Drift.  Ratios are
    only evaluated once ``min_errors`` errors were seen; a Drift resets the
    detector.  Between errors the last computed level is retained.
    """

    def __init__(self, min_errors: int = 30,
                 warning_ratio: float = 0.95,
                 drift_ratio: float = 0.90):
        self.min_errors = min_errors
        self.warning_ratio = warning_ratio
        self.drift_ratio = drift_ratio
        self.reset()

    def reset(self) -> None:
        self.n = 0
        self.n_errors = 0
        self.last_error_at = None
        self.n_distances = 0
        self.dist_mean = 0.0
        self.dist_m2 = 0.0
        self.max_m2s = 0.0
        self.level = DriftLevel.NORMAL

    def update(self, value: float) -> DriftLevel:
        error = value >= 0.5
        self.n += 1
        if not error:
            return self.level
        self.n_errors += 1
        if self.last_error_at is None:
            self.last_error_at = self.n
            return self.level
        distance = float(self.n - self.last_error_at)
        self.last_error_at = self.n
        self.n_distances += 1
        delta = distance - self.dist_mean
        self.dist_mean += delta / self.n_distances
        self.dist_m2 += delta * (distance - self.dist_mean)
        std = math.sqrt(self.dist_m2 / self.n_distances)
        m2s = self.dist_mean + 2.0 * std
        if m2s > self.max_m2s:
            self.max_m2s = m2s
            self.level = DriftLevel.NORMAL
        elif self.n_errors >= self.min_errors and self.max_m2s > 0.0:
            ratio = m2s / self.max_m2s
            if ratio < self.drift_ratio:
                self.reset()
                return DriftLevel.DRIFT
            if ratio < self.warning_ratio:
                self.level = DriftLevel.WARNING
            else:
                self.level = DriftLevel.NORMAL
        return self.level


# ---------------------------------------------------------------------------
# ADWIN
# ---------------------------------------------------------------------------

class AdwinDetector:
    """Adaptive windowing with an exponential bucket histogram.

    The window of recent values is summarized by rows of buckets; row r
    holds buckets of 2^r elements each (sum only — counts are implied).
    When a row exceeds ``max_buckets`` buckets, its two oldest buckets merge
    into one bucket of the next row.  Passing ``max_buckets=None`` disables
    compression entirely, which keeps every value in a size-1 bucket and
    makes the detector exactly equivalent to an exhaustive cut search.

    On every update (or every ``check_interval`` updates) the detector scans
    all bucket boundaries oldest-to-newest and cuts when the sub-window
    means differ by more than

        eps = sqrt(ln(4 / delta') / (2 m)),   1/m = 1/|W0| + 1/|W1|,

    with delta' = delta / n for the current window length n.  A cut drops
    the oldest bucket and the scan restarts, possibly shrinking repeatedly
    within a single update.
    """

    def __init__(self, delta: float = 0.002,
                 max_buckets: int | None = 5,
                 check_interval: int = 1):
        if not 0.0 < delta < 1.0:
            raise ValueOutOfRange(f"delta {delta} not in (0, 1)")
        if max_buckets is not None and max_buckets < 2:
            raise ValueOutOfRange("max_buckets must be >= 2 (or None)")
        if check_interval < 1:
            raise ValueOutOfRange("check_interval must be >= 1")
        self.delta = delta
        self.max_buckets = max_buckets
        self.check_interval = check_interval
        self.reset()

    def reset(self) -> None:
        # _rows[r] is a list of bucket sums, oldest first; row r buckets
        # cover 2^r elements each.
        self._rows: list[list[float]] = [[]]
        self._count = 0
        self._sum = 0.0
        self._ticks = 0

    # -- window queries ----------------------------------------------------

    @property
    def width(self) -> int:
        return self._count

    @property
    def mean(self) -> float:
        return self._sum / self._count if self._count else 0.0

    def window_values(self) -> list[float]:
        """The retained window, oldest first (uncompressed detectors only)."""
        if self.max_buckets is not None:
            raise ValueError("window_values requires max_buckets=None")
        return list(self._rows[0])

    # -- maintenance -------------------------------------------------------

    def _insert(self, value: float) -> None:
        self._rows[0].append(value)
        self._count += 1
        self._sum += value
        if self.max_buckets is None:
            return
        row = 0
        while len(self._rows[row]) > self.max_buckets:
            oldest = self._rows[row].pop(0)
            second = self._rows[row].pop(0)
            if row + 1 == len(self._rows):
                self._rows.append([])
            self._rows[row + 1].append(oldest + second)
            row += 1

    def _buckets_old_to_new(self) -> list[tuple[int, float]]:
        out = []
        for row in range(len(self._rows) - 1, -1, -1):
            size = 1 << row
            for bucket_sum in self._rows[row]:
                out.append((size, bucket_sum))
        return out

    def _drop_oldest_bucket(self) -> None:
        for row in range(len(self._rows) - 1, -1, -1):
            if self._rows[row]:
                self._rows[row].pop(0)
                self._count -= 1 << row
                break
        while len(self._rows) > 1 and not self._rows[-1]:
            self._rows.pop()
        # Recompute the total oldest-to-newest so that the running sum stays
        # bit-identical to a fresh left-to-right sum over the survivors.
        total = 0.0
        for _, bucket_sum in self._buckets_old_to_new():
            total += bucket_sum
        self._sum = total

    def _shrink(self) -> bool:
        changed = False
        reduced = True
        while reduced:
            reduced = False
            n = self._count
            if n < 2:
                break
            ln_term = math.log(4.0 * n / self.delta)
            buckets = self._buckets_old_to_new()
            n0 = 0
            s0 = 0.0
            for size, bucket_sum in buckets[:-1]:
                n0 += size
                s0 += bucket_sum
                n1 = n - n0
                s1 = self._sum - s0
                inv_m = 1.0 / n0 + 1.0 / n1
                eps = math.sqrt(inv_m * ln_term / 2.0)
                if abs(s0 / n0 - s1 / n1) > eps:
                    changed = True
                    reduced = True
                    self._drop_oldest_bucket()
                    break
        return changed

    def update(self, value: float) -> DriftLevel:
        if not 0.0 <= value <= 1.0:
            raise ValueOutOfRange(f"ADWIN input {value} outside [0, 1]")
        self._insert(float(value))
        self._ticks += 1
        if self._ticks % self.check_interval == 0 and self._shrink():
            return DriftLevel.DRIFT
        return DriftLevel.NORMAL


# ---------------------------------------------------------------------------
# KSWIN
# ---------------------------------------------------------------------------

class KswinDetector:
    """Sliding-window KS test between old and recent values.

    Keeps the last ``window_size`` values; once the window is full, the
    newest ``stat_size`` values are tested against the preceding
    ``window_size - stat_size`` ones.  By default the comparison is
    deterministic (oldest block vs newest block); ``sampled=True`` draws a
    bootstrap sample from the old block instead, seeded for
    reproducibility.  A p-value strictly below ``alpha`` signals Drift and
    truncates the window to the newest ``stat_size`` values.
    """

    def __init__(self, window_size: int = 100, stat_size: int = 30,
                 alpha: float = 0.005, sampled: bool = False, seed: int = 0):
        if stat_size < 1 or window_size <= stat_size:
            raise ValueOutOfRange(
                f"need window_size > stat_size >= 1, got "
                f"{window_size}/{stat_size}")
        if not 0.0 < alpha < 1.0:
            raise ValueOutOfRange(f"alpha {alpha} not in (0, 1)")
        self.window_size = window_size
        self.stat_size = stat_size
        self.alpha = alpha
        self.sampled = sampled
        self._seed = seed
        self.reset()

    def reset(self) -> None:
        self._window: list[float] = []
        self._rng = np.random.default_rng(self._seed)

    @property
    def window(self) -> tuple[float, ...]:
        return tuple(self._window)

    def update(self, value: float) -> DriftLevel:
        self._window.append(float(value))
        if len(self._window) > self.window_size:
            self._window.pop(0)
        if len(self._window) < self.window_size:
            return DriftLevel.NORMAL
        recent = self._window[-self.stat_size:]
        older = self._window[:-self.stat_size]
        if self.sampled:
            older = list(self._rng.choice(older, size=len(older), replace=True))
        d = ks_statistic(older, recent)
        p = ks_pvalue(d, len(older), len(recent))
        if p < self.alpha:
            self._window = self._window[-self.stat_size:]
            return DriftLevel.DRIFT
        return DriftLevel.NORMAL


class NeverFiresDetector:
    """Stub detector: always Normal.  Useful as a no-drift baseline."""

    def reset(self) -> None:
        pass

    def update(self, value: float) -> DriftLevel:
        return DriftLevel.NORMAL
