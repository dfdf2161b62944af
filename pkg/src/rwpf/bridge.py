"""Lazily refined Brownian bridge skeletons.

A bridge is pinned at (a, x_a) and (b, x_b) and materializes interior
values only when queried, by conditional Gaussian sampling between the
nearest already-known neighbors. Repeated queries of the same time (by
exact float equality) return the memoized value, so any query order
realizes one consistent path.

Gaussian draws go through the inverse normal CDF and consume exactly one
uniform each, which is what lets low-discrepancy coordinates stand in
for the uniforms in the point-set-driven estimator mode.
"""

import math
from bisect import bisect_left

from .errors import ContractViolationError
from .stats import invnorm

_TINY = 5e-324  # smallest positive double; floor for a raw 0.0 uniform


class LazyBridge:
    """Growable sorted skeleton of (time, value) pairs on [a, b]."""

    __slots__ = ("a", "b", "x_a", "x_b", "_times", "_values", "total_inserted")

    def __init__(self, a: float, x_a: float, b: float, x_b: float):
        if not a < b:
            raise ValueError(f"need a < b, got a={a}, b={b}")
        if not (math.isfinite(x_a) and math.isfinite(x_b)):
            raise ValueError("endpoint values must be finite")
        self.a = a
        self.b = b
        self.x_a = x_a
        self.x_b = x_b
        self._times = [a, b]
        self._values = [x_a, x_b]
        self.total_inserted = 0  # fresh Gaussian draws ever made, survives restore()

    def __len__(self) -> int:
        return len(self._times)

    def skeleton(self) -> list[tuple[float, float]]:
        return list(zip(self._times, self._values))

    def _conditional(self, t: float):
        """(insertion index, conditional mean, conditional sd) for a fresh t."""
        times = self._times
        if not self.a <= t <= self.b:
            raise ValueError(f"time {t} outside [{self.a}, {self.b}]")
        i = bisect_left(times, t)
        if i < len(times) and times[i] == t:
            return i, None, None  # memoized
        s, u = times[i - 1], times[i]
        w_s, w_u = self._values[i - 1], self._values[i]
        frac = (t - s) / (u - s)
        mean = w_s + frac * (w_u - w_s)
        var = (t - s) * (u - t) / (u - s)
        return i, mean, math.sqrt(var)

    def contains(self, t: float) -> bool:
        i = bisect_left(self._times, t)
        return i < len(self._times) and self._times[i] == t

    def value_at(self, t: float, rng) -> float:
        """Value of the path at t, sampling (one uniform) if t is fresh."""
        i, mean, sd = self._conditional(t)
        if mean is None:
            return self._values[i]
        u = rng.random()
        if u <= 0.0:
            u = _TINY
        value = mean + sd * invnorm(u)
        self._times.insert(i, t)
        self._values.insert(i, value)
        self.total_inserted += 1
        return value

    def value_at_with_uniform(self, t: float, u01: float) -> float:
        """Deterministic-uniform variant for point-set-driven sampling.

        Requires a fresh t: re-querying a known time would silently ignore
        the supplied uniform, so it is an error here.
        """
        i, mean, sd = self._conditional(t)
        if mean is None:
            raise ContractViolationError(
                f"time {t} already in skeleton; uniform-driven queries need fresh times"
            )
        value = mean + sd * invnorm(u01)
        self._times.insert(i, t)
        self._values.insert(i, value)
        self.total_inserted += 1
        return value

    def snapshot(self):
        """Opaque state token for restore(); endpoints are always retained."""
        return list(self._times), list(self._values)

    def restore(self, snap) -> None:
        times, values = snap
        self._times = list(times)
        self._values = list(values)
