"""Averaging weights w_1, w_2, ... and their asymptotic conditions.

Condition 1: w_N / W_N -> 0.  Condition 2: W_N -> infinity.
Condition 3: Delta_N / W_N -> 0, where Delta_N = sum_{k<=N} |w_{k+1} - w_k|.

Only forward averages s^N = sum_k w_k S^k / W_N are supported.  Putting
w_k on round N+1-k instead is not: unless the weights are constant, the new
average is then no longer a convex combination of the old average and the
latest payoff, which every plan bound here relies on.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class WeightSequence:
    """Positive weights normalized so that w_1 = 1."""

    def __init__(self, fn: Callable[[int], float], name: str = "custom", uniform: bool = False):
        w1 = float(fn(1))
        if not w1 > 0:
            raise ValueError("weights must be positive")
        self._fn = fn
        self._w1 = w1
        self.name = name
        self.uniform = uniform
        self._cache = np.empty(0)

    @classmethod
    def constant(cls) -> "WeightSequence":
        return cls(lambda n: 1.0, "uniform", uniform=True)

    @classmethod
    def linear(cls) -> "WeightSequence":
        return cls(lambda n: float(n), "linear")

    @classmethod
    def power(cls, alpha: float) -> "WeightSequence":
        return cls(lambda n: float(n) ** alpha, f"power({alpha})")

    @classmethod
    def harmonic(cls) -> "WeightSequence":
        return cls(lambda n: 1.0 / n, "harmonic")

    @classmethod
    def geometric(cls, ratio: float = 2.0) -> "WeightSequence":
        return cls(lambda n: float(ratio) ** (n - 1), f"geometric({ratio})")

    @classmethod
    def from_spec(cls, spec: dict) -> "WeightSequence":
        kind = spec.get("kind", "uniform")
        if kind == "uniform":
            return cls.constant()
        if kind == "linear":
            return cls.linear()
        if kind == "harmonic":
            return cls.harmonic()
        if kind == "power":
            return cls.power(float(spec["alpha"]))
        if kind == "geometric":
            return cls.geometric(float(spec.get("ratio", 2.0)))
        raise ValueError(f"unknown weight kind {kind!r}")

    def __call__(self, n: int) -> float:
        return float(self._fn(n)) / self._w1

    def array(self, n: int) -> np.ndarray:
        """w_1..w_n as a float array."""
        if len(self._cache) < n:
            with np.errstate(over="ignore"):
                self._cache = np.array([self(k) for k in range(1, n + 1)], dtype=float)
        return self._cache[:n]

    def prefix_sums(self, n: int) -> np.ndarray:
        """W_1..W_n."""
        return np.cumsum(self.array(n))

    def deltas(self, n: int) -> np.ndarray:
        """Delta_1..Delta_n (needs w_{n+1})."""
        return np.cumsum(np.abs(np.diff(self.array(n + 1))))

    def __repr__(self):
        return f"WeightSequence({self.name})"


@dataclass
class WeightConditions:
    c1: bool
    c2: bool
    c3: bool
    monotone: bool
    horizon: int
    traces: dict = field(repr=False, default_factory=dict)


def _decays(trace: np.ndarray, h: int, factor: float = 0.8, floor: float = 1e-6) -> bool:
    end, half = trace[h - 1], trace[h // 2 - 1]
    if not np.isfinite(end) or not np.isfinite(half):
        return False
    return bool(end <= floor or end <= factor * half)


def weight_conditions(w: WeightSequence, horizon: int = 1000) -> WeightConditions:
    """Decide Conditions 1-3 by trend tests over a finite horizon.

    Condition 1 and 3 hold when the ratio shrinks by at least 20% over the
    last doubling of N; Condition 2 holds when the growth of W over the last
    doubling is at least 90% of the growth over the doubling before it.  For
    monotone sequences Condition 3 is taken as Conditions 1 and 2 together
    (Delta_N telescopes to |w_{N+1} - w_1|).
    """
    if horizon < 1000:
        raise ValueError("horizon must be at least 1000")
    h = horizon
    with np.errstate(over="ignore", invalid="ignore"):
        wa = w.array(h + 1)
        W = np.cumsum(wa[:h])
        r1 = wa[:h] / W
        delta = np.cumsum(np.abs(np.diff(wa)))
        r3 = delta / W
    diffs = np.diff(wa)
    monotone = bool(np.all(diffs >= 0) or np.all(diffs <= 0))

    c1 = _decays(r1, h)
    q = h // 4
    d_late = W[h - 1] - W[h // 2 - 1]
    d_early = W[h // 2 - 1] - W[q - 1]
    c2 = bool(np.isfinite(d_late) and d_late >= 0.9 * d_early) or bool(np.isinf(W[h - 1]))
    if monotone:
        c3 = c1 and c2
    else:
        c3 = _decays(r3, h)
    return WeightConditions(c1, c2, c3, monotone, h,
                            {"w_over_W": r1, "W": W, "delta_over_W": r3})
