"""Value types of threshold sweeps, FT surfaces and trade-off curves."""

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from django.db import models
from scipy.interpolate import PchipInterpolator

from core.exceptions import DomainError

CURVE_COLUMNS = ["axis_value", "distance", "shots", "logical_errors", "p_L", "stderr"]


class SweepAxis(models.TextChoices):
    P_F = "p_F", "Gate failure probability"
    T_RUS = "t_rus_over_T2", "RUS gate duration over T2"
    D = "D", "Photon distinguishability"
    EPSILON = "epsilon", "Single-photon loss"
    W = "w", "Scale of the configured noise"


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple
    distances: tuple
    shots: int
    seed: int
    basis: str = "Z"
    rounds: int = None

    def __post_init__(self):
        if self.axis not in SweepAxis.values:
            raise DomainError(f"Unknown sweep axis {self.axis!r}")
        if list(self.values) != sorted(self.values) or len(self.values) < 2:
            raise DomainError("Sweep values must be ascending, at least two")
        if min(self.values) <= 0:
            raise DomainError("Sweep values must be positive")
        if len(self.distances) < 2 or any(d < 3 or d % 2 == 0 for d in self.distances):
            raise DomainError("A threshold sweep needs at least two odd distances >= 3")
        if self.shots < 1:
            raise DomainError("shots must be positive")


@dataclass(frozen=True)
class ThresholdEstimate:
    """
    Crossing of the curves of ``distances``.

    ``crossing`` is ``None`` when the curves do not cross inside the swept range.
    """

    distances: tuple
    crossing: float = None
    ci_low: float = None
    ci_high: float = None

    @property
    def found(self):
        return self.crossing is not None

    def as_dict(self):
        return {
            "distances": list(self.distances),
            "crossing": self.crossing,
            "ci": [self.ci_low, self.ci_high],
            "status": "ok" if self.found else "no crossing in range",
        }


@dataclass(frozen=True)
class ThresholdScan:
    axis: str
    curves: pd.DataFrame
    pairs: tuple
    pooled: ThresholdEstimate


def triangle_side(points):
    """Side ``m`` of a triangular tessellation with ``(m + 1)(m + 2) / 2`` points."""
    side = (math.isqrt(8 * points + 1) - 3) // 2
    if side < 1 or (side + 1) * (side + 2) // 2 != points:
        raise DomainError(f"{points} points do not form a triangular tessellation")
    return side


@dataclass(frozen=True)
class FtSurfaceSpec:
    """
    Tessellation of the plane ``p_F/A + t/B + D/C = 1`` and the w scan.

    ``thresholds`` holds the axis thresholds ``(A, B, C)``.
    """

    thresholds: tuple
    points: int = 120
    w_min: float = 0.85
    w_max: float = 1.0
    w_steps: int = 7
    distances: tuple = (9, 11)

    def __post_init__(self):
        if len(self.thresholds) != 3 or min(self.thresholds) <= 0:
            raise DomainError("Three positive axis thresholds are required")
        if self.points < 3:
            raise DomainError("The tessellation needs at least 3 points")
        triangle_side(self.points)
        if not 0 < self.w_min < self.w_max:
            raise DomainError("Need 0 < w_min < w_max")
        if self.w_steps < 2:
            raise DomainError("The w scan needs at least two steps")
        if len(self.distances) != 2 or self.distances[0] >= self.distances[1]:
            raise DomainError("Give two increasing distances")

    def directions(self):
        """Tessellation points ``M`` on the plane, corners included."""
        side = triangle_side(self.points)
        a, b, c = self.thresholds
        return [
            (i * a / side, j * b / side, (side - i - j) * c / side)
            for i in range(side, -1, -1)
            for j in range(side - i, -1, -1)
        ]

    @property
    def w_grid(self):
        return np.linspace(self.w_min, self.w_max, self.w_steps)


@dataclass(frozen=True)
class FtSurfacePoint:
    index: int
    direction: tuple
    w_th: float
    bracketed: bool
    at_endpoint: bool

    @property
    def boundary(self):
        return tuple(self.w_th * component for component in self.direction)

    def as_dict(self):
        return {
            "index": self.index,
            "direction": list(self.direction),
            "w_th": self.w_th,
            "boundary": list(self.boundary),
            "bracketed": self.bracketed,
            "at_endpoint": self.at_endpoint,
        }


@dataclass(frozen=True)
class FtSurface:
    spec: FtSurfaceSpec
    points: tuple
    scan: pd.DataFrame = None

    def boundary_points(self):
        return [point.boundary for point in self.points]


@dataclass(frozen=True)
class Border:
    """
    Monotone border ``t_th(p_F)`` of the correctable region at D = 0.

    ``p_values`` ascend from the smallest sampled ``p_F`` to the root where
    ``t_th`` reaches 0; beyond the root the border is 0.
    """

    p_values: tuple
    t_values: tuple

    def __post_init__(self):
        if len(self.p_values) < 2 or len(self.p_values) != len(self.t_values):
            raise DomainError("A border needs at least two (p_F, t) points")
        if np.any(np.diff(self.p_values) <= 0):
            raise DomainError("Border p_F values must be strictly increasing")
        if np.any(np.diff(self.t_values) > 0) or min(self.t_values) < 0:
            raise DomainError("Border t values must be nonnegative and nonincreasing")

    @classmethod
    def line(cls, p_threshold, t_threshold):
        """Straight border between the two axis thresholds."""
        return cls((0.0, float(p_threshold)), (float(t_threshold), 0.0))

    @classmethod
    def from_points(cls, points, tolerance=1e-12):
        """
        Border through the FT-surface boundary points with ``D = 0``.

        Args:
            points: ``(p_F, t, D)`` boundary points

        Returns:
            Border: Monotonicity enforced by a running minimum over ``p_F``
        """
        edge = sorted((p, t) for p, t, D in points if abs(D) <= tolerance)
        merged = {}
        for p, t in edge:
            merged[p] = min(t, merged.get(p, math.inf))
        p_values = np.array(sorted(merged))
        t_values = np.minimum.accumulate([max(merged[p], 0.0) for p in p_values])
        if len(p_values) < 2:
            raise DomainError("The surface has fewer than two points at D = 0")
        if t_values[-1] > 0:
            raise DomainError("The surface does not reach the p_F axis at D = 0")
        return cls(tuple(p_values.tolist()), tuple(t_values.tolist()))

    @property
    def root(self):
        """Smallest ``p_F`` where the border reaches 0."""
        t_values = np.asarray(self.t_values)
        return float(np.asarray(self.p_values)[np.argmax(t_values <= 0)])

    def __call__(self, p_F):
        p_values = np.asarray(self.p_values)
        interpolator = PchipInterpolator(p_values, np.asarray(self.t_values))
        requested = np.asarray(p_F, dtype=float)
        t = np.maximum(interpolator(np.clip(requested, p_values[0], p_values[-1])), 0.0)
        t = np.where(requested >= self.root, 0.0, t)
        return t if t.ndim else float(t)

    def as_dict(self):
        return {"p_F": list(self.p_values), "t_rus_over_T2": list(self.t_values)}


@dataclass(frozen=True)
class TradeoffCurve:
    """
    Maximum trial time per (n, k, loss) and the envelope optimized over k.

    ``curves`` has columns n, k, epsilon, p_F, t_trial_max; ``envelope``
    has n, epsilon, t_trial_max, k_opt.
    """

    curves: pd.DataFrame
    envelope: pd.DataFrame
    border: Border

    def curve(self, n=1, k=None):
        frame = self.curves[self.curves["n"] == n]
        return frame if k is None else frame[frame["k"] == k]

    def envelope_for(self, n=1):
        return self.envelope[self.envelope["n"] == n]
