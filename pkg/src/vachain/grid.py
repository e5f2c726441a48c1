"""Non-uniform state-space grids (Tavella-Randall sinh stretching).

A grid is a strictly increasing set of states for one coordinate (variance
or auxiliary log-fund).  Points cluster around a chosen center; the
``alpha`` parameter controls the degree of non-uniformity: small alpha
concentrates points near the center, large alpha approaches a uniform grid.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .models import ModelSpec

__all__ = [
    "Grid",
    "build_grid",
    "insert_point",
    "validate_rate_conditions",
    "RateConditionReport",
]

# Relative tolerance under which an inserted value snaps to an existing
# point instead of creating a (nearly) zero spacing.
SNAP_RTOL = 1e-14


@dataclass(frozen=True)
class Grid:
    """Sorted finite state space for one coordinate."""

    points: np.ndarray
    center: float
    alpha: float

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("grid needs at least two points")
        if not np.all(np.isfinite(pts)):
            raise ValueError("grid points must be finite")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("grid points must be strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return int(self.points.size)

    @property
    def spacings(self) -> np.ndarray:
        """delta_i = points[i+1] - points[i]."""
        return np.diff(self.points)

    @property
    def lo(self) -> float:
        return float(self.points[0])

    @property
    def hi(self) -> float:
        return float(self.points[-1])

    def index_of(self, value: float) -> int:
        """Index of the grid point equal to ``value`` (after snapping)."""
        i = int(np.argmin(np.abs(self.points - value)))
        if abs(self.points[i] - value) > SNAP_RTOL * max(1.0, abs(value)):
            raise KeyError(f"{value!r} is not a grid point")
        return i

    def with_point(self, value: float) -> "Grid":
        return insert_point(self, value)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "point", "spacing"])
            d = self.spacings
            for i, p in enumerate(self.points):
                w.writerow([i, f"{p:.17g}", f"{d[i]:.17g}" if i < d.size else ""])


def build_grid(center: float, lo: float, hi: float, count: int, alpha: float) -> Grid:
    """Build a sinh-stretched grid of ``count`` points on [lo, hi].

    Endpoints are exact; interior points follow the Tavella-Randall map
    ``center + alpha*sinh(c2*u + c1*(1-u))`` with u equally spaced on [0, 1]
    and c1, c2 the asinh images of the endpoints, so the map itself hits lo
    at u=0 and hi at u=1.
    """
    if not (lo < center < hi):
        raise ValueError(f"need lo < center < hi, got {lo}, {center}, {hi}")
    if count < 3:
        raise ValueError(f"count must be >= 3, got {count}")
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    c1 = np.arcsinh((lo - center) / alpha)
    c2 = np.arcsinh((hi - center) / alpha)
    u = np.arange(count, dtype=float) / (count - 1)
    pts = center + alpha * np.sinh(c2 * u + c1 * (1.0 - u))
    pts[0] = lo
    pts[-1] = hi
    # sinh of an affine function is strictly monotone; failure here means
    # the inputs were degenerate beyond float resolution.
    assert np.all(np.diff(pts) > 0), "sinh grid not strictly increasing"
    return Grid(points=pts, center=float(center), alpha=float(alpha))


def insert_point(grid: Grid, value: float) -> Grid:
    """Return a grid containing ``value``; snap instead of inserting a
    near-duplicate (within 1e-14 relative)."""
    value = float(value)
    if not (grid.lo <= value <= grid.hi):
        raise ValueError(f"{value} outside grid range [{grid.lo}, {grid.hi}]")
    if np.any(np.abs(grid.points - value) <= SNAP_RTOL * max(1.0, abs(value))):
        return grid
    k = int(np.searchsorted(grid.points, value))
    pts = np.insert(grid.points, k, value)
    return Grid(points=pts, center=grid.center, alpha=grid.alpha)


@dataclass(frozen=True)
class RateConditionReport:
    """Pointwise transition-rate validity check for a drift/volatility pair.

    The pointwise conditions keep the birth-death rates nonnegative:
    delta_{i-1} <= sigma^2/|mu| where mu < 0 and delta_i <= sigma^2/mu where
    mu > 0 (no condition where mu = 0).  Informational only: generator
    construction proceeds regardless.
    """

    passed: np.ndarray          # bool per interior point
    required_spacing: np.ndarray  # sigma^2/|mu| per interior point (inf if mu=0)
    actual_spacing: np.ndarray    # binding spacing per interior point
    global_sufficient: bool       # max delta <= min sigma^2/|mu|
    failing_indices: tuple = field(default=())

    @property
    def all_pointwise_ok(self) -> bool:
        return bool(np.all(self.passed))


def validate_rate_conditions(grid: Grid, model: "ModelSpec") -> RateConditionReport:
    """Evaluate the rate-validity conditions of the variance layer on a grid."""
    v = grid.points
    d = grid.spacings
    mu = np.asarray(model.mu_v(v), dtype=float)
    s2 = np.asarray(model.sigma_v(v), dtype=float) ** 2
    n = v.size
    interior = np.arange(1, n - 1)
    passed = np.ones(n - 2, dtype=bool)
    required = np.full(n - 2, np.inf)
    binding = np.zeros(n - 2)
    for j, i in enumerate(interior):
        m_i = mu[i]
        if m_i < 0:
            required[j] = s2[i] / abs(m_i)
            binding[j] = d[i - 1]
            passed[j] = d[i - 1] <= required[j]
        elif m_i > 0:
            required[j] = s2[i] / m_i
            binding[j] = d[i]
            passed[j] = d[i] <= required[j]
        else:
            binding[j] = max(d[i - 1], d[i])
    with np.errstate(divide="ignore"):
        ratio = np.where(mu[:-1] != 0, s2[:-1] / np.abs(mu[:-1]), np.inf)
    global_ok = bool(d.max() <= ratio.min())
    failing = tuple(int(i) for i in interior[~passed])
    return RateConditionReport(
        passed=passed,
        required_spacing=required,
        actual_spacing=binding,
        global_sufficient=global_ok,
        failing_indices=failing,
    )
