"""Finite-sample estimates of omega-limit sets, convergence checks and meagreness tests."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .integrator import Trajectory
from .signals import next_switch_time


@dataclass
class SetEstimate:
    """Finite point cloud, pairwise distinct up to ``cluster_tol``.

    ``modes`` is set for estimates of state-mode pairs; two pairs are merged
    only when they share the mode.
    """

    points: np.ndarray
    cluster_tol: float
    modes: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.points)

    def distance(self, x) -> float:
        if len(self.points) == 0:
            return math.inf
        return float(np.min(np.linalg.norm(self.points - np.asarray(x, dtype=float), axis=1)))

    def project(self) -> SetEstimate:
        """Drop the mode component."""
        return dedupe(self.points, self.cluster_tol)

    def to_json(self) -> dict:
        out = {"cluster_tol": self.cluster_tol, "points": self.points.tolist()}
        if self.modes is not None:
            out["modes"] = [int(m) for m in self.modes]
        return out


def dedupe(points: np.ndarray, cluster_tol: float, modes: np.ndarray | None = None) -> SetEstimate:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    kept: list[int] = []
    buf = np.empty_like(points)
    for i, p in enumerate(points):
        k = len(kept)
        if k:
            d = np.linalg.norm(buf[:k] - p, axis=1)
            if modes is not None:
                d = np.where(modes[kept] == modes[i], d, np.inf)
            if np.min(d) <= cluster_tol:
                continue
        buf[k] = p
        kept.append(i)
    return SetEstimate(points[kept], cluster_tol, None if modes is None else modes[kept])


def hausdorff_directed(a: np.ndarray, b: np.ndarray) -> float:
    """sup over a of the distance to b."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    worst = 0.0
    for chunk in np.array_split(a, max(1, len(a) // 512)):
        d = np.linalg.norm(chunk[:, None, :] - b[None, :, :], axis=2)
        worst = max(worst, float(np.max(np.min(d, axis=1))))
    return worst


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    return max(hausdorff_directed(a, b), hausdorff_directed(b, a))


def _check_bounded(traj: Trajectory):
    if not np.all(np.isfinite(traj.states)) or np.max(np.linalg.norm(traj.states, axis=1)) > traj.bound:
        raise ValueError("trajectory is unbounded; omega-limit estimate undefined")


def _tail(traj: Trajectory, tail_fraction: float) -> np.ndarray:
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError("tail_fraction must lie in (0, 1]")
    t0, t1 = traj.span
    return traj.times >= t1 - tail_fraction * (t1 - t0)


def omega_limit(traj: Trajectory, tail_fraction: float = 0.2, cluster_tol: float = 1e-3) -> SetEstimate:
    """Samples from the trailing ``tail_fraction`` of the run, deduplicated."""
    _check_bounded(traj)
    mask = _tail(traj, tail_fraction)
    return dedupe(traj.states[mask], cluster_tol)


def omega_sharp(traj: Trajectory, r_min: float, cluster_tol: float = 1e-3,
                tail_fraction: float = 0.2) -> SetEstimate:
    """(state, mode) samples from the tail taken at least ``r_min`` before the next switch.

    Switches beyond the signal horizon are unknown, so samples near the end of
    the horizon count as having no upcoming switch.
    """
    if not r_min > 0:
        raise ValueError("r_min must be positive")
    _check_bounded(traj)
    sig = traj.signal
    mask = _tail(traj, tail_fraction)
    idx = [i for i in np.flatnonzero(mask)
           if traj.times[i] >= sig.t_end or next_switch_time(sig, traj.times[i]) - traj.times[i] >= r_min]
    if not idx:
        raise ValueError("r_min too large: no tail sample is that far from its next switch")
    return dedupe(traj.states[idx], cluster_tol, traj.modes[idx])


Target = Union[SetEstimate, Callable[[np.ndarray], object]]


def target_distance(target: Target, x: np.ndarray) -> float:
    if isinstance(target, SetEstimate):
        return target.distance(x)
    if hasattr(target, "distance"):
        return float(target.distance(x))
    r = target(x)
    if isinstance(r, (bool, np.bool_)):
        return 0.0 if r else math.inf
    return float(r)


def converges_to(traj: Trajectory, target: Target, eps: float, t_check: float) -> bool:
    """True iff every sample at or after ``t_check`` is within ``eps`` of ``target``.

    ``target`` is a :class:`SetEstimate`, an object with a ``distance`` method,
    a distance function, or a membership predicate (distance 0 inside, inf outside).
    """
    t0, t1 = traj.span
    if not t0 <= t_check <= t1:
        raise ValueError(f"t_check={t_check} outside trajectory span")
    return all(target_distance(target, x) <= eps for x in traj.states[traj.times >= t_check])


def box_distance(lo, hi) -> Callable[[np.ndarray], float]:
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    return lambda x: float(np.linalg.norm(np.maximum(lo - x, 0.0) + np.maximum(x - hi, 0.0)))


@dataclass
class MeagreReport:
    consistent: bool
    infima: np.ndarray
    window_starts: np.ndarray
    tol: float

    def to_json(self) -> dict:
        return {"consistent": self.consistent, "infima": self.infima.tolist(),
                "window_starts": self.window_starts.tolist(), "tol": self.tol}


def weakly_meagre_estimate(t, y, window: float, n_windows: int, tol: float = 1e-3) -> MeagreReport:
    """inf |y| over ``n_windows`` consecutive disjoint windows ``[t0 + k w, t0 + (k+1) w)``.

    This can only say "consistent with weakly meagre": the infima must end at
    most ``tol`` and the later half must not exceed the earlier half (up to
    ``tol``), i.e. the series trends down.
    """
    t = np.asarray(t, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    if not window > 0 or n_windows < 1:
        raise ValueError("need window > 0 and n_windows >= 1")
    if t[-1] - t[0] < n_windows * window * (1 - 1e-12):
        raise ValueError("signal span shorter than n_windows * window")
    starts = t[0] + window * np.arange(n_windows)
    infima = np.empty(n_windows)
    for k, a in enumerate(starts):
        mask = (t >= a) & (t < a + window) if k < n_windows - 1 else (t >= a) & (t <= a + window)
        infima[k] = np.min(y[mask]) if np.any(mask) else np.inf
    half = n_windows // 2
    trend_down = half == 0 or np.max(infima[half:]) <= np.max(infima[:half]) + tol
    consistent = bool(infima[-1] <= tol and trend_down)
    return MeagreReport(consistent, infima, starts, tol)
