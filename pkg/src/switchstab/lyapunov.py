"""Per-mode Lyapunov data (V, grad V, W) and the sampled checks run against it."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.stats import qmc

from .errors import ConfigError, DomainViolation
from .integrator import Trajectory
from .system import Domain, SwitchedSystem

Scalar = Callable[[np.ndarray], float]
Vector = Callable[[np.ndarray], np.ndarray]

MONOTONE_SLACK = 1e-9
PERSISTENCE = 3


@dataclass(frozen=True)
class ModeFunctions:
    """V, its gradient and the dissipation bound W for one mode, valid on ``domain``."""

    V: Scalar
    grad: Vector
    W: Scalar
    domain: Domain


@dataclass(frozen=True)
class LyapunovPair:
    parts: Mapping[int, ModeFunctions]
    alpha1: Callable[[float], float] | None = None
    alpha2: Callable[[float], float] | None = None
    radially_unbounded: bool = False
    # set for quadratic pairs; lets callers use exact linear algebra
    P: Mapping[int, np.ndarray] | None = None
    C: Mapping[int, np.ndarray] | None = None

    @property
    def mode_ids(self) -> list[int]:
        return sorted(self.parts)

    @property
    def is_quadratic(self) -> bool:
        return self.P is not None and self.C is not None

    @property
    def covers_everything(self) -> bool:
        return all(p.domain.is_everything for p in self.parts.values())

    def V(self, x, gamma: int) -> float:
        return float(self.parts[gamma].V(np.asarray(x, dtype=float)))

    def grad(self, x, gamma: int) -> np.ndarray:
        return np.asarray(self.parts[gamma].grad(np.asarray(x, dtype=float)), dtype=float)

    def W(self, x, gamma: int) -> float:
        return float(self.parts[gamma].W(np.asarray(x, dtype=float)))

    def contains(self, x, gamma: int) -> bool:
        return self.parts[gamma].domain.contains(x)

    def to_json(self) -> dict:
        if not self.is_quadratic:
            return {"kind": "opaque", "modes": self.mode_ids}
        ids = self.mode_ids
        return {"kind": "quadratic", "ids": ids,
                "P": [self.P[g].tolist() for g in ids], "C": [self.C[g].tolist() for g in ids]}


def quadratic_pair(P_list: Sequence, C_list: Sequence, ids: Sequence[int] | None = None,
                   domains: Sequence[Domain | None] | None = None) -> LyapunovPair:
    """V_g = x'P_g x, grad = 2 P_g x, W_g = |C_g x|^2 with envelopes from the extreme eigenvalues.

    Raises ConfigError naming the mode when some P_g is not symmetric positive definite.
    """
    if len(P_list) != len(C_list):
        raise ConfigError(f"got {len(P_list)} P matrices but {len(C_list)} C matrices")
    ids = list(ids) if ids is not None else list(range(1, len(P_list) + 1))
    domains = list(domains) if domains is not None else [None] * len(P_list)
    parts, Ps, Cs = {}, {}, {}
    lo, hi = math.inf, -math.inf
    for g, P, C, dom in zip(ids, P_list, C_list, domains):
        P = np.array(P, dtype=float)
        C = np.atleast_2d(np.array(C, dtype=float))
        n = P.shape[0]
        if P.shape != (n, n) or C.shape[1] != n:
            raise ConfigError(f"mode {g}: P must be n x n and C must have n columns (P {P.shape}, C {C.shape})")
        if np.max(np.abs(P - P.T)) > 1e-12 * max(1.0, np.max(np.abs(P))):
            raise ConfigError(f"mode {g}: P is not symmetric")
        eig = np.linalg.eigvalsh(P)
        if not eig[0] > 0:
            raise ConfigError(f"mode {g}: P is not positive definite (smallest eigenvalue {eig[0]:.3g})")
        lo, hi = min(lo, eig[0]), max(hi, eig[-1])
        CtC = C.T @ C
        for M in (P, C, CtC):
            M.setflags(write=False)
        parts[g] = ModeFunctions(
            V=lambda x, P=P: float(x @ P @ x),
            grad=lambda x, P=P: 2.0 * (P @ x),
            W=lambda x, CtC=CtC: float(x @ CtC @ x),
            domain=dom or Domain.everywhere(n),
        )
        Ps[g], Cs[g] = P, C
    return LyapunovPair(parts, alpha1=lambda r, a=lo: a * r * r, alpha2=lambda r, b=hi: b * r * r,
                        radially_unbounded=True, P=Ps, C=Cs)


def pair_from_json(obj: Mapping) -> LyapunovPair:
    """``{"P": [...], "C": [...]}`` or ``{"builtin": name}``."""
    if "builtin" in obj:
        name = obj["builtin"]
        if name not in BUILTIN_PAIRS:
            raise ConfigError(f"pair.builtin: unknown pair {name!r}; known: {sorted(BUILTIN_PAIRS)}")
        return BUILTIN_PAIRS[name]()
    for key in ("P", "C"):
        if key not in obj:
            raise ConfigError(f"pair.{key}: missing")
    try:
        return quadratic_pair(obj["P"], obj["C"], obj.get("ids"))
    except ConfigError as exc:
        raise ConfigError(f"pair: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"pair.P/pair.C: {exc}") from exc


# --------------------------------------------------------------------------
# sampling helpers


def _box_points(lo: np.ndarray, hi: np.ndarray, n: int, seed: int) -> np.ndarray:
    u = qmc.Halton(d=lo.size, scramble=True, seed=seed).random(n)
    return lo + u * (hi - lo)


def sample_mode_region(sys: SwitchedSystem, pair: LyapunovPair, gamma: int, n: int, seed: int) -> np.ndarray:
    """Quasi-random points of O_g intersected with chi_g (drawn from the overlap of both boxes)."""
    dom_sys = sys.modes[gamma].domain
    dom_pair = pair.parts[gamma].domain
    lo = np.maximum(dom_sys.lo, dom_pair.lo)
    hi = np.minimum(dom_sys.hi, dom_pair.hi)
    if np.any(lo > hi):
        return np.empty((0, lo.size))
    pts = _box_points(lo, hi, n, seed + gamma)
    keep = [dom_sys.contains(p) and dom_pair.contains(p) for p in pts]
    return pts[keep]


@dataclass
class SampledCheck:
    """Outcome of a sampling-based inequality check: worst margin and where it occurred."""

    ok: bool
    worst_margin: float
    witness: np.ndarray | None
    witness_mode: int | None
    n_points: int

    def to_json(self) -> dict:
        return {"ok": self.ok, "worst_margin": self.worst_margin,
                "witness": None if self.witness is None else self.witness.tolist(),
                "witness_mode": self.witness_mode, "n_points": self.n_points}


def _fold(per_mode: list[tuple[int, np.ndarray, np.ndarray]], atol: float) -> SampledCheck:
    """Combine per-mode (id, points, margins) into a single worst-case report."""
    total = sum(len(m) for _, _, m in per_mode)
    if total == 0:
        raise ValueError("no valid sample points in any mode region")
    worst, wx, wg = math.inf, None, None
    for g, pts, margins in per_mode:
        if len(margins) and margins.min() < worst:
            k = int(np.argmin(margins))
            worst, wx, wg = float(margins[k]), pts[k].copy(), g
    return SampledCheck(worst >= -atol, worst, wx, wg, total)


def check_decrease_inequality(sys: SwitchedSystem, pair: LyapunovPair, n_samples: int = 256,
                              seed: int = 0, atol: float = 1e-9) -> SampledCheck:
    """Check -grad V_g . f_g >= W_g >= 0 at quasi-random points of every mode region.

    The margin at a point is the smaller of the two gaps, so a negative worst
    margin pinpoints a violated inequality.
    """
    per_mode = []
    for g in pair.mode_ids:
        pts = sample_mode_region(sys, pair, g, n_samples, seed)
        margins = np.empty(len(pts))
        for i, x in enumerate(pts):
            w = pair.W(x, g)
            decay = -float(pair.grad(x, g) @ sys.modes[g].field(x))
            margins[i] = min(decay - w, w)
        per_mode.append((g, pts, margins))
    return _fold(per_mode, atol)


def check_envelopes(sys: SwitchedSystem, pair: LyapunovPair, n_samples: int = 256, seed: int = 0,
                    atol: float = 1e-9) -> SampledCheck:
    """alpha1(|x|) <= V_g(x) <= alpha2(|x|) on sampled mode regions."""
    if pair.alpha1 is None or pair.alpha2 is None:
        raise ValueError("pair has no class-K envelopes")
    per_mode = []
    for g in pair.mode_ids:
        pts = sample_mode_region(sys, pair, g, n_samples, seed)
        margins = np.empty(len(pts))
        for i, x in enumerate(pts):
            r = float(np.linalg.norm(x))
            v = pair.V(x, g)
            margins[i] = min(v - pair.alpha1(r), pair.alpha2(r) - v)
        per_mode.append((g, pts, margins))
    return _fold(per_mode, atol * 10)


def check_zero_set_definite(sys: SwitchedSystem, pair: LyapunovPair, n_samples: int = 256, seed: int = 0,
                            origin_radius: float = 1e-2) -> SampledCheck:
    """Sampled form of V_g^{-1}(0) on chi_g being {0}: V_g(x)/|x|^2 > 0 away from the origin.

    Only modes whose domain contains the origin are constrained.  The margin is
    the smallest normalised value of V_g; it must be strictly positive.
    """
    zero = np.zeros(sys.dimension)
    per_mode = []
    for g in pair.mode_ids:
        if not sys.modes[g].domain.contains(zero):
            continue
        pts = sample_mode_region(sys, pair, g, n_samples, seed)
        pts = pts[np.linalg.norm(pts, axis=1) > origin_radius]
        margins = np.array([pair.V(x, g) / float(x @ x) for x in pts])
        per_mode.append((g, pts, margins))
    if not per_mode:
        return SampledCheck(True, math.inf, None, None, 0)
    out = _fold(per_mode, 0.0)
    out.ok = out.worst_margin > 0
    return out


def gradient_error(pair: LyapunovPair, n_points: int = 100, seed: int = 0) -> float:
    """Worst relative gap between the supplied gradient and central differences of V."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for g in pair.mode_ids:
        dom = pair.parts[g].domain
        for x in rng.uniform(dom.lo, dom.hi, size=(n_points, dom.lo.size)):
            h = 1e-6 * max(1.0, float(np.linalg.norm(x)))
            fd = np.empty_like(x)
            for i in range(x.size):
                e = np.zeros_like(x)
                e[i] = h
                fd[i] = (pair.V(x + e, g) - pair.V(x - e, g)) / (2 * h)
            ref = pair.grad(x, g)
            worst = max(worst, float(np.linalg.norm(fd - ref)) / max(1.0, float(np.linalg.norm(ref))))
    return worst


def in_Z_V(sys: SwitchedSystem, pair: LyapunovPair, x, gamma: int, tol: float = 1e-9) -> bool:
    """|grad V_g(x) . f_g(x)| <= tol; raises DomainViolation outside O_g or chi_g."""
    x = np.asarray(x, dtype=float)
    if not pair.contains(x, gamma):
        raise DomainViolation(x, gamma)
    return abs(float(pair.grad(x, gamma) @ sys.eval_field(x, gamma))) <= tol


# --------------------------------------------------------------------------
# v(t) monitoring


@dataclass
class MonitorReport:
    ok: bool
    v: np.ndarray
    mode_restricted: bool
    worst_excess: float
    first_violation_time: float | None
    # (start index, end index) of every persistent uphill run
    violations: list[tuple[int, int]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"ok": self.ok, "mode_restricted": self.mode_restricted, "worst_excess": self.worst_excess,
                "first_violation_time": self.first_violation_time,
                "violations": [list(v) for v in self.violations]}


def monitor_v(traj: Trajectory, pair: LyapunovPair, mode_restricted: bool = False,
              slack: float = MONOTONE_SLACK, persistence: int = PERSISTENCE) -> MonitorReport:
    """Test that v(t) = V(x(t), sigma(t)) never rises above its running minimum.

    With ``mode_restricted`` the running minimum is kept separately for each
    mode, so only samples where that mode is active are compared.  Excess up
    to ``slack * max(1, |v|)`` is integrator noise; a violation needs
    ``persistence`` consecutive samples above the allowance.

    Raises DomainViolation (carrying the exit time) when a sample leaves the
    region of its active mode.
    """
    n = len(traj.times)
    v = np.empty(n)
    for k in range(n):
        g = int(traj.modes[k])
        x = traj.states[k]
        if not pair.contains(x, g):
            raise DomainViolation(x, g, float(traj.times[k]))
        v[k] = pair.V(x, g)

    run_min: dict[int, float] = {}
    excess = np.zeros(n)
    for k in range(n):
        key = int(traj.modes[k]) if mode_restricted else 0
        prev = run_min.get(key)
        if prev is not None:
            excess[k] = v[k] - prev - slack * max(1.0, abs(v[k]))
            run_min[key] = min(prev, v[k])
        else:
            run_min[key] = v[k]

    violations = []
    start = None
    for k in range(n + 1):
        up = k < n and excess[k] > 0
        if up and start is None:
            start = k
        elif not up and start is not None:
            if k - start >= persistence:
                violations.append((start, k - 1))
            start = None
    first = float(traj.times[violations[0][0]]) if violations else None
    worst = float(np.max(excess)) if n else 0.0
    return MonitorReport(not violations, v, mode_restricted, worst, first, violations)


# --------------------------------------------------------------------------
# pairs for the registered nonlinear examples


def _cubic_pair() -> LyapunovPair:
    dom = Domain.everywhere(2)
    sq = lambda x: float(x @ x)
    grad = lambda x: 2.0 * x
    parts = {
        1: ModeFunctions(sq, grad, lambda x: 2.0 * x[0] ** 4, dom),
        2: ModeFunctions(sq, grad, lambda x: 2.0 * x[1] ** 4, dom),
    }
    return LyapunovPair(parts, alpha1=lambda r: r * r, alpha2=lambda r: r * r, radially_unbounded=True)


def _pendulum_energy() -> LyapunovPair:
    dom = Domain.everywhere(2, radius=1.5)
    energy = lambda x: float(1.0 - np.cos(x[0]) + 0.5 * x[1] ** 2)
    grad = lambda x: np.array([np.sin(x[0]), x[1]])
    parts = {
        1: ModeFunctions(energy, grad, lambda x: float(x[1] ** 2), dom),
        2: ModeFunctions(energy, grad, lambda x: 0.0, dom),
    }
    # 2 s^2 / pi^2 <= 1 - cos(s) <= s^2 / 2 on |s| <= pi
    return LyapunovPair(parts, alpha1=lambda r: (2.0 / math.pi ** 2) * r * r,
                        alpha2=lambda r: 0.5 * r * r)


BUILTIN_PAIRS: dict[str, Callable[[], LyapunovPair]] = {
    "cubic_decoupled": _cubic_pair,
    "pendulum_pair": _pendulum_energy,
}
