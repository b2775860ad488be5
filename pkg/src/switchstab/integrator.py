"""Fixed-step RK4 for switched systems driven by a time-triggered switching signal."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import Blowup, DomainViolation, HorizonError
from .signals import SwitchingSignal
from .system import SwitchedSystem

DEFAULT_BOUND = 1e9


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    modes: np.ndarray
    signal: SwitchingSignal
    step_stats: dict = field(default_factory=dict)
    backward: bool = False
    bound: float = DEFAULT_BOUND

    @property
    def dimension(self) -> int:
        return self.states.shape[1]

    @property
    def span(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"x_{i + 1}" for i in range(self.dimension)] + ["mode"])
        for t, x, m in zip(self.times, self.states, self.modes):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in x] + [int(m)])
        return buf.getvalue()


def rk4_step(f, x: np.ndarray, h: float) -> np.ndarray:
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_matrix(A: np.ndarray, h: float) -> np.ndarray:
    """One RK4 step on x' = A x is x -> M x with M the degree-4 Taylor polynomial of e^{hA}."""
    hA = h * A
    hA2 = hA @ hA
    return np.eye(A.shape[0]) + hA + hA2 / 2.0 + hA2 @ hA / 6.0 + hA2 @ hA2 / 24.0


def _step_grid(a: float, b: float, h: float) -> np.ndarray:
    n = max(1, math.ceil((b - a) / h - 1e-9))
    grid = a + h * np.arange(1, n + 1, dtype=float)
    grid[-1] = b
    return grid


def simulate(sys: SwitchedSystem, sig: SwitchingSignal, x0, span: tuple[float, float] | None = None,
             step: float = 1e-3, backward: bool = False, bound: float = DEFAULT_BOUND,
             check_domain: bool = True) -> Trajectory:
    """Integrate x' = f(x, sigma(t)) (or x' = -f when ``backward``) on ``span``.

    Steps have length ``step`` except the last one before each switch time,
    which is shortened so the switch instant is a sample time.  With
    ``backward=True`` the returned times are the reversed-time parameter s and
    the state is x(-s) of the original field.

    Raises:
        DomainViolation: a sample left the domain of its active mode.
        Blowup: |x| exceeded ``bound``.
    """
    t0, t1 = span if span is not None else (sig.t_begin, sig.t_end)
    t0, t1 = float(t0), float(t1)
    if not (sig.t_begin <= t0 < t1 <= sig.t_end):
        raise HorizonError(f"span [{t0}, {t1}] not inside signal horizon [{sig.t_begin}, {sig.t_end}]")
    if not step > 0:
        raise ValueError("step must be positive")
    sign = -1.0 if backward else 1.0
    x = np.array(x0, dtype=float)
    if x.shape != (sys.dimension,):
        raise ValueError(f"x0 must have shape ({sys.dimension},)")
    g = sig(t0)
    if check_domain and not sys.modes[g].domain.contains(x):
        raise DomainViolation(x, g, t0)

    breaks = [t0] + [s for s in sig._times if t0 < s < t1] + [t1]
    times = [t0]
    states = [x.copy()]
    modes = [g]
    max_step = 0.0
    err_est = 0.0
    bound2 = bound * bound
    for a, b in zip(breaks[:-1], breaks[1:]):
        g = sig(a)
        mode = sys.modes[g]
        dom = mode.domain
        if mode.linear is not None:
            A = sign * mode.linear
            f = lambda y, A=A: A @ y
            cache: dict[float, np.ndarray] = {}
        else:
            fld = mode.field
            f = (lambda y: -np.asarray(fld(y), dtype=float)) if backward else \
                (lambda y: np.asarray(fld(y), dtype=float))
            cache = None
        grid = _step_grid(a, b, step)
        # Richardson estimate on the first step of every constant-mode segment
        h0 = grid[0] - a
        full = rk4_step(f, x, h0)
        half = rk4_step(f, rk4_step(f, x, h0 / 2), h0 / 2)
        err_est = max(err_est, float(np.linalg.norm(full - half)) * 16.0 / 15.0)

        n = grid.size
        for k, t_next in enumerate(grid):
            # nominal length for interior steps keeps the matrix cache at two entries
            h = step if k < n - 1 else t_next - (a + step * (n - 1))
            if cache is not None:
                M = cache.get(h)
                if M is None:
                    M = cache[h] = rk4_matrix(A, h)
                x = M @ x
            else:
                x = rk4_step(f, x, h)
            max_step = max(max_step, h)
            nx2 = float(x @ x)
            if not nx2 <= bound2:
                raise Blowup(t_next, math.sqrt(nx2) if math.isfinite(nx2) else math.inf)
            if check_domain and not dom.is_everything and not dom.contains(x):
                raise DomainViolation(x, g, t_next)
            times.append(t_next)
            states.append(x)
            modes.append(g)
        if b < t1:
            g_new = sig(b)
            modes[-1] = g_new
            if check_domain and not sys.modes[g_new].domain.contains(x):
                raise DomainViolation(x, g_new, b)
        else:
            modes[-1] = sig(b)

    return Trajectory(
        times=np.array(times),
        states=np.array(states),
        modes=np.array(modes, dtype=int),
        signal=sig,
        step_stats={"max_step": float(max_step), "n_steps": len(times) - 1, "local_error_estimate": err_est},
        backward=backward,
        bound=bound,
    )


def sample_state(traj: Trajectory, t: float) -> np.ndarray:
    """Linear interpolation between bracketing samples; exact at sample times."""
    t0, t1 = traj.span
    if not t0 <= t <= t1:
        raise HorizonError(f"t={t} outside simulated span [{t0}, {t1}]")
    k = int(np.searchsorted(traj.times, t))
    if k < traj.times.size and traj.times[k] == t:
        return traj.states[k].copy()
    ta, tb = traj.times[k - 1], traj.times[k]
    w = (t - ta) / (tb - ta)
    return (1.0 - w) * traj.states[k - 1] + w * traj.states[k]
