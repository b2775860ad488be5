"""Switching signals on finite horizons and the signal classes they may belong to.

A signal is piecewise constant and right-continuous: its value at ``t`` is the
mode of the last switch at or before ``t`` (or the initial mode).  Classes:

* ``ADT(tau_d, n0)``  average dwell time with chatter bound ``n0``
* ``Dwell(tau_d)``    dwell time, identical to ``ADT(tau_d, 1)``
* ``Ergodic(T, modes)`` every mode active somewhere in every closed window of length ``T``
* ``Graph(H)``        each jump lands in ``H(previous mode)``
* ``Intersection``    all members at once

Every check is relative to the stored horizon; nothing is extrapolated.
"""

from __future__ import annotations

import bisect
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import HorizonError, InfeasibleSpecError, SignalError, UndecidableError

# Slack on the average-dwell-time count; switch times are floats and the
# pairwise bound is tight for signals generated exactly at dwell time.
ADT_SLACK = 1e-9


@dataclass(frozen=True)
class SwitchingSignal:
    t_begin: float
    t_end: float
    initial_mode: int
    switches: tuple[tuple[float, int], ...] = ()

    def __post_init__(self):
        t_begin, t_end = float(self.t_begin), float(self.t_end)
        if not (math.isfinite(t_begin) and math.isfinite(t_end)) or t_end <= t_begin:
            raise SignalError(f"need finite t_begin < t_end, got [{t_begin}, {t_end}]")
        switches = tuple((float(t), int(m)) for t, m in self.switches)
        prev_t, prev_m = t_begin, int(self.initial_mode)
        for t, m in switches:
            if not t > prev_t:
                raise SignalError(f"switch times must be strictly increasing and > t_begin (at {t})")
            if m == prev_m:
                raise SignalError(f"switch at t={t} does not change the mode ({m})")
            prev_t, prev_m = t, m
        if switches and not switches[-1][0] < t_end:
            raise SignalError("switch times must lie before t_end")
        object.__setattr__(self, "t_begin", t_begin)
        object.__setattr__(self, "t_end", t_end)
        object.__setattr__(self, "initial_mode", int(self.initial_mode))
        object.__setattr__(self, "switches", switches)
        object.__setattr__(self, "_times", [t for t, _ in switches])

    @classmethod
    def constant(cls, mode: int, t_begin: float, t_end: float) -> SwitchingSignal:
        return cls(t_begin, t_end, mode, ())

    @property
    def times(self) -> np.ndarray:
        return np.array(self._times, dtype=float)

    @property
    def modes(self) -> list[int]:
        """Mode sequence: initial mode followed by each switch's mode."""
        return [self.initial_mode] + [m for _, m in self.switches]

    def __call__(self, t: float) -> int:
        if not self.t_begin <= t <= self.t_end:
            raise HorizonError(f"t={t} outside [{self.t_begin}, {self.t_end}]")
        k = bisect.bisect_right(self._times, t)
        return self.initial_mode if k == 0 else self.switches[k - 1][1]

    def mode_before(self, t: float) -> int:
        """Left limit sigma(t^-)."""
        k = bisect.bisect_left(self._times, t)
        return self.initial_mode if k == 0 else self.switches[k - 1][1]

    def to_json(self) -> dict:
        return {
            "t_begin": self.t_begin,
            "t_end": self.t_end,
            "initial_mode": self.initial_mode,
            "switches": [[t, m] for t, m in self.switches],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> SwitchingSignal:
        try:
            return cls(obj["t_begin"], obj["t_end"], obj["initial_mode"],
                       tuple((t, m) for t, m in obj.get("switches", [])))
        except (KeyError, TypeError) as exc:
            raise SignalError(f"bad signal object: {exc}") from exc


def next_switch_time(sig: SwitchingSignal, t: float) -> float:
    """First switch time strictly greater than ``t``; ``math.inf`` if none in the horizon."""
    if not sig.t_begin <= t < sig.t_end:
        raise HorizonError(f"t={t} outside [{sig.t_begin}, {sig.t_end})")
    k = bisect.bisect_right(sig._times, t)
    return sig._times[k] if k < len(sig._times) else math.inf


def count_switches(sig: SwitchingSignal, tau1: float, tau2: float) -> int:
    """Number of switch times in the open interval ``(tau1, tau2)``."""
    if not tau1 < tau2:
        raise ValueError("need tau1 < tau2")
    lo = bisect.bisect_right(sig._times, tau1)
    hi = bisect.bisect_left(sig._times, tau2)
    return max(0, hi - lo)


def shift(sig: SwitchingSignal, s: float) -> SwitchingSignal:
    """Translate so that ``shift(sig, s)(t) == sig(t + s)``."""
    if s == 0:
        return sig
    return SwitchingSignal(sig.t_begin - s, sig.t_end - s, sig.initial_mode,
                           tuple((t - s, m) for t, m in sig.switches))


# --------------------------------------------------------------------------
# signal classes


@dataclass(frozen=True)
class SetValuedMap:
    """Finite set-valued map ``H`` on the mode set."""

    successors: Mapping[int, frozenset[int]]

    def __post_init__(self):
        succ = {int(k): frozenset(int(v) for v in vs) for k, vs in self.successors.items()}
        dom = set(succ)
        for g, vs in succ.items():
            if not vs <= dom:
                raise ValueError(f"H({g}) = {sorted(vs)} not contained in domain {sorted(dom)}")
        object.__setattr__(self, "successors", succ)

    @property
    def domain(self) -> list[int]:
        return sorted(self.successors)

    def __call__(self, mode: int) -> frozenset[int]:
        return self.successors.get(mode, frozenset())

    def edges(self) -> list[tuple[int, int]]:
        return [(g, h) for g in self.domain for h in sorted(self.successors[g])]

    @classmethod
    def from_edges(cls, modes: Sequence[int], edges: Sequence[tuple[int, int]]) -> SetValuedMap:
        succ: dict[int, set[int]] = {int(m): set() for m in modes}
        for a, b in edges:
            succ[int(a)].add(int(b))
        return cls({k: frozenset(v) for k, v in succ.items()})

    def to_json(self) -> dict:
        return {str(g): sorted(self.successors[g]) for g in self.domain}

    @classmethod
    def from_json(cls, obj: Mapping) -> SetValuedMap:
        return cls({int(k): frozenset(int(v) for v in vs) for k, vs in obj.items()})


@dataclass(frozen=True)
class ADT:
    tau_d: float
    n0: int

    def __post_init__(self):
        if not self.tau_d > 0 or int(self.n0) < 1:
            raise ValueError("ADT needs tau_d > 0 and n0 >= 1")


@dataclass(frozen=True)
class Dwell:
    tau_d: float

    def __post_init__(self):
        if not self.tau_d > 0:
            raise ValueError("Dwell needs tau_d > 0")


@dataclass(frozen=True)
class Ergodic:
    T: float
    modes: tuple[int, ...]

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("Ergodic needs T > 0")
        object.__setattr__(self, "modes", tuple(sorted(set(int(m) for m in self.modes))))


@dataclass(frozen=True)
class Graph:
    H: SetValuedMap


@dataclass(frozen=True)
class Intersection:
    members: tuple

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))


SignalClassSpec = Union[ADT, Dwell, Ergodic, Graph, Intersection]


def flatten(spec: SignalClassSpec) -> list:
    """Leaf members of a (possibly nested) intersection."""
    if isinstance(spec, Intersection):
        out = []
        for m in spec.members:
            out.extend(flatten(m))
        return out
    return [spec]


def spec_name(spec: SignalClassSpec) -> str:
    if isinstance(spec, ADT):
        return f"ADT(tau_d={spec.tau_d:g}, n0={spec.n0})"
    if isinstance(spec, Dwell):
        return f"Dwell(tau_d={spec.tau_d:g})"
    if isinstance(spec, Ergodic):
        return f"Ergodic(T={spec.T:g}, modes={list(spec.modes)})"
    if isinstance(spec, Graph):
        return f"Graph({spec.H.to_json()})"
    return " & ".join(spec_name(m) for m in spec.members)


def spec_to_json(spec: SignalClassSpec) -> dict:
    if isinstance(spec, ADT):
        return {"class": "adt", "tau_d": spec.tau_d, "n0": spec.n0}
    if isinstance(spec, Dwell):
        return {"class": "dwell", "tau_d": spec.tau_d}
    if isinstance(spec, Ergodic):
        return {"class": "ergodic", "T": spec.T, "modes": list(spec.modes)}
    if isinstance(spec, Graph):
        return {"class": "graph", "H": spec.H.to_json()}
    return {"class": "intersection", "members": [spec_to_json(m) for m in spec.members]}


def spec_from_json(obj: Mapping) -> SignalClassSpec:
    kind = str(obj.get("class", "")).lower()
    if kind == "adt":
        return ADT(float(obj["tau_d"]), int(obj["n0"]))
    if kind == "dwell":
        return Dwell(float(obj["tau_d"]))
    if kind == "ergodic":
        return Ergodic(float(obj["T"]), tuple(obj["modes"]))
    if kind == "graph":
        return Graph(SetValuedMap.from_json(obj["H"]))
    if kind == "intersection":
        return Intersection(tuple(spec_from_json(m) for m in obj["members"]))
    raise ValueError(f"unknown signal class {obj.get('class')!r}")


# --------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    ok: bool
    spec: str
    reason: str = ""
    witness: object = None

    def to_json(self) -> dict:
        w = self.witness
        if isinstance(w, tuple):
            w = list(w)
        return {"ok": self.ok, "spec": self.spec, "reason": self.reason, "witness": w}


def _check_adt(sig: SignalClassSpec, tau_d: float, n0: int, name: str) -> ValidationReport:
    # Any open interval holds a consecutive block i..j of switches and is longer
    # than t_j - t_i; shrinking onto [t_i, t_j] makes the pairwise bound exact:
    #   (j - i + 1) <= n0 + (t_j - t_i) / tau_d   for all i <= j.
    t = sig.times
    if t.size == 0:
        return ValidationReport(True, name)
    d = np.arange(t.size) - t / tau_d
    # worst j >= i for each i via suffix maximum of d
    suffix_max = np.maximum.accumulate(d[::-1])[::-1]
    excess = suffix_max - d + 1 - n0
    i = int(np.argmax(excess))
    if excess[i] <= ADT_SLACK:
        return ValidationReport(True, name)
    j = i + int(np.argmax(d[i:]))
    count = j - i + 1
    bound = n0 + (t[j] - t[i]) / tau_d
    return ValidationReport(
        False, name,
        f"{count} switches in [{t[i]:.9g}, {t[j]:.9g}] exceed bound {bound:.9g}",
        (float(t[i]), float(t[j]), count, float(bound)),
    )


def _check_ergodic(sig: SwitchingSignal, spec: Ergodic, name: str) -> ValidationReport:
    if sig.t_end - sig.t_begin < spec.T:
        raise UndecidableError(
            f"horizon too short to decide: length {sig.t_end - sig.t_begin:g} < T={spec.T:g}")
    # Mode occupancy changes only at switches, so a window missing a mode can be
    # slid left to start at t_begin or at a switch time and still miss it.
    starts = [sig.t_begin] + [t for t in sig._times if t <= sig.t_end - spec.T]
    required = set(spec.modes)
    for a in starts:
        present = {sig(a)}
        lo = bisect.bisect_right(sig._times, a)
        hi = bisect.bisect_right(sig._times, a + spec.T)
        present.update(m for _, m in sig.switches[lo:hi])
        missing = required - present
        if missing:
            return ValidationReport(
                False, name, f"mode(s) {sorted(missing)} absent from [{a:.9g}, {a + spec.T:.9g}]",
                (a, a + spec.T, sorted(missing)))
    return ValidationReport(True, name)


def _check_graph(sig: SwitchingSignal, spec: Graph, name: str) -> ValidationReport:
    dom = set(spec.H.domain)
    if sig.initial_mode not in dom:
        return ValidationReport(False, name, f"initial mode {sig.initial_mode} not in domain of H",
                                (sig.initial_mode,))
    prev = sig.initial_mode
    for t, m in sig.switches:
        if m not in spec.H(prev):
            return ValidationReport(False, name, f"jump {prev}->{m} at t={t:.9g} not allowed by H",
                                    (prev, m))
        prev = m
    return ValidationReport(True, name)


def validate(sig: SwitchingSignal, spec: SignalClassSpec) -> ValidationReport:
    """Check ``sig`` against ``spec``; on failure the report carries the first violating witness."""
    name = spec_name(spec)
    if isinstance(spec, ADT):
        return _check_adt(sig, spec.tau_d, int(spec.n0), name)
    if isinstance(spec, Dwell):
        return _check_adt(sig, spec.tau_d, 1, name)
    if isinstance(spec, Ergodic):
        return _check_ergodic(sig, spec, name)
    if isinstance(spec, Graph):
        return _check_graph(sig, spec, name)
    if isinstance(spec, Intersection):
        for member in spec.members:
            rep = validate(sig, member)
            if not rep.ok:
                return ValidationReport(False, name, f"{rep.spec}: {rep.reason}", rep.witness)
        return ValidationReport(True, name)
    raise TypeError(f"not a signal class: {spec!r}")


# --------------------------------------------------------------------------
# generation


@dataclass
class _Constraints:
    min_gap: float = 0.0
    buckets: list[tuple[float, int]] = field(default_factory=list)
    graphs: list[SetValuedMap] = field(default_factory=list)
    ergodic: list[Ergodic] = field(default_factory=list)

    @classmethod
    def of(cls, spec: SignalClassSpec) -> _Constraints:
        c = cls()
        for m in flatten(spec):
            if isinstance(m, Dwell):
                c.min_gap = max(c.min_gap, m.tau_d)
            elif isinstance(m, ADT):
                c.buckets.append((m.tau_d, int(m.n0)))
            elif isinstance(m, Graph):
                c.graphs.append(m.H)
            elif isinstance(m, Ergodic):
                c.ergodic.append(m)
        return c

    def successors(self, mode: int, modes: Sequence[int]) -> list[int]:
        allowed = set(modes)
        for H in self.graphs:
            allowed &= H(mode)
        allowed.discard(mode)
        return sorted(allowed)


def _pick(rng: np.random.Generator, options: Sequence[int], weights: Mapping[int, float] | None) -> int:
    if len(options) == 1:
        return options[0]
    if weights:
        w = np.array([float(weights.get(m, 0.0)) for m in options])
        if w.sum() > 0:
            return options[int(rng.choice(len(options), p=w / w.sum()))]
    return options[int(rng.integers(len(options)))]


def _default_modes(c: _Constraints) -> list[int]:
    if c.ergodic:
        return sorted(set().union(*(e.modes for e in c.ergodic)))
    if c.graphs:
        dom = set(c.graphs[0].domain)
        for H in c.graphs[1:]:
            dom &= set(H.domain)
        return sorted(dom)
    return [1, 2]


def _shortest_path(rng, c: _Constraints, modes, a: int, b: int) -> list[int]:
    # BFS with randomized neighbour order; path a -> ... -> b using legal jumps.
    prev = {a: None}
    queue = deque([a])
    while queue:
        u = queue.popleft()
        if u == b and u != a:
            break
        nbrs = c.successors(u, modes)
        for v in rng.permutation(nbrs).tolist() if nbrs else []:
            if v not in prev:
                prev[v] = u
                queue.append(v)
    if b not in prev:
        raise InfeasibleSpecError(f"mode {b} not reachable from {a} under the graph constraint")
    path = [b]
    while path[-1] != a:
        path.append(prev[path[-1]])
    return path[::-1]


def _ergodic_walk(rng, c: _Constraints, required, allowed, initial_mode) -> list[int]:
    order = rng.permutation(required).tolist()
    if initial_mode is not None:
        if initial_mode not in order:
            raise InfeasibleSpecError(f"initial mode {initial_mode} is not an ergodic mode")
        k = order.index(initial_mode)
        order = order[k:] + order[:k]
    if len(order) == 1:
        return order
    walk = [order[0]]
    for a, b in zip(order, order[1:] + order[:1]):
        walk.extend(_shortest_path(rng, c, allowed, a, b)[1:])
    return walk[:-1]


def _max_absence(walk: list[int], required: Sequence[int]) -> int:
    """Largest cyclic run of walk entries different from some required mode."""
    L = len(walk)
    worst = 0
    for g in required:
        pos = [i for i, m in enumerate(walk) if m == g]
        for p, q in zip(pos, pos[1:] + [pos[0] + L]):
            worst = max(worst, q - p - 1)
    return worst


def _generate_ergodic(c, t0, t1, rng, modes, initial_mode) -> list[tuple[float, int]]:
    T = min(e.T for e in c.ergodic)
    required = sorted(set().union(*(e.modes for e in c.ergodic)))
    if t1 - t0 < T:
        raise InfeasibleSpecError(f"horizon too short to decide: length {t1 - t0:g} < T={T:g}")
    allowed = sorted(set(modes) | set(required))
    walk = _ergodic_walk(rng, c, required, allowed, initial_mode)
    if not set(required) <= set(walk):
        raise InfeasibleSpecError("closed walk does not cover every required mode")
    if len(walk) == 1:
        return [(t0, walk[0])]
    k = _max_absence(walk, required)
    d_min = max([c.min_gap] + [tau for tau, _ in c.buckets])
    d_max = T / k if k else math.inf
    if d_min > d_max:
        raise InfeasibleSpecError(
            f"ergodic window T={T:g} cannot fit {k} segments of at least {d_min:g}")
    if d_min == 0.0:
        d_min = 0.25 * d_max
    segs = []
    t, i = t0, 0
    while t < t1:
        segs.append((t, walk[i % len(walk)]))
        t = t + rng.uniform(d_min, d_max)
        i += 1
    return segs


def _generate_timed(c, t0, t1, rng, modes, weights, initial_mode, mean_gap) -> list[tuple[float, int]]:
    mode = initial_mode if initial_mode is not None else _pick(rng, list(modes), weights)
    segs = [(t0, mode)]
    taus = [c.min_gap] + [tau for tau, _ in c.buckets]
    positive = [x for x in taus if x > 0]
    scale = 0.5 * min(positive) if positive else (mean_gap or (t1 - t0) / 10.0)
    credits = [float(n0) for _, n0 in c.buckets]
    t, last = t0, -math.inf
    while True:
        cand = t + rng.exponential(scale)
        if c.min_gap > 0:
            cand = max(cand, last + c.min_gap)
        if cand >= t1:
            break
        if cand <= t:
            continue
        for b, (tau, n0) in enumerate(c.buckets):
            credits[b] = min(float(n0), credits[b] + (cand - t) / tau)
        t = cand
        if any(cr < 1.0 for cr in credits):
            continue
        nxt = c.successors(mode, modes)
        if not nxt:
            break
        credits = [cr - 1.0 for cr in credits]
        mode = _pick(rng, nxt, weights)
        segs.append((t, mode))
        last = t
    return segs


def generate(spec: SignalClassSpec, horizon: tuple[float, float], seed: int,
             mode_weights: Mapping[int, float] | None = None, *,
             modes: Sequence[int] | None = None, initial_mode: int | None = None,
             mean_gap: float | None = None) -> SwitchingSignal:
    """Draw a signal of class ``spec`` on ``horizon``; deterministic per ``seed``.

    ADT members are enforced with a token bucket (credits refill at ``1/tau_d``
    up to ``n0``, each switch spends one), dwell members with a minimum gap,
    graph members by walking ``H``.  With an ergodic member the modes are
    visited round-robin along a closed walk whose segment lengths are drawn
    inside the slack left by ``T``.

    Raises:
        InfeasibleSpecError: the class is empty on this horizon, or (defensive)
            the drawn signal fails validation.
    """
    t0, t1 = map(float, horizon)
    if not t1 > t0:
        raise ValueError("horizon must satisfy t0 < t1")
    rng = np.random.default_rng(seed)
    c = _Constraints.of(spec)
    modes = sorted(int(m) for m in (modes if modes is not None else
                                    (mode_weights.keys() if mode_weights else _default_modes(c))))
    if not modes:
        raise InfeasibleSpecError("empty mode set")
    if initial_mode is not None and initial_mode not in modes:
        raise InfeasibleSpecError(f"initial mode {initial_mode} not among modes {modes}")
    if c.ergodic:
        segs = _generate_ergodic(c, t0, t1, rng, modes, initial_mode)
    else:
        segs = _generate_timed(c, t0, t1, rng, modes, mode_weights, initial_mode, mean_gap)
    sig = SwitchingSignal(t0, t1, segs[0][1], tuple(segs[1:]))
    rep = validate(sig, spec)
    if not rep.ok:
        raise InfeasibleSpecError(f"generated signal violates {rep.spec}: {rep.reason}")
    return sig
