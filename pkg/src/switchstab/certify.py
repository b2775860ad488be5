"""Hypothesis checks for the convergence and stability theorems, with three-valued verdicts.

Linear-algebra facts are decided exactly ("holds"/"fails"); statements about
zero-output sets or whole trajectory families are probed by sampling and
simulation and can at best be "evidence".
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .errors import Blowup, ConfigError, DomainViolation, InfeasibleSpecError
from .integrator import Trajectory, simulate
from .jsonio import SCHEMA
from .limit_sets import weakly_meagre_estimate
from .lyapunov import (
    LyapunovPair,
    check_decrease_inequality,
    check_envelopes,
    check_zero_set_definite,
    monitor_v,
    quadratic_pair,
)
from .observability import (
    Subspace,
    default_tau_max,
    intersect,
    kernel,
    unobservable_subspace,
    zero_output_membership,
)
from .signals import (
    ADT,
    Dwell,
    Ergodic,
    Graph,
    Intersection,
    SetValuedMap,
    SignalClassSpec,
    SwitchingSignal,
    flatten,
    generate,
    spec_name,
    validate,
)
from .system import Domain, Mode, SwitchedSystem

EIG_TOL = 1e-10

THEOREMS = ("convergence0", "ergodicconv", "convergence1", "convergence2",
            "guas1", "guas2", "guas2bis", "corollary_final", "meagre_output")

# which signal-class ingredients each result is stated for
_CLASS_NEEDS = {
    "convergence0": ("adt",),
    "convergence1": ("adt",),
    "guas1": ("adt",),
    "ergodicconv": ("ergodic", "dwell"),
    "guas2bis": ("ergodic", "dwell"),
    "corollary_final": ("ergodic", "dwell"),
    "convergence2": ("graph", "dwell"),
    "guas2": ("graph", "dwell"),
}

# global monotonicity of v ("weak") or only per active mode ("f-weak")
_DEFAULT_PAIR_KIND = {
    "convergence0": "weak",
    "convergence1": "weak",
    "guas1": "weak",
    "ergodicconv": "f-weak",
    "guas2bis": "f-weak",
    "convergence2": "f-weak",
    "guas2": "f-weak",
}


class Status(str, Enum):
    HOLDS = "holds"
    EVIDENCE = "evidence"
    FAILS = "fails"


class Verdict(str, Enum):
    CERTIFIED = "Certified"
    SUPPORTED = "SupportedByEvidence"
    REFUTED = "Refuted"


_RANK = {Verdict.REFUTED: 0, Verdict.SUPPORTED: 1, Verdict.CERTIFIED: 2}


def verdict_rank(v: Verdict) -> int:
    return _RANK[v]


@dataclass
class HypothesisResult:
    name: str
    status: Status
    analytic: bool
    detail: str = ""
    margin: float | None = None
    witness: Any = None

    def to_json(self) -> dict:
        w = self.witness
        if isinstance(w, np.ndarray):
            w = w.tolist()
        return {"name": self.name, "status": self.status.value, "analytic": self.analytic,
                "detail": self.detail, "margin": self.margin, "witness": w}


def _holds(name, detail="", margin=None):
    return HypothesisResult(name, Status.HOLDS, True, detail, margin)


def _evidence(name, detail="", margin=None):
    return HypothesisResult(name, Status.EVIDENCE, False, detail, margin)


def _fails(name, witness, detail="", analytic=False, margin=None):
    return HypothesisResult(name, Status.FAILS, analytic, detail, margin, witness)


@dataclass
class PredictedLimit:
    """Target set of a convergence conclusion: a union of subspaces, sampled points, or a zero set."""

    description: str
    subspaces: list[Subspace] = field(default_factory=list)
    points: np.ndarray | None = None
    zero_of: Callable[[np.ndarray], float] | None = None

    @classmethod
    def origin(cls, n: int) -> PredictedLimit:
        return cls("origin", subspaces=[Subspace.zero(n)])

    def distance(self, x) -> float:
        x = np.asarray(x, dtype=float)
        best = math.inf
        for s in self.subspaces:
            best = min(best, s.distance(x))
        if self.points is not None and len(self.points):
            best = min(best, float(np.min(np.linalg.norm(self.points - x, axis=1))))
        if self.zero_of is not None:
            best = min(best, _distance_to_zero_set(self.zero_of, x))
        return best

    def to_json(self) -> dict:
        out: dict = {"description": self.description}
        if self.subspaces:
            out["subspaces"] = [s.to_json() for s in self.subspaces]
        if self.points is not None:
            out["points"] = self.points.tolist()
        if self.zero_of is not None:
            out["zero_set"] = "output"
        return out


def _distance_to_zero_set(h, x: np.ndarray) -> float:
    if abs(float(h(x))) == 0.0:
        return 0.0
    res = minimize(lambda y: float(np.sum((y - x) ** 2)), x, method="SLSQP",
                   constraints=[{"type": "eq", "fun": lambda y: float(h(y))}])
    if not res.success or abs(float(h(res.x))) > 1e-8:
        return math.inf
    return float(np.linalg.norm(res.x - x))


@dataclass
class CertificateReport:
    theorem: str
    hypotheses: list[HypothesisResult]
    predicted_limit: PredictedLimit | None = None
    stability_if_valid: str | None = None
    class_spec: str = ""
    conclusion: dict | None = None

    @property
    def verdict(self) -> Verdict:
        if any(h.status is Status.FAILS for h in self.hypotheses):
            return Verdict.REFUTED
        if all(h.status is Status.HOLDS and h.analytic for h in self.hypotheses):
            return Verdict.CERTIFIED
        return Verdict.SUPPORTED

    @property
    def stability(self) -> str | None:
        return None if self.verdict is Verdict.REFUTED else self.stability_if_valid

    def hypothesis(self, name: str) -> HypothesisResult:
        for h in self.hypotheses:
            if h.name == name:
                return h
        raise KeyError(name)

    def failures(self) -> list[HypothesisResult]:
        return [h for h in self.hypotheses if h.status is Status.FAILS]

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "kind": "certificate",
            "theorem": self.theorem,
            "class": self.class_spec,
            "verdict": self.verdict.value,
            "stability": self.stability,
            "hypotheses": [h.to_json() for h in self.hypotheses],
            "predicted_limit": None if self.predicted_limit is None else self.predicted_limit.to_json(),
            "conclusion": self.conclusion,
        }


# --------------------------------------------------------------------------
# graph cycles


def simple_cycles(H: SetValuedMap) -> list[tuple[int, ...]]:
    """Every closed legal mode sequence with distinct interior modes and at least one jump out and back.

    Each cycle starts (and ends) at its smallest mode; the list is ordered by
    length, then lexicographically.
    """
    nodes = sorted(set(H.domain) | {v for vs in H.successors.values() for v in vs})
    succ = {u: sorted(H(u)) if u in H.successors else [] for u in nodes}
    found: list[tuple[int, ...]] = []
    for start in nodes:
        path = [start]
        on_path = {start}

        def extend(u: int):
            for w in succ[u]:
                if w == start and len(path) >= 2:
                    found.append(tuple(path) + (start,))
                elif w > start and w not in on_path:
                    path.append(w)
                    on_path.add(w)
                    extend(w)
                    path.pop()
                    on_path.discard(w)

        extend(start)
    return sorted(found, key=lambda c: (len(c), c))


# --------------------------------------------------------------------------
# options and class bookkeeping


@dataclass
class CertifyOptions:
    seed: int = 0
    n_samples: int = 256
    n_seeds: int = 48
    limit_samples: int = 100
    zero_tol: float = 1e-8
    membership_tol: float = 1e-7
    tau_short: float = 1.0
    tau_max: float | None = None
    membership_step: float = 5e-3
    origin_radius: float = 1e-2
    eq_tol: float = 1e-4
    n_trials: int = 8
    horizon: float = 20.0
    sim_step: float = 5e-3
    ball_radius: float = 1.0
    pair_kind: str | None = None
    unique_solutions: bool | None = None
    observed_signals: Sequence[SwitchingSignal] = ()
    analytic_linear: bool = False

    def __post_init__(self):
        for name in ("zero_tol", "membership_tol", "tau_short", "membership_step", "origin_radius",
                     "eq_tol", "horizon", "sim_step", "ball_radius"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"options.{name} must be positive")
        if self.pair_kind not in (None, "weak", "f-weak"):
            raise ConfigError("options.pair_kind must be 'weak' or 'f-weak'")


def _ingredients(spec: SignalClassSpec) -> set[str]:
    have = set()
    for m in flatten(spec):
        if isinstance(m, Dwell):
            have |= {"dwell", "adt"}
        elif isinstance(m, ADT):
            have.add("adt")
            if int(m.n0) == 1:
                have.add("dwell")
        elif isinstance(m, Ergodic):
            have.add("ergodic")
        elif isinstance(m, Graph):
            have.add("graph")
    return have


def require_class(theorem: str, spec: SignalClassSpec):
    """Raise ConfigError unless ``spec`` lies inside the class the result is stated for."""
    if theorem not in THEOREMS:
        raise ConfigError(f"unknown theorem {theorem!r}; known: {list(THEOREMS)}")
    needs = _CLASS_NEEDS.get(theorem)
    if needs is None:
        return
    missing = [n for n in needs if n not in _ingredients(spec)]
    if missing:
        raise ConfigError(f"{theorem} needs a signal class with {' and '.join(needs)} constraints; "
                          f"{spec_name(spec)} lacks {', '.join(missing)}")


def _graph_of(spec: SignalClassSpec) -> SetValuedMap:
    graphs = [m.H for m in flatten(spec) if isinstance(m, Graph)]
    H = graphs[0]
    for other in graphs[1:]:
        H = SetValuedMap({g: H(g) & other(g) for g in H.domain if g in other.successors})
    return H


# --------------------------------------------------------------------------
# zero-output sets


def _restricted_mode(sys: SwitchedSystem, pair: LyapunovPair, g: int) -> Mode:
    """Mode g with its domain cut down to chi_g intersected with O_g."""
    mode = sys.modes[g]
    a, b = mode.domain, pair.parts[g].domain
    if b.is_everything:
        return mode
    if a.is_everything:
        dom = b
    else:
        dom = Domain(np.maximum(a.lo, b.lo), np.minimum(a.hi, b.hi),
                     predicate=lambda x, a=a, b=b: a.contains(x) and b.contains(x))
    return Mode(g, mode.field, dom, mode.linear, mode.name)


def _halton(lo, hi, n, seed) -> np.ndarray:
    u = qmc.Halton(d=lo.size, scramble=True, seed=seed).random(n)
    return lo + u * (hi - lo)


class _ZeroSets:
    """Sampling-based access to O^f_g(f_g, W_g) and O^b_g(f_g, W_g), with caching."""

    def __init__(self, sys: SwitchedSystem, pair: LyapunovPair, opts: CertifyOptions):
        self.sys, self.pair, self.opts = sys, pair, opts
        self.modes = {g: _restricted_mode(sys, pair, g) for g in sys.mode_ids}
        self._member_cache: dict = {}

    def tau_inf(self, g: int) -> float:
        return self.opts.tau_max if self.opts.tau_max is not None else default_tau_max(self.sys.modes[g])

    def inside(self, x, gs) -> bool:
        return all(self.modes[g].domain.contains(x) for g in gs)

    def box(self, gs):
        lo = np.max([self.modes[g].domain.lo for g in gs], axis=0)
        hi = np.min([self.modes[g].domain.hi for g in gs], axis=0)
        return lo, hi

    def seeds(self, objective, gs, n, salt) -> np.ndarray:
        """Minimise ``objective`` from quasi-random starts; keep near-zero minima inside every domain."""
        lo, hi = self.box(gs)
        if np.any(lo > hi):
            return np.empty((0, lo.size))
        out = []
        for x0 in _halton(lo, hi, n, self.opts.seed + salt):
            if objective(x0) > self.opts.zero_tol:
                res = minimize(objective, x0, method="BFGS", options={"gtol": 1e-10, "maxiter": 200})
                x0 = res.x
            if (objective(x0) <= self.opts.zero_tol and np.all(x0 >= lo - 1e-9) and np.all(x0 <= hi + 1e-9)
                    and self.inside(x0, gs)):
                out.append(x0)
        if not out:
            return np.empty((0, lo.size))
        pts = np.array(out)
        keep = []
        for i, p in enumerate(pts):
            if all(np.linalg.norm(p - pts[j]) > 1e-3 for j in keep):
                keep.append(i)
        return pts[keep]

    def zero_candidates(self, gs, n=None) -> np.ndarray:
        gs = tuple(gs)
        obj = lambda x: sum(max(0.0, self.pair.W(x, g)) for g in gs)
        return self.seeds(obj, gs, n or self.opts.n_seeds, salt=17 * sum(gs) + len(gs))

    def nonzero(self, pts: np.ndarray) -> np.ndarray:
        if not len(pts):
            return pts
        return pts[np.linalg.norm(pts, axis=1) > self.opts.origin_radius]

    def member(self, g: int, x, direction: str, tau: float) -> bool:
        key = (g, direction, tau, tuple(np.round(x, 12)))
        hit = self._member_cache.get(key)
        if hit is None:
            h = lambda y, g=g: self.pair.W(y, g)
            hit = bool(zero_output_membership(self.modes[g], h, x, tau, direction,
                                              self.opts.membership_tol, self.opts.membership_step))
            self._member_cache[key] = hit
        return hit


def _linear_quadratic(sys: SwitchedSystem, pair: LyapunovPair) -> bool:
    return (sys.is_linear and pair.is_quadratic and pair.covers_everything
            and all(sys.modes[g].domain.is_everything for g in sys.mode_ids))


class _Checks:
    """Hypothesis builders shared by the theorem entry points."""

    def __init__(self, sys, pair, spec, opts: CertifyOptions, analytic: bool):
        self.sys, self.pair, self.spec, self.opts = sys, pair, spec, opts
        self.analytic = analytic
        self.z = _ZeroSets(sys, pair, opts)
        self.U = ({g: unobservable_subspace(pair.C[g], sys.matrix(g)) for g in sys.mode_ids}
                  if _linear_quadratic(sys, pair) else None)
        self._cross: dict = {}

    # ---- pair and family hypotheses

    def observed(self) -> list[HypothesisResult]:
        if not self.opts.observed_signals:
            return []
        for i, sig in enumerate(self.opts.observed_signals):
            rep = validate(sig, self.spec)
            if not rep.ok:
                return [_fails("observed_signals_in_class", {"signal": i, "reason": rep.reason},
                               f"observed signal {i} is outside {rep.spec}", analytic=True)]
        return [_holds("observed_signals_in_class", f"{len(self.opts.observed_signals)} signals validated")]

    def decrease(self) -> HypothesisResult:
        name = "decrease_inequality"
        if self.analytic:
            worst = -math.inf
            for g in self.sys.mode_ids:
                A, P, C = self.sys.matrix(g), self.pair.P[g], self.pair.C[g]
                lam, vec = np.linalg.eigh(P @ A + A.T @ P + C.T @ C)
                worst = max(worst, float(lam[-1]))
                if lam[-1] > EIG_TOL:
                    return _fails(name, vec[:, -1], f"mode {g}: largest eigenvalue {lam[-1]:.3g} > 0",
                                  analytic=True, margin=-float(lam[-1]))
            return _holds(name, "matrix inequality holds in every mode", margin=-worst)
        rep = check_decrease_inequality(self.sys, self.pair, self.opts.n_samples, self.opts.seed)
        if rep.ok:
            return _evidence(name, f"{rep.n_points} sampled points", rep.worst_margin)
        return _fails(name, rep.witness, f"violated in mode {rep.witness_mode}", margin=rep.worst_margin)

    def envelopes(self) -> HypothesisResult:
        name = "class_K_envelopes"
        if self.pair.alpha1 is None or self.pair.alpha2 is None:
            return _fails(name, None, "no class-K envelopes supplied", analytic=True)
        if self.analytic:
            return _holds(name, "extreme eigenvalues of P bound V")
        rep = check_envelopes(self.sys, self.pair, self.opts.n_samples, self.opts.seed)
        if rep.ok:
            return _evidence(name, f"{rep.n_points} sampled points", rep.worst_margin)
        return _fails(name, rep.witness, f"envelope violated in mode {rep.witness_mode}", margin=rep.worst_margin)

    def origin_in_region(self) -> HypothesisResult:
        zero = np.zeros(self.sys.dimension)
        if any(self.pair.contains(zero, g) for g in self.pair.mode_ids):
            return _holds("origin_in_O")
        return _fails("origin_in_O", zero.tolist(), "no mode region contains the origin", analytic=True)

    def equilibrium(self) -> HypothesisResult:
        zero = np.zeros(self.sys.dimension)
        for g in self.sys.mode_ids:
            if self.sys.modes[g].domain.contains(zero) and not self.sys.is_equilibrium(g, zero):
                return _fails("origin_equilibrium", g, f"f_{g}(0) != 0", analytic=True)
        return _holds("origin_equilibrium", "f_g(0) = 0 for every mode whose domain holds 0")

    def uniqueness(self) -> HypothesisResult:
        name = "unique_zero_solution"
        if self.sys.is_linear:
            return _holds(name, "linear fields are globally Lipschitz")
        flag = self.opts.unique_solutions if self.opts.unique_solutions is not None else self.sys.unique_solutions
        if flag:
            return _evidence(name, "asserted by the user")
        rep = check_zero_set_definite(self.sys, self.pair, self.opts.n_samples, self.opts.seed)
        if rep.ok:
            return _evidence(name, "replaced by sampled positive definiteness of V_g", rep.worst_margin)
        return _fails(name, rep.witness, f"V_{rep.witness_mode} vanishes away from the origin",
                      margin=rep.worst_margin)

    def monotone(self, per_mode: bool) -> HypothesisResult:
        name = "v_nonincreasing_per_mode" if per_mode else "v_nonincreasing"
        if self.analytic and _common_P(self.pair):
            return _holds(name, "common P: jumps keep v, flows decrease it")
        signals = list(self.opts.observed_signals)
        ss = np.random.SeedSequence(self.opts.seed)
        children = ss.spawn(self.opts.n_trials)
        for child in children:
            try:
                signals.append(generate(self.spec, (0.0, self.opts.horizon), int(child.generate_state(1)[0]),
                                        modes=_class_modes(self.spec, self.sys)))
            except InfeasibleSpecError as exc:
                return _fails(name, None, f"cannot draw signals of the class: {exc}")
        rng = np.random.default_rng(ss.generate_state(1)[0])
        used = 0
        worst = -math.inf
        for i, sig in enumerate(signals):
            x0 = _ball_point(rng, self.sys, self.pair, sig, self.opts.ball_radius)
            if x0 is None:
                continue
            try:
                traj = simulate(self.sys, sig, x0, step=self.opts.sim_step)
                rep = monitor_v(traj, self.pair, mode_restricted=per_mode)
            except (DomainViolation, Blowup):
                continue
            used += 1
            worst = max(worst, rep.worst_excess)
            if not rep.ok:
                return _fails(name, {"trial": i, "t": rep.first_violation_time, "x0": x0.tolist()},
                              "v rose above its running minimum", margin=rep.worst_excess)
        if used == 0:
            return _fails(name, None, "no simulated trajectory stayed inside the mode regions")
        return _evidence(name, f"{used} simulated trajectories", worst)

    # ---- zero-output-set inclusions

    def only_origin_both_ways(self, g: int) -> HypothesisResult:
        """O^f_g(inf) and O^b_g(inf) meet only at the origin."""
        name = f"forward_backward_inf_trivial[{g}]"
        if self.analytic:
            U = self.U[g]
            if U.dim:
                return _fails(name, U.basis[:, 0], "unobservable subspace is nontrivial", analytic=True)
            return _holds(name, "(C, A) observable")
        tau = self.z.tau_inf(g)
        for x in self.z.nonzero(self.z.zero_candidates([g])):
            if self.z.member(g, x, "forward", tau) and self.z.member(g, x, "backward", tau):
                return _fails(name, x, f"W_{g} stays zero forward and backward for {tau:g} s")
        return _evidence(name, f"no nonzero candidate kept W_{g} = 0 both ways for {tau:g} s")

    def cross(self, g: int, g2: int) -> HypothesisResult:
        """O^b_g and O^f_g2 meet only at the origin."""
        key = (g, g2)
        if key in self._cross:
            return self._cross[key]
        name = f"backward_forward_trivial[{g},{g2}]"
        if self.analytic:
            S = intersect([self.U[g], self.U[g2]])
            res = (_fails(name, S.basis[:, 0], "unobservable subspaces intersect", analytic=True)
                   if S.dim else _holds(name, "unobservable subspaces meet at 0"))
        else:
            tau = self.opts.tau_short
            res = _evidence(name, "no nonzero joint zero-output candidate")
            for x in self.z.nonzero(self.z.zero_candidates([g, g2])):
                if self.z.member(g, x, "backward", tau) and self.z.member(g2, x, "forward", tau):
                    res = _fails(name, x, f"W_{g} zero backward and W_{g2} zero forward for {tau:g} s")
                    break
        self._cross[key] = res
        return res

    def all_one_direction_trivial(self) -> HypothesisResult:
        """Every O^f_g(inf) is {0}, or every O^b_g(inf) is {0}."""
        name = "forward_or_backward_inf_trivial"
        if self.analytic:
            bad = [g for g in self.sys.mode_ids if self.U[g].dim]
            if bad:
                return _fails(name, self.U[bad[0]].basis[:, 0],
                              f"unobservable subspace of mode {bad[0]} is nontrivial", analytic=True)
            return _holds(name, "every (C, A) observable")
        witnesses = {}
        for direction in ("forward", "backward"):
            for g in self.sys.mode_ids:
                tau = self.z.tau_inf(g)
                hit = next((x for x in self.z.nonzero(self.z.zero_candidates([g]))
                            if self.z.member(g, x, direction, tau)), None)
                if hit is not None:
                    witnesses[direction] = {"mode": g, "x": hit.tolist()}
                    break
            if direction not in witnesses:
                return _evidence(name, f"no nonzero {direction} zero-output candidate in any mode")
        return _fails(name, witnesses, "nontrivial zero-output states in both directions")

    def cycles(self, H: SetValuedMap) -> HypothesisResult:
        name = "cycle_condition"
        cyc = simple_cycles(H)
        if not cyc:
            return _holds(name, "H has no simple cycles")
        sampled = False
        for c in cyc:
            good = None
            for j in range(len(c) - 1):
                r = self.cross(c[j], c[j + 1])
                if r.status is not Status.FAILS:
                    good = r
                    break
            if good is None:
                return _fails(name, list(c), f"no position of cycle {c} separates backward from forward",
                              analytic=self.analytic)
            sampled |= good.status is Status.EVIDENCE
        detail = f"{len(cyc)} simple cycles checked"
        return _evidence(name, detail) if sampled else _holds(name, detail)

    def equilibria_match(self, g: int) -> HypothesisResult:
        """O^b_g or O^f_g consists only of equilibria (the reverse inclusion is automatic)."""
        name = f"zero_output_equals_equilibria[{g}]"
        if self.analytic:
            U, K = self.U[g], kernel(self.sys.matrix(g))
            if U.equals(K):
                return _holds(name, "unobservable subspace equals ker A")
            extra = intersect([U, K.complement()])
            w = extra.basis[:, 0] if extra.dim else U.basis[:, 0]
            return _fails(name, w, "unobservable subspace differs from ker A", analytic=True)
        tau = self.opts.tau_short
        moving = [x for x in self.z.zero_candidates([g])
                  if np.linalg.norm(self.sys.modes[g].field(x)) > self.opts.eq_tol]
        found = {}
        for direction in ("forward", "backward"):
            hit = next((x for x in moving if self.z.member(g, x, direction, tau)), None)
            if hit is None:
                return _evidence(name, f"{direction} zero-output candidates are all equilibria")
            found[direction] = hit.tolist()
        return _fails(name, found, f"non-equilibrium states keep W_{g} = 0 in both directions")

    def equilibria_meet_at_origin(self) -> HypothesisResult:
        name = "common_equilibria_trivial"
        gs = self.sys.mode_ids
        if self.analytic:
            S = intersect([kernel(self.sys.matrix(g)) for g in gs])
            if S.dim:
                return _fails(name, S.basis.T.tolist(), "kernels share a nonzero direction", analytic=True)
            return _holds(name, "kernels meet at 0")
        obj = lambda x: sum(float(np.sum(np.asarray(self.sys.modes[g].field(x)) ** 2)) for g in gs)
        pts = self.z.nonzero(self.z.seeds(obj, gs, self.opts.n_seeds, salt=101))
        if len(pts):
            return _fails(name, pts[0], "common nonzero equilibrium")
        return _evidence(name, "no common nonzero equilibrium found")

    # ---- predicted limits

    def union_limit(self) -> PredictedLimit:
        gs = self.sys.mode_ids
        desc = "union over mode pairs of forward and backward zero-output sets"
        if self.U is not None:
            subs = []
            for g in gs:
                for g2 in gs:
                    S = intersect([self.U[g], self.U[g2]])
                    if not any(S.equals(t) for t in subs):
                        subs.append(S)
            return PredictedLimit(desc, subspaces=subs)
        pts = []
        tau = self.opts.tau_short
        for g in gs:
            for g2 in gs:
                for x in self.z.zero_candidates(sorted({g, g2}), self.opts.limit_samples):
                    if self.z.member(g, x, "forward", tau) and self.z.member(g2, x, "backward", tau):
                        pts.append(x)
        return PredictedLimit(desc, points=np.array(pts).reshape(-1, self.sys.dimension))

    def common_equilibria_limit(self) -> PredictedLimit:
        gs = self.sys.mode_ids
        desc = "common equilibria of all modes"
        if self.sys.is_linear and all(self.sys.modes[g].domain.is_everything for g in gs):
            return PredictedLimit(desc, subspaces=[intersect([kernel(self.sys.matrix(g)) for g in gs])])
        obj = lambda x: sum(float(np.sum(np.asarray(self.sys.modes[g].field(x)) ** 2)) for g in gs)
        return PredictedLimit(desc, points=self.z.seeds(obj, gs, self.opts.limit_samples, salt=103))


def _common_P(pair: LyapunovPair) -> bool:
    Ps = [pair.P[g] for g in pair.mode_ids]
    return all(np.array_equal(Ps[0], P) for P in Ps[1:])


def _class_modes(spec: SignalClassSpec, sys: SwitchedSystem) -> list[int] | None:
    # ergodic and graph members fix their own mode sets
    if any(isinstance(m, (Ergodic, Graph)) for m in flatten(spec)):
        return None
    return sys.mode_ids


def _ball_point(rng, sys, pair, sig, radius, tries: int = 200):
    g = sig(sig.t_begin)
    n = sys.dimension
    for _ in range(tries):
        d = rng.normal(size=n)
        x = d / np.linalg.norm(d) * radius * rng.uniform() ** (1.0 / n)
        if sys.modes[g].domain.contains(x) and (pair is None or pair.contains(x, g)):
            return x
    return None


def _stability_label(pair: LyapunovPair) -> str:
    return "GAS" if pair.covers_everything and pair.radially_unbounded else "LAS"


# --------------------------------------------------------------------------
# entry points


def check_convergence(sys: SwitchedSystem, pair: LyapunovPair, class_spec: SignalClassSpec,
                      theorem: str, options: CertifyOptions | None = None) -> CertificateReport:
    """Evaluate the hypotheses of ``theorem`` for (sys, pair) under signals of ``class_spec``.

    Raises ConfigError when the class does not match the theorem, or when the
    pair and the system disagree on the mode set.
    """
    opts = options or CertifyOptions()
    require_class(theorem, class_spec)
    if theorem in ("corollary_final", "meagre_output"):
        raise ConfigError(f"{theorem} has its own entry point")
    if sorted(pair.mode_ids) != sys.mode_ids:
        raise ConfigError(f"pair modes {pair.mode_ids} differ from system modes {sys.mode_ids}")
    analytic = opts.analytic_linear and _linear_quadratic(sys, pair)
    per_mode = (opts.pair_kind or _DEFAULT_PAIR_KIND[theorem]) == "f-weak"
    ck = _Checks(sys, pair, class_spec, opts, analytic)
    gs = sys.mode_ids
    n = sys.dimension

    hyps = ck.observed() + [ck.decrease(), ck.monotone(per_mode)]
    limit = PredictedLimit.origin(n)
    stability = None
    if theorem == "convergence0":
        limit = ck.union_limit()
    elif theorem == "ergodicconv":
        hyps += [ck.equilibria_match(g) for g in gs]
        limit = ck.common_equilibria_limit()
    elif theorem == "convergence1":
        hyps += [ck.equilibrium(), ck.uniqueness(), ck.origin_in_region()]
        hyps += [ck.only_origin_both_ways(g) for g in gs]
        hyps += [ck.cross(g, g2) for g in gs for g2 in gs if g != g2]
    elif theorem == "convergence2":
        hyps += [ck.equilibrium(), ck.uniqueness(), ck.origin_in_region(),
                 ck.all_one_direction_trivial(), ck.cycles(_graph_of(class_spec))]
    elif theorem == "guas1":
        hyps += [ck.equilibrium(), ck.envelopes(), ck.origin_in_region()]
        hyps += [ck.only_origin_both_ways(g) for g in gs]
        hyps += [ck.cross(g, g2) for g in gs for g2 in gs if g != g2]
        stability = _stability_label(pair)
    elif theorem == "guas2":
        hyps += [ck.equilibrium(), ck.envelopes(), ck.origin_in_region(),
                 ck.all_one_direction_trivial(), ck.cycles(_graph_of(class_spec))]
        stability = _stability_label(pair)
    elif theorem == "guas2bis":
        hyps += [ck.envelopes(), ck.origin_in_region()]
        hyps += [ck.equilibria_match(g) for g in gs]
        hyps.append(ck.equilibria_meet_at_origin())
        stability = _stability_label(pair)
    return CertificateReport(theorem, hyps, limit, stability, spec_name(class_spec))


def check_corollary_final(A_list: Sequence, P_list: Sequence, C_list: Sequence,
                          common_P_assumed: bool = False, *, ids: Sequence[int] | None = None,
                          n_trials: int = 8, horizon: float = 10.0, step: float = 1e-3, seed: int = 0,
                          dwell: float = 0.5, ergodic_T: float = 1.0,
                          observed_signals: Sequence[SwitchingSignal] = ()) -> CertificateReport:
    """Four-condition GAS test for linear modes with quadratic V_g = x'P_g x and W_g = |C_g x|^2.

    When the P_g differ, nonincrease of v across jumps is not decidable from
    the matrices: with ``common_P_assumed`` it is recorded as a user
    assertion, otherwise it is probed on simulated dwell-and-ergodic runs.
    ``observed_signals`` must belong to Dwell(dwell) & Ergodic(ergodic_T).

    Raises ConfigError for non-positive-definite P_g or inconsistent shapes.
    """
    ids = list(ids) if ids is not None else list(range(1, len(A_list) + 1))
    if not (len(A_list) == len(P_list) == len(C_list) == len(ids)):
        raise ConfigError("A, P and C lists must have one entry per mode")
    sys = SwitchedSystem.linear(A_list, ids=ids)
    pair = quadratic_pair(P_list, C_list, ids)
    if any(pair.P[g].shape != sys.matrix(g).shape for g in ids):
        raise ConfigError("P and A shapes differ")
    spec = Intersection((Dwell(dwell), Ergodic(ergodic_T, tuple(ids))))
    opts = CertifyOptions(seed=seed, n_trials=n_trials, horizon=horizon, sim_step=step,
                          observed_signals=tuple(observed_signals))
    hyps: list[HypothesisResult] = _Checks(sys, pair, spec, opts, analytic=True).observed()

    for g in ids:
        A, P, C = sys.matrix(g), pair.P[g], pair.C[g]
        lam, vec = np.linalg.eigh(P @ A + A.T @ P + C.T @ C)
        name = f"cond1_dissipation[{g}]"
        if lam[-1] <= EIG_TOL:
            hyps.append(_holds(name, "P A + A'P + C'C is negative semidefinite", margin=-float(lam[-1])))
        else:
            hyps.append(_fails(name, vec[:, -1], f"largest eigenvalue {lam[-1]:.3g}", analytic=True,
                               margin=-float(lam[-1])))

    name = "cond2_v_nonincreasing"
    if _common_P(pair):
        hyps.append(_holds(name, "all P equal: jumps leave v unchanged"))
    elif common_P_assumed:
        hyps.append(_evidence(name, "P differ; nonincrease across jumps asserted by the user"))
    else:
        res = _Checks(sys, pair, spec, opts, analytic=False).monotone(per_mode=False)
        res.name = name
        hyps.append(res)

    for g in ids:
        U = unobservable_subspace(pair.C[g], sys.matrix(g))
        K = kernel(sys.matrix(g))
        name = f"cond3_unobservable_is_kernel[{g}]"
        d = U.projector_distance(K)
        if d <= 1e-9:
            hyps.append(_holds(name, f"projector distance {d:.2g}", margin=d))
        else:
            extra = intersect([U, K.complement()]) if U.dim >= K.dim else intersect([K, U.complement()])
            w = extra.basis[:, 0] if extra.dim else (U.basis[:, 0] if U.dim else K.basis[:, 0])
            hyps.append(_fails(name, w, f"projector distance {d:.3g}", analytic=True, margin=d))

    S = intersect([kernel(sys.matrix(g)) for g in ids])
    name = "cond4_kernels_meet_at_origin"
    if S.dim == 0:
        hyps.append(_holds(name, "common kernel is {0}"))
    else:
        hyps.append(_fails(name, S.basis.T.tolist(), f"common kernel has dimension {S.dim}", analytic=True))

    return CertificateReport("corollary_final", hyps, PredictedLimit.origin(sys.dimension), "GAS", spec_name(spec))


# --------------------------------------------------------------------------
# empirical runs


@dataclass
class TrialRecord:
    index: int
    signal_seed: int
    x0: np.ndarray
    final_state: np.ndarray | None
    x0_norm: float
    sup_norm: float
    gain: float
    final_distance: float
    error: str | None = None
    trajectory: Trajectory | None = None


@dataclass
class StabilityStats:
    trials: list[TrialRecord]
    eps: float
    limit: PredictedLimit

    @property
    def n_errors(self) -> int:
        return sum(t.error is not None for t in self.trials)

    @property
    def ok_trials(self) -> list[TrialRecord]:
        return [t for t in self.trials if t.error is None]

    @property
    def max_gain(self) -> float:
        """Empirical estimate of the uniform-stability gain: sup_t |x(t)| / |x0| over all runs."""
        return max((t.gain for t in self.ok_trials), default=math.nan)

    @property
    def max_final_distance(self) -> float:
        return max((t.final_distance for t in self.ok_trials), default=math.nan)

    @property
    def n_converged(self) -> int:
        return sum(t.final_distance <= self.eps for t in self.ok_trials)

    @property
    def all_converged(self) -> bool:
        return self.n_errors == 0 and self.n_converged == len(self.trials)

    def to_csv(self) -> str:
        lines = ["trial,signal_seed,x0_norm,sup_norm,gain,final_distance,error"]
        for t in self.trials:
            lines.append(",".join([str(t.index), str(t.signal_seed), repr(t.x0_norm), repr(t.sup_norm),
                                   repr(t.gain), repr(t.final_distance), t.error or ""]))
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        return {"n_trials": len(self.trials), "n_errors": self.n_errors, "n_converged": self.n_converged,
                "eps": self.eps, "max_gain": self.max_gain, "max_final_distance": self.max_final_distance,
                "limit": self.limit.description}


def empirical_stability_test(sys: SwitchedSystem, class_spec: SignalClassSpec | None, n_trials: int,
                             ball_radius: float, horizon: float, eps: float, *,
                             predicted_limit: PredictedLimit | None = None, step: float = 1e-3, seed: int = 0,
                             workers: int = 1, keep_trajectories: bool = False,
                             signal_source: Callable[[int], SwitchingSignal] | None = None) -> StabilityStats:
    """Simulate seeded (signal, x0) pairs and record gains and final distances to the predicted limit.

    Trial i draws its signal seed and initial state from the i-th child of
    ``SeedSequence(seed)``, so results do not depend on ``workers``.
    ``signal_source`` (seed -> signal) replaces the class generator.
    """
    if class_spec is None and signal_source is None:
        raise ValueError("need a signal class or a signal_source")
    limit = predicted_limit or PredictedLimit.origin(sys.dimension)
    children = np.random.SeedSequence(seed).spawn(n_trials)
    modes = _class_modes(class_spec, sys) if class_spec is not None else None

    def trial(i: int) -> TrialRecord:
        child = children[i]
        sig_seed = int(child.generate_state(1)[0])
        rng = np.random.default_rng(child.spawn(1)[0])
        x0 = np.zeros(sys.dimension)
        try:
            sig = (signal_source(sig_seed) if signal_source is not None
                   else generate(class_spec, (0.0, horizon), sig_seed, modes=modes))
            x0 = _ball_point(rng, sys, None, sig, ball_radius)
            if x0 is None:
                raise DomainViolation(np.zeros(sys.dimension), sig(sig.t_begin), sig.t_begin)
            traj = simulate(sys, sig, x0, span=(sig.t_begin, min(sig.t_end, sig.t_begin + horizon)), step=step)
        except (DomainViolation, Blowup, InfeasibleSpecError) as exc:
            return TrialRecord(i, sig_seed, x0, None, float(np.linalg.norm(x0)), math.nan, math.nan, math.nan,
                               f"{type(exc).__name__}: {exc}")
        norms = np.linalg.norm(traj.states, axis=1)
        r0 = float(norms[0])
        sup = float(norms.max())
        return TrialRecord(i, sig_seed, x0, traj.states[-1].copy(), r0, sup,
                           sup / r0 if r0 > 0 else math.nan, limit.distance(traj.states[-1]),
                           trajectory=traj if keep_trajectories else None)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(trial, range(n_trials)))
    else:
        records = [trial(i) for i in range(n_trials)]
    return StabilityStats(records, eps, limit)


def check_meagre_output(sys: SwitchedSystem, h: Callable[[np.ndarray], float], class_spec: SignalClassSpec, *,
                        n_trials: int = 8, horizon: float = 40.0, window: float = 1.0, n_windows: int = 20,
                        tol: float = 1e-3, eps: float = 1e-2, step: float = 1e-3, seed: int = 0,
                        ball_radius: float = 1.0) -> CertificateReport:
    """Output-based convergence: if y = h(x) is weakly meagre, x approaches the zero set of h.

    The meagreness of y is estimated on simulated runs; the conclusion
    (final states near h = 0) is checked on the same runs and stored in
    ``conclusion``.
    """
    if window * n_windows > horizon:
        raise ConfigError("window * n_windows must not exceed the horizon")
    limit = PredictedLimit("zero set of the output", zero_of=h)
    stats = empirical_stability_test(sys, class_spec, n_trials, ball_radius, horizon, eps,
                                     predicted_limit=limit, step=step, seed=seed, keep_trajectories=True)
    hyps = []
    if stats.n_errors:
        bad = next(t for t in stats.trials if t.error)
        hyps.append(_fails("trajectories_bounded", {"trial": bad.index, "error": bad.error}, bad.error))
    else:
        hyps.append(_evidence("trajectories_bounded", f"{n_trials} runs stayed bounded"))
    worst = None
    for t in stats.ok_trials:
        traj = t.trajectory
        y = np.array([h(x) for x in traj.states])
        rep = weakly_meagre_estimate(traj.times, y, window, n_windows, tol)
        if not rep.consistent:
            worst = {"trial": t.index, "infima": rep.infima.tolist()}
            break
    if worst is None:
        hyps.append(_evidence("output_weakly_meagre", f"window {window:g}, {n_windows} windows, tol {tol:g}"))
    else:
        hyps.append(_fails("output_weakly_meagre", worst, "window infima do not trend to zero"))
    conclusion = {"eps": eps, "max_final_distance": stats.max_final_distance,
                  "converged": stats.n_converged, "trials": n_trials}
    return CertificateReport("meagre_output", hyps, limit, None, spec_name(class_spec), conclusion)
