"""Switched system x' = f(x, sigma): per-mode vector fields, domains and equilibria."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DomainViolation

# Halfspace membership band; keeps integrator round-off on a boundary from
# being reported as an exit.
DOMAIN_TOL = 1e-9


@dataclass(frozen=True)
class Domain:
    """Closed state set chi given by a membership predicate plus a sampling box.

    Users must hand in closed sets; closedness is not verified.  ``halfspaces``
    rows are ``(normal..., offset)`` describing ``normal . x <= offset``.
    """

    lo: np.ndarray
    hi: np.ndarray
    predicate: Callable[[np.ndarray], bool] | None = None
    halfspaces: np.ndarray | None = None

    @classmethod
    def everywhere(cls, n: int, radius: float = 2.0) -> Domain:
        return cls(-radius * np.ones(n), radius * np.ones(n))

    @classmethod
    def from_halfspaces(cls, rows, radius: float = 2.0) -> Domain:
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        n = rows.shape[1] - 1
        return cls(-radius * np.ones(n), radius * np.ones(n), halfspaces=rows)

    @property
    def is_everything(self) -> bool:
        return self.predicate is None and self.halfspaces is None

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if self.halfspaces is not None:
            if np.any(self.halfspaces[:, :-1] @ x > self.halfspaces[:, -1] + DOMAIN_TOL):
                return False
        if self.predicate is not None and not self.predicate(x):
            return False
        return True

    def sample(self, rng: np.random.Generator, k: int) -> np.ndarray:
        """Uniform box samples filtered by membership (may return fewer than ``k``)."""
        pts = rng.uniform(self.lo, self.hi, size=(k, self.lo.size))
        return pts[[self.contains(p) for p in pts]]

    def to_json(self):
        if self.is_everything:
            return "all"
        if self.predicate is None:
            return {"halfspaces": self.halfspaces.tolist()}
        return {"predicate": "opaque"}


@dataclass(frozen=True)
class Mode:
    id: int
    field: Callable[[np.ndarray], np.ndarray]
    domain: Domain
    linear: np.ndarray | None = None
    name: str = ""

    @classmethod
    def from_matrix(cls, id: int, A, domain: Domain | None = None) -> Mode:
        A = np.array(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ConfigError(f"mode {id}: A must be square, got shape {A.shape}")
        A.setflags(write=False)
        return cls(id, lambda x, A=A: A @ x, domain or Domain.everywhere(A.shape[0]), A)

    @property
    def dimension(self) -> int:
        return self.domain.lo.size


@dataclass(frozen=True)
class SwitchedSystem:
    modes: Mapping[int, Mode]
    # Uniqueness of the zero solution cannot be checked numerically; it is a
    # user assertion consumed by the certificate checker.
    unique_solutions: bool = False
    name: str = ""

    def __post_init__(self):
        if not self.modes:
            raise ConfigError("a switched system needs at least one mode")
        dims = {m.dimension for m in self.modes.values()}
        if len(dims) != 1:
            raise ConfigError(f"modes disagree on dimension: {sorted(dims)}")
        for gid, m in self.modes.items():
            if gid != m.id:
                raise ConfigError(f"mode key {gid} does not match mode id {m.id}")

    @classmethod
    def linear(cls, A_list: Sequence, domains: Sequence[Domain | None] | None = None,
               ids: Sequence[int] | None = None, name: str = "") -> SwitchedSystem:
        ids = list(ids) if ids is not None else list(range(1, len(A_list) + 1))
        domains = list(domains) if domains is not None else [None] * len(A_list)
        modes = {g: Mode.from_matrix(g, A, d) for g, A, d in zip(ids, A_list, domains)}
        return cls(modes, unique_solutions=True, name=name)

    @property
    def dimension(self) -> int:
        return next(iter(self.modes.values())).dimension

    @property
    def mode_ids(self) -> list[int]:
        return sorted(self.modes)

    @property
    def is_linear(self) -> bool:
        return all(m.linear is not None for m in self.modes.values())

    def matrix(self, gamma: int) -> np.ndarray:
        A = self.modes[gamma].linear
        if A is None:
            raise ConfigError(f"mode {gamma} has no linear representation")
        return A

    def eval_field(self, x, gamma: int) -> np.ndarray:
        """f_gamma(x); raises DomainViolation when x is outside chi_gamma."""
        x = np.asarray(x, dtype=float)
        mode = self.modes[gamma]
        if not mode.domain.contains(x):
            raise DomainViolation(x, gamma)
        return np.asarray(mode.field(x), dtype=float)

    def is_equilibrium(self, gamma: int, x, tol: float = 1e-12) -> bool:
        return bool(np.linalg.norm(self.eval_field(x, gamma)) <= tol)

    def origin_is_equilibrium(self, tol: float = 1e-12) -> bool:
        """0 is an equilibrium of every mode whose domain contains it."""
        zero = np.zeros(self.dimension)
        return all(self.is_equilibrium(g, zero, tol) for g in self.mode_ids
                   if self.modes[g].domain.contains(zero))

    def check_linear_consistency(self, n_samples: int = 100, seed: int = 0) -> float:
        """Worst |field(x) - A x| over box samples of every linear mode."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for m in self.modes.values():
            if m.linear is None:
                continue
            for x in rng.uniform(m.domain.lo, m.domain.hi, size=(n_samples, m.dimension)):
                worst = max(worst, float(np.max(np.abs(m.field(x) - m.linear @ x))))
        return worst

    def check_purity(self, n_samples: int = 20, seed: int = 0) -> bool:
        """Spot-check that evaluating a field twice gives the same answer."""
        rng = np.random.default_rng(seed)
        for m in self.modes.values():
            for x in rng.uniform(m.domain.lo, m.domain.hi, size=(n_samples, m.dimension)):
                if not np.array_equal(m.field(x.copy()), m.field(x.copy())):
                    return False
        return True

    def to_json(self) -> dict:
        out = {"modes": []}
        for g in self.mode_ids:
            m = self.modes[g]
            entry = {"id": g, "domain": m.domain.to_json()}
            if m.linear is not None:
                entry["linear"] = {"A": m.linear.tolist()}
            else:
                entry["builtin"] = m.name
            out["modes"].append(entry)
        out["unique_solutions"] = self.unique_solutions
        return out


# --------------------------------------------------------------------------
# registered examples


def _decoupled() -> SwitchedSystem:
    return SwitchedSystem.linear([np.diag([-1.0, 0.0]), np.diag([0.0, -1.0])], name="decoupled")


def _rotation_pair() -> SwitchedSystem:
    rot = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return SwitchedSystem.linear([rot, 2.0 * rot], name="rotation_pair")


BUILTIN_FIELDS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "cubic_x1": lambda x: np.array([-x[0] ** 3, 0.0]),
    "cubic_x2": lambda x: np.array([0.0, -x[1] ** 3]),
    # damped pendulum (energy dissipated through velocity) and undamped pendulum
    "pendulum_damped": lambda x: np.array([x[1], -np.sin(x[0]) - x[1]]),
    "pendulum_free": lambda x: np.array([x[1], -np.sin(x[0])]),
}


def _from_fields(names: Sequence[str], domain: Domain, name: str) -> SwitchedSystem:
    modes = {i: Mode(i, BUILTIN_FIELDS[f], domain, name=f) for i, f in enumerate(names, start=1)}
    return SwitchedSystem(modes, unique_solutions=True, name=name)


def _cubic_decoupled() -> SwitchedSystem:
    return _from_fields(["cubic_x1", "cubic_x2"], Domain.everywhere(2), "cubic_decoupled")


def _pendulum_pair() -> SwitchedSystem:
    return _from_fields(["pendulum_damped", "pendulum_free"], Domain.everywhere(2, radius=1.5), "pendulum_pair")


BUILTIN_SYSTEMS: dict[str, Callable[[], SwitchedSystem]] = {
    "decoupled": _decoupled,
    "rotation_pair": _rotation_pair,
    "cubic_decoupled": _cubic_decoupled,
    "pendulum_pair": _pendulum_pair,
}


def _domain_from_json(obj, n: int, where: str) -> Domain:
    if obj is None or obj == "all":
        return Domain.everywhere(n)
    if isinstance(obj, Mapping) and "halfspaces" in obj:
        rows = np.atleast_2d(np.asarray(obj["halfspaces"], dtype=float))
        if rows.shape[1] != n + 1:
            raise ConfigError(f"{where}.halfspaces: rows need {n + 1} entries (normal, offset)")
        return Domain.from_halfspaces(rows, radius=float(obj.get("radius", 2.0)))
    raise ConfigError(f"{where}: expected \"all\" or {{\"halfspaces\": [...]}}")


def system_from_json(obj: Mapping) -> SwitchedSystem:
    """Build a system from its JSON description (see README for the schema)."""
    if "builtin" in obj:
        name = obj["builtin"]
        if name not in BUILTIN_SYSTEMS:
            raise ConfigError(f"system.builtin: unknown system {name!r}; known: {sorted(BUILTIN_SYSTEMS)}")
        return BUILTIN_SYSTEMS[name]()
    if "modes" not in obj:
        raise ConfigError("system: need either \"builtin\" or \"modes\"")
    modes = {}
    n = None
    for i, entry in enumerate(obj["modes"]):
        where = f"system.modes[{i}]"
        gid = int(entry.get("id", i + 1))
        if "linear" in entry:
            try:
                A = np.asarray(entry["linear"]["A"], dtype=float)
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"{where}.linear.A: {exc}") from exc
            if A.ndim != 2 or A.shape[0] != A.shape[1]:
                raise ConfigError(f"{where}.linear.A: expected a square matrix, got shape {A.shape}")
            n = A.shape[0] if n is None else n
            modes[gid] = Mode.from_matrix(gid, A, _domain_from_json(entry.get("domain"), A.shape[0], where + ".domain"))
        elif "builtin" in entry:
            fname = entry["builtin"]
            if fname not in BUILTIN_FIELDS:
                raise ConfigError(f"{where}.builtin: unknown field {fname!r}; known: {sorted(BUILTIN_FIELDS)}")
            dim = int(entry.get("dimension", n or 2))
            modes[gid] = Mode(gid, BUILTIN_FIELDS[fname],
                              _domain_from_json(entry.get("domain"), dim, where + ".domain"), name=fname)
        else:
            raise ConfigError(f"{where}: need \"linear\" or \"builtin\"")
    linear = all(m.linear is not None for m in modes.values())
    return SwitchedSystem(modes, unique_solutions=bool(obj.get("unique_solutions", linear)))
