"""Linear unobservable subspaces, kernels, subspace intersection, and zero-output membership by simulation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import Blowup, DomainViolation
from .integrator import simulate
from .signals import SwitchingSignal
from .system import Mode, SwitchedSystem

RANK_RTOL = 1e-10
SUBSPACE_TOL = 1e-9


@dataclass(frozen=True)
class Subspace:
    """Span of the orthonormal columns of ``basis`` (an n x k array, k may be 0)."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 2:
            raise ValueError("basis must be a 2-d array (n x k)")
        object.__setattr__(self, "basis", b)

    @classmethod
    def zero(cls, n: int) -> Subspace:
        return cls(np.zeros((n, 0)))

    @classmethod
    def full(cls, n: int) -> Subspace:
        return cls(np.eye(n))

    @classmethod
    def span(cls, vectors) -> Subspace:
        """Orthonormalise the columns of ``vectors`` (rank decided with the relative tolerance)."""
        V = np.atleast_2d(np.asarray(vectors, dtype=float))
        n = V.shape[0]
        if V.shape[1] == 0:
            return cls.zero(n)
        U, s, _ = np.linalg.svd(V, full_matrices=False)
        if s.size == 0 or s[0] == 0:
            return cls.zero(n)
        return cls(U[:, s > RANK_RTOL * s[0]])

    @property
    def ambient(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def distance(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.linalg.norm(x - self.basis @ (self.basis.T @ x)))

    def contains(self, x, tol: float = SUBSPACE_TOL) -> bool:
        return self.distance(x) <= tol * max(1.0, float(np.linalg.norm(x)))

    def projector_distance(self, other: Subspace) -> float:
        _same_ambient([self, other])
        return float(np.linalg.norm(self.projector - other.projector))

    def equals(self, other: Subspace, tol: float = SUBSPACE_TOL) -> bool:
        return self.projector_distance(other) <= tol

    def complement(self) -> Subspace:
        return kernel(self.basis.T) if self.dim else Subspace.full(self.ambient)

    def to_json(self) -> dict:
        # column-major: one list per basis vector
        return {"ambient": self.ambient, "basis": self.basis.T.tolist()}

    @classmethod
    def from_json(cls, obj) -> Subspace:
        cols = obj["basis"]
        n = int(obj["ambient"])
        return cls(np.array(cols, dtype=float).reshape(len(cols), n).T)


def _same_ambient(spaces: Sequence[Subspace]):
    dims = {s.ambient for s in spaces}
    if len(dims) > 1:
        raise ValueError(f"subspaces live in different dimensions: {sorted(dims)}")


def _null_space(M: np.ndarray, n: int, atol: float = 0.0) -> Subspace:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return Subspace.full(n)
    _, s, Vt = np.linalg.svd(M, full_matrices=True)
    if s.size == 0 or s[0] <= atol:
        return Subspace.full(n)
    rank = int(np.sum(s > max(RANK_RTOL * s[0], atol)))
    return Subspace(Vt[rank:].T.copy())


def kernel(A) -> Subspace:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    return _null_space(A, A.shape[1])


def observability_matrix(C, A) -> np.ndarray:
    C = np.atleast_2d(np.asarray(C, dtype=float))
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or C.shape[1] != n:
        raise ValueError(f"inconsistent shapes: C {C.shape}, A {A.shape}")
    blocks = [C]
    for _ in range(n - 1):
        blocks.append(blocks[-1] @ A)
    return np.vstack(blocks)


def unobservable_subspace(C, A) -> Subspace:
    """Kernel of the stacked matrix [C; CA; ...; CA^(n-1)]."""
    A = np.asarray(A, dtype=float)
    return _null_space(observability_matrix(C, A), A.shape[0])


def intersect(spaces: Sequence[Subspace]) -> Subspace:
    """Common part of the given subspaces: the kernel of the stacked I - P_i."""
    spaces = list(spaces)
    if not spaces:
        raise ValueError("intersect needs at least one subspace")
    _same_ambient(spaces)
    n = spaces[0].ambient
    if len(spaces) == 1:
        return spaces[0]
    # singular values here are sines of principal angles, so the cutoff is absolute
    return _null_space(np.vstack([np.eye(n) - s.projector for s in spaces]), n, atol=RANK_RTOL)


def default_tau_max(mode: Mode) -> float:
    """Ten times the slowest decay time constant of a linear mode, else 10 s."""
    if mode.linear is None:
        return 10.0
    rates = np.abs(np.real(np.linalg.eigvals(mode.linear)))
    rates = rates[rates > 1e-12]
    return 10.0 / float(rates.min()) if rates.size else 10.0


@dataclass
class Membership:
    member: bool
    reason: str
    tau: float
    worst_output: float

    def __bool__(self) -> bool:
        return self.member


def zero_output_membership(mode: Mode, h: Callable[[np.ndarray], float], x0, tau: float,
                           direction: str = "forward", tol: float = 1e-8, h_step: float = 1e-3) -> Membership:
    """Decide numerically whether x0 lies in the forward or backward zero-output set of (mode, h, tau).

    The solution must keep |h| <= tol at every step and stay in the mode
    domain; leaving the domain counts as non-membership and is named in
    ``reason``.
    """
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    if not tau > 0:
        raise ValueError("tau must be positive")
    x0 = np.asarray(x0, dtype=float)
    if not mode.domain.contains(x0):
        return Membership(False, "initial state outside the mode domain", tau, math.nan)
    solo = SwitchedSystem({mode.id: mode})
    sig = SwitchingSignal.constant(mode.id, 0.0, tau)
    try:
        traj = simulate(solo, sig, x0, step=h_step, backward=direction == "backward")
    except DomainViolation as exc:
        return Membership(False, f"solution left the domain at t={exc.t:.6g}", tau, math.nan)
    except Blowup as exc:
        return Membership(False, f"solution blew up at t={exc.t:.6g}", tau, math.inf)
    worst = 0.0
    for t, x in zip(traj.times, traj.states):
        y = abs(float(h(x)))
        worst = max(worst, y)
        if y > tol:
            return Membership(False, f"|h| = {y:.3g} > tol at t={t:.6g}", tau, worst)
    return Membership(True, "output stayed within tolerance", tau, worst)
