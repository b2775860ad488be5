"""Reference implementations that share no code with the package under test."""

from __future__ import annotations

import bisect
import itertools
from fractions import Fraction

import numpy as np


def adt_violation_exact(ticks: list[int], tau_d: Fraction, n0: int):
    """First closed switch block breaking N <= n0 + length/tau_d, in exact integer arithmetic.

    Switch times are integer ``ticks`` on a lattice and ``tau_d`` is measured
    in ticks.  An open interval only gains by shrinking onto the switches it
    contains, so every pair of switch times (t_i, t_j) is tried, counting the
    switches in [t_i, t_j] by bisection.  Returns None when the bound holds.
    """
    num, den = tau_d.numerator, tau_d.denominator
    for a in ticks:
        lo = bisect.bisect_left(ticks, a)
        for b in ticks[lo:]:
            inside = bisect.bisect_right(ticks, b) - lo
            # inside > n0 + (b - a) * den / num
            if (inside - n0) * num > (b - a) * den:
                return a, b, inside
    return None


def adt_violation_grid(ticks: list[int], tau_d: Fraction, n0: int, horizon_ticks: int) -> bool:
    """Scan open intervals whose endpoints sit halfway between lattice points.

    Such intervals are longer than the tightest ones, so this only ever
    confirms violations.  Units are doubled to keep the midpoints integral.
    """
    doubled = [2 * k for k in ticks]
    grid = list(range(1, 2 * horizon_ticks, 2))
    num, den = tau_d.numerator, tau_d.denominator
    for i, a in enumerate(grid):
        lo = bisect.bisect_right(doubled, a)
        for b in grid[i + 1:]:
            inside = bisect.bisect_left(doubled, b) - lo
            # inside > n0 + (b - a) / (2 tau_d)
            if (inside - n0) * 2 * num > (b - a) * den:
                return True
    return False


def rref_null_space(M) -> list[list[Fraction]]:
    """Exact null-space basis of an integer/rational matrix by fraction row reduction."""
    rows = [[Fraction(int(v)) if float(v).is_integer() else Fraction(v) for v in row] for row in M]
    n = len(rows[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(n):
        p = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        pv = rows[r][c]
        rows[r] = [v / pv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fcol in free:
        v = [Fraction(0)] * n
        v[fcol] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -rows[i][fcol]
        basis.append(v)
    return basis


def gram_schmidt(vectors: list[list[Fraction]], n: int) -> np.ndarray:
    out = []
    for v in vectors:
        w = np.array([float(x) for x in v])
        for q in out:
            w = w - (q @ w) * q
        for q in out:
            w = w - (q @ w) * q
        nrm = np.linalg.norm(w)
        if nrm > 1e-12:
            out.append(w / nrm)
    return np.array(out).T if out else np.zeros((n, 0))


def stacked_observability(C, A) -> list[list[int]]:
    """[C; CA; ...; CA^(n-1)] in exact integer arithmetic."""
    C = [list(map(int, r)) for r in C]
    A = [list(map(int, r)) for r in A]
    n = len(A)
    blocks = [C]
    for _ in range(n - 1):
        prev = blocks[-1]
        blocks.append([[sum(prev[i][k] * A[k][j] for k in range(n)) for j in range(n)] for i in range(len(prev))])
    return [row for b in blocks for row in b]


def unobservable_basis(C, A) -> np.ndarray:
    return gram_schmidt(rref_null_space(stacked_observability(C, A)), len(A))


def brute_cycles(succ: dict[int, set[int]]) -> list[tuple[int, ...]]:
    """Every cycle through distinct nodes, listed from its smallest node, by trying all orderings."""
    nodes = sorted(succ)
    found = []
    for size in range(2, len(nodes) + 1):
        for subset in itertools.combinations(nodes, size):
            first, rest = subset[0], subset[1:]
            for perm in itertools.permutations(rest):
                seq = (first,) + perm + (first,)
                if all(seq[i + 1] in succ[seq[i]] for i in range(len(seq) - 1)):
                    found.append(seq)
    return sorted(found, key=lambda c: (len(c), c))


def random_integer_pair(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Integer (C, A) with a random unobservable part, hidden by an integer change of basis.

    In Kalman form A = [[A11, 0], [A21, A22]], C = [C1, 0] the last n - r
    coordinates are unobservable; conjugating by a unimodular T keeps
    everything integral.
    """
    r = int(rng.integers(0, n + 1))
    p = int(rng.integers(1, 3))
    A = rng.integers(-1, 2, size=(n, n))
    A[:r, r:] = 0
    C = rng.integers(-1, 2, size=(p, n))
    C[:, r:] = 0
    T = np.eye(n, dtype=int)
    for _ in range(int(rng.integers(0, 3))):
        i, j = rng.choice(n, size=2, replace=False) if n > 1 else (0, 0)
        if i != j:
            E = np.eye(n, dtype=int)
            E[i, j] = int(rng.choice([-1, 1]))
            T = E @ T
    T_inv = np.rint(np.linalg.inv(T)).astype(int)
    return C @ T_inv, T @ A @ T_inv
