"""Release gate: one test per acceptance criterion, each printing a PASS/FAIL line."""

from __future__ import annotations

import hashlib
import math
import subprocess
import sys
import time
from pathlib import Path
from fractions import Fraction
from itertools import combinations, product

import numpy as np
import pytest

import oracles
from conftest import ACCEPTANCE_LINES
from switchstab import (
    ADT,
    ConfigError,
    CertifyOptions,
    Dwell,
    Ergodic,
    Graph,
    Intersection,
    SetValuedMap,
    SwitchedSystem,
    SwitchingSignal,
    Verdict,
    check_convergence,
    check_corollary_final,
    empirical_stability_test,
    generate,
    hausdorff,
    hausdorff_directed,
    monitor_v,
    omega_limit,
    omega_sharp,
    quadratic_pair,
    simple_cycles,
    simulate,
    validate,
    weakly_meagre_estimate,
)
from switchstab.jsonio import dumps
from switchstab.observability import unobservable_subspace, zero_output_membership
from switchstab.system import BUILTIN_SYSTEMS, Mode

TICKS_PER_SECOND = 64
DECOUPLED_CONFIG = Path(__file__).resolve().parents[1] / "scripts" / "configs" / "decoupled.json"


def record(k: int, ok: bool, detail: str):
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def decoupled_matrices():
    A = [np.diag([-1.0, 0.0]), np.diag([0.0, -1.0])]
    C = [np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])]
    P = [np.eye(2), np.eye(2)]
    return A, P, C


def criterion2_classes():
    H = SetValuedMap({1: frozenset({2}), 2: frozenset({3, 1}), 3: frozenset({1})})
    base = {"adt": ADT(0.5, 3), "dwell": Dwell(0.5), "ergodic": Ergodic(3.0, (1, 2, 3)), "graph": Graph(H)}
    classes = dict(base)
    for (na, a), (nb, b) in combinations(base.items(), 2):
        classes[f"{na}&{nb}"] = Intersection((a, b))
    return classes


def criterion5_stats(workers: int = 1, keep: bool = False):
    sys_ = BUILTIN_SYSTEMS["decoupled"]()
    spec = Intersection((Dwell(0.5), Ergodic(1.0, (1, 2))))
    return empirical_stability_test(sys_, spec, 100, 1.0, 20.0, 1e-3, step=1e-3, seed=2024,
                                    workers=workers, keep_trajectories=keep)


@pytest.fixture(scope="module")
def stats5():
    return criterion5_stats(keep=True)


# ---------------------------------------------------------------------------


def lattice_signal(rng, tau_d: float, horizon_ticks: int):
    """Random signal on the 1/64 s lattice: bursts of short gaps separated by long quiet spells."""
    ticks = []
    t = int(rng.integers(1, 3 * TICKS_PER_SECOND))
    tau_ticks = tau_d * TICKS_PER_SECOND
    while t < horizon_ticks:
        ticks.append(t)
        if rng.random() < 0.85:
            gap = max(1, int(round(rng.uniform(0.6, 2.0) * tau_ticks)))
        else:
            gap = int(rng.integers(TICKS_PER_SECOND, 6 * TICKS_PER_SECOND))
        t += gap
    modes = [int(rng.integers(1, 3))]
    for _ in ticks:
        modes.append(3 - modes[-1])
    sig = SwitchingSignal(0.0, horizon_ticks / TICKS_PER_SECOND, modes[0],
                          tuple((k / TICKS_PER_SECOND, m) for k, m in zip(ticks, modes[1:])))
    return ticks, sig


def test_criterion_01_adt_validator_matches_interval_oracle():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    disagreements, n_bad = 0, 0
    for _ in range(500):
        tau_d = float(rng.choice([0.1, 0.5, 1.0]))
        n0 = int(rng.choice([1, 2, 5]))
        ticks, sig = lattice_signal(rng, tau_d, 50 * TICKS_PER_SECOND)
        tau_ticks = Fraction(str(tau_d)) * TICKS_PER_SECOND
        oracle_ok = oracles.adt_violation_exact(ticks, tau_ticks, n0) is None
        ours = validate(sig, ADT(tau_d, n0)).ok
        disagreements += oracle_ok != ours
        n_bad += not oracle_ok
    elapsed = time.perf_counter() - start
    record(1, disagreements == 0 and elapsed < 30,
           f"{disagreements} disagreements on 500 signals ({n_bad} violating), {elapsed:.1f} s")


def test_criterion_02_generator_soundness():
    start = time.perf_counter()
    failures = {}
    for name, spec in criterion2_classes().items():
        bad = 0
        for seed in range(1000):
            sig = generate(spec, (0.0, 20.0), seed, modes=[1, 2, 3])
            bad += not validate(sig, spec).ok
        failures[name] = bad
    elapsed = time.perf_counter() - start
    total = sum(failures.values())
    record(2, total == 0 and elapsed < 60,
           f"{len(failures)} classes x 1000 signals, {total} invalid, {elapsed:.1f} s")


def test_criterion_03_integrator_order():
    sys_ = SwitchedSystem.linear([[[-1.0]]])
    sig = SwitchingSignal.constant(1, 0.0, 1.0)

    def endpoint_error(h):
        return abs(simulate(sys_, sig, [1.0], step=h).states[-1, 0] - math.exp(-1.0))

    ratio = endpoint_error(0.1) / endpoint_error(0.05)
    err = endpoint_error(1e-3)
    record(3, 12 <= ratio <= 20 and err <= 1e-9, f"error ratio {ratio:.3f}, endpoint error at h=1e-3 {err:.2e}")


def test_criterion_04_decoupled_certified():
    A, P, C = decoupled_matrices()
    rep = check_corollary_final(A, P, C)
    all_analytic = all(h.analytic and h.status.value == "holds" for h in rep.hypotheses)
    record(4, rep.verdict is Verdict.CERTIFIED and all_analytic and len(rep.hypotheses) == 6,
           f"verdict {rep.verdict.value}; " + ", ".join(f"{h.name}={h.status.value}" for h in rep.hypotheses))


def test_criterion_05_decoupled_cross_validation(stats5):
    bad_final = [t.index for t in stats5.trials if t.error or np.max(np.abs(t.final_state)) > 1e-3
                 or np.linalg.norm(t.final_state) > 1e-3]
    bad_sup = [t.index for t in stats5.ok_trials if t.sup_norm > t.x0_norm + 1e-6]
    radii_ok = all(t.x0_norm <= 1.0 for t in stats5.trials)
    record(5, not bad_final and not bad_sup and radii_ok and len(stats5.trials) == 100,
           f"100 trials: max |x(20)| {stats5.max_final_distance:.2e}, "
           f"max sup|x|-|x0| {max(t.sup_norm - t.x0_norm for t in stats5.ok_trials):.2e}")


def test_criterion_06_hypothesis_necessity():
    sys_ = BUILTIN_SYSTEMS["decoupled"]()
    const = SwitchingSignal.constant(1, 0.0, 20.0)
    traj = simulate(sys_, const, [1.0, 1.0], step=1e-3)
    dist = float(np.linalg.norm(traj.states[-1] - np.array([0.0, 1.0])))

    A, P, C = decoupled_matrices()
    corollary = check_corollary_final(A, P, C, observed_signals=[const])
    pair = quadratic_pair(P, C)
    spec = Intersection((Dwell(0.5), Ergodic(1.0, (1, 2))))
    theorem = check_convergence(sys_, pair, spec, "guas2bis", CertifyOptions(observed_signals=[const]))
    try:
        check_convergence(sys_, pair, Dwell(0.5), "guas2bis")
        refused_bad_class = False
    except ConfigError:
        refused_bad_class = True
    verdicts = [corollary.verdict, theorem.verdict]
    ok = (dist <= 1e-6 and refused_bad_class and Verdict.CERTIFIED not in verdicts
          and all(v is Verdict.REFUTED for v in verdicts))
    record(6, ok, f"|x(20)-(0,1)| = {dist:.2e}; observed constant signal -> "
                  f"{[v.value for v in verdicts]}; Dwell-only class refused: {refused_bad_class}")


def test_criterion_07_refutation_witness():
    A, P, C = decoupled_matrices()
    rep = check_corollary_final([A[0], A[0]], P, [C[0], C[0]])
    cond4 = rep.hypothesis("cond4_kernels_meet_at_origin")
    W = np.array(cond4.witness, dtype=float).T
    Q, _ = np.linalg.qr(W)
    e2 = np.array([[0.0], [1.0]])
    dist = float(np.linalg.norm(Q @ Q.T - e2 @ e2.T, 2))
    record(7, rep.verdict is Verdict.REFUTED and cond4.status.value == "fails" and dist <= 1e-9,
           f"verdict {rep.verdict.value}; witness projector distance to span(e2) {dist:.1e}")


def test_criterion_08_unobservable_subspace_oracle():
    rng = np.random.default_rng(8)
    worst = 0.0
    dims = []
    for _ in range(200):
        n = int(rng.integers(1, 6))
        C, A = oracles.random_integer_pair(rng, n)
        B = oracles.unobservable_basis(C.tolist(), A.tolist())
        P_oracle = B @ B.T if B.size else np.zeros((n, n))
        U = unobservable_subspace(C, A)
        worst = max(worst, float(np.linalg.norm(P_oracle - U.projector, 2)))
        dims.append(U.dim)
    record(8, worst <= 1e-9, f"200 pairs (unobservable dims {sorted(set(dims))}), "
                             f"worst projector distance {worst:.1e}")


def test_criterion_09_zero_output_membership():
    rng = np.random.default_rng(9)
    n_pairs = n_basis = n_probe = 0
    failures = []
    while n_pairs < 25:
        n = int(rng.integers(2, 5))
        C, A = oracles.random_integer_pair(rng, n)
        C = C.astype(float)
        if not np.any(C):
            continue
        U = unobservable_subspace(C, A)
        if U.dim == 0:
            continue
        n_pairs += 1
        mode = Mode.from_matrix(1, A)
        h = lambda x, C=C: float(np.sum((C @ x) ** 2))
        for k in range(U.dim):
            n_basis += 1
            m = zero_output_membership(mode, h, U.basis[:, k], 5.0, tol=1e-7)
            if not m:
                failures.append(("basis", m.reason))
        probes = 0
        while probes < 20:
            x = rng.normal(size=n)
            x /= np.linalg.norm(x)
            if np.linalg.norm(C @ x) <= 0.1:
                continue
            probes += 1
            n_probe += 1
            if zero_output_membership(mode, h, x, 5.0, tol=1e-7):
                failures.append(("probe", x.tolist()))
    record(9, not failures, f"{n_pairs} pairs: {n_basis} basis vectors, {n_probe} observable probes, "
                            f"{len(failures)} wrong decisions")


def test_criterion_10_rotation_limit_sets():
    sys_ = BUILTIN_SYSTEMS["rotation_pair"]()
    horizon = 40.0
    sig = SwitchingSignal(0.0, horizon, 1, tuple((float(k), 2 if k % 2 else 1) for k in range(1, int(horizon))))
    assert validate(sig, Dwell(1.0)).ok
    traj = simulate(sys_, sig, [1.0, 0.0], step=1e-3)
    omega = omega_limit(traj)
    sharp = omega_sharp(traj, r_min=0.25).project()
    theta = np.linspace(0.0, 2 * np.pi, 20000, endpoint=False)
    circle = np.column_stack([np.cos(theta), np.sin(theta)])
    d_circle = hausdorff(omega.points, circle)
    d_sharp = hausdorff_directed(sharp.points, omega.points)
    record(10, d_circle <= 1e-2 and d_sharp <= 1e-2,
           f"Hausdorff(omega, unit circle) {d_circle:.1e}; directed(sharp -> omega) {d_sharp:.1e}")


def test_criterion_11_simple_cycles_oracle():
    checked = mismatches = 0
    for n in range(1, 5):
        nodes = list(range(1, n + 1))
        possible = [(a, b) for a in nodes for b in nodes if a != b]
        for mask in product([0, 1], repeat=len(possible)):
            edges = [e for e, on in zip(possible, mask) if on]
            H = SetValuedMap.from_edges(nodes, edges)
            succ = {g: set(H(g)) for g in nodes}
            checked += 1
            mismatches += simple_cycles(H) != oracles.brute_cycles(succ)
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = int(rng.integers(5, 7))
        nodes = list(range(1, n + 1))
        p = rng.uniform(0.2, 0.7)
        edges = [(a, b) for a in nodes for b in nodes if a != b and rng.random() < p]
        H = SetValuedMap.from_edges(nodes, edges)
        checked += 1
        mismatches += simple_cycles(H) != oracles.brute_cycles({g: set(H(g)) for g in nodes})
    record(11, mismatches == 0, f"{checked} digraphs, {mismatches} mismatches")


def test_criterion_12_monotonicity_monitor(stats5):
    pair = quadratic_pair([np.eye(2), np.eye(2)], [[[1.0, 0.0]], [[0.0, 1.0]]])
    worst = -math.inf
    n_bad = 0
    for t in stats5.ok_trials:
        rep = monitor_v(t.trajectory, pair)
        n_bad += not rep.ok
        worst = max(worst, float(np.max(np.diff(rep.v))))

    sys_ = SwitchedSystem.linear([np.diag([0.0, -1.0]), np.diag([-1.0, 0.0])])
    sig = SwitchingSignal(0.0, 3.0, 1, ((1.0, 2),))
    traj = simulate(sys_, sig, [1.0, 0.0], step=1e-3)
    mixed = quadratic_pair([np.eye(2), 2 * np.eye(2)], [[[0.0, 1.0]], [[1.0, 0.0]]])
    global_rep = monitor_v(traj, mixed)
    per_mode = monitor_v(traj, mixed, mode_restricted=True)
    ok = n_bad == 0 and worst <= 1e-9 and not global_rep.ok and per_mode.ok
    record(12, ok, f"{len(stats5.ok_trials)} runs: max step increase of |x|^2 {worst:.1e}; "
                   f"P1=I/P2=2I global ok={global_rep.ok} (first rise t={global_rep.first_violation_time}), "
                   f"per-mode ok={per_mode.ok}")


def test_criterion_13_weak_meagreness_verdicts():
    t = np.arange(0.0, 40.0 + 5e-4, 1e-3)
    decay = weakly_meagre_estimate(t, np.exp(-t), window=1.0, n_windows=20)
    const = weakly_meagre_estimate(t, np.ones_like(t), window=1.0, n_windows=20)
    wave = weakly_meagre_estimate(t, np.sin(t) ** 2, window=4.0, n_windows=10)
    ok = decay.consistent and not const.consistent and wave.consistent
    record(13, ok, f"exp(-t) consistent={decay.consistent}, 1 consistent={const.consistent}, "
                   f"sin^2 consistent={wave.consistent}")


def _criterion2_digest() -> str:
    h = hashlib.sha256()
    for name, spec in criterion2_classes().items():
        for seed in range(0, 1000, 10):
            h.update(dumps(generate(spec, (0.0, 20.0), seed, modes=[1, 2, 3]).to_json()).encode())
    return h.hexdigest()


def _cli(args, tmp_path, out):
    subprocess.run([sys.executable, "-m", "switchstab", *args, "--out", str(tmp_path / out)], check=True)
    return (tmp_path / out).read_bytes()


def test_criterion_14_determinism(tmp_path):
    sig_same = _criterion2_digest() == _criterion2_digest()
    csv_same = criterion5_stats().to_csv() == criterion5_stats().to_csv() == criterion5_stats(workers=4).to_csv()
    cfg = str(DECOUPLED_CONFIG)
    gen = ["generate-signal", "--config", cfg, "--horizon", "20"]
    sweep = ["stability-sweep", "--config", cfg, "--trials", "10", "--workers", "3"]
    cli_same = (_cli(gen, tmp_path, "a.json") == _cli(gen, tmp_path, "b.json")
                and _cli(sweep, tmp_path, "a.csv") == _cli(sweep, tmp_path, "b.csv"))
    record(14, sig_same and csv_same and cli_same,
           f"signals identical={sig_same}, sweep CSV identical (1 and 4 workers)={csv_same}, "
           f"CLI artifacts identical={cli_same}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
