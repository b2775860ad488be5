"""Certify the decoupled two-mode example and cross-check it by simulation.

Writes the certificate JSON, the sweep CSV and a short text summary to --out.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from switchstab import Dwell, Ergodic, Intersection, check_corollary_final, empirical_stability_test
from switchstab.jsonio import dumps
from switchstab.system import BUILTIN_SYSTEMS


@dataclass
class Config:
    seed: int = 2024
    n_trials: int = 100
    horizon: float = 20.0
    step: float = 1e-3
    dwell: float = 0.5
    ergodic_T: float = 1.0
    eps: float = 1e-3
    workers: int = 4


def main(cfg: Config, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    A = [np.diag([-1.0, 0.0]), np.diag([0.0, -1.0])]
    C = [[[1.0, 0.0]], [[0.0, 1.0]]]
    P = [np.eye(2), np.eye(2)]

    cert = check_corollary_final(A, P, C, seed=cfg.seed, dwell=cfg.dwell, ergodic_T=cfg.ergodic_T)
    (out / "certificate.json").write_text(dumps(cert.to_json()))
    refuted = check_corollary_final([A[0], A[0]], P, [C[0], C[0]])
    (out / "certificate_duplicated_mode.json").write_text(dumps(refuted.to_json()))

    spec = Intersection((Dwell(cfg.dwell), Ergodic(cfg.ergodic_T, (1, 2))))
    stats = empirical_stability_test(BUILTIN_SYSTEMS["decoupled"](), spec, cfg.n_trials, 1.0, cfg.horizon,
                                     cfg.eps, step=cfg.step, seed=cfg.seed, workers=cfg.workers)
    (out / "sweep.csv").write_text(stats.to_csv())

    lines = [
        f"corollary verdict: {cert.verdict.value}",
        f"duplicated mode verdict: {refuted.verdict.value}",
        f"sweep: {stats.n_converged}/{cfg.n_trials} runs within {cfg.eps:g} of the origin at t={cfg.horizon:g}",
        f"largest final |x|: {stats.max_final_distance:.3e}",
        f"largest gain sup|x|/|x0|: {stats.max_gain:.6f}",
    ]
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results/decoupled_gas"))
    ap.add_argument("--trials", type=int, default=Config.n_trials)
    ap.add_argument("--seed", type=int, default=Config.seed)
    a = ap.parse_args()
    main(Config(seed=a.seed, n_trials=a.trials), a.out)
