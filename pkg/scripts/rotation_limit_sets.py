"""Limit-set estimates for two rotations at different speeds under an alternating signal.

Every solution stays on its starting circle, so the omega-limit estimate
should sit on the unit circle and the refined (state, mode) estimate should
project into it.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from switchstab import SwitchingSignal, hausdorff, hausdorff_directed, omega_limit, omega_sharp, simulate
from switchstab.jsonio import dumps
from switchstab.system import BUILTIN_SYSTEMS


@dataclass
class Config:
    horizon: float = 40.0
    dwell: float = 1.0
    step: float = 1e-3
    r_min_values: tuple[float, ...] = (0.05, 0.25, 0.5)
    tail_fraction: float = 0.2


def main(cfg: Config, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    n_switch = int(cfg.horizon / cfg.dwell)
    switches = tuple((k * cfg.dwell, 2 if k % 2 else 1) for k in range(1, n_switch) if k * cfg.dwell < cfg.horizon)
    sig = SwitchingSignal(0.0, cfg.horizon, 1, switches)
    traj = simulate(BUILTIN_SYSTEMS["rotation_pair"](), sig, [1.0, 0.0], step=cfg.step)
    omega = omega_limit(traj, cfg.tail_fraction)
    theta = np.linspace(0.0, 2 * np.pi, 20000, endpoint=False)
    circle = np.column_stack([np.cos(theta), np.sin(theta)])
    rows = {"omega_points": len(omega), "omega_to_circle": hausdorff(omega.points, circle), "sharp": []}
    for r in cfg.r_min_values:
        sharp = omega_sharp(traj, r, tail_fraction=cfg.tail_fraction)
        rows["sharp"].append({"r_min": r, "points": len(sharp),
                              "modes": sorted(set(sharp.modes.tolist())),
                              "to_omega": hausdorff_directed(sharp.project().points, omega.points)})
    (out / "limits.json").write_text(dumps(rows))
    (out / "trajectory.csv").write_text(traj.to_csv())
    print(f"omega: {rows['omega_points']} points, Hausdorff distance to unit circle {rows['omega_to_circle']:.2e}")
    for s in rows["sharp"]:
        print(f"r_min={s['r_min']:<5g} sharp points {s['points']:>5}, modes {s['modes']}, "
              f"directed distance to omega {s['to_omega']:.2e}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results/rotation_limit_sets"))
    ap.add_argument("--horizon", type=float, default=Config.horizon)
    a = ap.parse_args()
    main(Config(horizon=a.horizon), a.out)
