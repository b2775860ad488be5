"""Compare the ADT validator against a direct interval count on random signals.

For each (tau_d, n0) the script draws signals whose switching rate straddles
1/tau_d, counts switches in every open interval spanned by two switch times
(widened by a hair so both ends are inside), and tabulates agreement and the
share of signals in the class.  Prints CSV to stdout.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import sys
import time
from dataclasses import dataclass

import numpy as np

from switchstab import ADT, SwitchingSignal, validate


@dataclass
class Config:
    seed: int = 0
    n_signals: int = 200
    horizon: float = 50.0
    tau_values: tuple[float, ...] = (0.1, 0.5, 1.0)
    n0_values: tuple[int, ...] = (1, 2, 5)
    lattice: int = 64


def draw(rng: np.random.Generator, cfg: Config, tau_d: float) -> SwitchingSignal:
    ticks, t = [], int(rng.integers(1, cfg.lattice))
    end = int(cfg.horizon * cfg.lattice)
    while t < end:
        ticks.append(t)
        if rng.random() < 0.85:
            t += max(1, int(round(rng.uniform(0.6, 2.0) * tau_d * cfg.lattice)))
        else:
            t += int(rng.integers(cfg.lattice, 6 * cfg.lattice))
    switches = tuple((k / cfg.lattice, 2 if i % 2 == 0 else 1) for i, k in enumerate(ticks))
    return SwitchingSignal(0.0, cfg.horizon, 1, switches)


def direct_count_ok(sig: SwitchingSignal, tau_d: float, n0: int, lattice: int) -> bool:
    t = sig.times
    hair = 0.25 / lattice
    for a, b in itertools.combinations_with_replacement(range(t.size), 2):
        lo, hi = t[a] - hair, t[b] + hair
        inside = int(np.count_nonzero((t > lo) & (t < hi)))
        if inside > n0 + (t[b] - t[a]) / tau_d + 1e-9:
            return False
    return True


def main(cfg: Config):
    rng = np.random.default_rng(cfg.seed)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["tau_d", "n0", "signals", "in_class", "disagreements", "seconds"])
    for tau_d, n0 in itertools.product(cfg.tau_values, cfg.n0_values):
        start = time.perf_counter()
        agree = inside = 0
        for _ in range(cfg.n_signals):
            sig = draw(rng, cfg, tau_d)
            ours = validate(sig, ADT(tau_d, n0)).ok
            agree += ours == direct_count_ok(sig, tau_d, n0, cfg.lattice)
            inside += ours
        out.writerow([tau_d, n0, cfg.n_signals, inside, cfg.n_signals - agree,
                      f"{time.perf_counter() - start:.2f}"])


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--signals", type=int, default=Config.n_signals)
    ap.add_argument("--seed", type=int, default=Config.seed)
    a = ap.parse_args()
    main(Config(seed=a.seed, n_signals=a.signals))
