"""Command-line experiment runner: ``switchstab <command> [--config FILE] ...``.

Exit codes: 0 ok, 1 refuted certificate or invalid signal (with ``--strict``),
2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .certify import (
    THEOREMS,
    CertifyOptions,
    Verdict,
    check_convergence,
    check_corollary_final,
    empirical_stability_test,
)
from .errors import (
    Blowup,
    ConfigError,
    DomainViolation,
    HorizonError,
    InfeasibleSpecError,
    SignalError,
    UndecidableError,
)
from .integrator import simulate
from .jsonio import SCHEMA, dumps
from .limit_sets import hausdorff_directed, omega_limit, omega_sharp
from .lyapunov import pair_from_json
from .signals import Ergodic, Graph, SwitchingSignal, flatten, generate, spec_from_json, validate
from .system import SwitchedSystem, system_from_json

EXIT_OK, EXIT_REFUTED, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
SEED_ENV = "SWITCHSTAB_SEED"

_POSITIVE_OPTIONS = ("horizon", "step", "eps", "tol", "cluster_tol", "r_min", "ball_radius", "tail_fraction",
                     "zero_tol", "membership_tol", "tau_short", "membership_step", "origin_radius", "eq_tol",
                     "sim_step")


@dataclass
class ExperimentConfig:
    seed: int = 0
    system: dict | None = None
    signal_class: dict | None = None
    signal: dict | None = None
    pair: dict | None = None
    x0: list | None = None
    options: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    def option(self, name: str, default):
        return self.options.get(name, default)


def _read_json(path: Path, where: str):
    try:
        text = path.read_text()
    except FileNotFoundError as exc:
        raise ConfigError(f"{where}: file not found: {path}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def load_config(path: str | Path | None) -> ExperimentConfig:
    """Parse and check a config file; file references (``{"file": ...}``) resolve relative to it."""
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    obj = _read_json(path, "--config")
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: top level must be an object")
    if obj.get("schema") != SCHEMA:
        raise ConfigError(f"{path}: field 'schema' must be {SCHEMA!r}, got {obj.get('schema')!r}")
    base = path.parent
    for key in ("system", "signal_class", "signal", "pair"):
        val = obj.get(key)
        if isinstance(val, dict) and set(val) == {"file"}:
            obj[key] = _read_json(base / val["file"], f"{key}.file")
    options = obj.get("options", {})
    if not isinstance(options, dict):
        raise ConfigError(f"{path}: field 'options' must be an object")
    for name in _POSITIVE_OPTIONS:
        if name in options and not (isinstance(options[name], (int, float)) and options[name] > 0):
            raise ConfigError(f"{path}: options.{name} must be a positive number")
    seed = obj.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError(f"{path}: field 'seed' must be an integer")
    return ExperimentConfig(seed, obj.get("system"), obj.get("signal_class"), obj.get("signal"), obj.get("pair"),
                            obj.get("x0"), options, base)


def resolve_seed(cfg: ExperimentConfig, flag: int | None) -> int:
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV}={env!r} is not an integer") from exc
    return cfg.seed


# --------------------------------------------------------------------------
# building blocks from config + flags


def _system(cfg: ExperimentConfig) -> SwitchedSystem:
    if cfg.system is None:
        raise ConfigError("config field 'system' is required for this command")
    return system_from_json(cfg.system)


def _class_from_flags(args) -> dict | None:
    kind = getattr(args, "cls", None)
    if kind is None:
        return None
    out: dict = {"class": kind}
    if kind in ("adt", "dwell"):
        if args.tau_d is None:
            raise ConfigError(f"--class {kind} needs --tau-d")
        out["tau_d"] = args.tau_d
        if kind == "adt":
            if args.n0 is None:
                raise ConfigError("--class adt needs --n0")
            out["n0"] = args.n0
    elif kind == "ergodic":
        if args.T is None or args.modes is None:
            raise ConfigError("--class ergodic needs --T and --modes")
        out["T"], out["modes"] = args.T, _int_list(args.modes, "--modes")
    elif kind == "graph":
        if args.graph is None:
            raise ConfigError("--class graph needs --graph")
        try:
            out["H"] = json.loads(args.graph)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--graph: {exc.msg} at column {exc.colno}") from exc
    return out


def _signal_class(cfg: ExperimentConfig, args):
    obj = _class_from_flags(args) or cfg.signal_class
    if obj is None:
        return None
    try:
        return spec_from_json(obj)
    except KeyError as exc:
        raise ConfigError(f"signal_class: missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"signal_class: {exc}") from exc


def _int_list(text: str, where: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"{where}: expected comma-separated integers") from exc


def _float_list(text: str, where: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"{where}: expected comma-separated numbers") from exc


def _load_signal_file(path: str) -> SwitchingSignal:
    obj = _read_json(Path(path), "--signal")
    try:
        return SwitchingSignal.from_json(obj)
    except SignalError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _signal(cfg: ExperimentConfig, args, system: SwitchedSystem | None, seed: int) -> SwitchingSignal:
    """Explicit signal (flag, then config), else one drawn from the class, else constant first mode."""
    horizon = float(args.horizon if getattr(args, "horizon", None) is not None else cfg.option("horizon", 20.0))
    if getattr(args, "signal", None):
        return _load_signal_file(args.signal)
    if cfg.signal is not None:
        try:
            return SwitchingSignal.from_json(cfg.signal)
        except SignalError as exc:
            raise ConfigError(f"signal: {exc}") from exc
    spec = _signal_class(cfg, args)
    if spec is not None:
        modes = system.mode_ids if system is not None and not _has_own_modes(spec) else None
        return generate(spec, (0.0, horizon), seed, modes=modes)
    if system is None:
        raise ConfigError("need a signal, a signal class, or a system")
    return SwitchingSignal.constant(system.mode_ids[0], 0.0, horizon)


def _has_own_modes(spec) -> bool:
    return any(isinstance(m, (Ergodic, Graph)) for m in flatten(spec))


def _x0(cfg: ExperimentConfig, args, n: int) -> np.ndarray:
    if getattr(args, "x0", None):
        x0 = _float_list(args.x0, "--x0")
    elif cfg.x0 is not None:
        x0 = cfg.x0
    else:
        raise ConfigError("initial state required: pass --x0 or set config field 'x0'")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (n,):
        raise ConfigError(f"x0: expected {n} entries, got {x0.size}")
    return x0


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# commands


def cmd_simulate(args, cfg: ExperimentConfig, seed: int) -> int:
    system = _system(cfg)
    sig = _signal(cfg, args, system, seed)
    step = float(args.step if args.step is not None else cfg.option("step", 1e-3))
    traj = simulate(system, sig, _x0(cfg, args, system.dimension), step=step)
    _emit(traj.to_csv(), args.out)
    return EXIT_OK


def cmd_validate_signal(args, cfg: ExperimentConfig, seed: int) -> int:
    spec = _signal_class(cfg, args)
    if spec is None:
        raise ConfigError("validate-signal needs a class (--class ... or config 'signal_class')")
    sig = _signal(cfg, args, None, seed) if (args.signal or cfg.signal) else None
    if sig is None:
        raise ConfigError("validate-signal needs --signal or config 'signal'")
    rep = validate(sig, spec)
    _emit(dumps({"schema": SCHEMA, "kind": "validation", **rep.to_json()}), args.out)
    return EXIT_REFUTED if (args.strict and not rep.ok) else EXIT_OK


def cmd_generate_signal(args, cfg: ExperimentConfig, seed: int) -> int:
    spec = _signal_class(cfg, args)
    if spec is None:
        raise ConfigError("generate-signal needs a class (--class ... or config 'signal_class')")
    horizon = float(args.horizon if args.horizon is not None else cfg.option("horizon", 20.0))
    modes = _int_list(args.modes, "--modes") if args.modes and not _has_own_modes(spec) else None
    sig = generate(spec, (0.0, horizon), seed, modes=modes)
    _emit(dumps({"schema": SCHEMA, **sig.to_json()}), args.out)
    return EXIT_OK


def cmd_limits(args, cfg: ExperimentConfig, seed: int) -> int:
    system = _system(cfg)
    sig = _signal(cfg, args, system, seed)
    step = float(args.step if args.step is not None else cfg.option("step", 1e-3))
    traj = simulate(system, sig, _x0(cfg, args, system.dimension), step=step)
    tail = float(cfg.option("tail_fraction", 0.2))
    tol = float(cfg.option("cluster_tol", 1e-3))
    r_min = float(args.r_min if args.r_min is not None else cfg.option("r_min", 0.25))
    om = omega_limit(traj, tail, tol)
    sharp = omega_sharp(traj, r_min, tol, tail)
    doc = {
        "schema": SCHEMA,
        "kind": "limits",
        "omega": om.to_json(),
        "omega_sharp": sharp.to_json(),
        "sharp_to_omega": hausdorff_directed(sharp.project().points, om.points),
        "params": {"tail_fraction": tail, "cluster_tol": tol, "r_min": r_min, "step": step, "seed": seed},
    }
    _emit(dumps(doc), args.out)
    return EXIT_OK


def _certify_options(cfg: ExperimentConfig, seed: int, observed) -> CertifyOptions:
    known = set(CertifyOptions.__dataclass_fields__) - {"seed", "observed_signals"}
    kwargs = {k: v for k, v in cfg.options.items() if k in known}
    try:
        return CertifyOptions(seed=seed, observed_signals=tuple(observed), **kwargs)
    except TypeError as exc:
        raise ConfigError(f"options: {exc}") from exc


def cmd_certify(args, cfg: ExperimentConfig, seed: int) -> int:
    system = _system(cfg)
    if cfg.pair is None:
        raise ConfigError("certify needs config field 'pair'")
    observed = [_load_signal_file(p) for p in (args.observed or [])]
    if args.theorem == "corollary_final":
        if not system.is_linear or "P" not in cfg.pair:
            raise ConfigError("corollary_final needs a linear system and a quadratic pair {P, C}")
        ids = system.mode_ids
        report = check_corollary_final([system.matrix(g) for g in ids], cfg.pair["P"], cfg.pair["C"],
                                       common_P_assumed=args.common_p_assumed, ids=ids, seed=seed,
                                       n_trials=int(cfg.option("n_trials", 8)), observed_signals=observed)
    else:
        spec = _signal_class(cfg, args)
        if spec is None:
            raise ConfigError("certify needs a signal class (--class ... or config 'signal_class')")
        pair = pair_from_json(cfg.pair)
        report = check_convergence(system, pair, spec, args.theorem, _certify_options(cfg, seed, observed))
    _emit(dumps(report.to_json()), args.out)
    return EXIT_REFUTED if (args.strict and report.verdict is Verdict.REFUTED) else EXIT_OK


def cmd_stability_sweep(args, cfg: ExperimentConfig, seed: int) -> int:
    system = _system(cfg)
    spec = _signal_class(cfg, args)
    if spec is None:
        raise ConfigError("stability-sweep needs a signal class")
    n = int(args.trials if args.trials is not None else cfg.option("n_trials", 50))
    radius = float(args.radius if args.radius is not None else cfg.option("ball_radius", 1.0))
    horizon = float(args.horizon if args.horizon is not None else cfg.option("horizon", 20.0))
    eps = float(args.eps if args.eps is not None else cfg.option("eps", 1e-2))
    step = float(args.step if args.step is not None else cfg.option("step", 1e-3))
    stats = empirical_stability_test(system, spec, n, radius, horizon, eps, step=step, seed=seed,
                                     workers=int(args.workers))
    _emit(stats.to_csv(), args.out)
    if args.summary:
        Path(args.summary).write_text(dumps({"schema": SCHEMA, "kind": "stability_sweep", **stats.summary()}))
    return EXIT_OK


def _describe_json(path: Path, obj: dict) -> list[str]:
    kind = obj.get("kind")
    if kind == "certificate":
        lines = [f"{path.name}: {obj['theorem']} -> {obj['verdict']}"
                 + (f" ({obj['stability']})" if obj.get("stability") else "")]
        for h in obj["hypotheses"]:
            tag = "analytic" if h["analytic"] else "sampled"
            lines.append(f"  [{h['status']:>8}] {h['name']} ({tag}) {h['detail']}")
        if obj.get("predicted_limit"):
            lines.append(f"  predicted limit: {obj['predicted_limit']['description']}")
        return lines
    if kind == "validation":
        return [f"{path.name}: {obj['spec']} -> {'valid' if obj['ok'] else 'INVALID'}"
                + (f" ({obj['reason']})" if obj["reason"] else "")]
    if kind == "limits":
        return [f"{path.name}: omega {len(obj['omega']['points'])} points, omega-sharp "
                f"{len(obj['omega_sharp']['points'])} points, directed distance {obj['sharp_to_omega']:.3g}"]
    if kind == "stability_sweep":
        return [f"{path.name}: {obj['n_converged']}/{obj['n_trials']} trials within {obj['eps']:g} of "
                f"{obj.get('limit', 'the limit')}, max gain {obj['max_gain']}, errors {obj['n_errors']}"]
    if "switches" in obj:
        return [f"{path.name}: signal on [{obj['t_begin']}, {obj['t_end']}] with {len(obj['switches'])} switches"]
    return [f"{path.name}: unrecognised JSON document"]


def _describe_csv(path: Path, text: str) -> list[str]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        return [f"{path.name}: empty CSV"]
    head, body = rows[0], rows[1:]
    if head and head[0] == "t":
        last = body[-1] if body else []
        return [f"{path.name}: trajectory, {len(body)} samples, final state "
                f"({', '.join(f'{float(v):.6g}' for v in last[1:-1])}) in mode {last[-1] if last else '?'}"]
    if head and head[0] == "trial":
        dists = [float(r[5]) for r in body if not r[6]]
        errors = sum(1 for r in body if r[6])
        worst = max(dists) if dists else float("nan")
        return [f"{path.name}: stability sweep, {len(body)} trials, max final distance {worst:.3g}, errors {errors}"]
    return [f"{path.name}: unrecognised CSV"]


def cmd_report(args, cfg: ExperimentConfig, seed: int) -> int:
    lines = []
    for p in args.artifacts:
        path = Path(p)
        if not path.exists():
            raise ConfigError(f"report: artifact not found: {path}")
        text = path.read_text()
        if path.suffix == ".json":
            lines.extend(_describe_json(path, _read_json(path, "report")))
        else:
            lines.extend(_describe_csv(path, text))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing


def _add_class_flags(p: argparse.ArgumentParser):
    p.add_argument("--class", dest="cls", choices=["adt", "dwell", "ergodic", "graph"])
    p.add_argument("--tau-d", type=float)
    p.add_argument("--n0", type=int)
    p.add_argument("--T", type=float)
    p.add_argument("--modes", help="comma-separated mode ids")
    p.add_argument("--graph", help='successor map as JSON, e.g. \'{"1": [2], "2": [1]}\'')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="switchstab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, helptext):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config")
        p.add_argument("--out")
        p.add_argument("--seed", type=int)
        p.add_argument("--strict", action="store_true")
        return p

    p = command("simulate", "integrate a system along a signal; writes trajectory CSV")
    _add_class_flags(p)
    p.add_argument("--signal")
    p.add_argument("--x0")
    p.add_argument("--horizon", type=float)
    p.add_argument("--step", type=float)
    p.set_defaults(func=cmd_simulate)

    p = command("validate-signal", "check a signal against a class; writes validation JSON")
    _add_class_flags(p)
    p.add_argument("--signal")
    p.set_defaults(func=cmd_validate_signal)

    p = command("generate-signal", "draw a signal of a class; writes signal JSON")
    _add_class_flags(p)
    p.add_argument("--horizon", type=float)
    p.set_defaults(func=cmd_generate_signal)

    p = command("limits", "estimate omega and omega-sharp sets; writes limits JSON")
    _add_class_flags(p)
    p.add_argument("--signal")
    p.add_argument("--x0")
    p.add_argument("--horizon", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--r-min", type=float)
    p.set_defaults(func=cmd_limits)

    p = command("certify", "check theorem hypotheses; writes certificate JSON")
    _add_class_flags(p)
    p.add_argument("--theorem", required=True, choices=[t for t in THEOREMS if t != "meagre_output"])
    p.add_argument("--observed", action="append", help="signal JSON that must belong to the class")
    p.add_argument("--common-p-assumed", action="store_true")
    p.set_defaults(func=cmd_certify)

    p = command("stability-sweep", "seeded batch of simulations; writes statistics CSV")
    _add_class_flags(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--radius", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--summary", help="also write a JSON summary here")
    p.set_defaults(func=cmd_stability_sweep)

    p = command("report", "summarise previously written artifacts as text")
    p.add_argument("artifacts", nargs="+")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        seed = resolve_seed(cfg, args.seed)
        return args.func(args, cfg, seed)
    except (DomainViolation, Blowup, InfeasibleSpecError, UndecidableError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, SignalError, HorizonError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
