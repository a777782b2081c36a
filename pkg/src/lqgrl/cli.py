"""Command-line harness for the example problems and experiment sweeps.

Subcommands::

    lqgrl lqg      --preset doyle            model-based baseline + margins
    lqgrl train    --preset doyle --out f    policy search, one CSV row per trial
    lqgrl sweep    --preset doyle --out f    trains over perturbation levels
    lqgrl margins  --preset doyle --theta .. margins of a given policy
    lqgrl simulate --preset doyle --theta .. Monte-Carlo reward cross-check

Problems come either from a built-in preset or from a JSON config file
with flat row-major matrices and explicit dimensions. All commands are
deterministic functions of (config, seed). Exit codes: 0 success,
2 configuration error, 3 no stabilizing policy found, 4 unstable
nominal loop.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, LqgrlError, NotRepresentable, UnstableNominal
from .margins import analyze
from .policies import PolicyForm, PolicyParams, companion2, ctrb_canonical
from .presets import PRESET_NAMES, get_preset
from .records import (SweepRecord, format_float, summarize, write_summary_csv,
                      write_sweep_csv)
from .rewards import NEG_INF, PerturbationSpec, mc_reward
from .synthesis import lqg_cost, lqg_gains, to_companion
from .systems import PlantModel
from .training import Hypercube, StepPolicy, TrainConfig, train

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_POLICY = 3
EXIT_UNSTABLE = 4


@dataclass
class Experiment:
    """Fully resolved experiment description."""

    plant: PlantModel
    form: PolicyForm
    hypercube: Hypercube
    n_init: int
    n_steps: int
    eta: float
    b: float
    quadrature_order: int
    seed: int
    levels: list
    trials: int


_DEFAULT_LEVELS = [0.0, 0.1, 0.2, 0.3, 0.4]


def _flat_matrix(obj, rows, cols, where):
    if not isinstance(obj, list) or len(obj) != rows * cols:
        raise ConfigError(f"{where}: expected flat row-major list of {rows * cols} numbers")
    try:
        return np.array(obj, dtype=float).reshape(rows, cols)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: entries must be numbers") from None


def _require(mapping, key, where):
    if key not in mapping:
        raise ConfigError(f"{where}: missing required field {key!r}")
    return mapping[key]


def load_config(path) -> Experiment:
    """Parse and validate a JSON experiment config."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return _experiment_from_dict(raw, where=str(path))


def _experiment_from_dict(raw, where) -> Experiment:
    pd = _require(raw, "plant", where)
    dims = {}
    for key in ("n_x", "n_u", "n_w", "n_y"):
        val = _require(pd, key, f"{where}: plant")
        if not isinstance(val, int) or val < 1:
            raise ConfigError(f"{where}: plant.{key} must be a positive integer")
        dims[key] = val
    n_x, n_u, n_w, n_y = dims["n_x"], dims["n_u"], dims["n_w"], dims["n_y"]
    shapes = {"A": (n_x, n_x), "B": (n_x, n_u), "B_w": (n_x, n_w), "C": (n_y, n_x),
              "Q": (n_x, n_x), "R": (n_u, n_u), "W": (n_w, n_w), "V": (n_y, n_y)}
    mats = {}
    for name, (r, c) in shapes.items():
        mats[name] = _flat_matrix(_require(pd, name, f"{where}: plant"), r, c,
                                  f"{where}: plant.{name}")
    try:
        plant = PlantModel(**mats)
    except (ValueError, LqgrlError) as exc:
        raise ConfigError(f"{where}: plant: {exc}") from None

    fd = _require(raw, "form", where)
    kind = _require(fd, "kind", f"{where}: form")
    try:
        if kind == "companion2":
            form = companion2()
        elif kind == "ctrb_canonical":
            form = ctrb_canonical(int(fd.get("order", 3)))
        else:
            raise ValueError(f"unknown form kind {kind!r}")
    except ValueError as exc:
        raise ConfigError(f"{where}: form: {exc}") from None

    hd = _require(raw, "hypercube", where)
    try:
        cube = Hypercube(lower=_require(hd, "lower", f"{where}: hypercube"),
                         upper=_require(hd, "upper", f"{where}: hypercube"))
    except ValueError as exc:
        raise ConfigError(f"{where}: hypercube: {exc}") from None
    if cube.dim != form.dim:
        raise ConfigError(f"{where}: hypercube dimension {cube.dim} does not match "
                          f"form dimension {form.dim}")

    td = raw.get("train", {})
    sd = raw.get("sweep", {})
    try:
        exp = Experiment(
            plant=plant, form=form, hypercube=cube,
            n_init=int(td.get("n_init", 500)),
            n_steps=int(td.get("n_steps", 100)),
            eta=float(td.get("eta", 0.1)),
            b=float(td.get("b", 0.0)),
            quadrature_order=int(td.get("quadrature_order", 7)),
            seed=int(td.get("seed", 0)),
            levels=[float(x) for x in sd.get("levels", _DEFAULT_LEVELS)],
            trials=int(sd.get("trials", 20)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: train/sweep: {exc}") from None
    if exp.n_init < 1 or exp.n_steps < 1 or exp.trials < 1:
        raise ConfigError(f"{where}: n_init, n_steps and trials must be positive")
    if sorted(exp.levels) != exp.levels or any(b < 0 for b in exp.levels):
        raise ConfigError(f"{where}: sweep.levels must be nonnegative and ascending")
    return exp


def _experiment_from_preset(name) -> Experiment:
    try:
        preset = get_preset(name)
    except KeyError as exc:
        raise ConfigError(str(exc)) from None
    return Experiment(
        plant=preset.plant, form=preset.form, hypercube=preset.hypercube,
        n_init=preset.n_init, n_steps=preset.n_steps, eta=0.1, b=0.0,
        quadrature_order=7, seed=0, levels=list(_DEFAULT_LEVELS),
        trials=20 if name == "doyle" else 25,
    )


def _resolve_experiment(args) -> Experiment:
    if args.config is not None:
        exp = load_config(args.config)
    else:
        exp = _experiment_from_preset(args.preset)
    if getattr(args, "seed", None) is not None:
        exp.seed = args.seed
    if getattr(args, "trials", None) is not None:
        exp.trials = args.trials
    if getattr(args, "n_init", None) is not None:
        exp.n_init = args.n_init
    if getattr(args, "n_steps", None) is not None:
        exp.n_steps = args.n_steps
    return exp


def _train_config(exp: Experiment, b: float, seed: int) -> TrainConfig:
    return TrainConfig(
        hypercube=exp.hypercube, n_init=exp.n_init, n_steps=exp.n_steps,
        step=StepPolicy(eta=exp.eta),
        perturbation=PerturbationSpec(b=b, quadrature_order=exp.quadrature_order),
        seed=seed)


def _parse_theta(args, form: PolicyForm) -> PolicyParams:
    if args.theta is not None:
        try:
            values = [float(tok) for tok in args.theta.replace(",", " ").split()]
        except ValueError:
            raise ConfigError(f"--theta: cannot parse {args.theta!r}") from None
    elif args.theta_file is not None:
        try:
            values = [float(tok) for tok in open(args.theta_file).read().split()]
        except (OSError, ValueError) as exc:
            raise ConfigError(f"--theta-file: {exc}") from None
    else:
        raise ConfigError("provide --theta or --theta-file")
    try:
        return PolicyParams(theta=np.array(values), form=form)
    except (ValueError, LqgrlError) as exc:
        raise ConfigError(f"theta: {exc}") from None


def _fmt_vec(v):
    return "[" + ", ".join(f"{x:.6g}" for x in np.asarray(v).ravel()) + "]"


def _print_margins(rep, say):
    g_lo, g_hi = rep.gain_interval
    say(f"gain interval   = [{g_lo:.6g}, {g_hi:.6g}]")
    say(f"phase margin    = {rep.phase_margin_deg:.4g} deg "
        f"({rep.n_crossovers} crossover(s))")
    say(f"disk margin m_d = {rep.disk_margin:.6g} (alpha = {rep.disk_alpha:.6g})")


def cmd_lqg(args) -> int:
    exp = _resolve_experiment(args)
    say = (lambda *a: None) if args.quiet else print
    ctrl = lqg_gains(exp.plant)
    say("K =", _fmt_vec(ctrl.K))
    say("L =", _fmt_vec(ctrl.L))
    cost = lqg_cost(exp.plant, ctrl)
    say(f"J_LQG = {cost:.6g}")
    rep = analyze(exp.plant, ctrl.realization())
    _print_margins(rep, say)
    try:
        theta = to_companion(ctrl)
        say("theta_companion =", _fmt_vec(theta))
    except NotRepresentable as exc:
        say(f"companion form: not representable ({exc})")
    return EXIT_OK


def _margin_fields(plant, policy):
    rep = analyze(plant, policy.controller())
    return {"md": rep.disk_margin, "alpha": rep.disk_alpha,
            "gain_lo": rep.gain_interval[0], "gain_hi": rep.gain_interval[1],
            "phase_deg": rep.phase_margin_deg}


def _run_cells(exp, levels, trials, master_seed, say):
    rng = np.random.default_rng(master_seed)
    cells = [(b, t) for b in levels for t in range(trials)]
    cell_seeds = rng.integers(0, 2**63, size=len(cells))
    records = []
    for (b, trial), cell_seed in zip(cells, cell_seeds):
        result = train(exp.plant, exp.form, _train_config(exp, b, int(cell_seed)))
        if result.found_stabilizing:
            policy = PolicyParams(theta=result.theta_opt, form=exp.form)
            fields = _margin_fields(exp.plant, policy)
            rec = SweepRecord(b=b, trial=trial, seed=int(cell_seed),
                              J=result.J_opt, theta=result.theta_opt, **fields)
        else:
            rec = SweepRecord(b=b, trial=trial, seed=int(cell_seed),
                              J=NEG_INF, theta=result.theta_opt)
        say(f"  b={b:g} trial={trial}: " +
            (f"cost={rec.cost:.6g} md={rec.md:.6g}" if rec.md is not None
             else "no stabilizing policy"))
        records.append(rec)
    return records


def cmd_train(args) -> int:
    exp = _resolve_experiment(args)
    if args.b is not None:
        exp_b = _parse_levels(args.b)
        if len(exp_b) != 1:
            raise ConfigError("train takes a single --b value")
        b = exp_b[0]
    else:
        b = exp.b
    say = (lambda *a: None) if args.quiet else print
    say(f"training: {exp.trials} trial(s), n_init={exp.n_init}, "
        f"n_steps={exp.n_steps}, b={b:g}, seed={exp.seed}")
    records = _run_cells(exp, [b], exp.trials, exp.seed, say)
    if args.out:
        write_sweep_csv(args.out, records, exp.form.dim)
        say(f"wrote {args.out}")
    finite = [rec for rec in records if np.isfinite(rec.J)]
    if not finite:
        say("no trial found a stabilizing policy")
        return EXIT_NO_POLICY
    best = max(finite, key=lambda rec: rec.J)
    say(f"best: cost={best.cost:.17g} theta={_fmt_vec(best.theta)}")
    return EXIT_OK


def _parse_levels(text):
    try:
        levels = [float(tok) for tok in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"--b: cannot parse {text!r}") from None
    if not levels:
        raise ConfigError("--b: empty list")
    return levels


def cmd_sweep(args) -> int:
    exp = _resolve_experiment(args)
    levels = _parse_levels(args.b) if args.b is not None else exp.levels
    if sorted(levels) != levels or any(b < 0 for b in levels):
        raise ConfigError("--b levels must be nonnegative and ascending")
    say = (lambda *a: None) if args.quiet else print
    say(f"sweep: levels={levels} trials={exp.trials} n_init={exp.n_init} "
        f"n_steps={exp.n_steps} seed={exp.seed}")
    records = _run_cells(exp, levels, exp.trials, exp.seed, say)
    write_sweep_csv(args.out, records, exp.form.dim)
    say(f"wrote {args.out}")
    lqg = lqg_gains(exp.plant)
    rep = analyze(exp.plant, lqg.realization())
    rows = summarize(records, lqg_md=rep.disk_margin,
                     lqg_cost=lqg_cost(exp.plant, lqg))
    summary_path = _summary_path(args.out)
    write_summary_csv(summary_path, rows)
    say(f"wrote {summary_path}")
    return EXIT_OK


def _summary_path(out):
    out = str(out)
    if out.endswith(".csv"):
        return out[:-4] + ".summary.csv"
    return out + ".summary"


def cmd_margins(args) -> int:
    exp = _resolve_experiment(args)
    policy = _parse_theta(args, exp.form)
    say = (lambda *a: None) if args.quiet else print
    try:
        rep = analyze(exp.plant, policy.controller())
    except UnstableNominal:
        print("nominal closed loop is unstable", file=sys.stderr)
        return EXIT_UNSTABLE
    _print_margins(rep, say)
    return EXIT_OK


def cmd_simulate(args) -> int:
    exp = _resolve_experiment(args)
    policy = _parse_theta(args, exp.form)
    say = (lambda *a: None) if args.quiet else print
    est = mc_reward(exp.plant, policy, delta=args.delta, horizon=args.horizon,
                    episodes=args.episodes, seed=exp.seed)
    say(f"episodes={est.episodes} horizon={est.horizon} delta={args.delta:g}")
    print(f"reward mean = {format_float(est.mean)}")
    print(f"stderr      = {format_float(est.stderr)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lqgrl",
        description="Policy search, margins and sweeps for linear-Gaussian control")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, seed_default=None):
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", help="JSON experiment config")
        src.add_argument("--preset", choices=PRESET_NAMES, help="built-in example")
        p.add_argument("--seed", type=int, default=seed_default, help="master RNG seed")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")

    p = sub.add_parser("lqg", help="model-based LQG baseline and its margins")
    add_common(p)
    p.set_defaults(func=cmd_lqg)

    p = sub.add_parser("train", help="policy search at one perturbation level")
    add_common(p)
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--trials", type=int, help="independent training runs")
    p.add_argument("--b", help="perturbation level (single value)")
    p.add_argument("--n-init", dest="n_init", type=int, help="initializations per run")
    p.add_argument("--n-steps", dest="n_steps", type=int, help="ascent steps per start")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="train across perturbation levels")
    add_common(p)
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--b", help="comma-separated perturbation levels")
    p.add_argument("--trials", type=int, help="trials per level")
    p.add_argument("--n-init", dest="n_init", type=int, help="initializations per run")
    p.add_argument("--n-steps", dest="n_steps", type=int, help="ascent steps per start")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("margins", help="margins of a policy given by theta")
    add_common(p)
    p.add_argument("--theta", help="comma-separated parameter vector")
    p.add_argument("--theta-file", help="file with whitespace-separated parameters")
    p.set_defaults(func=cmd_margins)

    p = sub.add_parser("simulate", help="Monte-Carlo rollout reward estimate")
    add_common(p, seed_default=0)
    p.add_argument("--theta", help="comma-separated parameter vector")
    p.add_argument("--theta-file", help="file with whitespace-separated parameters")
    p.add_argument("--delta", type=float, default=0.0, help="input perturbation")
    p.add_argument("--horizon", type=int, default=100_000)
    p.add_argument("--episodes", type=int, default=1)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LqgrlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
