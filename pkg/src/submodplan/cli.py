"""Command-line harness.

Subcommands: plan (single seeded run), bench (full experiment from a YAML
config, CSV/JSON plus figures), render (map and trajectory to ASCII or
PNG), validate (check an MDP or map file).  Exit codes: 0 success, 1 usage
error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .baselines import dp_baseline, greedy_baseline
from .environments import load_map, resolve_map
from .harness import (
    AlgorithmSpec,
    EnvironmentSpec,
    ExperimentConfig,
    build_environment,
    emit_figures,
    emit_results,
    load_config,
    run_algorithm,
    run_experiment,
)
from .mdp import load_mdp, sample_trajectory, validate
from .rng import derive_int


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_env_args(sub):
    sub.add_argument("--env", choices=["synthetic", "nav", "cardinality"],
                     default="synthetic")
    sub.add_argument("--n", type=int, default=10, help="grid side / element count")
    sub.add_argument("--t", type=int, default=2, help="synthetic sparse multiplicity")
    sub.add_argument("--d", type=int, default=10, help="reward dimension / target count")
    sub.add_argument("--lam", type=float, default=1e-5, help="log-det regularizer")
    sub.add_argument("--k", type=int, default=3, help="cardinality budget")
    sub.add_argument("--map", default="", help="map path or packaged name (nav)")
    sub.add_argument("--objective-file", default="", help="coverage file (cardinality)")
    sub.add_argument("--universe", type=int, default=12,
                     help="random coverage universe size (cardinality)")


def _env_spec(args) -> EnvironmentSpec:
    return EnvironmentSpec(
        kind=args.env, n=args.n, t=args.t, d=args.d, lam=args.lam, k=args.k,
        map=args.map, universe=args.universe, objective_file=args.objective_file,
    )


def _alg_spec(args) -> AlgorithmSpec:
    return AlgorithmSpec(
        kind=args.algorithm, delta=args.delta, samples=args.samples,
        rounding=args.rounding, aug=args.aug,
    )


def _cmd_plan(args) -> int:
    env = _env_spec(args)
    env.check()
    alg = _alg_spec(args)
    alg.check()
    rep_seed = derive_int(args.seed, 0)
    mdp, obj = build_environment(env, rep_seed)
    value = run_algorithm(mdp, obj, alg, rep_seed)
    print(f"env={env.env_id()} algorithm={alg.resolved_label()} seed={args.seed} "
          f"value={value:.6g}")
    return 0


def _cmd_bench(args) -> int:
    cfg = load_config(args.config)
    overrides = {}
    if args.output:
        overrides["output_dir"] = args.output
    if args.parallelism:
        overrides["parallelism"] = args.parallelism
    if overrides:
        from dataclasses import replace

        cfg = replace(cfg, **overrides)
    progress = None
    if not args.quiet:
        def progress(done, total):
            print(f"\r{done}/{total} cells", end="", file=sys.stderr, flush=True)
    result = run_experiment(cfg, progress=progress)
    if not args.quiet:
        print(file=sys.stderr)
    written = emit_results(result, cfg.output_dir)
    if cfg.figures and not args.no_figures:
        written += emit_figures(result, cfg.output_dir)
    for s in result.summary:
        print(f"{s.env} {s.algorithm}: mean={s.mean:.6g} std={s.std:.6g} n={s.n}")
    failures = [r for r in result.rows if r.error]
    for r in failures:
        print(f"error: {r.env}/{r.algorithm} rep {r.repetition}: {r.error}",
              file=sys.stderr)
    print("wrote " + " ".join(written))
    return 0


def _cmd_render(args) -> int:
    nav_map = resolve_map(args.map)
    traj = None
    if args.actions:
        traj = _trajectory_from_actions(nav_map, args.actions)
    elif args.algorithm:
        env = EnvironmentSpec(kind="nav", map=args.map, d=args.d, lam=args.lam,
                              targets="fixed" if nav_map.targets else "random")
        rep_seed = derive_int(args.seed, 0)
        mdp, obj = build_environment(env, rep_seed)
        alg = AlgorithmSpec(kind=args.algorithm, delta=args.delta,
                            samples=args.samples, rounding=args.rounding, aug=args.aug)
        alg.check()
        policy = _final_policy(mdp, obj, alg, rep_seed)
        traj = sample_trajectory(mdp, policy)
    from .render import render_trajectory

    if args.format == "ascii":
        print(render_trajectory(nav_map, traj, fmt="ascii"), end="")
        return 0
    if not args.out:
        raise ValueError("--out is required for png output")
    data = render_trajectory(nav_map, traj, fmt="png", scale=args.scale)
    with open(args.out, "wb") as fh:
        fh.write(data)
    print(f"wrote {args.out}")
    return 0


def _final_policy(mdp, obj, alg: AlgorithmSpec, rep_seed: int):
    from .continuous_greedy import CgConfig, run as run_cg
    from .rounding import round_high, round_sub

    if alg.kind == "cg":
        result = run_cg(mdp, obj, CgConfig(delta=alg.delta, samples=alg.samples,
                                           seed=rep_seed, offset_mode="raw"))
        if alg.rounding == "sub":
            return round_sub(mdp, obj, result.y_final, seed=(rep_seed, 4))
        return round_high(mdp, obj, result.mixture, seed=(rep_seed, 3))
    if alg.kind == "dp":
        return dp_baseline(mdp, obj, alg.aug)[0]
    return greedy_baseline(mdp, obj, alg.aug)[0]


def _trajectory_from_actions(nav_map, actions: str):
    from .environments import build_nav

    targets = nav_map.targets or ((1, 1),)
    mdp, _obj = build_nav(nav_map, targets=targets)
    sid = mdp.initial
    pairs = []
    for ch in actions:
        act = ch.upper()
        if not mdp.acting[sid]:
            raise ValueError("action string longer than the map walk")
        if act not in mdp.actions[sid]:
            raise ValueError(f"action {act} not legal at {sid}")
        pairs.append((sid, act))
        sid = mdp.successor(sid, act)
    from .mdp import Trajectory

    return Trajectory(tuple(pairs), sid)


def _cmd_validate(args) -> int:
    if bool(args.mdp) == bool(args.map):
        raise ValueError("validate needs exactly one of --mdp or --map")
    if args.mdp:
        problems = validate(load_mdp(args.mdp))
        label = args.mdp
    else:
        nav_map = load_map(args.map)
        problems = []
        try:
            from .environments import build_nav

            targets = nav_map.targets or ((1, 1),)
            build_nav(nav_map, targets=targets)
        except ValueError as exc:
            problems.append(str(exc))
        label = args.map
    if problems:
        print(f"{label}: {len(problems)} problem(s)")
        for p in problems:
            print(f"  - {p}")
        return 2
    print(f"{label}: ok")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="submodplan",
                     description="Planning with submodular trajectory objectives.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    plan = subs.add_parser("plan", help="run one algorithm on one seeded instance")
    _add_env_args(plan)
    plan.add_argument("--algorithm", choices=["cg", "dp", "greedy"], default="cg")
    plan.add_argument("--delta", type=float, default=0.01)
    plan.add_argument("--samples", type=int, default=10)
    plan.add_argument("--rounding", choices=["none", "high", "sub"], default="none")
    plan.add_argument("--aug", type=int, default=1)
    plan.add_argument("--seed", type=int, default=0)
    plan.set_defaults(func=_cmd_plan)

    bench = subs.add_parser("bench", help="run a full experiment from a config file")
    bench.add_argument("--config", required=True)
    bench.add_argument("--output", default="", help="override the config output dir")
    bench.add_argument("--parallelism", type=int, default=0)
    bench.add_argument("--no-figures", action="store_true")
    bench.add_argument("--quiet", action="store_true")
    bench.set_defaults(func=_cmd_bench)

    render = subs.add_parser("render", help="draw a map and trajectory")
    render.add_argument("--map", required=True)
    render.add_argument("--actions", default="", help="explicit action string, e.g. RRDD")
    render.add_argument("--algorithm", choices=["", "cg", "dp", "greedy"], default="")
    render.add_argument("--delta", type=float, default=0.01)
    render.add_argument("--samples", type=int, default=10)
    render.add_argument("--rounding", choices=["none", "high", "sub"], default="high")
    render.add_argument("--aug", type=int, default=1)
    render.add_argument("--d", type=int, default=10)
    render.add_argument("--lam", type=float, default=1e-5)
    render.add_argument("--seed", type=int, default=0)
    render.add_argument("--format", choices=["ascii", "png"], default="ascii")
    render.add_argument("--scale", type=int, default=16)
    render.add_argument("--out", default="")
    render.set_defaults(func=_cmd_render)

    val = subs.add_parser("validate", help="check an MDP or map file")
    val.add_argument("--mdp", default="")
    val.add_argument("--map", default="")
    val.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError, KeyError) as exc:
        print(f"submodplan: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
