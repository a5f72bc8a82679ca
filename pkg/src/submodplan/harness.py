"""Seeded, repeatable experiment runner.

Builds one instance per repetition from a derived seed, runs every
configured algorithm on that same instance (paired comparison), and
aggregates mean and sample standard deviation per (environment, algorithm).
All randomness flows from (master seed, repetition), so the parallelism
degree never changes the outputs.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .baselines import dp_baseline, greedy_baseline
from .continuous_greedy import CgConfig, run as run_cg
from .environments import (
    build_synthetic,
    SyntheticSpec,
    build_nav,
    coverage_on_mdp,
    load_coverage,
    random_cardinality_instance,
    build_cardinality_mdp,
    resolve_map,
    sample_targets,
)
from .mdp import sample_trajectory, trajectory_indices
from .rng import derive_int
from .rounding import round_high, round_sub


@dataclass(frozen=True)
class AlgorithmSpec:
    """One algorithm column: kind cg | dp | greedy with its parameters."""

    kind: str
    delta: float = 0.01
    samples: int = 10
    rounding: str = "none"        # cg only: none | high | sub
    aug: int = 1                  # dp / greedy block length
    label: str = ""

    def resolved_label(self) -> str:
        if self.label:
            return self.label
        if self.kind == "cg":
            base = f"cg-{self.delta:g}-{self.samples}"
            return base if self.rounding == "none" else f"{base}-{self.rounding}"
        return f"{self.kind}-aug{self.aug}"

    def check(self):
        if self.kind not in ("cg", "dp", "greedy"):
            raise ValueError(f"unknown algorithm kind {self.kind!r}")
        if self.kind == "cg" and self.rounding not in ("none", "high", "sub"):
            raise ValueError(f"unknown rounding {self.rounding!r}")
        if self.kind != "cg" and self.aug < 1:
            raise ValueError("augmentation level must be >= 1")


@dataclass(frozen=True)
class EnvironmentSpec:
    """One environment column: kind synthetic | nav | cardinality."""

    kind: str
    n: int = 10
    t: int = 2
    d: int = 10
    lam: float = 1e-5
    k: int = 3
    map: str = ""
    targets: str = "random"       # nav: random (re-placed per repetition) | fixed
    universe: int = 12
    objective_file: str = ""
    label: str = ""

    def env_id(self) -> str:
        if self.label:
            return self.label
        if self.kind == "synthetic":
            return f"syn-{self.n}-{self.t}"
        if self.kind == "nav":
            name = os.path.splitext(os.path.basename(self.map))[0] or "map"
            return f"nav-{name}"
        return f"card-{self.n}-{self.k}"

    def check(self):
        if self.kind not in ("synthetic", "nav", "cardinality"):
            raise ValueError(f"unknown environment kind {self.kind!r}")
        if self.kind == "nav" and not self.map:
            raise ValueError("nav environment needs a map name or path")


@dataclass(frozen=True)
class ExperimentConfig:
    environments: tuple
    algorithms: tuple
    repetitions: int = 1
    seed: int = 0
    parallelism: int = 1
    output_dir: str = "results"
    record_timing: bool = False
    figures: bool = True

    def check(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        if not self.environments:
            raise ValueError("config needs at least one environment")
        if not self.algorithms:
            raise ValueError("config needs at least one algorithm")
        for env in self.environments:
            env.check()
        for alg in self.algorithms:
            alg.check()


@dataclass(frozen=True)
class ResultRow:
    env: str
    algorithm: str
    repetition: int
    seed: int
    value: float
    wall_ms: float
    error: str = ""


@dataclass(frozen=True)
class SummaryRow:
    env: str
    algorithm: str
    mean: float
    std: float
    n: int


@dataclass
class ExperimentResult:
    rows: list = field(default_factory=list)
    summary: list = field(default_factory=list)


def config_from_dict(raw: dict) -> ExperimentConfig:
    envs = raw.get("environments")
    if envs is None:
        envs = [raw["environment"]] if "environment" in raw else []
    algorithms = raw.get("algorithms", [])
    cfg = ExperimentConfig(
        environments=tuple(EnvironmentSpec(**e) for e in envs),
        algorithms=tuple(AlgorithmSpec(**a) for a in algorithms),
        repetitions=int(raw.get("repetitions", 1)),
        seed=int(raw.get("seed", 0)),
        parallelism=int(raw.get("parallelism", 1)),
        output_dir=str(raw.get("output", raw.get("output_dir", "results"))),
        record_timing=bool(raw.get("record_timing", False)),
        figures=bool(raw.get("figures", True)),
    )
    cfg.check()
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ValueError(f"config file {path} must hold a mapping")
    return config_from_dict(raw)


def build_environment(spec: EnvironmentSpec, rep_seed: int) -> tuple:
    """Instantiate (mdp, objective) for one repetition."""
    if spec.kind == "synthetic":
        return build_synthetic(SyntheticSpec(spec.n, spec.d, spec.t, spec.lam, rep_seed))
    if spec.kind == "nav":
        nav_map = resolve_map(spec.map)
        if spec.targets == "random":
            targets = sample_targets(nav_map, spec.d, seed=(rep_seed, 1))
        else:
            targets = nav_map.targets
        return build_nav(nav_map, spec.lam, targets=targets)
    if spec.kind == "cardinality":
        if spec.objective_file:
            covers, weights = load_coverage(spec.objective_file)
            mdp = build_cardinality_mdp(len(covers), spec.k)
            return mdp, coverage_on_mdp(mdp, covers, weights)
        mdp, obj, _, _ = random_cardinality_instance(
            spec.n, spec.k, spec.universe, seed=(rep_seed, 2)
        )
        return mdp, obj
    raise ValueError(f"unknown environment kind {spec.kind!r}")


def policy_value(mdp, obj, policy, samples: int = 200, seed=0) -> float:
    """True objective of a deterministic policy: exact on deterministic
    MDPs, Monte-Carlo rollouts otherwise."""
    if mdp.deterministic:
        traj = sample_trajectory(mdp, policy)
        return float(obj.evaluate(trajectory_indices(mdp, traj)))
    vals = [
        obj.evaluate(trajectory_indices(mdp, sample_trajectory(mdp, policy, derive_int(seed, r))))
        for r in range(samples)
    ]
    return float(np.mean(vals))


def mixture_value(mdp, obj, mixture) -> float:
    """Exact expected objective of a mixture on a deterministic MDP: the
    mean of the member trajectory values (identical members cached)."""
    if not mdp.deterministic:
        raise ValueError("exact mixture value needs deterministic transitions")
    cache = {}
    total = 0.0
    for member in mixture.members:
        key = member.key()
        if key not in cache:
            traj = sample_trajectory(mdp, member)
            cache[key] = obj.evaluate(trajectory_indices(mdp, traj))
        total += cache[key]
    return float(total / len(mixture.members))


def run_algorithm(mdp, obj, alg: AlgorithmSpec, rep_seed: int) -> float:
    """One algorithm on one instance; returns the true objective value of
    the produced policy (for unrounded cg, the exact mixture mean)."""
    if alg.kind == "cg":
        cfg = CgConfig(delta=alg.delta, samples=alg.samples, seed=rep_seed,
                       offset_mode="raw")
        result = run_cg(mdp, obj, cfg)
        if alg.rounding == "none":
            return mixture_value(mdp, obj, result.mixture)
        if alg.rounding == "high":
            policy = round_high(mdp, obj, result.mixture, seed=(rep_seed, 3))
        else:
            policy = round_sub(mdp, obj, result.y_final, seed=(rep_seed, 4))
        return policy_value(mdp, obj, policy)
    if alg.kind == "dp":
        return dp_baseline(mdp, obj, alg.aug)[1]
    if alg.kind == "greedy":
        return greedy_baseline(mdp, obj, alg.aug)[1]
    raise ValueError(f"unknown algorithm kind {alg.kind!r}")


def _run_cell(args) -> list:
    env_spec, algorithms, rep, master_seed, record_timing = args
    rep_seed = derive_int(master_seed, rep)
    rows = []
    try:
        mdp, obj = build_environment(env_spec, rep_seed)
        build_error = ""
    except Exception as exc:  # noqa: BLE001 - error rows, not crashes
        mdp = obj = None
        build_error = str(exc)
    for alg in algorithms:
        if build_error:
            rows.append(ResultRow(env_spec.env_id(), alg.resolved_label(), rep,
                                  rep_seed, math.nan, 0.0, build_error))
            continue
        start = time.perf_counter()
        try:
            value = run_algorithm(mdp, obj, alg, rep_seed)
            error = ""
        except Exception as exc:  # noqa: BLE001
            value = math.nan
            error = str(exc)
        wall = (time.perf_counter() - start) * 1000.0 if record_timing else 0.0
        rows.append(ResultRow(env_spec.env_id(), alg.resolved_label(), rep,
                              rep_seed, value, wall, error))
    return rows


def summarize(rows) -> list:
    by_key = {}
    for row in rows:
        by_key.setdefault((row.env, row.algorithm), []).append(row.value)
    out = []
    for (env, alg), values in sorted(by_key.items()):
        finite = np.array([v for v in values if math.isfinite(v)])
        if finite.size == 0:
            out.append(SummaryRow(env, alg, math.nan, math.nan, 0))
        else:
            std = float(finite.std(ddof=1)) if finite.size > 1 else 0.0
            out.append(SummaryRow(env, alg, float(finite.mean()), std, int(finite.size)))
    return out


def run_experiment(cfg: ExperimentConfig, progress=None) -> ExperimentResult:
    cfg.check()
    tasks = [
        (env, cfg.algorithms, rep, cfg.seed, cfg.record_timing)
        for env in cfg.environments
        for rep in range(cfg.repetitions)
    ]
    rows = []
    if cfg.parallelism == 1:
        for i, task in enumerate(tasks):
            rows.extend(_run_cell(task))
            if progress:
                progress(i + 1, len(tasks))
    else:
        with ProcessPoolExecutor(max_workers=cfg.parallelism) as pool:
            for i, cell in enumerate(pool.map(_run_cell, tasks)):
                rows.extend(cell)
                if progress:
                    progress(i + 1, len(tasks))
    rows.sort(key=lambda r: (r.env, r.algorithm, r.repetition))
    return ExperimentResult(rows, summarize(rows))


# ---------------------------------------------------------------------------
# Emission.  Numbers carry 6 significant digits; row order is deterministic,
# so identical results serialize to byte-identical files.
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def render_rows_csv(rows) -> str:
    lines = ["env,algorithm,repetition,seed,value,wall_ms"]
    for r in rows:
        lines.append(
            f"{r.env},{r.algorithm},{r.repetition},{r.seed},{_fmt(r.value)},{_fmt(r.wall_ms)}"
        )
    return "\n".join(lines) + "\n"


def render_summary_csv(summary) -> str:
    lines = ["env,algorithm,mean,std,n"]
    for s in summary:
        lines.append(f"{s.env},{s.algorithm},{_fmt(s.mean)},{_fmt(s.std)},{s.n}")
    return "\n".join(lines) + "\n"


def emit_results(result: ExperimentResult, out_dir, formats=("csv", "json")) -> list:
    """Write results.csv / summary.csv / results.json under out_dir; returns
    the written paths."""
    if not result.rows:
        raise ValueError("nothing to emit: no result rows")
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if "csv" in formats:
        rows_path = os.path.join(out_dir, "results.csv")
        with open(rows_path, "w", newline="\n") as fh:
            fh.write(render_rows_csv(result.rows))
        summary_path = os.path.join(out_dir, "summary.csv")
        with open(summary_path, "w", newline="\n") as fh:
            fh.write(render_summary_csv(result.summary))
        written += [rows_path, summary_path]
    if "json" in formats:
        payload = {
            "rows": [
                {
                    "env": r.env, "algorithm": r.algorithm, "repetition": r.repetition,
                    "seed": r.seed, "value": _float6(r.value), "wall_ms": _float6(r.wall_ms),
                    "error": r.error,
                }
                for r in result.rows
            ],
            "summary": [
                {"env": s.env, "algorithm": s.algorithm, "mean": _float6(s.mean),
                 "std": _float6(s.std), "n": s.n}
                for s in result.summary
            ],
        }
        json_path = os.path.join(out_dir, "results.json")
        with open(json_path, "w", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=True)
            fh.write("\n")
        written.append(json_path)
    return written


def _float6(x: float) -> float:
    return x if not math.isfinite(x) else float(f"{x:.6g}")


def emit_figures(result: ExperimentResult, out_dir) -> list:
    """One bar chart of mean +/- std per environment, next to the CSVs."""
    from .render import summary_figure

    os.makedirs(out_dir, exist_ok=True)
    written = []
    envs = sorted({s.env for s in result.summary})
    for env in envs:
        path = os.path.join(out_dir, f"values_{env}.png")
        summary_figure([s for s in result.summary if s.env == env], env, path)
        written.append(path)
    return written
