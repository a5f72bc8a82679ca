"""Discretized continuous greedy for submodular planning.

Runs T = 1/delta iterations; each iteration estimates the extension
gradient at the current marginal point, plans a deterministic policy that
maximizes the induced linear reward by exact DP, and moves the marginal
point a delta step toward that policy's visit vector.  The output is the
uniform mixture of the per-iteration policies together with the final
marginal point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dp import solve_linear
from .mdp import LeveledMdp, MixturePolicy, policy_marginals
from .multilinear import estimate_gradient, estimate_value
from .objectives import Objective, OffsetObjective
from .rng import derive_int

DELTA_ATOL = 1e-9


@dataclass(frozen=True)
class CgConfig:
    """Knobs of the greedy loop.

    delta : step size in (0, 1]; 1/delta must be an integer T.
    samples : Monte-Carlo sample count R per gradient estimate.
    seed : master seed; gradient streams are derived as (seed, t, sample).
    gradient_mode : "monte-carlo" or "exact-when-available".
    offset_mode : "nonnegative-shift" adds -f(empty) to the objective for
        the extension estimates (gains and argmaxes are unaffected); "raw"
        keeps the objective as given.
    shared_batch : reuse one sample batch across coordinates per iteration.
    eval_samples : fresh samples for the final extension estimate.
    restarts : independent repetitions, keeping the best estimated result.
    trace_path : optional CSV (t, linear value, estimated extension).
    """

    delta: float = 0.01
    samples: int = 10
    seed: int = 0
    gradient_mode: str = "monte-carlo"
    offset_mode: str = "nonnegative-shift"
    shared_batch: bool = True
    eval_samples: int = 1000
    restarts: int = 1
    trace_path: str | None = None

    def iterations(self) -> int:
        t = round(1.0 / self.delta)
        if not 0.0 < self.delta <= 1.0 or abs(t * self.delta - 1.0) > DELTA_ATOL:
            raise ValueError(f"delta must be in (0, 1] with 1/delta integral, got {self.delta}")
        return t

    def check(self) -> None:
        self.iterations()
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.eval_samples < 1:
            raise ValueError("eval_samples must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.gradient_mode not in ("monte-carlo", "exact-when-available"):
            raise ValueError(f"unknown gradient_mode {self.gradient_mode!r}")
        if self.offset_mode not in ("raw", "nonnegative-shift"):
            raise ValueError(f"unknown offset_mode {self.offset_mode!r}")


@dataclass(frozen=True)
class IterationRecord:
    t: int
    linear_value: float
    w_min: float
    w_mean: float
    w_max: float
    policy: object


@dataclass(frozen=True)
class CgResult:
    """Mixture of the T per-iteration policies, the final marginal point
    (the exact mean of the member marginals), per-iteration records, and a
    fresh-sample estimate of the extension at the final point."""

    mixture: MixturePolicy
    y_final: np.ndarray
    per_iteration: tuple
    estimated_extension: float


def _working_objective(obj: Objective, cfg: CgConfig) -> Objective:
    if cfg.offset_mode == "nonnegative-shift" and obj.empty_value() != 0.0:
        return OffsetObjective(obj)
    return obj


def _run_once(mdp: LeveledMdp, obj: Objective, cfg: CgConfig, seed: int) -> CgResult:
    gs = mdp.ground_set
    T = cfg.iterations()
    work = _working_objective(obj, cfg)
    marginal_sum = np.zeros(gs.size)
    members = []
    records = []
    trace = []
    for t in range(1, T + 1):
        y = np.clip(marginal_sum / T, 0.0, 1.0)
        grad = estimate_gradient(
            work, y,
            samples=cfg.samples,
            seed=(seed, t),
            mode=cfg.gradient_mode,
            shared_batch=cfg.shared_batch,
        )
        policy, linear_value = solve_linear(mdp, grad.w)
        marginal_sum += policy_marginals(mdp, policy)
        members.append(policy)
        records.append(IterationRecord(
            t, linear_value,
            float(grad.w.min()), float(grad.w.mean()), float(grad.w.max()),
            policy,
        ))
        if cfg.trace_path is not None:
            y_t = np.clip(marginal_sum / T, 0.0, 1.0)
            # Trace streams use iteration keys above T so they never collide
            # with the gradient streams (seed, 1..T, *).
            trace.append((t, linear_value,
                          estimate_value(work, y_t, cfg.eval_samples, (seed, T + 1 + t))))
    y_final = np.clip(marginal_sum / T, 0.0, 1.0)
    estimated = estimate_value(work, y_final, cfg.eval_samples, (seed, 0))
    if cfg.trace_path is not None:
        with open(cfg.trace_path, "w") as fh:
            fh.write("t,linear_value,estimated_extension\n")
            for t, lin, fhat in trace:
                fh.write(f"{t},{lin:.6g},{fhat:.6g}\n")
    return CgResult(MixturePolicy(tuple(members)), y_final, tuple(records), estimated)


def run(mdp: LeveledMdp, obj: Objective, cfg: CgConfig) -> CgResult:
    """Run the greedy loop (with optional restarts) and return the best result.

    Restart 0 uses cfg.seed directly (so documented streams stay
    (seed, iteration, sample) and extra restarts only ever add candidates);
    restart k > 0 uses the derived seed (cfg.seed, 1, k).
    """
    cfg.check()
    if obj.size != mdp.ground_set.size:
        raise ValueError(
            f"objective ground set size {obj.size} != MDP ground set size {mdp.ground_set.size}"
        )
    best = None
    for k in range(cfg.restarts):
        seed = cfg.seed if k == 0 else derive_int(cfg.seed, 1, k)
        res = _run_once(mdp, obj, cfg, seed)
        if best is None or res.estimated_extension > best.estimated_extension:
            best = res
    return best
