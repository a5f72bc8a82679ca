"""Rounding a mixture policy to a single deterministic policy.

Two schemes for deterministic-transition MDPs:

* highest-member: evaluate every mixture member and keep the best;
* sub-trajectory mass shifting: treat the marginal vector as a unit flow on
  the level DAG and repeatedly move probability mass between two divergent
  sub-trajectories until the flow is integral, keeping whichever direction
  scores a larger extension value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mdp import (
    DeterministicPolicy,
    LeveledMdp,
    MixturePolicy,
    sample_trajectory,
    trajectory_indices,
)
from .dp import fill_policy
from .multilinear import extension_value
from .rng import derive_int, derive_rng

FLOW_ATOL = 1e-9
FLOW_ZERO = 1e-12


def conservation_error(mdp: LeveledMdp, y) -> float:
    """Largest absolute inflow/outflow mismatch of y read as a flow, where
    the initial state's inflow is defined as 1."""
    y = np.asarray(y, dtype=float)
    gs = mdp.ground_set
    inflow = {sid: 0.0 for sid in mdp.state_ids}
    inflow[mdp.initial] = 1.0
    for e, (sid, act) in enumerate(gs.pairs):
        inflow[mdp.successor(sid, act)] += y[e]
    worst = 0.0
    for sid in mdp.state_ids:
        if not mdp.acting[sid]:
            continue
        out = sum(y[gs.index[(sid, a)]] for a in mdp.actions[sid])
        worst = max(worst, abs(out - inflow[sid]))
    return worst


def flow_violations(mdp: LeveledMdp, y, tol: float = FLOW_ATOL) -> list:
    """Conservation and range violations of y read as a flow on the DAG.

    Inflow of the initial state is defined as 1; every acting state must
    route its inflow through its action pairs exactly.
    """
    if not mdp.deterministic:
        return ["flow interpretation requires deterministic transitions"]
    y = np.asarray(y, dtype=float)
    gs = mdp.ground_set
    problems = []
    if np.any(y < -tol) or np.any(y > 1.0 + tol):
        problems.append("flow entries outside [0, 1]")
    inflow = {sid: 0.0 for sid in mdp.state_ids}
    inflow[mdp.initial] = 1.0
    for e, (sid, act) in enumerate(gs.pairs):
        inflow[mdp.successor(sid, act)] += y[e]
    for sid in mdp.state_ids:
        if not mdp.acting[sid]:
            continue
        out = sum(y[gs.index[(sid, a)]] for a in mdp.actions[sid])
        if abs(out - inflow[sid]) > tol:
            problems.append(
                f"state {sid}: outflow {out!r} != inflow {inflow[sid]!r}"
            )
    return problems


def round_high(mdp: LeveledMdp, obj, mixture: MixturePolicy, eval_samples: int = 100,
               seed=0) -> DeterministicPolicy:
    """The mixture member with the highest objective value (earliest on ties).

    On deterministic MDPs each member is scored exactly on its trajectory;
    otherwise by `eval_samples` Monte-Carlo rollouts per member.
    """
    best = None
    best_member = None
    cache = {}
    for k, member in enumerate(mixture.members):
        key = member.key()
        if key in cache:
            score = cache[key]
        elif mdp.deterministic:
            traj = sample_trajectory(mdp, member)
            score = obj.evaluate(trajectory_indices(mdp, traj))
            cache[key] = score
        else:
            vals = [
                obj.evaluate(trajectory_indices(mdp, sample_trajectory(mdp, member, derive_int(seed, k, r))))
                for r in range(eval_samples)
            ]
            score = float(np.mean(vals))
            cache[key] = score
        if best is None or score > best:
            best = score
            best_member = member
    return best_member


@dataclass
class SubRoundingStats:
    """Diagnostics of one sub-trajectory rounding run."""

    shifts: int = 0
    extension_values: list = field(default_factory=list)
    max_conservation_error: float = 0.0


def _find_branch_state(mdp, y, gs):
    """Walk the flow from the initial state; return the first state whose
    flow splits over >= 2 actions, or None if the flow is a single path."""
    sid = mdp.initial
    while mdp.acting[sid]:
        positive = [a for a in mdp.actions[sid] if y[gs.index[(sid, a)]] > 0.0]
        if not positive:
            raise ValueError(f"not a valid flow: no outflow at reached state {sid}")
        if len(positive) >= 2:
            return sid
        sid = mdp.successor(sid, positive[0])
    return None


def _heaviest_action(mdp, y, gs, sid):
    best = None
    best_act = None
    for a in mdp.actions[sid]:
        v = y[gs.index[(sid, a)]]
        if v > 0.0 and (best is None or v > best):
            best = v
            best_act = a
    return best_act


def _trace_branches(mdp, y, gs, branch_state):
    """Two pair-index lists starting with the two heaviest actions at the
    branch state, each following the heaviest positive action forward, until
    the branches meet again or hit the last level."""
    flows = sorted(
        ((y[gs.index[(branch_state, a)]], i, a) for i, a in enumerate(mdp.actions[branch_state])
         if y[gs.index[(branch_state, a)]] > 0.0),
        key=lambda t: (-t[0], t[1]),
    )
    a1, a2 = flows[0][2], flows[1][2]
    paths = ([gs.index[(branch_state, a1)]], [gs.index[(branch_state, a2)]])
    heads = [mdp.successor(branch_state, a1), mdp.successor(branch_state, a2)]
    while heads[0] != heads[1] and mdp.acting[heads[0]] and mdp.acting[heads[1]]:
        for b in (0, 1):
            act = _heaviest_action(mdp, y, gs, heads[b])
            if act is None:
                raise ValueError(f"not a valid flow: no outflow at state {heads[b]}")
            paths[b].append(gs.index[(heads[b], act)])
            heads[b] = mdp.successor(heads[b], act)
    return paths[0], paths[1]


def round_sub(mdp: LeveledMdp, obj, y, round_samples: int = 100, seed=0,
              stats: SubRoundingStats | None = None) -> DeterministicPolicy:
    """Round a fractional flow to a deterministic policy by sub-trajectory
    mass shifting.

    Each step finds the first branching state, traces the two heaviest
    sub-trajectories until they reconverge, and shifts mass from one onto
    the other until some pair on the donor reaches zero; of the two shift
    directions the one with the larger extension value is kept (exact
    extension when available or the ground set is small, otherwise a
    `round_samples` Monte-Carlo estimate).  At most one shift per ground-set
    element is needed before the flow is integral.
    """
    if not mdp.deterministic:
        raise ValueError("SUB requires deterministic transitions")
    problems = flow_violations(mdp, y)
    if problems:
        raise ValueError(f"not a valid flow: {problems[0]}")
    gs = mdp.ground_set
    y = np.clip(np.asarray(y, dtype=float).copy(), 0.0, 1.0)
    y[y < FLOW_ZERO] = 0.0
    if stats is not None:
        stats.extension_values.append(extension_value(obj, y, round_samples, derive_int(seed, 0)))
    shifts = 0
    while True:
        branch_state = _find_branch_state(mdp, y, gs)
        if branch_state is None:
            break
        if shifts >= gs.size:
            raise RuntimeError("sub-trajectory rounding failed to terminate")
        path_a, path_b = _trace_branches(mdp, y, gs, branch_state)
        candidates = []
        for donor, receiver in ((path_a, path_b), (path_b, path_a)):
            eps = min(y[e] for e in donor)
            cand = y.copy()
            for e in donor:
                cand[e] -= eps
            for e in receiver:
                cand[e] += eps
            np.clip(cand, 0.0, 1.0, out=cand)
            cand[cand < FLOW_ZERO] = 0.0
            candidates.append(cand)
        shifts += 1
        scores = [
            extension_value(obj, cand, round_samples, derive_int(seed, shifts, k))
            for k, cand in enumerate(candidates)
        ]
        y = candidates[0] if scores[0] >= scores[1] else candidates[1]
        if stats is not None:
            stats.shifts = shifts
            stats.extension_values.append(max(scores))
            stats.max_conservation_error = max(
                stats.max_conservation_error, conservation_error(mdp, y)
            )
    # Read off the integral flow as a policy along the reached path.
    choice = {}
    sid = mdp.initial
    while mdp.acting[sid]:
        act = _heaviest_action(mdp, y, gs, sid)
        choice[sid] = act
        sid = mdp.successor(sid, act)
    return fill_policy(mdp, choice)
