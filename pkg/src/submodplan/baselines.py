"""Classical comparison planners on deterministic-transition MDPs.

Both treat blocks of l consecutive primitive actions as one macro decision:
the DP baseline plans exactly against the per-block objective value of the
block alone, the greedy baseline extends its realized prefix one block at a
time.  Reported values are always the true objective of the realized
trajectory, never the planning surrogate.
"""

from __future__ import annotations

from .dp import fill_policy
from .mdp import LeveledMdp
from .objectives import AdditiveObjective, LogDetObjective, OffsetObjective


def _require_deterministic(mdp: LeveledMdp) -> None:
    if not mdp.deterministic:
        raise ValueError("baselines require deterministic transitions")


def _require_block_rewardable(obj) -> None:
    base = obj.base if isinstance(obj, OffsetObjective) else obj
    if not isinstance(base, (LogDetObjective, AdditiveObjective)):
        raise ValueError("baseline requires matrix or additive rewards")


def feasible_blocks(mdp: LeveledMdp, sid, length: int) -> list:
    """All feasible action tuples of `length` steps from sid (shorter only
    when the terminal level cuts the block off), in lexicographic order of
    action positions.  Each entry is (actions, pair indices, end state)."""
    gs = mdp.ground_set
    out = []

    def recurse(state, acts, pairs):
        if len(acts) == length or not mdp.acting[state]:
            if acts:
                out.append((tuple(acts), tuple(pairs), state))
            return
        for act in mdp.actions[state]:
            acts.append(act)
            pairs.append(gs.index[(state, act)])
            recurse(mdp.successor(state, act), acts, pairs)
            acts.pop()
            pairs.pop()

    recurse(sid, [], [])
    return out


def dp_baseline(mdp: LeveledMdp, obj, level: int = 1) -> tuple:
    """Exact DP over macro steps of `level` primitive actions.

    The reward of a block is the objective value of the block's pairs
    alone; with level=1 and an additive objective this is exactly the
    classical optimal planner.  Returns (policy, true objective value of
    the realized trajectory).  Ties keep the lexicographically smallest
    action tuple.
    """
    _require_deterministic(mdp)
    _require_block_rewardable(obj)
    if level < 1:
        raise ValueError("augmentation level must be >= 1")
    memo = {}

    def best_from(sid):
        if not mdp.acting[sid]:
            return 0.0, None
        if sid in memo:
            return memo[sid]
        best = None
        for acts, pairs, end in feasible_blocks(mdp, sid, level):
            val = obj.evaluate(pairs) + best_from(end)[0]
            if best is None or val > best[0]:
                best = (val, (acts, end))
        memo[sid] = best
        return best

    choice = {}
    path_pairs = []
    sid = mdp.initial
    gs = mdp.ground_set
    while mdp.acting[sid]:
        _, (acts, _end) = best_from(sid)
        for act in acts:
            choice[sid] = act
            path_pairs.append(gs.index[(sid, act)])
            sid = mdp.successor(sid, act)
    return fill_policy(mdp, choice), float(obj.evaluate(path_pairs))


def greedy_baseline(mdp: LeveledMdp, obj, level: int = 1) -> tuple:
    """Forward greedy: at each macro step take the feasible block that
    maximizes the objective of everything visited so far plus the block.

    Works with any objective that supports evaluate().  Returns (policy,
    true objective value); ties keep the lexicographically smallest tuple.
    """
    _require_deterministic(mdp)
    if level < 1:
        raise ValueError("augmentation level must be >= 1")
    visited = []
    choice = {}
    sid = mdp.initial
    while mdp.acting[sid]:
        best = None
        for acts, pairs, end in feasible_blocks(mdp, sid, level):
            val = obj.evaluate(visited + list(pairs))
            if best is None or val > best[0]:
                best = (val, acts, pairs, end)
        _, acts, pairs, end = best
        cur = sid
        for act in acts:
            choice[cur] = act
            cur = mdp.successor(cur, act)
        visited.extend(pairs)
        sid = end
    return fill_policy(mdp, choice), float(obj.evaluate(visited))
