"""Exact planners for leveled MDPs: backward-induction DP for additive
per-pair rewards, and a brute-force trajectory enumerator used as a test
oracle on deterministic instances."""

from __future__ import annotations

import numpy as np

from .mdp import DeterministicPolicy, LeveledMdp


def solve_linear(mdp: LeveledMdp, w) -> tuple:
    """Maximize the expected sum of per-pair weights; returns (policy, value).

    Backward induction V(s) = max_a [w(s,a) + sum_s' P(s'|s,a) V(s')] with
    V = 0 at terminal states.  Weights may be negative.  Ties are broken
    toward the lowest action index so repeated runs are reproducible.
    """
    w = np.asarray(w, dtype=float)
    gs = mdp.ground_set
    if w.size != gs.size:
        raise ValueError(f"weight vector size {w.size} != ground set size {gs.size}")
    value = {}
    choice = {}
    for h in range(mdp.levels, 0, -1):
        for sid in mdp.states_by_level.get(h, ()):
            if not mdp.acting[sid]:
                value[sid] = 0.0
                continue
            best = None
            best_act = None
            for act in mdp.actions[sid]:
                q = w[gs.index[(sid, act)]]
                for nxt, p in mdp.transition(sid, act):
                    q += p * value[nxt]
                if best is None or q > best:
                    best = q
                    best_act = act
            value[sid] = best
            choice[sid] = best_act
    return DeterministicPolicy(choice), float(value[mdp.initial])


def _count_paths(mdp: LeveledMdp) -> int:
    counts = {}
    for h in range(mdp.levels, 0, -1):
        for sid in mdp.states_by_level.get(h, ()):
            if not mdp.acting[sid]:
                counts[sid] = 1
            else:
                counts[sid] = sum(counts[mdp.successor(sid, a)] for a in mdp.actions[sid])
    return counts[mdp.initial]


def fill_policy(mdp: LeveledMdp, choice: dict) -> DeterministicPolicy:
    """Total policy from a partial action table; unassigned acting states
    fall back to their first legal action."""
    full = {}
    for sid in mdp.state_ids:
        if mdp.acting[sid]:
            full[sid] = choice.get(sid, mdp.actions[sid][0])
    return DeterministicPolicy(full)


def brute_force_plan(mdp: LeveledMdp, obj, max_paths: int = 10**6) -> tuple:
    """Exact optimum over deterministic policies by enumerating every
    trajectory of a deterministic-transition MDP; returns (policy, value).

    Intended as an oracle for tests and small instances.  Ties keep the
    first path in depth-first action order.
    """
    if not mdp.deterministic:
        raise ValueError("brute_force_plan requires deterministic transitions")
    n_paths = _count_paths(mdp)
    if n_paths > max_paths:
        raise RuntimeError(f"enumeration infeasible: {n_paths} paths > {max_paths}")
    gs = mdp.ground_set
    best_value = None
    best_path = None

    def recurse(sid, pairs):
        nonlocal best_value, best_path
        if not mdp.acting[sid]:
            val = obj.evaluate(pairs)
            if best_value is None or val > best_value:
                best_value = val
                best_path = list(pairs)
            return
        for act in mdp.actions[sid]:
            pairs.append(gs.index[(sid, act)])
            recurse(mdp.successor(sid, act), pairs)
            pairs.pop()

    recurse(mdp.initial, [])
    choice = {gs.pairs[e][0]: gs.pairs[e][1] for e in best_path}
    return fill_policy(mdp, choice), float(best_value)
