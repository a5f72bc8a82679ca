"""Random instance generators shared by the tests."""

from __future__ import annotations

import numpy as np

from submodplan.mdp import DeterministicPolicy, LeveledMdp
from submodplan.objectives import CoverageObjective


def chain_mdp(length: int = 3) -> LeveledMdp:
    """Single-path MDP: one state and one action per level."""
    states = [(f"c{h}", h, h < length) for h in range(1, length + 1)]
    actions = {f"c{h}": ["go"] for h in range(1, length)}
    transitions = {(f"c{h}", "go"): {f"c{h + 1}": 1.0} for h in range(1, length)}
    return LeveledMdp(length, states, actions, transitions, "c1")


def random_leveled_mdp(rng, levels=None, width=3, max_actions=2,
                       stochastic=False) -> LeveledMdp:
    """Random leveled MDP; all states act except the last level."""
    levels = levels or int(rng.integers(3, 5))
    names = {}
    states = []
    for h in range(1, levels + 1):
        count = 1 if h == 1 else int(rng.integers(1, width + 1))
        names[h] = [f"s{h}_{i}" for i in range(count)]
        for sid in names[h]:
            states.append((sid, h, h < levels))
    actions = {}
    transitions = {}
    for h in range(1, levels):
        for sid in names[h]:
            acts = [f"a{k}" for k in range(int(rng.integers(1, max_actions + 1)))]
            actions[sid] = acts
            for act in acts:
                targets = names[h + 1]
                if stochastic and len(targets) > 1 and rng.random() < 0.7:
                    support = rng.choice(len(targets), size=min(2, len(targets)),
                                         replace=False)
                    probs = rng.dirichlet(np.ones(len(support)))
                    transitions[(sid, act)] = {
                        targets[int(t)]: float(p) for t, p in zip(support, probs)
                    }
                else:
                    transitions[(sid, act)] = {targets[int(rng.integers(len(targets)))]: 1.0}
    return LeveledMdp(levels, states, actions, transitions, names[1][0])


def random_policy(mdp: LeveledMdp, rng) -> DeterministicPolicy:
    return DeterministicPolicy({
        sid: mdp.actions[sid][int(rng.integers(len(mdp.actions[sid])))]
        for sid in mdp.state_ids if mdp.acting[sid]
    })


def random_coverage(m: int, universe: int, rng, density: float = 0.3) -> CoverageObjective:
    cover = [np.flatnonzero(rng.random(universe) < density).tolist() for _ in range(m)]
    return CoverageObjective(cover, rng.uniform(0.5, 1.5, size=universe))


def grid_policy(mdp: LeveledMdp, first: str) -> DeterministicPolicy:
    """Grid policy taking `first` when legal, the other move otherwise."""
    choice = {}
    for sid in mdp.state_ids:
        if not mdp.acting[sid]:
            continue
        acts = mdp.actions[sid]
        choice[sid] = first if first in acts else acts[0]
    return DeterministicPolicy(choice)
