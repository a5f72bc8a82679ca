"""Leveled tabular MDPs, policies, trajectories, and exact visit marginals.

States are partitioned into levels 1..H and every transition moves exactly
one level down, so an episode is a root-to-leaf walk on a DAG.  The episode
value is a set function of the visited state-action pairs; this module only
provides the dynamics, the dense indexing of legal pairs (the ground set),
and the exact per-pair visit probabilities of a policy.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .rng import derive_rng

TRANSITION_ATOL = 1e-12


@dataclass(frozen=True)
class Trajectory:
    """State-action pairs of one episode (one per acting level) plus the final state."""

    pairs: tuple
    final_state: str

    def pair_set(self):
        return frozenset(self.pairs)


@dataclass(frozen=True)
class DeterministicPolicy:
    """One legal action per acting state, stored as {state id: action id}."""

    choice: dict

    def action(self, state):
        return self.choice[state]

    def key(self):
        """Hashable identity, used to deduplicate equal policies."""
        return tuple(sorted(self.choice.items()))


@dataclass(frozen=True)
class MixturePolicy:
    """Uniform mixture over deterministic policies; one member is drawn per episode."""

    members: tuple

    def __post_init__(self):
        if not self.members:
            raise ValueError("mixture policy needs at least one member")


class GroundSet:
    """Dense 0..m-1 indexing of the legal state-action pairs of an MDP.

    The order is the state construction order with each state's actions in
    their declared order, so it is stable under serialization round trips.
    """

    def __init__(self, pairs):
        self.pairs = tuple(pairs)
        self.index = {pair: i for i, pair in enumerate(self.pairs)}

    @property
    def size(self):
        return len(self.pairs)

    def __len__(self):
        return len(self.pairs)

    def indicator(self, pairs) -> np.ndarray:
        x = np.zeros(self.size)
        for p in pairs:
            x[self.index[p]] = 1.0
        return x


class LeveledMdp:
    """Finite leveled MDP with per-state legal actions and a single initial state.

    Parameters
    ----------
    levels : int
        Number of state levels H.
    states : iterable of (state_id, level, acting)
        State ids are strings without whitespace; `acting` marks states that
        choose an action (terminal states do not).
    actions : {state_id: [action_id, ...]}
        Ordered legal actions for each acting state.
    transitions : {(state_id, action_id): {next_id: prob}}
        Distribution over next-level states for each legal pair.
    initial : state id at level 1.

    Instances are immutable after construction and safe to share across
    threads; sampling takes an explicit seed.
    """

    def __init__(self, levels, states, actions, transitions, initial):
        self.levels = int(levels)
        self.state_ids = tuple(sid for sid, _, _ in states)
        self.level = {sid: int(lv) for sid, lv, _ in states}
        self.acting = {sid: bool(flag) for sid, _, flag in states}
        self.actions = {}
        for sid in self.state_ids:
            self.actions[sid] = tuple(actions.get(sid, ())) if self.acting[sid] else ()
        self.transitions = {}
        for (sid, act), dist in transitions.items():
            items = dist.items() if isinstance(dist, dict) else dist
            self.transitions[(sid, act)] = tuple((nxt, float(p)) for nxt, p in items)
        self.initial = initial

    @cached_property
    def states_by_level(self):
        by = {}
        for sid in self.state_ids:
            by.setdefault(self.level[sid], []).append(sid)
        return by

    @cached_property
    def ground_set(self) -> GroundSet:
        return GroundSet((sid, a) for sid in self.state_ids for a in self.actions[sid])

    @cached_property
    def deterministic(self) -> bool:
        return all(
            len(dist) == 1 and abs(dist[0][1] - 1.0) <= TRANSITION_ATOL
            for dist in self.transitions.values()
        )

    @cached_property
    def acting_levels(self) -> int:
        return len({self.level[sid] for sid in self.state_ids if self.acting[sid]})

    def transition(self, sid, act):
        return self.transitions[(sid, act)]

    def successor(self, sid, act):
        """Unique next state of a point-mass transition."""
        dist = self.transitions[(sid, act)]
        if len(dist) != 1:
            raise ValueError(f"transition for ({sid}, {act}) is not deterministic")
        return dist[0][0]

    @cached_property
    def pair_successors(self):
        """Per ground-set index, the unique successor state (deterministic MDPs only)."""
        return tuple(self.successor(s, a) for s, a in self.ground_set.pairs)


def validate(mdp: LeveledMdp) -> list:
    """Check the structural invariants; returns a list of violation strings.

    An empty list means the MDP is well formed.  Violations name the
    offending state or pair so reports are actionable.
    """
    problems = []
    seen = set()
    for sid in mdp.state_ids:
        if sid in seen:
            problems.append(f"state {sid}: duplicate id")
        seen.add(sid)
        lv = mdp.level[sid]
        if not 1 <= lv <= mdp.levels:
            problems.append(f"state {sid}: level {lv} outside 1..{mdp.levels}")
    if mdp.initial not in seen:
        problems.append(f"initial state {mdp.initial} not among states")
    elif mdp.level[mdp.initial] != 1:
        problems.append(f"initial state {mdp.initial} not at level 1")
    for sid in mdp.state_ids:
        lv = mdp.level[sid]
        if mdp.acting[sid]:
            if lv == mdp.levels:
                problems.append(f"state {sid}: acting state at final level {lv}")
            if not mdp.actions[sid]:
                problems.append(f"state {sid}: acting state with no legal actions")
            for act in mdp.actions[sid]:
                if (sid, act) not in mdp.transitions:
                    problems.append(f"state {sid} action {act}: missing transition")
                    continue
                dist = mdp.transitions[(sid, act)]
                total = 0.0
                for nxt, p in dist:
                    total += p
                    if p < 0:
                        problems.append(f"state {sid} action {act}: negative probability {p}")
                    if nxt not in mdp.level:
                        problems.append(f"state {sid} action {act}: unknown target {nxt}")
                    elif mdp.level[nxt] != lv + 1:
                        problems.append(
                            f"state {sid} action {act}: transition not level+1 "
                            f"(target {nxt} at level {mdp.level[nxt]})"
                        )
                if abs(total - 1.0) > TRANSITION_ATOL:
                    problems.append(
                        f"state {sid} action {act}: distribution not normalized (sum={total!r})"
                    )
        else:
            if lv != mdp.levels:
                problems.append(f"state {sid}: non-acting state before final level (level {lv})")
    return problems


def sample_trajectory(mdp: LeveledMdp, policy, seed=0) -> Trajectory:
    """Roll out one episode from the initial state.

    A MixturePolicy draws its member once at the start of the episode.  On a
    deterministic MDP with a deterministic policy the result does not depend
    on the seed (no random draws are consumed).
    """
    rng = None
    if isinstance(policy, MixturePolicy):
        rng = derive_rng(seed)
        member = policy.members[int(rng.integers(len(policy.members)))]
    else:
        member = policy
    pairs = []
    sid = mdp.initial
    while mdp.acting[sid]:
        try:
            act = member.action(sid)
        except KeyError:
            raise ValueError(f"incomplete policy: no action for state {sid}") from None
        if act not in mdp.actions[sid]:
            raise ValueError(f"incomplete policy: illegal action {act} at state {sid}")
        pairs.append((sid, act))
        dist = mdp.transition(sid, act)
        if len(dist) == 1:
            sid = dist[0][0]
        else:
            if rng is None:
                rng = derive_rng(seed)
            u = rng.random()
            acc = 0.0
            sid = dist[-1][0]
            for nxt, p in dist:
                acc += p
                if u < acc:
                    sid = nxt
                    break
    return Trajectory(tuple(pairs), sid)


def policy_marginals(mdp: LeveledMdp, policy: DeterministicPolicy) -> np.ndarray:
    """Exact per-pair visit probabilities of a deterministic policy.

    Computed by a forward level-by-level pass over state occupancies, never
    by sampling, so downstream algebra on these vectors is noise free.
    """
    gs = mdp.ground_set
    x = np.zeros(gs.size)
    occ = {mdp.initial: 1.0}
    for h in range(1, mdp.levels + 1):
        for sid in mdp.states_by_level.get(h, ()):
            p_here = occ.get(sid, 0.0)
            if p_here == 0.0 or not mdp.acting[sid]:
                continue
            try:
                act = policy.action(sid)
            except KeyError:
                raise ValueError(f"incomplete policy: no action for state {sid}") from None
            x[gs.index[(sid, act)]] = p_here
            for nxt, p in mdp.transition(sid, act):
                occ[nxt] = occ.get(nxt, 0.0) + p_here * p
    return x


def mixture_marginals(mdp: LeveledMdp, mixture: MixturePolicy) -> np.ndarray:
    """Uniform average of the members' marginal vectors."""
    acc = np.zeros(mdp.ground_set.size)
    for member in mixture.members:
        acc += policy_marginals(mdp, member)
    return acc / len(mixture.members)


def trajectory_indices(mdp: LeveledMdp, traj: Trajectory) -> list:
    return [mdp.ground_set.index[p] for p in traj.pairs]


# ---------------------------------------------------------------------------
# Text serialization.
#
# Line-oriented format:
#   levels H
#   state <id> level=<h> acting=<0|1>        (one per state, in order)
#   trans <s> <a> -> <s'>:<p> [<s''>:<p> ...]
# Blank lines and lines starting with ';' are ignored.  The initial state is
# the unique state at level 1.  Probabilities are written with repr() so a
# round trip reproduces them bit for bit.
# ---------------------------------------------------------------------------


def dumps_mdp(mdp: LeveledMdp) -> str:
    lines = [f"levels {mdp.levels}"]
    for sid in mdp.state_ids:
        if any(ch.isspace() for ch in str(sid)):
            raise ValueError(f"state id {sid!r} contains whitespace, not serializable")
        lines.append(f"state {sid} level={mdp.level[sid]} acting={int(mdp.acting[sid])}")
    for sid in mdp.state_ids:
        for act in mdp.actions[sid]:
            targets = " ".join(f"{nxt}:{float(p)!r}" for nxt, p in mdp.transition(sid, act))
            lines.append(f"trans {sid} {act} -> {targets}")
    return "\n".join(lines) + "\n"


def loads_mdp(text: str) -> LeveledMdp:
    levels = None
    states = []
    actions = {}
    transitions = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(";"):
            continue
        tokens = line.split()
        kind = tokens[0]
        if kind == "levels":
            levels = int(tokens[1])
        elif kind == "state":
            sid = tokens[1]
            fields = dict(tok.split("=", 1) for tok in tokens[2:])
            states.append((sid, int(fields["level"]), bool(int(fields["acting"]))))
        elif kind == "trans":
            if len(tokens) < 5 or tokens[3] != "->":
                raise ValueError(f"line {lineno}: malformed trans line: {raw!r}")
            sid, act = tokens[1], tokens[2]
            dist = {}
            for tok in tokens[4:]:
                nxt, p = tok.rsplit(":", 1)
                dist[nxt] = float(p)
            actions.setdefault(sid, []).append(act)
            transitions[(sid, act)] = dist
        else:
            raise ValueError(f"line {lineno}: unknown directive {kind!r}")
    if levels is None:
        raise ValueError("missing 'levels' header")
    first_level = [sid for sid, lv, _ in states if lv == 1]
    if len(first_level) != 1:
        raise ValueError(f"expected exactly one state at level 1, found {len(first_level)}")
    return LeveledMdp(levels, states, actions, transitions, first_level[0])


def save_mdp(mdp: LeveledMdp, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_mdp(mdp))


def load_mdp(path) -> LeveledMdp:
    with open(path) as fh:
        return loads_mdp(fh.read())
