import numpy as np
import pytest

from submodplan.environments import build_grid
from submodplan.mdp import (
    DeterministicPolicy,
    LeveledMdp,
    MixturePolicy,
    dumps_mdp,
    loads_mdp,
    mixture_marginals,
    policy_marginals,
    sample_trajectory,
    trajectory_indices,
    validate,
)
from submodplan.rng import derive_rng

from instances import chain_mdp, random_leveled_mdp, random_policy

RD = DeterministicPolicy({"1,1": "R", "1,2": "D", "2,1": "R"})
DR = DeterministicPolicy({"1,1": "D", "1,2": "D", "2,1": "R"})


def test_validate_clean_grid():
    assert validate(build_grid(2)) == []


def test_validate_level_skip():
    mdp = LeveledMdp(
        3,
        [("a", 1, True), ("b", 2, True), ("c", 3, False)],
        {"a": ["x"], "b": ["x"]},
        {("a", "x"): {"c": 1.0}, ("b", "x"): {"c": 1.0}},
        "a",
    )
    assert any("not level+1" in p for p in validate(mdp))


def test_validate_unnormalized():
    mdp = LeveledMdp(
        2,
        [("a", 1, True), ("b", 2, False), ("c", 2, False)],
        {"a": ["x"]},
        {("a", "x"): {"b": 0.5, "c": 0.4}},
        "a",
    )
    assert any("not normalized" in p for p in validate(mdp))


def test_validate_acting_at_final_level():
    mdp = LeveledMdp(2, [("a", 1, True), ("b", 2, True)], {"a": ["x"], "b": ["x"]},
                     {("a", "x"): {"b": 1.0}}, "a")
    problems = validate(mdp)
    assert any("final level" in p for p in problems)


def test_sample_trajectory_grid():
    traj = sample_trajectory(build_grid(2), RD)
    assert traj.pairs == (("1,1", "R"), ("1,2", "D"))
    assert traj.final_state == "2,2"


def test_sample_trajectory_single_path_any_seed():
    mdp = chain_mdp(4)
    pol = DeterministicPolicy({f"c{h}": "go" for h in range(1, 4)})
    for seed in (0, 1, 99):
        traj = sample_trajectory(mdp, pol, seed)
        assert [s for s, _ in traj.pairs] == ["c1", "c2", "c3"]


def test_incomplete_policy_error():
    with pytest.raises(ValueError, match="incomplete policy"):
        sample_trajectory(build_grid(2), DeterministicPolicy({"1,1": "R"}))


def test_mixture_member_frequency():
    # Empirical member frequency of a two-member mixture: 0.5 +/- 0.02.
    mdp = build_grid(2)
    mix = MixturePolicy((RD, DR))
    picks = sum(
        sample_trajectory(mdp, mix, seed).pairs[0][1] == "R" for seed in range(10_000)
    )
    assert abs(picks / 10_000 - 0.5) < 0.02


def test_marginals_indicator_on_deterministic_grid():
    mdp = build_grid(2)
    x = policy_marginals(mdp, RD)
    gs = mdp.ground_set
    expected = np.zeros(gs.size)
    expected[gs.index[("1,1", "R")]] = 1.0
    expected[gs.index[("1,2", "D")]] = 1.0
    assert np.array_equal(x, expected)


def test_marginals_one_step_split():
    mdp = LeveledMdp(
        3,
        [("s1", 1, True), ("su", 2, True), ("sv", 2, True), ("end", 3, False)],
        {"s1": ["a"], "su": ["a"], "sv": ["a"]},
        {
            ("s1", "a"): {"su": 0.5, "sv": 0.5},
            ("su", "a"): {"end": 1.0},
            ("sv", "a"): {"end": 1.0},
        },
        "s1",
    )
    pol = DeterministicPolicy({"s1": "a", "su": "a", "sv": "a"})
    x = policy_marginals(mdp, pol)
    gs = mdp.ground_set
    assert x[gs.index[("su", "a")]] == pytest.approx(0.5)
    assert x[gs.index[("sv", "a")]] == pytest.approx(0.5)


def test_marginals_match_sampled_frequencies():
    # Monte-Carlo oracle: visit frequencies over 1e5 rollouts within 0.01.
    rng = derive_rng(7)
    mdp = random_leveled_mdp(rng, levels=3, stochastic=True)
    pol = random_policy(mdp, rng)
    exact = policy_marginals(mdp, pol)
    counts = np.zeros(mdp.ground_set.size)
    n = 100_000
    for seed in range(n):
        for e in trajectory_indices(mdp, sample_trajectory(mdp, pol, seed)):
            counts[e] += 1
    assert np.abs(counts / n - exact).max() < 0.01


def test_mixture_marginals_identical_members():
    mdp = build_grid(2)
    assert np.array_equal(
        mixture_marginals(mdp, MixturePolicy((RD, RD))), policy_marginals(mdp, RD)
    )


def test_mixture_marginals_two_paths():
    mdp = build_grid(2)
    x = mixture_marginals(mdp, MixturePolicy((RD, DR)))
    assert np.allclose(x, [0.5, 0.5, 0.5, 0.5])


def test_mixture_marginals_mean_of_indicators():
    rng = derive_rng(21)
    mdp = random_leveled_mdp(rng, levels=4)
    members = [random_policy(mdp, rng) for _ in range(3)]
    direct = np.mean([policy_marginals(mdp, p) for p in members], axis=0)
    assert np.allclose(mixture_marginals(mdp, MixturePolicy(tuple(members))), direct)


def test_mixture_marginals_permutation_invariant():
    rng = derive_rng(22)
    mdp = random_leveled_mdp(rng, levels=4)
    members = tuple(random_policy(mdp, rng) for _ in range(4))
    a = mixture_marginals(mdp, MixturePolicy(members))
    b = mixture_marginals(mdp, MixturePolicy(members[::-1]))
    assert np.allclose(a, b, atol=1e-12)


def test_deterministic_marginals_are_indicator_of_trajectory():
    rng = derive_rng(23)
    for _ in range(20):
        mdp = random_leveled_mdp(rng)
        pol = random_policy(mdp, rng)
        x = policy_marginals(mdp, pol)
        assert set(np.unique(x)) <= {0.0, 1.0}
        support = set(np.flatnonzero(x).tolist())
        visited = set(trajectory_indices(mdp, sample_trajectory(mdp, pol)))
        assert support == visited


def test_level_sums_equal_one_on_grid():
    mdp = build_grid(4)
    rng = derive_rng(24)
    pol = random_policy(mdp, rng)
    x = policy_marginals(mdp, pol)
    gs = mdp.ground_set
    for h in range(1, mdp.levels):
        total = sum(
            x[gs.index[(sid, a)]]
            for sid in mdp.states_by_level[h]
            for a in mdp.actions[sid]
        )
        assert total == pytest.approx(1.0, abs=1e-9)


def test_sampling_reproducible_bit_for_bit():
    rng = derive_rng(25)
    mdp = random_leveled_mdp(rng, stochastic=True)
    pol = MixturePolicy(tuple(random_policy(mdp, rng) for _ in range(3)))
    assert sample_trajectory(mdp, pol, 1234) == sample_trajectory(mdp, pol, 1234)


def test_serialization_round_trip():
    rng = derive_rng(26)
    mdp = random_leveled_mdp(rng, stochastic=True)
    clone = loads_mdp(dumps_mdp(mdp))
    assert clone.levels == mdp.levels
    assert clone.state_ids == mdp.state_ids
    assert clone.acting == mdp.acting
    assert clone.actions == mdp.actions
    assert clone.transitions == mdp.transitions
    assert clone.initial == mdp.initial
    assert dumps_mdp(clone) == dumps_mdp(mdp)


def test_serialization_probabilities_exact():
    mdp = LeveledMdp(
        2,
        [("a", 1, True), ("b", 2, False), ("c", 2, False)],
        {"a": ["x"]},
        {("a", "x"): {"b": 1.0 / 3.0, "c": 2.0 / 3.0}},
        "a",
    )
    clone = loads_mdp(dumps_mdp(mdp))
    assert clone.transitions[("a", "x")] == mdp.transitions[("a", "x")]
