import itertools
import math

import numpy as np
import pytest

from submodplan.continuous_greedy import CgConfig, run
from submodplan.dp import solve_linear
from submodplan.environments import build_grid, random_cardinality_instance
from submodplan.harness import mixture_value
from submodplan.mdp import mixture_marginals, policy_marginals
from submodplan.multilinear import exact_value
from submodplan.objectives import AdditiveObjective
from submodplan.rng import derive_rng

from instances import chain_mdp, random_coverage


def test_additive_exact_mode_recovers_dp_optimum():
    rng = derive_rng(61)
    mdp = build_grid(4)
    w = rng.uniform(0.0, 5.0, mdp.ground_set.size)
    obj = AdditiveObjective(w)
    opt_policy, opt_value = solve_linear(mdp, w)
    res = run(mdp, obj, CgConfig(delta=0.1, samples=1, seed=3,
                                 gradient_mode="exact-when-available"))
    assert {m.key() for m in res.mixture.members} == {opt_policy.key()}
    assert mixture_value(mdp, obj, res.mixture) == pytest.approx(opt_value, abs=1e-9)


def test_single_path_mdp_any_objective():
    rng = derive_rng(62)
    mdp = chain_mdp(4)
    obj = random_coverage(mdp.ground_set.size, 5, rng)
    res = run(mdp, obj, CgConfig(delta=0.2, samples=5, seed=1))
    assert len(res.mixture.members) == 5
    assert np.array_equal(res.y_final, np.ones(mdp.ground_set.size))


def test_cardinality_instance_beats_one_minus_one_over_e():
    # Oracle: exhaustive maximum over all C(8, 3) element subsets.
    mdp, obj, covers, weights = random_cardinality_instance(8, 3, 10, seed=99)
    res = run(mdp, obj, CgConfig(delta=0.01, samples=200, seed=5))

    def set_value(subset):
        items = set()
        for a in subset:
            items.update(covers[a])
        return sum(weights[u] for u in items)

    opt = max(set_value(s) for s in itertools.combinations(range(8), 3))
    bound = (1.0 - 1.0 / math.e - 0.05) * opt
    assert obj.extension_value(res.y_final) >= bound
    assert res.estimated_extension >= bound - 0.05 * opt


def test_y_is_mean_of_member_marginals_and_in_range():
    rng = derive_rng(63)
    mdp = build_grid(3)
    obj = random_coverage(mdp.ground_set.size, 8, rng)
    res = run(mdp, obj, CgConfig(delta=0.05, samples=10, seed=8))
    assert np.all(res.y_final >= 0.0) and np.all(res.y_final <= 1.0)
    assert np.allclose(res.y_final, mixture_marginals(mdp, res.mixture), atol=1e-9)


def test_extension_monotone_along_iterates():
    rng = derive_rng(64)
    mdp = build_grid(3)
    obj = random_coverage(mdp.ground_set.size, 8, rng)
    res = run(mdp, obj, CgConfig(delta=0.1, samples=40, seed=2))
    T = len(res.mixture.members)
    running = np.zeros(mdp.ground_set.size)
    previous = exact_value(obj, running)
    for record in res.per_iteration:
        running += policy_marginals(mdp, record.policy)
        current = exact_value(obj, np.clip(running / T, 0.0, 1.0))
        assert current >= previous - 1e-9
        previous = current


def test_reproducible_given_seed():
    rng = derive_rng(65)
    mdp = build_grid(3)
    obj = random_coverage(mdp.ground_set.size, 8, rng)
    cfg = CgConfig(delta=0.1, samples=7, seed=123)
    a = run(mdp, obj, cfg)
    b = run(mdp, obj, cfg)
    assert np.array_equal(a.y_final, b.y_final)
    assert [m.key() for m in a.mixture.members] == [m.key() for m in b.mixture.members]
    assert a.estimated_extension == b.estimated_extension


def test_config_validation():
    mdp = build_grid(2)
    obj = AdditiveObjective(np.ones(mdp.ground_set.size))
    with pytest.raises(ValueError, match="1/delta"):
        run(mdp, obj, CgConfig(delta=0.3))
    with pytest.raises(ValueError, match="samples"):
        run(mdp, obj, CgConfig(samples=0))
    with pytest.raises(ValueError, match="gradient_mode"):
        run(mdp, obj, CgConfig(gradient_mode="nope"))
    with pytest.raises(ValueError, match="offset_mode"):
        run(mdp, obj, CgConfig(offset_mode="nope"))
    with pytest.raises(ValueError, match="restarts"):
        run(mdp, obj, CgConfig(restarts=0))


def test_objective_size_mismatch():
    mdp = build_grid(2)
    with pytest.raises(ValueError, match="ground set size"):
        run(mdp, AdditiveObjective(np.ones(3)), CgConfig(delta=0.5, samples=1))


def test_trace_file(tmp_path):
    rng = derive_rng(66)
    mdp = build_grid(2)
    obj = random_coverage(mdp.ground_set.size, 5, rng)
    trace = tmp_path / "trace.csv"
    run(mdp, obj, CgConfig(delta=0.25, samples=5, seed=4, eval_samples=50,
                           trace_path=str(trace)))
    lines = trace.read_text().splitlines()
    assert lines[0] == "t,linear_value,estimated_extension"
    assert len(lines) == 5  # header + T=4 iterations


def test_restarts_return_best_estimate():
    rng = derive_rng(67)
    mdp = build_grid(3)
    obj = random_coverage(mdp.ground_set.size, 8, rng)
    single = run(mdp, obj, CgConfig(delta=0.1, samples=3, seed=9, eval_samples=200))
    multi = run(mdp, obj, CgConfig(delta=0.1, samples=3, seed=9, eval_samples=200,
                                   restarts=4))
    assert multi.estimated_extension >= single.estimated_extension - 1e-9


def test_offset_mode_changes_only_reported_extension():
    rng = derive_rng(68)
    mdp = build_grid(3)
    m = mdp.ground_set.size
    diags = rng.uniform(0.0, 3.0, (m, 4))
    from submodplan.objectives import LogDetObjective

    obj = LogDetObjective(diags, lam=1e-4)
    raw = run(mdp, obj, CgConfig(delta=0.1, samples=10, seed=5, offset_mode="raw"))
    shifted = run(mdp, obj, CgConfig(delta=0.1, samples=10, seed=5,
                                     offset_mode="nonnegative-shift"))
    assert [m.key() for m in raw.mixture.members] == [m.key() for m in shifted.mixture.members]
    offset = -obj.empty_value()
    assert shifted.estimated_extension == pytest.approx(raw.estimated_extension + offset,
                                                        abs=1e-9)
