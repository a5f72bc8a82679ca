import math

import numpy as np
import pytest

from submodplan.multilinear import (
    estimate_gradient,
    estimate_value,
    exact_value,
    sample_set,
)
from submodplan.objectives import AdditiveObjective, CoverageObjective
from submodplan.rng import derive_rng

from instances import random_coverage


def test_sample_set_degenerate():
    assert sample_set(np.zeros(5), seed=3).size == 0
    assert np.array_equal(sample_set(np.ones(5), seed=3), np.arange(5))


def test_sample_set_out_of_range():
    with pytest.raises(ValueError, match="marginal out of range"):
        sample_set(np.array([0.5, 1.2]))


def test_sample_set_frequency():
    x = np.array([0.3])
    hits = sum(sample_set(x, seed=s).size for s in range(100_000))
    assert abs(hits / 100_000 - 0.3) < 0.01


def test_estimate_value_additive_within_sampling_error():
    rng = derive_rng(31)
    w = rng.uniform(0.0, 2.0, 8)
    x = rng.uniform(0.0, 1.0, 8)
    obj = AdditiveObjective(w)
    samples = 4000
    est = estimate_value(obj, x, samples, seed=5)
    mean = float(np.dot(x, w))
    std = math.sqrt(float(np.sum(x * (1 - x) * w**2)))
    assert abs(est - mean) <= 3.0 * std / math.sqrt(samples)


def test_estimate_value_deterministic_point():
    rng = derive_rng(32)
    obj = random_coverage(6, 8, rng)
    x = (rng.random(6) < 0.5).astype(float)
    expected = obj.evaluate(np.flatnonzero(x))
    for samples in (1, 7):
        assert estimate_value(obj, x, samples, seed=9) == pytest.approx(expected)


def test_estimate_value_coverage_three_sigma():
    rng = derive_rng(33)
    obj = random_coverage(10, 9, rng)
    x = rng.uniform(0.0, 1.0, 10)
    exact = exact_value(obj, x)
    samples = 3000
    draws = obj.evaluate_sets(
        np.array([rng.random(10) < x for _ in range(samples)])
    )
    sigma = draws.std(ddof=1) / math.sqrt(samples)
    est = estimate_value(obj, x, samples, seed=4)
    assert abs(est - exact) <= 3.0 * sigma + 1e-12


def test_estimate_gradient_at_zero_is_exact():
    rng = derive_rng(34)
    obj = random_coverage(6, 8, rng)
    x = np.zeros(6)
    grad = estimate_gradient(obj, x, samples=3, seed=11)
    for e in range(6):
        assert grad.w[e] == pytest.approx(obj.evaluate((e,)) - obj.evaluate(()))


def test_estimate_gradient_exact_mode_additive():
    w = np.array([3.0, 1.0, 2.0])
    obj = AdditiveObjective(w)
    grad = estimate_gradient(obj, np.full(3, 0.4), samples=1, seed=0,
                             mode="exact-when-available")
    assert np.array_equal(grad.w, w)
    assert grad.samples_used == 0


def test_estimate_gradient_matches_exact_finite_difference():
    rng = derive_rng(35)
    obj = random_coverage(10, 8, rng)
    x = rng.uniform(0.1, 0.9, 10)
    coords = [0, 4, 9]
    fd = []
    for e in coords:
        hi = x.copy()
        hi[e] = 1.0
        lo = x.copy()
        lo[e] = 0.0
        fd.append(exact_value(obj, hi) - exact_value(obj, lo))
    samples = 10_000
    grad = estimate_gradient(obj, x, coords, samples=samples, seed=3)
    # Gains are bounded by the largest total cover weight, giving a crude
    # but valid three-sigma envelope.
    bound = obj.universe_weights.sum()
    for j in range(len(coords)):
        assert abs(grad.w[j] - fd[j]) <= 3.0 * bound / math.sqrt(samples)


def test_shared_and_independent_batches_agree_in_expectation():
    rng = derive_rng(36)
    obj = random_coverage(8, 8, rng)
    x = rng.uniform(0.2, 0.8, 8)
    e = 2
    hi = x.copy()
    hi[e] = 1.0
    lo = x.copy()
    lo[e] = 0.0
    fd = exact_value(obj, hi) - exact_value(obj, lo)
    reps = 200
    for shared in (True, False):
        means = [
            estimate_gradient(obj, x, [e], samples=40, seed=(50, shared, r),
                              shared_batch=shared).w[0]
            for r in range(reps)
        ]
        means = np.array(means)
        sigma = means.std(ddof=1) / math.sqrt(reps)
        assert abs(means.mean() - fd) <= 4.0 * sigma


def test_exact_value_point_mass():
    rng = derive_rng(37)
    obj = random_coverage(8, 8, rng)
    x = np.zeros(8)
    x[[1, 5]] = 1.0
    assert exact_value(obj, x) == pytest.approx(obj.evaluate((1, 5)))


def test_exact_value_additive_linearity():
    rng = derive_rng(38)
    w = rng.uniform(0.0, 3.0, 9)
    x = rng.uniform(0.0, 1.0, 9)
    assert exact_value(AdditiveObjective(w), x) == pytest.approx(np.dot(x, w), abs=1e-9)


def test_exact_value_hand_enumeration():
    # Covers {a}, {a,b}, {b}; unit weights; x = (1/2, 1/2, 1/2).
    # Enumerating the 8 subsets gives (0+1+2+1+2+2+2+2)/8 = 1.5.
    obj = CoverageObjective([[0], [0, 1], [1]], [1.0, 1.0])
    assert exact_value(obj, np.full(3, 0.5)) == pytest.approx(1.5, abs=1e-12)


def test_exact_value_matches_closed_form_coverage():
    rng = derive_rng(39)
    obj = random_coverage(11, 7, rng)
    x = rng.uniform(0.0, 1.0, 11)
    assert exact_value(obj, x) == pytest.approx(obj.extension_value(x), abs=1e-9)


def test_exact_value_size_guard():
    obj = AdditiveObjective(np.ones(23))
    with pytest.raises(RuntimeError, match="exact evaluation infeasible"):
        exact_value(obj, np.full(23, 0.5))


def test_estimator_unbiasedness_over_200_seeds():
    rng = derive_rng(40)
    obj = random_coverage(9, 8, rng)
    x = rng.uniform(0.0, 1.0, 9)
    exact = exact_value(obj, x)
    reps = 200
    estimates = np.array(
        [estimate_value(obj, x, samples=25, seed=(60, r)) for r in range(reps)]
    )
    sigma = estimates.std(ddof=1) / math.sqrt(reps)
    assert abs(estimates.mean() - exact) <= 4.0 * sigma


def test_extension_monotone_in_x():
    rng = derive_rng(41)
    obj = random_coverage(8, 8, rng)
    for _ in range(20):
        x = rng.uniform(0.0, 1.0, 8)
        y = np.clip(x + rng.uniform(0.0, 0.3, 8), 0.0, 1.0)
        assert exact_value(obj, x) <= exact_value(obj, y) + 1e-9


def test_extension_concave_along_nonnegative_directions():
    rng = derive_rng(42)
    obj = random_coverage(7, 8, rng)
    for _ in range(10):
        x = rng.uniform(0.0, 0.4, 7)
        direction = rng.uniform(0.0, 0.5, 7)
        xis = np.linspace(0.0, 1.0, 6)
        vals = [exact_value(obj, x + xi * direction) for xi in xis]
        second = np.diff(vals, 2)
        assert np.all(second <= 1e-9)


def test_reproducible_given_seed():
    rng = derive_rng(43)
    obj = random_coverage(8, 8, rng)
    x = rng.uniform(0.0, 1.0, 8)
    a = estimate_gradient(obj, x, samples=31, seed=77)
    b = estimate_gradient(obj, x, samples=31, seed=77)
    assert np.array_equal(a.w, b.w)
    assert a.samples_used == b.samples_used == 31
