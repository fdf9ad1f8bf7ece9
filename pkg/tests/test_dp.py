import math

import numpy as np
import pytest
from scipy import integrate, stats

from privauction.core import DomainError, Population
from privauction.dp import (LN3, EstimatorPlan, group_privacy_factor,
                            lap_cdf, lap_density, lap_sample, lap_tail_prob,
                            laplace_estimator, privacy_ratio_bound,
                            trial_stream)


@pytest.fixture(scope="module")
def big_sample():
    rng = np.random.default_rng(2024)
    return lap_sample(1.0, rng, size=1_000_000)


# --- sampling --------------------------------------------------------------

def test_sample_median_near_zero(big_sample):
    assert abs(np.median(big_sample)) <= 0.01


def test_sample_mean_near_zero(big_sample):
    assert abs(big_sample.mean()) <= 0.01


def test_tail_constant_one_third(big_sample):
    frac = np.mean(np.abs(big_sample) >= LN3)
    assert frac == pytest.approx(1.0 / 3.0, abs=0.005)


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_empirical_tails(big_sample, t):
    frac = np.mean(np.abs(big_sample) >= t)
    assert frac == pytest.approx(math.exp(-t), abs=0.005)


def test_ks_statistic(big_sample):
    stat, _ = stats.kstest(big_sample, lambda x: lap_cdf(1.0, x))
    assert stat <= 0.002


def test_sample_deterministic():
    a = lap_sample(2.0, np.random.default_rng(5), size=10)
    b = lap_sample(2.0, np.random.default_rng(5), size=10)
    np.testing.assert_array_equal(a, b)


def test_sample_scale_validation():
    with pytest.raises(DomainError):
        lap_sample(0.0, np.random.default_rng(0))


# --- tail probability ------------------------------------------------------

def test_tail_prob_whole_support():
    assert lap_tail_prob(3.0, 0.0) == 1.0


def test_tail_prob_ln3():
    assert lap_tail_prob(1.5, LN3 * 1.5) == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_tail_prob_closed_form():
    assert lap_tail_prob(2.0, 4.0) == pytest.approx(0.1353352832366127, abs=1e-12)


def test_tail_prob_matches_quadrature():
    # oracle: numerically integrate the density over |x| >= threshold
    sigma = 1.7
    for x in np.linspace(0.0, 8.0, 100):
        upper, _ = integrate.quad(lambda y: lap_density(sigma, y), x, np.inf)
        assert lap_tail_prob(sigma, x) == pytest.approx(2.0 * upper, abs=1e-9)


# --- analytic privacy quantities -------------------------------------------

def test_ratio_bound_examples():
    assert privacy_ratio_bound(3.0, 0.0) == 1.0
    assert privacy_ratio_bound(4.0, 1.0) == pytest.approx(math.exp(0.25), abs=1e-12)
    assert privacy_ratio_bound(5.0, 2.0) == pytest.approx(1.4918246976412703, abs=1e-9)


def test_group_privacy_examples():
    assert group_privacy_factor([0.1, 0.2], []) == 1.0
    assert group_privacy_factor([0.1, 0.2], [0, 1]) == pytest.approx(
        1.3498588075760032, abs=1e-9)


def test_group_privacy_half_root_e():
    # all eps = 1/(alpha n) over a group of size alpha n / 2 gives exp(1/2)
    n, alpha = 20, 0.5
    eps = np.full(n, 1.0 / (alpha * n))
    group = list(range(int(alpha * n / 2)))
    assert group_privacy_factor(eps, group) == pytest.approx(math.sqrt(math.e), abs=1e-12)


def test_group_privacy_multiplicative():
    eps = np.array([0.1, 0.2, 0.3, 0.4])
    whole = group_privacy_factor(eps, [0, 1, 2, 3])
    assert whole == pytest.approx(
        group_privacy_factor(eps, [0, 2]) * group_privacy_factor(eps, [1, 3]),
        rel=1e-12)


# --- estimator -------------------------------------------------------------

def test_estimator_deterministic_part():
    pop = Population(bits=np.ones(10, int), values=np.arange(10.0))
    plan = EstimatorPlan(n=10, winners=frozenset(range(8)), noise_scale=2.0,
                         offset=1.0)
    rng = np.random.default_rng(0)
    estimate, epsilons = laplace_estimator(pop, plan, rng)
    noise = lap_sample(2.0, np.random.default_rng(0))
    assert estimate - noise == pytest.approx(9.0)          # t = 8 + 1
    assert abs(9.0 - pop.total) == 1.0                      # |t - s| = offset
    np.testing.assert_array_equal(epsilons, [0.5] * 8 + [0.0, 0.0])


def test_estimator_ignores_non_winner_bits():
    values = np.arange(10.0)
    bits = np.ones(10, int)
    flipped = bits.copy()
    flipped[9] = 0
    plan = EstimatorPlan(n=10, winners=frozenset(range(8)), noise_scale=2.0,
                         offset=1.0)
    e1, _ = laplace_estimator(Population(bits=bits, values=values), plan,
                              np.random.default_rng(3))
    e2, _ = laplace_estimator(Population(bits=flipped, values=values), plan,
                              np.random.default_rng(3))
    assert e1 == e2


def test_plan_rejects_full_winner_set():
    with pytest.raises(DomainError):
        EstimatorPlan(n=5, winners=frozenset(range(5)), noise_scale=1.0, offset=0.0)


def test_estimator_checks_noise_scale():
    pop = Population(bits=np.ones(4, int), values=np.arange(4.0))
    plan = EstimatorPlan(n=4, winners=frozenset({0, 1}), noise_scale=3.0, offset=1.0)
    with pytest.raises(DomainError):
        laplace_estimator(pop, plan, np.random.default_rng(0))


def test_density_ratio_on_grid():
    # one-bit winner flip shifts the deterministic part by at most 1
    scale = 2.0
    xs = np.linspace(-20 * scale, 20 * scale, 10_000)
    ratio = lap_density(scale, xs) / lap_density(scale, xs - 1.0)
    worst = np.max(np.maximum(ratio, 1.0 / ratio))
    assert worst <= privacy_ratio_bound(scale, 1.0) + 1e-9


# --- trial streams ---------------------------------------------------------

def test_trial_streams_reproducible_and_distinct():
    a = trial_stream(42, 0).random(4)
    b = trial_stream(42, 0).random(4)
    c = trial_stream(42, 1).random(4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_trial_stream_rejects_negative():
    with pytest.raises(DomainError):
        trial_stream(0, -1)
