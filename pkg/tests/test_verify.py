import itertools
import math

import numpy as np
import pytest

from privauction.core import (ALL_FAMILIES, CostFamily, MechanismOutcome,
                              DomainError, Population, cost_eval)
from privauction.dp import ACCURACY_CONST
from privauction.mechanisms import (AccuracyInstance, BudgetInstance,
                                    fair_query, min_cost_auction)
from privauction.verify import (MisreportGrid, check_envy_freeness,
                                check_estimator_privacy,
                                check_individual_rationality, check_necessity,
                                check_truthfulness, estimate_accuracy,
                                impossibility_bound, matched_alpha,
                                oracle_max_winners_envy_free,
                                oracle_min_payment_k_units,
                                pay_your_bid_control, payment_lower_bound,
                                random_instances, run_suite)

RNG = lambda s=0: np.random.default_rng(s)


# --- individual rationality -------------------------------------------------

def test_ir_passes_on_fair_query_corpus():
    for inst in random_instances(100, seed=1, kind="budget"):
        out = fair_query(inst, RNG())
        assert check_individual_rationality(out, inst.pop, inst.model).passed


def test_ir_detects_constructed_failure():
    pop = Population(bits=[1], values=[1.0])
    out = MechanismOutcome(estimate=0.0, payments=[0.0], epsilons=[1.0],
                           analyst_charge=0.0, winners=frozenset({0}))
    rep = check_individual_rationality(out, pop, CostFamily.LINEAR)
    assert not rep.passed
    assert rep.violations[0]["delta"] == pytest.approx(-1.0)


def test_ir_vacuous_when_nothing_bought():
    pop = Population(bits=[1, 0], values=[1.0, 2.0])
    out = MechanismOutcome(estimate=0.0, payments=[0.0, 0.0],
                           epsilons=[0.0, 0.0], analyst_charge=0.0,
                           winners=frozenset())
    assert check_individual_rationality(out, pop, CostFamily.LINEAR).passed


# --- envy-freeness ----------------------------------------------------------

def test_envy_free_on_mechanism_outcomes():
    for inst in random_instances(50, seed=2, kind="budget"):
        out = fair_query(inst, RNG())
        assert check_envy_freeness(out, inst.pop, inst.model).passed
    for inst in random_instances(50, seed=3, kind="accuracy"):
        out = min_cost_auction(inst, RNG())
        assert check_envy_freeness(out, inst.pop, inst.model).passed


def test_envy_detects_unequal_winner_payments():
    pop = Population(bits=[1, 1, 0], values=[1.0, 1.0, 5.0])
    out = MechanismOutcome(estimate=0.0, payments=[2.0, 3.0, 0.0],
                           epsilons=[1.0, 1.0, 0.0], analyst_charge=5.0,
                           winners=frozenset({0, 1}))
    assert not check_envy_freeness(out, pop, CostFamily.LINEAR).passed


def test_envy_vacuous_single_agent():
    pop = Population(bits=[1], values=[3.0])
    out = MechanismOutcome(estimate=0.0, payments=[0.0], epsilons=[0.0],
                           analyst_charge=0.0, winners=frozenset())
    assert check_envy_freeness(out, pop, CostFamily.LINEAR).passed


# --- truthfulness -----------------------------------------------------------

def test_fair_query_truthful_on_corpus():
    for inst in random_instances(60, seed=4, n_hi=12, kind="budget"):
        assert check_truthfulness(fair_query, inst).passed


def test_min_cost_truthful_on_corpus():
    for inst in random_instances(60, seed=5, n_hi=12, kind="accuracy"):
        assert check_truthfulness(min_cost_auction, inst).passed


def brute_force_deviation_search(mechanism, inst, samples=200):
    """Oracle: dense random deviation search (not grid-based)."""
    rng = np.random.default_rng(12345)
    pop = inst.pop
    base = mechanism(inst, RNG())
    hi = 2.0 * max(pop.values.max(), 1.0)
    for i in range(pop.n):
        true_util = base.payments[i] - cost_eval(inst.model, pop.values[i],
                                                 base.epsilons[i])
        for v_prime in rng.uniform(0.0, hi, size=samples):
            reported = pop.values.copy()
            reported[i] = v_prime
            import dataclasses
            out = mechanism(dataclasses.replace(inst, pop=pop.with_values(reported)),
                            RNG())
            util = out.payments[i] - cost_eval(inst.model, pop.values[i],
                                               out.epsilons[i])
            if util > true_util + 1e-9:
                return True
    return False


def test_pay_your_bid_control_is_manipulable():
    pop = Population(bits=[1, 0, 1, 1], values=[1.0, 2.0, 4.0, 8.0])
    inst = BudgetInstance(pop=pop, model=CostFamily.LINEAR, budget=4.0)
    # oracle first: exhaustive-ish random deviation search finds a profit
    assert brute_force_deviation_search(pay_your_bid_control, inst)
    rep = check_truthfulness(pay_your_bid_control, inst)
    assert not rep.passed
    assert rep.violations  # the grid finds it too


def test_grid_candidates_cover_pivots():
    grid = MisreportGrid()
    values = np.array([1.0, 2.0, 4.0])
    cands = grid.candidates_for(values, 0)
    assert 0.0 in cands and 2.0 in cands and 4.0 in cands
    assert np.all(cands >= 0)


# --- necessity and payment bounds -------------------------------------------

def test_necessity_boundary():
    n, alpha = 10, 0.4
    need = math.ceil((1 - alpha) * n)
    eps = np.zeros(n)
    eps[:need] = 1.0 / (alpha * n)
    assert check_necessity(eps, alpha)
    eps[need - 1] = 0.0
    assert not check_necessity(eps, alpha)


def test_mechanism_outcomes_pass_necessity():
    for inst in random_instances(50, seed=6, kind="accuracy"):
        out = min_cost_auction(inst, RNG())
        assert check_necessity(out.epsilons, matched_alpha(out, inst.pop.n))


def test_payment_lower_bound_vacuous():
    pop = Population(bits=[1, 0], values=[1.0, 2.0])
    assert payment_lower_bound(pop, CostFamily.LINEAR, 0.3) == 0.0


def test_payment_lower_bound_example():
    pop = Population(bits=np.ones(8, int),
                     values=[1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0])
    bound = payment_lower_bound(pop, CostFamily.LINEAR, 1.0 / 8.0)
    assert bound == pytest.approx(1.5, abs=1e-12)  # (1+1+2+2) * 1/4


def test_impossibility_bound_examples():
    assert impossibility_bound([5.0, 10.0]) == pytest.approx(1.4384103622589042,
                                                             abs=1e-9)
    assert impossibility_bound([0.0, 3.0]) == 0.0
    assert impossibility_bound([2.0, 6.0]) == pytest.approx(
        2.0 * impossibility_bound([1.0, 3.0]), rel=1e-12)
    with pytest.raises(DomainError):
        impossibility_bound([])


def test_impossibility_bound_diverges():
    bounds = [impossibility_bound([10.0 ** i, 10.0 ** (i + 1)]) for i in range(7)]
    assert all(b2 > b1 for b1, b2 in zip(bounds, bounds[1:]))


# --- oracles ----------------------------------------------------------------

def test_oracle_max_winners_example():
    pop = Population(bits=[1, 0, 1, 1], values=[1.0, 2.0, 4.0, 8.0])
    assert oracle_max_winners_envy_free(pop, CostFamily.LINEAR, 2.0) == 2
    assert oracle_max_winners_envy_free(pop, CostFamily.LINEAR, 0.0) == 0


def test_oracle_matches_fair_query():
    for inst in random_instances(150, seed=7, kind="budget"):
        out = fair_query(inst, RNG())
        assert out.winner_count == oracle_max_winners_envy_free(
            inst.pop, inst.model, inst.budget)


def test_oracle_min_payment_example():
    pop = Population(bits=np.ones(10, int), values=np.arange(1.0, 11.0))
    assert oracle_min_payment_k_units(pop, CostFamily.LINEAR, 8) == pytest.approx(36.0)


def test_oracle_min_payment_equal_values():
    pop = Population(bits=np.ones(6, int), values=np.full(6, 2.0))
    k = 4
    expected = k * cost_eval(CostFamily.QUADRATIC, 2.0, 1.0 / 2.0)
    assert oracle_min_payment_k_units(pop, CostFamily.QUADRATIC, k) == pytest.approx(expected)


def test_oracle_matches_min_cost_auction():
    for inst in random_instances(150, seed=8, kind="accuracy"):
        out = min_cost_auction(inst, RNG())
        oracle = oracle_min_payment_k_units(inst.pop, inst.model, out.winner_count)
        assert out.total_payment == pytest.approx(oracle, abs=1e-9)


def test_min_cost_beats_lower_bound():
    from privauction.verify import accuracy_level
    for inst in random_instances(100, seed=9, kind="accuracy"):
        out = min_cost_auction(inst, RNG())
        alpha = accuracy_level(out, inst.pop.n) / inst.pop.n
        if 0 < alpha < 1:
            bound = payment_lower_bound(inst.pop, inst.model, alpha)
            assert out.total_payment >= bound - 1e-9


# --- accuracy estimation ----------------------------------------------------

def test_estimate_accuracy_zero_bound():
    pop = Population(bits=[1, 0, 1, 1], values=[1.0, 2.0, 4.0, 8.0])
    inst = BudgetInstance(pop=pop, model=CostFamily.LINEAR, budget=2.0)
    assert estimate_accuracy(fair_query, inst, 0.0, trials=50, seed=0) == 1.0


def test_estimate_accuracy_deterministic():
    pop = Population(bits=[1, 0, 1, 1], values=[1.0, 2.0, 4.0, 8.0])
    inst = BudgetInstance(pop=pop, model=CostFamily.LINEAR, budget=2.0)
    a = estimate_accuracy(fair_query, inst, 2.0, trials=200, seed=5)
    b = estimate_accuracy(fair_query, inst, 2.0, trials=200, seed=5)
    assert a == b


# --- suite ------------------------------------------------------------------

def test_suite_passes_on_clean_corpus():
    instances = (random_instances(6, seed=10, n_hi=8, kind="budget")
                 + random_instances(6, seed=11, n_hi=8, kind="accuracy"))
    reports = run_suite(instances)
    assert reports
    for rep in reports:
        assert rep.passed, (rep.property_name, rep.violations[:3])


def test_suite_flags_negative_control():
    instances = random_instances(6, seed=12, n_hi=8, kind="budget")
    reports = run_suite(instances, negative_control=True)
    by_name = {r.property_name: r for r in reports}
    assert not by_name["truthfulness"].passed


def test_estimator_privacy_grid_check():
    assert check_estimator_privacy(3.0).passed
