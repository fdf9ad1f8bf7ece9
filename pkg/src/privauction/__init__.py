"""Auctions for buying differential privacy from a population.

A small numpy library implementing two procurement auctions for private
data -- a budget-constrained accuracy maximizer and an accuracy-constrained
payment minimizer -- together with the Laplace-noise estimator they run and
a verification harness that mechanically checks their properties
(truthfulness, individual rationality, envy-freeness, budget feasibility,
accuracy, and instance optimality against brute-force oracles).
"""

from .core import (ALL_FAMILIES, CorrelatedBits, CostFamily, DomainError,
                   IndependentBits, LogNormalValues, MechanismOutcome,
                   PointValues, Population, PopulationSpec, UniformValues,
                   cost_eval, cost_inverse_in_v, generate_population)
from .dp import (ACCURACY_CONST, LN3, EstimatorPlan, group_privacy_factor,
                 lap_sample, lap_tail_prob, laplace_estimator,
                 privacy_ratio_bound, trial_stream)
from .mechanisms import (AccuracyInstance, BudgetInstance,
                         fair_query, fixed_price_mechanism, min_cost_auction)
from .verify import (MisreportGrid, VerificationReport,
                     check_envy_freeness, check_individual_rationality,
                     check_necessity, check_truthfulness, estimate_accuracy,
                     impossibility_bound, oracle_max_winners_envy_free,
                     oracle_min_payment_k_units, payment_lower_bound)

__version__ = "0.1.0"
