"""Differential-privacy primitives: Laplace noise, the noisy-sum estimator,
and analytic privacy calculations.

Random streams are explicit `numpy.random.Generator` values passed in, never
global.  Monte Carlo runs derive one stream per trial from (seed, trial) via
a counter-based bit generator, so results are reproducible independent of
parallelism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DomainError, Population

#: ln 3, the tail threshold multiplier at which the two-sided Laplace tail
#: mass is exactly 1/3.
LN3 = math.log(3.0)

#: Accuracy constant of the noisy-sum estimator: with |H| = (1-a)n winners it
#: is (1/2 + ln 3) * a * n accurate.
ACCURACY_CONST = 0.5 + LN3


def _check_scale(scale: float) -> float:
    scale = float(scale)
    if not math.isfinite(scale) or scale <= 0:
        raise DomainError(f"Laplace scale must be positive and finite, got {scale!r}")
    return scale


def lap_sample(scale: float, rng: np.random.Generator, size=None):
    """Draw from the zero-mean Laplace distribution with the given scale.

    Uses inverse-CDF from a single uniform draw per sample:
    x = -scale * sign(u - 1/2) * ln(1 - 2|u - 1/2|).
    """
    scale = _check_scale(scale)
    u = rng.random(size) if size is not None else rng.random()
    u = np.asarray(u)
    # rng.random() can return exactly 0, where the transform diverges
    u = np.where(u == 0.0, np.finfo(float).tiny, u)
    half = u - 0.5
    x = -scale * np.sign(half) * np.log1p(-2.0 * np.abs(half))
    if size is None:
        return float(x)
    return x


def lap_density(scale: float, x):
    """Density f(x) = exp(-|x|/scale) / (2*scale)."""
    scale = _check_scale(scale)
    return np.exp(-np.abs(x) / scale) / (2.0 * scale)


def lap_cdf(scale: float, x):
    """Exact CDF of the zero-mean Laplace distribution."""
    scale = _check_scale(scale)
    x = np.asarray(x, dtype=float)
    return np.where(x < 0, 0.5 * np.exp(x / scale), 1.0 - 0.5 * np.exp(-x / scale))


def lap_tail_prob(scale: float, threshold: float) -> float:
    """Two-sided tail mass Pr[|X| >= threshold] = exp(-threshold/scale)."""
    scale = _check_scale(scale)
    threshold = float(threshold)
    if threshold < 0 or not math.isfinite(threshold):
        raise DomainError("threshold must be a finite non-negative real")
    return math.exp(-threshold / scale)


def privacy_ratio_bound(noise_scale: float, shift: float) -> float:
    """Worst-case output-density ratio between two noisy-sum runs whose
    deterministic parts differ by |shift|: exp(|shift| / noise_scale)."""
    noise_scale = _check_scale(noise_scale)
    return math.exp(abs(float(shift)) / noise_scale)


def group_privacy_factor(epsilons, group) -> float:
    """Bound exp(sum of eps over the group) on the output-probability ratio
    for two databases differing exactly on the group's indices."""
    epsilons = np.asarray(epsilons, dtype=float)
    idx = np.fromiter((int(i) for i in group), dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= epsilons.size):
        raise DomainError("group indices out of range")
    return float(math.exp(epsilons[idx].sum())) if idx.size else 1.0


# ---------------------------------------------------------------------------
# The noisy-sum estimator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EstimatorPlan:
    """Which agents' bits the noisy sum uses, and how it is noised.

    The estimate is sum of winners' bits + offset + Laplace(noise_scale).
    """

    n: int
    winners: frozenset
    noise_scale: float
    offset: float

    def __post_init__(self):
        winners = frozenset(int(i) for i in self.winners)
        object.__setattr__(self, "winners", winners)
        if not (1 <= len(winners) <= self.n - 1):
            raise DomainError("estimator plan needs 1 <= |winners| <= n-1")
        if winners and (min(winners) < 0 or max(winners) >= self.n):
            raise DomainError("winner indices out of range")
        _check_scale(self.noise_scale)

    @property
    def alpha_fraction(self) -> float:
        """Fraction of agents left out: |winners| = (1 - alpha) * n."""
        return 1.0 - len(self.winners) / self.n


def laplace_estimator(pop: Population, plan: EstimatorPlan, rng: np.random.Generator):
    """Noisy sum over the plan's winner set.

    Returns (estimate, epsilons): estimate = winners' bit sum + offset +
    Laplace(noise_scale); eps_i = 1/noise_scale for winners, 0 otherwise.
    """
    if plan.n != pop.n:
        raise DomainError("plan size does not match population")
    if abs(plan.noise_scale - (pop.n - len(plan.winners))) > 1e-12:
        raise DomainError("noise scale must equal n - |winners|")
    idx = np.fromiter(plan.winners, dtype=int)
    t = float(pop.bits[idx].sum()) + plan.offset
    estimate = t + lap_sample(plan.noise_scale, rng)
    epsilons = np.zeros(pop.n)
    epsilons[idx] = 1.0 / plan.noise_scale
    return estimate, epsilons


# ---------------------------------------------------------------------------
# Reproducible per-trial streams
# ---------------------------------------------------------------------------

def trial_stream(seed: int, trial: int) -> np.random.Generator:
    """Independent random stream for one Monte Carlo trial.

    Counter-based: Philox keyed by the master seed with the trial index in
    the counter's high word, so streams never overlap and derivation does
    not depend on execution order.
    """
    if trial < 0:
        raise DomainError("trial index must be >= 0")
    bitgen = np.random.Philox(key=int(seed) & ((1 << 64) - 1),
                              counter=[0, 0, 0, int(trial)])
    return np.random.Generator(bitgen)
