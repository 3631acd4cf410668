"""Measurement budgets for a target precision epsilon and failure probability delta.

All logarithms are natural. Rational parts of every ceiling are evaluated with
``fractions.Fraction`` built from the decimal text of the inputs, so that
e.g. ``ceil(4 / 0.1**2)`` is 400 and not 401.
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass
from fractions import Fraction


class Strategy(str, enum.Enum):
    LRM_MEAN = "lrm-mean"
    LRM_MOM = "lrm-mom"
    SIC_MOM_K2 = "sic-mom-k2"
    SIC_MOM_KOPT = "sic-mom-kopt"


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(str(x))


def _check_eps_delta(epsilon, delta):
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


def hoeffding_samples(range_width: float, epsilon: float, delta: float) -> int:
    """ceil((b - a)^2 ln(2/delta) / (2 eps^2)) samples for an eps-accurate mean w.p. 1 - delta."""
    _check_eps_delta(epsilon, delta)
    if not range_width > 0:
        raise ValueError("range width must be > 0")
    return math.ceil(float(_frac(range_width) ** 2 / (2 * _frac(epsilon) ** 2)) * math.log(2 / delta))


def num_batches(delta: float) -> int:
    """N_B = ceil(8 ln(1/delta))."""
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return math.ceil(8 * math.log(1 / delta))


def batch_size(variance_bound, epsilon: float) -> int:
    """B = ceil(4 sigma^2 / eps^2)."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    if not variance_bound > 0:
        raise ValueError("variance bound must be > 0")
    return math.ceil(4 * _frac(variance_bound) / _frac(epsilon) ** 2)


def mom_plan(variance_bound, epsilon: float, delta: float) -> tuple[int, int]:
    """(N_B, B): N_B batches of B samples each for median-of-means."""
    _check_eps_delta(epsilon, delta)
    return num_batches(delta), batch_size(variance_bound, epsilon)


def k_opt(s: int, epsilon: float) -> int:
    """Closed-form batch size for SIC median-of-means at precision eps.

    ceil(((a + 1) + sqrt((a - 1)^2 + 32 * 3^s / eps^2)) / 2) with
    a = 16 (3/2)^s / eps^2; decided exactly by comparing squares of rationals.
    """
    if s < 1:
        raise ValueError("s must be >= 1")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    eps2 = _frac(epsilon) ** 2
    a = 16 * Fraction(3, 2) ** s / eps2
    disc = (a - 1) ** 2 + 32 * Fraction(3) ** s / eps2

    def ok(k: int) -> bool:
        lhs = 2 * k - a - 1
        return lhs >= 0 and lhs * lhs >= disc

    k = math.ceil((float(a) + 1 + math.sqrt(float(disc))) / 2)
    while k > 1 and ok(k - 1):
        k -= 1
    while not ok(k):
        k += 1
    return max(k, 2)


@dataclass(frozen=True)
class BudgetPlan:
    strategy: Strategy
    epsilon: float
    delta: float
    s: int
    L: int | None
    K: int
    N_B: int
    B: int
    total_shots: int
    settings_count: int
    k_opt: int | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["strategy"] = self.strategy.value
        return d


def plan(strategy: Strategy | str, s: int, epsilon: float, delta: float) -> BudgetPlan:
    """Budget for one strategy.

    LRM-Mean applies Hoeffding to the per-unitary estimates, whose range is
    (3/2)^s; it is a single batch of L unitaries.
    """
    strategy = Strategy(strategy)
    _check_eps_delta(epsilon, delta)
    if s < 1:
        raise ValueError("s must be >= 1")
    if strategy is Strategy.LRM_MEAN:
        L = hoeffding_samples(Fraction(3, 2) ** s, epsilon, delta)
        return BudgetPlan(strategy, epsilon, delta, s, L=L, K=2, N_B=1, B=L,
                          total_shots=2 * L, settings_count=L)
    nb = num_batches(delta)
    if strategy is Strategy.LRM_MOM:
        B = batch_size(Fraction(3, 2) ** s, epsilon)
        return BudgetPlan(strategy, epsilon, delta, s, L=nb * B, K=2, N_B=nb, B=B,
                          total_shots=2 * nb * B, settings_count=nb * B)
    if strategy is Strategy.SIC_MOM_K2:
        B = batch_size(Fraction(3) ** s, epsilon)
        return BudgetPlan(strategy, epsilon, delta, s, L=None, K=2, N_B=nb, B=B,
                          total_shots=2 * nb * B, settings_count=1)
    K = k_opt(s, epsilon)
    return BudgetPlan(strategy, epsilon, delta, s, L=None, K=K, N_B=nb, B=K,
                      total_shots=nb * K, settings_count=1, k_opt=K)


def compare(s: int, epsilon: float, delta: float) -> list[BudgetPlan]:
    return [plan(st, s, epsilon, delta) for st in Strategy]
