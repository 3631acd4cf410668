"""CE estimators from LRM and SIC data, their variance formulas and moment oracles."""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .ensembles import EnsembleKind, clifford_array, clifford_measurement_class, sample_haar_u2
from .measurement import LRMRecord, SICRecord, lrm_distributions, sic_distribution
from .planner import Strategy, k_opt, num_batches
from .states import PureState, validate_subset


Method = Strategy


MOM_METHODS = (Method.LRM_MOM, Method.SIC_MOM_K2, Method.SIC_MOM_KOPT)


@dataclass
class EstimateResult:
    """A CE point estimate. Never clipped: it may be negative, and is at most 1.

    ``variance_bound`` bounds the variance of the averaged quantity behind the
    estimate (the full mean for LRM-Mean, one batch mean for MoM methods).
    """
    method: Method
    estimate: float
    subset: tuple[int, ...]
    variance_bound: float
    shots_used: int
    settings_used: int
    batch_means: list[float] | None = None
    delta: float | None = None
    epsilon: float | None = None
    plan: dict | None = field(default=None)

    def __post_init__(self):
        self.method = Method(self.method)
        self.subset = tuple(self.subset)
        if (self.batch_means is not None) != (self.method in MOM_METHODS):
            raise ValueError("batch_means must be present exactly for median-of-means methods")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["method"] = self.method.value
        d["subset"] = list(self.subset)
        return {k: v for k, v in d.items() if v is not None}

    @classmethod
    def from_dict(cls, d: dict) -> "EstimateResult":
        return cls(**d)


# -- coincidence statistic -----------------------------------------------------

def coincidence_stat(outcomes) -> float:
    """Fraction of ordered pairs k != k' among K outcomes with equal strings.

    Counted through the tally sum_z c_z (c_z - 1) / (K (K - 1)), which is the
    same number as the pairwise double loop.
    """
    outcomes = np.asarray(outcomes).ravel()
    K = outcomes.size
    if K < 2:
        raise ValueError("coincidence statistic needs K >= 2")
    _, counts = np.unique(outcomes, return_counts=True)
    return float(np.sum(counts * (counts - 1)) / (K * (K - 1)))


def coincidence_stats(outcomes: np.ndarray) -> np.ndarray:
    """Row-wise :func:`coincidence_stat` for an (L, K) outcome array."""
    outcomes = np.asarray(outcomes)
    L, K = outcomes.shape
    if K < 2:
        raise ValueError("coincidence statistic needs K >= 2")
    if K == 2:
        return (outcomes[:, 0] == outcomes[:, 1]).astype(float)
    srt = np.sort(outcomes, axis=1)
    # equal strings are adjacent after sorting; count pairs inside each run
    same = srt[:, 1:] == srt[:, :-1]
    pairs = np.zeros(L)
    run = np.zeros(L)
    for j in range(K - 1):
        run = np.where(same[:, j], run + 1, 0)
        pairs += run
    return 2 * pairs / (K * (K - 1))


def phat_squared(counts, K: int) -> np.ndarray:
    """Unbiased per-string estimates of P(z)^2 from K shots: P^(K P^ - 1)/(K - 1)."""
    counts = np.asarray(counts, dtype=float)
    if K < 2:
        raise ValueError("need K >= 2")
    if np.any(counts < 0) or counts.sum() != K:
        raise ValueError(f"counts must be non-negative and sum to K={K}")
    p = counts / K
    return p * (K * p - 1) / (K - 1)


def median(values) -> float:
    """Median; even-length lists average the two central order statistics."""
    v = np.sort(np.asarray(values, dtype=float))
    m = len(v)
    if m == 0:
        raise ValueError("median of empty list")
    return float(v[m // 2]) if m % 2 else float(0.5 * (v[m // 2 - 1] + v[m // 2]))


# -- variance formulas and bounds ----------------------------------------------

@dataclass(frozen=True)
class MomentSummary:
    P2: float
    P3: float
    P22: float
    provenance: str  # exact_enumeration | monte_carlo | closed_form_bound

    def __post_init__(self):
        tol = 1e-12
        if not (-tol <= self.P3 <= self.P2 + tol and self.P2 <= 1 + tol):
            raise ValueError(f"moments violate 0 <= P3 <= P2 <= 1: {self}")
        if self.P22 > self.P2 + tol:
            raise ValueError(f"moments violate P22 <= P2: {self}")


def lrm_variance_formula(m: MomentSummary, K: int) -> float:
    """Exact Var of the LRM coincidence statistic for one unitary with K shots."""
    if K < 2:
        raise ValueError("need K >= 2")
    P2, P3, P22 = m.P2, m.P3, m.P22
    return ((2 * P2 * (1 - P2) + 4 * (K - 2) * (P3 - P2**2))
            + (K - 2) * (K - 3) * (P22 - P2**2)) / (K * (K - 1))


def sic_variance_formula(P2: float, P3: float, K: int) -> float:
    """Exact Var of the SIC coincidence statistic over K i.i.d. outcomes."""
    if K < 2:
        raise ValueError("need K >= 2")
    return (2 * P2 * (1 - P2) + 4 * (K - 2) * (P3 - P2**2)) / (K * (K - 1))


def lrm_ce_variance_bound(s: int, K: int) -> float:
    """State-independent bound on Var of 1 - (3/2)^s S_l^(K) for one unitary.

    Uses P2 <= (2/3)^s, P3 <= 2^-s and P22 <= P2 after dropping the -P2^2 terms;
    at K = 2 this is the sharper P2(1 - P2) <= (2/3)^s, i.e. (3/2)^s.
    """
    if K == 2:
        return 1.5**s
    p2, p3 = (2 / 3) ** s, 0.5**s
    return 2.25**s * (2 * p2 + 4 * (K - 2) * p3 + (K - 2) * (K - 3) * p2) / (K * (K - 1))


def sic_ce_variance_bound(s: int, K: int) -> float:
    """Bound on Var of 1 - 3^s S^(K) from SIC data: 2/(K(K-1)) (3^s + 2(K-2)(3/2)^s)."""
    if K < 2:
        raise ValueError("need K >= 2")
    if K == 2:
        return 3.0**s
    return 2 / (K * (K - 1)) * (3.0**s + 2 * (K - 2) * 1.5**s)


# -- estimators ----------------------------------------------------------------

def lrm_unitary_estimates(record: LRMRecord) -> np.ndarray:
    """Per-unitary unbiased CE estimates 1 - (3/2)^s S_l^(K)."""
    return 1 - 1.5**record.s * coincidence_stats(record.outcomes)


def lrm_mean_estimate(record: LRMRecord) -> EstimateResult:
    est = lrm_unitary_estimates(record)
    return EstimateResult(
        method=Method.LRM_MEAN,
        estimate=float(np.mean(est)),
        subset=record.subset,
        variance_bound=lrm_ce_variance_bound(record.s, record.K) / record.L,
        shots_used=record.L * record.K,
        settings_used=record.L,
    )


def lrm_mom_estimate(record: LRMRecord, delta: float) -> EstimateResult:
    """Median of N_B = ceil(8 ln(1/delta)) batch means of pair indicators (K = 2).

    Batches hold B = L // N_B consecutive unitaries; trailing unitaries that do
    not fill a batch are left out.
    """
    if record.K != 2:
        raise ValueError("LRM median-of-means requires K == 2")
    nb = num_batches(delta)
    if record.L < nb:
        raise ValueError(f"insufficient unitaries for batching: L={record.L} < N_B={nb}")
    B = record.L // nb
    est = lrm_unitary_estimates(record)[: nb * B].reshape(nb, B)
    means = est.mean(axis=1)
    return EstimateResult(
        method=Method.LRM_MOM,
        estimate=median(means),
        subset=record.subset,
        variance_bound=lrm_ce_variance_bound(record.s, 2) / B,
        shots_used=2 * nb * B,
        settings_used=nb * B,
        batch_means=[float(x) for x in means],
        delta=delta,
    )


def sic_mom_estimate_k2(record: SICRecord, delta: float) -> EstimateResult:
    """Pair consecutive SIC outcomes, median over N_B batches of B pair indicators."""
    nb = num_batches(delta)
    if record.M % (2 * nb):
        raise ValueError(f"M={record.M} is not 2 * N_B * B for N_B={nb}")
    B = record.M // (2 * nb)
    pairs = record.outcomes.reshape(-1, 2)
    est = (1 - 3.0**record.s * (pairs[:, 0] == pairs[:, 1])).reshape(nb, B)
    means = est.mean(axis=1)
    return EstimateResult(
        method=Method.SIC_MOM_K2,
        estimate=median(means),
        subset=record.subset,
        variance_bound=sic_ce_variance_bound(record.s, 2) / B,
        shots_used=record.M,
        settings_used=1,
        batch_means=[float(x) for x in means],
        delta=delta,
    )


def sic_mom_estimate_kopt(record: SICRecord, delta: float, epsilon: float | None = None,
                          K: int | None = None) -> EstimateResult:
    """Median over N_B batches of 1 - 3^s S_b^(K), K = K_opt(s, epsilon) unless given."""
    if (epsilon is None) == (K is None):
        raise ValueError("give exactly one of epsilon or K")
    if K is None:
        K = k_opt(record.s, epsilon)
    nb = num_batches(delta)
    if record.M != nb * K:
        raise ValueError(f"budget mismatch: M={record.M} but N_B * K = {nb} * {K} = {nb * K}")
    stats = coincidence_stats(record.outcomes.reshape(nb, K))
    means = 1 - 3.0**record.s * stats
    return EstimateResult(
        method=Method.SIC_MOM_KOPT,
        estimate=median(means),
        subset=record.subset,
        variance_bound=sic_ce_variance_bound(record.s, K),
        shots_used=record.M,
        settings_used=1,
        batch_means=[float(x) for x in means],
        delta=delta,
        epsilon=epsilon,
    )


# -- moment oracles ------------------------------------------------------------

CLIFFORD_ENUMERATION_MAX_S = 6


def clifford_exhaustive_distributions(state: PureState, labels, reduce_classes: bool = True):
    """Outcome distributions for every local Clifford setting, with weights.

    With ``reduce_classes`` the 24^s settings are grouped by signed-Pauli
    class (4 Cliffords per class and qubit, identical statistics); otherwise
    all 24^s settings are listed. Returns (distributions, weights).
    """
    labels = validate_subset(labels, state.n)
    s = len(labels)
    if s > CLIFFORD_ENUMERATION_MAX_S or (not reduce_classes and s > 3):
        raise ValueError(f"Clifford enumeration infeasible for s={s}")
    if reduce_classes:
        cls = clifford_measurement_class()
        reps = [int(np.flatnonzero(cls == c)[0]) for c in range(6)]
        settings = np.array(list(itertools.product(reps, repeat=s)))
    else:
        settings = np.array(list(itertools.product(range(24), repeat=s)))
    dists = lrm_distributions(state, labels, clifford_array()[settings])
    return dists, np.full(len(dists), 1 / len(dists))


def moments_oracle(state: PureState, labels, kind: EnsembleKind | str = "sic",
                   num_samples: int = 20000, rng: np.random.Generator | None = None) -> MomentSummary:
    """P2, P3 and P22 for LRMs under an ensemble, or for local SIC measurements.

    For SIC data there is no average over settings, so P22 = P2^2.
    """
    labels = validate_subset(labels, state.n)
    s = len(labels)
    if kind == "sic":
        p = sic_distribution(state, labels)
        P2, P3 = float(np.sum(p**2)), float(np.sum(p**3))
        m = MomentSummary(P2, P3, P2**2, "exact_enumeration")
        _check_bound(P2 <= 3.0**-s + 1e-12 and P3 <= 6.0**-s + 1e-12, m)
        return m
    kind = EnsembleKind(kind)
    if kind is EnsembleKind.CLIFFORD:
        dists, w = clifford_exhaustive_distributions(state, labels)
        provenance = "exact_enumeration"
    else:
        rng = rng if rng is not None else np.random.default_rng()
        us = sample_haar_u2(rng, num_samples * s).reshape(num_samples, s, 2, 2)
        dists, w = lrm_distributions(state, labels, us), np.full(num_samples, 1 / num_samples)
        provenance = "monte_carlo"
    sq = np.sum(dists**2, axis=1)
    m = MomentSummary(float(w @ sq), float(w @ np.sum(dists**3, axis=1)), float(w @ sq**2), provenance)
    if provenance == "exact_enumeration":
        _check_bound(m.P2 <= (2 / 3) ** s + 1e-12, m)
    return m


def _check_bound(ok: bool, m: MomentSummary):
    if not ok:
        raise ArithmeticError(f"moment bound violated: {m}")


def enumerate_lrm_mean_expectation(state: PureState, labels, K: int = 2) -> float:
    """Exact E[LRM-Mean estimate] by enumerating every Clifford setting and outcome tuple.

    Each of the 24^s settings is weighted 24^-s and each K-tuple of outcomes
    by its Born probability; the per-setting estimate is evaluated on the
    tuple with :func:`coincidence_stat`. No sampling anywhere.
    """
    labels = validate_subset(labels, state.n)
    s = len(labels)
    dists, weights = clifford_exhaustive_distributions(state, labels, reduce_classes=False)
    total = 0.0
    tuples = list(itertools.product(range(2**s), repeat=K))
    stat = np.array([1 - 1.5**s * coincidence_stat(t) for t in tuples])
    for p, w in zip(dists, weights):
        probs = np.array([math.prod(p[z] for z in t) for t in tuples])
        total += w * float(probs @ stat)
    return total


def estimate_record(record: LRMRecord | SICRecord, method: Method | str, delta: float | None = None,
                    epsilon: float | None = None, K: int | None = None) -> EstimateResult:
    """Apply ``method`` to a record, checking that the record kind fits the method."""
    method = Method(method)
    lrm = method in (Method.LRM_MEAN, Method.LRM_MOM)
    if lrm != isinstance(record, LRMRecord):
        kind = "LRM" if isinstance(record, LRMRecord) else "SIC"
        raise ValueError(f"record kind mismatch: {kind} record cannot feed {method.value}")
    if method is Method.LRM_MEAN:
        return lrm_mean_estimate(record)
    if delta is None:
        raise ValueError(f"{method.value} needs delta")
    if method is Method.LRM_MOM:
        return lrm_mom_estimate(record, delta)
    if method is Method.SIC_MOM_K2:
        return sic_mom_estimate_k2(record, delta)
    return sic_mom_estimate_kopt(record, delta, epsilon=epsilon, K=K)
