"""Repeated-trial experiments: figure datasets, concentration checks and the oracle suite."""
from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .ensembles import (EnsembleKind, SICConstants, design_check, pauli_eigenstates, sic_constants,
                        sic_invariants, twirl_check)
from .estimators import (Method, coincidence_stats, enumerate_lrm_mean_expectation, estimate_record,
                         lrm_variance_formula, moments_oracle, sic_variance_formula)
from .measurement import (LRMRecord, SICRecord, sic_distribution, sic_distribution_dilated,
                          simulate_lrm, simulate_sic)
from .planner import BudgetPlan, Strategy, num_batches, plan
from .states import (PureState, exact_ce, exact_ce_via_projectors, ghz_state, product_state,
                     random_state, validate_subset, w_state)


def trial_seed(seed: int, trial: int, stream: int = 0) -> int:
    """Independent 63-bit seed for (trial, stream) derived from a master seed."""
    word = np.random.SeedSequence([seed, trial, stream]).generate_state(1, dtype=np.uint64)[0]
    return int(word >> np.uint64(1))


def _map(fn, items, workers: int):
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# -- single strategy runs ------------------------------------------------------

def simulate_for_plan(state: PureState, labels, p: BudgetPlan, seed: int,
                      ensemble: EnsembleKind | str = "clifford") -> LRMRecord | SICRecord:
    if p.strategy in (Strategy.LRM_MEAN, Strategy.LRM_MOM):
        return simulate_lrm(state, labels, p.L, p.K, ensemble=ensemble, seed=seed)
    return simulate_sic(state, labels, p.total_shots, seed=seed)


def run_planned(state: PureState, labels, p: BudgetPlan, seed: int,
                ensemble: EnsembleKind | str = "clifford"):
    """Simulate at the planned budget and estimate; returns (record, result)."""
    record = simulate_for_plan(state, labels, p, seed, ensemble)
    result = estimate_record(record, p.strategy, delta=p.delta,
                             K=p.K if p.strategy is Strategy.SIC_MOM_KOPT else None)
    result.epsilon = p.epsilon
    result.plan = p.to_dict()
    return record, result


@dataclass
class ConcentrationReport:
    strategy: Strategy
    truth: float
    epsilon: float
    delta: float
    estimates: np.ndarray
    failures: int
    threshold: float

    @property
    def trials(self) -> int:
        return len(self.estimates)

    @property
    def failure_rate(self) -> float:
        return self.failures / self.trials

    @property
    def passed(self) -> bool:
        return self.failure_rate <= self.threshold


def binomial_threshold(delta: float, trials: int, z: float = 3.0) -> float:
    return delta + z * math.sqrt(delta * (1 - delta) / trials)


def concentration_trials(state: PureState, labels, strategy: Strategy | str, epsilon: float,
                         delta: float, trials: int, seed: int, workers: int = 1,
                         ensemble: EnsembleKind | str = "clifford") -> ConcentrationReport:
    """Independent seeded trials at the planned budget; counts |C_hat - C| >= epsilon."""
    labels = validate_subset(labels, state.n)
    p = plan(strategy, len(labels), epsilon, delta)
    truth = exact_ce(state, labels)
    est = np.array(_map(lambda t: run_planned(state, labels, p, trial_seed(seed, t), ensemble)[1].estimate,
                        range(trials), workers))
    failures = int(np.sum(np.abs(est - truth) >= epsilon))
    return ConcentrationReport(p.strategy, truth, epsilon, delta, est, failures,
                               binomial_threshold(delta, trials))


# -- figure datasets -----------------------------------------------------------

def lrm_mean_standard_error(s: int, ce: float, L: int) -> float:
    """Std of the K=2 LRM-Mean estimate: (3/2)^s sqrt(P2 (1 - P2) / L), P2 = (2/3)^s (1 - C)."""
    p2 = (2 / 3) ** s * (1 - ce)
    return 1.5**s * math.sqrt(p2 * (1 - p2) / L)


def fig2_rows(n_values=range(2, 7), L: int = 10_000, K: int = 2, seed: int = 0,
              ensemble: EnsembleKind | str = "haar", workers: int = 1) -> list[dict]:
    """LRM-Mean estimates of C([n]) for GHZ_n and W_n next to the analytic values."""
    jobs = [(fam, n) for n in n_values for fam in ("ghz", "w")]

    def one(job):
        fam, n = job
        state = ghz_state(n) if fam == "ghz" else w_state(n)
        labels = tuple(range(1, n + 1))
        analytic = 0.5 - 0.5**n if fam == "ghz" else 0.5 - 1 / (2 * n)
        stream = 0 if fam == "ghz" else 1
        rec = simulate_lrm(state, labels, L, K, ensemble=ensemble, seed=trial_seed(seed, n, stream))
        est = estimate_record(rec, Method.LRM_MEAN).estimate
        se = lrm_mean_standard_error(n, analytic, L) if K == 2 else math.nan
        return {"state": fam, "n": n, "estimate": est, "analytic": analytic, "se": se,
                "z": (est - analytic) / se if K == 2 else math.nan}

    return _map(one, jobs, workers)


@dataclass(frozen=True)
class Fig4Budget:
    """How one shared shot total is split across the four strategies."""
    total: int
    n_batches: int
    k_opt: int
    L: int            # LRM unitaries (K = 2), shared by Mean and MoM
    mom_B: int        # LRM-MoM unitaries per batch
    k2_B: int         # SIC-K2 pairs per batch
    k2_shots: int     # leading SIC outcomes consumed by SIC-K2

    def shots(self) -> dict[Strategy, int]:
        return {Strategy.LRM_MEAN: 2 * self.L, Strategy.LRM_MOM: 2 * self.n_batches * self.mom_B,
                Strategy.SIC_MOM_K2: self.k2_shots, Strategy.SIC_MOM_KOPT: self.total}


def fig4_budget(s: int, epsilon: float, delta: float) -> Fig4Budget:
    """Total = N_B * K_opt (SIC-Kopt plan). LRMs get total // 2 unitaries with K = 2;
    LRM-MoM uses N_B batches of L // N_B of them; SIC-K2 uses N_B batches of
    (total // 2) // N_B consecutive pairs of one shared SIC record."""
    kp = plan(Strategy.SIC_MOM_KOPT, s, epsilon, delta)
    nb = num_batches(delta)
    L = kp.total_shots // 2
    k2_B = (kp.total_shots // 2) // nb
    return Fig4Budget(kp.total_shots, nb, kp.k_opt, L, L // nb, k2_B, 2 * nb * k2_B)


def fig4_trial(state: PureState, labels, budget: Fig4Budget, delta: float, seed: int, t: int) -> dict:
    lrm = simulate_lrm(state, labels, budget.L, 2, ensemble="clifford", seed=trial_seed(seed, t, 0))
    sic = simulate_sic(state, labels, budget.total, seed=trial_seed(seed, t, 1))
    head = SICRecord(sic.n, sic.subset, sic.outcomes[: budget.k2_shots], seed=sic.seed, creator=sic.creator)
    return {
        Strategy.LRM_MEAN: estimate_record(lrm, Method.LRM_MEAN).estimate,
        Strategy.LRM_MOM: estimate_record(lrm, Method.LRM_MOM, delta=delta).estimate,
        Strategy.SIC_MOM_K2: estimate_record(head, Method.SIC_MOM_K2, delta=delta).estimate,
        Strategy.SIC_MOM_KOPT: estimate_record(sic, Method.SIC_MOM_KOPT, delta=delta, K=budget.k_opt).estimate,
    }


def fig4_trials(trials: int = 1000, n: int = 5, epsilon: float = 0.05, delta: float = 0.05,
                seed: int = 0, workers: int = 1) -> tuple[Fig4Budget, dict[Strategy, np.ndarray]]:
    """Per-trial estimates of C([n]) for GHZ_n under all four strategies at a shared budget."""
    state, labels = ghz_state(n), tuple(range(1, n + 1))
    budget = fig4_budget(n, epsilon, delta)
    rows = _map(lambda t: fig4_trial(state, labels, budget, delta, seed, t), range(trials), workers)
    return budget, {st: np.array([r[st] for r in rows]) for st in Strategy}


# -- oracle suite --------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool


def _abs_check(name, value, tol) -> Check:
    return Check(name, float(value), tol, bool(value <= tol))


def variance_agreement(state: PureState, labels, kind: str, K: int, num_stats: int,
                       seed: int) -> tuple[float, float]:
    """(formula, empirical) variance of the K-shot coincidence statistic.

    ``kind`` is "sic" or an LRM ensemble; LRM moments come from the exact
    Clifford enumeration or Haar Monte-Carlo.
    """
    labels = validate_subset(labels, state.n)
    if kind == "sic":
        m = moments_oracle(state, labels, "sic")
        formula = sic_variance_formula(m.P2, m.P3, K)
        rec = simulate_sic(state, labels, num_stats * K, seed=seed)
        stats = coincidence_stats(rec.outcomes.reshape(num_stats, K))
    else:
        m = moments_oracle(state, labels, kind, rng=np.random.default_rng(seed))
        formula = lrm_variance_formula(m, K)
        stats = coincidence_stats(simulate_lrm(state, labels, num_stats, K, ensemble=kind, seed=seed).outcomes)
    return formula, float(np.var(stats, ddof=1))


def verify_suite(constants: SICConstants | None = None, seed: int = 0,
                 variance_stats: int = 200_000) -> list[Check]:
    """Design, dilation, unbiasedness and variance-formula checks with their tolerances.

    ``constants`` replaces the SIC constants under test (used to confirm the
    suite catches a corrupted table).
    """
    c = constants if constants is not None else sic_constants()
    checks = [_abs_check(f"sic:{k}", v, 1e-10) for k, v in sic_invariants(c).items()]
    checks.append(_abs_check("design:sic", design_check([(0.25, v) for v in c.states])[1], 1e-10))
    checks.append(_abs_check("design:pauli6", design_check([(1 / 6, v) for v in pauli_eigenstates()])[1], 1e-10))
    for z in (0, 1):
        checks.append(_abs_check(f"twirl:clifford:z={z}", twirl_check("clifford", z), 1e-12))

    rng = np.random.default_rng(seed)
    states = [ghz_state(3), w_state(3), random_state(3, rng), random_state(4, rng)]
    dil = max(float(np.max(np.abs(sic_distribution_dilated(st, range(1, st.n + 1), constants=c)
                                  - sic_distribution(st, range(1, st.n + 1)))))
              for st in states)
    checks.append(_abs_check("dilation:equivalence", dil, 1e-10))
    sic_id = max(abs(1 - 3**st.n * float(np.sum(sic_distribution(st, range(1, st.n + 1), constants=c) ** 2))
                     - exact_ce(st, range(1, st.n + 1))) for st in states)
    checks.append(_abs_check("sic:ce-identity", sic_id, 1e-10))
    proj = max(abs(exact_ce_via_projectors(st, range(1, st.n + 1)) - exact_ce(st, range(1, st.n + 1)))
               for st in states)
    checks.append(_abs_check("ce:two-copy-projector", proj, 1e-10))

    two = random_state(2, rng)
    for labels in [(1,), (1, 2)]:
        err = abs(enumerate_lrm_mean_expectation(two, labels) - exact_ce(two, labels))
        checks.append(_abs_check(f"unbiased:clifford-enumeration:s={len(labels)}", err, 1e-10))

    cases = [(name, st, kind) for name, st in [("ghz2", ghz_state(2)), ("zero2", product_state(2))]
             for kind in ("clifford", "sic")]
    for i, (name, st, kind) in enumerate(cases):
        f, e = variance_agreement(st, (1, 2), kind, 2, variance_stats, trial_seed(seed, i, 7))
        checks.append(_abs_check(f"variance:{kind}:{name}:K=2", abs(e - f) / f, 0.03))
    return checks


def corrupted_sic_constants() -> SICConstants:
    """SIC constants with one dilation entry perturbed; a negative control for the suite."""
    c = sic_constants()
    bad = c.dilation.copy()
    bad[0, 1] += 1e-3
    return dataclasses.replace(c, dilation=bad)
