"""The nine acceptance criteria, each at its stated tolerance and runtime budget."""
import itertools
import math
import time
from fractions import Fraction

import numpy as np

from ce_lab.ensembles import design_check, sic_constants, sic_invariants
from ce_lab.estimators import (coincidence_stats, enumerate_lrm_mean_expectation, lrm_variance_formula,
                               moments_oracle, sic_variance_formula)
from ce_lab.experiments import binomial_threshold, concentration_trials, fig2_rows, fig4_trials
from ce_lab.measurement import sic_distribution, sic_distribution_dilated, simulate_lrm, simulate_sic
from ce_lab.planner import Strategy, hoeffding_samples, k_opt, mom_plan
from ce_lab.states import exact_ce, exact_ce_via_projectors, ghz_state, product_state, random_state, w_state
from oracles import ceil_fraction, k_opt_closed_form


def test_1_closed_form_fixtures(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    for n in range(2, 9):
        full = tuple(range(1, n + 1))
        worst = max(worst, abs(exact_ce(ghz_state(n), full) - (0.5 - 0.5**n)),
                    abs(exact_ce(w_state(n), full) - (0.5 - 1 / (2 * n))))
    dt = time.perf_counter() - t0
    criterion(1, "GHZ/W closed forms n=2..8", worst <= 1e-10 and dt < 1,
              f"max error {worst:.2e} (tol 1e-10), {dt:.3f}s (< 1s)")


def test_2_triple_equivalence(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for i in range(50):
        n = 1 + i % 5
        state = random_state(n, rng)
        k = rng.integers(1, n + 1)
        labels = tuple(sorted(rng.choice(np.arange(1, n + 1), size=k, replace=False).tolist()))
        a = exact_ce(state, labels)
        b = exact_ce_via_projectors(state, labels)
        c = 1 - 3 ** len(labels) * float(np.sum(sic_distribution(state, labels) ** 2))
        worst = max(worst, abs(a - b), abs(a - c), abs(b - c))
    dt = time.perf_counter() - t0
    criterion(2, "purity sum == two-copy projector == SIC identity on 50 states", worst <= 1e-10 and dt < 30,
              f"max pairwise gap {worst:.2e} (tol 1e-10), {dt:.2f}s (< 30s)")


def test_3_exhaustive_unbiasedness(criterion):
    rng = np.random.default_rng(3)
    states = [ghz_state(2), random_state(2, rng), random_state(2, rng)]
    worst = 0.0
    for state in states:
        for labels in [(1,), (2,), (1, 2)]:
            worst = max(worst, abs(enumerate_lrm_mean_expectation(state, labels, K=2) - exact_ce(state, labels)))
    criterion(3, "24^s Clifford enumeration reproduces exact CE (n=2, s=1,2, K=2)", worst <= 1e-10,
              f"max error {worst:.2e} (tol 1e-10)")


def test_4_variance_formulas(criterion):
    t0 = time.perf_counter()
    N = 10**6
    rows = []
    for name, state in [("GHZ_2", ghz_state(2)), ("|00>", product_state(2))]:
        labels = (1, 2)
        m = moments_oracle(state, labels, "clifford")
        x = coincidence_stats(simulate_lrm(state, labels, N, 2, seed=41).outcomes)
        rows.append((f"LRM K=2 {name}", lrm_variance_formula(m, 2), np.var(x, ddof=1)))
        ms = moments_oracle(state, labels, "sic")
        for K in (2, 4):
            r = simulate_sic(state, labels, N * K, seed=42 + K)
            x = coincidence_stats(r.outcomes.reshape(N, K))
            rows.append((f"SIC K={K} {name}", sic_variance_formula(ms.P2, ms.P3, K), np.var(x, ddof=1)))
    dt = time.perf_counter() - t0
    rel = [abs(e - f) / f for _, f, e in rows]
    detail = "; ".join(f"{n} rel {r:.4f}" for (n, _, _), r in zip(rows, rel))
    criterion(4, "variance formulas vs 10^6 simulated statistics", max(rel) <= 0.03 and dt < 120,
              f"{detail} (tol 0.03), {dt:.1f}s (< 120s)")


def test_5_concentration(criterion):
    t0 = time.perf_counter()
    state, labels = ghz_state(3), (1, 2, 3)
    reports = [concentration_trials(state, labels, st, 0.1, 0.05, 200, seed=500 + i)
               for i, st in enumerate([Strategy.LRM_MOM, Strategy.SIC_MOM_K2])]
    dt = time.perf_counter() - t0
    limit = binomial_threshold(0.05, 200)
    ok = all(r.failure_rate <= limit for r in reports) and dt < 600
    detail = "; ".join(f"{r.strategy.value} failures {r.failures}/200" for r in reports)
    criterion(5, "GHZ_3 eps=0.1 delta=0.05 failure rate", ok, f"{detail} (max rate {limit:.4f}), {dt:.1f}s (< 600s)")


def test_6_fig2(criterion):
    t0 = time.perf_counter()
    rows = fig2_rows(range(2, 7), L=10**4, K=2, seed=6, ensemble="haar")
    dt = time.perf_counter() - t0
    worst = max(abs(r["z"]) for r in rows)
    criterion(6, "Haar L=10^4 K=2 GHZ/W n=2..6 within 3 SE", worst <= 3 and dt < 300,
              f"max |z| {worst:.2f} (tol 3), {dt:.1f}s (< 300s)")


def test_7_fig4(criterion):
    t0 = time.perf_counter()
    budget, res = fig4_trials(trials=1000, n=5, epsilon=0.05, delta=0.05, seed=7)
    dt = time.perf_counter() - t0
    means = {st.value: float(v.mean()) for st, v in res.items()}
    mean_ok = all(abs(m - 0.46875) <= 0.02 for m in means.values())
    sd_mean = float(np.std(res[Strategy.LRM_MEAN], ddof=1))
    sd_mom = float(np.std(res[Strategy.LRM_MOM], ddof=1))
    ratio = sd_mom / sd_mean
    detail = (", ".join(f"{k} mean {v:.5f}" for k, v in means.items())
              + f" (tol 0.02); std LRM-MoM/LRM-Mean = {sd_mom:.5f}/{sd_mean:.5f} = {ratio:.3f} (max 1.1)"
              + f"; budget {budget.total} shots; {dt:.0f}s (< 1800s)")
    criterion(7, "1000 trials GHZ_5 at shared SIC-Kopt budget", mean_ok and ratio <= 1.1 and dt < 1800, detail)


def test_8_design_and_dilation(criterion):
    t0 = time.perf_counter()
    c = sic_constants()
    inv = sic_invariants(c)
    checks = {k: inv[k] for k in ("povm_completeness", "two_design", "pairwise_overlap", "dilation_unitary")}
    checks["design_check"] = design_check([(0.25, v) for v in c.states])[1]
    rng = np.random.default_rng(8)
    states = [ghz_state(3), w_state(3)] + [random_state(n, rng) for n in (1, 2, 3, 4)]
    checks["dilated_vs_direct"] = max(
        float(np.max(np.abs(sic_distribution_dilated(s, range(1, s.n + 1)) - sic_distribution(s, range(1, s.n + 1)))))
        for s in states)
    dt = time.perf_counter() - t0
    worst = max(checks.values())
    criterion(8, "SIC design and dilation suite", worst <= 1e-10 and dt < 5,
              f"max residual {worst:.2e} over {len(checks)} checks (tol 1e-10), {dt:.3f}s (< 5s)")


def test_9_planner_spot_values(criterion):
    # oracles first: each value recomputed from scratch, then compared to the frozen constant
    oracle_k = k_opt_closed_form(1, 0.05)
    oracle_mom = (math.ceil(8 * math.log(1 / 0.05)), ceil_fraction(4 * Fraction(1) / Fraction("0.1") ** 2))
    oracle_h = math.ceil(1**2 * math.log(2 / 0.05) / (2 * 0.1**2))
    frozen = (9601, (24, 400), 185)
    got = (k_opt(1, 0.05), mom_plan(1, 0.1, 0.05), hoeffding_samples(1, 0.1, 0.05))
    ok = (oracle_k, oracle_mom, oracle_h) == frozen == got
    criterion(9, "planner spot values", ok,
              f"k_opt {got[0]} (oracle {oracle_k}), mom_plan {got[1]} (oracle {oracle_mom}), "
              f"hoeffding {got[2]} (oracle {oracle_h})")
