"""Concentratable entanglement: exact values and estimation from local measurements."""
from .ensembles import EnsembleKind, clifford_table, design_check, sic_constants, twirl_check
from .estimators import (EstimateResult, Method, estimate_record, lrm_mean_estimate, lrm_mom_estimate,
                         sic_mom_estimate_k2, sic_mom_estimate_kopt)
from .measurement import LRMRecord, SICRecord, simulate_lrm, simulate_sic
from .planner import BudgetPlan, Strategy, compare, hoeffding_samples, k_opt, mom_plan, plan
from .records import read_record, read_result, write_record, write_result
from .states import (PureState, ce_to_concurrence, exact_ce, exact_ce_via_projectors, ghz_state,
                     make_state, mixed_lower_bound, product_state, random_state, w_state)

__version__ = "0.1.0"
