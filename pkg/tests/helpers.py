"""Shared builders for test states and contexts."""

from aflsim.core import DataOwnerState
from aflsim.policy_pas import DelegateQuote, DelegationContext


def make_state(**overrides) -> DataOwnerState:
    base = dict(
        id=0,
        reputation_r=0.6,
        pending_q=0.0,
        urgency_Q=0.0,
        avg_demand_kappa_bar=1.0,
        availability_rho=1.0,
        unit_cost_c=0.3,
        reserve_price_p_min=1.0,
        rep_threshold_r_min=0.5,
        theta_max=2,
        s_max=2,
        kappa_max=5,
        alignment_epsilon=0.0,
        positive_ratings_Mp=1,
        current_price_p=1.0,
        data_size=5000,
    )
    base.update(overrides)
    return DataOwnerState(**base)


def make_ctx(avg_neighbor_price=1.0, eligible=(), cheapest=None) -> DelegationContext:
    quotes = tuple(DelegateQuote(*q) if not isinstance(q, DelegateQuote) else q for q in eligible)
    if cheapest is None and quotes:
        cheapest = min(q.price for q in quotes)
    return DelegationContext(
        avg_neighbor_price=avg_neighbor_price,
        eligible_delegates=quotes,
        cheapest_eligible_price=cheapest,
    )
