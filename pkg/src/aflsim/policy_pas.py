"""Queue-aware joint decision policy for data owners.

Each step the policy fixes, in order: how many pending tasks to work on, how
many to sub-delegate to trusted neighbours, the unit price to post, and
whether to accept new task offers at all.  Sub-delegation and acceptance are
threshold rules driven by the two virtual queues; the price is the stationary
point of the per-step pricing objective clamped at the reserve price.  The
ordering matters: the sub-delegation rule consumes the work amount and the
acceptance rule consumes the just-set price.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

from .core import DataOwnerState, StepDecision, TrustNetwork
from .demand import R_FLOOR_DEFAULT


class DelegateQuote(NamedTuple):
    do_id: int
    price: float
    reputation: float


@dataclass(frozen=True)
class DelegationContext:
    """Snapshot of the neighbourhood a DO delegates into.

    `avg_neighbor_price` is the mean posted price over *all* neighbours and
    is +inf when the DO has no neighbours, which forces the sub-delegation
    threshold to keep every task local.
    """

    avg_neighbor_price: float
    eligible_delegates: tuple[DelegateQuote, ...]
    cheapest_eligible_price: float | None


def eligible_delegates(
    network: TrustNetwork,
    do_id: int,
    all_states: dict[int, DataOwnerState],
    reference_payment: float,
    r_min: float,
) -> list[DelegateQuote]:
    """Neighbours trusted enough and cheap enough to take a task paying `reference_payment`.

    Sorted by price ascending, ties broken by DO id ascending.
    """
    quotes = []
    for k in network.neighbor_set(do_id):
        state_k = all_states[k]
        if state_k.reputation_r >= r_min and state_k.current_price_p <= reference_payment:
            quotes.append(DelegateQuote(k, state_k.current_price_p, state_k.reputation_r))
    quotes.sort(key=lambda quote: (quote.price, quote.do_id))
    return quotes


def build_delegation_context(
    network: TrustNetwork,
    do_id: int,
    all_states: dict[int, DataOwnerState],
    reference_payment: float | None,
) -> DelegationContext:
    """Assemble the delegation snapshot for one DO.

    `reference_payment` is the most generous payment among the DO's pending
    tasks; None means the queue holds nothing delegable, so no neighbour can
    qualify.
    """
    neighbors = network.neighbor_set(do_id)
    if neighbors:
        avg_price = sum(all_states[k].current_price_p for k in neighbors) / len(neighbors)
    else:
        avg_price = math.inf
    if reference_payment is None:
        quotes: tuple[DelegateQuote, ...] = ()
    else:
        quotes = tuple(
            eligible_delegates(
                network, do_id, all_states, reference_payment, all_states[do_id].rep_threshold_r_min
            )
        )
    cheapest = quotes[0].price if quotes else None
    return DelegationContext(avg_price, quotes, cheapest)


def decide_subdelegation(state: DataOwnerState, ctx: DelegationContext, theta: int) -> int:
    """Threshold rule: keep tasks local while availability-weighted neighbour
    prices outweigh the combined queue pressure; otherwise offload the backlog
    left after this step's work, within the per-step cap."""
    if not ctx.eligible_delegates:
        return 0
    if state.availability_rho * ctx.avg_neighbor_price - state.pending_q - state.urgency_Q >= 0:
        return 0
    return max(0, min(int(math.floor(state.pending_q)) - theta, state.s_max))


def decide_price(state: DataOwnerState, r_floor: float = R_FLOOR_DEFAULT) -> float:
    """Posted unit price: max(reserve, q / (2 * rho * r)).

    With zero availability or reputation below the floor the quotient is
    unbounded, so the rule falls back to the reserve price; callers can
    detect that through `price_is_degenerate`.
    """
    if price_is_degenerate(state, r_floor):
        return state.reserve_price_p_min
    quotient = state.pending_q / (2.0 * state.availability_rho * state.reputation_r)
    return max(state.reserve_price_p_min, quotient)


def price_is_degenerate(state: DataOwnerState, r_floor: float = R_FLOOR_DEFAULT) -> bool:
    return state.availability_rho <= 0.0 or state.reputation_r < r_floor


def decide_acceptance(state: DataOwnerState, price_p: float) -> int:
    """Accept new offers iff the availability-weighted revenue rate strictly
    beats the pending backlog: rho * p * r - q > 0."""
    return 1 if state.availability_rho * price_p * state.reputation_r - state.pending_q > 0 else 0


def decide_work(state: DataOwnerState, mode: str = "greedy") -> int:
    """Work progress for the step.

    "greedy" drains as much backlog as capacity allows; "threshold" only
    works when queue pressure outweighs the availability-weighted unit cost,
    mirroring the sign test the sub-delegation rule uses.
    """
    cap = min(int(math.floor(state.pending_q)), state.theta_max)
    if mode == "greedy":
        return cap
    if mode == "threshold":
        if state.availability_rho * state.unit_cost_c - state.pending_q - state.urgency_Q >= 0:
            return 0
        return cap
    raise ValueError(f"unknown work mode: {mode!r}")


def decide_joint(
    state: DataOwnerState,
    ctx: DelegationContext,
    work_mode: str = "greedy",
    r_floor: float = R_FLOOR_DEFAULT,
) -> StepDecision:
    """Compose work -> sub-delegation -> pricing -> acceptance into one decision."""
    theta = decide_work(state, work_mode)
    s = decide_subdelegation(state, ctx, theta)
    price = decide_price(state, r_floor)
    degenerate = price_is_degenerate(state, r_floor)
    x = decide_acceptance(state, price)
    return StepDecision(
        accept_x=x,
        price_p=price,
        subdelegate_s=s,
        work_theta=theta,
        price_degenerate=degenerate,
    )
