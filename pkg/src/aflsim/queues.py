"""Virtual-queue dynamics, quadratic queue energy, costs, and the per-step objective.

These pure functions are the numerical substrate every decision policy
evaluates: the pending-backlog queue, the urgency queue that accumulates
delay pressure, the energy-drift upper bound that stability arguments rest
on, and the utility / surrogate-objective arithmetic.
"""

from dataclasses import dataclass

from .core import DataOwnerState, StepDecision


@dataclass(frozen=True)
class DriftBoundParts:
    """Decomposed upper bound on the one-step growth of the queue energy."""

    xi: float      # constant term (theta_max + s_max)**2 + kappa_max**2
    q_term: float  # q * (arrivals - theta - s)
    Q_term: float  # Q * (kappa_bar - theta - s)
    bound: float   # xi + q_term + Q_term


def update_pending_queue(q: float, theta: int, s: int, x: int, kappa: int) -> float:
    """Next pending backlog: max(q - theta - s, 0) + x * kappa."""
    return max(q - theta - s, 0.0) + x * kappa


def update_urgency_queue(Q: float, theta: int, s: int, kappa_bar: float, q_is_positive: bool) -> float:
    """Next urgency level: max(Q - theta - s + kappa_bar * [q > 0], 0)."""
    growth = kappa_bar if q_is_positive else 0.0
    return max(Q - theta - s + growth, 0.0)


def average_demand(kappa_history) -> float:
    """Arithmetic mean of the arrival counts observed so far."""
    history = list(kappa_history)
    if not history:
        raise ValueError("kappa_history must be nonempty")
    return sum(history) / len(history)


def lyapunov_value(q: float, Q: float) -> float:
    """Quadratic queue energy (q**2 + Q**2) / 2."""
    return 0.5 * (q * q + Q * Q)


def drift_bound(state: DataOwnerState, decision: StepDecision, arrivals: int) -> DriftBoundParts:
    """Upper bound on the one-step energy drift for the realized arrivals.

    `arrivals` is the realized admission count (acceptance already applied),
    and the urgency term uses the state's running average demand.
    """
    xi = float((state.theta_max + state.s_max) ** 2 + state.kappa_max**2)
    moved = decision.work_theta + decision.subdelegate_s
    q_term = state.pending_q * (arrivals - moved)
    Q_term = state.urgency_Q * (state.avg_demand_kappa_bar - moved)
    return DriftBoundParts(xi=xi, q_term=q_term, Q_term=Q_term, bound=xi + q_term + Q_term)


def subdelegation_cost(avg_neighbor_price: float, s: int) -> float:
    """Cost of handing s tasks to neighbours at their average price."""
    if s == 0:
        return 0.0  # guard: the no-neighbour sentinel price is +inf
    return avg_neighbor_price * s


def training_cost(unit_cost_c: float, theta: int) -> float:
    """Cost of completing theta tasks locally."""
    return unit_cost_c * theta


def utility(
    state: DataOwnerState,
    decision: StepDecision,
    demand_f: float,
    avg_neighbor_price: float,
) -> float:
    """Per-step market utility: x*p*r*f minus sub-delegation and training costs."""
    revenue = decision.accept_x * decision.price_p * state.reputation_r * demand_f
    return (
        revenue
        - subdelegation_cost(avg_neighbor_price, decision.subdelegate_s)
        - training_cost(state.unit_cost_c, decision.work_theta)
    )


def objective_value(
    state: DataOwnerState,
    decision: StepDecision,
    demand_f: float,
    avg_neighbor_price: float,
) -> float:
    """Scalar the closed-form decision rules maximize per step.

    Decomposes into a sub-delegation term, the constant drift headroom, a
    work term, and the joint acceptance/pricing term; each decision variable
    enters linearly except the price, which also scales the demand factor.
    """
    rho = state.availability_rho
    q = state.pending_q
    Q = state.urgency_Q
    xi = float((state.theta_max + state.s_max) ** 2 + state.kappa_max**2)

    if decision.subdelegate_s == 0:
        s_term = 0.0  # guard against the +inf no-neighbour sentinel
    else:
        s_term = decision.subdelegate_s * (rho * avg_neighbor_price - q - Q)
    theta_term = decision.work_theta * (rho * state.unit_cost_c - q - Q)
    x_term = (
        rho * decision.accept_x * decision.price_p * state.reputation_r * demand_f
        - q * decision.accept_x * demand_f
    )
    return -s_term - xi - theta_term + x_term
