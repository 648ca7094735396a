"""Discrete-time simulator of an auction-based federated learning market.

Data owners (DOs) sell model-training effort to model users (MUs) through a
posted-price auction, may pass accepted tasks on to trusted neighbours, and
manage their backlog through a pair of virtual queues.  The package ships the
queue-aware joint pricing / acceptance / sub-delegation policy, six baseline
strategies, the market engine, and a seeded experiment CLI.
"""

__version__ = "0.1.0"
