"""Interaction-induced decoherence of a non-Hermitian quantum walk on a lossy bipartite ring."""

from .integrate import IntegrationError, IntegratorConfig, ObservableSeries, evolve_chain, evolve_walk, integrate
from .lattice import LatticeParams, WalkState, initial_walk_state, total_norm
from .momentum import analytic_displacement, q_integral, ring_displacement, ring_populations
from .rates import (
    HoppingRates,
    RateState,
    hopping_rates,
    incoherent_displacement,
    integrate_rate,
    integrate_rate_selfconsistent,
)

__all__ = [
    "HoppingRates",
    "IntegrationError",
    "IntegratorConfig",
    "LatticeParams",
    "ObservableSeries",
    "RateState",
    "WalkState",
    "analytic_displacement",
    "evolve_chain",
    "evolve_walk",
    "hopping_rates",
    "incoherent_displacement",
    "initial_walk_state",
    "integrate",
    "integrate_rate",
    "integrate_rate_selfconsistent",
    "q_integral",
    "ring_displacement",
    "ring_populations",
    "total_norm",
]
