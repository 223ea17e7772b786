"""Incoherent hopping: golden-rule rates and the classical rate equation.

Populations on the ring are ``p_plus[m]`` (non-decaying site of cell ``m``)
and ``p_minus[m]`` (decaying site).  With rates ``G = rate_v`` and
``Gp = rate_vp``::

    dp+_m/dt = -(G + Gp) p+_m + G p-_m + Gp p-_{m+1}
    dp-_m/dt = -(G + Gp + gamma) p-_m + Gp p+_{m-1} + G p+_m

and the probability that leaves cell ``m`` accumulates as ``gamma p-_m``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .integrate import IntegratorConfig, ObservableSeries, integrate
from .lattice import displacement


class RateError(ValueError):
    pass


@dataclass(frozen=True)
class HoppingRates:
    rate_v: float
    rate_vp: float
    gamma: float

    def __post_init__(self):
        if min(self.rate_v, self.rate_vp, self.gamma) < 0:
            raise RateError("rates must be >= 0")

    @property
    def rate0(self) -> float:
        return self.rate_v + self.rate_vp

    @property
    def rate0p(self) -> float:
        return self.rate0 + self.gamma


def hopping_rates(v: float, v_prime: float, gamma: float, delta: float = 0.0) -> HoppingRates:
    """Rates out of a non-decaying site detuned by ``delta`` from its neighbours.

    ``rate = coupling**2 * gamma / (4 delta**2 + gamma**2)`` for each bond.
    """
    if not gamma > 0:
        raise RateError(f"gamma must be > 0, got {gamma!r}")
    denom = 4.0 * delta * delta + gamma * gamma
    return HoppingRates(v * v * gamma / denom, v_prime * v_prime * gamma / denom, gamma)


def incoherent_displacement(v: float, v_prime: float) -> float:
    """Displacement of a fully incoherent walker, ``v'^2 / (v^2 + v'^2)``.

    Only the first hop counts: later hops between decaying sites are
    left/right symmetric and cancel on average.
    """
    v2, vp2 = v * v, v_prime * v_prime
    if v2 + vp2 == 0:
        raise RateError("v and v_prime cannot both vanish")
    return vp2 / (v2 + vp2)


@dataclass
class RateState:
    p_plus: np.ndarray
    p_minus: np.ndarray
    decayed: np.ndarray

    @classmethod
    def localized(cls, n_cells: int, origin: int = 0) -> "RateState":
        p_plus = np.zeros(n_cells)
        p_plus[origin % n_cells] = 1.0
        return cls(p_plus, np.zeros(n_cells), np.zeros(n_cells))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.p_plus, self.p_minus, self.decayed]).astype(float)

    @classmethod
    def from_vector(cls, y: np.ndarray, n_cells: int) -> "RateState":
        n = n_cells
        return cls(y[:n].copy(), y[n:2 * n].copy(), y[2 * n:3 * n].copy())


def rate_rhs(state: RateState, rates: HoppingRates):
    """Time derivatives ``(dp_plus, dp_minus, d decayed)``."""
    return _rate_terms(state.p_plus, state.p_minus, rates.rate_v, rates.rate_vp, rates.gamma)


def _rate_terms(pp, pm, g_v, g_vp, gamma):
    g0 = g_v + g_vp
    dpp = -g0 * pp + g_v * pm + g_vp * np.roll(pm, -1)
    dpm = -(g0 + gamma) * pm + g_vp * np.roll(pp, 1) + g_v * pp
    return dpp, dpm, gamma * pm


def _system(n, rates_of):
    def rhs(t, y):
        pp, pm = y[:n], y[n:2 * n]
        r = rates_of(pp)
        out = np.empty_like(y)
        out[:n], out[n:2 * n], out[2 * n:] = _rate_terms(pp, pm, r.rate_v, r.rate_vp, r.gamma)
        return out

    return rhs


def _run(rhs, initial: RateState, config, origin):
    n = initial.p_plus.shape[0]

    def survival(y):
        return float(np.sum(y[: 2 * n]))

    traj = integrate(rhs, initial.to_vector(), config, survival)
    s = traj.states
    decayed = s[:, 2 * n:]
    final = RateState.from_vector(traj.y_stop, n)
    return ObservableSeries(
        times=traj.times,
        norm=s[:, :n].sum(axis=1) + s[:, n:2 * n].sum(axis=1),
        rho00=s[:, origin % n].copy(),
        dm_t=displacement(decayed, origin),
        decayed_snapshot=decayed.copy(),
        t_stop=traj.t_stop,
        dm_final=float(displacement(final.decayed, origin)),
        survival=float(final.p_plus.sum() + final.p_minus.sum()),
        final_decayed=final.decayed,
    )


def integrate_rate(
    initial: RateState,
    rates: HoppingRates,
    config: IntegratorConfig = IntegratorConfig(),
    origin: int = 0,
) -> ObservableSeries:
    """Rate equation with constant rates; ``rho00`` is ``p_plus[origin]``."""
    n = initial.p_plus.shape[0]
    return _run(_system(n, lambda pp: rates), initial, config, origin)


def integrate_rate_selfconsistent(
    initial: RateState,
    v: float,
    v_prime: float,
    gamma: float,
    g: float,
    config: IntegratorConfig = IntegratorConfig(),
    origin: int = 0,
    delta_offset: float = 0.0,
) -> ObservableSeries:
    """Rate equation whose detuning follows the central occupation.

    At every stage evaluation the rates are rebuilt from
    ``delta = g * p_plus[origin]``, the mean-field shift of the initial site.
    A static ``delta_offset`` is added on top, so ``g = 0`` reduces to
    :func:`integrate_rate` with ``hopping_rates(..., delta_offset)``.
    """
    if g < 0:
        raise RateError("g must be >= 0")
    n = initial.p_plus.shape[0]
    i0 = origin % n
    return _run(
        _system(n, lambda pp: hopping_rates(v, v_prime, gamma, delta_offset + g * pp[i0])),
        initial, config, origin,
    )


def quasi_static_coherence(rho00, rho11, coupling: float, gamma: float, delta: float):
    """Adiabatic estimate of the coherence between site 0 and a decaying neighbour.

    ``coupling`` is the full bond energy (``v`` or ``v'``); the hop amplitude
    is half of it.  Returns ``(coupling/2) (rho11 - rho00) / (delta + i gamma/2)``.
    """
    if delta == 0 and gamma == 0:
        raise RateError("delta and gamma cannot both vanish")
    return 0.5 * coupling * (np.asarray(rho11) - np.asarray(rho00)) / (delta + 0.5j * gamma)
