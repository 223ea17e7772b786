"""Closed-form solution of the constant-rate equation in quasimomentum space.

With ``q_k = sum_m exp(-i k m) p_m`` the rate equation decouples into 2x2
blocks per ``k`` with the complex coupling ``G_k = G + G' exp(i k)``.  For the
localized start ``q+_k(0) = 1, q-_k(0) = 0``::

    lam_pm = -(G0 + G0')/2 +- sqrt(gamma^2/4 + |G_k|^2)
    q+_k(t) = [(lam+ + G0') e^{lam+ t} - (lam- + G0') e^{lam- t}] / (lam+ - lam-)
    q-_k(t) = conj(G_k) (e^{lam+ t} - e^{lam- t}) / (lam+ - lam-)

On a ring of ``n`` cells the rate matrix is circulant, so sampling ``k`` on
the ``n``-point grid and inverting the discrete transform is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import signed_cells
from .rates import HoppingRates, RateError


@dataclass(frozen=True)
class MomentumSolution:
    k: np.ndarray
    lambda_plus: np.ndarray
    lambda_minus: np.ndarray
    gamma_k: np.ndarray


def _check(rates: HoppingRates):
    if not rates.gamma > 0:
        raise RateError("the closed form needs gamma > 0 (distinct eigenvalues)")


def eigenvalues(k, rates: HoppingRates) -> MomentumSolution:
    _check(rates)
    k = np.asarray(k, dtype=float)
    gk = rates.rate_v + rates.rate_vp * np.exp(1j * k)
    root = np.sqrt(0.25 * rates.gamma ** 2 + np.abs(gk) ** 2)
    mid = -0.5 * (rates.rate0 + rates.rate0p)
    return MomentumSolution(k, mid + root, mid - root, gk)


def momentum_populations(k, t, rates: HoppingRates):
    """``(q+_k(t), q-_k(t))``; ``k`` and ``t`` broadcast against each other."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    sol = eigenvalues(k, rates)
    lp, lm = sol.lambda_plus, sol.lambda_minus
    ep, em = np.exp(lp * t), np.exp(lm * t)
    width = lp - lm
    q_plus = ((lp + rates.rate0p) * ep - (lm + rates.rate0p) * em) / width
    q_minus = np.conj(sol.gamma_k) * (ep - em) / width
    return q_plus + 0j, q_minus


def momentum_decayed(k, t, rates: HoppingRates):
    """Transform of the decayed ledger, ``gamma * int_0^t q-_k(s) ds``."""
    t = np.asarray(t, dtype=float)
    sol = eigenvalues(k, rates)
    lp, lm = sol.lambda_plus, sol.lambda_minus
    # expm1 keeps small-t values accurate
    ip = np.expm1(lp * t) / lp
    im = np.expm1(lm * t) / lm
    return rates.gamma * np.conj(sol.gamma_k) * (ip - im) / (lp - lm)


def q_integral(k, rates: HoppingRates):
    """``Q_k = int_0^inf q-_k dt = conj(G_k) / (G0 G0' - |G_k|^2)``."""
    _check(rates)
    k = np.asarray(k, dtype=float)
    gk = rates.rate_v + rates.rate_vp * np.exp(1j * k)
    denom = rates.rate0 * rates.rate0p - np.abs(gk) ** 2
    if np.any(denom <= 0):
        raise RateError("Q_k denominator is not positive")
    return np.conj(gk) / denom


def analytic_displacement(rates: HoppingRates) -> float:
    """Infinite-lattice displacement ``G' / (G + G')``."""
    if rates.rate0 <= 0:
        raise RateError("G and G' cannot both vanish")
    return rates.rate_vp / rates.rate0


def displacement_from_derivative(rates: HoppingRates, step: float = 1e-5) -> complex:
    """``i gamma dQ_k/dk`` at ``k = 0`` by a central difference.

    Should be real and equal to :func:`analytic_displacement`.
    """
    dq = (q_integral(step, rates) - q_integral(-step, rates)) / (2 * step)
    return complex(1j * rates.gamma * dq)


def brillouin_grid(n_cells: int) -> np.ndarray:
    """``k_j = 2 pi j / n`` folded into ``[-pi, pi)``, in ``j`` order."""
    k = 2 * np.pi * np.arange(n_cells) / n_cells
    return np.where(k >= np.pi, k - 2 * np.pi, k)


def inverse_transform(q: np.ndarray, k: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Cell populations ``p_m = (1/n) sum_j exp(i k_j m) q_j`` for ``m = 0..n-1``.

    ``q`` may carry leading (time) axes; the last axis runs over ``k``.
    Raises if the result is not real to within ``tol`` (the samples were not
    Hermitian-symmetric, ``q(-k) = conj(q(k))``).
    """
    n = k.shape[0]
    m = np.arange(n)
    phase = np.exp(1j * np.outer(k, m))
    p = (np.asarray(q) @ phase) / n
    asym = float(np.max(np.abs(p.imag))) if p.size else 0.0
    if asym > tol:
        raise ValueError(f"inverse transform is not real: max |Im p| = {asym:.3e}")
    return p.real


def ring_populations(times, rates: HoppingRates, n_cells: int):
    """Exact ``(p_plus, p_minus, decayed)`` on the ring, shape ``(n_times, n_cells)``.

    Start: all probability on the non-decaying site of cell 0.
    """
    k = brillouin_grid(n_cells)
    t = np.asarray(times, dtype=float)[:, None]
    q_plus, q_minus = momentum_populations(k[None, :], t, rates)
    q_dec = momentum_decayed(k[None, :], t, rates)
    return (
        inverse_transform(q_plus, k),
        inverse_transform(q_minus, k),
        inverse_transform(q_dec, k),
    )


def ring_displacement(rates: HoppingRates, n_cells: int) -> float:
    """Exact infinite-time displacement on the finite ring (signed labels)."""
    k = brillouin_grid(n_cells)
    final = inverse_transform(rates.gamma * q_integral(k, rates), k)
    return float(final @ signed_cells(n_cells))
