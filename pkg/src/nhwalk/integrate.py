"""Adaptive Dormand-Prince 5(4) integration with dense sampling.

The stepper follows Hairer, Norsett & Wanner (Solving ODEs I, DOPRI5):
FSAL stages, a mixed absolute/relative max error norm, a PI step-size
controller and the fourth-order continuous extension for output on an
arbitrary time grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .lattice import (
    LatticeParams,
    WalkState,
    chain_to_walk,
    displacement,
    initial_walk_state,
    make_chain_ledger_system,
    make_gpe_system,
    split_walk_vector,
    walk_to_chain,
)


class IntegrationError(RuntimeError):
    """Raised when the stepper cannot continue; ``t`` is the time reached."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} (t = {t:.6g})")
        self.t = t


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-9
    t_final: float = 400.0
    max_step: float = np.inf
    n_samples: int = 401
    stop_survival: Optional[float] = 1e-6
    max_steps: int = 2_000_000
    # step-size safety factor of the controller; 0.8 keeps the probability
    # balance drift of long self-trapped runs below 1e-8 at 1e-9 tolerances
    safety: float = 0.8

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be > 0")
        if not self.t_final > 0:
            raise ValueError("t_final must be > 0")
        if not self.max_step > 0:
            raise ValueError("max_step must be > 0")
        if int(self.n_samples) != self.n_samples or self.n_samples < 2:
            raise ValueError("n_samples must be an integer >= 2")
        if self.stop_survival is not None and not self.stop_survival > 0:
            raise ValueError("stop_survival must be > 0 or None")
        if not 0 < self.safety < 1:
            raise ValueError("safety must lie in (0, 1)")

    @property
    def sample_times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_final, self.n_samples)


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
# 5th-order weights minus embedded 4th-order weights
_E = np.array([
    71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
])
# continuous extension
_D = np.array([
    -12715105075 / 11282082432, 0.0, 87487479700 / 32700410799,
    -10690763975 / 1880347072, 701980252875 / 199316789632,
    -1453857185 / 822651844, 69997945 / 29380423,
])

_FAC_MIN = 0.2
_FAC_MAX = 10.0
_BETA = 0.04
_EXPO = 0.2 - 0.75 * _BETA


@dataclass
class Trajectory:
    """Raw integrator output: samples on ``times`` plus the stopping state."""
    times: np.ndarray
    states: np.ndarray
    t_stop: float
    y_stop: np.ndarray
    n_steps: int
    n_rejected: int
    stopped_early: bool


def _error_norm(err, y0, y1, rtol, atol):
    sc = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return np.max(np.abs(err) / sc)


def _initial_step(rhs, t0, y0, f0, rtol, atol, h_max):
    sc = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / sc) ** 2))
    d1 = np.sqrt(np.mean((f0 / sc) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, h_max)
    f1 = rhs(t0 + h0, y0 + h0 * f0)
    d2 = np.sqrt(np.mean(((f1 - f0) / sc) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, h_max)


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    config: IntegratorConfig,
    survival: Optional[Callable[[np.ndarray], float]] = None,
) -> Trajectory:
    """Integrate ``dy/dt = rhs(t, y)`` from ``t = 0`` to ``config.t_final``.

    Parameters
    ----------
    rhs
        Pure function of ``(t, y)`` on real vectors.
    y0
        Initial real vector (copied).
    config
        Tolerances, horizon and sampling grid.
    survival
        Optional remaining-probability functional.  When given together with
        ``config.stop_survival`` the run stops at the first accepted step whose
        end state has ``survival(y) < stop_survival``.

    Returns
    -------
    Trajectory
        States sampled on the part of ``config.sample_times`` that was reached,
        plus the state at the stopping time.

    Raises
    ------
    IntegrationError
        On step-size underflow, non-finite values or too many steps.
    """
    y = np.array(y0, dtype=float)
    safety = config.safety
    rtol, atol = config.rel_tol, config.abs_tol
    t_end = float(config.t_final)
    h_max = min(config.max_step, t_end)
    grid = config.sample_times
    out = np.empty((grid.shape[0], y.shape[0]))
    out[0] = y
    i_out = 1

    t = 0.0
    f = rhs(t, y)
    if not np.all(np.isfinite(f)):
        raise IntegrationError("non-finite derivative", t)
    if not np.any(y) and not np.any(f):
        # the zero state is a fixed point
        out[:] = y
        return Trajectory(grid, out, t_end, y, 0, 0, False)

    h = _initial_step(rhs, t, y, f, rtol, atol, h_max)
    fac_old = 1e-4
    k = [f] + [None] * 6
    n_steps = n_rejected = 0
    rejected_last = False
    stopped_early = False

    while t < t_end:
        if n_steps + n_rejected >= config.max_steps:
            raise IntegrationError("maximum number of steps exceeded", t)
        if h < 16 * np.finfo(float).eps * max(abs(t), 1.0):
            raise IntegrationError("step size underflow", t)
        last = t + h >= t_end
        if last:
            h = t_end - t

        for s in range(1, 7):
            dy = _A[s][0] * k[0]
            for j in range(1, s):
                if _A[s][j] != 0.0:
                    dy = dy + _A[s][j] * k[j]
            ys = y + h * dy
            k[s] = rhs(t + _C[s] * h, ys)
        y_new = ys  # stage 7 is evaluated at the 5th-order solution (FSAL)

        err_vec = h * sum(e * ki for e, ki in zip(_E, k) if e != 0.0)
        err = _error_norm(err_vec, y, y_new, rtol, atol)

        if not np.isfinite(err) or not np.all(np.isfinite(y_new)):
            n_rejected += 1
            h *= _FAC_MIN
            rejected_last = True
            if not np.all(np.isfinite(y)):
                raise IntegrationError("non-finite state", t)
            continue

        fac11 = err ** _EXPO
        # PI controller: new step ~ h * err^-expo * err_old^beta
        fac = fac11 / fac_old ** _BETA
        fac = min(1 / _FAC_MIN, max(1 / _FAC_MAX, fac / safety))
        h_new = h / fac

        if err <= 1.0:
            fac_old = max(err, 1e-4)
            n_steps += 1
            t_new = t_end if last else t + h

            # dense output for sample times in (t, t_new]
            if i_out < grid.shape[0] and grid[i_out] <= t_new:
                ydiff = y_new - y
                bspl = h * k[0] - ydiff
                r4 = ydiff - h * k[6] - bspl
                r5 = h * sum(d * ki for d, ki in zip(_D, k) if d != 0.0)
                while i_out < grid.shape[0] and grid[i_out] <= t_new:
                    th = (grid[i_out] - t) / h
                    th1 = 1.0 - th
                    out[i_out] = y + th * (ydiff + th1 * (bspl + th * (r4 + th1 * r5)))
                    i_out += 1

            t, y = t_new, y_new
            k[0] = k[6]
            if rejected_last:
                h_new = min(h_new, h)
            rejected_last = False
            h = min(h_new, h_max)

            if survival is not None and config.stop_survival is not None:
                if survival(y) < config.stop_survival and t < t_end:
                    stopped_early = True
                    break
        else:
            n_rejected += 1
            rejected_last = True
            h = h / min(1 / _FAC_MIN, fac11 / safety)

    return Trajectory(grid[:i_out], out[:i_out], t, y, n_steps, n_rejected, stopped_early)


# ---------------------------------------------------------------------------
# observables

@dataclass
class ObservableSeries:
    """Observables on the sample grid, plus their values at the stopping time.

    ``dm_final`` is ``dm_t`` evaluated at ``t_stop`` and ``survival`` the
    remaining norm there.
    """
    times: np.ndarray
    norm: np.ndarray
    rho00: np.ndarray
    dm_t: np.ndarray
    decayed_snapshot: np.ndarray
    t_stop: float
    dm_final: float
    survival: float
    final_decayed: np.ndarray = field(repr=False, default=None)

    @property
    def balance_error(self) -> float:
        """Largest ``|norm + sum P_m - 1|`` over the sampled times."""
        return float(np.max(np.abs(self.norm + self.decayed_snapshot.sum(axis=1) - 1.0)))


def displacement_series(decayed_snapshot: np.ndarray, origin: int = 0) -> np.ndarray:
    """``dm_t`` for every row of a ``(n_times, n_cells)`` array of ``P_m(t)``."""
    return displacement(decayed_snapshot, origin)


def walk_observables(traj: Trajectory, n_cells: int, origin: int = 0) -> ObservableSeries:
    n = n_cells
    states = traj.states
    a = states[:, : 2 * n].view(complex)
    b = states[:, 2 * n: 4 * n].view(complex)
    decayed = states[:, 4 * n: 5 * n]
    norm = np.sum(np.abs(a) ** 2, axis=1) + np.sum(np.abs(b) ** 2, axis=1)
    rho00 = np.abs(a[:, origin % n]) ** 2

    a_f, b_f, dec_f = split_walk_vector(traj.y_stop, n)
    survival = float(np.sum(np.abs(a_f) ** 2) + np.sum(np.abs(b_f) ** 2))
    return ObservableSeries(
        times=traj.times,
        norm=norm,
        rho00=rho00,
        dm_t=displacement_series(decayed, origin),
        decayed_snapshot=decayed.copy(),
        t_stop=traj.t_stop,
        dm_final=float(displacement(dec_f, origin)),
        survival=survival,
        final_decayed=dec_f.copy(),
    )


def walk_survival(n_cells: int):
    n = n_cells

    def survival(y):
        return float(np.dot(y[: 4 * n], y[: 4 * n]))

    return survival


def evolve_walk(
    params: LatticeParams,
    config: IntegratorConfig = IntegratorConfig(),
    initial: Optional[WalkState] = None,
    origin: int = 0,
):
    """Integrate the lossy lattice from ``initial`` (default: ``a_origin = 1``).

    Returns ``(ObservableSeries, final WalkState)``.
    """
    if initial is None:
        initial = initial_walk_state(params, origin)
    n = params.n_cells
    traj = integrate(make_gpe_system(params), initial.to_vector(), config, walk_survival(n))
    series = walk_observables(traj, n, origin)
    return series, WalkState.from_vector(traj.y_stop, n, traj.t_stop)


def evolve_chain(
    params: LatticeParams,
    config: IntegratorConfig = IntegratorConfig(),
    initial: Optional[WalkState] = None,
    origin: int = 0,
):
    """Same as :func:`evolve_walk` but integrated in the single-index chain form."""
    if initial is None:
        initial = initial_walk_state(params, origin)
    n = params.n_cells
    c0 = walk_to_chain(np.asarray(initial.a, complex), np.asarray(initial.b, complex))
    y0 = np.concatenate([c0.view(float), np.asarray(initial.decayed, float)])
    traj = integrate(make_chain_ledger_system(params), y0, config, walk_survival(n))

    # re-express samples in the cell layout so observables are shared
    def to_walk(y):
        a, b = chain_to_walk(y[: 4 * n].view(complex))
        return np.concatenate([a.view(float), b.view(float), y[4 * n:]])

    walk_traj = Trajectory(
        traj.times,
        np.array([to_walk(y) for y in traj.states]),
        traj.t_stop,
        to_walk(traj.y_stop),
        traj.n_steps,
        traj.n_rejected,
        traj.stopped_early,
    )
    series = walk_observables(walk_traj, n, origin)
    return series, WalkState.from_vector(walk_traj.y_stop, n, traj.t_stop)
