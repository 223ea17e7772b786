"""Scenario presets and parameter sweeps.

Sweeps over the coupling ratio ``r = v / (v + v')`` hold the larger coupling
at 0.5: ``v' = 0.5`` and ``v = 0.5 r / (1 - r)`` below ``r = 1/2``,
``v = 0.5`` and ``v' = 0.5 (1 - r) / r`` above it.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .integrate import IntegrationError, IntegratorConfig, ObservableSeries, evolve_chain, evolve_walk
from .lattice import LatticeError, LatticeParams
from .momentum import ring_displacement
from .rates import RateState, hopping_rates, incoherent_displacement, integrate_rate, integrate_rate_selfconsistent

log = logging.getLogger(__name__)

MODELS = (
    "full_gpe",
    "full_linear_chain",
    "rate",
    "rate_selfconsistent",
    "analytic",
    "incoherent_formula",
)
SWEEP_AXES = ("v", "v_prime", "g", "delta_offset")

FIG2_G = (0.0, 0.2, 0.5, 1.0, 4.0)
FIG3_DELTA = (0.0, 0.05, 0.1, 0.6)
DEFAULT_RATIOS = tuple(float(r) for r in np.round(np.linspace(0.05, 0.95, 21), 12))
HOLD_COUPLING = 0.5

# full-vs-rate dynamics presets; all share v = 0.25, v' = 0.5, gamma = 2
PRESETS = {
    "fig4": LatticeParams(v=0.25, v_prime=0.5, gamma=2.0, g=0.0, delta_offset=0.6),
    "fig5_upper": LatticeParams(v=0.25, v_prime=0.5, gamma=2.0, g=4.0),
    "fig5_lower": LatticeParams(v=0.25, v_prime=0.5, gamma=2.0, g=0.5),
}

# shared grid for full-vs-rate comparisons: no early stop so both series align
DYNAMICS_CONFIG = IntegratorConfig(t_final=400.0, n_samples=801, stop_survival=None)


def couplings_for_ratio(ratio: float, hold: float = HOLD_COUPLING) -> tuple[float, float]:
    if not 0 <= ratio <= 1:
        raise ValueError(f"ratio must lie in [0, 1], got {ratio!r}")
    if ratio < 0.5:
        return hold * ratio / (1 - ratio), hold
    if ratio > 0.5:
        return hold, hold * (1 - ratio) / ratio
    return hold, hold


def is_near_degenerate(ratio: float, width: float = 0.02) -> bool:
    """Points this close to 1/2 converge slowly and carry no acceptance bound."""
    return abs(ratio - 0.5) < width


@dataclass
class SweepSpec:
    base: LatticeParams = field(default_factory=LatticeParams)
    axis: str = "g"
    values: Sequence[float] = FIG2_G
    ratio_grid: Optional[Sequence[float]] = DEFAULT_RATIOS
    models: Sequence[str] = ("full_gpe", "incoherent_formula")
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ValueError(f"unknown sweep axis {self.axis!r}")
        bad = [m for m in self.models if m not in MODELS]
        if bad:
            raise ValueError(f"unknown model(s) {bad}")


@dataclass
class SweepRow:
    ratio: float
    model: str
    g: Optional[float]
    delta: Optional[float]
    dm_final: Optional[float]
    stop_time: Optional[float]
    survival: Optional[float]
    error: str = ""
    series: Optional[ObservableSeries] = field(default=None, repr=False, compare=False)

    @property
    def ok(self) -> bool:
        return not self.error

    @property
    def near_degenerate(self) -> bool:
        return is_near_degenerate(self.ratio)

    def key(self):
        order = MODELS.index(self.model)
        return (order, -1.0 if self.g is None else self.g,
                -1.0 if self.delta is None else self.delta, self.ratio)


@dataclass
class SweepResult:
    rows: list[SweepRow]

    def get(self, model: str, ratio: float, g: Optional[float] = None,
            delta: Optional[float] = None) -> SweepRow:
        for row in self.rows:
            if row.model != model or not math.isclose(row.ratio, ratio, abs_tol=1e-12):
                continue
            if g is not None and (row.g is None or not math.isclose(row.g, g)):
                continue
            if delta is not None and (row.delta is None or not math.isclose(row.delta, delta)):
                continue
            return row
        raise KeyError((model, ratio, g, delta))

    @property
    def n_failed(self) -> int:
        return sum(not r.ok for r in self.rows)


# ---------------------------------------------------------------------------
# single points

def run_model(params: LatticeParams, model: str, config: IntegratorConfig,
              keep_series: bool = False) -> SweepRow:
    """One ``(params, model)`` evaluation; integrator failures become row errors."""
    ratio = params.ratio if params.v + params.v_prime > 0 else float("nan")
    row = SweepRow(ratio, model, params.g, params.delta_offset, None, None, None)
    try:
        if model == "incoherent_formula":
            row.g = row.delta = None
            row.dm_final = incoherent_displacement(params.v, params.v_prime)
            return row
        if model == "analytic":
            rates = hopping_rates(params.v, params.v_prime, params.gamma, params.delta_offset)
            row.dm_final = ring_displacement(rates, params.n_cells)
            row.stop_time, row.survival = math.inf, 0.0
            return row
        series = _evolve(params, model, config)
    except (IntegrationError, LatticeError, ValueError) as exc:
        log.warning("%s at ratio %.4g failed: %s", model, ratio, exc)
        row.error = str(exc)
        return row
    row.dm_final = series.dm_final
    row.stop_time = series.t_stop
    row.survival = series.survival
    if keep_series:
        row.series = series
    return row


def _evolve(params: LatticeParams, model: str, config: IntegratorConfig) -> ObservableSeries:
    n = params.n_cells
    if model == "full_gpe":
        return evolve_walk(params, config)[0]
    if model == "full_linear_chain":
        return evolve_chain(params, config)[0]
    if model == "rate":
        rates = hopping_rates(params.v, params.v_prime, params.gamma, params.delta_offset)
        return integrate_rate(RateState.localized(n), rates, config)
    if model == "rate_selfconsistent":
        return integrate_rate_selfconsistent(
            RateState.localized(n), params.v, params.v_prime, params.gamma, params.g,
            config, delta_offset=params.delta_offset,
        )
    raise ValueError(f"unknown model {model!r}")


# ---------------------------------------------------------------------------
# sweeps

def _jobs(spec: SweepSpec):
    ratios = spec.ratio_grid
    if ratios is None:
        ratios = [None]
    for model in spec.models:
        if model == "incoherent_formula":
            # independent of g and delta: one reference row per ratio
            for r in ratios:
                p = spec.base if r is None else _at_ratio(spec.base, r)
                yield p, model
            continue
        for value in spec.values:
            for r in ratios:
                p = replace(spec.base, **{spec.axis: value})
                if r is not None:
                    p = _at_ratio(p, r)
                yield p, model


def _at_ratio(params: LatticeParams, ratio: float) -> LatticeParams:
    v, vp = couplings_for_ratio(ratio)
    return replace(params, v=v, v_prime=vp)


def _run_job(args):
    params, model, config, keep_series = args
    return run_model(params, model, config, keep_series)


def run_sweep(spec: SweepSpec, jobs: int = 1, keep_series: bool = False) -> SweepResult:
    """Evaluate every (point, model) pair; rows come back sorted."""
    work = [(p, m, spec.integrator, keep_series) for p, m in _jobs(spec)]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_job, work))
    else:
        rows = [_run_job(w) for w in work]
    rows.sort(key=SweepRow.key)
    return SweepResult(rows)


def run_fig2_sweep(
    g_values: Sequence[float] = FIG2_G,
    ratio_grid: Sequence[float] = DEFAULT_RATIOS,
    config: IntegratorConfig = IntegratorConfig(),
    base: Optional[LatticeParams] = None,
    models: Sequence[str] = ("full_gpe", "incoherent_formula"),
    jobs: int = 1,
    keep_series: bool = False,
) -> SweepResult:
    """Displacement versus coupling ratio for several interaction strengths."""
    base = LatticeParams(g=0.0, delta_offset=0.0) if base is None else base
    spec = SweepSpec(base, "g", tuple(g_values), tuple(ratio_grid), tuple(models), config)
    return run_sweep(spec, jobs, keep_series)


def run_fig3_sweep(
    delta_values: Sequence[float] = FIG3_DELTA,
    ratio_grid: Sequence[float] = DEFAULT_RATIOS,
    config: IntegratorConfig = IntegratorConfig(),
    base: Optional[LatticeParams] = None,
    models: Sequence[str] = ("full_gpe", "incoherent_formula"),
    jobs: int = 1,
    keep_series: bool = False,
) -> SweepResult:
    """Same as :func:`run_fig2_sweep` for the linear lattice with a detuned start site."""
    base = LatticeParams(g=0.0) if base is None else replace(base, g=0.0)
    spec = SweepSpec(base, "delta_offset", tuple(delta_values), tuple(ratio_grid),
                     tuple(models), config)
    return run_sweep(spec, jobs, keep_series)


# ---------------------------------------------------------------------------
# full model versus rate model

@dataclass
class DynamicsComparison:
    params: LatticeParams
    full: ObservableSeries
    rate: ObservableSeries

    @property
    def rho00_max_dev(self) -> float:
        return float(np.max(np.abs(self.full.rho00 - self.rate.rho00)))

    @property
    def dm_t_max_dev(self) -> float:
        return float(np.max(np.abs(self.full.dm_t - self.rate.dm_t)))

    @property
    def dm_final_dev(self) -> float:
        return abs(self.full.dm_final - self.rate.dm_final)

    def metrics(self) -> dict:
        return {
            "rho00_max_dev": self.rho00_max_dev,
            "dm_t_max_dev": self.dm_t_max_dev,
            "dm_final_dev": self.dm_final_dev,
            "dm_final_full": self.full.dm_final,
            "dm_final_rate": self.rate.dm_final,
        }


def run_dynamics_comparison(params: LatticeParams,
                            config: IntegratorConfig = DYNAMICS_CONFIG) -> DynamicsComparison:
    """Full lattice against the (self-consistent) rate model on one time grid.

    The rate model sees ``delta = delta_offset + g * p_plus[0](t)``; for
    ``g = 0`` this is the constant-rate equation.
    """
    if config.stop_survival is not None:
        config = replace(config, stop_survival=None)
    full, _ = evolve_walk(params, config)
    rate = integrate_rate_selfconsistent(
        RateState.localized(params.n_cells), params.v, params.v_prime, params.gamma,
        params.g, config, delta_offset=params.delta_offset,
    )
    return DynamicsComparison(params, full, rate)
