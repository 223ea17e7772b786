"""Bipartite lossy lattice: parameters, states and right-hand sides.

The ring has ``n_cells`` unit cells, each holding a non-decaying site ``a_m``
and a decaying site ``b_m``.  Site ``a_m`` couples to ``b_m`` with ``v`` and to
``b_{m+1}`` with ``v'``; every ``b`` site loses probability at rate ``gamma``.
Units are scaled so that hbar = 1.

Three equivalent descriptions of the same dynamics live here:

* cell form ``(a, b)`` with the discrete nonlinear Schroedinger equation,
* chain form ``c_alpha`` with a single index, ``c_{2m} = a_m`` and
  ``c_{2m-1} = b_m``,
* density-matrix form ``rho_{alpha beta} = conj(c_alpha) c_beta`` (linear only).

Each state can be flattened to a real vector for the integrator.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


class LatticeError(ValueError):
    """Invalid lattice parameters or index."""


@dataclass(frozen=True)
class LatticeParams:
    v: float = 0.25
    v_prime: float = 0.5
    gamma: float = 2.0
    g: float = 0.0
    eps_a: float = 0.0
    eps_b: float = 0.0
    delta_offset: float = 0.0
    n_cells: int = 23

    def __post_init__(self):
        for name in ("v", "v_prime", "gamma"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise LatticeError(f"{name} must be finite and >= 0, got {value!r}")
        for name in ("g", "eps_a", "eps_b", "delta_offset"):
            if not np.isfinite(getattr(self, name)):
                raise LatticeError(f"{name} must be finite")
        if int(self.n_cells) != self.n_cells or self.n_cells < 3:
            raise LatticeError(f"n_cells must be an integer >= 3, got {self.n_cells!r}")

    def with_(self, **changes) -> "LatticeParams":
        return replace(self, **changes)

    @property
    def ratio(self) -> float:
        """Coupling ratio v / (v + v')."""
        return self.v / (self.v + self.v_prime)


@dataclass
class WalkState:
    a: np.ndarray
    b: np.ndarray
    decayed: np.ndarray
    t: float = 0.0

    @property
    def n_cells(self) -> int:
        return self.a.shape[0]

    def to_vector(self) -> np.ndarray:
        return np.concatenate([
            np.asarray(self.a, dtype=complex).view(float),
            np.asarray(self.b, dtype=complex).view(float),
            np.asarray(self.decayed, dtype=float),
        ])

    @classmethod
    def from_vector(cls, y: np.ndarray, n_cells: int, t: float = 0.0) -> "WalkState":
        a, b, decayed = split_walk_vector(y, n_cells)
        return cls(a.copy(), b.copy(), decayed.copy(), t)


@dataclass
class ChainState:
    c: np.ndarray

    def to_vector(self) -> np.ndarray:
        return np.asarray(self.c, dtype=complex).view(float).copy()


@dataclass
class DensityMatrix:
    rho: np.ndarray

    @classmethod
    def pure(cls, c: np.ndarray) -> "DensityMatrix":
        c = np.asarray(c, dtype=complex)
        return cls(np.outer(c.conj(), c))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.rho - self.rho.conj().T)))


def split_walk_vector(y: np.ndarray, n_cells: int):
    """Views ``(a, b, decayed)`` into a flat walk vector (no copies)."""
    n = n_cells
    a = y[: 2 * n].view(complex)
    b = y[2 * n: 4 * n].view(complex)
    decayed = y[4 * n: 5 * n]
    return a, b, decayed


# ---------------------------------------------------------------------------
# index bookkeeping

def map_index(alpha: int, n_cells: int) -> tuple[int, str]:
    """Chain index -> (cell, sublattice).

    >>> map_index(1, 23)
    (1, 'b')
    """
    if not 0 <= alpha < 2 * n_cells:
        raise LatticeError(f"chain index {alpha} outside [0, {2 * n_cells})")
    if alpha % 2 == 0:
        return alpha // 2, "a"
    return ((alpha + 1) // 2) % n_cells, "b"


def unmap_index(m: int, sublattice: str, n_cells: int) -> int:
    """Inverse of :func:`map_index`."""
    if not 0 <= m < n_cells:
        raise LatticeError(f"cell index {m} outside [0, {n_cells})")
    if sublattice == "a":
        return 2 * m
    if sublattice == "b":
        return (2 * m - 1) % (2 * n_cells)
    raise LatticeError(f"unknown sublattice {sublattice!r}")


def walk_to_chain(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    c = np.empty(2 * n, dtype=complex)
    c[0::2] = a
    # c_{2m-1} = b_m, so odd slot 2m+1 carries b_{m+1}
    c[1::2] = np.roll(b, -1)
    return c


def chain_to_walk(c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = c[0::2].copy()
    b = np.roll(c[1::2], 1)
    return a, b


def signed_cells(n_cells: int, origin: int = 0) -> np.ndarray:
    """Displacement label of every cell relative to ``origin``.

    Labels are the representatives of ``(m - origin) mod n`` in
    ``(-n/2, n/2]``.
    """
    d = (np.arange(n_cells) - origin) % n_cells
    return np.where(d > n_cells / 2, d - n_cells, d)


# ---------------------------------------------------------------------------
# initial data and observables

def initial_walk_state(params: LatticeParams, origin: int = 0) -> WalkState:
    """All probability on the non-decaying site of cell ``origin``."""
    n = params.n_cells
    a = np.zeros(n, dtype=complex)
    a[origin % n] = 1.0
    return WalkState(a, np.zeros(n, dtype=complex), np.zeros(n))


def total_norm(state: WalkState) -> float:
    return float(np.sum(np.abs(state.a) ** 2) + np.sum(np.abs(state.b) ** 2))


def displacement(decayed: np.ndarray, origin: int = 0) -> float:
    """Average displacement ``sum_m m P_m`` with signed, unwrapped labels."""
    decayed = np.asarray(decayed)
    m = signed_cells(decayed.shape[-1], origin)
    return decayed @ m


# ---------------------------------------------------------------------------
# right-hand sides

def onsite_a(params: LatticeParams) -> np.ndarray:
    e = np.full(params.n_cells, params.eps_a, dtype=float)
    e[0] += params.delta_offset
    return e


def gpe_rhs(state: WalkState, params: LatticeParams):
    """Time derivatives ``(da, db, d decayed)`` of the lossy nonlinear lattice."""
    return _gpe_terms(state.a, state.b, params, onsite_a(params))


def _gpe_terms(a, b, params, ea):
    v2 = 0.5 * params.v
    vp2 = 0.5 * params.v_prime
    g = params.g
    abs_a = a.real ** 2 + a.imag ** 2
    abs_b = b.real ** 2 + b.imag ** 2
    # b_{m+1} and a_{m-1} on the ring
    b_next = np.roll(b, -1)
    a_prev = np.roll(a, 1)
    ha = (ea + g * abs_a) * a - v2 * b - vp2 * b_next
    hb = (params.eps_b - 0.5j * params.gamma + g * abs_b) * b - v2 * a - vp2 * a_prev
    return -1j * ha, -1j * hb, params.gamma * abs_b


def make_gpe_system(params: LatticeParams):
    """Flat-vector RHS ``f(t, y)`` for :class:`WalkState` vectors."""
    n = params.n_cells
    ea = onsite_a(params)

    def rhs(t, y):
        a, b, _ = split_walk_vector(y, n)
        da, db, dp = _gpe_terms(a, b, params, ea)
        out = np.empty_like(y)
        out[: 2 * n] = da.view(float)
        out[2 * n: 4 * n] = db.view(float)
        out[4 * n:] = dp
        return out

    return rhs


def chain_coefficients(params: LatticeParams):
    """On-site energies ``E``, backward hops ``J`` and forward hops ``J'``.

    ``E`` is complex: decaying (odd) sites carry ``-i gamma / 2``.
    """
    n2 = 2 * params.n_cells
    even = np.arange(n2) % 2 == 0
    energy = np.where(even, params.eps_a + 0j, params.eps_b - 0.5j * params.gamma)
    energy[0] += params.delta_offset
    j_back = np.where(even, 0.5 * params.v, 0.5 * params.v_prime)
    j_fwd = np.where(even, 0.5 * params.v_prime, 0.5 * params.v)
    return energy, j_back, j_fwd


def chain_hamiltonian(params: LatticeParams) -> np.ndarray:
    """Dense non-Hermitian chain matrix ``H`` with ``i dc/dt = H c`` (g = 0)."""
    energy, j_back, j_fwd = chain_coefficients(params)
    n2 = energy.shape[0]
    h = np.diag(energy)
    idx = np.arange(n2)
    h[idx, (idx + 1) % n2] -= j_fwd
    h[idx, (idx - 1) % n2] -= j_back
    return h


def chain_rhs(state: ChainState, params: LatticeParams) -> np.ndarray:
    """``dc/dt`` in the single-index chain form.

    The mean-field term ``g |c_alpha|^2`` is included so the chain form stays
    equivalent to :func:`gpe_rhs` for every ``g``.
    """
    energy, j_back, j_fwd = chain_coefficients(params)
    c = np.asarray(state.c, dtype=complex)
    e = energy + params.g * np.abs(c) ** 2
    return -1j * (-j_fwd * np.roll(c, -1) - j_back * np.roll(c, 1) + e * c)


def rho_rhs(rho: DensityMatrix, params: LatticeParams) -> np.ndarray:
    """``d rho / dt`` for the linear chain, written out bond by bond."""
    if params.g != 0:
        raise LatticeError("density-matrix evolution is only defined for g = 0")
    energy, j_back, j_fwd = chain_coefficients(params)
    r = rho.rho
    col_e = energy[None, :]
    row_e = energy.conj()[:, None]
    out = (col_e - row_e) * r
    # rows alpha+1 / alpha-1
    out += j_fwd[:, None] * np.roll(r, -1, axis=0)
    out += j_back[:, None] * np.roll(r, 1, axis=0)
    # columns beta+1 / beta-1
    out -= j_fwd[None, :] * np.roll(r, -1, axis=1)
    out -= j_back[None, :] * np.roll(r, 1, axis=1)
    return -1j * out


def make_chain_system(params: LatticeParams):
    def rhs(t, y):
        return chain_rhs(ChainState(y.view(complex)), params).view(float)

    return rhs


def make_chain_ledger_system(params: LatticeParams):
    """Chain amplitudes followed by the per-cell decayed ledger.

    Layout: ``2 n`` complex ``c`` (as ``4 n`` reals), then ``n`` reals.
    """
    n = params.n_cells
    gamma = params.gamma

    def rhs(t, y):
        c = y[: 4 * n].view(complex)
        out = np.empty_like(y)
        out[: 4 * n] = chain_rhs(ChainState(c), params).view(float)
        # cell m decays through c_{2m-1}
        b = np.roll(c[1::2], 1)
        out[4 * n:] = gamma * (b.real ** 2 + b.imag ** 2)
        return out

    return rhs


def make_rho_system(params: LatticeParams):
    if params.g != 0:
        raise LatticeError("density-matrix evolution is only defined for g = 0")
    n2 = 2 * params.n_cells

    def rhs(t, y):
        r = y.view(complex).reshape(n2, n2)
        return rho_rhs(DensityMatrix(r), params).reshape(-1).view(float)

    return rhs
