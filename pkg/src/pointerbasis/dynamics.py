"""Time evolution of state functionals and the weak approach to equilibrium.

The evolved functional keeps its energy-diagonal blocks and attaches the
phase ``exp(i (x - x') t)`` to each off-diagonal co-basis coefficient:

    block_c0(t) = block_c0 * exp(i (omega_k - omega0) t)
    block_0c(t) = block_0c * exp(i (omega0 - omega_k) t)
    block_cc(t) = block_cc * exp(i (omega_k - omega_l) t)

For a density operator (coefficients ``conj(<x|rho|x'>)``) this is the
usual ``rho(t) = exp(-iHt) rho exp(iHt)``.

and the mean value reads

    <O>(t) = C + exp(-i omega0 t) sum_k a_k f_k + exp(i omega0 t) sum_k conj(a_k) g_k
             + sum_kl a_k F_kl conj(a_l)

with ``C`` the energy-diagonal part and ``a_k(t)`` the oscillatory weights,
``w_k exp(i omega_k t)`` for the plain rule or the Filon weights of
:func:`filon_weights` when the oscillation is not resolved by the nodes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import spherical_jn

from .spectral_core import (
    ObservableFn,
    SpectrumGrid,
    StateFn,
    dual_pairing,
    require_valid,
)

__all__ = [
    "ResolutionError",
    "DecayScan",
    "evolve_state",
    "equilibrium_state",
    "liouvillian_apply",
    "hamiltonian_commutator",
    "expectation",
    "decoherence_deficit",
    "decay_scan",
    "dyadic_suprema",
    "log_time_grid",
    "filon_weights",
    "plain_weights",
    "resolution_limit",
]


class ResolutionError(ValueError):
    """Plain quadrature cannot resolve ``exp(i omega t)`` on the grid."""


def _phases(grid: SpectrumGrid, t: float):
    w = grid.continuum_nodes
    w0 = grid.omega0
    c0 = np.exp(1j * (w - w0) * t)
    oc = np.exp(1j * (w0 - w) * t)
    cc = np.exp(1j * (w[:, None] - w[None, :]) * t)
    return c0, oc, cc


def evolve_state(rho: StateFn, t: float) -> StateFn:
    """Evolve ``rho`` by time ``t``; energy-diagonal blocks are untouched."""
    if not np.isfinite(t):
        raise ValueError("time must be finite")
    c0, oc, cc = _phases(rho.grid, float(t))
    return rho.replace(
        block_c0=rho.block_c0 * c0[:, None, None],
        block_0c=rho.block_0c * oc[:, None, None],
        block_cc=rho.block_cc * cc[:, :, None, None],
    )


def equilibrium_state(rho: StateFn) -> StateFn:
    """Diagonal asymptotic functional: keep the two energy-diagonal blocks only."""
    return StateFn(rho.grid, rho.qnums, block_d0=rho.block_d0, block_dc=rho.block_dc)


def liouvillian_apply(rho: StateFn) -> StateFn:
    """Time derivative of :func:`evolve_state` at ``t = 0``.

    Satisfies ``(L rho|O) = i (rho|[H, O])`` with ``[H, O]`` from
    :func:`hamiltonian_commutator`.
    """
    w = rho.grid.continuum_nodes
    w0 = rho.grid.omega0
    return StateFn(
        rho.grid, rho.qnums,
        block_c0=1j * (w - w0)[:, None, None] * rho.block_c0,
        block_0c=1j * (w0 - w)[:, None, None] * rho.block_0c,
        block_cc=1j * (w[:, None] - w[None, :])[:, :, None, None] * rho.block_cc,
    )


def hamiltonian_commutator(O: ObservableFn) -> ObservableFn:
    """``[H, O]``: the block at energies ``(x, x')`` is multiplied by ``x - x'``."""
    w = O.grid.continuum_nodes
    w0 = O.grid.omega0
    return ObservableFn(
        O.grid, O.qnums,
        block_c0=(w - w0)[:, None, None] * O.block_c0,
        block_0c=(w0 - w)[:, None, None] * O.block_0c,
        block_cc=(w[:, None] - w[None, :])[:, :, None, None] * O.block_cc,
    )


# -- oscillatory quadrature ---------------------------------------------------

def resolution_limit(grid: SpectrumGrid) -> float:
    """Largest ``|t|`` the plain rule accepts: ``max_spacing * |t| <= pi / 4``."""
    return np.pi / 4.0 / grid.max_spacing()


def required_nodes(grid: SpectrumGrid, t: float) -> int:
    """Node count (same panel layout) that would satisfy the plain-mode rule at ``t``."""
    per_node = grid.max_spacing() * abs(t) / (np.pi / 4.0)
    return int(np.ceil(grid.size * per_node))


def plain_weights(grid: SpectrumGrid, t: float) -> np.ndarray:
    return grid.quad_weights * np.exp(1j * grid.continuum_nodes * t)


def _spherical_jn(n: np.ndarray, kappa: float) -> np.ndarray:
    """``j_n(kappa)`` for ``kappa >= 0``; power series below 1e-8 (scipy returns nan for subnormals)."""
    if kappa >= 1e-8:
        return spherical_jn(n, kappa)
    double_fact = np.cumprod(np.concatenate([[1.0], 2.0 * n[1:] + 1.0]))   # (2n+1)!!
    return kappa ** n / double_fact * (1.0 - kappa ** 2 / (2.0 * (2 * n + 3)))


def filon_weights(grid: SpectrumGrid, t: float) -> np.ndarray:
    """Weights ``a_k`` with ``sum_k a_k f(omega_k) ~= int f(omega) exp(i omega t) d omega``.

    On each panel ``f`` is replaced by its interpolant through the Gauss nodes,
    expanded in Legendre polynomials, and the moments are taken exactly:
    ``int_{-1}^{1} P_n(x) exp(i kappa x) dx = 2 i^n j_n(kappa)``.
    """
    p = grid.panel_order
    x, wref = np.polynomial.legendre.leggauss(p)
    n = np.arange(p)
    legendre = np.polynomial.legendre.legvander(x, p - 1)        # (p nodes, p degrees)
    out = np.empty(grid.size, dtype=complex)
    for a, b, sl in grid.panel_slices():
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        kappa = t * half
        moments = 2.0 * (1j ** n) * np.sign(kappa) ** n * _spherical_jn(n, abs(kappa))
        # coefficient map c_n = (2n+1)/2 sum_j w_j P_n(x_j) f_j
        out[sl] = half * np.exp(1j * mid * t) * (wref * (legendre * ((2 * n + 1) / 2.0 * moments)).sum(axis=1))
    return out


def _profiles(rho: StateFn, O: ObservableFn):
    """Time-independent pieces of the mean value (see module docstring)."""
    eq = dual_pairing(equilibrium_state(rho), O)
    f_c0 = np.einsum("kij,kij->k", rho.block_c0, O.block_c0)
    f_0c = np.einsum("kij,kij->k", rho.block_0c, O.block_0c)
    F_cc = np.einsum("klij,klij->kl", rho.block_cc, O.block_cc)
    return eq, f_c0, f_0c, F_cc


def _oscillatory(profiles, grid: SpectrumGrid, t: float, a: np.ndarray) -> complex:
    _, f_c0, f_0c, F_cc = profiles
    w0 = grid.omega0
    return complex(np.exp(-1j * w0 * t) * (a @ f_c0)
                   + np.exp(1j * w0 * t) * (a.conj() @ f_0c)
                   + a @ F_cc @ a.conj())


def _select_weights(grid: SpectrumGrid, t: float, mode: str) -> np.ndarray:
    if mode not in ("auto", "plain", "filon"):
        raise ValueError(f"unknown quadrature mode {mode!r}")
    resolved = abs(t) <= resolution_limit(grid)
    if mode == "filon" or (mode == "auto" and not resolved):
        return filon_weights(grid, t)
    if not resolved:
        raise ResolutionError(
            f"t={t:g} exceeds the plain-rule limit {resolution_limit(grid):.4g}; "
            f"use about {required_nodes(grid, t)} nodes or mode='filon'"
        )
    return plain_weights(grid, t)


def _check_inputs(rho: StateFn, O: ObservableFn):
    require_valid(rho)
    if not O.is_self_adjoint():
        raise ValueError(f"observable is not self-adjoint (defect {O.hermiticity_defect():.3g})")


def expectation(rho: StateFn, O: ObservableFn, t: float, mode: str = "auto") -> float:
    """Mean value ``<O>`` in the evolved state.

    ``mode="plain"`` uses the grid quadrature (identical to pairing the
    evolved state) and refuses unresolved times; ``"filon"`` always uses the
    Filon weights; ``"auto"`` switches to Filon past the resolution limit.
    """
    _check_inputs(rho, O)
    prof = _profiles(rho, O)
    a = _select_weights(rho.grid, float(t), mode)
    return float((prof[0] + _oscillatory(prof, rho.grid, float(t), a)).real)


def decoherence_deficit(rho: StateFn, O: ObservableFn, t: float, mode: str = "auto",
                        signed: bool = False) -> float:
    """``|<O>(t) - (rho_*|O)|``; with ``signed=True`` the raw difference."""
    _check_inputs(rho, O)
    prof = _profiles(rho, O)
    a = _select_weights(rho.grid, float(t), mode)
    value = (prof[0] + _oscillatory(prof, rho.grid, float(t), a)).real - prof[0].real
    return float(value) if signed else float(abs(value))


@dataclass(frozen=True)
class DecayScan:
    times: np.ndarray
    deficits: np.ndarray
    expectations: np.ndarray
    equilibrium_value: float
    observable_id: str = "O"
    state_id: str = "rho"
    signed: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("scan times must be strictly increasing")


def decay_scan(rho: StateFn, O: ObservableFn, times, mode: str = "auto",
               observable_id: str = "O", state_id: str = "rho") -> DecayScan:
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) <= 0):
        raise ValueError("scan times must be strictly increasing")
    _check_inputs(rho, O)
    prof = _profiles(rho, O)
    eq = float(prof[0].real)
    values = np.array([
        (prof[0] + _oscillatory(prof, rho.grid, t, _select_weights(rho.grid, t, mode))).real
        for t in times
    ])
    signed = values - eq
    return DecayScan(times, np.abs(signed), values, eq, observable_id, state_id, signed)


def log_time_grid(t_min: float, t_max: float, n: int, include_zero: bool = False) -> np.ndarray:
    t = np.geomspace(t_min, t_max, n)
    return np.concatenate([[0.0], t]) if include_zero else t


def dyadic_suprema(rho: StateFn, O: ObservableFn, T: float, levels: int = 3, samples: int = 33,
                   mode: str = "auto") -> np.ndarray:
    """Supremum of the deficit over each dyadic window ``[2^j T, 2^{j+1} T]``."""
    sups = []
    for j in range(levels):
        ts = np.linspace(2.0 ** j * T, 2.0 ** (j + 1) * T, samples)
        sups.append(decay_scan(rho, O, ts, mode=mode).deficits.max())
    return np.array(sups)
