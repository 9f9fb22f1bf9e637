"""Attractive delta well ``H = p^2/2 - g delta(q)`` with analytic eigenfunctions.

One even bound state and a doubly degenerate continuum labelled by parity.
Continuum states are energy-normalized, ``<omega, m|omega', m'> =
delta(omega - omega') delta_mm'``, to match the quadrature-weight convention
of :mod:`pointerbasis.spectral_core`.  With ``k = sqrt(2 omega) / hbar`` and
``kappa = g / hbar^2``:

    psi_0(q)          = sqrt(kappa) exp(-kappa |q|),     omega0 = -g^2 / (2 hbar^2)
    psi_even(omega,q) = A cos(k|q| + delta),             tan(delta) = kappa / k
    psi_odd(omega,q)  = A sin(k q)
    A                 = 1 / (hbar sqrt(pi k))

Momentum-normalized states follow by multiplying with ``sqrt(d omega / dk) =
hbar sqrt(k)`` (``hbar = 1``: ``sqrt(k)``).

The label set is ``((1,), (-1,))`` for even/odd parity.  There is no odd
bound state; its bound eigenfunction is identically zero and states must
carry no weight on it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .spectral_core import QuantumNumbers, SpectrumGrid, make_spectrum_grid

__all__ = ["PhysicalModel", "deltawell_model", "eigenfunction_check", "EigenfunctionReport",
           "project_wavefunction", "gaussian_packet", "wavepacket_amplitudes",
           "PARITY_LABELS"]

PARITY_LABELS = QuantumNumbers(((1,), (-1,)))
NORMALIZATION = "energy-delta: <omega,m|omega',m'> = delta(omega - omega') delta_mm'"


@dataclass(frozen=True)
class PhysicalModel:
    g: float
    hbar: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.g) and self.g > 0):
            raise ValueError(f"coupling must be positive, got {self.g}")
        if not (np.isfinite(self.hbar) and self.hbar > 0):
            raise ValueError(f"hbar must be positive, got {self.hbar}")

    normalization = NORMALIZATION
    qnums = PARITY_LABELS

    @property
    def kappa(self) -> float:
        return self.g / self.hbar ** 2

    @property
    def omega0(self) -> float:
        return -0.5 * self.g ** 2 / self.hbar ** 2

    def wavenumber(self, omega):
        return np.sqrt(2.0 * np.asarray(omega, dtype=float)) / self.hbar

    def phase_shift(self, omega):
        """Even-channel phase shift, ``tan(delta) = kappa / k``."""
        return np.arctan2(self.kappa, self.wavenumber(omega))

    def psi0(self, q):
        q = np.asarray(q, dtype=float)
        return np.sqrt(self.kappa) * np.exp(-self.kappa * np.abs(q))

    def _amplitude(self, k):
        return 1.0 / (self.hbar * np.sqrt(np.pi * k))

    def psi_even(self, omega, q):
        """Array of shape ``omega.shape + q.shape``."""
        k = np.atleast_1d(self.wavenumber(omega))[..., None]
        d = np.atleast_1d(self.phase_shift(omega))[..., None]
        q = np.asarray(q, dtype=float)
        return (self._amplitude(k) * np.cos(k * np.abs(q) + d)).squeeze()

    def psi_odd(self, omega, q):
        k = np.atleast_1d(self.wavenumber(omega))[..., None]
        q = np.asarray(q, dtype=float)
        return (self._amplitude(k) * np.sin(k * q)).squeeze()

    def bound_functions(self, q) -> np.ndarray:
        """``(len(q), M)``; column ``m`` is the bound eigenfunction with label ``m``."""
        q = np.asarray(q, dtype=float)
        out = np.zeros((q.size, 2))
        out[:, 0] = self.psi0(q)
        return out

    def continuum_functions(self, omega, q) -> np.ndarray:
        """``(len(q), K, M)`` eigenfunction table at the nodes ``omega``."""
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        q = np.asarray(q, dtype=float)
        k = self.wavenumber(omega)[None, :]
        d = self.phase_shift(omega)[None, :]
        A = self._amplitude(k)
        qq = q[:, None]
        return np.stack([A * np.cos(k * np.abs(qq) + d), A * np.sin(k * qq)], axis=-1)

    def spectrum_grid(self, omega_max: float, n_panels: int, panel_order: int) -> SpectrumGrid:
        return make_spectrum_grid(self.omega0, omega_max, n_panels, panel_order)

    def potential_symbol(self, q, dq: float | None = None) -> np.ndarray:
        """``V(q) = -g delta(q)`` sampled on a uniform grid of spacing ``dq``.

        The delta becomes the unit-mass hat ``max(0, 1 - |q|/dq) / dq``; without
        ``dq`` only the smooth part (zero) is returned.
        """
        q = np.asarray(q, dtype=float)
        if dq is None:
            return np.zeros_like(q)
        return -self.g * np.clip(1.0 - np.abs(q) / dq, 0.0, None) / dq


def deltawell_model(g: float, hbar: float = 1.0) -> PhysicalModel:
    return PhysicalModel(float(g), float(hbar))


@dataclass(frozen=True)
class EigenfunctionReport:
    bound_residual: float
    continuum_residual: float
    bound_continuum_overlap: float
    parity_overlap: float
    bound_norm: float


def eigenfunction_check(model: PhysicalModel, grid, omegas=None) -> EigenfunctionReport:
    """Finite-difference Schrodinger residuals and orthogonality defects.

    ``grid`` is a phase-space grid (only its ``q_nodes`` are used).  Residuals
    exclude the two cells around the origin; the bound-continuum overlap uses
    Simpson's rule on a half-line grid starting at ``q = 0`` (with the same
    spacing), where the integrands are smooth.
    """
    q = np.asarray(grid.q_nodes, dtype=float)
    h = q[1] - q[0]
    if omegas is None:
        omegas = np.array([0.5, 2.0, 8.0]) * model.g ** 2
    omegas = np.atleast_1d(omegas)
    inner = slice(1, -1)
    away = np.abs(q[inner]) > 2.5 * h
    c = -0.5 * model.hbar ** 2 / h ** 2

    def residual(psi, x):
        lap = c * (psi[2:] - 2 * psi[1:-1] + psi[:-2])
        res = lap - x * psi[1:-1]
        return np.abs(res[away]).max() / np.abs(psi).max()

    psi0 = model.psi0(q)
    bound_res = residual(psi0, model.omega0)
    table = model.continuum_functions(omegas, q)
    cont_res = max(residual(table[:, i, m], omegas[i]) for i in range(omegas.size) for m in range(2))

    n_half = int(np.ceil(q[-1] / h)) + 1
    qh = np.linspace(0.0, (n_half - 1) * h, n_half)
    even = model.continuum_functions(omegas, qh)[:, :, 0]
    overlap = max(abs(2.0 * simpson(model.psi0(qh) * even[:, i], x=qh)) for i in range(omegas.size))
    parity = max(abs(np.sum(table[:, i, 0] * table[:, j, 1]) * h)
                 for i in range(omegas.size) for j in range(omegas.size))
    norm = 2.0 * simpson(model.psi0(qh) ** 2, x=qh)
    return EigenfunctionReport(float(bound_res), float(cont_res), float(overlap), float(parity), float(norm))


def project_wavefunction(model: PhysicalModel, spectrum: SpectrumGrid, psi, q):
    """Spectral amplitudes ``(<omega0,m|psi>, <omega_k,m|psi>)`` of a sampled wavefunction.

    ``psi`` must be negligible at the ends of ``q``; integration is Simpson on ``q``.
    """
    q = np.asarray(q, dtype=float)
    psi = np.asarray(psi, dtype=complex)
    bound = simpson(model.bound_functions(q) * psi[:, None], x=q, axis=0)
    cont = simpson(model.continuum_functions(spectrum.continuum_nodes, q) * psi[:, None, None], x=q, axis=0)
    return bound, cont


def gaussian_packet(q, center: float, momentum: float, width: float, hbar: float = 1.0):
    """Normalized ``exp(-(q - center)^2 / (4 width^2) + i momentum q / hbar)``."""
    q = np.asarray(q, dtype=float)
    amp = (2.0 * np.pi * width ** 2) ** -0.25
    return amp * np.exp(-((q - center) ** 2) / (4.0 * width ** 2) + 1j * momentum * q / hbar)


def wavepacket_amplitudes(model: PhysicalModel, spectrum: SpectrumGrid, position: float, momentum: float,
                          momentum_width: float):
    """Spectral amplitudes of an incoming Gaussian scattering packet.

    Each energy component is the scattering state with the single incoming
    wave ``exp(i s k q)``, ``s = sign(momentum)``:

        phi_even = exp(i delta) g(p) / sqrt(2 |p|),   phi_odd = i s g(p) / sqrt(2 |p|)

    with ``p = s sqrt(2 omega)`` and ``g`` the normalized Gaussian momentum
    amplitude centred at ``momentum`` with spread ``momentum_width``, shifted to
    ``position``.  On the incoming side (``position * momentum < 0``, several
    widths from the origin) the wavefunction equals
    :func:`gaussian_packet` up to a constant phase, with position width
    ``hbar / (2 momentum_width)``.  Returns ``(bound, continuum)``.
    """
    if momentum == 0 or momentum_width <= 0:
        raise ValueError("need nonzero momentum and positive momentum_width")
    s = np.sign(momentum)
    p = s * np.sqrt(2.0 * spectrum.continuum_nodes)
    g = ((2.0 * np.pi * momentum_width ** 2) ** -0.25
         * np.exp(-((p - momentum) ** 2) / (4.0 * momentum_width ** 2) - 1j * p * position / model.hbar))
    amp = g / np.sqrt(2.0 * np.abs(p))
    phi = np.stack([np.exp(1j * model.phase_shift(spectrum.continuum_nodes)) * amp, 1j * s * amp], axis=-1)
    return np.zeros(2, dtype=complex), phi
