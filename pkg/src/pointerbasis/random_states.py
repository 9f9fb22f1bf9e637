"""Seeded random smooth states and observables for property checks.

Profiles are short sums of Gaussians in energy with random complex
coefficients, so every block varies smoothly from node to node.
"""
from __future__ import annotations

import numpy as np

from .spectral_core import ObservableFn, QuantumNumbers, SpectrumGrid, StateFn, density_state, symmetrize

__all__ = ["random_amplitudes", "random_smooth_state", "random_observable", "random_hermitian"]


def _bumps(grid: SpectrumGrid, rng: np.random.Generator, n_bumps: int) -> np.ndarray:
    """``(n_bumps, K)`` Gaussian bumps well inside ``[0, omega_max]``."""
    W = grid.omega_max
    centers = rng.uniform(0.2 * W, 0.6 * W, n_bumps)
    widths = rng.uniform(0.04 * W, 0.08 * W, n_bumps)
    w = grid.continuum_nodes
    return np.exp(-0.5 * ((w[None, :] - centers[:, None]) / widths[:, None]) ** 2)


def _cnormal(rng: np.random.Generator, *shape) -> np.ndarray:
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def random_amplitudes(grid: SpectrumGrid, qnums: QuantumNumbers, rng: np.random.Generator,
                      n_bumps: int = 2, bound: bool = True):
    """Bound amplitudes ``(M,)`` and smooth continuum amplitudes ``(K, M)``."""
    M = qnums.size
    coeff = _cnormal(rng, n_bumps, M)
    phi = np.einsum("jk,jm->km", _bumps(grid, rng, n_bumps), coeff)
    b = _cnormal(rng, M) * (0.3 if bound else 0.0)
    return b, phi


def random_smooth_state(grid: SpectrumGrid, qnums: QuantumNumbers, rng: np.random.Generator,
                        n_pure: int = 2, n_bumps: int = 2, bound: bool = True) -> StateFn:
    """Normalized mixture of ``n_pure`` random smooth pure states."""
    pairs = [random_amplitudes(grid, qnums, rng, n_bumps, bound) for _ in range(n_pure)]
    b = np.stack([p[0] for p in pairs])
    phi = np.stack([p[1] for p in pairs])
    return density_state(grid, qnums, b, phi, mixture=rng.uniform(0.2, 1.0, n_pure))


def random_hermitian(rng: np.random.Generator, M: int) -> np.ndarray:
    A = _cnormal(rng, M, M)
    return 0.5 * (A + A.conj().T)


def random_observable(grid: SpectrumGrid, qnums: QuantumNumbers, rng: np.random.Generator,
                      energy_diagonal: bool = False) -> ObservableFn:
    """Self-adjoint observable with smooth random blocks (bump-shaped in energy)."""
    K, M = grid.size, qnums.size
    f = _bumps(grid, rng, 2).sum(axis=0)
    d0 = random_hermitian(rng, M)
    dc = f[:, None, None] * random_hermitian(rng, M)[None] + random_hermitian(rng, M)[None]
    if energy_diagonal:
        return ObservableFn(grid, qnums, block_d0=d0, block_dc=dc)
    c0 = f[:, None, None] * _cnormal(rng, M, M)[None]
    g = _bumps(grid, rng, 1)[0]
    cc = (f[:, None] * g[None, :])[:, :, None, None] * _cnormal(rng, M, M)[None, None]
    O = ObservableFn(grid, qnums, block_d0=d0, block_dc=dc, block_c0=c0,
                     block_0c=np.zeros_like(c0), block_cc=cc)
    return symmetrize(O)
